use super::trs::trs_solve;
use crate::alphabet::{AptbmBlock, InitialPhase};
use crate::error::invalid;
use crate::{Complex, Result};

/// Fine-stage settings. `tol` and `amp_floor` are relative to `sqrt(P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineConfig {
    pub k_iters: usize,
    pub tol: f64,
    pub amp_floor: f64,
}

impl Default for FineConfig {
    fn default() -> Self {
        Self {
            k_iters: 2,
            tol: 1e-8,
            amp_floor: super::AMP_FLOOR_REL,
        }
    }
}

impl FineConfig {
    pub fn with_iters(k_iters: usize) -> Self {
        Self {
            k_iters,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_iters < 1 {
            return Err(invalid("fine stage needs at least one iteration"));
        }
        if !(self.amp_floor > 0.0) || !(self.tol >= 0.0) {
            return Err(invalid("fine stage amp_floor must be > 0 and tol >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineOutcome {
    pub block: AptbmBlock,
    /// Completed projections.
    pub iterations: usize,
    /// A solve hit the degenerate case and the previous iterate was kept.
    pub degenerate: bool,
}

/// One projection: linearize the phase constraint at the current
/// amplitudes, then solve the real-valued trust-region subproblem.
fn project(c: &AptbmBlock, phase: f64, p: f64, floor: f64) -> Result<AptbmBlock> {
    let rot = Complex::new(0.0, -1.0) * Complex::from_polar(1.0, phase);
    let da = rot / c.a.norm().max(floor);
    let db = rot / c.b.norm().max(floor);
    let w = [c.a.re, c.b.re, c.a.im, c.b.im];
    let u = [da.re, db.re, da.im, db.im];
    let z = trs_solve(&w, &u, p)?.z;
    Ok(AptbmBlock::new(
        Complex::new(z[0], z[2]),
        Complex::new(z[1], z[3]),
    ))
}

/// Runs the fine stage, calling `on_iter(k, block)` after each completed
/// projection `k = 1..`.
pub fn fine_with_trace(
    start: &AptbmBlock,
    phase: InitialPhase,
    p: f64,
    config: &FineConfig,
    mut on_iter: impl FnMut(usize, &AptbmBlock),
) -> FineOutcome {
    let scale = p.sqrt();
    let floor = config.amp_floor * scale;
    let tol = config.tol * scale;
    let mut current = *start;
    for k in 1..=config.k_iters {
        let next = match project(&current, phase.value, p, floor) {
            Ok(next) => next,
            Err(_) => {
                return FineOutcome {
                    block: current,
                    iterations: k - 1,
                    degenerate: true,
                }
            }
        };
        let step = next.dist_sqr(&current).sqrt();
        current = next;
        on_iter(k, &current);
        if step < tol {
            return FineOutcome {
                block: current,
                iterations: k,
                degenerate: false,
            };
        }
    }
    FineOutcome {
        block: current,
        iterations: config.k_iters,
        degenerate: false,
    }
}

/// Iterative projection of a coarse block onto the APTBM constraint set for
/// a given initial phase.
pub fn fine_reconstruct(
    start: &AptbmBlock,
    phase: InitialPhase,
    p: f64,
    config: &FineConfig,
) -> FineOutcome {
    fine_with_trace(start, phase, p, config, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::AptbmAlphabet;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn clean_block_is_a_fixed_point() {
        let alpha = AptbmAlphabet::new(8, 8, 0.4).unwrap();
        for (i, c) in alpha.blocks().iter().enumerate() {
            let phase = alpha.phases()[i / alpha.l()];
            let out = fine_reconstruct(c, phase, 0.4, &FineConfig::with_iters(4));
            assert!(out.block.dist_sqr(c).sqrt() < 1e-10, "block {i}");
            assert!(!out.degenerate);
            assert_eq!(out.iterations, 1);
        }
    }

    #[test]
    fn zero_block_is_degenerate_and_kept() {
        let phase = InitialPhase {
            index: 0,
            value: 0.0,
        };
        let out = fine_reconstruct(&AptbmBlock::ZERO, phase, 1.0, &FineConfig::default());
        assert!(out.degenerate);
        assert_eq!(out.block, AptbmBlock::ZERO);
    }

    #[test]
    fn final_block_satisfies_linearized_constraint() {
        let phase = InitialPhase {
            index: 1,
            value: 0.9,
        };
        let start = AptbmBlock::new(Complex::new(0.5, 0.9), Complex::new(0.1, 0.3));
        let cfg = FineConfig::with_iters(1);
        let out = fine_reconstruct(&start, phase, 1.0, &cfg);
        let rot = Complex::new(0.0, -1.0) * Complex::from_polar(1.0, 0.9);
        let d = [rot / start.a.norm(), rot / start.b.norm()];
        let res = (out.block.a.conj() * d[0] + out.block.b.conj() * d[1]).re;
        assert!(res.abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_iterations() {
        assert!(FineConfig::with_iters(0).validate().is_err());
    }

    proptest! {
        #[test]
        fn output_has_block_power(
            ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0,
            phi in 0.0f64..TAU, p in 0.05f64..4.0, k in 1usize..6
        ) {
            let start = AptbmBlock::new(Complex::new(ar, ai), Complex::new(br, bi));
            prop_assume!(start.power() > 1e-3);
            let out = fine_reconstruct(&start, InitialPhase { index: 0, value: phi }, p, &FineConfig::with_iters(k));
            prop_assume!(!out.degenerate);
            prop_assert!((out.block.power() - p).abs() <= 1e-10 * p);
        }

        /// With the linearization held at the starting amplitudes, a second
        /// projection of the first solution cannot move it further from the start.
        #[test]
        fn projection_is_closest_on_its_circle(
            ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0,
            phi in 0.0f64..TAU, t in 0.0f64..TAU
        ) {
            let start = AptbmBlock::new(Complex::new(ar, ai), Complex::new(br, bi));
            prop_assume!(start.a.norm() > 0.05 && start.b.norm() > 0.05);
            let p = 1.0;
            let z = project(&start, phi, p, 1e-6).unwrap();
            // another feasible point on the same circle
            let rot = Complex::new(0.0, -1.0) * Complex::from_polar(1.0, phi);
            let u = [ (rot / start.a.norm()).re, (rot / start.b.norm()).re,
                      (rot / start.a.norm()).im, (rot / start.b.norm()).im ];
            let basis = super::super::trs::null_space_basis(&u).unwrap();
            let other: [f64; 4] = std::array::from_fn(|i| basis[0][i] * t.cos() + basis[1][i] * t.sin());
            let other = AptbmBlock::new(Complex::new(other[0], other[2]), Complex::new(other[1], other[3]));
            prop_assert!(start.dist_sqr(&z) <= start.dist_sqr(&other) + 1e-12);
        }
    }
}
