use std::f64::consts::{PI, TAU};

use super::coarse::{compensate_phase, CoarseConfig};
use super::{power_difference, recombine_amplitudes, xi, ReconResult, AMP_FLOOR_REL};
use crate::alphabet::{wrap_pi, AptbmBlock};
use crate::error::invalid;
use crate::{Complex, Result};

/// Phase sum `arg a + arg b` of one block as the baseline sees it.
///
/// The sum is twice the block's mid-phase, wrapped into the interval
/// `[-pi/M, 2 pi - pi/M)` centred on the phase grid. Clean blocks give
/// exactly `2 phi`; a block pushed past a wrap boundary jumps by `4 pi`,
/// which is what makes frame averaging fragile.
pub fn wrapped_phase_sum(c: &AptbmBlock, m: usize) -> f64 {
    let (pa, pb) = (c.a.arg(), c.b.arg());
    let mid = pa + 0.5 * wrap_pi(pb - pa);
    let half_step = PI / m as f64;
    2.0 * ((mid + half_step).rem_euclid(TAU) - half_step)
}

/// Heuristic baseline reconstruction over one frame of blocks.
///
/// Amplitudes are recombined per block with weight `xi(P_d, mu)`. The
/// common phase shift is the frame mean of the block phase sums minus its
/// theoretical value `2 pi (M - 1) / M`, and is split between the two
/// symbols with weights `3/4 - xi/2` and `1/4 + xi/2`.
pub fn baseline_reconstruct(
    blocks: &[AptbmBlock],
    p: f64,
    mu: f64,
    m: usize,
) -> Result<ReconResult> {
    if blocks.is_empty() {
        return Err(invalid("no blocks to reconstruct"));
    }
    if !(mu > 0.0) || !(p > 0.0) || m == 0 {
        return Err(invalid(format!(
            "bad baseline parameters: p {p}, mu {mu}, m {m}"
        )));
    }
    let floor = AMP_FLOOR_REL * p.sqrt();
    let mean_sum =
        blocks.iter().map(|c| wrapped_phase_sum(c, m)).sum::<f64>() / blocks.len() as f64;
    let shift = mean_sum - TAU * (m as f64 - 1.0) / m as f64;

    let mut flagged = 0;
    let out = blocks
        .iter()
        .map(|c| {
            let (ra, rb) = (c.a.norm(), c.b.norm());
            let w = xi(power_difference(ra.max(floor), rb.max(floor)), mu);
            let (amp_a, amp_b, clamped) = recombine_amplitudes(ra, rb, p, w);
            flagged += usize::from(clamped);
            AptbmBlock::new(
                Complex::from_polar(amp_a, c.a.arg() - (0.75 - 0.5 * w) * shift),
                Complex::from_polar(amp_b, c.b.arg() - (0.25 + 0.5 * w) * shift),
            )
        })
        .collect();

    Ok(ReconResult {
        blocks: out,
        phase_estimates: None,
        trace: None,
        phase_shift: Some(shift),
        flagged,
    })
}

/// The baseline applied after the same AM-PM phase compensation the coarse
/// stage uses.
pub fn pc_baseline_reconstruct(
    blocks: &[AptbmBlock],
    p: f64,
    coarse: &CoarseConfig,
    mu: f64,
    m: usize,
) -> Result<ReconResult> {
    let angle = coarse.compensation_angle();
    let compensated: Vec<AptbmBlock> = blocks
        .iter()
        .map(|c| compensate_phase(c, angle, coarse.phase_sign))
        .collect();
    baseline_reconstruct(&compensated, p, mu, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::AptbmAlphabet;
    use crate::pa::AmPmTable;

    fn balanced(alpha: &AptbmAlphabet, n: usize) -> Vec<AptbmBlock> {
        alpha.blocks().iter().cycle().take(n).copied().collect()
    }

    #[test]
    fn clean_phase_sums_are_exact() {
        for m in [2usize, 4, 8, 16] {
            let alpha = AptbmAlphabet::new(m, 8, 1.0).unwrap();
            for (i, c) in alpha.blocks().iter().enumerate() {
                let phi = alpha.phases()[i / alpha.l()].value;
                assert!((wrapped_phase_sum(c, m) - 2.0 * phi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn loopback_is_transparent() {
        let alpha = AptbmAlphabet::new(4, 4, 0.1).unwrap();
        let blocks = balanced(&alpha, 10_000);
        let r = baseline_reconstruct(&blocks, 0.1, 1.0, 4).unwrap();
        assert!(r.phase_shift.unwrap().abs() < 1e-3);
        for (x, y) in r.blocks.iter().zip(&blocks) {
            assert!(x.dist_sqr(y).sqrt() < 1e-6);
        }
    }

    #[test]
    fn common_rotation_is_estimated() {
        let alpha = AptbmAlphabet::new(8, 4, 1.0).unwrap();
        let blocks: Vec<_> = balanced(&alpha, 3200)
            .iter()
            .map(|c| c.rotate(0.1))
            .collect();
        let r = baseline_reconstruct(&blocks, 1.0, 1.0, 8).unwrap();
        assert!((r.phase_shift.unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn rotation_past_wrap_boundary_breaks_the_mean() {
        let alpha = AptbmAlphabet::new(8, 4, 1.0).unwrap();
        // pi/8 is the boundary for M = 8; go slightly beyond it.
        let blocks: Vec<_> = balanced(&alpha, 3200)
            .iter()
            .map(|c| c.rotate(0.45))
            .collect();
        let r = baseline_reconstruct(&blocks, 1.0, 1.0, 8).unwrap();
        assert!((r.phase_shift.unwrap() - 0.9).abs() > 0.5);
    }

    #[test]
    fn zero_ampm_pc_matches_plain_baseline() {
        let alpha = AptbmAlphabet::new(4, 4, 0.5).unwrap();
        let blocks: Vec<_> = balanced(&alpha, 64)
            .iter()
            .enumerate()
            .map(|(i, c)| AptbmBlock::new(c.a * 0.9, c.b + Complex::from_polar(0.01, i as f64)))
            .collect();
        let coarse = CoarseConfig::new(AmPmTable::constant(0.0), -10.0);
        let a = baseline_reconstruct(&blocks, 0.5, 1.0, 4).unwrap();
        let b = pc_baseline_reconstruct(&blocks, 0.5, &coarse, 1.0, 4).unwrap();
        for (x, y) in a.blocks.iter().zip(&b.blocks) {
            assert!(x.dist_sqr(y) < 1e-24);
        }
    }

    #[test]
    fn zero_amplitude_symbol_is_floored() {
        let blocks = vec![AptbmBlock::new(Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)); 4];
        let r = baseline_reconstruct(&blocks, 1.0, 1.0, 4).unwrap();
        assert!(r
            .blocks
            .iter()
            .all(|c| c.a.norm().is_finite() && c.b.norm().is_finite()));
    }

    #[test]
    fn rejects_bad_parameters() {
        let blocks = vec![AptbmBlock::new(
            Complex::new(1.0, 0.0),
            Complex::new(1.0, 0.0),
        )];
        assert!(baseline_reconstruct(&[], 1.0, 1.0, 4).is_err());
        assert!(baseline_reconstruct(&blocks, 1.0, 0.0, 4).is_err());
    }
}
