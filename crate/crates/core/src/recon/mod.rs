//! Constraint-guided reconstruction of PA-distorted APTBM blocks.
//!
//! Three algorithms share the building blocks in this module:
//!
//! - [`baseline_reconstruct`]: the heuristic prior-work algorithm, with
//!   sigmoid-weighted amplitude recombination and a frame-averaged phase-sum
//!   correction.
//! - [`pc_baseline_reconstruct`]: the same, after AM-PM phase compensation.
//! - [`two_stage_reconstruct`]: per-block coarse reconstruction, a
//!   wrap-free initial-phase estimate, then `K` closed-form trust-region
//!   projections onto the APTBM constraint set.

mod baseline;
mod coarse;
mod fine;
mod trs;

pub use baseline::{baseline_reconstruct, pc_baseline_reconstruct, wrapped_phase_sum};
pub use coarse::{
    coarse_block, coarse_reconstruct, compensate_phase, CoarseConfig, CoarseOutput, PhaseSign,
};
pub use fine::{fine_reconstruct, fine_with_trace, FineConfig, FineOutcome};
pub use trs::{null_space_basis, trs_solve, TrsSolution};

use std::f64::consts::{PI, TAU};

use crate::alphabet::{AptbmBlock, InitialPhase};
use crate::{Error, Result};

/// Reconstructed blocks plus diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReconResult {
    pub blocks: Vec<AptbmBlock>,
    /// Per-block initial-phase estimates (two-stage only).
    pub phase_estimates: Option<Vec<InitialPhase>>,
    /// Mean squared block error after the coarse stage and after each fine
    /// iteration; present when ground truth was supplied.
    pub trace: Option<Vec<f64>>,
    /// Frame-level phase-shift estimate (baseline variants only).
    pub phase_shift: Option<f64>,
    /// Blocks where an amplitude clamp or a degenerate solve occurred.
    pub flagged: usize,
}

/// Amplitude floor relative to `sqrt(P)`.
pub const AMP_FLOOR_REL: f64 = 1e-6;

/// Amplitude recombination weight `1 / (1 + exp(mu tan(pi pd / 2)))`.
pub fn xi(pd: f64, mu: f64) -> f64 {
    1.0 / (1.0 + (mu * (0.5 * PI * pd).tan()).exp())
}

/// Intra-block power imbalance `(|a|^2 - |b|^2) / (|a|^2 + |b|^2)`.
pub fn power_difference(amp_a: f64, amp_b: f64) -> f64 {
    let (pa, pb) = (amp_a * amp_a, amp_b * amp_b);
    (pa - pb) / (pa + pb)
}

/// Mixes each received amplitude with the one implied by the power
/// constraint. Returns the amplitudes and whether `P - r^2` had to be
/// clamped at zero.
pub(crate) fn recombine_amplitudes(
    amp_a: f64,
    amp_b: f64,
    p: f64,
    weight: f64,
) -> (f64, f64, bool) {
    let rest_a = p - amp_b * amp_b;
    let rest_b = p - amp_a * amp_a;
    let clamped = rest_a < 0.0 || rest_b < 0.0;
    let new_a = weight * amp_a + (1.0 - weight) * rest_a.max(0.0).sqrt();
    let new_b = weight * rest_b.max(0.0).sqrt() + (1.0 - weight) * amp_b;
    (new_a, new_b, clamped)
}

/// Nearest alphabet phase by angular distance; ties go to the lower index.
pub fn quantize_phase(raw: f64, phases: &[InitialPhase]) -> InitialPhase {
    let mut best = phases[0];
    let mut best_d = f64::INFINITY;
    for &ph in phases {
        let d = (raw - ph.value).rem_euclid(TAU);
        let d = d.min(TAU - d);
        if d < best_d {
            best_d = d;
            best = ph;
        }
    }
    best
}

fn unit(z: crate::Complex) -> crate::Complex {
    let n = z.norm();
    if n == 0.0 {
        z
    } else {
        z / n
    }
}

/// Initial-phase estimate from the bisector of the two unit-normalized
/// symbols, quantized to the alphabet.
pub fn estimate_initial_phase(block: &AptbmBlock, phases: &[InitialPhase]) -> Result<InitialPhase> {
    let sum = unit(block.a) + unit(block.b);
    if sum.norm() < 1e-9 {
        return Err(Error::DegenerateEstimate);
    }
    Ok(quantize_phase(sum.arg(), phases))
}

/// [`estimate_initial_phase`] falling back to the circular mean of `arg a`
/// and `arg b + pi` for antipodal symbols. The flag marks the fallback.
pub fn estimate_initial_phase_or_fallback(
    block: &AptbmBlock,
    phases: &[InitialPhase],
) -> (InitialPhase, bool) {
    match estimate_initial_phase(block, phases) {
        Ok(ph) => (ph, false),
        Err(_) => {
            let alt = unit(block.a) - unit(block.b);
            (quantize_phase(alt.arg(), phases), true)
        }
    }
}

/// Two-stage reconstruction: coarse stage, initial-phase estimation and the
/// iterative fine stage, block by block.
pub fn two_stage_reconstruct(
    blocks: &[AptbmBlock],
    p: f64,
    coarse: &CoarseConfig,
    fine: &FineConfig,
    phases: &[InitialPhase],
    truth: Option<&[AptbmBlock]>,
) -> Result<ReconResult> {
    fine.validate()?;
    if phases.is_empty() {
        return Err(crate::error::invalid("empty phase alphabet"));
    }
    if let Some(t) = truth {
        if t.len() != blocks.len() {
            return Err(crate::error::invalid(
                "ground truth length differs from input",
            ));
        }
    }
    let comp = coarse.compensation_angle();
    let k = fine.k_iters;
    let mut sq_err = truth.map(|_| vec![0.0; k + 1]);
    let mut out = Vec::with_capacity(blocks.len());
    let mut estimates = Vec::with_capacity(blocks.len());
    let mut flagged = 0;

    for (n, c) in blocks.iter().enumerate() {
        let (rough, clamped) = coarse_block(c, p, comp, coarse.phase_sign);
        let (phase, fallback) = estimate_initial_phase_or_fallback(&rough, phases);
        let outcome = match (&mut sq_err, truth) {
            (Some(acc), Some(t)) => {
                let target = &t[n];
                acc[0] += rough.dist_sqr(target);
                let mut last = rough;
                let mut it = 0;
                let outcome = fine_with_trace(&rough, phase, p, fine, |i, blk| {
                    acc[i] += blk.dist_sqr(target);
                    last = *blk;
                    it = i;
                });
                // early stop: later iterations keep the converged block
                for slot in acc.iter_mut().skip(it + 1) {
                    *slot += last.dist_sqr(target);
                }
                outcome
            }
            _ => fine_reconstruct(&rough, phase, p, fine),
        };
        if clamped || fallback || outcome.degenerate {
            flagged += 1;
        }
        out.push(outcome.block);
        estimates.push(phase);
    }

    let n = blocks.len().max(1) as f64;
    Ok(ReconResult {
        blocks: out,
        phase_estimates: Some(estimates),
        trace: sq_err.map(|v| v.into_iter().map(|s| s / n).collect()),
        phase_shift: None,
        flagged,
    })
}

/// Mean squared block error.
pub fn block_mse(est: &[AptbmBlock], truth: &[AptbmBlock]) -> f64 {
    est.iter()
        .zip(truth)
        .map(|(x, y)| x.dist_sqr(y))
        .sum::<f64>()
        / est.len().max(1) as f64
}
