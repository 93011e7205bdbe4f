use serde::{Deserialize, Serialize};

use super::{power_difference, recombine_amplitudes, xi, AMP_FLOOR_REL};
use crate::alphabet::AptbmBlock;
use crate::pa::AmPmTable;
use crate::{Complex, Result};

/// How the compensated phase is recombined with the amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseSign {
    /// `amplitude * e^{+j psi}`: removes the AM-PM shift.
    #[default]
    Plus,
    /// `amplitude * e^{-j psi}`: the literal conjugating form, kept for
    /// comparison experiments.
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseConfig {
    pub ampm_table: AmPmTable,
    /// Average PA input power the compensation angle is looked up at.
    pub avg_input_power_dbm: f64,
    pub phase_sign: PhaseSign,
}

impl CoarseConfig {
    pub fn new(ampm_table: AmPmTable, avg_input_power_dbm: f64) -> Self {
        Self {
            ampm_table,
            avg_input_power_dbm,
            phase_sign: PhaseSign::Plus,
        }
    }

    pub fn compensation_angle(&self) -> f64 {
        self.ampm_table.lookup(self.avg_input_power_dbm)
    }
}

fn with_phase(amp: f64, psi: f64, sign: PhaseSign) -> Complex {
    match sign {
        PhaseSign::Plus => Complex::from_polar(amp, psi),
        PhaseSign::Minus => Complex::from_polar(amp, -psi),
    }
}

/// Removes a common AM-PM angle from both symbols, amplitudes untouched.
pub fn compensate_phase(c: &AptbmBlock, angle: f64, sign: PhaseSign) -> AptbmBlock {
    AptbmBlock::new(
        with_phase(c.a.norm(), c.a.arg() - angle, sign),
        with_phase(c.b.norm(), c.b.arg() - angle, sign),
    )
}

/// Coarse reconstruction of one block. The flag reports a clamped
/// `P - |.|^2` term.
pub fn coarse_block(c: &AptbmBlock, p: f64, angle: f64, sign: PhaseSign) -> (AptbmBlock, bool) {
    let floor = AMP_FLOOR_REL * p.sqrt();
    let (ra, rb) = (c.a.norm(), c.b.norm());
    let w = xi(power_difference(ra.max(floor), rb.max(floor)), 1.0);
    let (amp_a, amp_b, clamped) = recombine_amplitudes(ra, rb, p, w);
    let out = AptbmBlock::new(
        with_phase(amp_a, c.a.arg() - angle, sign),
        with_phase(amp_b, c.b.arg() - angle, sign),
    );
    (out, clamped)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseOutput {
    pub blocks: Vec<AptbmBlock>,
    /// Per block: whether an amplitude term was clamped at zero.
    pub clamped: Vec<bool>,
}

/// AM-PM phase compensation followed by sigmoid-weighted amplitude
/// recombination, block by block.
pub fn coarse_reconstruct(
    blocks: &[AptbmBlock],
    p: f64,
    config: &CoarseConfig,
) -> Result<CoarseOutput> {
    if blocks.is_empty() {
        return Err(crate::error::invalid("no blocks to reconstruct"));
    }
    let angle = config.compensation_angle();
    let (blocks, clamped) = blocks
        .iter()
        .map(|c| coarse_block(c, p, angle, config.phase_sign))
        .unzip();
    Ok(CoarseOutput { blocks, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::AptbmAlphabet;

    #[test]
    fn identity_for_clean_blocks_without_ampm() {
        let alpha = AptbmAlphabet::new(4, 4, 0.3).unwrap();
        let cfg = CoarseConfig::new(AmPmTable::constant(0.0), -8.0);
        let out = coarse_reconstruct(alpha.blocks(), 0.3, &cfg).unwrap();
        for (x, y) in out.blocks.iter().zip(alpha.blocks()) {
            assert!(x.dist_sqr(y).sqrt() < 1e-10);
        }
        assert!(out.clamped.iter().all(|c| !c));
    }

    #[test]
    fn pure_rotation_is_cancelled() {
        let alpha = AptbmAlphabet::new(8, 4, 1.0).unwrap();
        let delta = 0.37;
        let rotated: Vec<_> = alpha.blocks().iter().map(|c| c.rotate(delta)).collect();
        let cfg = CoarseConfig::new(AmPmTable::constant(delta), 0.0);
        let out = coarse_reconstruct(&rotated, 1.0, &cfg).unwrap();
        for (x, y) in out.blocks.iter().zip(alpha.blocks()) {
            assert!(x.dist_sqr(y).sqrt() < 1e-10);
        }
    }

    #[test]
    fn minus_sign_conjugates() {
        let c = AptbmBlock::new(
            Complex::from_polar(0.6, 0.4),
            Complex::from_polar(0.8, -0.2),
        );
        let plus = compensate_phase(&c, 0.1, PhaseSign::Plus);
        let minus = compensate_phase(&c, 0.1, PhaseSign::Minus);
        assert!((plus.a.conj() - minus.a).norm() < 1e-15);
        assert!((plus.b.conj() - minus.b).norm() < 1e-15);
    }

    #[test]
    fn overdriven_symbol_is_clamped_and_flagged() {
        let c = AptbmBlock::new(Complex::new(1.5, 0.0), Complex::new(0.1, 0.0));
        let (out, clamped) = coarse_block(&c, 1.0, 0.0, PhaseSign::Plus);
        assert!(clamped);
        assert!(out.a.norm().is_finite() && out.b.norm().is_finite());
        // The weaker symbol dominates: b keeps nearly all of its received amplitude.
        assert!((out.b.norm() - 0.1).abs() < 0.05);
    }

    #[test]
    fn empty_input_rejected() {
        let cfg = CoarseConfig::new(AmPmTable::constant(0.0), 0.0);
        assert!(coarse_reconstruct(&[], 1.0, &cfg).is_err());
    }
}
