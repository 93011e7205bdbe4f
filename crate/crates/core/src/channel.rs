//! AWGN and symbol-spaced FIR channels, and block-level equalization.
//!
//! SNR is referenced at symbol level after the matched filter: per-sample
//! noise variance is `sps * P_ref / 10^(snr/10)`, and the matched filter
//! divides noise power by `sps`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::alphabet::AptbmBlock;
use crate::error::invalid;
use crate::{Complex, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub enum ChannelMode {
    #[default]
    Awgn,
    /// Symbol-spaced taps `h_0, h_1, ...`; `h_0` must dominate so the
    /// zero-forcing inverse is stable.
    Fir(Vec<Complex>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqualizerMode {
    /// Divide by the known end-to-end small-signal gain.
    #[default]
    KnownGain,
    /// Normalize the mean block power to `P`.
    BlindAvgPower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub mode: ChannelMode,
    pub equalizer: EqualizerMode,
}

impl ChannelConfig {
    pub fn awgn(snr_db: f64) -> Self {
        Self {
            snr_db,
            mode: ChannelMode::Awgn,
            equalizer: EqualizerMode::KnownGain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db is NaN"));
        }
        if let ChannelMode::Fir(taps) = &self.mode {
            if taps.is_empty() {
                return Err(invalid("fir channel needs at least one tap"));
            }
            if dc_gain(taps).norm() == 0.0 {
                return Err(invalid("fir channel has zero DC gain"));
            }
        }
        Ok(())
    }

    /// Sum of the channel taps (1 for AWGN).
    pub fn dc_gain(&self) -> Complex {
        match &self.mode {
            ChannelMode::Awgn => Complex::new(1.0, 0.0),
            ChannelMode::Fir(taps) => dc_gain(taps),
        }
    }
}

fn dc_gain(taps: &[Complex]) -> Complex {
    taps.iter().sum()
}

/// Noise variance per sample for a target symbol-level SNR.
pub fn noise_variance(snr_db: f64, ref_symbol_power: f64, sps: usize) -> f64 {
    sps as f64 * ref_symbol_power / 10f64.powf(snr_db / 10.0)
}

/// Adds circular Gaussian noise drawn from a fresh seeded generator.
pub fn add_awgn(
    samples: &[Complex],
    snr_db: f64,
    ref_symbol_power: f64,
    sps: usize,
    seed: u64,
) -> Result<Vec<Complex>> {
    let mut out = samples.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn_in_place(&mut out, snr_db, ref_symbol_power, sps, &mut rng)?;
    Ok(out)
}

/// In-place variant drawing from the caller's generator. `snr_db = +inf`
/// leaves the samples untouched.
pub fn add_awgn_in_place<R: Rng + ?Sized>(
    samples: &mut [Complex],
    snr_db: f64,
    ref_symbol_power: f64,
    sps: usize,
    rng: &mut R,
) -> Result<()> {
    if !(ref_symbol_power > 0.0) {
        return Err(invalid(format!(
            "reference power must be positive, got {ref_symbol_power}"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok(());
    }
    let sigma = (noise_variance(snr_db, ref_symbol_power, sps) / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex::new(re, im) * sigma;
    }
    Ok(())
}

/// Passes a waveform through the channel taps, spaced one symbol apart.
pub fn apply_channel(samples: &[Complex], mode: &ChannelMode, sps: usize) -> Vec<Complex> {
    match mode {
        ChannelMode::Awgn => samples.to_vec(),
        ChannelMode::Fir(taps) => {
            let mut out = vec![Complex::new(0.0, 0.0); samples.len()];
            for (m, &h) in taps.iter().enumerate() {
                let shift = m * sps;
                if shift >= samples.len() {
                    break;
                }
                for (o, &x) in out[shift..].iter_mut().zip(samples) {
                    *o += h * x;
                }
            }
            out
        }
    }
}

/// Zero-forcing inverse of DC-normalized symbol-spaced taps over the
/// serialized symbol stream.
fn zero_force(blocks: &[AptbmBlock], taps: &[Complex]) -> Vec<AptbmBlock> {
    let g = dc_gain(taps);
    let h: Vec<Complex> = taps.iter().map(|&t| t / g).collect();
    let symbols: Vec<Complex> = blocks.iter().flat_map(|c| [c.a, c.b]).collect();
    let mut y = Vec::with_capacity(symbols.len());
    for (i, &r) in symbols.iter().enumerate() {
        let mut acc = r;
        for (m, &hm) in h.iter().enumerate().skip(1) {
            if m > i {
                break;
            }
            acc -= hm * y[i - m];
        }
        y.push(acc / h[0]);
    }
    y.chunks_exact(2)
        .map(|p| AptbmBlock::new(p[0], p[1]))
        .collect()
}

/// Post-matched-filter equalization.
///
/// Known-gain mode divides by `known_gain` (small-signal PA gain times the
/// channel DC gain); FIR channels are first inverted up to their DC gain.
/// Blind mode rescales so the mean block power equals `target_power`.
pub fn equalize(
    blocks: &[AptbmBlock],
    config: &ChannelConfig,
    known_gain: Complex,
    target_power: f64,
) -> Result<Vec<AptbmBlock>> {
    let mut out = match &config.mode {
        ChannelMode::Awgn => blocks.to_vec(),
        ChannelMode::Fir(taps) => {
            config.validate()?;
            zero_force(blocks, taps)
        }
    };
    match config.equalizer {
        EqualizerMode::KnownGain => {
            if known_gain.norm() == 0.0 {
                return Err(invalid("equalizer gain is zero"));
            }
            let inv = known_gain.inv();
            for c in &mut out {
                c.a *= inv;
                c.b *= inv;
            }
        }
        EqualizerMode::BlindAvgPower => {
            if out.is_empty() {
                return Ok(out);
            }
            let mean = out.iter().map(AptbmBlock::power).sum::<f64>() / out.len() as f64;
            if !(mean > 0.0) {
                return Err(invalid("blind equalizer input has zero power"));
            }
            let k = (target_power / mean).sqrt();
            for c in &mut out {
                *c = c.scale(k);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{matched_filter, rrc_design, shape};

    fn zeros(n: usize) -> Vec<Complex> {
        vec![Complex::new(0.0, 0.0); n]
    }

    #[test]
    fn infinite_snr_is_identity() {
        let x = vec![Complex::new(0.3, -0.2); 16];
        assert_eq!(add_awgn(&x, f64::INFINITY, 1.0, 4, 7).unwrap(), x);
    }

    #[test]
    fn same_seed_same_noise() {
        let x = zeros(64);
        assert_eq!(
            add_awgn(&x, 10.0, 1.0, 4, 11).unwrap(),
            add_awgn(&x, 10.0, 1.0, 4, 11).unwrap()
        );
        assert_ne!(
            add_awgn(&x, 10.0, 1.0, 4, 11).unwrap(),
            add_awgn(&x, 10.0, 1.0, 4, 12).unwrap()
        );
    }

    #[test]
    fn rejects_nonpositive_reference() {
        assert!(add_awgn(&zeros(4), 10.0, 0.0, 4, 1).is_err());
    }

    #[test]
    fn per_sample_variance_matches() {
        let n = 1_000_000;
        let y = add_awgn(&zeros(n), 7.0, 0.5, 4, 5).unwrap();
        let var = y.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
        let want = noise_variance(7.0, 0.5, 4);
        assert!((var / want - 1.0).abs() < 0.01, "{var} vs {want}");
    }

    #[test]
    fn symbol_level_snr_after_matched_filter() {
        let f = rrc_design(0.25, 4, 16).unwrap();
        let n_blocks = 50_000;
        let clean = shape(&vec![AptbmBlock::ZERO; n_blocks], &f);
        let noisy = add_awgn(&clean, 20.0, 1.0, 4, 99).unwrap();
        let y = matched_filter(&noisy, &f).unwrap();
        let noise_power = y.iter().map(AptbmBlock::power).sum::<f64>() / (2 * y.len()) as f64;
        let snr = -10.0 * noise_power.log10();
        assert!((snr - 20.0).abs() < 0.1, "snr {snr}");
    }

    fn blocks() -> Vec<AptbmBlock> {
        (0..20)
            .map(|i| {
                let t = i as f64;
                AptbmBlock::new(Complex::from_polar(0.7, t), Complex::from_polar(0.4, -t))
            })
            .collect()
    }

    #[test]
    fn known_gain_inverts_linear_gain() {
        let tx = blocks();
        let g = Complex::new(4.65, 0.0);
        let rx: Vec<_> = tx.iter().map(|c| c.scale(4.65)).collect();
        let out = equalize(&rx, &ChannelConfig::awgn(20.0), g, 0.65).unwrap();
        for (o, t) in out.iter().zip(&tx) {
            assert!(o.dist_sqr(t).sqrt() < 1e-10);
        }
        assert!(equalize(&rx, &ChannelConfig::awgn(20.0), Complex::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn blind_mode_sets_mean_power() {
        let cfg = ChannelConfig {
            equalizer: EqualizerMode::BlindAvgPower,
            ..ChannelConfig::awgn(20.0)
        };
        let out = equalize(&blocks(), &cfg, Complex::new(1.0, 0.0), 2.5).unwrap();
        let mean = out.iter().map(AptbmBlock::power).sum::<f64>() / out.len() as f64;
        assert!((mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unit_fir_reduces_to_known_gain() {
        let cfg = ChannelConfig {
            mode: ChannelMode::Fir(vec![Complex::new(1.0, 0.0)]),
            ..ChannelConfig::awgn(20.0)
        };
        let rx: Vec<_> = blocks().iter().map(|c| c.scale(2.0)).collect();
        let a = equalize(&rx, &cfg, Complex::new(2.0, 0.0), 1.0).unwrap();
        let b = equalize(&rx, &ChannelConfig::awgn(20.0), Complex::new(2.0, 0.0), 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.dist_sqr(y) < 1e-24);
        }
    }

    #[test]
    fn fir_channel_is_inverted_end_to_end() {
        let f = rrc_design(0.25, 4, 16).unwrap();
        let taps = vec![
            Complex::new(1.0, 0.0),
            Complex::new(0.3, 0.2),
            Complex::new(-0.1, 0.05),
        ];
        let cfg = ChannelConfig {
            mode: ChannelMode::Fir(taps.clone()),
            ..ChannelConfig::awgn(f64::INFINITY)
        };
        let tx = blocks();
        let rx = apply_channel(&shape(&tx, &f), &cfg.mode, f.sps());
        let y = matched_filter(&rx, &f).unwrap();
        let out = equalize(&y, &cfg, cfg.dc_gain(), 1.0).unwrap();
        for (o, t) in out.iter().zip(&tx) {
            assert!(o.dist_sqr(t).sqrt() < 1e-2, "{o:?} vs {t:?}");
        }
    }
}
