//! Root-raised-cosine pulse shaping and matched filtering.
//!
//! Taps have unit energy. `shape` applies a `sqrt(sps)` gain so that the
//! average waveform power equals the average symbol power, which is the
//! power the PA operating point is defined on; `matched_filter` removes the
//! same gain, so a noiseless shape/match cascade returns the symbols.

use std::f64::consts::PI;

use crate::alphabet::AptbmBlock;
use crate::error::invalid;
use crate::{Complex, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RrcFilter {
    rolloff: f64,
    sps: usize,
    span: usize,
    taps: Vec<f64>,
}

impl RrcFilter {
    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn sps(&self) -> usize {
        self.sps
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Cascade delay (shaping plus matched filter) in samples.
    pub fn group_delay(&self) -> usize {
        self.span * self.sps
    }
}

/// RRC impulse response at `t` symbol periods.
fn rrc_impulse(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 4.0 * beta * t;
    if (1.0 - edge * edge).abs() < 1e-10 {
        let arg = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    ((PI * t * (1.0 - beta)).sin() + edge * (PI * t * (1.0 + beta)).cos())
        / (PI * t * (1.0 - edge * edge))
}

/// Designs a unit-energy RRC filter of `span * sps + 1` taps.
pub fn rrc_design(rolloff: f64, sps: usize, span: usize) -> Result<RrcFilter> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(invalid(format!("rolloff must be in (0, 1], got {rolloff}")));
    }
    if sps < 2 {
        return Err(invalid(format!("sps must be >= 2, got {sps}")));
    }
    if span < 8 || !span.is_multiple_of(2) {
        return Err(invalid(format!("span must be even and >= 8, got {span}")));
    }
    let half = (span * sps / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| rrc_impulse(i as f64 / sps as f64, rolloff))
        .collect();
    let energy = taps.iter().map(|h| h * h).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|h| *h /= energy);
    Ok(RrcFilter {
        rolloff,
        sps,
        span,
        taps,
    })
}

/// Serializes blocks to `a1, b1, a2, b2, ...` and pulse-shapes them.
///
/// Output length is `(2N + span) * sps`.
pub fn shape(blocks: &[AptbmBlock], filter: &RrcFilter) -> Vec<Complex> {
    let sps = filter.sps;
    let gain = (sps as f64).sqrt();
    let mut out = vec![Complex::new(0.0, 0.0); (2 * blocks.len() + filter.span) * sps];
    let symbols = blocks.iter().flat_map(|c| [c.a, c.b]);
    for (k, s) in symbols.enumerate() {
        if s.re == 0.0 && s.im == 0.0 {
            continue;
        }
        let s = s * gain;
        let dst = &mut out[k * sps..k * sps + filter.taps.len()];
        for (o, &h) in dst.iter_mut().zip(&filter.taps) {
            *o += s * h;
        }
    }
    out
}

/// Matched filter and symbol-rate sampling, assuming the stream starts at
/// sample 0.
pub fn matched_filter(samples: &[Complex], filter: &RrcFilter) -> Result<Vec<AptbmBlock>> {
    matched_filter_with_delay(samples, filter, 0)
}

/// Matched filter for a stream whose first shaped sample sits at `delay`.
pub fn matched_filter_with_delay(
    samples: &[Complex],
    filter: &RrcFilter,
    delay: usize,
) -> Result<Vec<AptbmBlock>> {
    let sps = filter.sps;
    let usable = samples.len().saturating_sub(delay);
    let n_sym = (usable / sps).saturating_sub(filter.span);
    let n_sym = n_sym - n_sym % 2;
    if n_sym < 2 {
        return Err(invalid(format!(
            "{} samples (delay {delay}) are too few for one block with span {} and sps {sps}",
            samples.len(),
            filter.span
        )));
    }
    let norm = 1.0 / (sps as f64).sqrt();
    let sample_at = |k: usize| -> Complex {
        let start = delay + k * sps;
        let window = &samples[start..start + filter.taps.len()];
        window
            .iter()
            .zip(&filter.taps)
            .fold(Complex::new(0.0, 0.0), |acc, (&x, &h)| acc + x * h)
            * norm
    };
    Ok((0..n_sym / 2)
        .map(|n| AptbmBlock::new(sample_at(2 * n), sample_at(2 * n + 1)))
        .collect())
}
