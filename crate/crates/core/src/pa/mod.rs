//! Memoryless power-amplifier models and operating-point arithmetic.
//!
//! Unit convention: baseband amplitudes are in sqrt(mW), so the
//! instantaneous power of a sample `x` is `|x|^2` mW and `10 log10(|x|^2)` dBm.

mod table;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::alphabet::AptbmBlock;
use crate::error::invalid;
use crate::{Complex, Error, Result};

pub use table::{parse_pa_table, read_pa_table, write_pa_table, PaTable};

/// Output fraction of `a_sat` that defines input saturation.
pub const SATURATION_FRACTION: f64 = 0.95;

/// Class-A maximum PAE.
pub const CLASS_A_ETA_MAX: f64 = 0.5;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Unit in which a model's AM-PM expression is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn to_radians(self, x: f64) -> f64 {
        match self {
            AngleUnit::Degrees => x * PI / 180.0,
            AngleUnit::Radians => x,
        }
    }
}

/// Modified Rapp model parameters.
///
/// The AM-PM expression `alpha0 |x|^q1 / (1 + (|x| / beta0)^q2)` is in
/// degrees for the standard fitting parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RappParams {
    pub g0: f64,
    pub a_sat: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub ampm_unit: AngleUnit,
}

impl Default for RappParams {
    fn default() -> Self {
        Self {
            g0: 4.65,
            a_sat: 0.58,
            alpha0: 2560.0,
            beta0: 0.114,
            q0: 0.81,
            q1: 2.4,
            q2: 2.3,
            ampm_unit: AngleUnit::Degrees,
        }
    }
}

impl RappParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g0 > 0.0 && self.a_sat > 0.0 && self.q0 > 0.0 && self.beta0 > 0.0) {
            return Err(invalid("rapp model needs g0, a_sat, q0, beta0 > 0"));
        }
        Ok(())
    }

    pub fn am_am(&self, r: f64) -> f64 {
        let gr = self.g0 * r;
        let e = 2.0 * self.q0;
        gr / (1.0 + (gr / self.a_sat).powf(e)).powf(1.0 / e)
    }

    /// AM-PM shift in radians.
    pub fn am_pm(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let raw = self.alpha0 * r.powf(self.q1) / (1.0 + (r / self.beta0).powf(self.q2));
        self.ampm_unit.to_radians(raw)
    }
}

/// A memoryless complex-envelope nonlinearity.
#[derive(Debug, Clone, PartialEq)]
pub enum PaModel {
    ModifiedRapp(RappParams),
    /// Linear gain up to a hard output clip; no AM-PM.
    SoftLimiter {
        gain: f64,
        clip: f64,
    },
    IdealLinear {
        gain: f64,
    },
    TableDriven(PaTable),
}

impl PaModel {
    pub fn kind(&self) -> &'static str {
        match self {
            PaModel::ModifiedRapp(_) => "modified-rapp",
            PaModel::SoftLimiter { .. } => "soft-limiter",
            PaModel::IdealLinear { .. } => "ideal-linear",
            PaModel::TableDriven(_) => "table-driven",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PaModel::ModifiedRapp(p) => p.validate(),
            PaModel::SoftLimiter { gain, clip } if *gain > 0.0 && *clip > 0.0 => Ok(()),
            PaModel::SoftLimiter { .. } => Err(invalid("soft limiter needs gain, clip > 0")),
            PaModel::IdealLinear { gain } if *gain > 0.0 => Ok(()),
            PaModel::IdealLinear { .. } => Err(invalid("linear gain must be > 0")),
            PaModel::TableDriven(_) => Ok(()),
        }
    }

    /// Output amplitude for input amplitude `r`.
    pub fn am_am(&self, r: f64) -> f64 {
        match self {
            PaModel::ModifiedRapp(p) => p.am_am(r),
            PaModel::SoftLimiter { gain, clip } => (gain * r).min(*clip),
            PaModel::IdealLinear { gain } => gain * r,
            PaModel::TableDriven(t) => t.am_am(r),
        }
    }

    /// Output phase minus input phase, radians.
    pub fn am_pm(&self, r: f64) -> f64 {
        match self {
            PaModel::ModifiedRapp(p) => p.am_pm(r),
            PaModel::SoftLimiter { .. } | PaModel::IdealLinear { .. } => 0.0,
            PaModel::TableDriven(t) => t.am_pm(r),
        }
    }

    pub fn apply(&self, x: Complex) -> Complex {
        let r = x.norm();
        if r == 0.0 {
            return Complex::new(0.0, 0.0);
        }
        let out = self.am_am(r);
        let shift = self.am_pm(r);
        x * (out / r) * Complex::from_polar(1.0, shift)
    }

    pub fn apply_in_place(&self, samples: &mut [Complex]) {
        for s in samples {
            *s = self.apply(*s);
        }
    }

    /// Linear amplitude gain in the small-signal limit.
    pub fn small_signal_gain(&self) -> f64 {
        match self {
            PaModel::ModifiedRapp(p) => p.g0,
            PaModel::SoftLimiter { gain, .. } | PaModel::IdealLinear { gain } => *gain,
            PaModel::TableDriven(t) => t.small_signal_gain(),
        }
    }

    /// Maximum output power in mW, when the model has one.
    pub fn max_output_power(&self) -> Option<f64> {
        match self {
            PaModel::ModifiedRapp(p) => Some(p.a_sat * p.a_sat),
            PaModel::SoftLimiter { clip, .. } => Some(clip * clip),
            PaModel::IdealLinear { .. } => None,
            PaModel::TableDriven(t) => Some(t.max_output_amplitude().powi(2)),
        }
    }
}

/// Applies the model to one sample.
pub fn pa_apply(x: Complex, model: &PaModel) -> Complex {
    model.apply(x)
}

/// Input saturation power in dBm of a modified Rapp model: the input power
/// at which the AM-AM output reaches 95 % of `a_sat`.
pub fn input_saturation_power(model: &PaModel) -> Result<f64> {
    match model {
        PaModel::ModifiedRapp(p) => {
            p.validate()?;
            Ok(rapp_input_saturation_power(p))
        }
        other => Err(Error::UnsupportedModel(other.kind())),
    }
}

pub fn rapp_input_saturation_power(p: &RappParams) -> f64 {
    let target = SATURATION_FRACTION * p.a_sat;
    let mut lo = 0.0;
    let mut hi = p.a_sat / p.g0;
    while p.am_am(hi) < target {
        hi *= 2.0;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if p.am_am(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let amp = 0.5 * (lo + hi);
    lin_to_db(amp * amp)
}

/// Input saturation power in mW used to place an operating point.
///
/// Soft limiters saturate where `gain * r = clip`; linear and tabulated models
/// take the configured fallback.
pub fn saturation_input_power_mw(model: &PaModel, fallback_dbm: f64) -> f64 {
    match model {
        PaModel::ModifiedRapp(p) => db_to_lin(rapp_input_saturation_power(p)),
        PaModel::SoftLimiter { gain, clip } => (clip / gain).powi(2),
        PaModel::IdealLinear { .. } | PaModel::TableDriven(_) => db_to_lin(fallback_dbm),
    }
}

/// Average input power and its back-off from saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub p_in: f64,
    pub p_sat_in: f64,
    pub ibo_db: f64,
}

impl OperatingPoint {
    pub fn from_ibo(ibo_db: f64, p_sat_in: f64) -> Result<Self> {
        if !ibo_db.is_finite() || !(p_sat_in > 0.0) {
            return Err(invalid(format!(
                "bad operating point: ibo {ibo_db}, p_sat {p_sat_in}"
            )));
        }
        Ok(Self {
            p_in: p_sat_in * db_to_lin(-ibo_db),
            p_sat_in,
            ibo_db,
        })
    }

    pub fn from_input_power(p_in: f64, p_sat_in: f64) -> Result<Self> {
        Ok(Self {
            p_in,
            p_sat_in,
            ibo_db: ibo(p_in, p_sat_in)?,
        })
    }
}

/// `10 log10(p_sat_in / p_in)`.
pub fn ibo(p_in: f64, p_sat_in: f64) -> Result<f64> {
    if !(p_in > 0.0 && p_sat_in > 0.0) {
        return Err(invalid(format!(
            "powers must be positive: p_in {p_in}, p_sat {p_sat_in}"
        )));
    }
    Ok(lin_to_db(p_sat_in / p_in))
}

/// Class-A power-added efficiency `eta_max * p_out / p_max`.
pub fn pae(p_out: f64, p_max: f64, eta_max: f64) -> Result<f64> {
    if !(p_max > 0.0) || !(eta_max > 0.0 && eta_max <= 1.0) {
        return Err(invalid(format!(
            "bad pae parameters: p_max {p_max}, eta_max {eta_max}"
        )));
    }
    if !(0.0..=p_max).contains(&p_out) {
        return Err(invalid(format!(
            "output power {p_out} outside [0, {p_max}]"
        )));
    }
    Ok(eta_max * p_out / p_max)
}

/// AM-PM shift (radians) against input power (dBm), power strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct AmPmTable {
    grid: Vec<(f64, f64)>,
}

impl AmPmTable {
    pub fn new(grid: Vec<(f64, f64)>) -> Result<Self> {
        if grid.is_empty() {
            return Err(invalid("AM-PM table is empty"));
        }
        if grid.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid(
                "AM-PM table power grid must be strictly increasing",
            ));
        }
        Ok(Self { grid })
    }

    /// A single-entry table that always returns `phase`.
    pub fn constant(phase: f64) -> Self {
        Self {
            grid: vec![(0.0, phase)],
        }
    }

    pub fn grid(&self) -> &[(f64, f64)] {
        &self.grid
    }

    /// Linear interpolation in dBm, clamped to the end values.
    pub fn lookup(&self, p_dbm: f64) -> f64 {
        let g = &self.grid;
        if p_dbm <= g[0].0 {
            return g[0].1;
        }
        let last = g[g.len() - 1];
        if p_dbm >= last.0 {
            return last.1;
        }
        let i = g.partition_point(|&(p, _)| p <= p_dbm);
        let (p0, v0) = g[i - 1];
        let (p1, v1) = g[i];
        v0 + (v1 - v0) * (p_dbm - p0) / (p1 - p0)
    }
}

/// Tabulates the model's AM-PM at amplitude `sqrt(p)` for each grid power.
pub fn build_ampm_table(model: &PaModel, grid_dbm: &[f64]) -> Result<AmPmTable> {
    AmPmTable::new(
        grid_dbm
            .iter()
            .map(|&dbm| (dbm, model.am_pm(db_to_lin(dbm).sqrt())))
            .collect(),
    )
}

pub fn ampm_lookup(table: &AmPmTable, p_dbm: f64) -> f64 {
    table.lookup(p_dbm)
}

/// Evenly spaced dBm grid, both ends included.
pub fn dbm_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|i| start + step * i as f64).collect()
}

/// Scales a block sequence so the average per-symbol power is
/// `p_sat_in * 10^(-ibo / 10)`. Returns the scaled blocks and the implied
/// block power `2 p_in`.
pub fn scale_to_ibo(
    blocks: &[AptbmBlock],
    target_ibo_db: f64,
    p_sat_in: f64,
) -> Result<(Vec<AptbmBlock>, f64)> {
    if blocks.is_empty() {
        return Err(invalid("cannot scale an empty sequence"));
    }
    let op = OperatingPoint::from_ibo(target_ibo_db, p_sat_in)?;
    let avg = blocks.iter().map(AptbmBlock::power).sum::<f64>() / (2 * blocks.len()) as f64;
    if !(avg > 0.0) {
        return Err(invalid("cannot scale an all-zero sequence"));
    }
    let k = (op.p_in / avg).sqrt();
    Ok((blocks.iter().map(|c| c.scale(k)).collect(), 2.0 * op.p_in))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rapp() -> PaModel {
        PaModel::ModifiedRapp(RappParams::default())
    }

    #[test]
    fn zero_in_zero_out() {
        assert_eq!(
            pa_apply(Complex::new(0.0, 0.0), &rapp()),
            Complex::new(0.0, 0.0)
        );
    }

    #[test]
    fn small_signal_regime() {
        let x = Complex::from_polar(1e-4, 0.3);
        let y = pa_apply(x, &rapp());
        assert!((y.norm() / 4.65e-4 - 1.0).abs() < 1e-3);
        assert!((y.arg() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn deep_saturation() {
        let y = pa_apply(Complex::new(10.0, 0.0), &rapp());
        assert!(y.norm() > 0.99 * 0.58 && y.norm() <= 0.58);
    }

    #[test]
    fn saturation_power_matches_calibration() {
        let psat = input_saturation_power(&rapp()).unwrap();
        assert!((psat + 5.0).abs() <= 0.3, "psat = {psat}");
    }

    #[test]
    fn saturation_power_scales_with_a_sat() {
        let base = RappParams::default();
        let doubled = RappParams {
            a_sat: 2.0 * base.a_sat,
            ..base
        };
        let d = rapp_input_saturation_power(&doubled) - rapp_input_saturation_power(&base);
        assert!((d - 20.0 * 2f64.log10()).abs() < 1e-3, "delta = {d}");
    }

    #[test]
    fn saturation_power_unsupported_for_other_models() {
        let soft = PaModel::SoftLimiter {
            gain: 1.0,
            clip: 1.0,
        };
        assert!(matches!(
            input_saturation_power(&soft),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn ibo_examples() {
        assert_relative_eq!(ibo(0.1, 1.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_eq!(ibo(0.3, 0.3).unwrap(), 0.0);
        let v = ibo(db_to_lin(-13.0), db_to_lin(-5.0)).unwrap();
        assert_relative_eq!(v, 8.0, epsilon = 1e-12);
        assert!(ibo(0.0, 1.0).is_err());
        assert!(ibo(1.0, -1.0).is_err());
    }

    #[test]
    fn pae_examples() {
        assert_eq!(pae(2.0, 2.0, 0.5).unwrap(), 0.5);
        assert_relative_eq!(pae(1.0, 2.0, 0.5).unwrap(), 0.25);
        assert_eq!(pae(0.0, 2.0, 0.5).unwrap(), 0.0);
        assert!(pae(2.1, 2.0, 0.5).is_err());
        assert!(pae(1.0, 2.0, 1.5).is_err());
    }

    #[test]
    fn ampm_table_examples() {
        let t = build_ampm_table(&rapp(), &dbm_grid(-80.0, 10.0, 1.0)).unwrap();
        assert!(t.grid()[0].1 < 1e-6);

        let lin = build_ampm_table(&PaModel::IdealLinear { gain: 3.0 }, &[-10.0, 0.0]).unwrap();
        assert!(lin.grid().iter().all(|&(_, v)| v == 0.0));

        let p = RappParams::default();
        let t5 = build_ampm_table(&rapp(), &[-5.0]).unwrap();
        let a = db_to_lin(-5.0).sqrt();
        let raw = p.alpha0 * a.powf(p.q1) / (1.0 + (a / p.beta0).powf(p.q2));
        assert_relative_eq!(t5.grid()[0].1, raw.to_radians(), max_relative = 1e-12);

        let radians = RappParams {
            ampm_unit: AngleUnit::Radians,
            ..p
        };
        let t5 = build_ampm_table(&PaModel::ModifiedRapp(radians), &[-5.0]).unwrap();
        assert_relative_eq!(t5.grid()[0].1, raw, max_relative = 1e-12);

        assert!(build_ampm_table(&rapp(), &[0.0, -1.0]).is_err());
    }

    #[test]
    fn ampm_lookup_rules() {
        let t = AmPmTable::new(vec![(-10.0, 0.1), (0.0, 0.3), (10.0, 0.2)]).unwrap();
        assert_eq!(ampm_lookup(&t, 0.0), 0.3);
        assert_eq!(ampm_lookup(&t, -50.0), 0.1);
        assert_eq!(ampm_lookup(&t, 50.0), 0.2);
        assert_relative_eq!(ampm_lookup(&t, -5.0), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn scale_to_ibo_examples() {
        let blocks = vec![AptbmBlock::new(Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)); 8];
        let (scaled, p) = scale_to_ibo(&blocks, 10.0, 1.0).unwrap();
        assert_relative_eq!(scaled[0].a.re, 0.1f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p, 0.2, epsilon = 1e-15);

        let (scaled0, p0) = scale_to_ibo(&blocks, 0.0, 0.7).unwrap();
        assert_relative_eq!(p0, 1.4, epsilon = 1e-15);
        let (again, _) = scale_to_ibo(&scaled0, 0.0, 0.7).unwrap();
        for (x, y) in again.iter().zip(&scaled0) {
            assert!(x.dist_sqr(y).sqrt() < 1e-12);
        }
        assert!(scale_to_ibo(&[], 3.0, 1.0).is_err());
    }
}
