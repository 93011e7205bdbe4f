use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alphabet::AptbmAlphabet;
use crate::channel::{ChannelConfig, ChannelMode, EqualizerMode};
use crate::error::invalid;
use crate::pa::{read_pa_table, saturation_input_power_mw, PaModel, RappParams};
use crate::recon::{FineConfig, PhaseSign};
use crate::waveform::{rrc_design, RrcFilter};
use crate::{Complex, Error, Result};

/// Reconstruction applied before demapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    None,
    Baseline,
    PcBaseline,
    Proposed,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::None,
        Method::Baseline,
        Method::PcBaseline,
        Method::Proposed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Baseline => "baseline",
            Method::PcBaseline => "pc-baseline",
            Method::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PaKind {
    ModifiedRapp,
    SoftLimiter,
    IdealLinear,
    TableDriven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    /// Modulation order `m * l`.
    pub mo: usize,
    /// Phase alphabet size; with `l`, overrides the default split for `mo`.
    pub m: Option<usize>,
    pub l: Option<usize>,
}

impl Default for ModulationSection {
    fn default() -> Self {
        Self {
            mo: 16,
            m: None,
            l: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PaSection {
    pub model: PaKind,
    /// Linear gain of the soft limiter and the ideal linear model.
    pub gain: f64,
    /// Output clip amplitude of the soft limiter.
    pub clip: f64,
    /// Characterization file for the table-driven model.
    pub table: Option<PathBuf>,
    /// Input saturation power for models without a natural one.
    pub p_sat_dbm: f64,
    pub rapp: RappParams,
}

impl Default for PaSection {
    fn default() -> Self {
        Self {
            model: PaKind::ModifiedRapp,
            gain: 1.0,
            clip: 1.0,
            table: None,
            p_sat_dbm: -5.0,
            rapp: RappParams::default(),
        }
    }
}

impl PaSection {
    /// Builds the model. Relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<PaModel> {
        let model = match self.model {
            PaKind::ModifiedRapp => PaModel::ModifiedRapp(self.rapp),
            PaKind::SoftLimiter => PaModel::SoftLimiter {
                gain: self.gain,
                clip: self.clip,
            },
            PaKind::IdealLinear => PaModel::IdealLinear { gain: self.gain },
            PaKind::TableDriven => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("table-driven PA needs `pa.table`".into()))?;
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                PaModel::TableDriven(read_pa_table(path)?)
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatingSection {
    /// Input back-off; used when `pin_dbm` is absent (default 8 dB).
    pub ibo_db: Option<f64>,
    /// Average PA input power per symbol.
    pub pin_dbm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveformSection {
    pub rolloff: f64,
    pub sps: usize,
    pub span: usize,
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self {
            rolloff: 0.25,
            sps: 4,
            span: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    /// Symbol-level SNR; `inf` disables noise.
    pub snr_db: f64,
    pub equalizer: EqualizerMode,
    /// Symbol-spaced FIR taps as `[re, im]` pairs; empty means AWGN only.
    pub fir_taps: Vec<[f64; 2]>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            equalizer: EqualizerMode::KnownGain,
            fir_taps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconSection {
    pub method: Method,
    pub k_iters: usize,
    /// Sigmoid slope of the baseline amplitude weight.
    pub mu: f64,
    pub phase_sign: PhaseSign,
    /// Blocks per frame; the baseline phase estimate and the random
    /// streams are per frame.
    pub frame_blocks: usize,
}

impl Default for ReconSection {
    fn default() -> Self {
        Self {
            method: Method::Proposed,
            k_iters: 2,
            mu: 1.0,
            phase_sign: PhaseSign::Plus,
            frame_blocks: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Number of blocks.
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 1,
            output: None,
        }
    }
}

/// Everything one experiment needs. Every section and key is optional;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub modulation: ModulationSection,
    pub pa: PaSection,
    pub operating: OperatingSection,
    pub waveform: WaveformSection,
    pub channel: ChannelSection,
    pub reconstruction: ReconSection,
    pub run: RunSection,
    /// Directory relative paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(
            self.to_toml_string()?.as_bytes(),
        )))
    }

    pub fn split(&self) -> Result<(usize, usize)> {
        match (self.modulation.m, self.modulation.l) {
            (Some(m), Some(l)) => Ok((m, l)),
            (None, None) => AptbmAlphabet::default_split(self.modulation.mo),
            _ => Err(Error::Config("set both `m` and `l` or neither".into())),
        }
    }

    pub fn channel_config(&self) -> ChannelConfig {
        let mode = if self.channel.fir_taps.is_empty() {
            ChannelMode::Awgn
        } else {
            ChannelMode::Fir(
                self.channel
                    .fir_taps
                    .iter()
                    .map(|t| Complex::new(t[0], t[1]))
                    .collect(),
            )
        };
        ChannelConfig {
            snr_db: self.channel.snr_db,
            mode,
            equalizer: self.channel.equalizer,
        }
    }

    pub fn fine_config(&self) -> FineConfig {
        FineConfig::with_iters(self.reconstruction.k_iters)
    }

    pub fn filter(&self) -> Result<RrcFilter> {
        let w = &self.waveform;
        rrc_design(w.rolloff, w.sps, w.span)
    }

    /// Checks every field and resolves the derived objects.
    pub fn resolve(&self) -> Result<Resolved> {
        let (m, l) = self.split()?;
        if m * l != self.modulation.mo {
            return Err(Error::Config(format!(
                "m * l = {} does not match mo = {}",
                m * l,
                self.modulation.mo
            )));
        }
        if self.run.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.reconstruction.frame_blocks < 1 {
            return Err(Error::Config("frame_blocks must be >= 1".into()));
        }
        if !(self.reconstruction.mu > 0.0) {
            return Err(Error::Config("mu must be > 0".into()));
        }
        self.fine_config().validate()?;
        let channel = self.channel_config();
        channel.validate()?;
        let filter = self.filter()?;
        let model = self.pa.build(self.base_dir.as_deref())?;
        let p_sat_in = saturation_input_power_mw(&model, self.pa.p_sat_dbm);
        let p_in = match (self.operating.ibo_db, self.operating.pin_dbm) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set `ibo_db` or `pin_dbm`, not both".into()))
            }
            (None, Some(dbm)) => crate::pa::db_to_lin(dbm),
            (ibo, None) => p_sat_in * crate::pa::db_to_lin(-ibo.unwrap_or(8.0)),
        };
        if !(p_in > 0.0) || !p_in.is_finite() {
            return Err(invalid(format!("input power {p_in} mW is not usable")));
        }
        let alphabet = AptbmAlphabet::new(m, l, 2.0 * p_in)?;
        Ok(Resolved {
            alphabet,
            model,
            filter,
            channel,
            p_in,
            p_sat_in,
        })
    }
}

/// Objects derived from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Alphabet at block power `2 p_in`.
    pub alphabet: AptbmAlphabet,
    pub model: PaModel,
    pub filter: RrcFilter,
    pub channel: ChannelConfig,
    /// Average input power per symbol, mW.
    pub p_in: f64,
    pub p_sat_in: f64,
}

impl Resolved {
    pub fn ibo_db(&self) -> f64 {
        crate::pa::lin_to_db(self.p_sat_in / self.p_in)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let r = cfg.resolve().unwrap();
        assert_eq!((r.alphabet.m(), r.alphabet.l()), (4, 4));
        assert!((r.ibo_db() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("[run]\ntrails = 5\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[nope]\n").is_err());
        assert!(ExperimentConfig::from_toml_str("[pa.rapp]\ng1 = 2\n").is_err());
    }

    #[test]
    fn full_file_round_trips() {
        let text = r#"
[modulation]
mo = 32
m = 8
l = 4

[pa]
model = "soft-limiter"
gain = 2.0
clip = 0.5

[operating]
pin_dbm = -12.0

[waveform]
rolloff = 0.35
sps = 8
span = 12

[channel]
snr_db = inf
equalizer = "blind-avg-power"
fir_taps = [[1.0, 0.0], [0.2, -0.1]]

[reconstruction]
method = "pc-baseline"
k_iters = 3
frame_blocks = 128

[run]
trials = 1000
seed = 99
output = "out.csv"
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.reconstruction.method, Method::PcBaseline);
        assert!(cfg.channel.snr_db.is_infinite());
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash().unwrap(), cfg.hash().unwrap());
        cfg.resolve().unwrap();
    }

    #[test]
    fn inconsistent_configs_fail_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.modulation.m = Some(8);
        cfg.modulation.l = Some(4);
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.run.trials = 0;
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.operating.ibo_db = Some(3.0);
        cfg.operating.pin_dbm = Some(-10.0);
        assert!(cfg.resolve().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.pa.model = PaKind::TableDriven;
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.run.seed = 2;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }
}
