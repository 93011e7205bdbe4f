//! Measured AM-AM / AM-PM curves.
//!
//! File format: plain text, one sample per line, columns separated by
//! whitespace or commas. Lines starting with `#` and blank lines are skipped.
//! The first remaining line is a header naming the columns:
//!
//! | column        | meaning                                  |
//! |---------------|------------------------------------------|
//! | `input_dbm`   | input power, dBm (or `input_amp`, sqrt(mW)) |
//! | `gain_db`     | power gain, dB (or `output_amp`, sqrt(mW), or `output_dbm`) |
//! | `phase_deg`   | AM-PM phase shift, degrees               |
//!
//! The input column comes first; at least one of the other two must follow.
//! A missing AM-AM column means unit gain, a missing phase column zero shift.
//!
//! ```text
//! # 38 GHz PA, measured
//! input_dbm gain_db phase_deg
//! -30 13.3 0.0
//! -20 13.2 0.4
//! ```

use std::io::{BufRead, Write};
use std::path::Path;

use super::{db_to_lin, lin_to_db, AmPmTable, PaModel};
use crate::error::invalid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum InputCol {
    Dbm,
    Amp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    GainDb,
    OutputAmp,
    OutputDbm,
    PhaseDeg,
}

/// Tabulated AM-AM gain and AM-PM shift against input amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PaTable {
    amp: Vec<f64>,
    gain: Vec<f64>,
    phase: Vec<f64>,
}

impl PaTable {
    /// `amp` strictly increasing and positive; `gain` is linear amplitude
    /// gain, `phase` in radians.
    pub fn new(amp: Vec<f64>, gain: Vec<f64>, phase: Vec<f64>) -> Result<Self> {
        if amp.is_empty() || amp.len() != gain.len() || amp.len() != phase.len() {
            return Err(invalid(
                "PA table columns must be nonempty and equally long",
            ));
        }
        if amp[0] <= 0.0 || amp.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid(
                "PA table input amplitudes must be positive and strictly increasing",
            ));
        }
        Ok(Self { amp, gain, phase })
    }

    /// Samples a model on an input-power grid.
    pub fn from_model(model: &PaModel, grid_dbm: &[f64]) -> Result<Self> {
        let amp: Vec<f64> = grid_dbm.iter().map(|&d| db_to_lin(d).sqrt()).collect();
        let gain = amp.iter().map(|&r| model.am_am(r) / r).collect();
        let phase = amp.iter().map(|&r| model.am_pm(r)).collect();
        Self::new(amp, gain, phase)
    }

    pub fn input_amplitudes(&self) -> &[f64] {
        &self.amp
    }

    pub fn gains(&self) -> &[f64] {
        &self.gain
    }

    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    fn interp(&self, ys: &[f64], r: f64) -> f64 {
        let i = self.amp.partition_point(|&a| a <= r);
        if i == 0 {
            return ys[0];
        }
        if i == self.amp.len() {
            return ys[ys.len() - 1];
        }
        let (x0, x1) = (self.amp[i - 1], self.amp[i]);
        ys[i - 1] + (ys[i] - ys[i - 1]) * (r - x0) / (x1 - x0)
    }

    /// Output amplitude; held at the last tabulated output beyond the grid.
    pub fn am_am(&self, r: f64) -> f64 {
        let last = self.amp.len() - 1;
        if r >= self.amp[last] {
            return self.amp[last] * self.gain[last];
        }
        r * self.interp(&self.gain, r)
    }

    pub fn am_pm(&self, r: f64) -> f64 {
        self.interp(&self.phase, r)
    }

    pub fn small_signal_gain(&self) -> f64 {
        self.gain[0]
    }

    pub fn max_output_amplitude(&self) -> f64 {
        self.amp
            .iter()
            .zip(&self.gain)
            .map(|(a, g)| a * g)
            .fold(0.0, f64::max)
    }

    /// The AM-PM column as a lookup table keyed by input power.
    pub fn ampm_table(&self) -> AmPmTable {
        AmPmTable::new(
            self.amp
                .iter()
                .zip(&self.phase)
                .map(|(&a, &ph)| (lin_to_db(a * a), ph))
                .collect(),
        )
        .expect("amplitudes are strictly increasing")
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses the text table format; `origin` is only used in error messages.
pub fn parse_pa_table<R: BufRead>(reader: R, origin: &Path) -> Result<PaTable> {
    let mut header: Option<(InputCol, Vec<Column>)> = None;
    let (mut amp, mut gain, mut phase) = (Vec::new(), Vec::new(), Vec::new());

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();

        let Some((input, cols)) = &header else {
            let input = match fields[0] {
                "input_dbm" => InputCol::Dbm,
                "input_amp" => InputCol::Amp,
                other => {
                    return Err(parse_err(
                        origin,
                        lineno,
                        format!("unknown input column {other:?}"),
                    ))
                }
            };
            let cols = fields[1..]
                .iter()
                .map(|&f| match f {
                    "gain_db" => Ok(Column::GainDb),
                    "output_amp" => Ok(Column::OutputAmp),
                    "output_dbm" => Ok(Column::OutputDbm),
                    "phase_deg" => Ok(Column::PhaseDeg),
                    other => Err(parse_err(
                        origin,
                        lineno,
                        format!("unknown column {other:?}"),
                    )),
                })
                .collect::<Result<Vec<_>>>()?;
            let am_cols = cols.iter().filter(|c| **c != Column::PhaseDeg).count();
            let ph_cols = cols.len() - am_cols;
            if cols.is_empty() || am_cols > 1 || ph_cols > 1 {
                return Err(parse_err(
                    origin,
                    lineno,
                    "need one input column plus an AM-AM and/or phase column",
                ));
            }
            header = Some((input, cols));
            continue;
        };

        if fields.len() != cols.len() + 1 {
            return Err(parse_err(
                origin,
                lineno,
                format!(
                    "expected {} columns, found {}",
                    cols.len() + 1,
                    fields.len()
                ),
            ));
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| parse_err(origin, lineno, format!("{f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let r = match input {
            InputCol::Dbm => db_to_lin(values[0]).sqrt(),
            InputCol::Amp => values[0],
        };
        let (mut g, mut ph) = (1.0, 0.0);
        for (col, &v) in cols.iter().zip(&values[1..]) {
            match col {
                Column::GainDb => g = db_to_lin(v).sqrt(),
                Column::OutputAmp => g = v / r,
                Column::OutputDbm => g = db_to_lin(v).sqrt() / r,
                Column::PhaseDeg => ph = v.to_radians(),
            }
        }
        amp.push(r);
        gain.push(g);
        phase.push(ph);
    }

    if header.is_none() {
        return Err(parse_err(origin, 0, "missing header line"));
    }
    PaTable::new(amp, gain, phase).map_err(|e| parse_err(origin, 0, e.to_string()))
}

pub fn read_pa_table(path: impl AsRef<Path>) -> Result<PaTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_pa_table(std::io::BufReader::new(file), path)
}

/// Writes a table in the `input_dbm gain_db phase_deg` layout.
pub fn write_pa_table<W: Write>(mut w: W, table: &PaTable, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    writeln!(w, "input_dbm gain_db phase_deg")?;
    for ((&a, &g), &ph) in table.amp.iter().zip(&table.gain).zip(&table.phase) {
        writeln!(
            w,
            "{:.6} {:.9} {:.9}",
            lin_to_db(a * a),
            lin_to_db(g * g),
            ph.to_degrees()
        )?;
    }
    Ok(())
}
