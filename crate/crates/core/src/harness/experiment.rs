use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, Resolved};
use super::output::SweepRecord;
use crate::alphabet::{AptbmAlphabet, AptbmBlock};
use crate::channel::{add_awgn_in_place, apply_channel, equalize};
use crate::demod::{demap_full, demap_with_phase};
use crate::error::invalid;
use crate::pa::{
    build_ampm_table, dbm_grid, lin_to_db, saturation_input_power_mw, scale_to_ibo, PaModel,
    CLASS_A_ETA_MAX,
};
use crate::recon::{
    baseline_reconstruct, block_mse, pc_baseline_reconstruct, two_stage_reconstruct, CoarseConfig,
};
use crate::waveform::{matched_filter, shape, RrcFilter};
use crate::{Complex, Error, Result};

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "APTBM_WORKERS";

/// Available parallelism, capped by [`WORKERS_ENV`] when set.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        Some(n) if n >= 1 => n.min(avail),
        _ => avail,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Ibo,
    Snr,
    K,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Ibo => "ibo",
            SweepAxis::Snr => "snr",
            SweepAxis::K => "k",
        }
    }

    fn tag(self) -> u64 {
        match self {
            SweepAxis::Ibo => 1,
            SweepAxis::Snr => 2,
            SweepAxis::K => 3,
        }
    }

    /// Writes `value` into the matching config field.
    pub fn apply(self, config: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::Ibo => {
                config.operating.ibo_db = Some(value);
                config.operating.pin_dbm = None;
            }
            SweepAxis::Snr => config.channel.snr_db = value,
            SweepAxis::K => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!(
                        "k must be a positive integer, got {value}"
                    )));
                }
                config.reconstruction.k_iters = value as usize;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ibo" => Ok(SweepAxis::Ibo),
            "snr" => Ok(SweepAxis::Snr),
            "k" => Ok(SweepAxis::K),
            _ => Err(Error::Config(format!(
                "unknown sweep axis `{s}` (expected ibo, snr or k)"
            ))),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one operating point. Single runs use `axis = None`.
pub fn point_seed(master: u64, axis: Option<SweepAxis>, value: f64) -> u64 {
    let key = match axis {
        None => 0,
        Some(a) => splitmix64(a.tag()) ^ value.to_bits(),
    };
    splitmix64(master ^ splitmix64(key))
}

/// Generator for one frame: the point seed selects the key, the frame
/// index the stream, so frames never share random numbers.
pub fn frame_rng(point_seed: u64, frame: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed);
    rng.set_stream(frame as u64);
    rng
}

/// Per-frame tallies, reduced in frame order.
#[derive(Debug, Clone, Default)]
struct FrameStats {
    blocks: u64,
    bit_errors: u64,
    block_errors: u64,
    sq_coarse: f64,
    sq_fine: Vec<f64>,
    pout_sum: f64,
    pout_samples: u64,
}

/// Frame-independent state shared by all workers.
struct Pipeline<'a> {
    cfg: &'a ExperimentConfig,
    r: &'a Resolved,
    coarse: CoarseConfig,
    known_gain: Complex,
}

impl<'a> Pipeline<'a> {
    fn new(cfg: &'a ExperimentConfig, r: &'a Resolved) -> Result<Self> {
        let table = build_ampm_table(&r.model, &dbm_grid(-60.0, 20.0, 0.25))?;
        let mut coarse = CoarseConfig::new(table, lin_to_db(r.p_in));
        coarse.phase_sign = cfg.reconstruction.phase_sign;
        let known_gain = r.channel.dc_gain() * r.model.small_signal_gain();
        Ok(Self {
            cfg,
            r,
            coarse,
            known_gain,
        })
    }

    fn run_frame(&self, seed: u64, frame: usize, n: usize) -> Result<FrameStats> {
        let alphabet = &self.r.alphabet;
        let filter = &self.r.filter;
        let sps = filter.sps();
        let p = alphabet.p();
        let mut rng = frame_rng(seed, frame);

        let labels: Vec<u32> = (0..n)
            .map(|_| rng.random_range(0..alphabet.order() as u32))
            .collect();
        let tx: Vec<AptbmBlock> = labels
            .iter()
            .map(|&x| *alphabet.block_for_label(x))
            .collect();

        let mut samples = shape(&tx, filter);
        self.r.model.apply_in_place(&mut samples);
        let (pout_sum, pout_samples) = interior_power(&samples, filter);

        let mut rx = apply_channel(&samples, &self.r.channel.mode, sps);
        let (rx_sum, rx_count) = interior_power(&rx, filter);
        add_awgn_in_place(
            &mut rx,
            self.r.channel.snr_db,
            rx_sum / rx_count as f64,
            sps,
            &mut rng,
        )?;

        let received = matched_filter(&rx, filter)?;
        debug_assert_eq!(received.len(), n);
        let eq = equalize(&received, &self.r.channel, self.known_gain, p)?;

        let mut stats = FrameStats {
            blocks: n as u64,
            pout_sum,
            pout_samples: pout_samples as u64,
            ..FrameStats::default()
        };
        let recon = &self.cfg.reconstruction;
        let decided: Vec<u32> = match recon.method {
            Method::None => {
                stats.sq_coarse = block_mse(&eq, &tx) * n as f64;
                eq.iter().map(|c| demap_full(c, alphabet).label).collect()
            }
            Method::Baseline | Method::PcBaseline => {
                let out = if recon.method == Method::Baseline {
                    baseline_reconstruct(&eq, p, recon.mu, alphabet.m())?
                } else {
                    pc_baseline_reconstruct(&eq, p, &self.coarse, recon.mu, alphabet.m())?
                };
                stats.sq_coarse = block_mse(&out.blocks, &tx) * n as f64;
                out.blocks
                    .iter()
                    .map(|c| demap_full(c, alphabet).label)
                    .collect()
            }
            Method::Proposed => {
                let fine = self.cfg.fine_config();
                let out = two_stage_reconstruct(
                    &eq,
                    p,
                    &self.coarse,
                    &fine,
                    alphabet.phases(),
                    Some(&tx),
                )?;
                let trace = out.trace.expect("trace requested");
                stats.sq_coarse = trace[0] * n as f64;
                stats.sq_fine = trace[1..].iter().map(|m| m * n as f64).collect();
                let phases = out.phase_estimates.expect("two-stage yields phases");
                out.blocks
                    .iter()
                    .zip(phases)
                    .map(|(c, ph)| demap_with_phase(c, alphabet, ph).label)
                    .collect()
            }
        };
        for (&sent, &got) in labels.iter().zip(&decided) {
            let diff = (sent ^ got).count_ones() as u64;
            stats.bit_errors += diff;
            stats.block_errors += u64::from(diff != 0);
        }
        Ok(stats)
    }
}

/// Power summed over the steady-state part of a shaped waveform, skipping
/// the filter ramps at both ends.
fn interior_power(samples: &[Complex], filter: &RrcFilter) -> (f64, usize) {
    let edge = filter.group_delay() / 2;
    let inner = if samples.len() > 2 * edge {
        &samples[edge..samples.len() - edge]
    } else {
        samples
    };
    (inner.iter().map(|s| s.norm_sqr()).sum(), inner.len().max(1))
}

/// Reference maximum output power for PAE: the model's saturated output,
/// or for a linear model its output at the configured saturation input.
fn pae_reference_power(model: &PaModel, fallback_dbm: f64) -> f64 {
    model.max_output_power().unwrap_or_else(|| {
        let g = model.small_signal_gain();
        g * g * saturation_input_power_mw(model, fallback_dbm)
    })
}

/// Runs one experiment with the worker count from the environment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepRecord> {
    run_experiment_with_workers(config, worker_count())
}

/// Runs one experiment on `workers` threads. The result does not depend on
/// `workers`.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<SweepRecord> {
    run_point(config, point_seed(config.run.seed, None, 0.0), workers)
}

fn run_point(config: &ExperimentConfig, seed: u64, workers: usize) -> Result<SweepRecord> {
    let resolved = config.resolve()?;
    let pipeline = Pipeline::new(config, &resolved)?;
    let trials = config.run.trials;
    let frame = config.reconstruction.frame_blocks;
    let frames: Vec<(usize, usize)> = (0..trials.div_ceil(frame))
        .map(|i| (i, frame.min(trials - i * frame)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("thread pool: {e}")))?;
    let per_frame: Vec<FrameStats> = pool.install(|| {
        frames
            .par_iter()
            .map(|&(i, n)| pipeline.run_frame(seed, i, n))
            .collect::<Result<Vec<_>>>()
    })?;

    let k = config.reconstruction.k_iters;
    let mut total = FrameStats::default();
    if config.reconstruction.method == Method::Proposed {
        total.sq_fine = vec![0.0; k];
    }
    for f in &per_frame {
        total.blocks += f.blocks;
        total.bit_errors += f.bit_errors;
        total.block_errors += f.block_errors;
        total.sq_coarse += f.sq_coarse;
        for (acc, x) in total.sq_fine.iter_mut().zip(&f.sq_fine) {
            *acc += x;
        }
        total.pout_sum += f.pout_sum;
        total.pout_samples += f.pout_samples;
    }

    let nb = total.blocks as f64;
    let bits = resolved.alphabet.bits_per_block() as f64;
    let pout = total.pout_sum / total.pout_samples as f64;
    let p_max = pae_reference_power(&resolved.model, config.pa.p_sat_dbm);
    Ok(SweepRecord {
        method: config.reconstruction.method,
        mo: config.modulation.mo,
        ibo_db: resolved.ibo_db(),
        snr_db: config.channel.snr_db,
        trials: total.blocks,
        bit_errors: total.bit_errors,
        ber: total.bit_errors as f64 / (nb * bits),
        block_errors: total.block_errors,
        ser: total.block_errors as f64 / nb,
        mse_coarse: total.sq_coarse / nb,
        mse_fine: total.sq_fine.iter().map(|s| s / nb).collect(),
        pout_dbm: lin_to_db(pout),
        pae: CLASS_A_ETA_MAX * pout / p_max,
    })
}

/// One record per value; each point gets its own seed from the master seed
/// and the axis value.
pub fn run_sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepRecord>> {
    run_sweep_with_workers(config, axis, values, worker_count())
}

pub fn run_sweep_with_workers(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    workers: usize,
) -> Result<Vec<SweepRecord>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    // validate every point before running any
    let points = values
        .iter()
        .map(|&v| {
            let mut c = config.clone();
            axis.apply(&mut c, v)?;
            c.resolve()?;
            Ok((c, point_seed(config.run.seed, Some(axis), v)))
        })
        .collect::<Result<Vec<_>>>()?;
    points
        .iter()
        .map(|(c, seed)| run_point(c, *seed, workers))
        .collect()
}

/// BER substituted for zero-error points: half an error over the run.
pub fn censored_ber(record: &SweepRecord) -> f64 {
    if record.bit_errors > 0 {
        record.ber
    } else {
        let bits = (record.mo as f64).log2();
        0.5 / (record.trials as f64 * bits)
    }
}

/// Smallest IBO reaching `target_ber`, interpolating `log10(BER)` linearly
/// in IBO between the first pair of points that straddles the target.
pub fn ibo_at_target(records: &[SweepRecord], target_ber: f64) -> Result<f64> {
    if !(target_ber > 0.0) {
        return Err(invalid(format!(
            "target BER must be positive, got {target_ber}"
        )));
    }
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.ibo_db, censored_ber(r)))
        .collect();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let lt = target_ber.log10();
    for (i, &(ibo, ber)) in pts.iter().enumerate() {
        if ber == target_ber {
            return Ok(ibo);
        }
        if i == 0 {
            continue;
        }
        let (ibo0, ber0) = pts[i - 1];
        if ber0 > target_ber && ber < target_ber {
            let (l0, l1) = (ber0.log10(), ber.log10());
            return Ok(ibo0 + (ibo - ibo0) * (lt - l0) / (l1 - l0));
        }
    }
    Err(Error::NotAchieved { target: target_ber })
}

/// Output-power and efficiency comparison of two back-offs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaeReport {
    pub ibo_a_db: f64,
    pub ibo_b_db: f64,
    pub pout_a_dbm: f64,
    pub pout_b_dbm: f64,
    pub pae_a: f64,
    pub pae_b: f64,
    /// `pae_b / pae_a - 1`.
    pub improvement: f64,
}

/// Drives the same random shaped APTBM waveform through `model` at two
/// back-offs and compares the resulting efficiencies.
#[allow(clippy::too_many_arguments)]
pub fn pae_report(
    model: &PaModel,
    ibo_a_db: f64,
    ibo_b_db: f64,
    alphabet: &AptbmAlphabet,
    filter: &RrcFilter,
    p_sat_dbm: f64,
    blocks: usize,
    seed: u64,
) -> Result<PaeReport> {
    if ibo_b_db > ibo_a_db {
        return Err(invalid(format!(
            "ibo_b ({ibo_b_db} dB) must not exceed ibo_a ({ibo_a_db} dB)"
        )));
    }
    if blocks == 0 {
        return Err(invalid("pae_report needs at least one block"));
    }
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<AptbmBlock> = (0..blocks)
        .map(|_| alphabet.blocks()[rng.random_range(0..alphabet.order())])
        .collect();
    let p_sat_in = saturation_input_power_mw(model, p_sat_dbm);
    let p_max = pae_reference_power(model, p_sat_dbm);
    let measure = |ibo: f64| -> Result<f64> {
        let (scaled, _) = scale_to_ibo(&data, ibo, p_sat_in)?;
        let mut s = shape(&scaled, filter);
        model.apply_in_place(&mut s);
        let (sum, n) = interior_power(&s, filter);
        Ok(sum / n as f64)
    };
    let (pa, pb) = (measure(ibo_a_db)?, measure(ibo_b_db)?);
    let (pae_a, pae_b) = (CLASS_A_ETA_MAX * pa / p_max, CLASS_A_ETA_MAX * pb / p_max);
    Ok(PaeReport {
        ibo_a_db,
        ibo_b_db,
        pout_a_dbm: lin_to_db(pa),
        pout_b_dbm: lin_to_db(pb),
        pae_a,
        pae_b,
        improvement: pae_b / pae_a - 1.0,
    })
}

/// Mean squared error after the coarse stage and after each of `k` fine
/// iterations, for the proposed method at the configured point.
pub fn convergence_trace(config: &ExperimentConfig, k: usize) -> Result<Vec<f64>> {
    let mut c = config.clone();
    c.reconstruction.method = Method::Proposed;
    c.reconstruction.k_iters = k;
    let rec = run_experiment(&c)?;
    let mut out = vec![rec.mse_coarse];
    out.extend(rec.mse_fine);
    Ok(out)
}
