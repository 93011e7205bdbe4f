//! `aptbm`: command-line front end for APTBM link simulations.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use aptbm_core::harness::{
    convergence_trace, run_experiment, run_sweep, worker_count, write_output, write_records,
    ExperimentConfig, Method, SweepAxis, SweepRecord, WORKERS_ENV,
};
use aptbm_core::pa::{dbm_grid, input_saturation_power, lin_to_db, write_pa_table, PaTable};

#[derive(Parser)]
#[command(name = "aptbm", version, about = "APTBM link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config. Defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `run.trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `reconstruction.method`.
    #[arg(long)]
    method: Option<Method>,
    /// CSV destination; `run.output` or stdout otherwise.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.run.trials = t;
        }
        if let Some(m) = self.method {
            cfg.reconstruction.method = m;
        }
        if let Some(o) = &self.output {
            cfg.run.output = Some(o.clone());
        }
        cfg.resolve()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a single operating point.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Run one point per value along an axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', conflicts_with = "range")]
        values: Vec<f64>,
        /// Inclusive `start:stop:step`.
        #[arg(long)]
        range: Option<String>,
        /// Run every listed method at each point (comma-separated).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<Method>,
    },
    /// Print AM-AM/AM-PM curves and the saturation point of the configured PA.
    PaCharacterize {
        #[arg(short, long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
        from_dbm: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        to_dbm: f64,
        #[arg(long, default_value_t = 0.5)]
        step_db: f64,
        /// Curve CSV destination; stdout otherwise.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write a table file usable as `pa.table`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// MSE after the coarse stage and each fine iteration.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Fine iterations to trace.
        #[arg(short, long, default_value_t = 5)]
        k: usize,
    },
}

fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad range `{spec}`"))
        })
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        bail!("range must be start:stop:step, got `{spec}`");
    };
    if step.is_nan() || step <= 0.0 || stop < start {
        bail!("range `{spec}` is empty or has a non-positive step");
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Writes CSV and sidecar to the configured path, or CSV to stdout.
fn emit(cfg: &ExperimentConfig, records: &[SweepRecord], extra: &str) -> Result<()> {
    let hash = cfg.hash()?;
    match &cfg.run.output {
        Some(path) => {
            write_output(path, records, &hash, cfg.run.seed, extra)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} records to {}", records.len(), path.display());
        }
        None => {
            write_records(io::stdout().lock(), records)?;
            eprintln!("config_sha256={hash} seed={} {extra}", cfg.run.seed);
        }
    }
    Ok(())
}

fn simulate(common: &Common) -> Result<()> {
    let cfg = common.load()?;
    let rec = run_experiment(&cfg)?;
    emit(&cfg, &[rec], &format!("workers={}", worker_count()))
}

fn sweep(
    common: &Common,
    axis: SweepAxis,
    values: &[f64],
    range: Option<&str>,
    methods: &[Method],
) -> Result<()> {
    let cfg = common.load()?;
    let values = match range {
        Some(r) => parse_range(r)?,
        None => values.to_vec(),
    };
    if values.is_empty() {
        bail!("sweep needs --values or --range");
    }
    let methods = if methods.is_empty() {
        vec![cfg.reconstruction.method]
    } else {
        methods.to_vec()
    };
    let mut records = Vec::new();
    for m in &methods {
        let mut c = cfg.clone();
        c.reconstruction.method = *m;
        records.extend(run_sweep(&c, axis, &values)?);
    }
    emit(
        &cfg,
        &records,
        &format!("axis={axis} workers={}", worker_count()),
    )
}

fn characterize(
    config: Option<&Path>,
    from: f64,
    to: f64,
    step: f64,
    output: Option<&Path>,
    table: Option<&Path>,
) -> Result<()> {
    if step.is_nan() || step <= 0.0 || to <= from {
        bail!("need from_dbm < to_dbm and a positive step");
    }
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let model = cfg.pa.build(cfg.base_dir.as_deref())?;
    let grid = dbm_grid(from, to, step);
    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "input_dbm,output_dbm,gain_db,phase_deg")?;
    for &d in &grid {
        let r = aptbm_core::pa::db_to_lin(d).sqrt();
        let y = model.am_am(r);
        writeln!(
            out,
            "{d},{},{},{}",
            lin_to_db(y * y),
            lin_to_db((y / r).powi(2)),
            model.am_pm(r).to_degrees()
        )?;
    }
    match input_saturation_power(&model) {
        Ok(p) => eprintln!("input saturation power: {p:.3} dBm"),
        Err(_) => eprintln!(
            "input saturation power: n/a for {} (using {} dBm)",
            model.kind(),
            cfg.pa.p_sat_dbm
        ),
    }
    if let Some(path) = table {
        let t = PaTable::from_model(&model, &grid)?;
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_pa_table(f, &t, Some(&format!("{} model", model.kind())))?;
        eprintln!("wrote table to {}", path.display());
    }
    Ok(())
}

fn convergence(common: &Common, k: usize) -> Result<()> {
    let mut cfg = common.load()?;
    cfg.reconstruction.method = Method::Proposed;
    cfg.reconstruction.k_iters = k;
    if cfg.run.output.is_some() {
        let rec = run_experiment(&cfg)?;
        return emit(&cfg, &[rec], &format!("k={k}"));
    }
    let trace = convergence_trace(&cfg, k)?;
    let mut out = io::stdout().lock();
    writeln!(out, "stage,mse")?;
    writeln!(out, "coarse,{}", trace[0])?;
    for (i, m) in trace[1..].iter().enumerate() {
        writeln!(out, "fine-{},{m}", i + 1)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        if v.trim().parse::<usize>().map_or(true, |n| n == 0) {
            bail!("{WORKERS_ENV} must be a positive integer, got `{v}`");
        }
    }
    match cli.command {
        Command::Simulate { common } => simulate(&common),
        Command::Sweep {
            common,
            axis,
            values,
            range,
            methods,
        } => sweep(&common, axis, &values, range.as_deref(), &methods),
        Command::PaCharacterize {
            config,
            from_dbm,
            to_dbm,
            step_db,
            output,
            table,
        } => characterize(
            config.as_deref(),
            from_dbm,
            to_dbm,
            step_db,
            output.as_deref(),
            table.as_deref(),
        ),
        Command::Convergence { common, k } => convergence(&common, k),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
