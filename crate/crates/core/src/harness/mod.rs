//! Seeded Monte Carlo experiments, sweeps and their CSV output.
//!
//! Blocks are processed in frames. Each frame draws data and noise from its
//! own ChaCha stream keyed by the point seed and the frame index, and
//! frame tallies are summed in frame order, so results are identical for
//! any worker count.

mod config;
mod experiment;
mod output;

pub use config::{
    ChannelSection, ExperimentConfig, Method, ModulationSection, OperatingSection, PaKind,
    PaSection, ReconSection, Resolved, RunSection, WaveformSection,
};
pub use experiment::{
    censored_ber, convergence_trace, frame_rng, ibo_at_target, pae_report, point_seed,
    run_experiment, run_experiment_with_workers, run_sweep, run_sweep_with_workers, worker_count,
    PaeReport, SweepAxis, WORKERS_ENV,
};
pub use output::{
    meta_line, meta_path, read_meta, read_records, records_to_csv, write_output, write_records,
    SweepRecord, CSV_HEADER,
};
