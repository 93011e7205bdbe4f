use aptbm_core::harness::{
    run_sweep_with_workers, ExperimentConfig, Method, PaKind, SweepAxis, SweepRecord,
};
use aptbm_core::pa::AmPmTable;
use aptbm_core::recon::{pc_baseline_reconstruct, CoarseConfig};
use aptbm_core::AptbmAlphabet;

fn sigma(r: &SweepRecord) -> f64 {
    let bits = r.trials as f64 * (r.mo as f64).log2();
    (r.ber.max(1.0 / bits) / bits).sqrt()
}

#[test]
fn ber_does_not_grow_with_back_off() {
    let ibo: Vec<f64> = (0..=20).step_by(2).map(f64::from).collect();
    for method in [Method::None, Method::Baseline, Method::Proposed] {
        let mut cfg = ExperimentConfig::default();
        cfg.run.trials = 20_000;
        cfg.channel.snr_db = 15.0;
        cfg.reconstruction.method = method;
        let recs = run_sweep_with_workers(&cfg, SweepAxis::Ibo, &ibo, 2).unwrap();
        for w in recs.windows(2) {
            let allowance = 3.0 * (sigma(&w[0]).powi(2) + sigma(&w[1]).powi(2)).sqrt();
            assert!(
                w[1].ber <= w[0].ber + allowance,
                "{method}: ber {} at {} dB vs {} at {} dB",
                w[1].ber,
                w[1].ibo_db,
                w[0].ber,
                w[0].ibo_db
            );
        }
    }
}

#[test]
fn second_fine_iteration_helps_and_third_is_marginal() {
    let mut cfg = ExperimentConfig::default();
    cfg.run.trials = 50_000;
    cfg.operating.ibo_db = Some(4.0);
    cfg.channel.snr_db = 14.0;
    let recs = run_sweep_with_workers(&cfg, SweepAxis::K, &[1.0, 2.0, 3.0], 2).unwrap();
    let (k1, k2, k3) = (&recs[0], &recs[1], &recs[2]);
    assert!(k1.bit_errors > 0, "operating point too clean to compare");
    let allowance = 3.0 * (sigma(k1).powi(2) + sigma(k2).powi(2)).sqrt();
    assert!(k2.ber <= k1.ber + allowance, "k1 {} k2 {}", k1.ber, k2.ber);
    let allowance = 3.0 * (sigma(k2).powi(2) + sigma(k3).powi(2)).sqrt();
    assert!(
        (k3.ber - k2.ber).abs() <= allowance,
        "k2 {} k3 {}",
        k2.ber,
        k3.ber
    );
}

#[test]
fn pc_baseline_is_transparent_on_clean_blocks() {
    let alpha = AptbmAlphabet::new(4, 4, 0.1).unwrap();
    let blocks: Vec<_> = alpha
        .blocks()
        .iter()
        .cycle()
        .take(10_000)
        .copied()
        .collect();
    let coarse = CoarseConfig::new(AmPmTable::constant(0.0), -13.0);
    let out = pc_baseline_reconstruct(&blocks, 0.1, &coarse, 1.0, 4).unwrap();
    for (x, y) in out.blocks.iter().zip(&blocks) {
        assert!(x.dist_sqr(y).sqrt() < 1e-6);
    }
}

#[test]
fn all_methods_run_through_a_linear_chain_with_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.pa.model = PaKind::IdealLinear;
    cfg.channel.snr_db = 12.0;
    cfg.run.trials = 5_000;
    for method in Method::ALL {
        cfg.reconstruction.method = method;
        let r = run_sweep_with_workers(&cfg, SweepAxis::Snr, &[12.0], 1)
            .unwrap()
            .remove(0);
        assert_eq!(r.trials, 5_000);
        assert!(r.bit_errors <= r.trials * 4);
        assert!(r.block_errors <= r.bit_errors && r.block_errors <= r.trials);
        assert!((r.ber - r.bit_errors as f64 / 20_000.0).abs() < 1e-15);
    }
}
