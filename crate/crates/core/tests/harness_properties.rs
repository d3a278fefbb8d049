use svyrsq::harness::{
    replicate_esoph, replicate_table2, replicate_two_phase, EsophOptions, ExperimentConfig, TwoPhaseConfig,
};
use svyrsq::rng::mix;
use svyrsq::sampling::draw_case_control;
use svyrsq::{fit_logistic, RsqSummary, SolverOptions};

fn rare_outcome() -> ExperimentConfig {
    ExperimentConfig {
        pop_size: 30_000,
        gen_coef: vec![-5.0, 1.0],
        replicates: 200,
        base_seed: 77,
        ..ExperimentConfig::default()
    }
}

#[test]
fn naive_nagelkerke_exceeds_design_and_decays() {
    let t = replicate_table2::<f64>(&rare_outcome()).unwrap();
    let ratios: Vec<_> = t.rows.iter().filter(|r| r.ratio.is_some()).collect();
    for r in &ratios {
        assert_eq!(r.replicates + r.failures, 200);
        assert!(r.naive_nag.unwrap().mean > r.design_nag.mean, "{}", r.design);
    }
    for pair in ratios.windows(2) {
        let (a, b) = (pair[0].naive_cs.unwrap(), pair[1].naive_cs.unwrap());
        let slack = 2.0 * (a.mc_se.powi(2) + b.mc_se.powi(2)).sqrt();
        assert!(b.mean <= a.mean + slack, "{} -> {}", pair[0].design, pair[1].design);
    }
}

#[test]
fn per_replicate_design_cs_ignores_weight_scale() {
    let cfg = rare_outcome();
    let pop = cfg.population::<f64>().unwrap();
    let formula = pop.full_formula();
    for r in 0..10 {
        let s = draw_case_control(&pop, 2, mix(cfg.base_seed, "scale", r)).unwrap();
        let d = s.dataset(&pop, &formula, true).unwrap();
        let scaled = d.with_weights(d.weights().iter().map(|w| w * 0.37).collect()).unwrap();
        let a = RsqSummary::from_fit(&fit_logistic(&d, &SolverOptions::default()).unwrap()).unwrap();
        let b = RsqSummary::from_fit(&fit_logistic(&scaled, &SolverOptions::default()).unwrap()).unwrap();
        assert!((a.design_cox_snell - b.design_cox_snell).abs() < 1e-10);
    }
}

#[test]
fn no_signal_gives_near_zero_everywhere() {
    let cfg = ExperimentConfig {
        pop_size: 20_000,
        gen_coef: vec![-3.0, 0.0],
        ratios: vec![1, 5],
        replicates: 20,
        ..ExperimentConfig::default()
    };
    let t = replicate_table2::<f64>(&cfg).unwrap();
    for r in &t.rows {
        assert!(r.design_cs.mean < 1e-3, "{}", r.design);
        assert!(r.naive_cs.unwrap().mean < 1e-2, "{}", r.design);
    }
}

#[test]
fn esoph_unweighted_mode_equals_naive() {
    let rows = replicate_esoph::<f64>(&EsophOptions {
        control_weight: None,
        ..EsophOptions::default()
    })
    .unwrap();
    for r in rows {
        assert!((r.design_cs - r.naive_cs).abs() < 1e-12);
        assert!((r.design_nag - r.naive_nag).abs() < 1e-12);
    }
}

#[test]
fn two_phase_accounts_for_every_replicate() {
    let t = replicate_two_phase::<f64>(&TwoPhaseConfig {
        replicates: 30,
        ..TwoPhaseConfig::default()
    })
    .unwrap();
    assert_eq!(t.rows.len(), 3);
    for r in &t.rows[1..] {
        assert_eq!(r.replicates + r.failures, 30);
    }
    assert!(t.row("two_phase").unwrap().naive_cs.is_none());
}
