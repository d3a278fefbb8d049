use num_rational::Ratio;
use proptest::prelude::*;
use svyrsq::sampling::{
    draw_case_control, draw_srs, draw_two_phase_balanced, generate_population, DesignKind, DesignSample,
};
use svyrsq::Population;

fn population(size: usize, intercept: f64, seed: u64) -> Population<f64> {
    generate_population(size, &[intercept, 1.0], seed).unwrap()
}

fn check_common(s: &DesignSample) -> Result<(), TestCaseError> {
    let one = Ratio::from_integer(1u64);
    for (w, p) in s.exact_weights().iter().zip(&s.inclusion) {
        prop_assert_eq!(*w * *p, one);
        prop_assert!(*p > Ratio::from_integer(0) && *p <= one);
    }
    prop_assert!(s.rows.windows(2).all(|r| r[0] < r[1]), "rows distinct and sorted");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn srs_weights_reconstruct_population(size in 50usize..2000, frac in 0.01f64..1.0, seed in any::<u64>()) {
        let pop = population(size, -1.0, seed);
        prop_assume!(!pop.is_degenerate());
        let n = ((size as f64 * frac) as usize).max(1);
        let s = draw_srs(&pop, n, seed ^ 1).unwrap();
        check_common(&s)?;
        prop_assert_eq!(s.len(), n);
        prop_assert_eq!(s.exact_weight_sum(), Ratio::from_integer(size as u64));
    }

    #[test]
    fn case_control_keeps_every_case(size in 200usize..3000, ratio in 1usize..4, seed in any::<u64>()) {
        let pop = population(size, -3.0, seed);
        prop_assume!(!pop.is_degenerate() && ratio * pop.case_count() <= pop.control_count());
        let s = draw_case_control(&pop, ratio, seed ^ 2).unwrap();
        check_common(&s)?;
        prop_assert_eq!(s.design, DesignKind::CaseControl);
        let cases: Vec<usize> = (0..size).filter(|&i| pop.y()[i] == 1.0).collect();
        for c in &cases {
            let k = s.rows.binary_search(c);
            prop_assert!(k.is_ok(), "case {} missing", c);
            prop_assert_eq!(s.inclusion[k.unwrap()], Ratio::from_integer(1));
        }
        prop_assert_eq!(s.len(), cases.len() * (ratio + 1));
        let want = Ratio::from_integer((pop.case_count() + pop.control_count()) as u64);
        prop_assert_eq!(s.exact_weight_sum(), want);
    }

    #[test]
    fn two_phase_weights_reconstruct_cells(size in 200usize..2000, per_cell in 1usize..40, seed in any::<u64>()) {
        let pop = population(size, -1.5, seed);
        prop_assume!(!pop.is_degenerate());
        let cell = |i: usize| 2 * usize::from(pop.y()[i] == 1.0) + usize::from(pop.x().get(i, 0) > 0.0);
        let mut sizes = [0usize; 4];
        for i in 0..size {
            sizes[cell(i)] += 1;
        }
        prop_assume!(sizes.iter().all(|s| *s >= per_cell));
        let s = draw_two_phase_balanced(&pop, cell, per_cell, seed ^ 3).unwrap();
        check_common(&s)?;
        prop_assert_eq!(s.len(), 4 * per_cell);
        prop_assert_eq!(s.exact_weight_sum(), Ratio::from_integer(size as u64));
    }

    #[test]
    fn draws_are_deterministic(seed in any::<u64>()) {
        let pop = population(800, -2.0, seed);
        prop_assume!(!pop.is_degenerate() && pop.case_count() <= pop.control_count());
        let a = draw_case_control(&pop, 1, seed).unwrap();
        let b = draw_case_control(&pop, 1, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&pop, &mut ca).unwrap();
        b.write_csv(&pop, &mut cb).unwrap();
        prop_assert_eq!(ca, cb);
    }
}

#[test]
fn srs_total_estimator_is_unbiased() {
    let pop = population(5_000, -1.0, 99);
    let truth = pop.case_count() as f64;
    let reps = 1000;
    let estimates: Vec<f64> = (0..reps)
        .map(|r| {
            let s = draw_srs(&pop, 250, 1_000 + r).unwrap();
            let w = s.weights::<f64>();
            s.rows.iter().zip(&w).map(|(i, w)| w * pop.y()[*i]).sum()
        })
        .collect();
    let mean = estimates.iter().sum::<f64>() / reps as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!((mean - truth).abs() < 4.0 * se, "mean {mean} truth {truth} se {se}");
}

#[test]
fn degenerate_population_is_refused() {
    let pop = generate_population::<f64>(300, &[50.0, 0.0], 4).unwrap();
    assert!(draw_srs(&pop, 10, 1).is_err());
    assert!(draw_case_control(&pop, 1, 1).is_err());
}
