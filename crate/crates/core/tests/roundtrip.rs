mod common;

use svyrsq::esoph::{self, ControlCounting};
use svyrsq::sampling::{draw_case_control, generate_population};
use svyrsq::{fit_logistic, Formula, Frame, SolverOptions};

#[test]
fn sample_csv_round_trip_gives_same_fit() {
    let pop = generate_population::<f64>(20_000, &[-4.0, 1.0, -0.5], 5).unwrap();
    let sample = draw_case_control(&pop, 3, 6).unwrap();
    let formula = pop.full_formula();
    let direct = fit_logistic(
        &sample.dataset(&pop, &formula, true).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();

    let mut csv = Vec::new();
    sample.write_csv(&pop, &mut csv).unwrap();
    let frame = Frame::<f64>::read_csv(csv.as_slice()).unwrap();
    let reread = fit_logistic(
        &formula.dataset(&frame, Some("weight")).unwrap(),
        &SolverOptions::default(),
    )
    .unwrap();
    for (a, b) in direct.coef.iter().zip(&reread.coef) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    assert_eq!(direct.loglik, reread.loglik);
}

#[test]
fn frame_round_trip_is_exact() {
    let mut rng = common::rng(8);
    let x = common::normal_matrix(&mut rng, 40, 3);
    let mut frame = Frame::<f64>::new(40);
    for j in 0..3 {
        frame.push_numeric(format!("x{j}"), x.column(j)).unwrap();
    }
    frame.push_numeric("tiny", vec![1e-300; 40]).unwrap();
    let mut out = Vec::new();
    frame.write_csv(&mut out).unwrap();
    let back = Frame::<f64>::read_csv(out.as_slice()).unwrap();
    assert_eq!(back, frame);
}

#[test]
fn expanded_esoph_csv_round_trips() {
    let frame = esoph::expand::<f64>(&esoph::bundled_groups(), ControlCounting::Legacy, Some(440.0));
    let mut out = Vec::new();
    frame.write_csv(&mut out).unwrap();
    let back = Frame::<f64>::read_csv(out.as_slice()).unwrap();
    let f: Formula = esoph::main_effects_formula();
    let a = fit_logistic(&f.dataset(&frame, Some("w")).unwrap(), &SolverOptions::default()).unwrap();
    let b = fit_logistic(&f.dataset(&back, Some("w")).unwrap(), &SolverOptions::default()).unwrap();
    assert_eq!(a.coef, b.coef);
}

#[test]
fn shipped_individual_file_matches_expansion() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/esoph_individual.csv");
    let shipped = Frame::<f64>::read_path(path).unwrap();
    let expanded = esoph::expand::<f64>(&esoph::bundled_groups(), ControlCounting::Legacy, Some(440.0));
    assert_eq!(shipped, expanded);
}
