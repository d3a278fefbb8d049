use std::process::{Command, Output};

fn svyrsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svyrsq"))
        .args(args)
        .env_remove("SVYRSQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_csv(dir: &tempfile::TempDir, name: &str, body: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const ESOPH_CSV: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data/esoph_individual.csv");

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|r| r.starts_with(' ')))
        .unwrap_or_else(|| panic!("{key} missing from:\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

const OVERLAP: &str = "y,x,w\n0,-1.5,2\n0,-0.3,1\n1,-0.8,3\n1,0.4,1\n0,0.9,2\n1,1.7,1\n0,0.2,4\n1,2.2,1\n";

#[test]
fn esoph_weighted_fit_reports_design_value() {
    let o = svyrsq(&[
        "fit",
        "--data",
        ESOPH_CSV,
        "--formula",
        "y ~ C(agegp) + C(alcgp) + C(tobgp)",
        "--weights",
        "w",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let design = report_value(&text, "design_cs");
    assert_eq!(format!("{design:.4}"), "0.0005");
    assert!((report_value(&text, "design_nag") - 0.06).abs() < 0.005);
}

#[test]
fn unweighted_file_prints_equal_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "d.csv", OVERLAP);
    let o = svyrsq(&["fit", "--data", &path, "--formula", "y ~ x"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    assert_eq!(report_value(&t, "cox_snell"), report_value(&t, "design_cs"));
    assert_eq!(report_value(&t, "nagelkerke"), report_value(&t, "design_nag"));
}

#[test]
fn gaussian_family_has_no_nagelkerke() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "g.csv", "y,x\n1.2,0\n1.9,1\n3.2,2\n3.8,3\n5.3,4\n");
    let o = svyrsq(&[
        "fit",
        "--data",
        &path,
        "--formula",
        "y ~ x",
        "--family",
        "gaussian",
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["nagelkerke"].is_null());
    assert!(v["cox_snell"].as_f64().unwrap() > 0.9);
}

#[test]
fn negative_weight_exits_2_naming_weight() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "d.csv", &OVERLAP.replace("0,-0.3,1", "0,-0.3,-1"));
    let o = svyrsq(&["fit", "--data", &path, "--formula", "y ~ x", "--weights", "w"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("weight"), "{}", stderr(&o));
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "d.csv", OVERLAP);
    for formula in ["y ~ nope", "y ~ C(x", "y x"] {
        let o = svyrsq(&["fit", "--data", &path, "--formula", formula]);
        assert_eq!(o.status.code(), Some(2), "{formula}");
    }
    let o = svyrsq(&["fit", "--data", "/nonexistent.csv", "--formula", "y ~ x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = svyrsq(&["replicate", "table9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = svyrsq(&["simulate", "--replicates", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn separation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "s.csv", "y,x\n0,-2\n0,-1\n0,-0.5\n1,0.5\n1,1\n1,2\n");
    let o = svyrsq(&["fit", "--data", &path, "--formula", "y ~ x"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("separation"), "{}", stderr(&o));
}

#[test]
fn unconverged_fit_warns_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_csv(&dir, "d.csv", OVERLAP);
    let o = svyrsq(&["fit", "--data", &path, "--formula", "y ~ x", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("did not converge"));
    assert!(stdout(&o).contains("converged       false"));
}

#[test]
fn default_simulation_has_table_shape() {
    let o = svyrsq(&["simulate", "--replicates", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(
        lines[0],
        "design\tsampling_fraction\tnaive_cs\tdesign_cs\tnaive_nag\tdesign_nag\t\
         mc_se_naive_cs\tmc_se_design_cs\tmc_se_naive_nag\tmc_se_design_nag\tfailures"
    );
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "case_control_m1",
            "case_control_m2",
            "case_control_m5",
            "case_control_m10",
            "case_control_m20",
            "population"
        ]
    );
}

#[test]
fn null_signal_simulation_is_near_zero() {
    let o = svyrsq(&["simulate", "--coef", "-6,0", "--replicates", "5", "--ratios", "1,5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for line in stdout(&o).lines().skip(1) {
        let cols: Vec<f64> = line.split('\t').skip(2).take(4).map(|v| v.parse().unwrap()).collect();
        assert!(cols.iter().all(|v| *v < 0.05), "{line}");
    }
}

#[test]
fn seed_flag_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let args = [
        "simulate",
        "--replicates",
        "1",
        "--seed",
        "42",
        "--ratios",
        "1,2",
        "--format",
        "json",
    ];
    let a = svyrsq(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert!(svyrsq(&with_out).status.success());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
    let other = svyrsq(&[
        "simulate",
        "--replicates",
        "1",
        "--seed",
        "43",
        "--ratios",
        "1,2",
        "--format",
        "json",
    ]);
    assert_ne!(other.stdout, a.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_svyrsq"))
        .args(["simulate", "--single-draw"])
        .env("SVYRSQ_SEED", "not-a-seed")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn replicate_esoph_prints_published_comparison() {
    let o = svyrsq(&["replicate", "esoph"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.contains("# published comparison"));
    assert!(t.contains("main_effects\tdesign_cs\t"));
    let o = svyrsq(&["replicate", "esoph", "--counting", "corrected", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["results"][0]["n"], 975);
}

#[test]
fn export_matches_shipped_file() {
    let o = svyrsq(&["export-esoph"]);
    assert!(o.status.success());
    assert_eq!(o.stdout, std::fs::read(ESOPH_CSV).unwrap());
}
