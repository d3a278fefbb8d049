//! `svyrsq` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure writing output, 2 bad input or
//! flags, 3 model fit failure (separation, singular design, no
//! convergence).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use svyrsq::esoph::{self, ControlCounting};
use svyrsq::harness::{
    self, ComparisonTable, EsophOptions, EsophRow, ExperimentConfig, HeuristicFactor, TwoPhaseConfig, DEFAULT_SEED,
};
use svyrsq::report::{self, published, Num17};
use svyrsq::{fit, Family, FitResult, Formula, Frame, RsqSummary, SolverOptions};

const SEED_ENV: &str = "SVYRSQ_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "svyrsq",
    version,
    about = "Design-based pseudo-R² for survey and case-control data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file and report coefficients and pseudo-R².
    Fit(FitArgs),
    /// Run a sampling simulation and print the comparison table.
    Simulate(SimulateArgs),
    /// Rerun a reference experiment and compare it with published values.
    Replicate(ReplicateArgs),
    /// Write the bundled oesophageal cancer data as one row per person.
    ExportEsoph(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Logistic,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Tsv,
    Json,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Model formula, e.g. `y ~ x1 + C(group) + spline(age; 50,65) + a:b`.
    #[arg(long)]
    formula: String,
    /// Column holding sampling weights (inverse inclusion probabilities).
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, value_enum, default_value = "logistic")]
    family: FamilyArg,
    /// Print JSON instead of the text report.
    #[arg(long)]
    json: bool,
    /// Convergence tolerance on the score and the loglikelihood change.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// Base seed; defaults to $SVYRSQ_SEED, then 2017.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DesignArg {
    Cc,
    TwoPhase,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "cc")]
    design: DesignArg,
    /// Population (or cohort) size; defaults to 100000 for cc and 4000 for two-phase.
    #[arg(long)]
    pop_size: Option<usize>,
    /// Generating coefficients, intercept first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coef: Option<Vec<f64>>,
    /// Controls per case.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20")]
    ratios: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    /// One sample per ratio instead of replicated draws.
    #[arg(long)]
    single_draw: bool,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, value_enum, default_value = "tsv")]
    format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Table2,
    Esoph,
    Heuristic,
    TwoPhase,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CountingArg {
    Legacy,
    Corrected,
}

impl From<CountingArg> for ControlCounting {
    fn from(c: CountingArg) -> Self {
        match c {
            CountingArg::Legacy => ControlCounting::Legacy,
            CountingArg::Corrected => ControlCounting::Corrected,
        }
    }
}

#[derive(Debug, Args)]
struct ReplicateArgs {
    #[arg(value_enum)]
    target: Target,
    #[command(flatten)]
    seed: SeedArg,
    /// Replicates per design (table2, two-phase).
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long)]
    single_draw: bool,
    /// Controls per case for the heuristic check.
    #[arg(long, default_value_t = 1)]
    ratio: usize,
    /// How the bundled oesophageal table counts controls.
    #[arg(long, value_enum, default_value = "legacy")]
    counting: CountingArg,
    #[arg(long, default_value_t = esoph::DEFAULT_CONTROL_WEIGHT)]
    control_weight: f64,
    #[arg(long, value_enum, default_value = "tsv")]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, value_enum, default_value = "legacy")]
    counting: CountingArg,
    #[arg(long, default_value_t = esoph::DEFAULT_CONTROL_WEIGHT)]
    control_weight: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<svyrsq::Error> for Failure {
    fn from(e: svyrsq::Error) -> Self {
        Self {
            code: if e.is_fit_failure() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

fn lib_err<E: Into<svyrsq::Error>>(e: E) -> Failure {
    Failure::from(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Replicate(a) => cmd_replicate(&a),
        Command::ExportEsoph(a) => cmd_export(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_seed(arg: &SeedArg) -> Result<u64, Failure> {
    if let Some(s) = arg.seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("{SEED_ENV}={v:?} is not an unsigned integer seed"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure {
            code: 1,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fmt(v: f64) -> String {
    report::fmt_num(v)
}

fn opt_fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt)
}

#[derive(Serialize)]
struct CoefRecord<'a> {
    name: &'a str,
    estimate: Num17,
}

#[derive(Serialize)]
struct FitRecord<'a> {
    family: Family,
    n: usize,
    weight_sum: Num17,
    converged: bool,
    iterations: usize,
    loglik: Num17,
    null_loglik: Num17,
    max_score_norm: Num17,
    coefficients: Vec<CoefRecord<'a>>,
    cox_snell: Option<Num17>,
    nagelkerke: Option<Num17>,
    design_cs: Option<Num17>,
    design_nag: Option<Num17>,
}

fn cmd_fit(a: &FitArgs) -> Result<(), Failure> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(Failure::usage("--tol must be positive"));
    }
    if a.max_iter == 0 {
        return Err(Failure::usage("--max-iter must be at least 1"));
    }
    let formula: Formula = a.formula.parse().map_err(lib_err)?;
    let frame = Frame::<f64>::read_path(&a.data).map_err(lib_err)?;
    let design = formula.design(&frame).map_err(lib_err)?;
    let data = formula.dataset(&frame, a.weights.as_deref()).map_err(lib_err)?;
    let family = match a.family {
        FamilyArg::Logistic => Family::Logistic,
        FamilyArg::Gaussian => Family::GaussianMle,
    };
    let opts = SolverOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        ..SolverOptions::default()
    };
    let fitted = fit(&data, family, &opts).map_err(lib_err)?;
    let names: Vec<String> = std::iter::once("(Intercept)".to_string())
        .chain(design.names.iter().cloned())
        .collect();

    let rsq = RsqSummary::from_fit(&fitted);
    if !fitted.converged {
        eprintln!(
            "warning: fit did not converge after {} iterations (score norm {})",
            fitted.iterations,
            fmt(fitted.max_score_norm)
        );
    }
    let summary = rsq.as_ref().ok();
    let text = if a.json {
        fit_json(&fitted, &names, summary)
    } else {
        fit_text(&fitted, &names, summary)
    };
    print!("{text}");
    match rsq {
        Ok(_) => Ok(()),
        Err(e) => Err(lib_err(e)),
    }
}

fn fit_json(f: &FitResult<f64>, names: &[String], rsq: Option<&RsqSummary<f64>>) -> String {
    let rec = FitRecord {
        family: f.family,
        n: f.n,
        weight_sum: Num17(f.weight_sum),
        converged: f.converged,
        iterations: f.iterations,
        loglik: Num17(f.loglik),
        null_loglik: Num17(f.null_loglik),
        max_score_norm: Num17(f.max_score_norm),
        coefficients: names
            .iter()
            .zip(&f.coef)
            .map(|(n, c)| CoefRecord {
                name: n,
                estimate: Num17(*c),
            })
            .collect(),
        cox_snell: rsq.map(|r| Num17(r.cox_snell)),
        nagelkerke: rsq.and_then(|r| r.nagelkerke).map(Num17),
        design_cs: rsq.map(|r| Num17(r.design_cox_snell)),
        design_nag: rsq.and_then(|r| r.design_nagelkerke).map(Num17),
    };
    let mut s = serde_json::to_string_pretty(&rec).expect("record serialises");
    s.push('\n');
    s
}

fn fit_text(f: &FitResult<f64>, names: &[String], rsq: Option<&RsqSummary<f64>>) -> String {
    let width = names.iter().map(String::len).max().unwrap_or(0).max(14);
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k:<width$}  {v}");
    };
    line("family", f.family.to_string());
    line("n", f.n.to_string());
    line("weight_sum", fmt(f.weight_sum));
    line("converged", f.converged.to_string());
    line("iterations", f.iterations.to_string());
    line("loglik", fmt(f.loglik));
    line("null_loglik", fmt(f.null_loglik));
    line("max_score_norm", fmt(f.max_score_norm));
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<width$}  estimate", "coefficient");
    for (n, c) in names.iter().zip(&f.coef) {
        let _ = writeln!(s, "{n:<width$}  {}", fmt(*c));
    }
    let _ = writeln!(s);
    if let Some(r) = rsq {
        for (k, v) in [
            ("cox_snell", Some(r.cox_snell)),
            ("nagelkerke", r.nagelkerke),
            ("design_cs", Some(r.design_cox_snell)),
            ("design_nag", r.design_nagelkerke),
        ] {
            let _ = writeln!(s, "{k:<width$}  {}", opt_fmt(v));
        }
    }
    s
}

fn table_text(table: &ComparisonTable<f64>, format: OutputFormat) -> String {
    match format {
        OutputFormat::Tsv => {
            let mut buf = Vec::new();
            report::write_comparison_tsv(table, &mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("utf-8 output")
        }
        OutputFormat::Json => report::comparison_json(table) + "\n",
    }
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let seed = resolve_seed(&a.seed)?;
    let table = match a.design {
        DesignArg::Cc => {
            let defaults = ExperimentConfig::default();
            let cfg = ExperimentConfig {
                pop_size: a.pop_size.unwrap_or(defaults.pop_size),
                gen_coef: a.coef.clone().unwrap_or(defaults.gen_coef),
                ratios: a.ratios.clone(),
                replicates: a.replicates,
                base_seed: seed,
                formula: None,
                single_draw: a.single_draw,
            };
            harness::replicate_table2::<f64>(&cfg)
        }
        DesignArg::TwoPhase => {
            let defaults = TwoPhaseConfig::default();
            let cfg = TwoPhaseConfig {
                cohort_size: a.pop_size.unwrap_or(defaults.cohort_size),
                gen_coef: a.coef.clone().unwrap_or(defaults.gen_coef),
                replicates: if a.single_draw { 1 } else { a.replicates },
                base_seed: seed,
                ..defaults
            };
            harness::replicate_two_phase::<f64>(&cfg)
        }
    }
    .map_err(Failure::from)?;
    emit(&table_text(&table, a.format), a.out.as_ref())
}

/// One line of a side-by-side comparison with published figures.
#[derive(Serialize)]
struct Comparison {
    row: String,
    statistic: &'static str,
    value: Num17,
    mc_se: Num17,
    published: Num17,
    abs_diff: Num17,
}

fn comparison_text(items: &[Comparison]) -> String {
    let mut s = String::from("row\tstatistic\tvalue\tmc_se\tpublished\tabs_diff\n");
    for c in items {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.row,
            c.statistic,
            fmt(c.value.0),
            fmt(c.mc_se.0),
            fmt(c.published.0),
            fmt(c.abs_diff.0)
        );
    }
    s
}

fn comparison(row: &str, statistic: &'static str, value: f64, mc_se: f64, published: f64) -> Comparison {
    Comparison {
        row: row.to_string(),
        statistic,
        value: Num17(value),
        mc_se: Num17(mc_se),
        published: Num17(published),
        abs_diff: Num17((value - published).abs()),
    }
}

const STATS: [&str; 4] = ["naive_cs", "design_cs", "naive_nag", "design_nag"];

fn row_stats(r: &harness::ComparisonRow<f64>) -> [(f64, f64); 4] {
    let pick = |e: Option<harness::Estimate<f64>>| e.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.mc_se));
    [
        pick(r.naive_cs),
        pick(Some(r.design_cs)),
        pick(r.naive_nag),
        pick(Some(r.design_nag)),
    ]
}

fn table2_comparison(table: &ComparisonTable<f64>) -> Vec<Comparison> {
    let mut out = Vec::new();
    for (ratio, _, ncs, dcs, nnag, dnag) in published::CASE_CONTROL_ROWS {
        let name = format!("case_control_m{ratio}");
        if let Some(r) = table.row(&name) {
            for ((stat, (v, se)), p) in STATS.iter().zip(row_stats(r)).zip([ncs, dcs, nnag, dnag]) {
                out.push(comparison(&name, stat, v, se, p));
            }
        }
    }
    let (pcs, pnag) = published::CASE_CONTROL_POPULATION;
    out.push(comparison("population", "cox_snell", table.census.cox_snell, 0.0, pcs));
    out.push(comparison(
        "population",
        "nagelkerke",
        table.census.nagelkerke.unwrap_or(f64::NAN),
        0.0,
        pnag,
    ));
    out.push(comparison(
        "population",
        "cases",
        table.case_count as f64,
        0.0,
        published::CASE_CONTROL_CASES as f64,
    ));
    out
}

fn esoph_comparison(rows: &[EsophRow<f64>]) -> Vec<Comparison> {
    let mut out = Vec::new();
    for (model, vals) in published::ESOPH_ROWS {
        if let Some(r) = rows.iter().find(|r| r.model == model) {
            for ((stat, v), p) in STATS
                .iter()
                .zip([r.naive_cs, r.design_cs, r.naive_nag, r.design_nag])
                .zip(vals)
            {
                out.push(comparison(r.model, stat, v, f64::NAN, p));
            }
        }
    }
    out
}

fn two_phase_comparison(table: &ComparisonTable<f64>) -> Vec<Comparison> {
    let mut out = Vec::new();
    // published order: design_cs, naive_cs, design_nag, naive_nag
    for (name, vals) in published::TWO_PHASE_ROWS {
        let Some(r) = table.row(name) else { continue };
        let stats = row_stats(r);
        let pubs = [vals[1], vals[0], vals[3], vals[2]];
        for ((stat, (v, se)), p) in STATS.iter().zip(stats).zip(pubs) {
            if let Some(p) = p {
                out.push(comparison(name, stat, v, se, p));
            }
        }
    }
    out
}

fn render(format: OutputFormat, title: &str, body_tsv: String, body_json: String, cmp: &[Comparison]) -> String {
    match format {
        OutputFormat::Tsv => format!(
            "# {title}\n{body_tsv}\n# published comparison\n{}",
            comparison_text(cmp)
        ),
        OutputFormat::Json => {
            let body: Box<serde_json::value::RawValue> =
                serde_json::value::RawValue::from_string(body_json).expect("valid JSON body");
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "experiment": title,
                "results": body,
                "published_comparison": cmp,
            }))
            .expect("serialises");
            s.push('\n');
            s
        }
    }
}

fn cmd_replicate(a: &ReplicateArgs) -> Result<(), Failure> {
    let seed = resolve_seed(&a.seed)?;
    let text = match a.target {
        Target::Table2 => {
            let cfg = ExperimentConfig {
                replicates: a.replicates,
                base_seed: seed,
                single_draw: a.single_draw,
                ..ExperimentConfig::default()
            };
            let table = harness::replicate_table2::<f64>(&cfg)?;
            render(
                a.format,
                "table2",
                table_text(&table, OutputFormat::Tsv),
                report::comparison_json(&table),
                &table2_comparison(&table),
            )
        }
        Target::Esoph => {
            if !(a.control_weight > 0.0 && a.control_weight.is_finite()) {
                return Err(Failure::usage("--control-weight must be a positive weight"));
            }
            let opts = EsophOptions {
                control_weight: Some(a.control_weight),
                counting: a.counting.into(),
                groups: None,
            };
            let rows = harness::replicate_esoph::<f64>(&opts)?;
            let mut tsv = Vec::new();
            report::write_esoph_tsv(&rows, &mut tsv).expect("writing to memory");
            render(
                a.format,
                "esoph",
                String::from_utf8(tsv).expect("utf-8 output"),
                report::esoph_json(&rows),
                &esoph_comparison(&rows),
            )
        }
        Target::Heuristic => {
            if a.ratio == 0 {
                return Err(Failure::usage("--ratio must be positive"));
            }
            let cfg = ExperimentConfig {
                base_seed: seed,
                ..ExperimentConfig::default()
            };
            let (sample, census) = harness::seeded_heuristic::<f64>(&cfg, a.ratio)?;
            let label = format!("case_control_m{}", a.ratio);
            heuristic_output(a.format, &[(&label, sample), ("whole_population", census)])
        }
        Target::TwoPhase => {
            let cfg = TwoPhaseConfig {
                replicates: if a.single_draw { 1 } else { a.replicates },
                base_seed: seed,
                ..TwoPhaseConfig::default()
            };
            let table = harness::replicate_two_phase::<f64>(&cfg)?;
            render(
                a.format,
                "two-phase",
                table_text(&table, OutputFormat::Tsv),
                report::comparison_json(&table),
                &two_phase_comparison(&table),
            )
        }
    };
    emit(&text, a.out.as_ref())
}

fn heuristic_output(format: OutputFormat, items: &[(&str, HeuristicFactor<f64>)]) -> String {
    match format {
        OutputFormat::Tsv => {
            let mut s = String::from("label\tlhs\trhs\tratio\tcensus_cs\tsample_cs\n");
            for (label, h) in items {
                let _ = writeln!(
                    s,
                    "{label}\t{}\t{}\t{}\t{}\t{}",
                    fmt(h.lhs),
                    fmt(h.rhs),
                    fmt(h.ratio()),
                    fmt(h.census_cs),
                    fmt(h.sample_cs)
                );
            }
            s
        }
        OutputFormat::Json => report::heuristic_json(items) + "\n",
    }
}

fn cmd_export(a: &ExportArgs) -> Result<(), Failure> {
    if !(a.control_weight > 0.0 && a.control_weight.is_finite()) {
        return Err(Failure::usage("--control-weight must be a positive weight"));
    }
    let frame = esoph::expand::<f64>(&esoph::bundled_groups(), a.counting.into(), Some(a.control_weight));
    let mut buf = Vec::new();
    frame.write_csv(&mut buf).map_err(lib_err)?;
    emit(&String::from_utf8(buf).expect("utf-8 output"), a.out.as_ref())
}
