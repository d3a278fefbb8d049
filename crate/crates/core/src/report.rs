//! Tabular output for harness results: TSV, and JSON records with numbers
//! at 17 significant digits.

use std::io::{self, Write};

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::harness::{ComparisonRow, ComparisonTable, EsophRow, Estimate, HeuristicFactor};
use crate::scalar::Scalar;

pub const TSV_COLUMNS: [&str; 11] = [
    "design",
    "sampling_fraction",
    "naive_cs",
    "design_cs",
    "naive_nag",
    "design_nag",
    "mc_se_naive_cs",
    "mc_se_design_cs",
    "mc_se_naive_nag",
    "mc_se_design_nag",
    "failures",
];

/// A float that serialises to JSON with 17 significant digits, or `null`
/// when not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num17(pub f64);

impl Serialize for Num17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

fn num<T: Scalar>(v: T) -> Num17 {
    Num17(v.to_f64_lossy())
}

/// Shortest round-trip text for a finite value, `NA` otherwise.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NA".to_string()
    }
}

fn opt_mean<T: Scalar>(e: &Option<Estimate<T>>) -> f64 {
    e.map_or(f64::NAN, |e| e.mean.to_f64_lossy())
}

fn opt_se<T: Scalar>(e: &Option<Estimate<T>>) -> f64 {
    e.map_or(f64::NAN, |e| e.mc_se.to_f64_lossy())
}

fn row_values<T: Scalar>(r: &ComparisonRow<T>) -> [f64; 9] {
    [
        r.sampling_fraction,
        opt_mean(&r.naive_cs),
        r.design_cs.mean.to_f64_lossy(),
        opt_mean(&r.naive_nag),
        r.design_nag.mean.to_f64_lossy(),
        opt_se(&r.naive_cs),
        r.design_cs.mc_se.to_f64_lossy(),
        opt_se(&r.naive_nag),
        r.design_nag.mc_se.to_f64_lossy(),
    ]
}

pub fn write_comparison_tsv<T: Scalar, W: Write>(table: &ComparisonTable<T>, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", TSV_COLUMNS.join("\t"))?;
    for r in &table.rows {
        let vals: Vec<String> = row_values(r).iter().map(|v| fmt_num(*v)).collect();
        writeln!(out, "{}\t{}\t{}", r.design, vals.join("\t"), r.failures)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RowRecord<'a> {
    design: &'a str,
    ratio: Option<usize>,
    sampling_fraction: Num17,
    naive_cs: Num17,
    design_cs: Num17,
    naive_nag: Num17,
    design_nag: Num17,
    mc_se_naive_cs: Num17,
    mc_se_design_cs: Num17,
    mc_se_naive_nag: Num17,
    mc_se_design_nag: Num17,
    replicates: usize,
    failures: usize,
}

pub fn comparison_json<T: Scalar>(table: &ComparisonTable<T>) -> String {
    let records: Vec<RowRecord> = table
        .rows
        .iter()
        .map(|r| {
            let v = row_values(r).map(Num17);
            RowRecord {
                design: &r.design,
                ratio: r.ratio,
                sampling_fraction: v[0],
                naive_cs: v[1],
                design_cs: v[2],
                naive_nag: v[3],
                design_nag: v[4],
                mc_se_naive_cs: v[5],
                mc_se_design_cs: v[6],
                mc_se_naive_nag: v[7],
                mc_se_design_nag: v[8],
                replicates: r.replicates,
                failures: r.failures,
            }
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("records serialise")
}

pub fn write_esoph_tsv<T: Scalar, W: Write>(rows: &[EsophRow<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "model\tnaive_cs\tdesign_cs\tnaive_nag\tdesign_nag\tn\tweight_sum")?;
    for r in rows {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.model,
            fmt_num(r.naive_cs.to_f64_lossy()),
            fmt_num(r.design_cs.to_f64_lossy()),
            fmt_num(r.naive_nag.to_f64_lossy()),
            fmt_num(r.design_nag.to_f64_lossy()),
            r.n,
            fmt_num(r.weight_sum.to_f64_lossy()),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EsophRecord {
    model: &'static str,
    naive_cs: Num17,
    design_cs: Num17,
    naive_nag: Num17,
    design_nag: Num17,
    n: usize,
    weight_sum: Num17,
}

pub fn esoph_json<T: Scalar>(rows: &[EsophRow<T>]) -> String {
    let records: Vec<EsophRecord> = rows
        .iter()
        .map(|r| EsophRecord {
            model: r.model,
            naive_cs: num(r.naive_cs),
            design_cs: num(r.design_cs),
            naive_nag: num(r.naive_nag),
            design_nag: num(r.design_nag),
            n: r.n,
            weight_sum: num(r.weight_sum),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("records serialise")
}

#[derive(Serialize)]
struct HeuristicRecord<'a> {
    label: &'a str,
    lhs: Num17,
    rhs: Num17,
    ratio: Num17,
    census_cs: Num17,
    sample_cs: Num17,
}

pub fn heuristic_json<T: Scalar>(items: &[(&str, HeuristicFactor<T>)]) -> String {
    let records: Vec<HeuristicRecord> = items
        .iter()
        .map(|(label, h)| HeuristicRecord {
            label,
            lhs: num(h.lhs),
            rhs: num(h.rhs),
            ratio: num(h.ratio()),
            census_cs: num(h.census_cs),
            sample_cs: num(h.sample_cs),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("records serialise")
}

/// Published figures the experiments are compared against.
pub mod published {
    /// `(ratio, control sampling fraction, naive R²_CS, design R̂²_CS,
    /// naive Nagelkerke, design Nagelkerke)` for the simulated case–control
    /// study.
    pub const CASE_CONTROL_ROWS: [(usize, f64, f64, f64, f64, f64); 5] = [
        (1, 0.004, 0.21, 0.0039, 0.27, 0.079),
        (2, 0.008, 0.19, 0.0042, 0.26, 0.084),
        (5, 0.020, 0.11, 0.0034, 0.18, 0.068),
        (10, 0.039, 0.072, 0.0036, 0.16, 0.072),
        (20, 0.078, 0.040, 0.0036, 0.13, 0.072),
    ];
    /// Population `(R²_CS, Nagelkerke)` of the simulated study.
    pub const CASE_CONTROL_POPULATION: (f64, f64) = (0.0037, 0.075);
    /// Cases in the published simulated population.
    pub const CASE_CONTROL_CASES: usize = 389;
    /// Grouped oesophageal data `(naive R²_CS, design R̂²_CS, naive
    /// Nagelkerke, design Nagelkerke)`, main effects then interaction.
    pub const ESOPH_ROWS: [(&str, [f64; 4]); 2] = [
        ("main_effects", [0.14, 0.0005, 0.23, 0.06]),
        ("interaction", [0.14, 0.0005, 0.23, 0.06]),
    ];
    /// Relapse models in a real two-phase cohort study, `(design R̂²_CS,
    /// naive R²_CS, design Nagelkerke, naive Nagelkerke)`; the synthetic
    /// cohort only reproduces the pattern, not these values.
    pub const TWO_PHASE_ROWS: [(&str, [Option<f64>; 4]); 3] = [
        ("case_control", [Some(0.097), Some(0.16), Some(0.17), Some(0.21)]),
        ("two_phase", [Some(0.087), None, Some(0.16), None]),
        ("full_cohort", [Some(0.086), Some(0.086), Some(0.16), Some(0.16)]),
    ];
}
