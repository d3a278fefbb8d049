//! Replication experiments comparing design-based and naive pseudo-R²
//! under outcome-dependent sampling.
//!
//! Every replicate draws from its own RNG substream derived from the base
//! seed, so tables are identical for a given seed no matter how rayon
//! schedules the work. Aggregation runs sequentially over replicates in
//! index order.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::esoph::{self, ControlCounting, Group};
use crate::formula::Formula;
use crate::glm::{fit_logistic, SolverOptions};
use crate::rng::{mix, substream};
use crate::rsq::{census_rsq, RsqSummary};
use crate::sampling::{
    draw_case_control, draw_srs, draw_two_phase_balanced, generate_population, generate_population_with, DesignSample,
    Population,
};
use crate::scalar::Scalar;
use crate::Error as CrateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("census Cox-Snell R2 is {0}; the heuristic ratio is undefined for a population without signal")]
    UndefinedRatio(f64),
}

/// Case–control simulation settings. Defaults mirror the classic setup:
/// 10⁵ rows, `logit P(Y=1|x) = −6 + x`, 1/2/5/10/20 controls per case.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub pop_size: usize,
    pub gen_coef: Vec<f64>,
    pub ratios: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    /// Model fitted everywhere; `None` means `y ~ x1 + … + xp`.
    pub formula: Option<Formula>,
    /// One draw per ratio, as in a single-shot study.
    pub single_draw: bool,
}

pub const DEFAULT_SEED: u64 = 2017;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            pop_size: 100_000,
            gen_coef: vec![-6.0, 1.0],
            ratios: vec![1, 2, 5, 10, 20],
            replicates: 200,
            base_seed: DEFAULT_SEED,
            formula: None,
            single_draw: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicates == 0 {
            return Err(HarnessError::Config("replicates must be at least 1".into()));
        }
        if self.ratios.is_empty() || self.ratios.contains(&0) {
            return Err(HarnessError::Config("ratios must be positive".into()));
        }
        if self.gen_coef.len() < 2 {
            return Err(HarnessError::Config(
                "coefficients need an intercept and at least one slope".into(),
            ));
        }
        if self.pop_size < 2 {
            return Err(HarnessError::Config("population size must be at least 2".into()));
        }
        Ok(())
    }

    fn effective_replicates(&self) -> usize {
        if self.single_draw {
            1
        } else {
            self.replicates
        }
    }

    pub fn population<T: Scalar>(&self) -> Result<Population<T>, CrateError> {
        let coef: Vec<T> = self.gen_coef.iter().map(|c| T::lit(*c)).collect();
        Ok(generate_population(
            self.pop_size,
            &coef,
            mix(self.base_seed, "population", 0),
        )?)
    }
}

/// Replicate mean with its Monte-Carlo standard error (`NaN` below two
/// replicates).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub mean: T,
    pub mc_se: T,
}

impl<T: Scalar> Estimate<T> {
    pub fn exact(v: T) -> Self {
        Self {
            mean: v,
            mc_se: T::zero(),
        }
    }

    fn from_values(v: &[T]) -> Self {
        let k = T::from_usize_lossy(v.len());
        let mean = v.iter().copied().sum::<T>() / k;
        let mc_se = if v.len() < 2 {
            T::nan()
        } else {
            let ss: T = v.iter().map(|x| (*x - mean) * (*x - mean)).sum();
            (ss / (k - T::one()) / k).sqrt()
        };
        Self { mean, mc_se }
    }
}

/// One line of a comparison table. Naive columns are `None` where the
/// design has no meaningful unweighted analysis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow<T> {
    pub design: String,
    pub ratio: Option<usize>,
    pub sampling_fraction: f64,
    pub naive_cs: Option<Estimate<T>>,
    pub design_cs: Estimate<T>,
    pub naive_nag: Option<Estimate<T>>,
    pub design_nag: Estimate<T>,
    pub replicates: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable<T> {
    pub census: RsqSummary<T>,
    pub population_size: usize,
    pub case_count: usize,
    pub rows: Vec<ComparisonRow<T>>,
}

impl<T: Scalar> ComparisonTable<T> {
    pub fn row(&self, design: &str) -> Option<&ComparisonRow<T>> {
        self.rows.iter().find(|r| r.design == design)
    }
}

fn census_row<T: Scalar>(label: &str, census: &RsqSummary<T>) -> ComparisonRow<T> {
    let nag = census.nagelkerke.expect("logistic census");
    ComparisonRow {
        design: label.to_string(),
        ratio: None,
        sampling_fraction: 1.0,
        naive_cs: Some(Estimate::exact(census.cox_snell)),
        design_cs: Estimate::exact(census.design_cox_snell),
        naive_nag: Some(Estimate::exact(nag)),
        design_nag: Estimate::exact(census.design_nagelkerke.expect("logistic census")),
        replicates: 1,
        failures: 0,
    }
}

/// `(naive_cs, design_cs, naive_nag, design_nag)` for one sample.
fn compare_fits<T: Scalar>(
    pop: &Population<T>,
    sample: &DesignSample,
    formula: &Formula,
    with_naive: bool,
) -> Result<[Option<T>; 4], CrateError> {
    let opts = SolverOptions::default();
    let weighted = sample.dataset(pop, formula, true)?;
    let design = RsqSummary::from_fit(&fit_logistic(&weighted, &opts)?)?;
    let (naive_cs, naive_nag) = if with_naive {
        let naive = RsqSummary::from_fit(&fit_logistic(&weighted.unweighted(), &opts)?)?;
        (Some(naive.cox_snell), naive.nagelkerke)
    } else {
        (None, None)
    };
    Ok([
        naive_cs,
        Some(design.design_cox_snell),
        naive_nag,
        design.design_nagelkerke,
    ])
}

fn aggregate<T: Scalar>(
    design: &str,
    ratio: Option<usize>,
    sampling_fraction: f64,
    outcomes: &[Result<[Option<T>; 4], CrateError>],
) -> ComparisonRow<T> {
    let ok: Vec<&[Option<T>; 4]> = outcomes.iter().filter_map(|r| r.as_ref().ok()).collect();
    let column = |j: usize| -> Option<Estimate<T>> {
        let vals: Option<Vec<T>> = ok.iter().map(|r| r[j]).collect();
        match vals {
            Some(v) if !v.is_empty() => Some(Estimate::from_values(&v)),
            _ => None,
        }
    };
    let nan = Estimate {
        mean: T::nan(),
        mc_se: T::nan(),
    };
    ComparisonRow {
        design: design.to_string(),
        ratio,
        sampling_fraction,
        naive_cs: column(0),
        design_cs: column(1).unwrap_or(nan),
        naive_nag: column(2),
        design_nag: column(3).unwrap_or(nan),
        replicates: ok.len(),
        failures: outcomes.len() - ok.len(),
    }
}

/// Case–control Monte-Carlo study: one population, then for each matching
/// ratio repeated case–control samples fitted both unweighted (naive) and
/// design-weighted. The population (census) row comes last.
pub fn replicate_table2<T: Scalar>(cfg: &ExperimentConfig) -> Result<ComparisonTable<T>, CrateError> {
    cfg.validate()?;
    let pop = cfg.population::<T>()?;
    let formula = cfg.formula.clone().unwrap_or_else(|| pop.full_formula());
    let census = census_rsq(&pop, &formula)?;
    let reps = cfg.effective_replicates();

    let mut rows = Vec::with_capacity(cfg.ratios.len() + 1);
    for &ratio in &cfg.ratios {
        let outcomes: Vec<Result<[Option<T>; 4], CrateError>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let seed = mix(cfg.base_seed, "case-control", ((ratio as u64) << 32) | r as u64);
                let sample = draw_case_control(&pop, ratio, seed)?;
                compare_fits(&pop, &sample, &formula, true)
            })
            .collect();
        let needed = ratio * pop.case_count();
        let fraction = needed as f64 / pop.control_count() as f64;
        rows.push(aggregate(
            &format!("case_control_m{ratio}"),
            Some(ratio),
            fraction,
            &outcomes,
        ));
    }
    rows.push(census_row("population", &census));
    Ok(ComparisonTable {
        census,
        population_size: pop.size(),
        case_count: pop.case_count(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeuristicFactor<T> {
    /// `log(1 − naive sample R²_CS) / log(1 − census R²_CS)`.
    pub lhs: T,
    /// `N / n`.
    pub rhs: T,
    pub census_cs: T,
    pub sample_cs: T,
}

impl<T: Scalar> HeuristicFactor<T> {
    pub fn ratio(&self) -> T {
        self.lhs / self.rhs
    }
}

/// Compares the inflation of `log(1 − R²_CS)` in an unweighted fit to the
/// sample with the `N/n` factor expected when the sample retains nearly
/// all the population's information. Intended for rare outcomes.
pub fn heuristic_check<T: Scalar>(
    pop: &Population<T>,
    sample: &DesignSample,
    formula: &Formula,
) -> Result<HeuristicFactor<T>, CrateError> {
    let census = census_rsq(pop, formula)?;
    if census.cox_snell <= T::epsilon() {
        return Err(HarnessError::UndefinedRatio(census.cox_snell.to_f64_lossy()).into());
    }
    let naive_data = sample.dataset(pop, formula, false)?;
    let naive = RsqSummary::from_fit(&fit_logistic(&naive_data, &SolverOptions::default())?)?;
    let lhs = (-naive.cox_snell).ln_1p() / (-census.cox_snell).ln_1p();
    let rhs = T::from_usize_lossy(pop.size()) / T::from_usize_lossy(sample.len());
    Ok(HeuristicFactor {
        lhs,
        rhs,
        census_cs: census.cox_snell,
        sample_cs: naive.cox_snell,
    })
}

/// Heuristic factor on the configured population for one case–control
/// sample at `ratio`, and for the whole population taken as the sample.
pub fn seeded_heuristic<T: Scalar>(
    cfg: &ExperimentConfig,
    ratio: usize,
) -> Result<(HeuristicFactor<T>, HeuristicFactor<T>), CrateError> {
    cfg.validate()?;
    let pop = cfg.population::<T>()?;
    let formula = cfg.formula.clone().unwrap_or_else(|| pop.full_formula());
    let sample = draw_case_control(&pop, ratio, mix(cfg.base_seed, "heuristic", ratio as u64))?;
    let all = draw_srs(&pop, pop.size(), mix(cfg.base_seed, "heuristic-census", 0))?;
    Ok((
        heuristic_check(&pop, &sample, &formula)?,
        heuristic_check(&pop, &all, &formula)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsophOptions {
    /// Weight for controls; `None` fits every model unweighted.
    pub control_weight: Option<f64>,
    pub counting: ControlCounting,
    /// Replacement grouped table; `None` uses the bundled one.
    pub groups: Option<Vec<Group>>,
}

impl Default for EsophOptions {
    fn default() -> Self {
        Self {
            control_weight: Some(esoph::DEFAULT_CONTROL_WEIGHT),
            counting: ControlCounting::Legacy,
            groups: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsophRow<T> {
    pub model: &'static str,
    pub naive_cs: T,
    pub design_cs: T,
    pub naive_nag: T,
    pub design_nag: T,
    pub n: usize,
    pub weight_sum: T,
}

/// Main-effects and alcohol × tobacco score-interaction models on the
/// grouped oesophageal cancer data, unweighted and design-weighted.
pub fn replicate_esoph<T: Scalar>(opts: &EsophOptions) -> Result<Vec<EsophRow<T>>, CrateError> {
    let groups = opts.groups.clone().unwrap_or_else(esoph::bundled_groups);
    let frame = esoph::expand::<T>(&groups, opts.counting, opts.control_weight.map(T::lit));
    let solver = SolverOptions::default();
    [
        ("main_effects", esoph::main_effects_formula()),
        ("interaction", esoph::interaction_formula()),
    ]
    .into_iter()
    .map(|(model, formula)| {
        let weighted = formula.dataset(&frame, Some("w"))?;
        let naive = RsqSummary::from_fit(&fit_logistic(&weighted.unweighted(), &solver)?)?;
        let design = RsqSummary::from_fit(&fit_logistic(&weighted, &solver)?)?;
        Ok(EsophRow {
            model,
            naive_cs: naive.cox_snell,
            design_cs: design.design_cox_snell,
            naive_nag: naive.nagelkerke.expect("logistic"),
            design_nag: design.design_nagelkerke.expect("logistic"),
            n: design.n,
            weight_sum: design.weight_sum,
        })
    })
    .collect()
}

/// Synthetic cohort for the two-phase comparison: a binary exposure `x1`
/// observed exactly only in the second phase, a cheap surrogate of it
/// (`surrogate`, misclassified at a fixed rate) available for everyone,
/// and a continuous covariate `x2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhaseConfig {
    pub cohort_size: usize,
    /// Intercept, exposure and covariate coefficients.
    pub gen_coef: Vec<f64>,
    pub exposure_prevalence: f64,
    pub misclassification: f64,
    pub replicates: usize,
    pub base_seed: u64,
    /// With sampling off only the full-cohort row is produced.
    pub sampling: bool,
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        Self {
            cohort_size: 4000,
            gen_coef: vec![-2.9, 1.8, 0.5],
            exposure_prevalence: 0.25,
            misclassification: 0.15,
            replicates: 200,
            base_seed: DEFAULT_SEED,
            sampling: true,
        }
    }
}

impl TwoPhaseConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicates == 0 {
            return Err(HarnessError::Config("replicates must be at least 1".into()));
        }
        if self.gen_coef.len() != 3 {
            return Err(HarnessError::Config(
                "two-phase cohort needs intercept, exposure and covariate coefficients".into(),
            ));
        }
        for (name, p) in [
            ("exposure prevalence", self.exposure_prevalence),
            ("misclassification", self.misclassification),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(HarnessError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn cohort<T: Scalar>(&self) -> Result<Population<T>, CrateError> {
        let coef: Vec<T> = self.gen_coef.iter().map(|c| T::lit(*c)).collect();
        let seed = mix(self.base_seed, "cohort", 0);
        let prevalence = self.exposure_prevalence;
        let pop = generate_population_with(self.cohort_size, &coef, seed, |rng, x: &mut [T]| {
            x[0] = if rng.random::<f64>() < prevalence {
                T::one()
            } else {
                T::zero()
            };
            x[1] = T::lit(rng.sample::<f64, _>(StandardNormal));
        })?;
        let mut rng = substream(seed, "surrogate", 0);
        let surrogate: Vec<T> = (0..pop.size())
            .map(|i| {
                let flip = rng.random::<f64>() < self.misclassification;
                let x1 = pop.x().get(i, 0);
                if flip {
                    T::one() - x1
                } else {
                    x1
                }
            })
            .collect();
        Ok(pop.with_aux("surrogate", surrogate)?)
    }
}

/// Outcome × surrogate cell in `0..4`.
pub fn outcome_surrogate_cell<T: Scalar>(pop: &Population<T>, row: usize) -> usize {
    let s = pop.aux("surrogate").expect("cohort has a surrogate")[row];
    2 * usize::from(pop.y()[row] == T::one()) + usize::from(s == T::one())
}

/// Full cohort versus a 1:1 case–control sample and a balanced two-phase
/// sample stratified on outcome × surrogate.
///
/// The two-phase sample takes a quarter of the case–control sample size
/// from each cell, or the whole cell when it is smaller than that.
pub fn replicate_two_phase<T: Scalar>(cfg: &TwoPhaseConfig) -> Result<ComparisonTable<T>, CrateError> {
    cfg.validate()?;
    let pop = cfg.cohort::<T>()?;
    let formula = pop.full_formula();
    let census = census_rsq(&pop, &formula)?;
    let mut rows = vec![census_row("full_cohort", &census)];

    if cfg.sampling {
        let cases = pop.case_count();
        let mut cell_sizes = [0usize; 4];
        for i in 0..pop.size() {
            cell_sizes[outcome_surrogate_cell(&pop, i)] += 1;
        }
        let smallest = cell_sizes.iter().copied().filter(|s| *s > 0).min().unwrap_or(0);
        let per_cell = (2 * cases / 4).min(smallest);

        let outcomes: Vec<(Result<_, CrateError>, Result<_, CrateError>)> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let cc = draw_case_control(&pop, 1, mix(cfg.base_seed, "two-phase-cc", r as u64))
                    .map_err(CrateError::from)
                    .and_then(|s| compare_fits(&pop, &s, &formula, true));
                let tp = draw_two_phase_balanced(
                    &pop,
                    |i| outcome_surrogate_cell(&pop, i),
                    per_cell,
                    mix(cfg.base_seed, "two-phase-strata", r as u64),
                )
                .map_err(CrateError::from)
                .and_then(|s| compare_fits(&pop, &s, &formula, false));
                (cc, tp)
            })
            .collect();
        let (cc, tp): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
        let controls = pop.control_count();
        rows.push(aggregate("case_control", Some(1), cases as f64 / controls as f64, &cc));
        rows.push(aggregate(
            "two_phase",
            None,
            (per_cell * 4) as f64 / pop.size() as f64,
            &tp,
        ));
    }
    Ok(ComparisonTable {
        census,
        population_size: pop.size(),
        case_count: pop.case_count(),
        rows,
    })
}
