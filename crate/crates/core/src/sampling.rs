//! Finite populations drawn from a logistic superpopulation model, and
//! probability samples from them.
//!
//! Inclusion probabilities are kept as exact rationals, so `wᵢ·πᵢ = 1` and
//! the Horvitz–Thompson size identities hold exactly; conversion to the
//! floating-point scalar happens only when a dataset is built.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::data::Dataset;
use crate::formula::{Formula, FormulaError};
use crate::frame::{Frame, FrameError};
use crate::glm::inv_logit;
use crate::linalg::Matrix;
use crate::rng::{substream, StreamRng};
use crate::scalar::Scalar;

pub type Prob = Ratio<u64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("population size must be at least 2, got {0}")]
    TooSmall(usize),
    #[error("generating coefficients must include an intercept")]
    NoCoefficients,
    #[error("response at row {row} is not binary")]
    NonBinary { row: usize },
    #[error("degenerate population: {cases} cases out of {size}; sampling needs both outcomes")]
    Degenerate { cases: usize, size: usize },
    #[error("sample size {n} outside 1..={size}")]
    SampleSize { n: usize, size: usize },
    #[error("cannot draw {ratio} controls per case: {cases} cases need {needed} controls, only {controls} available")]
    InfeasibleRatio {
        ratio: usize,
        cases: usize,
        needed: usize,
        controls: usize,
    },
    #[error("cell {cell} has {size} members, fewer than the {per_cell} requested")]
    UndersizedCell { cell: usize, size: usize, per_cell: usize },
    #[error("per-cell sample size must be positive")]
    EmptyCellSample,
    #[error("length mismatch: {0}")]
    Length(String),
}

/// A finite population of `(x, y)` rows plus the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    x: Matrix<T>,
    y: Vec<T>,
    aux: Vec<(String, Vec<T>)>,
    gen_coef: Vec<T>,
    case_count: usize,
    seed: u64,
}

impl<T: Scalar> Population<T> {
    pub fn from_parts(x: Matrix<T>, y: Vec<T>, gen_coef: Vec<T>, seed: u64) -> Result<Self, SamplingError> {
        if x.nrows() != y.len() {
            return Err(SamplingError::Length(format!(
                "{} predictor rows, {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(row) = y.iter().position(|v| *v != T::zero() && *v != T::one()) {
            return Err(SamplingError::NonBinary { row });
        }
        let case_count = y.iter().filter(|v| **v == T::one()).count();
        Ok(Self {
            x,
            y,
            aux: Vec::new(),
            gen_coef,
            case_count,
            seed,
        })
    }

    /// Attaches a column that is not part of the generating model, such as
    /// a surrogate measurement used for stratification.
    pub fn with_aux(mut self, name: impl Into<String>, values: Vec<T>) -> Result<Self, SamplingError> {
        if values.len() != self.size() {
            return Err(SamplingError::Length(format!(
                "aux column has {} rows, population {}",
                values.len(),
                self.size()
            )));
        }
        self.aux.push((name.into(), values));
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.y.len()
    }

    pub fn case_count(&self) -> usize {
        self.case_count
    }

    pub fn control_count(&self) -> usize {
        self.size() - self.case_count
    }

    pub fn is_degenerate(&self) -> bool {
        self.case_count == 0 || self.case_count == self.size()
    }

    pub fn gen_coef(&self) -> &[T] {
        &self.gen_coef
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn aux(&self, name: &str) -> Option<&[T]> {
        self.aux.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn predictor_names(&self) -> Vec<String> {
        (1..=self.x.ncols()).map(|j| format!("x{j}")).collect()
    }

    /// `y ~ x1 + … + xp`, the generating model's linear predictor.
    pub fn full_formula(&self) -> Formula {
        let names = self.predictor_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Formula::linear("y", &refs)
    }

    fn require_usable(&self) -> Result<(), SamplingError> {
        if self.is_degenerate() {
            return Err(SamplingError::Degenerate {
                cases: self.case_count,
                size: self.size(),
            });
        }
        Ok(())
    }

    fn frame_rows(&self, rows: &[usize]) -> Frame<T> {
        let mut frame = Frame::new(rows.len());
        let pick = |v: &[T]| rows.iter().map(|&i| v[i]).collect::<Vec<T>>();
        frame.push_numeric("y", pick(&self.y)).expect("fresh frame");
        for (j, name) in self.predictor_names().into_iter().enumerate() {
            frame
                .push_numeric(name, rows.iter().map(|&i| self.x.get(i, j)).collect())
                .expect("fresh frame");
        }
        for (name, v) in &self.aux {
            frame.push_numeric(name.clone(), pick(v)).expect("fresh frame");
        }
        frame
    }

    /// Columns `y, x1..xp` followed by any auxiliary columns.
    pub fn frame(&self) -> Frame<T> {
        let all: Vec<usize> = (0..self.size()).collect();
        self.frame_rows(&all)
    }

    /// Unit-weight dataset over the whole population.
    pub fn dataset(&self, formula: &Formula) -> Result<Dataset<T>, FormulaError> {
        formula.dataset(&self.frame(), None)
    }
}

/// Population with standard-normal predictors, one per slope in `coef`.
pub fn generate_population<T: Scalar>(size: usize, coef: &[T], seed: u64) -> Result<Population<T>, SamplingError> {
    generate_population_with(size, coef, seed, |rng, x: &mut [T]| {
        for v in x.iter_mut() {
            *v = T::lit(rng.sample::<f64, _>(StandardNormal));
        }
    })
}

/// Population whose predictors come from `draw_predictors`, called once per
/// row with a slice of length `coef.len() − 1`. The outcome is then drawn as
/// `y ~ Bernoulli(expit(coef[0] + xᵀ coef[1..]))` from the same stream.
pub fn generate_population_with<T, F>(
    size: usize,
    coef: &[T],
    seed: u64,
    mut draw_predictors: F,
) -> Result<Population<T>, SamplingError>
where
    T: Scalar,
    F: FnMut(&mut StreamRng, &mut [T]),
{
    if size < 2 {
        return Err(SamplingError::TooSmall(size));
    }
    if coef.is_empty() {
        return Err(SamplingError::NoCoefficients);
    }
    let p = coef.len() - 1;
    let mut rng = substream(seed, "population", 0);
    let mut xs = Vec::with_capacity(size * p);
    let mut y = Vec::with_capacity(size);
    let mut row = vec![T::zero(); p];
    for _ in 0..size {
        draw_predictors(&mut rng, &mut row);
        let eta = row.iter().zip(&coef[1..]).fold(coef[0], |a, (x, b)| a + *x * *b);
        let u: f64 = rng.random();
        y.push(if T::lit(u) < inv_logit(eta) {
            T::one()
        } else {
            T::zero()
        });
        xs.extend_from_slice(&row);
    }
    let x = Matrix::from_row_major(size, p, xs).expect("shape computed above");
    Population::from_parts(x, y, coef.to_vec(), seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Srs,
    CaseControl,
    TwoPhase,
}

impl std::fmt::Display for DesignKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DesignKind::Srs => "srs",
            DesignKind::CaseControl => "case_control",
            DesignKind::TwoPhase => "two_phase",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignMeta {
    /// Controls per case (case–control only).
    pub ratio: Option<usize>,
    /// Control sampling fraction for case–control designs, `n/N` otherwise.
    pub sampling_fraction: f64,
    /// Population size of each cell (two-phase only).
    pub cell_sizes: Vec<usize>,
    /// Rows drawn from each cell (two-phase only).
    pub cell_counts: Vec<usize>,
}

/// Rows drawn from a population with their inclusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSample {
    pub design: DesignKind,
    /// Population row indices, ascending and distinct.
    pub rows: Vec<usize>,
    pub inclusion: Vec<Prob>,
    pub cells: Option<Vec<usize>>,
    pub meta: DesignMeta,
    pub seed: u64,
}

impl DesignSample {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Exact sampling weights `1/πᵢ`.
    pub fn exact_weights(&self) -> Vec<Prob> {
        self.inclusion.iter().map(|p| p.recip()).collect()
    }

    pub fn exact_weight_sum(&self) -> Prob {
        self.exact_weights().into_iter().fold(Prob::zero(), |a, b| a + b)
    }

    pub fn inclusion_prob<T: Scalar>(&self) -> Vec<T> {
        self.inclusion.iter().map(ratio_to).collect()
    }

    pub fn weights<T: Scalar>(&self) -> Vec<T> {
        self.exact_weights().iter().map(ratio_to).collect()
    }

    /// Sampled rows as columns `y, x1..xp, [aux…], weight, [cell]`.
    pub fn frame<T: Scalar>(&self, pop: &Population<T>) -> Frame<T> {
        let mut frame = pop.frame_rows(&self.rows);
        frame.push_numeric("weight", self.weights()).expect("row count matches");
        if let Some(cells) = &self.cells {
            frame
                .push_numeric("cell", cells.iter().map(|c| T::from_usize_lossy(*c)).collect())
                .expect("row count matches");
        }
        frame
    }

    /// Dataset for `formula`, design-weighted or with unit weights.
    pub fn dataset<T: Scalar>(
        &self,
        pop: &Population<T>,
        formula: &Formula,
        weighted: bool,
    ) -> Result<Dataset<T>, FormulaError> {
        let frame = self.frame(pop);
        formula.dataset(&frame, weighted.then_some("weight"))
    }

    pub fn write_csv<T: Scalar, W: Write>(&self, pop: &Population<T>, writer: W) -> Result<(), FrameError> {
        self.frame(pop).write_csv(writer)
    }
}

fn ratio_to<T: Scalar>(r: &Prob) -> T {
    T::from_u64(*r.numer()).expect("u64 converts") / T::from_u64(*r.denom()).expect("u64 converts")
}

fn prob(num: usize, den: usize) -> Prob {
    Prob::new(num as u64, den as u64)
}

/// Simple random sample of `n` rows without replacement; `πᵢ = n/N`.
pub fn draw_srs<T: Scalar>(pop: &Population<T>, n: usize, seed: u64) -> Result<DesignSample, SamplingError> {
    pop.require_usable()?;
    let size = pop.size();
    if n == 0 || n > size {
        return Err(SamplingError::SampleSize { n, size });
    }
    let mut rng = substream(seed, "srs", 0);
    let mut rows = index::sample(&mut rng, size, n).into_vec();
    rows.sort_unstable();
    Ok(DesignSample {
        design: DesignKind::Srs,
        inclusion: vec![prob(n, size); n],
        rows,
        cells: None,
        meta: DesignMeta {
            ratio: None,
            sampling_fraction: n as f64 / size as f64,
            cell_sizes: Vec::new(),
            cell_counts: Vec::new(),
        },
        seed,
    })
}

/// Every case plus `ratio × cases` controls drawn without replacement from
/// the controls. Cases have `π = 1`; controls `π = ratio·cases / controls`.
pub fn draw_case_control<T: Scalar>(
    pop: &Population<T>,
    ratio: usize,
    seed: u64,
) -> Result<DesignSample, SamplingError> {
    pop.require_usable()?;
    let cases = pop.case_count();
    let controls = pop.control_count();
    let needed = ratio * cases;
    if ratio == 0 || needed > controls {
        return Err(SamplingError::InfeasibleRatio {
            ratio,
            cases,
            needed,
            controls,
        });
    }
    let (case_rows, control_rows): (Vec<usize>, Vec<usize>) = (0..pop.size()).partition(|&i| pop.y()[i] == T::one());
    let mut rng = substream(seed, "case-control", 0);
    let picked = index::sample(&mut rng, controls, needed);
    let control_pi = prob(needed, controls);

    let mut tagged: Vec<(usize, Prob)> = case_rows.iter().map(|&i| (i, Prob::from_integer(1))).collect();
    tagged.extend(picked.iter().map(|k| (control_rows[k], control_pi)));
    tagged.sort_unstable_by_key(|(i, _)| *i);
    let (rows, inclusion) = tagged.into_iter().unzip();
    Ok(DesignSample {
        design: DesignKind::CaseControl,
        rows,
        inclusion,
        cells: None,
        meta: DesignMeta {
            ratio: Some(ratio),
            sampling_fraction: control_pi.to_f64().unwrap_or(f64::NAN),
            cell_sizes: Vec::new(),
            cell_counts: Vec::new(),
        },
        seed,
    })
}

/// Stratified sample of `per_cell` rows from every cell defined by
/// `stratifier`, simple random sampling within each cell.
pub fn draw_two_phase_balanced<T, F>(
    pop: &Population<T>,
    stratifier: F,
    per_cell: usize,
    seed: u64,
) -> Result<DesignSample, SamplingError>
where
    T: Scalar,
    F: Fn(usize) -> usize,
{
    pop.require_usable()?;
    if per_cell == 0 {
        return Err(SamplingError::EmptyCellSample);
    }
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..pop.size() {
        members.entry(stratifier(i)).or_default().push(i);
    }
    for (&cell, rows) in &members {
        if rows.len() < per_cell {
            return Err(SamplingError::UndersizedCell {
                cell,
                size: rows.len(),
                per_cell,
            });
        }
    }
    let mut rng = substream(seed, "two-phase", 0);
    let mut tagged: Vec<(usize, Prob, usize)> = Vec::new();
    let mut cell_sizes = Vec::new();
    for (&cell, rows) in &members {
        let pi = prob(per_cell, rows.len());
        for k in index::sample(&mut rng, rows.len(), per_cell) {
            tagged.push((rows[k], pi, cell));
        }
        cell_sizes.push(rows.len());
    }
    tagged.sort_unstable_by_key(|(i, _, _)| *i);
    let n = tagged.len();
    let mut rows = Vec::with_capacity(n);
    let mut inclusion = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for (i, p, c) in tagged {
        rows.push(i);
        inclusion.push(p);
        cells.push(c);
    }
    Ok(DesignSample {
        design: DesignKind::TwoPhase,
        rows,
        inclusion,
        cells: Some(cells),
        meta: DesignMeta {
            ratio: None,
            sampling_fraction: n as f64 / pop.size() as f64,
            cell_counts: vec![per_cell; cell_sizes.len()],
            cell_sizes,
        },
        seed,
    })
}
