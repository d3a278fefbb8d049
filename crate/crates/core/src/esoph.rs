//! Grouped case–control data on oesophageal cancer (Ille-et-Vilaine):
//! 88 cells of age group × alcohol group × tobacco group with case and
//! control counts, 200 cases and 775 controls in total.
//!
//! Group codes are ordinal: `agegp` 1..6 (25–34, 35–44, …, 75+), `alcgp`
//! 1..4 (0–39, 40–79, 80–119, 120+ g/day), `tobgp` 1..4 (0–9, 10–19,
//! 20–29, 30+ g/day).
//!
//! Older distributions of this table stored cases + controls in the
//! control-count column. [`ControlCounting::Legacy`] reproduces that
//! encoding (1175 records: 200 cases, 975 "controls"), which is what
//! published pseudo-R² figures for this dataset were computed from.

use std::io::Read;

use serde::Deserialize;

use crate::formula::Formula;
use crate::frame::{Frame, FrameError};
use crate::scalar::Scalar;

pub const GROUPED_CSV: &str = include_str!("../data/esoph_grouped.csv");

/// Sampling weight for controls: roughly one in 440 population controls
/// was recruited.
pub const DEFAULT_CONTROL_WEIGHT: f64 = 440.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct Group {
    pub agegp: u8,
    pub alcgp: u8,
    pub tobgp: u8,
    pub ncases: u32,
    pub ncontrols: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ControlCounting {
    /// Control column holds controls only.
    Corrected,
    /// Control column holds cases + controls.
    #[default]
    Legacy,
}

impl std::str::FromStr for ControlCounting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "legacy" => Ok(Self::Legacy),
            other => Err(format!(
                "unknown control counting '{other}' (expected legacy or corrected)"
            )),
        }
    }
}

pub fn read_groups<R: Read>(reader: R) -> Result<Vec<Group>, FrameError> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(FrameError::from)).collect()
}

/// The bundled table.
pub fn bundled_groups() -> Vec<Group> {
    read_groups(GROUPED_CSV.as_bytes()).expect("bundled esophageal table parses")
}

/// One row per individual with columns `y, agegp, alcgp, tobgp, w`.
/// Cases get weight 1 and controls `control_weight` (1 when `None`).
pub fn expand<T: Scalar>(groups: &[Group], counting: ControlCounting, control_weight: Option<T>) -> Frame<T> {
    let cw = control_weight.unwrap_or_else(T::one);
    let mut cols: [Vec<T>; 5] = Default::default();
    for g in groups {
        let controls = match counting {
            ControlCounting::Corrected => g.ncontrols,
            ControlCounting::Legacy => g.ncontrols + g.ncases,
        };
        for (y, count, w) in [(T::one(), g.ncases, T::one()), (T::zero(), controls, cw)] {
            for _ in 0..count {
                cols[0].push(y);
                cols[1].push(T::lit(f64::from(g.agegp)));
                cols[2].push(T::lit(f64::from(g.alcgp)));
                cols[3].push(T::lit(f64::from(g.tobgp)));
                cols[4].push(w);
            }
        }
    }
    let mut frame = Frame::new(cols[0].len());
    for (name, col) in ["y", "agegp", "alcgp", "tobgp", "w"].into_iter().zip(cols) {
        frame.push_numeric(name, col).expect("columns share a length");
    }
    frame
}

/// Age, alcohol and tobacco as categorical main effects.
pub fn main_effects_formula() -> Formula {
    "y ~ C(agegp) + C(alcgp) + C(tobgp)".parse().expect("valid formula")
}

/// Main effects plus the product of the alcohol and tobacco group scores.
pub fn interaction_formula() -> Formula {
    "y ~ C(agegp) + C(alcgp) + C(tobgp) + alcgp:tobgp"
        .parse()
        .expect("valid formula")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_totals() {
        let g = bundled_groups();
        assert_eq!(g.len(), 88);
        assert_eq!(g.iter().map(|r| r.ncases).sum::<u32>(), 200);
        assert_eq!(g.iter().map(|r| r.ncontrols).sum::<u32>(), 775);
    }

    #[test]
    fn expansion_sizes() {
        let g = bundled_groups();
        let corrected: Frame<f64> = expand(&g, ControlCounting::Corrected, None);
        assert_eq!(corrected.nrows(), 975);
        let legacy: Frame<f64> = expand(&g, ControlCounting::Legacy, Some(440.0));
        assert_eq!(legacy.nrows(), 1175);
        let y = legacy.numeric("y").unwrap();
        let w = legacy.numeric("w").unwrap();
        assert_eq!(y.iter().sum::<f64>(), 200.0);
        assert!(y
            .iter()
            .zip(w)
            .all(|(y, w)| if *y == 1.0 { *w == 1.0 } else { *w == 440.0 }));
    }

    #[test]
    fn formulas_build() {
        let frame: Frame<f64> = expand(&bundled_groups(), ControlCounting::Corrected, None);
        let d = interaction_formula().design(&frame).unwrap();
        assert_eq!(d.x.ncols(), 5 + 3 + 3 + 1);
    }
}
