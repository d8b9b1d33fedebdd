//! Logarithmic potentials of discrete measures and the checks built on them.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::grid::{neumaier_sum, DiscreteMeasure, Samples, INTERIOR_FRACTION};
use crate::hilbert::hilbert_pv;
use crate::kernel::LogKernel;
use crate::solver::{support_runs, DEFAULT_SUPPORT_THRESHOLD};

/// Cells dropped at each end of a support run before residuals are taken.
pub const EDGE_EXCLUSION: usize = 2;

/// Antiderivative of `ln|u|`.
fn log_antiderivative(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u.abs().ln() - u
    }
}

/// `∫_a^b ln|x − t| dt`, exact.
fn log_cell_integral(x: f64, a: f64, b: f64) -> f64 {
    log_antiderivative(b - x) - log_antiderivative(a - x)
}

/// `U^μ(x) = ∫ ln(1/|x − t|) dμ(t)`.
///
/// Cells not containing `x` use the midpoint value; the cell containing `x`
/// contributes the exact average of the kernel over that cell.
pub fn log_potential(mu: &DiscreteMeasure, x: f64) -> f64 {
    let g = mu.grid();
    let dx = g.spacing();
    let own = g.cell_of(x);
    neumaier_sum(mu.weights().iter().enumerate().map(|(j, &w)| {
        let kernel = if Some(j) == own {
            let (a, b) = g.cell(j);
            -log_cell_integral(x, a, b) / dx
        } else {
            -(x - g.node(j)).abs().ln()
        };
        w * dx * kernel
    }))
}

/// [`log_potential`] at many points, in parallel.
pub fn log_potential_at(mu: &DiscreteMeasure, xs: &[f64]) -> Vec<f64> {
    xs.par_iter().map(|&x| log_potential(mu, x)).collect()
}

/// Discrete potential `K·m` at the nodes, the one whose stationarity the
/// solver enforces. Its self-cell entry is the double cell average.
pub fn potential_on_grid(mu: &DiscreteMeasure) -> Samples {
    let kernel = LogKernel::new(mu.grid());
    let values = kernel.apply(&mu.masses());
    Samples::new(*mu.grid(), values).expect("kernel output is finite")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIntegralSides {
    /// `(1/π) ∫ f(x) ln|(x − a)/(x − b)| dx`.
    pub lhs: f64,
    /// `−∫_a^b f̃(x) dx`.
    pub rhs: f64,
}

pub fn log_integral_diff(f: &Samples, a: f64, b: f64) -> Result<LogIntegralSides> {
    if !(a < b) {
        return Err(Error::Precondition(format!(
            "need a < b, got a = {a}, b = {b}"
        )));
    }
    let g = f.grid();
    if !g.in_window(a, INTERIOR_FRACTION) || !g.in_window(b, INTERIOR_FRACTION) {
        return Err(Error::Precondition(format!(
            "endpoints {a}, {b} lie outside the interior window of [{}, {}]",
            g.lo(),
            g.hi()
        )));
    }
    let lhs = neumaier_sum(f.values().iter().enumerate().map(|(i, &v)| {
        let (lo, hi) = g.cell(i);
        v * (log_cell_integral(a, lo, hi) - log_cell_integral(b, lo, hi))
    })) / PI;
    let rhs = -hilbert_pv(f).integral_between(a, b);
    Ok(LogIntegralSides { lhs, rhs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ResidualJson", try_from = "ResidualJson")]
pub struct ResidualReport {
    pub eq_residual_max: f64,
    pub ineq_violation_max: f64,
    pub support_mask: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct ResidualJson {
    eq_residual_max: f64,
    ineq_violation_max: f64,
    support_cells: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl From<ResidualReport> for ResidualJson {
    fn from(r: ResidualReport) -> Self {
        Self {
            eq_residual_max: r.eq_residual_max,
            ineq_violation_max: r.ineq_violation_max,
            support_cells: r.support_cells(),
            n: Some(r.support_mask.len()),
        }
    }
}

impl TryFrom<ResidualJson> for ResidualReport {
    type Error = Error;

    fn try_from(j: ResidualJson) -> Result<Self> {
        let n =
            j.n.unwrap_or_else(|| j.support_cells.iter().max().map_or(0, |m| m + 1));
        let mut mask = vec![false; n];
        for &i in &j.support_cells {
            *mask
                .get_mut(i)
                .ok_or_else(|| Error::Malformed(format!("support cell {i} out of range")))? = true;
        }
        Ok(Self {
            eq_residual_max: j.eq_residual_max,
            ineq_violation_max: j.ineq_violation_max,
            support_mask: mask,
        })
    }
}

impl ResidualReport {
    pub fn support_cells(&self) -> Vec<usize> {
        (0..self.support_mask.len())
            .filter(|&i| self.support_mask[i])
            .collect()
    }
}

/// Support cells with [`EDGE_EXCLUSION`] cells removed from both ends of
/// every run. Falls back to whole runs when trimming leaves nothing.
fn support_interior(mu: &DiscreteMeasure, threshold: f64) -> Result<(Vec<bool>, Vec<usize>)> {
    let runs = support_runs(mu, threshold)?;
    let mut mask = vec![false; mu.grid().len()];
    let mut interior = Vec::new();
    for r in &runs {
        mask[r.clone()].iter_mut().for_each(|m| *m = true);
        if r.len() > 2 * EDGE_EXCLUSION {
            interior.extend(r.start + EDGE_EXCLUSION..r.end - EDGE_EXCLUSION);
        }
    }
    if interior.is_empty() {
        interior = runs.into_iter().flatten().collect();
    }
    Ok((mask, interior))
}

pub fn variational_residuals(
    mu: &DiscreteMeasure,
    field: &Field,
    f: f64,
) -> Result<ResidualReport> {
    variational_residuals_with(mu, field, f, DEFAULT_SUPPORT_THRESHOLD)
}

pub fn variational_residuals_with(
    mu: &DiscreteMeasure,
    field: &Field,
    f: f64,
    threshold: f64,
) -> Result<ResidualReport> {
    if !f.is_finite() {
        return Err(Error::NonFiniteConstant(f));
    }
    let u = potential_on_grid(mu);
    let v = field.values_on(mu.grid())?;
    let r: Vec<f64> = u.values().iter().zip(&v).map(|(u, v)| u + v - f).collect();
    let (mask, interior) = support_interior(mu, threshold)?;
    let eq = interior.iter().fold(0.0_f64, |acc, &i| acc.max(r[i].abs()));
    let ineq = r
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| !m)
        .fold(0.0_f64, |acc, (&ri, _)| acc.max(-ri));
    Ok(ResidualReport {
        eq_residual_max: eq,
        ineq_violation_max: ineq,
        support_mask: mask,
    })
}

/// The constant `F`: median of `U^μ + V` over the support interior.
pub fn estimate_constant(mu: &DiscreteMeasure, field: &Field) -> Result<f64> {
    estimate_constant_with(mu, field, DEFAULT_SUPPORT_THRESHOLD)
}

pub fn estimate_constant_with(mu: &DiscreteMeasure, field: &Field, threshold: f64) -> Result<f64> {
    let (_, interior) = support_interior(mu, threshold)?;
    if interior.is_empty() {
        return Err(Error::EmptySupport);
    }
    let u = potential_on_grid(mu);
    let v = field.values_on(mu.grid())?;
    let mut s: Vec<f64> = interior.iter().map(|&i| u.values()[i] + v[i]).collect();
    s.sort_unstable_by(|a, b| a.total_cmp(b));
    let k = s.len();
    Ok(if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    })
}
