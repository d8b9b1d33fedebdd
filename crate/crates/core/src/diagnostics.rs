//! Checks applied to solver output: the square-root density
//! `f = √h⁺ = π·density`, its `L²` mass, the orthogonality `∫ f f̃ = 0`,
//! the gradient identity `V′ = f̃` on the support, and truncation sweeps
//! that track `∫ f²` as the domain grows.

use std::io::Write;
use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::grid::{Samples, INTERIOR_FRACTION};
use crate::hilbert::{check_decay, hilbert_pv};
use crate::potential::EDGE_EXCLUSION;
use crate::solver::{solve_equilibrium, support_runs, EquilibriumResult, SolverOptions};

/// `f = π·density`, flagged compact because the solved measure lives on the
/// grid only.
pub fn sqrt_density(result: &EquilibriumResult) -> Samples {
    let w = result.measure.weights();
    Samples::new(
        *result.measure.grid(),
        w.iter().map(|x| std::f64::consts::PI * x).collect(),
    )
    .expect("weights are finite")
    .into_compact()
}

/// `∫ f²`, as a cell sum.
pub fn l2_mass(f: &Samples) -> f64 {
    f.norm_sq()
}

/// `∫ f·f̃`.
pub fn orthogonality_defect(f: &Samples) -> Result<f64> {
    check_decay(f)?;
    f.inner(&hilbert_pv(f))
}

/// Largest `|V′ − f̃|` over the support interior (two cells trimmed at each
/// support edge) inside the interior window of the grid.
pub fn gradient_identity_residual(result: &EquilibriumResult, field: &Field) -> Result<f64> {
    let mu = &result.measure;
    let grid = mu.grid();
    let runs = support_runs(mu, result.options.support_threshold)?;
    let f = sqrt_density(result);
    let ft = hilbert_pv(&f);
    let mut worst: Option<f64> = None;
    for r in runs {
        if r.len() <= 2 * EDGE_EXCLUSION {
            continue;
        }
        for i in r.start + EDGE_EXCLUSION..r.end - EDGE_EXCLUSION {
            let x = grid.node(i);
            if grid.in_window(x, INTERIOR_FRACTION) {
                let d = (field.derivative(x) - ft.values()[i]).abs();
                worst = Some(worst.map_or(d, |w| w.max(d)));
            }
        }
    }
    worst.ok_or(Error::EmptySupport)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converging => "converging",
            Verdict::Diverging => "diverging",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Relative change below which the last two masses count as converged.
pub const CONVERGING_TOL: f64 = 0.05;
/// Growth every step must exceed to count as diverging.
pub const DIVERGING_GROWTH: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub n: usize,
    pub l2_mass: f64,
    #[serde(rename = "F")]
    pub constant: Option<f64>,
    pub support_fraction: f64,
    pub orth_defect: Option<f64>,
    pub grad_identity_residual: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub field: String,
    pub spacing: f64,
    pub rows: Vec<SweepRow>,
    pub verdict: Verdict,
}

/// Classifies a sequence of `L²` masses.
pub fn classify(masses: &[f64]) -> Verdict {
    let k = masses.len();
    if k < 2 {
        return Verdict::Inconclusive;
    }
    let growing = masses
        .windows(2)
        .all(|w| w[1] > w[0] * (1.0 + DIVERGING_GROWTH));
    let (a, b) = (masses[k - 2], masses[k - 1]);
    let settled = (b - a).abs() < CONVERGING_TOL * b.abs().max(a.abs());
    if growing {
        Verdict::Diverging
    } else if settled {
        Verdict::Converging
    } else {
        Verdict::Inconclusive
    }
}

/// Solves on `(−L, L)` for every `L` at fixed spacing, running up to `jobs`
/// solves at once.
pub fn truncation_sweep(
    field: &Field,
    ls: &[f64],
    spacing: f64,
    opts: &SolverOptions,
    jobs: usize,
) -> Result<SweepReport> {
    if ls.len() < 3 {
        return Err(Error::Precondition(format!(
            "a sweep needs at least 3 values of L, got {}",
            ls.len()
        )));
    }
    if ls.iter().any(|l| !(l.is_finite() && *l > 0.0)) || ls.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "L values must be positive and strictly increasing".into(),
        ));
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::Precondition(format!("invalid spacing {spacing}")));
    }
    opts.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Precondition(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        ls.par_iter()
            .map(|&l| sweep_row(field, l, spacing, opts))
            .collect::<Result<_>>()
    })?;

    let all_converged = rows.iter().all(|r| r.converged);
    let masses: Vec<f64> = rows.iter().map(|r| r.l2_mass).collect();
    let verdict = if all_converged {
        classify(&masses)
    } else {
        Verdict::Inconclusive
    };
    Ok(SweepReport {
        field: field.to_string(),
        spacing,
        rows,
        verdict,
    })
}

fn sweep_row(field: &Field, l: f64, spacing: f64, opts: &SolverOptions) -> Result<SweepRow> {
    let n = ((2.0 * l / spacing).round() as usize).max(1);
    let res = solve_equilibrium(field, -l, l, n, opts)?;
    let f = sqrt_density(&res);
    let covered: f64 = res.support.iter().map(|s| s.length()).sum();
    let row = SweepRow {
        half_width: l,
        n,
        l2_mass: l2_mass(&f),
        constant: Some(res.constant),
        support_fraction: covered / (2.0 * l),
        orth_defect: orthogonality_defect(&f).ok(),
        grad_identity_residual: gradient_identity_residual(&res, field).ok(),
        converged: res.converged,
        iterations: res.iterations,
    };
    info!(
        "L = {l}: n = {n}, l2_mass = {:.6}, converged = {} after {} iterations",
        row.l2_mass, row.converged, row.iterations
    );
    Ok(row)
}

impl SweepReport {
    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "L",
            "n",
            "l2_mass",
            "F",
            "support_fraction",
            "orth_defect",
            "grad_identity_residual",
            "converged",
        ])?;
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.10e}"));
        for r in &self.rows {
            w.write_record([
                r.half_width.to_string(),
                r.n.to_string(),
                format!("{:.10e}", r.l2_mass),
                opt(r.constant),
                format!("{:.6}", r.support_fraction),
                opt(r.orth_defect),
                opt(r.grad_identity_residual),
                r.converged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn l2_mass_examples() {
        let g = make_grid(-3.0, 3.0, 600).unwrap();
        assert_eq!(l2_mass(&Samples::zeros(g)), 0.0);
        let block =
            Samples::from_fn(g, |x| if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 }).unwrap();
        assert!((l2_mass(&block) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonality_of_zero_and_gaussian() {
        let g = make_grid(-12.0, 12.0, 4096).unwrap();
        assert_eq!(orthogonality_defect(&Samples::zeros(g)).unwrap(), 0.0);
        let gauss = Samples::from_fn(g, |x| (-x * x).exp()).unwrap();
        assert!(orthogonality_defect(&gauss).unwrap().abs() < 1e-6);
        let flat = Samples::from_fn(g, |_| 1.0).unwrap();
        assert!(orthogonality_defect(&flat).is_err());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(classify(&[1.0, 1.3, 1.6, 2.0]), Verdict::Diverging);
        assert_eq!(classify(&[1.75, 1.61, 1.58, 1.576]), Verdict::Converging);
        assert_eq!(classify(&[3.7, 1.8, 0.9, 0.46]), Verdict::Inconclusive);
        // growth that stalls at the last step is not divergence
        assert_eq!(classify(&[1.0, 1.3, 1.31]), Verdict::Converging);
    }

    #[test]
    fn sweep_needs_three_lengths() {
        let opts = SolverOptions::default();
        let f = Field::cauchy_log();
        assert!(truncation_sweep(&f, &[5.0], 0.02, &opts, 1).is_err());
        assert!(truncation_sweep(&f, &[5.0, 10.0], 0.02, &opts, 1).is_err());
        assert!(truncation_sweep(&f, &[5.0, 4.0, 10.0], 0.02, &opts, 1).is_err());
    }
}
