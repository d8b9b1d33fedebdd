//! Uniform midpoint grids, tabulated functions and discrete probability
//! measures.
//!
//! A [`Grid`] splits `[lo, hi]` into `n` equal cells and places one node at
//! the midpoint of each cell. Everything downstream (kernels, transforms,
//! quadrature) treats a tabulated function as constant on each cell, so
//! integrals over the grid are cell sums `Σ f_i · spacing`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the domain, centred on its midpoint, where transform output is
/// trusted.
pub const INTERIOR_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    lo: f64,
    hi: f64,
    n: usize,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.lo, spec.hi, spec.n)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            lo: g.lo,
            hi: g.hi,
            n: g.n,
        }
    }
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "endpoints must be finite, got ({lo}, {hi})"
            )));
        }
        if hi <= lo {
            return Err(Error::InvalidGrid(format!(
                "need hi > lo, got ({lo}, {hi})"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need n >= 2, got {n}")));
        }
        Ok(Self {
            lo,
            hi,
            n,
            spacing: (hi - lo) / n as f64,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Midpoint of cell `i`.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Closed cell `[lo + iΔ, lo + (i+1)Δ]`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        (
            self.lo + i as f64 * self.spacing,
            self.lo + (i + 1) as f64 * self.spacing,
        )
    }

    /// Index of the cell containing `x`, if `x` lies in `[lo, hi]`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(self.lo..=self.hi).contains(&x) {
            return None;
        }
        let i = ((x - self.lo) / self.spacing).floor() as usize;
        Some(i.min(self.n - 1))
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Whether `x` lies in the central window covering `fraction` of the
    /// domain.
    pub fn in_window(&self, x: f64, fraction: f64) -> bool {
        (x - self.midpoint()).abs() <= 0.5 * fraction * self.length()
    }

    /// Nodes inside the trusted interior window.
    pub fn interior_mask(&self) -> Vec<bool> {
        (0..self.n)
            .map(|i| self.in_window(self.node(i), INTERIOR_FRACTION))
            .collect()
    }

    /// Grids agree when they discretize the same interval with the same cell
    /// count.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && (self.lo - other.lo).abs() <= 1e-12 * self.length()
            && (self.hi - other.hi).abs() <= 1e-12 * self.length()
    }
}

/// Shorthand for [`Grid::new`].
pub fn make_grid(lo: f64, hi: f64, n: usize) -> Result<Grid> {
    Grid::new(lo, hi, n)
}

/// A real function tabulated at the nodes of a grid.
///
/// `compact` records that the function vanishes identically outside the grid
/// (a density recovered from a measure, say) rather than being a truncation
/// of a function living on the whole line. Only truncations are required to
/// have decayed at the grid edges before product identities are checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    grid: Grid,
    values: Vec<f64>,
    compact: bool,
}

impl Samples {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            grid,
            values,
            compact: false,
        })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            compact: false,
        }
    }

    /// Marks the samples as vanishing outside the grid.
    pub fn into_compact(mut self) -> Self {
        self.compact = true;
        self
    }

    pub fn is_compact(&self) -> bool {
        self.compact
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise map keeping the grid and the support flag.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Ok(Self {
            compact: self.compact,
            ..Self::new(self.grid, values)?
        })
    }

    /// Pointwise combination of two samples on the same grid.
    pub fn zip_with(&self, other: &Samples, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            compact: self.compact && other.compact,
            ..Self::new(self.grid, values)?
        })
    }

    pub fn check_same_grid(&self, other: &Samples) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Cell-sum quadrature `Σ f_i Δ`.
    pub fn integral(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) * self.grid.spacing()
    }

    /// `∫ f g dx` by cell sums.
    pub fn inner(&self, other: &Samples) -> Result<f64> {
        self.check_same_grid(other)?;
        let s = neumaier_sum(self.values.iter().zip(&other.values).map(|(a, b)| a * b));
        Ok(s * self.grid.spacing())
    }

    pub fn norm_sq(&self) -> f64 {
        neumaier_sum(self.values.iter().map(|v| v * v)) * self.grid.spacing()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Maximum of `|f|` over nodes where `mask` holds.
    pub fn max_abs_where(&self, mask: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .fold(0.0_f64, |acc, (v, _)| acc.max(v.abs()))
    }

    /// Linear interpolation between nodes; constant extrapolation past the
    /// outermost nodes.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let s = (x - g.node(0)) / g.spacing();
        if s <= 0.0 {
            return self.values[0];
        }
        let last = g.len() - 1;
        if s >= last as f64 {
            return self.values[last];
        }
        let i = s.floor() as usize;
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// `∫_a^b` of the piecewise-linear interpolant.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integral_between(b, a);
        }
        let g = &self.grid;
        // breakpoints: a, interior nodes, b
        let mut xs = vec![a];
        xs.extend((0..g.len()).map(|i| g.node(i)).filter(|&x| x > a && x < b));
        xs.push(b);
        xs.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.interpolate(w[0]) + self.interpolate(w[1])))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_xy_csv(writer, &self.grid, &self.values)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads `x,value` rows. Nodes must be uniformly spaced; the grid is
    /// reconstructed from them.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Malformed(format!(
                "expected header `x,value`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Malformed(format!("row {}: missing column", row + 1)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Malformed(format!("row {}: {e}", row + 1)))
            };
            xs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if xs.len() < 2 {
            return Err(Error::Malformed("need at least two rows".into()));
        }
        let n = xs.len();
        let spacing = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        if !(spacing > 0.0) {
            return Err(Error::Malformed("nodes must be increasing".into()));
        }
        let lo = xs[0] - 0.5 * spacing;
        let hi = xs[n - 1] + 0.5 * spacing;
        let grid = Grid::new(lo, hi, n)?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.node(i)).abs() > 1e-6 * spacing {
                return Err(Error::Malformed(format!(
                    "row {}: node {x} breaks uniform spacing",
                    i + 1
                )));
            }
        }
        Samples::new(grid, vs)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Nonnegative cell densities whose cell sum is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    grid: Grid,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Scales nonnegative `weights` so that `Σ w_i Δ = 1`.
    ///
    /// Already-normalized input is returned unchanged, so normalizing twice
    /// gives bit-identical weights.
    pub fn normalize(weights: Vec<f64>, grid: Grid) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        if let Some(i) = weights.iter().position(|&w| w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "negative weight {} at cell {i}",
                weights[i]
            )));
        }
        let mass = neumaier_sum(weights.iter().copied()) * grid.spacing();
        if mass <= 0.0 {
            return Err(Error::InvalidWeights("total mass is zero".into()));
        }
        if (mass - 1.0).abs() <= 64.0 * f64::EPSILON {
            return Ok(Self { grid, weights });
        }
        let scale = 1.0 / mass;
        let weights = weights.into_iter().map(|w| w * scale).collect();
        Ok(Self { grid, weights })
    }

    /// Builds a measure from cell masses `m_i = w_i Δ`.
    pub fn from_masses(masses: &[f64], grid: Grid) -> Result<Self> {
        let inv = 1.0 / grid.spacing();
        Self::normalize(masses.iter().map(|m| m * inv).collect(), grid)
    }

    /// Uniform density on the whole grid.
    pub fn uniform(grid: Grid) -> Self {
        Self::normalize(vec![1.0; grid.len()], grid).expect("uniform weights are valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn masses(&self) -> Vec<f64> {
        let dx = self.grid.spacing();
        self.weights.iter().map(|w| w * dx).collect()
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied()) * self.grid.spacing()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().fold(0.0_f64, |m, &w| m.max(w))
    }

    /// The density as tabulated samples (zero outside the grid).
    pub fn density(&self) -> Samples {
        Samples {
            grid: self.grid,
            values: self.weights.clone(),
            compact: true,
        }
    }

    /// `∫ |ρ₁ − ρ₂| dx`.
    pub fn l1_distance(&self, other: &DiscreteMeasure) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let s = neumaier_sum(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs()),
        );
        Ok(s * self.grid.spacing())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_xy_csv(writer, &self.grid, &self.weights)
    }
}

fn write_xy_csv<W: Write>(writer: W, grid: &Grid, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "value"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([format!("{:.16e}", grid.node(i)), format!("{v:.16e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Compensated summation.
pub(crate) fn neumaier_sum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
