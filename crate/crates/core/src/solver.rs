//! Discrete weighted-energy minimization.
//!
//! With cell masses `m_i = w_i Δ` the energy
//! `∫∫ ln(1/|x − t|) dμ dμ + 2∫ V dμ` becomes `mᵀKm + 2cᵀm` on the standard
//! simplex, where `K` is the [`LogKernel`] and `c_i = V(x_i)`. Its KKT
//! conditions are `(Km)_i + c_i = F` where `m_i > 0` and `≥ F` elsewhere,
//! i.e. the equilibrium conditions `U^μ + V = F` on the support and
//! `U^μ + V ≥ F` off it.
//!
//! The minimizer is an accelerated projected gradient method (FISTA with a
//! monotone safeguard and adaptive restart). Every step is a gradient step
//! from the extrapolated point with a backtracked step length, followed by
//! the exact Euclidean projection onto the simplex; a candidate replaces the
//! current iterate only if it does not increase the energy.

use std::f64::consts::PI;
use std::ops::Range;
use std::path::Path;

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::grid::{neumaier_sum, DiscreteMeasure, Grid, Samples};
use crate::kernel::LogKernel;
use crate::potential::{self, ResidualReport};

/// Relative weight below which a cell is not counted as support.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-8;

/// Shortest run of active cells reported as a support interval.
pub const MIN_SUPPORT_RUN: usize = 3;

#[derive(Debug, Clone)]
pub struct EnergyModel {
    grid: Grid,
    kernel: LogKernel,
    field_values: Vec<f64>,
}

pub fn assemble_energy(grid: &Grid, field: &Field) -> Result<EnergyModel> {
    Ok(EnergyModel {
        grid: *grid,
        kernel: LogKernel::new(grid),
        field_values: field.values_on(grid)?,
    })
}

impl EnergyModel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &LogKernel {
        &self.kernel
    }

    /// `c_i = V(x_i)`.
    pub fn field_values(&self) -> &[f64] {
        &self.field_values
    }

    /// `mᵀKm + 2cᵀm` for cell masses `m`.
    pub fn energy(&self, masses: &[f64]) -> f64 {
        let km = self.kernel.apply(masses);
        self.energy_with(masses, &km)
    }

    fn energy_with(&self, masses: &[f64], km: &[f64]) -> f64 {
        neumaier_sum(
            masses
                .iter()
                .zip(km)
                .zip(&self.field_values)
                .map(|((m, k), c)| m * (k + 2.0 * c)),
        )
    }

    /// `U_i + V_i`, half the energy gradient.
    pub fn potential_plus_field(&self, masses: &[f64]) -> Vec<f64> {
        let mut g = self.kernel.apply(masses);
        for (gi, c) in g.iter_mut().zip(&self.field_values) {
            *gi += c;
        }
        g
    }

    /// Largest eigenvalue of `K` restricted to zero-sum vectors, by power
    /// iteration from the lowest nonconstant cosine mode.
    pub fn tangent_spectral_radius(&self, iters: usize) -> f64 {
        let n = self.grid.len();
        let mut v: Vec<f64> = (0..n)
            .map(|i| (PI * (i as f64 + 0.5) / n as f64).cos())
            .collect();
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            center(&mut v);
            let norm = l2(&v);
            if norm == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            let mut kv = self.kernel.apply(&v);
            center(&mut kv);
            lambda = dot(&v, &kv);
            v = kv;
        }
        lambda.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    /// Factor by which the curvature estimate grows when a step overshoots.
    pub growth: f64,
    /// Power iterations used for the initial curvature estimate.
    pub power_iters: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            growth: 2.0,
            power_iters: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when the relative KKT residual drops to this level.
    pub kkt_tol: f64,
    pub step_policy: StepPolicy,
    pub support_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            kkt_tol: 1e-8,
            step_policy: StepPolicy::default(),
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.kkt_tol > 0.0) {
            return Err(Error::Precondition(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::Precondition("max_iters must be at least 1".into()));
        }
        if !(self.step_policy.growth > 1.0) {
            return Err(Error::Precondition("step growth must exceed 1".into()));
        }
        if !(self.support_threshold > 0.0 && self.support_threshold < 1.0) {
            return Err(Error::Precondition(format!(
                "support threshold must lie in (0, 1), got {}",
                self.support_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub measure: DiscreteMeasure,
    pub iterations: usize,
    pub converged: bool,
    /// Relative KKT residual of the returned iterate.
    pub kkt_residual: f64,
    /// Energy of the current iterate after each iteration, starting with the
    /// initial point.
    pub energy_trace: Vec<f64>,
}

/// Relative KKT residual and the mass-weighted constant `F̂ = Σ m_i g_i`
/// for masses `m` with `g = Km + c`.
pub fn kkt_residual(masses: &[f64], g: &[f64]) -> (f64, f64) {
    let f = neumaier_sum(masses.iter().zip(g).map(|(m, gi)| m * gi));
    let worst = masses.iter().zip(g).fold(0.0_f64, |acc, (&m, &gi)| {
        let r = if m > 0.0 {
            (gi - f).abs()
        } else {
            (f - gi).max(0.0)
        };
        acc.max(r)
    });
    (worst / (1.0 + f.abs()), f)
}

/// Minimizes from the uniform density.
pub fn minimize(model: &EnergyModel, opts: &SolverOptions) -> Result<MinimizeOutcome> {
    minimize_from(model, opts, &DiscreteMeasure::uniform(model.grid))
}

pub fn minimize_from(
    model: &EnergyModel,
    opts: &SolverOptions,
    start: &DiscreteMeasure,
) -> Result<MinimizeOutcome> {
    opts.validate()?;
    if !start.grid().same_as(&model.grid) {
        return Err(Error::GridMismatch);
    }
    let n = model.grid.len();
    let c = &model.field_values;
    let kernel = &model.kernel;

    let mut lip = model
        .tangent_spectral_radius(opts.step_policy.power_iters)
        .max(f64::MIN_POSITIVE);

    let mut x = start.masses();
    let mut kx = kernel.apply(&x);
    let mut x_prev = x.clone();
    let mut kx_prev = kx.clone();
    let mut y = x.clone();
    let mut ky = kx.clone();
    let mut momentum = 1.0_f64;

    let mut energy = model.energy_with(&x, &kx);
    let mut trace = vec![energy];
    let g0: Vec<f64> = kx.iter().zip(c).map(|(k, c)| k + c).collect();
    let (mut residual, _) = kkt_residual(&x, &g0);
    let mut converged = residual <= opts.kkt_tol;
    let mut iterations = 0;

    let mut step = vec![0.0; n];
    while !converged && iterations < opts.max_iters {
        iterations += 1;

        // backtracking on the curvature of the quadratic along z − y
        let (z, kz) = loop {
            for i in 0..n {
                step[i] = y[i] - (ky[i] + c[i]) / lip;
            }
            let z = project_simplex(&step);
            let kz = kernel.apply(&z);
            let mut dd = 0.0;
            let mut dkd = 0.0;
            for i in 0..n {
                let d = z[i] - y[i];
                dd += d * d;
                dkd += d * (kz[i] - ky[i]);
            }
            if dkd <= lip * dd * (1.0 + 1e-12) || dd == 0.0 {
                break (z, kz);
            }
            lip *= opts.step_policy.growth;
            debug!("iteration {iterations}: curvature estimate raised to {lip:.4e}");
        };

        // φ(z) − φ(x) = (z − x)ᵀ(c + K(z + x)/2); centring the second factor
        // removes the rounding of Σ(z − x) ≈ 0
        let mid: Vec<f64> = (0..n).map(|i| c[i] + 0.5 * (kz[i] + kx[i])).collect();
        let centre = neumaier_sum(z.iter().zip(&mid).map(|(a, b)| a * b));
        let decrease = neumaier_sum((0..n).map(|i| (z[i] - x[i]) * (mid[i] - centre)));

        let accepted = decrease <= 0.0;
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut kx_prev, &mut kx);
        if accepted {
            x = z.clone();
            kx = kz.clone();
            energy += 2.0 * decrease;
        } else {
            x.clone_from(&x_prev);
            kx.clone_from(&kx_prev);
        }
        trace.push(energy);

        if accepted {
            let g: Vec<f64> = kx.iter().zip(c).map(|(k, c)| k + c).collect();
            residual = kkt_residual(&x, &g).0;
            if residual <= opts.kkt_tol {
                converged = true;
                break;
            }
        }

        // restart when the candidate was rejected or the momentum points
        // against the last step
        let against = (0..n)
            .map(|i| (y[i] - z[i]) * (z[i] - x_prev[i]))
            .sum::<f64>()
            > 0.0;
        if !accepted || against {
            momentum = 1.0;
            y.clone_from(&x);
            ky.clone_from(&kx);
        } else {
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let beta = (momentum - 1.0) / next;
            for i in 0..n {
                y[i] = x[i] + beta * (x[i] - x_prev[i]);
                ky[i] = kx[i] + beta * (kx[i] - kx_prev[i]);
            }
            momentum = next;
        }
    }

    debug_assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    if !converged {
        warn!(
            "minimization stopped after {iterations} iterations with KKT residual {residual:.3e}"
        );
    }
    Ok(MinimizeOutcome {
        measure: DiscreteMeasure::from_masses(&x, model.grid)?,
        iterations,
        converged,
        kkt_residual: residual,
        energy_trace: trace,
    })
}

/// Euclidean projection onto `{p ≥ 0, Σ p = 1}` by sorting.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Maximal runs of at least [`MIN_SUPPORT_RUN`] cells whose weight exceeds
/// `threshold · max weight`.
pub fn support_runs(mu: &DiscreteMeasure, threshold: f64) -> Result<Vec<Range<usize>>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Precondition(format!(
            "support threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let cut = threshold * mu.max_weight();
    let w = mu.weights();
    let mut runs = Vec::new();
    let mut start = None;
    for i in 0..=w.len() {
        let active = i < w.len() && w[i] > cut;
        match (active, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= MIN_SUPPORT_RUN {
                    runs.push(s..i);
                }
                start = None;
            }
            _ => {}
        }
    }
    Ok(runs)
}

pub fn extract_support(mu: &DiscreteMeasure, threshold: f64) -> Result<Vec<Interval>> {
    let g = mu.grid();
    Ok(support_runs(mu, threshold)?
        .into_iter()
        .map(|r| Interval {
            lo: g.cell(r.start).0,
            hi: g.cell(r.end - 1).1,
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub field: Field,
    pub measure: DiscreteMeasure,
    pub support: Vec<Interval>,
    /// The constant `F` in `U^μ + V = F` on the support.
    pub constant: f64,
    pub residuals: ResidualReport,
    /// `(π·density)²`.
    pub h_plus: Samples,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub options: SolverOptions,
}

pub fn solve_equilibrium(
    field: &Field,
    lo: f64,
    hi: f64,
    n: usize,
    opts: &SolverOptions,
) -> Result<EquilibriumResult> {
    let grid = Grid::new(lo, hi, n)?;
    let model = assemble_energy(&grid, field)?;
    let out = minimize(&model, opts)?;
    finish(field, out, opts)
}

fn finish(field: &Field, out: MinimizeOutcome, opts: &SolverOptions) -> Result<EquilibriumResult> {
    let mu = out.measure;
    let support = extract_support(&mu, opts.support_threshold)?;
    let constant = potential::estimate_constant_with(&mu, field, opts.support_threshold)?;
    let residuals =
        potential::variational_residuals_with(&mu, field, constant, opts.support_threshold)?;
    let h_plus = Samples::new(
        *mu.grid(),
        mu.weights().iter().map(|w| (PI * w).powi(2)).collect(),
    )?
    .into_compact();
    Ok(EquilibriumResult {
        field: field.clone(),
        measure: mu,
        support,
        constant,
        residuals,
        h_plus,
        iterations: out.iterations,
        converged: out.converged,
        kkt_residual: out.kkt_residual,
        options: *opts,
    })
}

/// Solves from the uniform start and from a seeded random feasible start and
/// returns the `L¹` distance between the two densities.
pub fn uniqueness_probe(model: &EnergyModel, opts: &SolverOptions, seed: u64) -> Result<f64> {
    let a = minimize(model, opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..model.grid.len())
        .map(|_| rng.gen_range(0.01..1.0))
        .collect();
    let start = DiscreteMeasure::normalize(raw, model.grid)?;
    let b = minimize_from(model, opts, &start)?;
    a.measure.l1_distance(&b.measure)
}

/// On-disk form of an [`EquilibriumResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub field: String,
    pub grid: Grid,
    pub weights: Vec<f64>,
    pub support: Vec<Interval>,
    #[serde(rename = "F")]
    pub constant: f64,
    pub residuals: ResidualReport,
    pub h_plus: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub options: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness_gap: Option<f64>,
}

impl EquilibriumResult {
    pub fn to_file(&self) -> ResultFile {
        ResultFile {
            field: self.field.to_string(),
            grid: *self.measure.grid(),
            weights: self.measure.weights().to_vec(),
            support: self.support.clone(),
            constant: self.constant,
            residuals: self.residuals.clone(),
            h_plus: self.h_plus.values().to_vec(),
            iterations: self.iterations,
            converged: self.converged,
            kkt_residual: self.kkt_residual,
            options: self.options,
            uniqueness_gap: None,
        }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_file().save(path)
    }
}

impl ResultFile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let w = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let r = std::io::BufReader::new(std::fs::File::open(path)?);
        Ok(serde_json::from_reader(r)?)
    }

    /// Mass `Σ w_i Δ` of the stored weights.
    pub fn mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied()) * self.grid.spacing()
    }

    /// Rebuilds the result. Fails if the weights are not a probability
    /// density (mass off by more than 1e-9).
    pub fn into_result(self) -> Result<EquilibriumResult> {
        let field: Field = self.field.parse()?;
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights(format!("stored mass is {mass}")));
        }
        let measure = DiscreteMeasure::normalize(self.weights.clone(), self.grid)?;
        self.into_normalized_result(measure, field)
    }

    /// Rebuilds the result around `measure`, keeping the stored metadata and
    /// recomputing `h_plus`. Verification uses this so that a bad stored mass
    /// is measured rather than rejected on load.
    pub fn into_normalized_result(
        self,
        measure: DiscreteMeasure,
        field: Field,
    ) -> Result<EquilibriumResult> {
        if !measure.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let h_plus = Samples::new(
            self.grid,
            measure.weights().iter().map(|w| (PI * w).powi(2)).collect(),
        )?
        .into_compact();
        Ok(EquilibriumResult {
            field,
            measure,
            support: self.support,
            constant: self.constant,
            residuals: self.residuals,
            h_plus,
            iterations: self.iterations,
            converged: self.converged,
            kkt_residual: self.kkt_residual,
            options: self.options,
        })
    }
}

fn center(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
