//! Hilbert transform `f̃(x) = (1/π) p.v. ∫ f(t)/(x − t) dt`.
//!
//! Two discretizations are provided. The spectral path is the lattice
//! transform `f̃_i = (2/π) Σ_{k odd} f_{i−k}/k`, whose frequency response is
//! exactly `−i·sign(ω)` on the sampling band; it is evaluated as a linear
//! (not periodic) convolution by FFT, so nothing wraps around. Samples are
//! taken as zero off the grid. The direct path is an O(n²) midpoint rule for
//! `∫ (f(t) − f(x))/(x − t) dt` plus the exact integral of the constant
//! `f(x)` over the grid; the removable singularity at `t = x` takes the value
//! `−f′(x)`. Each path is the other's cross-check.
//!
//! Both are trustworthy only away from the grid edges; see
//! [`crate::grid::INTERIOR_FRACTION`].

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Samples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Spectral,
    /// Direct principal-value quadrature.
    Pv,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Method::Spectral),
            "pv" | "direct" => Ok(Method::Pv),
            other => Err(Error::Malformed(format!("unknown method `{other}`"))),
        }
    }
}

/// Transform of the indicator of `[a, b]`: `(1/π) ln|(t − a)/(t − b)|`.
pub fn hilbert_indicator(a: f64, b: f64, t: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::Precondition(format!("need a < b, got ({a}, {b})")));
    }
    if t == a || t == b {
        return Err(Error::Singularity(t));
    }
    Ok(((t - a) / (t - b)).abs().ln() / PI)
}

/// Transform of `1/(1+t²)`, which is `t/(1+t²)`.
pub fn hilbert_cauchy(t: f64) -> f64 {
    t / t.mul_add(t, 1.0)
}

/// Discrete transform with the default (spectral) method.
pub fn hilbert_pv(f: &Samples) -> Samples {
    hilbert_with(f, Method::Spectral)
}

pub fn hilbert_with(f: &Samples, method: Method) -> Samples {
    let values = match method {
        Method::Spectral => spectral(f),
        Method::Pv => direct(f),
    };
    Samples::new(*f.grid(), values).expect("transform of finite samples is finite")
}

fn spectral(f: &Samples) -> Vec<f64> {
    let n = f.len();
    let size = 2 * n;
    // kernel 2/(πk) on odd offsets k, wrapped for a linear convolution
    let mut kernel = vec![Complex64::new(0.0, 0.0); size];
    for k in (1..n).step_by(2) {
        let h = 2.0 / (PI * k as f64);
        kernel[k].re = h;
        kernel[size - k].re = -h;
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &x) in buf.iter_mut().zip(f.values()) {
        b.re = x;
    }

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    forward.process(&mut kernel);
    forward.process(&mut buf);
    for (b, k) in buf.iter_mut().zip(&kernel) {
        *b *= k;
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = 1.0 / size as f64;
    buf[..n].iter().map(|c| c.re * scale).collect()
}

fn direct(f: &Samples) -> Vec<f64> {
    let g = f.grid();
    let n = f.len();
    let dx = g.spacing();
    let v = f.values();
    let (lo, hi) = (g.lo(), g.hi());
    let slope = |i: usize| -> f64 {
        if i == 0 {
            (v[1] - v[0]) / dx
        } else if i == n - 1 {
            (v[n - 1] - v[n - 2]) / dx
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * dx)
        }
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = g.node(i);
            let fi = v[i];
            let mut s = 0.0;
            for (j, &fj) in v.iter().enumerate() {
                if j != i {
                    s += (fj - fi) / (i as f64 - j as f64);
                }
            }
            // s carries 1/(x_i − x_j) = 1/((i − j)Δ), times the cell width Δ
            let smooth = s - slope(i) * dx;
            let constant = fi * ((xi - lo) / (hi - xi)).ln();
            (smooth + constant) / PI
        })
        .collect()
}

/// `∫ f·g̃ dx + ∫ f̃·g dx`, which vanishes for the exact transform.
pub fn pairing_defect(f: &Samples, g: &Samples) -> Result<f64> {
    f.check_same_grid(g)?;
    let ft = hilbert_pv(f);
    let gt = hilbert_pv(g);
    Ok(f.inner(&gt)? + ft.inner(g)?)
}

/// Outcome of the product identity `H(f² − f̃²) = 2 f f̃`.
#[derive(Debug, Clone)]
pub struct TricomiDefect {
    /// `∫ f f̃ dx`.
    pub scalar: f64,
    /// `H(f² − f̃²) − 2 f f̃` at every node.
    pub pointwise: Samples,
}

impl TricomiDefect {
    /// Largest pointwise defect over the interior window.
    pub fn interior_max(&self) -> f64 {
        self.pointwise
            .max_abs_where(&self.pointwise.grid().interior_mask())
    }
}

/// Checks that truncated samples have decayed at the grid edges:
/// `|f| ≤ 1e-6·max|f|` on the outermost 1% of nodes at each end. Compact
/// samples pass unconditionally.
pub fn check_decay(f: &Samples) -> Result<()> {
    if f.is_compact() {
        return Ok(());
    }
    let n = f.len();
    let edge = (n / 100).max(1);
    let bound = 1e-6 * f.max_abs();
    let v = f.values();
    let worst = v[..edge]
        .iter()
        .chain(&v[n - edge..])
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if worst > bound {
        return Err(Error::Precondition(format!(
            "samples do not decay at the grid edges: |f| = {worst:.3e} > {bound:.3e}"
        )));
    }
    Ok(())
}

/// Width factor of the window on which the product identity is evaluated
/// for compact samples.
const COMPACT_EXTENSION: usize = 4;

/// `H(f² − f̃²) − 2 f f̃` on the grid of `f`.
///
/// `f̃²` does not vanish off the grid even when `f` does. For compact `f` the
/// transform is known everywhere, so the identity is evaluated on a window
/// [`COMPACT_EXTENSION`] times wider and restricted back; truncated `f` must
/// have decayed (see [`check_decay`]).
pub fn tricomi_defect(f: &Samples) -> Result<TricomiDefect> {
    check_decay(f)?;
    let g = *f.grid();
    let n = f.len();
    let (work, offset) = if f.is_compact() {
        let pad = (COMPACT_EXTENSION - 1) * n / 2;
        let dx = g.spacing();
        let wide = Grid::new(
            g.lo() - pad as f64 * dx,
            g.hi() + pad as f64 * dx,
            n + 2 * pad,
        )?;
        let mut v = vec![0.0; wide.len()];
        v[pad..pad + n].copy_from_slice(f.values());
        (Samples::new(wide, v)?.into_compact(), pad)
    } else {
        (f.clone(), 0)
    };

    let ft = hilbert_pv(&work);
    let diff = work.zip_with(&ft, |a, b| a * a - b * b)?;
    let diff = Samples::new(*diff.grid(), diff.into_values())?;
    let h = hilbert_pv(&diff);
    let pointwise: Vec<f64> = (offset..offset + n)
        .map(|i| h.values()[i] - 2.0 * work.values()[i] * ft.values()[i])
        .collect();
    Ok(TricomiDefect {
        scalar: work.inner(&ft)?,
        pointwise: Samples::new(g, pointwise)?,
    })
}
