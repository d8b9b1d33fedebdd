//! Independent reference computations shared by the integration tests. None
//! of these call into the library's numerical code.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `(1/π) p.v. ∫ f(t)/(x − t) dt` for a smooth `f` given in closed form.
///
/// Folding the integral about `x` gives `(1/π) ∫₀^∞ (f(x − s) − f(x + s))/s ds`,
/// whose integrand is bounded; the substitution `s = e^u` then leaves
/// `(1/π) ∫ (f(x − e^u) − f(x + e^u)) du`, integrated by Simpson on
/// `u ∈ [−40, ln s_max]`.
pub fn pv_transform(f: impl Fn(f64) -> f64, x: f64, s_max: f64) -> f64 {
    let g = |u: f64| {
        let s = u.exp();
        f(x - s) - f(x + s)
    };
    simpson(g, -40.0, s_max.ln(), 200_000) / PI
}

/// Dense Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot[col];
            if factor != 0.0 {
                for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= factor * p;
                }
                b[col + 1 + r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Discrete equilibrium from an exhaustive KKT solve.
pub struct KktSolution {
    pub masses: Vec<f64>,
    pub constant: f64,
    pub active: Vec<bool>,
}

/// Minimizes `mᵀKm + 2cᵀm` over the simplex for the kernel
/// `K_ij = −ln|x_i − x_j|`, `K_ii = ln(1/Δ) + 3/2` on the midpoint grid of
/// `[lo, hi]` with `n` cells and `c_i = v(x_i)`, by a primal active-set
/// method: solve the equality-constrained system on the current active set,
/// drop cells that come out negative, add back the cell whose inequality is
/// most violated, and repeat until both sign conditions hold.
pub fn kkt_oracle(v: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> KktSolution {
    let dx = (hi - lo) / n as f64;
    let x: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let k = |i: usize, j: usize| {
        if i == j {
            (1.0 / dx).ln() + 1.5
        } else {
            -(x[i] - x[j]).abs().ln()
        }
    };
    let c: Vec<f64> = x.iter().map(|&t| v(t)).collect();
    let mut active = vec![true; n];
    for _ in 0..10 * n {
        let idx: Vec<usize> = (0..n).filter(|&i| active[i]).collect();
        let p = idx.len();
        // [K_AA  −1] [m]   [−c_A]
        // [1ᵀ     0] [F] = [  1 ]
        let mut a = vec![vec![0.0; p + 1]; p + 1];
        let mut b = vec![0.0; p + 1];
        for (r, &i) in idx.iter().enumerate() {
            for (s, &j) in idx.iter().enumerate() {
                a[r][s] = k(i, j);
            }
            a[r][p] = -1.0;
            a[p][r] = 1.0;
            b[r] = -c[i];
        }
        b[p] = 1.0;
        let sol = solve_dense(a, b);
        let f = sol[p];
        let mut m = vec![0.0; n];
        for (r, &i) in idx.iter().enumerate() {
            m[i] = sol[r];
        }
        if let Some((r, _)) = idx
            .iter()
            .enumerate()
            .filter(|(r, _)| sol[*r] < 0.0)
            .min_by(|a, b| sol[a.0].total_cmp(&sol[b.0]))
        {
            active[idx[r]] = false;
            continue;
        }
        let g: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| k(i, j) * m[j]).sum::<f64>() + c[i])
            .collect();
        let worst = (0..n)
            .filter(|&i| !active[i])
            .min_by(|&i, &j| g[i].total_cmp(&g[j]));
        match worst {
            Some(i) if g[i] < f - 1e-12 * (1.0 + f.abs()) => active[i] = true,
            _ => {
                return KktSolution {
                    masses: m,
                    constant: f,
                    active,
                }
            }
        }
    }
    panic!("active-set oracle did not settle");
}

/// Largest `|a_i − b_i|` over indices where `keep` holds.
pub fn sup_where(a: &[f64], b: &[f64], keep: impl Fn(usize) -> bool) -> f64 {
    (0..a.len())
        .filter(|&i| keep(i))
        .map(|i| (a[i] - b[i]).abs())
        .fold(0.0, f64::max)
}
