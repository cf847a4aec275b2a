//! Finite-difference eigenvalue oracle for cross-checking the root finder.
//!
//! The discrete operator is a tridiagonal second-difference matrix plus one
//! column carrying `q(x_i) y(a)`. Eigenvalues near given targets are found by
//! shifted inverse iteration, with the rank-one column handled by the
//! Sherman–Morrison formula over a pivoted tridiagonal factorization.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Bc, BvpConfig, Potential};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Discretization of `−y'' + q(x) y(a)` on `M` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FdOperator {
    lower: Vec<C>,
    diag: Vec<C>,
    upper: Vec<C>,
    /// Unknown that carries `y(a)`, absent when `a` sits on a Dirichlet end.
    column: Option<usize>,
    load: Vec<C>,
}

impl FdOperator {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn column(&self) -> Option<usize> {
        self.column
    }

    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let n = self.dim();
        let mut y: Vec<C> = (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect();
        if let Some(c) = self.column {
            for (yi, qi) in y.iter_mut().zip(&self.load) {
                *yi += qi * x[c];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Vec<Vec<C>> {
        let n = self.dim();
        let mut a = vec![vec![ZERO; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i > 0 {
                a[i][i - 1] = self.lower[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = self.upper[i];
            }
            if let Some(c) = self.column {
                a[i][c] += self.load[i];
            }
        }
        a
    }

    /// Solver for `(A − σ) x = b`.
    fn shifted(&self, sigma: C) -> ShiftedSolver {
        let lu = TridiagonalLu::factor(
            self.lower.clone(),
            self.diag.iter().map(|d| d - sigma).collect(),
            self.upper.clone(),
        );
        let correction = self.column.map(|c| {
            let mut z = self.load.clone();
            lu.solve(&mut z);
            let denom = C::new(1.0, 0.0) + z[c];
            (c, z, denom)
        });
        ShiftedSolver { lu, correction }
    }
}

struct ShiftedSolver {
    lu: TridiagonalLu,
    correction: Option<(usize, Vec<C>, C)>,
}

impl ShiftedSolver {
    fn solve(&self, b: &mut [C]) {
        self.lu.solve(b);
        if let Some((c, z, denom)) = &self.correction {
            let f = b[*c] / denom;
            for (bi, zi) in b.iter_mut().zip(z) {
                *bi -= zi * f;
            }
        }
    }
}

/// LU factorization of a tridiagonal matrix with partial pivoting.
struct TridiagonalLu {
    dl: Vec<C>,
    d: Vec<C>,
    du: Vec<C>,
    du2: Vec<C>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(mut dl: Vec<C>, mut d: Vec<C>, mut du: Vec<C>) -> Self {
        let n = d.len();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swapped = vec![false; n];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != ZERO {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [C]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Builds the operator on `m` cells; `a` must be a grid node.
pub fn fd_matrix(q: &Potential, config: &BvpConfig, m: usize) -> Result<FdOperator> {
    if m < 16 {
        return Err(Error::input(
            "M",
            format!("oracle grid needs at least 16 cells, got {m}"),
        ));
    }
    let ia = config.split_index(m).ok_or_else(|| {
        Error::Config(format!(
            "a = {} is not a node of the {m}-cell grid",
            config.a()
        ))
    })?;
    let q = q.resampled(m);
    let h = std::f64::consts::PI / m as f64;
    let inv = 1.0 / (h * h);
    let first = 1 - config.alpha().index() as usize;
    let last = m - 1 + config.beta().index() as usize;
    let n = last - first + 1;

    let diag = vec![C::new(2.0 * inv, 0.0); n];
    let mut lower = vec![C::new(-inv, 0.0); n - 1];
    let mut upper = vec![C::new(-inv, 0.0); n - 1];
    if config.alpha() == Bc::Neumann {
        upper[0] = C::new(-2.0 * inv, 0.0);
    }
    if config.beta() == Bc::Neumann {
        lower[n - 2] = C::new(-2.0 * inv, 0.0);
    }
    let on_dirichlet_end =
        (ia == 0 && config.alpha() == Bc::Dirichlet) || (ia == m && config.beta() == Bc::Dirichlet);
    let column = (!on_dirichlet_end).then(|| ia - first);
    let load = (first..=last).map(|i| q.samples()[i]).collect();
    Ok(FdOperator {
        lower,
        diag,
        upper,
        column,
        load,
    })
}

/// Eigenvalue of `op` closest to each target, by shifted inverse iteration.
pub fn fd_eigenvalues_near(op: &FdOperator, targets: &[C], tol: f64) -> Result<Vec<C>> {
    targets
        .par_iter()
        .map(|&t| inverse_iteration(op, t, tol))
        .collect()
}

fn inverse_iteration(op: &FdOperator, target: C, tol: f64) -> Result<C> {
    let sigma = target + 1e-7 * target.norm().max(1.0);
    let solver = op.shifted(sigma);
    let n = op.dim();
    let mut v: Vec<C> = (0..n)
        .map(|j| C::new(1.0 + 0.5 * (0.7 * j as f64).sin(), 0.0))
        .collect();
    normalize(&mut v);
    let mut previous: Option<C> = None;
    for _ in 0..200 {
        let mut w = v.clone();
        solver.solve(&mut w);
        let dot: C = v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
        let mu = sigma + C::new(1.0, 0.0) / dot;
        if !mu.is_finite() {
            break;
        }
        normalize(&mut w);
        v = w;
        if let Some(p) = previous {
            if (mu - p).norm() <= tol * mu.norm().max(1.0) {
                return Ok(mu);
            }
        }
        previous = Some(mu);
    }
    Err(Error::OracleNoConvergence { target })
}

fn normalize(v: &mut [C]) {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in v {
        *c /= norm;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SplitPoint;
    use std::f64::consts::PI;

    fn real(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn cfg(a: SplitPoint, alpha: u8, beta: u8) -> BvpConfig {
        BvpConfig::with_indices(a, alpha, beta).unwrap()
    }

    fn half() -> SplitPoint {
        SplitPoint::pi_rational(1, 2).unwrap()
    }

    fn laplacian_eigenvalue(k: f64, m: usize) -> f64 {
        let h = PI / m as f64;
        (2.0 - 2.0 * (k * h).cos()) / (h * h)
    }

    #[test]
    fn zero_potential_matches_stencil_spectrum() {
        let m = 400;
        let op = fd_matrix(&Potential::zero(m), &cfg(half(), 0, 0), m).unwrap();
        assert_eq!(op.dim(), m - 1);
        let got = fd_eigenvalues_near(&op, &[real(1.0), real(4.0), real(9.0)], 1e-13).unwrap();
        for (k, g) in got.iter().enumerate() {
            let want = laplacian_eigenvalue((k + 1) as f64, m);
            assert!((g - want).norm() < 1e-9, "k={}: {g} vs {want}", k + 1);
        }
    }

    #[test]
    fn neumann_ends_give_stencil_spectrum() {
        let m = 200;
        let op = fd_matrix(&Potential::zero(m), &cfg(half(), 1, 1), m).unwrap();
        assert_eq!(op.dim(), m + 1);
        let got = fd_eigenvalues_near(&op, &[real(0.0), real(1.0), real(4.0)], 1e-13).unwrap();
        for (k, g) in got.iter().enumerate() {
            let want = laplacian_eigenvalue(k as f64, m);
            assert!((g - want).norm() < 1e-9, "k={k}: {g} vs {want}");
        }
        let op = fd_matrix(&Potential::zero(m), &cfg(half(), 0, 1), m).unwrap();
        let got = fd_eigenvalues_near(&op, &[real(0.25), real(2.25)], 1e-13).unwrap();
        for (k, g) in got.iter().enumerate() {
            let want = laplacian_eigenvalue(k as f64 + 0.5, m);
            assert!((g - want).norm() < 1e-9, "k={k}: {g} vs {want}");
        }
    }

    #[test]
    fn frozen_term_vanishes_at_a_dirichlet_end() {
        let m = 32;
        let q = Potential::from_fn(m, |x| C::new(1.0 + x, -x));
        let config = cfg(SplitPoint::real(0.0).unwrap(), 0, 1);
        let op = fd_matrix(&q, &config, m).unwrap();
        let zero = fd_matrix(&Potential::zero(m), &config, m).unwrap();
        assert_eq!(op.column(), None);
        assert_eq!(op.to_dense(), zero.to_dense());
    }

    #[test]
    fn frozen_term_has_rank_one() {
        let m = 24;
        let q = Potential::from_fn(m, |x| C::new(x.sin() + 0.1, 0.3));
        for (al, be) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let config = cfg(SplitPoint::pi_rational(1, 3).unwrap(), al, be);
            let a = fd_matrix(&q, &config, m).unwrap().to_dense();
            let b = fd_matrix(&Potential::zero(m), &config, m)
                .unwrap()
                .to_dense();
            let diff: Vec<Vec<C>> = a
                .iter()
                .zip(&b)
                .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
                .collect();
            let nonzero_cols: Vec<usize> = (0..diff.len())
                .filter(|&j| diff.iter().any(|row| row[j] != ZERO))
                .collect();
            assert_eq!(nonzero_cols.len(), 1, "({al},{be})");
        }
    }

    #[test]
    fn off_grid_split_point_is_rejected() {
        let config = cfg(SplitPoint::real(1.0).unwrap(), 0, 0);
        assert!(matches!(
            fd_matrix(&Potential::zero(100), &config, 100),
            Err(Error::Config(_))
        ));
        assert!(fd_matrix(&Potential::zero(8), &cfg(half(), 0, 0), 8).is_err());
    }

    #[test]
    fn pivoted_solve_is_exact() {
        let m = 40;
        let q = Potential::from_fn(m, |x| C::new(3.0 * x.cos(), x));
        let op = fd_matrix(&q, &cfg(SplitPoint::pi_rational(1, 4).unwrap(), 1, 0), m).unwrap();
        let sigma = C::new(37.0, 2.0);
        let solver = op.shifted(sigma);
        let b: Vec<C> = (0..op.dim())
            .map(|j| C::new((j as f64).cos(), 1.0))
            .collect();
        let mut x = b.clone();
        solver.solve(&mut x);
        let ax = op.apply(&x);
        for j in 0..op.dim() {
            let r = ax[j] - sigma * x[j] - b[j];
            assert!(r.norm() < 1e-9, "row {j}: {r}");
        }
    }

    #[test]
    fn sin2x_leaves_low_eigenvalues_in_place() {
        let m = 2000;
        let q = Potential::from_fn(m, |x| real((2.0 * x).sin()));
        let op = fd_matrix(&q, &cfg(half(), 0, 0), m).unwrap();
        let got = fd_eigenvalues_near(&op, &[real(1.0), real(4.0)], 1e-13).unwrap();
        assert!((got[0] - real(1.0)).norm() < 1e-5, "{}", got[0]);
        assert!((got[1] - real(4.0)).norm() < 1e-5, "{}", got[1]);
    }

    #[test]
    fn scaled_sin_x_first_eigenvalue() {
        let m = 4000;
        let q = Potential::from_fn(m, |x| real(5.0 * x.sin()));
        let op = fd_matrix(&q, &cfg(half(), 0, 0), m).unwrap();
        let got = fd_eigenvalues_near(&op, &[real(6.0)], 1e-13).unwrap();
        assert!((got[0] - real(6.0)).norm() < 1e-3, "{}", got[0]);
    }
}
