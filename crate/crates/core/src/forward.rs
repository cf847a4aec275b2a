//! Eigenvalues as zeros of Δ, asymptotic remainders, and the ball condition.
//!
//! Each `ρ_n` is sought near its own node `z_n`. When the perturbation is
//! provably dominated by Δ₀ on the circle `|ρ − z_n| = R`, the disk holds exactly
//! one zero and a damped Newton iteration confined to it finds it. Otherwise the
//! zero is followed from `z_n²` along the deformation `Δ₀ + εP`, `ε: 0 → 1`, on a
//! complex path, and then polished on Δ itself.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfn::CharFnFromPotential;
use crate::error::{Error, Result};
use crate::model::{
    normalize_branch, omega_classify, weighted_norm_a, z_node, BvpConfig, IndexClassification,
    Potential, Spectrum,
};
use crate::quadrature::l2_norm;

type C = Complex64;

/// Imaginary bulge of the continuation path `ε(t) = t + iγ t(1 − t)`.
const PATH_BULGE: f64 = 0.618;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    /// Bound on `|Δ(ρ_n²)| / max(1, n^{α+β−1})`.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Allowed pre-snap distance `|ρ_n − z_n|` for `n ∈ Ω`.
    pub omega_tol: f64,
    /// Two roots closer than this are reported as a multiple root.
    pub collision_tol: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            residual_tol: 1e-10,
            max_iterations: 60,
            max_halvings: 20,
            omega_tol: 1e-8,
            collision_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSolution {
    pub spectrum: Spectrum,
    /// `|Δ(ρ_n²)|` at the returned roots.
    pub residuals: Vec<f64>,
    /// Roots for `n ∈ Ω` before they were set to `z_n`.
    pub pre_snap: BTreeMap<usize, C>,
    pub classification: IndexClassification,
}

/// First `n_max` eigenvalues of the problem with potential `q`.
pub fn eigenvalues(q: &Potential, config: &BvpConfig, n_max: usize) -> Result<Spectrum> {
    Ok(solve(q, config, n_max, &ForwardOptions::default())?.spectrum)
}

pub fn solve(
    q: &Potential,
    config: &BvpConfig,
    n_max: usize,
    options: &ForwardOptions,
) -> Result<ForwardSolution> {
    if n_max == 0 {
        return Err(Error::input("N", "must be positive"));
    }
    let cf = CharFnFromPotential::new(config, q);
    let radius = 0.45f64.min(1.0 + l2_norm(q));
    let solver = Solver {
        cf: &cf,
        options,
        radius,
        sin_floor: 0.99 * min_sin_on_circle(radius),
        l1: q.l1_bound(),
    };
    let roots: Vec<C> = (1..=n_max)
        .into_par_iter()
        .map(|n| solver.root(n))
        .collect::<Result<_>>()?;

    for i in 0..n_max {
        for j in i + 1..n_max {
            if (roots[i] - roots[j]).norm() < options.collision_tol {
                return Err(Error::Multiplicity { i: i + 1, j: j + 1 });
            }
        }
    }

    let classification = omega_classify(config, n_max);
    let mut rho = roots.clone();
    let mut pre_snap = BTreeMap::new();
    for &n in classification.omega() {
        let z = C::new(z_node(config, n), 0.0);
        let offset = (roots[n - 1] - z).norm();
        if offset >= options.omega_tol {
            return Err(Error::DegenerateDrift { n, offset });
        }
        pre_snap.insert(n, roots[n - 1]);
        rho[n - 1] = z;
    }
    let residuals = rho.iter().map(|r| cf.eval(r * r).norm()).collect();
    Ok(ForwardSolution {
        spectrum: Spectrum::from_rho(rho),
        residuals,
        pre_snap,
        classification,
    })
}

/// `min_{|w| = R} |sin(πw)|`, sampled on the circle.
fn min_sin_on_circle(radius: f64) -> f64 {
    (0..3600)
        .map(|i| {
            let w = C::from_polar(radius, 2.0 * PI * i as f64 / 3600.0);
            (w * PI).sin().norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Copy)]
enum Coordinate {
    Rho,
    Lambda,
}

impl Coordinate {
    fn lambda(self, w: C) -> C {
        match self {
            Coordinate::Rho => w * w,
            Coordinate::Lambda => w,
        }
    }

    fn chain(self, w: C) -> C {
        match self {
            Coordinate::Rho => w * 2.0,
            Coordinate::Lambda => C::new(1.0, 0.0),
        }
    }
}

struct Solver<'a> {
    cf: &'a CharFnFromPotential,
    options: &'a ForwardOptions,
    radius: f64,
    sin_floor: f64,
    l1: f64,
}

impl Solver<'_> {
    fn root(&self, n: usize) -> Result<C> {
        let config = self.cf.config();
        let z = z_node(config, n);
        let bound = (self.radius * PI).cosh() * self.l1 / self.sin_floor;
        let direct = if z - self.radius > bound {
            let center = C::new(z, 0.0);
            self.newton(Coordinate::Rho, center, Some((center, self.radius)))
                .ok()
        } else {
            None
        };
        let rho = match direct {
            Some(r) => r,
            None => {
                let lambda = self.track(n)?;
                let lambda = self
                    .newton(Coordinate::Lambda, lambda, None)
                    .map_err(|last| Error::NoConvergence {
                        n,
                        last: normalize_branch(last.sqrt()),
                    })?;
                lambda.sqrt()
            }
        };
        let rho = normalize_branch(rho);
        let residual = self.cf.eval(rho * rho).norm();
        let scale = (n as f64).powi(config.order_sum() as i32 - 1).max(1.0);
        if !residual.is_finite() || residual > self.options.residual_tol * scale {
            return Err(Error::NoConvergence { n, last: rho });
        }
        Ok(rho)
    }

    fn value_and_slope(&self, coordinate: Coordinate, w: C) -> (C, C) {
        let p = self.cf.parts(coordinate.lambda(w));
        (p.value(), p.derivative() * coordinate.chain(w))
    }

    /// Damped Newton iteration; on failure the last iterate is returned as the error.
    fn newton(
        &self,
        coordinate: Coordinate,
        start: C,
        disk: Option<(C, f64)>,
    ) -> std::result::Result<C, C> {
        let inside = |w: C| disk.is_none_or(|(c, r)| (w - c).norm() <= r);
        let mut w = start;
        let (mut f, mut df) = self.value_and_slope(coordinate, w);
        for _ in 0..self.options.max_iterations {
            if f.norm() == 0.0 {
                return Ok(w);
            }
            let step = -f / df;
            if !step.is_finite() {
                return Err(w);
            }
            let tiny = 1e-14 * w.norm().max(1.0);
            if step.norm() <= tiny {
                let next = w + step;
                return if inside(next) { Ok(next) } else { Err(next) };
            }
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..=self.options.max_halvings {
                let next = w + step * scale;
                if inside(next) {
                    let (fn_, dfn) = self.value_and_slope(coordinate, next);
                    if fn_.norm() < f.norm() {
                        accepted = Some((next, fn_, dfn));
                        break;
                    }
                }
                scale *= 0.5;
            }
            match accepted {
                Some((next, fn_, dfn)) => {
                    w = next;
                    f = fn_;
                    df = dfn;
                }
                // no further decrease is possible: accept if the step is already at rounding level
                None if step.norm() <= 1e-9 * w.norm().max(1.0) => return Ok(w),
                None => return Err(w),
            }
        }
        Err(w)
    }

    /// Follows the zero of `Δ₀ + ε(t)P` in λ from `z_n²` at `t = 0` to `t = 1`.
    fn track(&self, n: usize) -> Result<C> {
        let config = self.cf.config();
        let z = z_node(config, n);
        let spacing = if n == 1 { 2.0 * z + 1.0 } else { 2.0 * z - 1.0 };
        let eps = |t: f64| C::new(t, PATH_BULGE * t * (1.0 - t));
        let eps_dot = |t: f64| C::new(1.0, PATH_BULGE * (1.0 - 2.0 * t));

        let mut lambda = C::new(z * z, 0.0);
        let mut t = 0.0;
        let mut dt: f64 = 0.05;
        while t < 1.0 {
            if dt < 1e-7 {
                return Err(Error::NoConvergence {
                    n,
                    last: normalize_branch(lambda.sqrt()),
                });
            }
            let h = dt.min(1.0 - t);
            let p = self.cf.parts(lambda);
            let e = eps(t);
            let tangent = -p.perturbation * eps_dot(t) / (p.unperturbed_dl + p.perturbation_dl * e);
            let predicted = lambda + tangent * h;
            if !predicted.is_finite() || (tangent * h).norm() > 0.25 * spacing {
                dt = h * 0.5;
                continue;
            }
            match self.correct(predicted, eps(t + h), spacing) {
                Some(next) => {
                    lambda = next;
                    t = if h == 1.0 - t { 1.0 } else { t + h };
                    dt = (h * 1.5).min(0.25);
                }
                None => dt = h * 0.5,
            }
        }
        Ok(lambda)
    }

    fn correct(&self, predicted: C, e: C, spacing: f64) -> Option<C> {
        let mut lambda = predicted;
        for _ in 0..8 {
            let p = self.cf.parts(lambda);
            let step =
                -(p.unperturbed + p.perturbation * e) / (p.unperturbed_dl + p.perturbation_dl * e);
            if !step.is_finite() {
                return None;
            }
            lambda += step;
            if (lambda - predicted).norm() > 0.05 * spacing {
                return None;
            }
            if step.norm() <= 1e-12 * lambda.norm().max(1.0) {
                return Some(lambda);
            }
        }
        None
    }
}

/// `ν_n = n(ρ_n − z_n)/φ_α(a z_n)` on Ω̄.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRemainders {
    pub nu: BTreeMap<usize, C>,
    pub norm: f64,
}

pub fn remainders(spectrum: &Spectrum, config: &BvpConfig) -> AsymptoticRemainders {
    let cls = omega_classify(config, spectrum.len());
    let scaled: BTreeMap<usize, C> = cls
        .omega_bar()
        .iter()
        .map(|&n| (n, (spectrum.rho(n) - z_node(config, n)) * n as f64))
        .collect();
    let nu = scaled.iter().map(|(&n, &v)| (n, v / cls.phi(n))).collect();
    let norm =
        weighted_norm_a(&scaled, &cls).expect("keys are in the complement of the degenerate set");
    AsymptoticRemainders { nu, norm }
}

/// Outcome of the ball test `‖{n(ρ_n − z_n)}‖_a ≤ r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub within: bool,
    pub norm: f64,
    pub r: f64,
}

impl fmt::Display for Validation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = if self.within { "<=" } else { ">" };
        write!(f, "remainder a-norm {:.6e} {rel} r = {}", self.norm, self.r)
    }
}

pub fn validate(spectrum: &Spectrum, config: &BvpConfig, r: f64) -> Validation {
    let norm = remainders(spectrum, config).norm;
    Validation {
        within: norm <= r,
        norm,
        r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SplitPoint;

    fn real(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn cfg(a: SplitPoint, alpha: u8, beta: u8) -> BvpConfig {
        BvpConfig::with_indices(a, alpha, beta).unwrap()
    }

    fn half() -> SplitPoint {
        SplitPoint::pi_rational(1, 2).unwrap()
    }

    #[test]
    fn zero_potential_all_pairs() {
        for (al, be) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let config = cfg(half(), al, be);
            let s = eigenvalues(&Potential::zero(200), &config, 10).unwrap();
            for n in 1..=10 {
                assert!(
                    (s.rho(n) - z_node(&config, n)).norm() < 1e-12,
                    "({al},{be}) n={n}: {}",
                    s.rho(n)
                );
            }
        }
    }

    #[test]
    fn sin2x_has_the_unperturbed_spectrum() {
        let config = cfg(half(), 0, 0);
        let q = Potential::from_fn(2000, |x| real((2.0 * x).sin()));
        let sol = solve(&q, &config, 10, &ForwardOptions::default()).unwrap();
        for n in 1..=10 {
            assert!(
                (sol.spectrum.rho(n) - real(n as f64)).norm() < 1e-12,
                "n={n}"
            );
            assert!(sol.residuals[n - 1] < 1e-10);
        }
    }

    #[test]
    fn scaled_sin_x_moves_only_the_first_eigenvalue() {
        // Δ = (sin πρ/ρ)(1 + c/(1 − ρ²)) for q = c sin x, a = π/2
        let config = cfg(half(), 0, 0);
        let q = Potential::from_fn(4000, |x| real(5.0 * x.sin()));
        let sol = solve(&q, &config, 10, &ForwardOptions::default()).unwrap();
        assert!(
            (sol.spectrum.lambda(1) - real(6.0)).norm() < 1e-5,
            "{}",
            sol.spectrum.lambda(1)
        );
        for n in 2..=10 {
            assert!(
                (sol.spectrum.rho(n) - real(n as f64)).norm() < 1e-6,
                "n={n}: {}",
                sol.spectrum.rho(n)
            );
            if n % 2 == 0 {
                assert_eq!(sol.spectrum.rho(n), real(n as f64));
            }
        }
    }

    #[test]
    fn complex_potential_residuals_and_omega() {
        for (al, be) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let config = cfg(SplitPoint::pi_rational(1, 3).unwrap(), al, be);
            let m = config.snapped_grid_size(1000);
            let q = Potential::from_fn(m, |x| C::new(3.0 * x.cos() - 1.0, 2.0 * (2.0 * x).sin()));
            let sol = solve(&q, &config, 30, &ForwardOptions::default()).unwrap();
            for n in 1..=30 {
                let scale = (n as f64).powi(al as i32 + be as i32 - 1).max(1.0);
                assert!(
                    sol.residuals[n - 1] < 1e-10 * scale,
                    "({al},{be}) n={n}: {}",
                    sol.residuals[n - 1]
                );
            }
            for (&n, r) in &sol.pre_snap {
                assert!((r - z_node(&config, n)).norm() < 1e-8);
            }
            assert!(sol
                .pre_snap
                .keys()
                .copied()
                .eq(sol.classification.omega().iter().copied()));
        }
    }

    #[test]
    fn first_order_perturbation_limit() {
        let config = cfg(SplitPoint::real(1.0).unwrap(), 0, 1);
        let base = Potential::from_fn(1000, |x| C::new(x.cos(), 0.5));
        let eps = 1e-4;
        let a = eigenvalues(&base.scaled(real(eps)), &config, 8).unwrap();
        let b = eigenvalues(&base.scaled(real(eps / 2.0)), &config, 8).unwrap();
        for n in 1..=8 {
            let z = z_node(&config, n);
            let da = (a.rho(n) - z) * n as f64 / eps;
            let db = (b.rho(n) - z) * n as f64 / (eps / 2.0);
            assert!(
                (da - db).norm() < 1e-3 * (1.0 + da.norm()),
                "n={n}: {da} vs {db}"
            );
        }
    }

    #[test]
    fn remainders_examples() {
        let config = cfg(half(), 0, 0);
        let zero = Spectrum::unperturbed(&config, 10);
        let r = remainders(&zero, &config);
        assert!(r.nu.values().all(|v| *v == C::new(0.0, 0.0)));
        assert_eq!(r.norm, 0.0);

        let mut rho: Vec<C> = zero.rhos().to_vec();
        rho[0] += 0.1; // φ_0(π/2) = 1
        let s = Spectrum::from_rho(rho);
        let r = remainders(&s, &config);
        assert!((r.nu[&1] - real(0.1)).norm() < 1e-15);
        assert!((r.norm - 0.1).abs() < 1e-15);

        assert!(validate(&zero, &config, 1.0).within);
        let v = validate(&s, &config, 0.05);
        assert!(!v.within && (v.norm - 0.1).abs() < 1e-15);
    }

    #[test]
    fn remainders_plateau_for_scaled_sin_x() {
        let config = cfg(half(), 0, 0);
        let q = Potential::from_fn(2000, |x| real(5.0 * x.sin()));
        let s = eigenvalues(&q, &config, 80).unwrap();
        let norms: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| remainders(&Spectrum::from_rho(s.rhos()[..n].to_vec()), &config).norm)
            .collect();
        assert!((norms[2] - norms[1]).abs() < 1e-3 * norms[2], "{norms:?}");
        assert!(validate(&s, &config, 10.0 * l2_norm(&q)).within);
    }

    #[test]
    fn collisions_are_detected() {
        let config = cfg(half(), 0, 0);
        let q = Potential::zero(100);
        let options = ForwardOptions {
            collision_tol: 1.5,
            ..ForwardOptions::default()
        };
        assert!(matches!(
            solve(&q, &config, 3, &options),
            Err(Error::Multiplicity { i: 1, j: 2 })
        ));
    }
}
