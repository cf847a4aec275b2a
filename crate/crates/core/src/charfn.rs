//! The characteristic function Δ(λ), evaluated either from a potential in
//! closed form or from a spectrum as a regularized product.
//!
//! All kernels are written through the entire functions `S(x) = sin(xρ)/ρ` and
//! `C(x) = cos(xρ)` of `λ = ρ²`, so Δ is evaluated without any branch or
//! removable-singularity issues at `λ = 0`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{principal_sqrt, z_node, Bc, BvpConfig, Potential, Spectrum};
use crate::quadrature::{integrate_with_table, power_moments, Endpoint, NodeTrig, Shift, TrigKind};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

/// Below this `|ρ|` the split integrals are summed from power moments.
const MOMENT_RADIUS: f64 = 0.45;
const MOMENT_TERMS: usize = 15;
const MAX_POWER: usize = 2 * MOMENT_TERMS - 1;

/// `S(x) = sin(xρ)/ρ` and `dS/dλ`.
fn sin_kernel(x: f64, rho: C, lambda: C) -> (C, C) {
    if (rho * x).norm() < 1.5 {
        // Σ c_k λ^k with c_k = (−1)^k x^{2k+1}/(2k+1)!
        let mut c = x;
        let mut pow = C::new(1.0, 0.0);
        let mut prev_pow = ZERO;
        let (mut value, mut dl) = (ZERO, ZERO);
        for k in 0..25 {
            value += pow * c;
            dl += prev_pow * (c * k as f64);
            prev_pow = pow;
            pow *= lambda;
            c *= -x * x / ((2 * k + 2) * (2 * k + 3)) as f64;
        }
        (value, dl)
    } else {
        let s = (rho * x).sin() / rho;
        let dl = ((rho * x).cos() * x - s) / (lambda * 2.0);
        (s, dl)
    }
}

/// `C(x) = cos(xρ)` and `dC/dλ = −(x/2) S(x)`.
fn cos_kernel(x: f64, rho: C, lambda: C) -> (C, C) {
    let (s, _) = sin_kernel(x, rho, lambda);
    ((rho * x).cos(), -s * (x / 2.0))
}

fn kernel(bc: Bc, x: f64, rho: C, lambda: C) -> (C, C) {
    match bc {
        Bc::Dirichlet => sin_kernel(x, rho, lambda),
        Bc::Neumann => cos_kernel(x, rho, lambda),
    }
}

/// Δ for `q ≡ 0`.
pub fn delta0(config: &BvpConfig, lambda: C) -> C {
    delta0_with_derivative(config, lambda).0
}

/// Δ for `q ≡ 0` and its derivative in λ.
pub fn delta0_with_derivative(config: &BvpConfig, lambda: C) -> (C, C) {
    let rho = principal_sqrt(lambda);
    match (config.alpha(), config.beta()) {
        (Bc::Dirichlet, Bc::Dirichlet) => sin_kernel(PI, rho, lambda),
        (Bc::Dirichlet, Bc::Neumann) => cos_kernel(PI, rho, lambda),
        (Bc::Neumann, Bc::Dirichlet) => {
            let (v, d) = cos_kernel(PI, rho, lambda);
            (-v, -d)
        }
        (Bc::Neumann, Bc::Neumann) => {
            let (s, ds) = sin_kernel(PI, rho, lambda);
            (lambda * s, s + lambda * ds)
        }
    }
}

/// `lim_{λ→z_k²} Δ₀(λ)/(z_k² − λ)`.
pub fn node_derivative(config: &BvpConfig, k: usize) -> f64 {
    let sign = if k.is_multiple_of(2) { -1.0 } else { 1.0 }; // (−1)^{k+1}
    let z = z_node(config, k);
    match (config.alpha(), config.beta()) {
        (Bc::Dirichlet, Bc::Dirichlet) => PI * sign / (2.0 * z * z),
        (Bc::Dirichlet, Bc::Neumann) => PI * sign / (2.0 * z),
        (Bc::Neumann, Bc::Dirichlet) => -PI * sign / (2.0 * z),
        (Bc::Neumann, Bc::Neumann) if k == 1 => -PI,
        (Bc::Neumann, Bc::Neumann) => -PI / 2.0 * sign,
    }
}

/// Δ split into its `q`-free part and the part linear in `q`, each with its λ-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaParts {
    pub unperturbed: C,
    pub unperturbed_dl: C,
    pub perturbation: C,
    pub perturbation_dl: C,
}

impl DeltaParts {
    pub fn value(&self) -> C {
        self.unperturbed + self.perturbation
    }

    pub fn derivative(&self) -> C {
        self.unperturbed_dl + self.perturbation_dl
    }
}

struct SplitMoments {
    left: Vec<C>,
    right: Vec<C>,
}

/// Δ(λ) of the problem with potential `q`.
pub struct CharFnFromPotential {
    config: BvpConfig,
    q: Potential,
    split: Endpoint,
    moments: OnceLock<SplitMoments>,
}

impl CharFnFromPotential {
    pub fn new(config: &BvpConfig, q: &Potential) -> Self {
        let m = q.grid_size();
        let split = match config.split_index(m) {
            Some(i) => Endpoint::Node(i),
            None => Endpoint::Point(config.a()),
        };
        CharFnFromPotential {
            config: *config,
            q: q.clone(),
            split,
            moments: OnceLock::new(),
        }
    }

    pub fn config(&self) -> &BvpConfig {
        &self.config
    }

    pub fn potential(&self) -> &Potential {
        &self.q
    }

    pub fn eval(&self, lambda: C) -> C {
        self.evaluate(lambda, false).value()
    }

    /// Value and λ-derivative, split into unperturbed and perturbation parts.
    pub fn parts(&self, lambda: C) -> DeltaParts {
        self.evaluate(lambda, true)
    }

    fn moments(&self) -> &SplitMoments {
        self.moments.get_or_init(|| {
            let m = self.q.grid_size();
            let s = self.q.samples();
            SplitMoments {
                left: power_moments(s, Endpoint::Node(0), self.split, Shift::None, MAX_POWER),
                right: power_moments(
                    s,
                    self.split,
                    Endpoint::Node(m),
                    Shift::Reflected,
                    MAX_POWER,
                ),
            }
        })
    }

    /// `∫ q K(arg)` and its λ-derivative for `K = S` or `C` on both sides of `a`.
    fn split_integrals(&self, rho: C, lambda: C, with_derivative: bool) -> [(C, C); 2] {
        let (alpha, beta) = (self.config.alpha(), self.config.beta());
        if rho.norm() < MOMENT_RADIUS {
            let mm = self.moments();
            return [
                series_integral(alpha, &mm.left, lambda),
                series_integral(beta, &mm.right, lambda),
            ];
        }
        let m = self.q.grid_size();
        let table = NodeTrig::new(rho, m);
        let s = self.q.samples();
        let side = |bc: Bc, lo: Endpoint, hi: Endpoint, shift: Shift| -> (C, C) {
            match bc {
                Bc::Dirichlet => {
                    let j =
                        integrate_with_table(s, &table, lo, hi, TrigKind::Sin, shift, false) / rho;
                    let dj = if with_derivative {
                        let w = integrate_with_table(s, &table, lo, hi, TrigKind::Cos, shift, true);
                        (w - j) / (lambda * 2.0)
                    } else {
                        ZERO
                    };
                    (j, dj)
                }
                Bc::Neumann => {
                    let j = integrate_with_table(s, &table, lo, hi, TrigKind::Cos, shift, false);
                    let dj = if with_derivative {
                        let w = integrate_with_table(s, &table, lo, hi, TrigKind::Sin, shift, true);
                        -w / (rho * 2.0)
                    } else {
                        ZERO
                    };
                    (j, dj)
                }
            }
        };
        [
            side(alpha, Endpoint::Node(0), self.split, Shift::None),
            side(beta, self.split, Endpoint::Node(m), Shift::Reflected),
        ]
    }

    fn evaluate(&self, lambda: C, with_derivative: bool) -> DeltaParts {
        let rho = principal_sqrt(lambda);
        let (d0, d0_dl) = delta0_with_derivative(&self.config, lambda);
        let a = self.config.a();
        let [(j1, j1_dl), (j2, j2_dl)] = self.split_integrals(rho, lambda, with_derivative);
        let (k1, k1_dl) = kernel(self.config.beta(), PI - a, rho, lambda);
        let (k2, k2_dl) = kernel(self.config.alpha(), a, rho, lambda);
        let sign = match self.config.alpha() {
            Bc::Dirichlet => 1.0,
            Bc::Neumann => -1.0,
        };
        let perturbation = (k1 * j1 + k2 * j2) * sign;
        let perturbation_dl = if with_derivative {
            (k1_dl * j1 + k1 * j1_dl + k2_dl * j2 + k2 * j2_dl) * sign
        } else {
            ZERO
        };
        DeltaParts {
            unperturbed: d0,
            unperturbed_dl: if with_derivative { d0_dl } else { ZERO },
            perturbation,
            perturbation_dl,
        }
    }
}

/// Taylor series in λ of `∫ q K(arg)` from the moments `∫ q arg^j`.
fn series_integral(bc: Bc, moments: &[C], lambda: C) -> (C, C) {
    let offset = match bc {
        Bc::Dirichlet => 1,
        Bc::Neumann => 0,
    };
    let mut fact = 1.0; // (2k + offset)!
    let mut pow = C::new(1.0, 0.0);
    let mut prev_pow = ZERO;
    let (mut value, mut dl) = (ZERO, ZERO);
    for k in 0..MOMENT_TERMS {
        let j = 2 * k + offset;
        if k > 0 {
            fact *= ((j - 1) * j) as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let c = moments[j] * (sign / fact);
        value += c * pow;
        dl += c * prev_pow * k as f64;
        prev_pow = pow;
        pow *= lambda;
    }
    (value, dl)
}

pub fn delta_from_potential(cf: &CharFnFromPotential, lambda: C) -> C {
    cf.eval(lambda)
}

/// Δ(λ) rebuilt from the first `N` eigenvalues, with `λ_n = z_n²` beyond `N`.
pub struct CharFnFromSpectrum {
    config: BvpConfig,
    lambdas: Vec<C>,
    nodes: Vec<f64>,
}

impl CharFnFromSpectrum {
    pub fn new(config: &BvpConfig, spectrum: &Spectrum) -> Self {
        CharFnFromSpectrum {
            config: *config,
            lambdas: spectrum.lambdas(),
            nodes: (1..=spectrum.len())
                .map(|n| z_node(config, n).powi(2))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `Δ₀(λ) Π (λ_n − λ)/(z_n² − λ)`; fails inside the exclusion radius of a node.
    pub fn eval(&self, lambda: C) -> Result<C> {
        let mut prod = delta0(&self.config, lambda);
        for (i, (&ln, &zn)) in self.lambdas.iter().zip(&self.nodes).enumerate() {
            let gap = C::new(zn, 0.0) - lambda;
            if gap.norm() < 1e-6 * zn.max(1.0) {
                return Err(Error::NodeCollision { k: i + 1, lambda });
            }
            prod *= (ln - lambda) / gap;
        }
        Ok(prod)
    }

    /// Δ(z_k²) from the limit form of the product.
    pub fn at_node(&self, k: usize) -> Result<C> {
        if k == 0 || k > self.len() {
            return Err(Error::input(
                "k",
                format!("node index {k} outside 1..={}", self.len()),
            ));
        }
        let zk = self.nodes[k - 1];
        let mut prod = (self.lambdas[k - 1] - zk) * node_derivative(&self.config, k);
        for (i, (&ln, &zn)) in self.lambdas.iter().zip(&self.nodes).enumerate() {
            if i + 1 != k {
                prod *= (ln - zk) / (zn - zk);
            }
        }
        Ok(prod)
    }
}

pub fn delta_from_spectrum(cf: &CharFnFromSpectrum, lambda: C) -> Result<C> {
    cf.eval(lambda)
}

pub fn delta_at_node(cf: &CharFnFromSpectrum, k: usize) -> Result<C> {
    cf.at_node(k)
}
