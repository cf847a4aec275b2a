//! Domain types shared by every other module: the boundary value problem
//! parameters, potentials, spectra, the degenerate index set Ω, and the
//! weighted sequence norm used to measure spectral data.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Boundary condition at one end of `[0, π]`.
///
/// `Dirichlet` is index 0 (`y = 0`), `Neumann` is index 1 (`y' = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

impl Bc {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(Bc::Dirichlet),
            1 => Ok(Bc::Neumann),
            _ => Err(Error::input(
                "alpha/beta",
                format!("must be 0 or 1, got {i}"),
            )),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Bc::Dirichlet => 0,
            Bc::Neumann => 1,
        }
    }
}

/// Location of the frozen argument `a ∈ [0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitPoint {
    /// `a = pπ/q` with `gcd(p, q) = 1` and `p ≤ q`.
    PiRational { p: u64, q: u64 },
    /// A literal treated as an irrational multiple of π.
    Real(f64),
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl SplitPoint {
    /// Reduces `p/q` to lowest terms.
    pub fn pi_rational(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::input(
                "a.pi_rational",
                "denominator must be positive",
            ));
        }
        if p > q {
            return Err(Error::input(
                "a.pi_rational",
                format!("{p}/{q} > 1 puts a outside [0, π]"),
            ));
        }
        let g = gcd(p, q).max(1);
        Ok(SplitPoint::PiRational { p: p / g, q: q / g })
    }

    /// The endpoints 0 and π are stored exactly; every other literal is kept as is.
    pub fn real(a: f64) -> Result<Self> {
        if !a.is_finite() || !(0.0..=PI).contains(&a) {
            return Err(Error::input("a.real", format!("{a} is outside [0, π]")));
        }
        if a == 0.0 {
            return Ok(SplitPoint::PiRational { p: 0, q: 1 });
        }
        if a == PI {
            return Ok(SplitPoint::PiRational { p: 1, q: 1 });
        }
        Ok(SplitPoint::Real(a))
    }

    pub fn value(&self) -> f64 {
        match *self {
            SplitPoint::PiRational { p, q } => PI * p as f64 / q as f64,
            SplitPoint::Real(a) => a,
        }
    }
}

/// Parameters `(a, α, β)` of the boundary value problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpConfig {
    a: SplitPoint,
    alpha: Bc,
    beta: Bc,
}

impl BvpConfig {
    pub fn new(a: SplitPoint, alpha: Bc, beta: Bc) -> Self {
        BvpConfig { a, alpha, beta }
    }

    /// Convenience constructor from integer boundary indices.
    pub fn with_indices(a: SplitPoint, alpha: u8, beta: u8) -> Result<Self> {
        Ok(BvpConfig::new(
            a,
            Bc::from_index(alpha)?,
            Bc::from_index(beta)?,
        ))
    }

    pub fn split_point(&self) -> SplitPoint {
        self.a
    }

    pub fn a(&self) -> f64 {
        self.a.value()
    }

    pub fn alpha(&self) -> Bc {
        self.alpha
    }

    pub fn beta(&self) -> Bc {
        self.beta
    }

    /// `α + β` as an integer in `0..=2`.
    pub fn order_sum(&self) -> u8 {
        self.alpha.index() + self.beta.index()
    }

    /// Unperturbed node `z_n = n − (α+β)/2`.
    pub fn z(&self, n: usize) -> f64 {
        z_node(self, n)
    }

    /// Smallest grid size `≥ m` that puts `a` on a node, when `a = pπ/q` with `q ≤ m`.
    /// Otherwise `m` is returned unchanged and the cell containing `a` is split.
    pub fn snapped_grid_size(&self, m: usize) -> usize {
        match self.a {
            SplitPoint::PiRational { q, .. } if (q as usize) <= m => {
                let q = q as usize;
                m.div_ceil(q) * q
            }
            _ => m,
        }
    }

    /// Grid index of `a` on a uniform grid of `m` cells, if it is a node.
    pub fn split_index(&self, m: usize) -> Option<usize> {
        match self.a {
            SplitPoint::PiRational { p, q } => {
                let num = p as u128 * m as u128;
                num.is_multiple_of(q as u128)
                    .then(|| (num / q as u128) as usize)
            }
            SplitPoint::Real(a) => {
                let pos = a * m as f64 / PI;
                let r = pos.round();
                ((pos - r).abs() < 1e-12 * m as f64).then_some(r as usize)
            }
        }
    }
}

/// `z_n = n − (α+β)/2`.
pub fn z_node(config: &BvpConfig, n: usize) -> f64 {
    n as f64 - 0.5 * config.order_sum() as f64
}

/// `φ_0 = sin`, `φ_1 = cos`.
pub fn phi(alpha: Bc, x: Complex64) -> Complex64 {
    match alpha {
        Bc::Dirichlet => x.sin(),
        Bc::Neumann => x.cos(),
    }
}

pub fn phi_real(alpha: Bc, x: f64) -> f64 {
    match alpha {
        Bc::Dirichlet => x.sin(),
        Bc::Neumann => x.cos(),
    }
}

/// Principal square root with `arg ρ ∈ (−π/2, π/2]`.
pub fn principal_sqrt(lambda: Complex64) -> Complex64 {
    normalize_branch(lambda.sqrt())
}

/// Maps `ρ` to `±ρ` so that `arg ρ ∈ (−π/2, π/2]`.
pub fn normalize_branch(rho: Complex64) -> Complex64 {
    if rho.re < 0.0 || (rho.re == 0.0 && rho.im < 0.0) {
        -rho
    } else if rho.re == 0.0 && rho.im == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        rho
    }
}

/// Exact partition of `1..=N` into Ω (`φ_α(a z_n) = 0`) and its complement.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexClassification {
    n_max: usize,
    omega: Vec<usize>,
    omega_bar: Vec<usize>,
    phi_values: Vec<f64>,
}

impl IndexClassification {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn omega_bar(&self) -> &[usize] {
        &self.omega_bar
    }

    /// `φ_α(a z_n)`, exactly zero for `n ∈ Ω`.
    pub fn phi(&self, n: usize) -> f64 {
        self.phi_values[n - 1]
    }

    pub fn phi_values(&self) -> &[f64] {
        &self.phi_values
    }

    pub fn is_omega(&self, n: usize) -> bool {
        self.phi_values[n - 1] == 0.0
    }
}

/// Classifies `1..=n_max`. For `a = pπ/q` the zero test is an integer congruence on
/// `p(2n − α − β)`; a real literal yields an empty Ω.
pub fn omega_classify(config: &BvpConfig, n_max: usize) -> IndexClassification {
    let s = config.order_sum() as u128;
    let mut phi_values = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let value = match config.split_point() {
            SplitPoint::PiRational { p, q } => {
                // a z_n = π k / (2q) with k = p (2n − α − β)
                let k = p as u128 * (2 * n as u128 - s);
                let two_q = 2 * q as u128;
                let zero = match config.alpha() {
                    Bc::Dirichlet => k.is_multiple_of(two_q),
                    Bc::Neumann => k % two_q == q as u128,
                };
                if zero {
                    0.0
                } else {
                    let reduced = (k % (2 * two_q)) as f64;
                    phi_real(config.alpha(), PI * reduced / two_q as f64)
                }
            }
            SplitPoint::Real(a) => phi_real(config.alpha(), a * z_node(config, n)),
        };
        phi_values.push(value);
    }
    let (omega, omega_bar): (Vec<usize>, Vec<usize>) =
        (1..=n_max).partition(|&n| phi_values[n - 1] == 0.0);
    IndexClassification {
        n_max,
        omega,
        omega_bar,
        phi_values,
    }
}

/// `‖{x_n}‖_a = ‖{x_n / φ_α(a z_n)}‖` over the supplied keys.
pub fn weighted_norm_a(
    values: &BTreeMap<usize, Complex64>,
    classification: &IndexClassification,
) -> Result<f64> {
    let mut sum = 0.0;
    for (&n, x) in values {
        if n == 0 || n > classification.n_max() {
            return Err(Error::input(
                "n",
                format!("index {n} outside 1..={}", classification.n_max()),
            ));
        }
        let d = classification.phi(n);
        if d == 0.0 {
            return Err(Error::DegenerateIndex { n });
        }
        sum += x.norm_sqr() / (d * d);
    }
    Ok(sum.sqrt())
}

/// A potential sampled on the uniform grid `x_i = iπ/M`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    samples: Vec<Complex64>,
    preset: Option<TrigPreset>,
}

/// `q(x) = Σ c_n φ_α(z_n x)` for a finite list of `(n, c_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPreset {
    pub config: BvpConfig,
    pub terms: Vec<(usize, Complex64)>,
}

impl TrigPreset {
    pub fn eval(&self, x: f64) -> Complex64 {
        let alpha = self.config.alpha();
        self.terms
            .iter()
            .map(|&(n, c)| c * phi_real(alpha, z_node(&self.config, n) * x))
            .sum()
    }
}

impl Potential {
    pub fn from_samples(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::input("samples", "need at least M = 2 cells"));
        }
        if samples
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::input("samples", "non-finite value"));
        }
        Ok(Potential {
            samples,
            preset: None,
        })
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> Complex64) -> Self {
        assert!(m >= 2, "grid needs at least two cells");
        let samples = (0..=m).map(|i| f(grid_node(i, m))).collect();
        Potential {
            samples,
            preset: None,
        }
    }

    pub fn zero(m: usize) -> Self {
        Potential::from_fn(m, |_| Complex64::new(0.0, 0.0))
    }

    pub fn from_preset(config: &BvpConfig, m: usize, terms: Vec<(usize, Complex64)>) -> Self {
        let preset = TrigPreset {
            config: *config,
            terms,
        };
        let mut q = Potential::from_fn(m, |x| preset.eval(x));
        q.preset = Some(preset);
        q
    }

    /// Number of cells `M`.
    pub fn grid_size(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn step(&self) -> f64 {
        PI / self.grid_size() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        grid_node(i, self.grid_size())
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn preset(&self) -> Option<&TrigPreset> {
        self.preset.as_ref()
    }

    /// Piecewise-linear interpolation of the samples.
    pub fn value_at(&self, x: f64) -> Complex64 {
        let m = self.grid_size();
        let pos = (x / PI * m as f64).clamp(0.0, m as f64);
        let j = (pos.floor() as usize).min(m - 1);
        let s = pos - j as f64;
        self.samples[j] * (1.0 - s) + self.samples[j + 1] * s
    }

    /// Samples of the same piecewise-linear function on a grid of `m` cells.
    pub fn resampled(&self, m: usize) -> Potential {
        if m == self.grid_size() {
            return self.clone();
        }
        Potential::from_fn(m, |x| self.value_at(x))
    }

    pub fn scaled(&self, c: Complex64) -> Potential {
        Potential {
            samples: self.samples.iter().map(|&v| v * c).collect(),
            preset: self.preset.as_ref().map(|p| TrigPreset {
                config: p.config,
                terms: p.terms.iter().map(|&(n, v)| (n, v * c)).collect(),
            }),
        }
    }

    pub fn sum(&self, other: &Potential) -> Result<Potential> {
        if self.grid_size() != other.grid_size() {
            return Err(Error::input("samples", "grids differ"));
        }
        Ok(Potential {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            preset: None,
        })
    }

    pub fn difference(&self, other: &Potential) -> Result<Potential> {
        self.sum(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    /// Upper bound for `∫|q|` (trapezoid on `|q_i|` dominates the piecewise-linear integral).
    pub fn l1_bound(&self) -> f64 {
        let h = self.step();
        let m = self.grid_size();
        let inner: f64 = self.samples[1..m].iter().map(|c| c.norm()).sum();
        h * (inner + 0.5 * (self.samples[0].norm() + self.samples[m].norm()))
    }
}

pub(crate) fn grid_node(i: usize, m: usize) -> f64 {
    PI * i as f64 / m as f64
}

/// Index-aligned square roots of eigenvalues, `rho[n-1] = ρ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    rho: Vec<Complex64>,
}

impl Spectrum {
    /// Each entry is mapped onto the principal branch.
    pub fn from_rho(rho: Vec<Complex64>) -> Self {
        Spectrum {
            rho: rho.into_iter().map(normalize_branch).collect(),
        }
    }

    pub fn from_lambdas(lambdas: &[Complex64]) -> Self {
        Spectrum {
            rho: lambdas.iter().map(|&l| principal_sqrt(l)).collect(),
        }
    }

    /// The eigenvalues of `q ≡ 0`: `ρ_n = z_n`.
    pub fn unperturbed(config: &BvpConfig, n_max: usize) -> Self {
        Spectrum {
            rho: (1..=n_max)
                .map(|n| Complex64::new(z_node(config, n), 0.0))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn rho(&self, n: usize) -> Complex64 {
        self.rho[n - 1]
    }

    pub fn rhos(&self) -> &[Complex64] {
        &self.rho
    }

    pub fn lambda(&self, n: usize) -> Complex64 {
        let r = self.rho[n - 1];
        r * r
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.rho.iter().map(|r| r * r).collect()
    }

    /// Partial ℓ2 norm of `{n(ρ_n − z_n)}` over all stored indices.
    pub fn remainder_l2(&self, config: &BvpConfig) -> f64 {
        self.rho
            .iter()
            .enumerate()
            .map(|(i, r)| ((r - z_node(config, i + 1)) * (i + 1) as f64).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Data of the inverse problem: `ρ_n` for `n ∈ Ω̄` and `ξ_n` for `n ∈ Ω`, `n ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralInput {
    n_max: usize,
    rho: BTreeMap<usize, Complex64>,
    xi: BTreeMap<usize, Complex64>,
}

impl SpectralInput {
    /// Rejects key sets that do not partition `1..=n_max` as Ω̄ / Ω.
    pub fn new(
        config: &BvpConfig,
        n_max: usize,
        rho: BTreeMap<usize, Complex64>,
        xi: BTreeMap<usize, Complex64>,
    ) -> Result<Self> {
        let cls = omega_classify(config, n_max);
        let rho_keys: Vec<usize> = rho.keys().copied().collect();
        let xi_keys: Vec<usize> = xi.keys().copied().collect();
        if rho_keys != cls.omega_bar() {
            return Err(Error::PartitionMismatch(format!(
                "spectral values must be given exactly for n in {:?}, got {:?}",
                abbreviate(cls.omega_bar()),
                abbreviate(&rho_keys)
            )));
        }
        if xi_keys != cls.omega() {
            return Err(Error::PartitionMismatch(format!(
                "coefficients must be given exactly for n in {:?}, got {:?}",
                abbreviate(cls.omega()),
                abbreviate(&xi_keys)
            )));
        }
        let rho = rho
            .into_iter()
            .map(|(n, r)| (n, normalize_branch(r)))
            .collect();
        Ok(SpectralInput { n_max, rho, xi })
    }

    /// Builds the input from a full spectrum and a full coefficient sequence,
    /// keeping only the entries the inverse problem is allowed to see.
    pub fn from_full(config: &BvpConfig, spectrum: &Spectrum, xi: &[Complex64]) -> Result<Self> {
        let n_max = spectrum.len();
        if xi.len() < n_max {
            return Err(Error::input("xi", "shorter than the spectrum"));
        }
        let cls = omega_classify(config, n_max);
        let rho = cls
            .omega_bar()
            .iter()
            .map(|&n| (n, spectrum.rho(n)))
            .collect();
        let xi = cls.omega().iter().map(|&n| (n, xi[n - 1])).collect();
        SpectralInput::new(config, n_max, rho, xi)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn rho(&self) -> &BTreeMap<usize, Complex64> {
        &self.rho
    }

    pub fn xi(&self) -> &BTreeMap<usize, Complex64> {
        &self.xi
    }

    pub(crate) fn rho_mut(&mut self) -> &mut BTreeMap<usize, Complex64> {
        &mut self.rho
    }

    pub(crate) fn xi_mut(&mut self) -> &mut BTreeMap<usize, Complex64> {
        &mut self.xi
    }

    /// Full spectrum with `ρ_n = z_n` on Ω.
    pub fn full_spectrum(&self, config: &BvpConfig) -> Spectrum {
        Spectrum::from_rho(
            (1..=self.n_max)
                .map(|n| {
                    self.rho
                        .get(&n)
                        .copied()
                        .unwrap_or_else(|| Complex64::new(z_node(config, n), 0.0))
                })
                .collect(),
        )
    }
}

fn abbreviate(keys: &[usize]) -> String {
    if keys.len() <= 8 {
        format!("{keys:?}")
    } else {
        format!("{:?}... ({} entries)", &keys[..8], keys.len())
    }
}
