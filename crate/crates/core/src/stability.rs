//! Randomized experiments on the Lipschitz stability of the inverse map.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{eigenvalues, validate};
use crate::inverse::recover_potential;
use crate::model::{
    normalize_branch, omega_classify, weighted_norm_a, Bc, BvpConfig, Potential, SpectralInput,
    Spectrum,
};
use crate::quadrature::{basis_coefficients, l2_norm};

type C = Complex64;

/// `‖{ξ_n − ξ̃_n}‖` over Ω.
pub fn xi_distance(input: &SpectralInput, other: &SpectralInput) -> Result<f64> {
    if input.xi().keys().ne(other.xi().keys()) || input.n_max() != other.n_max() {
        return Err(Error::PartitionMismatch(
            "inputs have different index sets".into(),
        ));
    }
    Ok(input
        .xi()
        .iter()
        .zip(other.xi().values())
        .map(|((_, a), b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn same_length(spectrum: &Spectrum, other: &Spectrum) -> Result<()> {
    if spectrum.len() != other.len() {
        return Err(Error::input(
            "N",
            format!(
                "spectra have different lengths {} and {}",
                spectrum.len(),
                other.len()
            ),
        ));
    }
    Ok(())
}

/// `Ξ = ‖{n(ρ_n − ρ̃_n)}‖_a` over Ω̄.
pub fn big_xi(spectrum: &Spectrum, other: &Spectrum, config: &BvpConfig) -> Result<f64> {
    same_length(spectrum, other)?;
    let cls = omega_classify(config, spectrum.len());
    let diff: BTreeMap<usize, C> = cls
        .omega_bar()
        .iter()
        .map(|&n| (n, (spectrum.rho(n) - other.rho(n)) * n as f64))
        .collect();
    weighted_norm_a(&diff, &cls)
}

/// `‖{λ_n − λ̃_n}‖_a` over Ω̄; defined for Dirichlet conditions at both ends.
pub fn lambda_distance_a(spectrum: &Spectrum, other: &Spectrum, config: &BvpConfig) -> Result<f64> {
    if config.alpha() != Bc::Dirichlet || config.beta() != Bc::Dirichlet {
        return Err(Error::OutOfScope(
            "the eigenvalue distance bound is stated for alpha = beta = 0 only".into(),
        ));
    }
    same_length(spectrum, other)?;
    let cls = omega_classify(config, spectrum.len());
    let diff: BTreeMap<usize, C> = cls
        .omega_bar()
        .iter()
        .map(|&n| (n, spectrum.lambda(n) - other.lambda(n)))
        .collect();
    weighted_norm_a(&diff, &cls)
}

fn unit_disk(rng: &mut ChaCha8Rng) -> C {
    let r = rng.gen::<f64>().sqrt();
    let theta = 2.0 * PI * rng.gen::<f64>();
    C::from_polar(r, theta)
}

/// Adds `m|φ_α(a z_n)|/n · u_n` to `ρ_n` on Ω̄ and `(m/n) u_n` to `ξ_n` on Ω, with
/// `u_n` uniform in the unit disk.
pub fn perturb(
    input: &SpectralInput,
    config: &BvpConfig,
    magnitude: f64,
    seed: u64,
) -> SpectralInput {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let cls = omega_classify(config, input.n_max());
    let mut out = input.clone();
    for n in 1..=input.n_max() {
        let u = unit_disk(&mut rng);
        if cls.is_omega(n) {
            if let Some(x) = out.xi_mut().get_mut(&n) {
                *x += u * (magnitude / n as f64);
            }
        } else if let Some(r) = out.rho_mut().get_mut(&n) {
            *r = normalize_branch(*r + u * (magnitude * cls.phi(n).abs() / n as f64));
        }
    }
    out
}

/// One sample of the stability inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    /// Ξ.
    pub big_xi: f64,
    /// `‖ξ̂_Ω‖`.
    pub xi_dist: f64,
    /// `‖q̂‖_{L2}`.
    pub q_dist: f64,
    /// `max(0, ‖q̂‖ − √(2/π)‖ξ̂_Ω‖)/Ξ`, or 0 when Ξ = 0.
    pub ratio: f64,
    /// `‖λ̂‖_a`, for Dirichlet–Dirichlet problems.
    pub lambda_dist: Option<f64>,
    pub lambda_ratio: Option<f64>,
}

fn excess_ratio(q_dist: f64, xi_dist: f64, denom: f64) -> f64 {
    if denom == 0.0 {
        0.0
    } else {
        (q_dist - (2.0 / PI).sqrt() * xi_dist).max(0.0) / denom
    }
}

fn check_ball(input: &SpectralInput, config: &BvpConfig, r: f64) -> Result<()> {
    let v = validate(&input.full_spectrum(config), config, r);
    if v.within {
        Ok(())
    } else {
        Err(Error::BallViolation { norm: v.norm, r })
    }
}

/// Recovers both potentials and measures the data and potential distances.
pub fn theorem1_trial(
    input: &SpectralInput,
    other: &SpectralInput,
    config: &BvpConfig,
    r: f64,
    m: usize,
    seed: u64,
) -> Result<TrialRow> {
    check_ball(input, config, r)?;
    check_ball(other, config, r)?;
    let q = recover_potential(input, config, m)?;
    let q_other = recover_potential(other, config, m)?;
    let q_dist = l2_norm(&q.difference(&q_other)?);
    let (s, s_other) = (input.full_spectrum(config), other.full_spectrum(config));
    let xi = big_xi(&s, &s_other, config)?;
    let xi_dist = xi_distance(input, other)?;
    let lambda_dist = lambda_distance_a(&s, &s_other, config).ok();
    Ok(TrialRow {
        seed,
        big_xi: xi,
        xi_dist,
        q_dist,
        ratio: excess_ratio(q_dist, xi_dist, xi),
        lambda_dist,
        lambda_ratio: lambda_dist.map(|d| excess_ratio(q_dist, xi_dist, d)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub r: f64,
    pub trials: usize,
    pub seed: u64,
    pub magnitude: f64,
    pub n_max: usize,
    pub m: usize,
    /// Degree of the random base potentials.
    pub degree: usize,
    /// Coefficient `k` of a base potential is drawn from the disk of radius `amplitude/k`.
    pub amplitude: f64,
}

impl StabilityOptions {
    pub fn new(r: f64, trials: usize, seed: u64, magnitude: f64) -> Self {
        StabilityOptions {
            r,
            trials,
            seed,
            magnitude,
            n_max: 200,
            m: 2000,
            degree: 8,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub r: f64,
    pub magnitude: f64,
    pub trials: usize,
    pub rejected: usize,
    pub rows: Vec<TrialRow>,
    /// Largest Ξ-ratio over accepted trials.
    pub c_r: f64,
    /// Largest eigenvalue-distance ratio, for Dirichlet–Dirichlet problems.
    pub c_prime: Option<f64>,
    /// `|φ_α(a z_n)|` for `n = 1..=N`.
    pub per_index_phi: Vec<f64>,
}

impl StabilityReport {
    /// `C_r Ξ + √(2/π)‖ξ̂_Ω‖ − ‖q̂‖` with the reported `C_r`.
    pub fn slack(&self, row: &TrialRow) -> f64 {
        self.c_r * row.big_xi + (2.0 / PI).sqrt() * row.xi_dist - row.q_dist
    }

    pub fn lambda_slack(&self, row: &TrialRow) -> Option<f64> {
        Some(self.c_prime? * row.lambda_dist? + (2.0 / PI).sqrt() * row.xi_dist - row.q_dist)
    }
}

/// Random trigonometric polynomial `Σ_{k ≤ degree} c_k φ_α(z_k x)` with `|c_k| ≤ amplitude/k`.
pub fn random_base_potential(
    config: &BvpConfig,
    options: &StabilityOptions,
    seed: u64,
) -> Potential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms = (1..=options.degree)
        .map(|k| (k, unit_disk(&mut rng) * (options.amplitude / k as f64)))
        .collect();
    Potential::from_preset(config, options.m, terms)
}

/// Exact data of the base potential for one trial, or `None` when it leaves the r-ball.
fn base_input(
    config: &BvpConfig,
    options: &StabilityOptions,
    seed: u64,
) -> Result<Option<SpectralInput>> {
    let q = random_base_potential(config, options, seed);
    let spectrum = eigenvalues(&q, config, options.n_max)?;
    let xi = basis_coefficients(&q, config, options.n_max);
    let input = SpectralInput::from_full(config, &spectrum, &xi)?;
    match check_ball(&input, config, options.r) {
        Ok(()) => Ok(Some(input)),
        Err(Error::BallViolation { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One report per scale factor `s`, perturbing the same trials with magnitude `s·m`.
pub fn scale_test(
    config: &BvpConfig,
    options: &StabilityOptions,
    scales: &[f64],
) -> Result<Vec<StabilityReport>> {
    if options.trials == 0 {
        return Err(Error::input("trials", "must be at least 1"));
    }
    let m = config.snapped_grid_size(options.m);
    let options = StabilityOptions { m, ..*options };
    let outcomes: Vec<Option<Vec<Option<TrialRow>>>> = (0..options.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = options.seed.wrapping_add(i);
            let Some(input) = base_input(config, &options, seed)? else {
                return Ok(None);
            };
            scales
                .iter()
                .map(|&s| {
                    let perturbed = perturb(&input, config, options.magnitude * s, seed);
                    match theorem1_trial(&input, &perturbed, config, options.r, m, seed) {
                        Ok(row) => Ok(Some(row)),
                        Err(Error::BallViolation { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .collect::<Result<_>>()?;

    let cls = omega_classify(config, options.n_max);
    let per_index_phi: Vec<f64> = cls.phi_values().iter().map(|v| v.abs()).collect();
    Ok(scales
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let rows: Vec<TrialRow> = outcomes
                .iter()
                .flatten()
                .filter_map(|per_scale| per_scale[k])
                .collect();
            let c_r = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
            let c_prime = rows
                .iter()
                .map(|r| r.lambda_ratio)
                .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)));
            StabilityReport {
                r: options.r,
                magnitude: options.magnitude * s,
                trials: options.trials,
                rejected: options.trials - rows.len(),
                rows,
                c_r,
                c_prime,
                per_index_phi: per_index_phi.clone(),
            }
        })
        .collect())
}

/// Empirical `C_r`: the largest ratio over seeded trials.
pub fn estimate_cr(config: &BvpConfig, options: &StabilityOptions) -> Result<StabilityReport> {
    Ok(scale_test(config, options, &[1.0])?.remove(0))
}
