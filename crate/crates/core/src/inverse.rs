//! Recovery of the potential from `{ρ_n}` on Ω̄ and `{ξ_n}` on Ω.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::charfn::CharFnFromSpectrum;
use crate::error::Result;
use crate::model::{omega_classify, z_node, BvpConfig, Potential, SpectralInput};
use crate::quadrature::synthesize;

type C = Complex64;

/// `ξ_n = (−1)^{n+1−α} z_n^{2−α−β} Δ(z_n²) / φ_α(z_n a)` for every `n ∈ Ω̄`.
pub fn xi_from_spectrum(input: &SpectralInput, config: &BvpConfig) -> Result<BTreeMap<usize, C>> {
    let n_max = input.n_max();
    let cls = omega_classify(config, n_max);
    let cf = CharFnFromSpectrum::new(config, &input.full_spectrum(config));
    let alpha = config.alpha().index() as usize;
    let power = 2 - config.order_sum() as i32;
    cls.omega_bar()
        .par_iter()
        .map(|&n| {
            let sign = if (n + 1 - alpha).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            // 0⁰ = 1 for the constant Neumann mode
            let zpow = if power == 0 {
                1.0
            } else {
                z_node(config, n).powi(power)
            };
            let delta = cf.at_node(n)?;
            Ok((n, delta * (sign * zpow / cls.phi(n))))
        })
        .collect()
}

/// All `N` coefficients: computed on Ω̄, supplied on Ω.
pub fn merged_coefficients(
    input: &SpectralInput,
    config: &BvpConfig,
) -> Result<BTreeMap<usize, C>> {
    let mut xi = xi_from_spectrum(input, config)?;
    xi.extend(input.xi().iter().map(|(&n, &v)| (n, v)));
    Ok(xi)
}

pub fn recover_potential(input: &SpectralInput, config: &BvpConfig, m: usize) -> Result<Potential> {
    Ok(synthesize(&merged_coefficients(input, config)?, config, m))
}
