//! Product integration of grid-sampled functions against `sin`/`cos` kernels.
//!
//! Each cell integrates the linear interpolant of the samples times the
//! trigonometric kernel in closed form, so the rule is exact for piecewise-linear
//! integrands at every frequency, real or complex. Frequencies well beyond the
//! grid's Nyquist limit are handled without any loss.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{grid_node, phi_real, z_node, Bc, BvpConfig, Potential};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigKind {
    Sin,
    Cos,
}

impl From<Bc> for TrigKind {
    fn from(bc: Bc) -> Self {
        match bc {
            Bc::Dirichlet => TrigKind::Sin,
            Bc::Neumann => TrigKind::Cos,
        }
    }
}

/// `None` evaluates the kernel at `z t`, `Reflected` at `z (π − t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    None,
    Reflected,
}

impl Shift {
    fn sign(self) -> f64 {
        match self {
            Shift::None => 1.0,
            Shift::Reflected => -1.0,
        }
    }

    fn argument(self, t: f64) -> f64 {
        match self {
            Shift::None => t,
            Shift::Reflected => PI - t,
        }
    }
}

/// An endpoint of an integration interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Endpoint {
    /// Grid node index.
    Node(usize),
    /// Arbitrary point; the cell containing it is split.
    Point(f64),
}

impl Endpoint {
    /// Snaps `x` to a node when it lies within rounding distance of one.
    pub fn locate(x: f64, m: usize) -> Endpoint {
        let pos = x / PI * m as f64;
        let r = pos.round();
        if (pos - r).abs() <= 1e-12 * m as f64 && r >= 0.0 && r <= m as f64 {
            Endpoint::Node(r as usize)
        } else {
            Endpoint::Point(x)
        }
    }

    fn position(self, m: usize) -> f64 {
        match self {
            Endpoint::Node(i) => grid_node(i, m),
            Endpoint::Point(x) => x,
        }
    }
}

/// `∫_0^1 s^k cos(θs) ds` and `∫_0^1 s^k sin(θs) ds`, `k = 0, 1, 2`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellMoments {
    c: [C; 3],
    s: [C; 3],
}

impl CellMoments {
    pub(crate) fn new(theta: C) -> Self {
        if theta.norm() < 2.0 {
            Self::series(theta)
        } else {
            Self::closed(theta)
        }
    }

    fn series(theta: C) -> Self {
        let mut c = [ZERO; 3];
        let mut s = [ZERO; 3];
        // term = θ^j / j!
        let mut term = C::new(1.0, 0.0);
        for j in 0..40usize {
            let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            for k in 0..3 {
                let v = term * (sign / (j + k + 1) as f64);
                if j % 2 == 0 {
                    c[k] += v;
                } else {
                    s[k] += v;
                }
            }
            term = term * theta / (j + 1) as f64;
            if term.norm() < 1e-40 {
                break;
            }
        }
        CellMoments { c, s }
    }

    fn closed(theta: C) -> Self {
        let (sn, cs) = (theta.sin(), theta.cos());
        let inv = C::new(1.0, 0.0) / theta;
        let mut c = [ZERO; 3];
        let mut s = [ZERO; 3];
        c[0] = sn * inv;
        s[0] = (C::new(1.0, 0.0) - cs) * inv;
        for k in 1..3 {
            c[k] = (sn - s[k - 1] * k as f64) * inv;
            s[k] = (-cs + c[k - 1] * k as f64) * inv;
        }
        CellMoments { c, s }
    }
}

/// `sin(ρ t_i)` and `cos(ρ t_i)` on every grid node, plus full-cell moments.
pub(crate) struct NodeTrig {
    rho: C,
    sin: Vec<C>,
    cos: Vec<C>,
    full: CellMoments,
}

impl NodeTrig {
    pub(crate) fn new(rho: C, m: usize) -> Self {
        let mut sin = Vec::with_capacity(m + 1);
        let mut cos = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let arg = rho * grid_node(i, m);
            sin.push(arg.sin());
            cos.push(arg.cos());
        }
        NodeTrig {
            rho,
            sin,
            cos,
            full: CellMoments::new(rho * (PI / m as f64)),
        }
    }

    fn m(&self) -> usize {
        self.sin.len() - 1
    }
}

/// Integral over `[0, 1]` of a cell, expressed in the local coordinate `s`.
///
/// The integrand is `(f_l (1−s) + f_r s) · w(s) · K(Φ + σθs)` with
/// `w(s) = A + σ width s` when `weighted`, else 1.
#[allow(clippy::too_many_arguments)]
#[inline]
fn cell(
    f_l: C,
    f_r: C,
    sin_phi: C,
    cos_phi: C,
    moments: &CellMoments,
    width: f64,
    left_arg: f64,
    sigma: f64,
    kind: TrigKind,
    weighted: bool,
) -> C {
    let a0 = f_l;
    let a1 = f_r - f_l;
    let (p0, p1, p2) = if weighted {
        let sw = sigma * width;
        (a0 * left_arg, a1 * left_arg + a0 * sw, a1 * sw)
    } else {
        (a0, a1, ZERO)
    };
    let cp = p0 * moments.c[0] + p1 * moments.c[1] + p2 * moments.c[2];
    let sp = p0 * moments.s[0] + p1 * moments.s[1] + p2 * moments.s[2];
    let v = match kind {
        TrigKind::Sin => sin_phi * cp + cos_phi * sp * sigma,
        TrigKind::Cos => cos_phi * cp - sin_phi * sp * sigma,
    };
    v * width
}

/// `∫_lo^hi f(t) w(t) K(ρ·arg(t)) dt` with `arg(t) = t` or `π − t` and
/// `w = arg` when `weighted`.
pub(crate) fn integrate_with_table(
    samples: &[C],
    table: &NodeTrig,
    lo: Endpoint,
    hi: Endpoint,
    kind: TrigKind,
    shift: Shift,
    weighted: bool,
) -> C {
    let m = table.m();
    debug_assert_eq!(samples.len(), m + 1);
    let h = PI / m as f64;
    let (u, v) = (lo.position(m), hi.position(m));
    if v <= u {
        return ZERO;
    }
    let sigma = shift.sign();
    let value_at = |x: f64| {
        let pos = (x / h).clamp(0.0, m as f64);
        let j = (pos.floor() as usize).min(m - 1);
        let s = pos - j as f64;
        samples[j] * (1.0 - s) + samples[j + 1] * s
    };
    let partial = |x0: f64, x1: f64| -> C {
        let width = x1 - x0;
        if width <= 0.0 {
            return ZERO;
        }
        let arg = shift.argument(x0);
        let phi = table.rho * arg;
        let moments = CellMoments::new(table.rho * width);
        cell(
            value_at(x0),
            value_at(x1),
            phi.sin(),
            phi.cos(),
            &moments,
            width,
            arg,
            sigma,
            kind,
            weighted,
        )
    };

    // full cells span nodes [first, last]
    let (first, head) = match lo {
        Endpoint::Node(i) => (i, ZERO),
        Endpoint::Point(x) => {
            let j = ((x / h).floor() as usize).min(m - 1);
            let right = grid_node(j + 1, m);
            if v <= right {
                return partial(x, v);
            }
            (j + 1, partial(x, right))
        }
    };
    let (last, tail) = match hi {
        Endpoint::Node(i) => (i, ZERO),
        Endpoint::Point(x) => {
            let j = ((x / h).floor() as usize).min(m - 1);
            let left = grid_node(j, m).max(grid_node(first, m));
            (j.max(first), partial(left, x))
        }
    };

    let mut acc = head + tail;
    for i in first..last {
        let (node, arg) = match shift {
            Shift::None => (i, grid_node(i, m)),
            Shift::Reflected => (m - i, PI - grid_node(i, m)),
        };
        acc += cell(
            samples[i],
            samples[i + 1],
            table.sin[node],
            table.cos[node],
            &table.full,
            h,
            arg,
            sigma,
            kind,
            weighted,
        );
    }
    acc
}

/// `∫_u^v f(t) trig(z t) dt` (or `trig(z (π − t))` when reflected) for the
/// piecewise-linear interpolant of `samples` on the uniform grid over `[0, π]`.
///
/// Endpoints that coincide with grid nodes are used as such; any other endpoint
/// splits its cell. An empty interval yields 0.
pub fn oscillatory_integral(
    samples: &[C],
    u: f64,
    v: f64,
    z: C,
    kind: TrigKind,
    shift: Shift,
) -> C {
    let m = samples.len() - 1;
    if v <= u {
        return ZERO;
    }
    let table = NodeTrig::new(z, m);
    integrate_with_table(
        samples,
        &table,
        Endpoint::locate(u, m),
        Endpoint::locate(v, m),
        kind,
        shift,
        false,
    )
}

/// `∫ f(t) arg(t)^j dt` over `[lo, hi]` for `j = 0..=max_power`, where
/// `arg(t) = t` or `π − t`. Exact for the piecewise-linear interpolant.
pub(crate) fn power_moments(
    samples: &[C],
    lo: Endpoint,
    hi: Endpoint,
    shift: Shift,
    max_power: usize,
) -> Vec<C> {
    let m = samples.len() - 1;
    let h = PI / m as f64;
    let (u, v) = (lo.position(m), hi.position(m));
    let mut out = vec![ZERO; max_power + 1];
    if v <= u {
        return out;
    }
    // binomial coefficients up to max_power
    let mut binom = vec![vec![0.0f64; max_power + 1]; max_power + 1];
    for j in 0..=max_power {
        binom[j][0] = 1.0;
        for i in 1..=j {
            binom[j][i] = binom[j - 1][i - 1] + if i < j { binom[j - 1][i] } else { 0.0 };
        }
    }
    let value_at = |x: f64| {
        let pos = (x / h).clamp(0.0, m as f64);
        let j = (pos.floor() as usize).min(m - 1);
        let s = pos - j as f64;
        samples[j] * (1.0 - s) + samples[j + 1] * s
    };
    let mut piece = |x0: f64, x1: f64, f0: C, f1: C| {
        let width = x1 - x0;
        if width <= 0.0 {
            return;
        }
        // parametrize so the argument increases from its smaller end: arg = b + width s
        let (b, g0, g1) = match shift {
            Shift::None => (x0, f0, f1),
            Shift::Reflected => ((PI - x1).max(0.0), f1, f0),
        };
        let a0 = g0;
        let a1 = g1 - g0;
        // ∫_0^1 (a0 + a1 s) (b + width s)^j ds
        let mut bpow = vec![1.0f64; max_power + 1];
        let mut wpow = vec![1.0f64; max_power + 1];
        for i in 1..=max_power {
            bpow[i] = bpow[i - 1] * b;
            wpow[i] = wpow[i - 1] * width;
        }
        for j in 0..=max_power {
            let mut acc = ZERO;
            for i in 0..=j {
                let c = binom[j][i] * bpow[j - i] * wpow[i];
                acc += (a0 / (i + 1) as f64 + a1 / (i + 2) as f64) * c;
            }
            out[j] += acc * width;
        }
    };
    let nodes: Vec<(f64, C)> = {
        let mut pts = vec![(u, value_at(u))];
        let first = (u / h).floor() as usize + 1;
        for i in first..=m {
            let x = grid_node(i, m);
            if x >= v {
                break;
            }
            if x > u {
                pts.push((x, samples[i]));
            }
        }
        pts.push((v, value_at(v)));
        pts
    };
    for w in nodes.windows(2) {
        piece(w[0].0, w[1].0, w[0].1, w[1].1);
    }
    out
}

/// Normalization of the `n`-th basis function: the synthesis weight is `1/‖φ_α(z_n ·)‖²`.
pub fn basis_weight(config: &BvpConfig, n: usize) -> f64 {
    if config.order_sum() == 2 && n == 1 {
        1.0 / PI
    } else {
        2.0 / PI
    }
}

/// `q(x_i) = Σ w_n ξ_n φ_α(z_n x_i)` with `w_n = 2/π` (`1/π` for the constant mode
/// when `α = β = 1`).
pub fn synthesize(coefficients: &BTreeMap<usize, C>, config: &BvpConfig, m: usize) -> Potential {
    let terms: Vec<(usize, C)> = coefficients
        .iter()
        .map(|(&n, &xi)| (n, xi * basis_weight(config, n)))
        .collect();
    Potential::from_preset(config, m, terms)
}

/// `ξ_n = ∫_0^π q(t) φ_α(z_n t) dt` for `n = 1..=n_max`.
pub fn basis_coefficients(q: &Potential, config: &BvpConfig, n_max: usize) -> Vec<C> {
    use rayon::prelude::*;
    let kind = TrigKind::from(config.alpha());
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let z = C::new(z_node(config, n), 0.0);
            oscillatory_integral(q.samples(), 0.0, PI, z, kind, Shift::None)
        })
        .collect()
}

/// `‖q‖_{L2(0,π)}` by the trapezoid rule on `|q|²`.
pub fn l2_norm(q: &Potential) -> f64 {
    let s = q.samples();
    let m = q.grid_size();
    let inner: f64 = s[1..m].iter().map(|c| c.norm_sqr()).sum();
    (q.step() * (inner + 0.5 * (s[0].norm_sqr() + s[m].norm_sqr()))).sqrt()
}

/// `φ_α(z_n x)` evaluated at a real point; used by synthesis checks.
pub fn basis_function(config: &BvpConfig, n: usize, x: f64) -> f64 {
    phi_real(config.alpha(), z_node(config, n) * x)
}
