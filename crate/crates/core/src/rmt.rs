//! Circular-ensemble baselines and the unfolded-to-raw form factor transform.
//!
//! The raw form factor follows from the unfolded one through
//!
//! ```text
//! K~(tau) = (1/π) ∫_0^π K(tau S'(theta)) dtheta
//! ```
//!
//! which, after the substitution `x = S(theta)`, becomes
//! `2 ∫_0^{π/2} rho(x) K(tau / 2π rho(x)) dx` with no endpoint singularity.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_with_breaks, QuadOptions};
use crate::spectral::{edge_coefficient, km_density_phi, InverseMode, UnfoldingMap};

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Domain {
            value: tau,
            domain: "(0, inf)",
        });
    }
    Ok(())
}

fn coe_unchecked(tau: f64) -> f64 {
    if tau < 1.0 {
        2.0 * tau - tau * (2.0 * tau).ln_1p()
    } else {
        2.0 - tau * (2.0 / (2.0 * tau - 1.0)).ln_1p()
    }
}

fn cue_unchecked(tau: f64) -> f64 {
    tau.min(1.0)
}

pub fn k_coe(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(coe_unchecked(tau))
}

pub fn k_cue(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(cue_unchecked(tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircularEnsemble {
    Coe,
    Cue,
}

impl CircularEnsemble {
    pub fn name(self) -> &'static str {
        match self {
            CircularEnsemble::Coe => "COE",
            CircularEnsemble::Cue => "CUE",
        }
    }

    pub fn form_factor(self, tau: f64) -> Result<f64> {
        match self {
            CircularEnsemble::Coe => k_coe(tau),
            CircularEnsemble::Cue => k_cue(tau),
        }
    }

    /// `K'(0)`.
    pub fn slope_at_zero(self) -> f64 {
        match self {
            CircularEnsemble::Coe => 2.0,
            CircularEnsemble::Cue => 1.0,
        }
    }

    /// Wigner surmise for the nearest-neighbour spacing density.
    pub fn surmise(self, s: f64) -> f64 {
        surmise_spacing(self, s)
    }
}

/// Wigner surmises: `(π/2) s exp(-π s²/4)` for the orthogonal class and
/// `(32/π²) s² exp(-4 s²/π)` for the unitary class.
pub fn surmise_spacing(kind: CircularEnsemble, s: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    match kind {
        CircularEnsemble::Coe => FRAC_PI_2 * s * (-PI * s * s / 4.0).exp(),
        CircularEnsemble::Cue => 32.0 / (PI * PI) * s * s * (-4.0 * s * s / PI).exp(),
    }
}

/// A form factor `K` on `(0, inf)` that can be fed to [`ktilde_from_k`].
pub trait FormFactor: Sync {
    fn eval(&self, tau: f64) -> f64;

    /// Arguments where `K` is not smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl FormFactor for CircularEnsemble {
    fn eval(&self, tau: f64) -> f64 {
        match self {
            CircularEnsemble::Coe => coe_unchecked(tau),
            CircularEnsemble::Cue => cue_unchecked(tau),
        }
    }

    fn kinks(&self) -> Vec<f64> {
        vec![1.0]
    }
}

/// `K(tau) = value`.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFormFactor(pub f64);

impl FormFactor for ConstantFormFactor {
    fn eval(&self, _: f64) -> f64 {
        self.0
    }
}

/// `K(tau) = slope * tau`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFormFactor(pub f64);

impl FormFactor for LinearFormFactor {
    fn eval(&self, tau: f64) -> f64 {
        self.0 * tau
    }
}

/// Wraps a closure, with optional kink locations.
pub struct FnFormFactor<F> {
    pub f: F,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> FormFactor for FnFormFactor<F> {
    fn eval(&self, tau: f64) -> f64 {
        (self.f)(tau)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

fn transform_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_panels: 20_000,
    }
}

/// Solves `rho_KM(x) = level` for `x` in `[0, π/2]`, where the density increases.
fn density_preimage(level: f64, d: usize) -> Option<f64> {
    if level <= 0.0 || level >= km_density_phi(FRAC_PI_2, d) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if km_density_phi(mid, d) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Central difference of the second-order closed-form inverse.
fn newton2_derivative(map: &UnfoldingMap, theta: f64) -> Result<f64> {
    let h = 1e-6 * theta.min(PI - theta).clamp(1e-300, 1.0);
    let hi = (theta + h).min(PI);
    let lo = (theta - h).max(0.0);
    Ok((map.s_newton2(hi)? - map.s_newton2(lo)?) / (hi - lo))
}

/// Raw form factor implied by the unfolded form factor `k`.
///
/// `Exact` integrates in the eigenphase variable against the Kesten–McKay
/// density; `Newton2` integrates in `theta` with `S'` taken from the
/// closed-form second-order inverse.
pub fn ktilde_from_k<K: FormFactor + ?Sized>(k: &K, tau: f64, map: &UnfoldingMap, mode: InverseMode) -> Result<f64> {
    check_tau(tau)?;
    let d = map.degree();
    match mode {
        InverseMode::Exact => {
            let integrand = |x: f64| {
                let rho = km_density_phi(x, d);
                if rho <= 0.0 {
                    return 0.0;
                }
                rho * k.eval(tau / (TAU * rho))
            };
            let breaks: Vec<f64> = k
                .kinks()
                .into_iter()
                .filter_map(|b| density_preimage(tau / (TAU * b), d))
                .collect();
            let r = integrate_with_breaks(integrand, 0.0, FRAC_PI_2, &breaks, &transform_options())?;
            Ok(2.0 * r.value)
        }
        InverseMode::Newton2 => {
            // theta = u^3 tames the S' ~ theta^(-2/3) growth at the edge.
            let integrand = |u: f64| {
                let theta = u * u * u;
                match newton2_derivative(map, theta) {
                    Ok(sp) if theta > 0.0 => 3.0 * u * u * k.eval(tau * sp),
                    _ => 0.0,
                }
            };
            let opts = QuadOptions {
                abs_tol: 1e-9,
                rel_tol: 1e-9,
                max_panels: 20_000,
            };
            let r = integrate(integrand, 0.0, PI.cbrt(), &opts)?;
            Ok(r.value / PI)
        }
    }
}

/// [`ktilde_from_k`] over a grid, evaluated in parallel.
pub fn ktilde_curve<K: FormFactor + ?Sized>(
    k: &K,
    taus: &[f64],
    map: &UnfoldingMap,
    mode: InverseMode,
) -> Result<Vec<f64>> {
    taus.par_iter().map(|&t| ktilde_from_k(k, t, map, mode)).collect()
}

fn check_degree(d: usize) -> Result<()> {
    if d < 3 {
        return Err(Error::InvalidParameters(format!("degree must be at least 3, got {d}")));
    }
    Ok(())
}

/// Coefficient of `tau^(3/2)` in the unitary transform: `-1 / (3π sqrt(D))`.
pub fn expansion_f1(d: usize) -> Result<f64> {
    check_degree(d)?;
    Ok(-1.0 / (3.0 * PI * edge_coefficient(d).sqrt()))
}

/// Coefficient of `tau^(3/2)` in the orthogonal transform:
/// `((2/π) arccoth(sqrt 2) - 2 sqrt 2 / 3π - 1) / sqrt(2D)`.
pub fn expansion_f2(d: usize) -> Result<f64> {
    check_degree(d)?;
    let arccoth_sqrt2 = 0.5 * (3.0 + 2.0 * SQRT_2).ln();
    let bracket = 2.0 / PI * arccoth_sqrt2 - 2.0 * SQRT_2 / (3.0 * PI) - 1.0;
    Ok(bracket / (2.0 * edge_coefficient(d)).sqrt())
}

/// Two-term small-`tau` expansion of the transform.
pub fn ktilde_expansion(kind: CircularEnsemble, tau: f64, d: usize) -> Result<f64> {
    Ok(match kind {
        CircularEnsemble::Cue => 0.5 * tau + expansion_f1(d)? * tau.powf(1.5),
        CircularEnsemble::Coe => tau + expansion_f2(d)? * tau.powf(1.5),
    })
}

/// Variance-to-mean ratio of `C_t` implied by the orthogonal baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarOverMean {
    pub tau: f64,
    /// Transform divided by `tau`.
    pub exact: f64,
    /// `1 + f2 sqrt(tau)`.
    pub small_tau: f64,
    /// `1 / tau`.
    pub large_tau: f64,
}

pub fn predicted_var_over_mean(tau: f64, d: usize) -> Result<VarOverMean> {
    let map = UnfoldingMap::new(d, 1)?;
    let kt = ktilde_from_k(&CircularEnsemble::Coe, tau, &map, InverseMode::Exact)?;
    Ok(VarOverMean {
        tau,
        exact: kt / tau,
        small_tau: 1.0 + expansion_f2(d)? * tau.sqrt(),
        large_tau: 1.0 / tau,
    })
}

/// Beyond this `tau` every argument `tau S'` of `K` exceeds 1.
pub fn plateau_onset(d: usize) -> f64 {
    let d = d as f64;
    4.0 * (d - 1.0) / d
}

pub const SLOPE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    /// `K'(0)`.
    pub g: f64,
    /// `g / 2`.
    pub analytic: f64,
    /// Finite-difference slope of the transform at zero.
    pub estimate: f64,
}

/// Compares the slope of the transform at `tau = 0` with half the slope of
/// `K`. The transform grows like `g tau / 2 + c tau^(3/2)`, so the one-sided
/// quotients at `h` and `h/4` are combined to cancel the `sqrt(h)` error.
pub fn slope_halving_check<K: FormFactor + ?Sized>(k: &K, g: f64, map: &UnfoldingMap) -> Result<SlopeCheck> {
    let h = SLOPE_STEP;
    let q1 = ktilde_from_k(k, h, map, InverseMode::Exact)? / h;
    let q2 = ktilde_from_k(k, h / 4.0, map, InverseMode::Exact)? / (h / 4.0);
    Ok(SlopeCheck {
        g,
        analytic: 0.5 * g,
        estimate: 2.0 * q2 - q1,
    })
}

/// `∫_0^π S'(theta) dtheta`, integrated in `theta` through `theta = u^3`.
pub fn integral_s_prime(map: &UnfoldingMap) -> Result<f64> {
    let failure = std::cell::Cell::new(None);
    let integrand = |u: f64| {
        if u <= 0.0 {
            // S'(u^3) 3u^2 -> 3 S0'(u^3) u^2 -> (4D/3)^(2/3) / (4D) * 3
            let dd = map.edge_coefficient();
            return 3.0 * (4.0 * dd / 3.0).powf(2.0 / 3.0) / (4.0 * dd);
        }
        match map.s_prime(u * u * u) {
            Ok(sp) => 3.0 * u * u * sp,
            Err(e) => {
                failure.set(Some(e.to_string()));
                f64::NAN
            }
        }
    };
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-13,
        max_panels: 4000,
    };
    let r = integrate(integrand, 0.0, PI.cbrt(), &opts);
    if let Some(msg) = failure.take() {
        return Err(Error::SolverFailure(msg));
    }
    Ok(r?.value)
}
