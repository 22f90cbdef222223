//! First-order closed-form solution and the π/2-pulse readout.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::dynamics::{Frame, StateAmplitudes};
use crate::{Error, FieldParams, Result, C64};

/// Tolerance on θ(τ) when checking that τ is an envelope-peak time.
pub const READOUT_ANGLE_TOL: f64 = 1e-6;

/// Σ = (i/2) exp(−i(2ωt + 2φ)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFactor {
    pub value: C64,
}

impl SigmaFactor {
    pub fn new(p: &FieldParams, t: f64) -> Self {
        SigmaFactor {
            value: C64::new(0.0, 0.5) * C64::from_polar(1.0, -2.0 * p.field_phase(t)),
        }
    }
}

/// Lab-frame amplitudes to first order in η:
///
/// ```text
/// C₀ = cos(θ/2) − 2ηΣ sin(θ/2)
/// C₁ = i e^{−i(ωt+φ)} [sin(θ/2) + 2ηΣ* cos(θ/2)]
/// ```
///
/// with θ = g₀′(t)·t and η = η(t) evaluated at the same instant.
pub fn analytic_amplitudes(p: &FieldParams, t: f64) -> Result<StateAmplitudes> {
    if !(t > 0.0) {
        return Err(Error::domain("t", t, "analytic amplitudes need t > 0"));
    }
    let half = 0.5 * p.rabi_angle(t)?;
    let two_eta = 2.0 * p.eta(t)?;
    let sigma = SigmaFactor::new(p, t).value;
    let (s, c) = half.sin_cos();
    let c0 = c - sigma * (two_eta * s);
    let c1 = C64::new(0.0, 1.0)
        * C64::from_polar(1.0, -p.field_phase(t))
        * (s + sigma.conj() * (two_eta * c));
    Ok(StateAmplitudes::new(c0, c1, Frame::Lab))
}

/// The first-order BSO term η(t)·sin θ(t)·sin(2ωt + 2φ).
pub fn bso_term(p: &FieldParams, t: f64) -> Result<f64> {
    let theta = p.rabi_angle(t)?;
    Ok(p.eta(t)? * theta.sin() * (2.0 * p.field_phase(t)).sin())
}

/// First time τ with g₀′(τ)τ = π/2, where sin²(g₀′τ/2) = ½.
pub fn pi_half_time(p: &FieldParams) -> Result<f64> {
    envelope_peak_time(p, 0)
}

/// The `k`-th time at which the Rabi angle reaches π/2 + 2πk. Each is a
/// maximum of the BSO envelope with Rabi population ½.
pub fn envelope_peak_time(p: &FieldParams, k: u32) -> Result<f64> {
    solve_rabi_angle(p, FRAC_PI_2 + TAU * f64::from(k))
}

/// Earliest envelope-peak time at which η(τ) ≥ `fraction`·η₀.
pub fn saturated_readout_time(p: &FieldParams, fraction: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::domain("fraction", fraction, "must lie in [0, 1)"));
    }
    if p.g0m() <= 0.0 {
        return Err(Error::domain("g0M", p.g0m(), "no pulse without coupling"));
    }
    let t_sat = if p.is_instantaneous() {
        0.0
    } else {
        -p.tau_sw() * (1.0 - fraction).ln()
    };
    let theta_sat = p.rabi_angle(t_sat)?;
    let k = ((theta_sat - FRAC_PI_2) / TAU).ceil().max(0.0) as u32;
    envelope_peak_time(p, k)
}

/// Solve θ(t) = `target` by bisection on [target/g0M, t_max],
/// t_max = 10(target/g0M + τ_sw). θ is strictly increasing for g0M > 0.
pub fn solve_rabi_angle(p: &FieldParams, target: f64) -> Result<f64> {
    if p.g0m() <= 0.0 {
        return Err(Error::domain("g0M", p.g0m(), "no pulse without coupling"));
    }
    let mut lo = target / p.g0m();
    let t_max = 10.0 * (target / p.g0m() + p.tau_sw());
    let mut hi = t_max;
    let f = |t: f64| p.rabi_angle_unchecked(t) - target;
    if f(hi) < 0.0 {
        return Err(Error::SearchFailure { t_max });
    }
    if f(lo) >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f(hi).abs() < f(lo).abs() { hi } else { lo })
}

/// ½[1 + 2η(τ) sin(2(ωτ + φ))], valid at an envelope-peak time τ.
pub fn readout_population(p: &FieldParams, tau: f64) -> Result<f64> {
    let theta = p.rabi_angle(tau)?;
    let k = ((theta - FRAC_PI_2) / TAU).round();
    if k < 0.0 || (theta - FRAC_PI_2 - TAU * k).abs() > READOUT_ANGLE_TOL {
        return Err(Error::Precondition(format!(
            "τ = {tau} is not a π/2 time: Rabi angle {theta} ≠ π/2 mod 2π"
        )));
    }
    Ok(0.5 * (1.0 + 2.0 * p.eta(tau)? * (2.0 * p.field_phase(tau)).sin()))
}

/// Initial phase φ that puts the field phase at τ equal to `phase_at_tau`.
pub fn phi_for_field_phase(p: &FieldParams, tau: f64, phase_at_tau: f64) -> f64 {
    (phase_at_tau - p.omega() * tau).rem_euclid(PI)
}
