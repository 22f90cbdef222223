//! Post-processing of populations: BSO extraction, sinusoid fits, spectral
//! peaks and absolute-phase estimates.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::dynamics::Trajectory;
use crate::{Error, FieldParams, Result};

/// Excited population minus the Rabi term, |C₁(t)|² − sin²(g₀′(t)t/2), per
/// sample of `traj`.
pub fn bso_residual(traj: &Trajectory, p: &FieldParams) -> Vec<f64> {
    traj.iter()
        .map(|(t, s)| s.pop1() - (0.5 * p.rabi_angle_unchecked(t)).sin().powi(2))
        .collect()
}

/// First-order BSO envelope η(t)·sin θ(t).
pub fn bso_envelope(p: &FieldParams, t: f64) -> f64 {
    p.eta_unchecked(t) * p.rabi_angle_unchecked(t).sin()
}

/// Largest index range around the envelope maximum over which |envelope|
/// stays within `max_variation` (relative) of its peak and keeps its sign.
pub fn flat_envelope_window(envelope: &[f64], max_variation: f64) -> std::ops::Range<usize> {
    let Some((peak, &top)) = envelope
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    else {
        return 0..0;
    };
    let keep = |x: f64| x.signum() == top.signum() && x.abs() >= (1.0 - max_variation) * top.abs();
    let mut lo = peak;
    while lo > 0 && keep(envelope[lo - 1]) {
        lo -= 1;
    }
    let mut hi = peak + 1;
    while hi < envelope.len() && keep(envelope[hi]) {
        hi += 1;
    }
    lo..hi
}

/// Least-squares estimate of `offset + amplitude·sin(frequency·t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub offset: f64,
    pub amplitude: f64,
    pub frequency: f64,
    /// In [0, 2π).
    pub phase: f64,
    pub residual_rms: f64,
    /// False when the amplitude vanished and the phase carries no information.
    pub phase_defined: bool,
}

const MAX_ITERATIONS: usize = 200;

/// Fit A + B sin(Ωt + ψ) to a uniformly sampled series, starting from
/// Ω = `freq_hint` and refining all four parameters by damped Gauss-Newton.
pub fn fit_sinusoid(times: &[f64], values: &[f64], freq_hint: f64) -> Result<SinusoidFit> {
    fit_impl(times, values, None, freq_hint)
}

/// Fit A + B·e(t)·sin(Ωt + ψ) with a known envelope e(t).
pub fn fit_enveloped(times: &[f64], values: &[f64], envelope: &[f64], freq_hint: f64) -> Result<SinusoidFit> {
    if envelope.len() != times.len() {
        return Err(Error::Fit("envelope length differs from the series".into()));
    }
    fit_impl(times, values, Some(envelope), freq_hint)
}

fn check_series(times: &[f64], values: &[f64], freq_hint: f64) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::Fit(format!("{} times but {} values", times.len(), values.len())));
    }
    if times.len() < 8 {
        return Err(Error::Fit("need at least 8 samples".into()));
    }
    if !(freq_hint > 0.0 && freq_hint.is_finite()) {
        return Err(Error::Fit(format!("frequency hint {freq_hint} must be positive")));
    }
    let span = times[times.len() - 1] - times[0];
    if span * freq_hint < 4.0 * TAU * (1.0 - 1e-9) {
        return Err(Error::Fit(format!(
            "series spans {:.3} periods, need at least 4",
            span * freq_hint / TAU
        )));
    }
    let dt = span / (times.len() - 1) as f64;
    if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::Fit("samples must be uniformly spaced".into()));
    }
    Ok(())
}

fn fit_impl(times: &[f64], values: &[f64], envelope: Option<&[f64]>, freq_hint: f64) -> Result<SinusoidFit> {
    check_series(times, values, freq_hint)?;
    let n = times.len();
    let center = 0.5 * (times[0] + times[n - 1]);
    let span = times[n - 1] - times[0];
    let env = |i: usize| envelope.map_or(1.0, |e| e[i]);

    // linear stage at fixed Ω, on centered time
    let linear = |omega: f64| -> Option<(Vector3<f64>, f64)> {
        let mut ata = Matrix3::zeros();
        let mut aty = Vector3::zeros();
        for i in 0..n {
            let x = omega * (times[i] - center);
            let row = Vector3::new(1.0, env(i) * x.sin(), env(i) * x.cos());
            ata += row * row.transpose();
            aty += row * values[i];
        }
        let coef = ata.cholesky()?.solve(&aty);
        let sse: f64 = (0..n)
            .map(|i| {
                let x = omega * (times[i] - center);
                let m = coef[0] + env(i) * (coef[1] * x.sin() + coef[2] * x.cos());
                (values[i] - m).powi(2)
            })
            .sum();
        Some((coef, sse))
    };

    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (coef, sse) = linear(freq_hint).ok_or_else(|| Error::Fit("degenerate design matrix".into()))?;
    let b0 = coef[1].hypot(coef[2]);
    if b0 <= 1e-12 * scale || scale == 0.0 {
        return Ok(SinusoidFit {
            offset: coef[0],
            amplitude: 0.0,
            frequency: freq_hint,
            phase: 0.0,
            residual_rms: (sse / n as f64).sqrt(),
            phase_defined: false,
        });
    }

    // coarse scan over ±2 Fourier bins for a starting frequency
    let bin = TAU / span;
    let mut best = (freq_hint, coef, sse);
    for k in -40..=40 {
        let omega = freq_hint + bin * f64::from(k) / 20.0;
        if omega <= 0.0 {
            continue;
        }
        if let Some((c, s)) = linear(omega) {
            if s < best.2 {
                best = (omega, c, s);
            }
        }
    }
    let (omega0, c0, _) = best;
    let mut params = Vector4::new(c0[0], c0[1].hypot(c0[2]), omega0, c0[2].atan2(c0[1]));

    let residuals = |q: &Vector4<f64>| -> f64 {
        (0..n)
            .map(|i| {
                let tc = times[i] - center;
                let m = q[0] + q[1] * env(i) * (q[2] * tc + q[3]).sin();
                (values[i] - m).powi(2)
            })
            .sum()
    };

    let mut cost = residuals(&params);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for i in 0..n {
            let tc = times[i] - center;
            let (s, c) = (params[2] * tc + params[3]).sin_cos();
            let e = env(i);
            let r = values[i] - (params[0] + params[1] * e * s);
            let j = Vector4::new(1.0, e * s, params[1] * e * c * tc, params[1] * e * c);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut stepped = false;
        for _ in 0..30 {
            let mut damped = jtj;
            for d in 0..4 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(f64::MIN_POSITIVE);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let delta = chol.solve(&jtr);
            let trial = params + delta;
            let trial_cost = residuals(&trial);
            if trial_cost <= cost {
                let small = delta[2].abs() <= 1e-14 * trial[2].abs().max(1.0)
                    && delta[3].abs() <= 1e-13
                    && delta[1].abs() <= 1e-13 * trial[1].abs().max(1e-300);
                let flat = cost - trial_cost <= 1e-15 * cost.max(f64::MIN_POSITIVE);
                params = trial;
                cost = trial_cost;
                lambda = (lambda * 0.3).max(1e-12);
                stepped = true;
                if small || flat {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if converged || !stepped {
            converged = true;
            break;
        }
    }
    if !converged || !params.iter().all(|x| x.is_finite()) {
        return Err(Error::Fit("Gauss-Newton did not converge".into()));
    }

    let (mut amplitude, mut phase) = (params[1], params[3] - params[2] * center);
    if amplitude < 0.0 {
        amplitude = -amplitude;
        phase += PI;
    }
    Ok(SinusoidFit {
        offset: params[0],
        amplitude,
        frequency: params[2],
        phase: phase.rem_euclid(TAU),
        residual_rms: (cost / n as f64).sqrt(),
        phase_defined: true,
    })
}

/// Dominant angular frequency of a uniformly sampled series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub frequency: f64,
    /// Bin spacing 2π/(N·dt) of the unpadded transform.
    pub resolution: f64,
}

/// Hann-windowed, zero-padded DFT with parabolic interpolation of the
/// largest non-DC bin.
pub fn spectral_peak(times: &[f64], values: &[f64]) -> Result<SpectralPeak> {
    let n = times.len();
    if n < 8 || values.len() != n {
        return Err(Error::Fit("spectral peak needs at least 8 matched samples".into()));
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Fit("times must increase".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let padded = (8 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (TAU * i as f64 / (n - 1) as f64).cos();
            Complex::new((v - mean) * w, 0.0)
        })
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded)
        .collect();
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mags: Vec<f64> = buf[..padded / 2].iter().map(|c| c.norm()).collect();
    let (k, _) = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Fit("empty spectrum".into()))?;
    let shift = if k + 1 < mags.len() {
        let (a, b, c) = (mags[k - 1], mags[k], mags[k + 1]);
        let denom = a - 2.0 * b + c;
        if denom != 0.0 {
            0.5 * (a - c) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(SpectralPeak {
        frequency: TAU * (k as f64 + shift) / (padded as f64 * dt),
        resolution: TAU / (n as f64 * dt),
    })
}

/// Recovered field-phase reference from a φ-sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseEstimate {
    /// ωτ mod π, in [0, π).
    pub reference: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// η(τ), the first-order prediction for `amplitude`.
    pub expected_amplitude: f64,
    pub residual_rms: f64,
}

/// Fit population(φ) = A + B sin(2(ψ + φ)) by linear least squares and
/// return ψ = ωτ mod π. The dependence is through sin 2φ_τ, so the phase is
/// recovered modulo π.
pub fn estimate_absolute_phase(pop_vs_phi: &[(f64, f64)], p: &FieldParams, tau: f64) -> Result<PhaseEstimate> {
    if pop_vs_phi.len() < 8 {
        return Err(Error::Fit(format!(
            "need at least 8 (φ, population) samples, got {}",
            pop_vs_phi.len()
        )));
    }
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for &(phi, pop) in pop_vs_phi {
        let (s, c) = (2.0 * phi).sin_cos();
        let row = Vector3::new(1.0, s, c);
        ata += row * row.transpose();
        aty += row * pop;
    }
    let n = pop_vs_phi.len() as f64;
    // the sin/cos block is singular when every φ coincides modulo π
    let det = ata.determinant() / n.powi(3);
    if !(det > 1e-10) {
        return Err(Error::Fit("φ samples are degenerate (all equal modulo π)".into()));
    }
    let coef = ata
        .cholesky()
        .ok_or_else(|| Error::Fit("degenerate φ sampling".into()))?
        .solve(&aty);
    let rss: f64 = pop_vs_phi
        .iter()
        .map(|&(phi, pop)| {
            let (s, c) = (2.0 * phi).sin_cos();
            (pop - coef[0] - coef[1] * s - coef[2] * c).powi(2)
        })
        .sum();
    let two_psi = coef[2].atan2(coef[1]);
    Ok(PhaseEstimate {
        reference: (0.5 * two_psi).rem_euclid(PI),
        offset: coef[0],
        amplitude: coef[1].hypot(coef[2]),
        expected_amplitude: p.eta(tau.max(0.0))?,
        residual_rms: (rss / n).sqrt(),
    })
}

/// Phase offset δ ∈ [0, 2π) of a lock-in response dc(θ) ∝ cos(θ − δ), from
/// the two quadratures θ = 0 and θ = π/2.
pub fn lockin_phase(dc_at_zero: f64, dc_at_quarter: f64) -> f64 {
    dc_at_quarter.atan2(dc_at_zero).rem_euclid(TAU)
}

/// Smallest signed difference between two angles modulo `period`.
pub fn wrapped_difference(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    if d > 0.5 * period {
        d - period
    } else {
        d
    }
}
