//! Acceptance suite. Runs every exit criterion at its pinned tolerance and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bso_core::analytic::{pi_half_time, saturated_readout_time, solve_rabi_angle};
use bso_core::beam::{beam_coefficients, beam_signal_series, BeamParams, LockIn};
use bso_core::dynamics::{default_dt, integrate_full, Model, Solver};
use bso_core::signal::{
    bso_envelope, bso_residual, estimate_absolute_phase, fit_sinusoid, flat_envelope_window,
    spectral_peak, wrapped_difference,
};
use bso_core::sweep::{compare_oracles_over_pulse, lock_in_sweep, phi_sweep, Exec};
use bso_core::FieldParams;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Readout populations vs φ at the saturated envelope peak.
fn sweep_at_readout(eta0: f64, points: usize) -> (FieldParams, f64, Vec<(f64, f64)>) {
    let p = FieldParams::from_eta0(eta0, 1.0, 0.0, 100.0).unwrap();
    let tau = saturated_readout_time(&p, 0.99).unwrap();
    let phis: Vec<f64> = (0..points).map(|i| i as f64 * PI / points as f64).collect();
    let data = phi_sweep(&p, tau, &phis, default_dt(&p), Exec::Parallel).unwrap();
    (p, tau, data)
}

fn ac1_readout_law() -> Outcome {
    let start = Instant::now();
    let eta0 = 0.05;
    let (p, tau, data) = sweep_at_readout(eta0, 32);
    let fit = estimate_absolute_phase(&data, &p, tau).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let rel = (fit.amplitude - eta0).abs() / eta0;
    let phase_err = wrapped_difference(fit.reference, (p.omega() * tau).rem_euclid(PI), PI);
    check(
        rel <= 0.2 && fit.residual_rms <= eta0 * eta0 && elapsed <= Duration::from_secs(60),
        format!(
            "τ={tau:.3} B={:.5} (|B-η₀|/η₀={rel:.3} ≤ 0.2) rms={:.2e} (≤ {:.2e}) \
             offset={:.4} phase err={phase_err:.2e} rad, {:.1}s (≤ 60s)",
            fit.amplitude,
            fit.residual_rms,
            eta0 * eta0,
            fit.offset,
            elapsed.as_secs_f64()
        ),
    )
}

fn ac2_triple_oracle() -> Outcome {
    let start = Instant::now();
    let mut fields = Vec::new();
    for eta0 in [0.01, 0.05, 0.1] {
        for phi in [0.0, 0.7] {
            fields.push(FieldParams::from_eta0(eta0, 1.0, phi, 100.0).unwrap());
        }
    }
    let reports = compare_oracles_over_pulse(&fields, default_dt, Exec::Parallel).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut ok = elapsed <= Duration::from_secs(120);
    let mut parts = Vec::new();
    for r in &reports {
        ok &= r.passed();
        parts.push(format!("η₀={}: {:.2}·η₀²", r.eta0, r.max_difference() / (r.eta0 * r.eta0)));
    }
    check(
        ok,
        format!(
            "max pairwise |Δpop| {} (≤ 5·η₀²), {:.1}s (≤ 120s)",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn ac3_bso_frequency() -> Outcome {
    let p = FieldParams::from_eta0(5e-4, 1.0, 0.3, 100.0).unwrap();
    let peak_time = pi_half_time(&p).map_err(|e| e.to_string())?;
    let traj = integrate_full(&p, peak_time + 450.0, default_dt(&p)).map_err(|e| e.to_string())?;
    let residual = bso_residual(&traj, &p);
    let envelope: Vec<f64> = traj.times().iter().map(|&t| bso_envelope(&p, t)).collect();
    let w = flat_envelope_window(&envelope, 0.1);
    let times = &traj.times()[w.clone()];
    let span = times[times.len() - 1] - times[0];
    let periods = span * p.omega() / TAU;
    let peak = spectral_peak(times, &residual[w]).map_err(|e| e.to_string())?;
    let target = 2.0 * p.omega();
    let err = (peak.frequency - target).abs();
    check(
        periods >= 50.0 && err <= peak.resolution && err / target <= 1e-3,
        format!(
            "peak Ω={:.6} vs 2ω={target}, rel err {:.2e} (≤ 1e-3), bin {:.2e}, window {periods:.1} drive periods (≥ 50)",
            peak.frequency,
            err / target,
            peak.resolution
        ),
    )
}

fn ac4_envelope_nulls() -> Outcome {
    let eta0 = 0.05;
    let mut worst: f64 = 0.0;
    for phi in [0.0, 0.4, 1.1, 2.5] {
        let p = FieldParams::from_eta0(eta0, 1.0, phi, 100.0).unwrap();
        let nulls: Vec<f64> = (1..=3)
            .map(|k| solve_rabi_angle(&p, PI * f64::from(k)).unwrap())
            .collect();
        let states = Solver::new(Model::Full, &p).sample(&p, &nulls).map_err(|e| e.to_string())?;
        for (t, s) in nulls.iter().zip(&states) {
            let rabi = (0.5 * p.rabi_angle(*t).unwrap()).sin().powi(2);
            worst = worst.max((s.pop1() - rabi).abs());
        }
    }
    check(
        worst <= 2.0 * eta0 * eta0,
        format!(
            "max |residual| at sin(g₀′t)=0 (θ=π,2π,3π; 4 phases) = {worst:.2e} = {:.2}·η₀² (≤ 2·η₀²)",
            worst / (eta0 * eta0)
        ),
    )
}

fn ac5_beam_phase_invariance() -> Outcome {
    let phi = 0.9;
    let p = FieldParams::from_eta0(0.05, 1.0, phi, 100.0).unwrap();
    let times: Vec<f64> = (0..=4000).map(|i| i as f64 * 20.0 * PI / 4000.0).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for u in [0.5, 1.0, 2.0] {
        let b = BeamParams::new(u, 0.0, 100.0, &p).map_err(|e| e.to_string())?;
        let s = beam_signal_series(&b, &p, &times).map_err(|e| e.to_string())?;
        let fit = fit_sinusoid(&times, &s, 2.0 * p.omega()).map_err(|e| e.to_string())?;
        let dphase = wrapped_difference(fit.phase, 2.0 * phi, TAU);
        ok &= dphase.abs() <= 1e-5 && fit.amplitude < p.eta0();
        parts.push(format!("u={u}: Δψ={dphase:.1e} B={:.5}", fit.amplitude));
    }
    check(ok, format!("{} (|Δψ| ≤ 1e-5, B < η₀ = {})", parts.join("; "), p.eta0()))
}

fn ac6_lock_in_law() -> Outcome {
    let p = FieldParams::from_eta0(0.05, 1.0, 0.4, 100.0).unwrap();
    let b = BeamParams::new(1.0, 0.0, 100.0, &p).map_err(|e| e.to_string())?;
    let lock = LockIn::periods(&p, LockIn::DEFAULT_PERIODS);
    let thetas: Vec<f64> = (0..16).map(|i| i as f64 * TAU / 16.0).collect();
    let dc = lock_in_sweep(&b, &p, &thetas, &lock, Exec::Parallel).map_err(|e| e.to_string())?;
    let reference = dc[0].1;
    let worst = dc
        .iter()
        .map(|(theta, v)| (v / reference - theta.cos()).abs())
        .fold(0.0, f64::max);
    let b_amp = beam_coefficients(&b, &p).map_err(|e| e.to_string())?.amplitude;
    check(
        worst <= 1e-5 && reference > 0.0,
        format!(
            "max |dc(θ)/dc(0) − cos θ| over 16 θ = {worst:.2e} (≤ 1e-5); dc(0)={reference:.6} vs B·F₀/2={:.6}",
            0.5 * b_amp
        ),
    )
}

fn ac7_unitarity_and_order() -> Outcome {
    let mut drift: f64 = 0.0;
    for eta0 in [0.01, 0.05, 0.1] {
        let p = FieldParams::from_eta0(eta0, 1.0, 0.2, 100.0).unwrap();
        let t_end = saturated_readout_time(&p, 0.99).unwrap();
        let traj = integrate_full(&p, t_end, default_dt(&p)).map_err(|e| e.to_string())?;
        drift = drift.max(traj.max_norm_drift());
    }
    let p = FieldParams::from_eta0(0.1, 1.0, 0.2, 20.0).unwrap();
    let t_end = 40.0;
    let end = |dt: f64| {
        let s = Solver::new(Model::Full, &p).with_dt(dt).sample(&p, &[t_end]).unwrap()[0];
        [s.c0, s.c1]
    };
    let dt = 0.005;
    let reference = end(dt / 8.0);
    let err = |y: [bso_core::C64; 2]| ((y[0] - reference[0]).norm_sqr() + (y[1] - reference[1]).norm_sqr()).sqrt();
    let (e1, e2) = (err(end(dt)), err(end(dt / 2.0)));
    let ratio = e1 / e2;
    check(
        drift <= 1e-9 && (12.0..=20.0).contains(&ratio),
        format!("max norm drift {drift:.2e} (≤ 1e-9); step-halving error ratio {ratio:.2} (≈16, accepted 12–20; errors {e1:.2e}, {e2:.2e})"),
    )
}

fn ac8_phase_round_trip() -> Outcome {
    let (p, tau, data) = sweep_at_readout(0.05, 16);
    let est = estimate_absolute_phase(&data, &p, tau).map_err(|e| e.to_string())?;
    let truth = (p.omega() * tau).rem_euclid(PI);
    let err = wrapped_difference(est.reference, truth, PI);
    check(
        err.abs() <= 0.02,
        format!(
            "ωτ mod π = {truth:.5}, recovered {:.5}, error {err:.2e} rad (≤ 0.02)",
            est.reference
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 readout law ½ + B sin(2(ωτ+φ)) from full ODE", ac1_readout_law),
        ("AC2 triple-oracle agreement over π/2 pulse", ac2_triple_oracle),
        ("AC3 BSO spectral peak at 2ω", ac3_bso_frequency),
        ("AC4 BSO envelope nulls", ac4_envelope_nulls),
        ("AC5 beam-average phase invariance", ac5_beam_phase_invariance),
        ("AC6 lock-in cos θ law", ac6_lock_in_law),
        ("AC7 unitarity and 4th-order convergence", ac7_unitarity_and_order),
        ("AC8 absolute-phase round trip", ac8_phase_round_trip),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
