//! Sweeps over independent parameter points.
//!
//! Every point is a deterministic, single-threaded computation, so the
//! parallel and sequential paths return identical results.

use crate::analytic::analytic_amplitudes;
use crate::beam::{beam_coefficients, lock_in_dc_from, BeamParams, LockIn};
use crate::dynamics::{Model, Solver};
use crate::floquet::{integrate_floquet_strided, resum_modes};
use crate::{FieldParams, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Rayon when the `parallel` feature is enabled, otherwise sequential.
    #[default]
    Parallel,
}

/// Apply `f` to every item, preserving order.
pub fn map_points<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

fn collect_results<R>(v: Vec<Result<R>>) -> Result<Vec<R>> {
    v.into_iter().collect()
}

/// Excited population at `tau` from the full model for each initial phase.
pub fn phi_sweep(p: &FieldParams, tau: f64, phis: &[f64], dt: f64, exec: Exec) -> Result<Vec<(f64, f64)>> {
    collect_results(map_points(exec, phis, |&phi| {
        let q = p.with_phi(phi);
        let s = Solver::new(Model::Full, &q).with_dt(dt).sample(&q, &[tau])?;
        Ok((phi, s[0].pop1()))
    }))
}

/// First-order prediction |C₁(τ)|² for each initial phase.
pub fn phi_sweep_analytic(p: &FieldParams, tau: f64, phis: &[f64]) -> Result<Vec<(f64, f64)>> {
    phis.iter()
        .map(|&phi| Ok((phi, analytic_amplitudes(&p.with_phi(phi), tau)?.pop1())))
        .collect()
}

/// Pointwise excited populations from the three solvers on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub eta0: f64,
    pub times: Vec<f64>,
    pub full: Vec<f64>,
    pub floquet: Vec<f64>,
    pub analytic: Vec<f64>,
    /// 5η₀².
    pub bound: f64,
}

impl OracleComparison {
    /// Largest of the three pairwise pointwise differences.
    pub fn max_difference(&self) -> f64 {
        self.pairwise_max().into_iter().fold(0.0, f64::max)
    }

    /// max |full − floquet|, max |full − analytic|, max |floquet − analytic|.
    pub fn pairwise_max(&self) -> [f64; 3] {
        let m = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        [
            m(&self.full, &self.floquet),
            m(&self.full, &self.analytic),
            m(&self.floquet, &self.analytic),
        ]
    }

    pub fn passed(&self) -> bool {
        self.max_difference() <= self.bound
    }
}

/// Compare the solvers from t = 0 to `t_end`, skipping t = 0 where the
/// closed form is undefined.
pub fn compare_oracles(p: &FieldParams, t_end: f64, dt: f64, stride: usize) -> Result<OracleComparison> {
    let full = Solver::new(Model::Full, p)
        .with_dt(dt)
        .with_stride(stride)
        .trajectory(p, t_end)?;
    let modes = integrate_floquet_strided(p, t_end, dt, stride)?;
    let mut out = OracleComparison {
        eta0: p.eta0(),
        times: Vec::new(),
        full: Vec::new(),
        floquet: Vec::new(),
        analytic: Vec::new(),
        bound: 5.0 * p.eta0() * p.eta0(),
    };
    for ((t, s), f) in full.iter().zip(&modes.states).skip(1) {
        out.times.push(t);
        out.full.push(s.pop1());
        out.floquet.push(resum_modes(f, t, p).pop1());
        out.analytic.push(analytic_amplitudes(p, t)?.pop1());
    }
    Ok(out)
}

/// [`compare_oracles`] over a π/2 pulse for each field in `fields`.
pub fn compare_oracles_over_pulse(fields: &[FieldParams], dt_of: fn(&FieldParams) -> f64, exec: Exec) -> Result<Vec<OracleComparison>> {
    collect_results(map_points(exec, fields, |p| {
        let tau = crate::analytic::pi_half_time(p)?;
        compare_oracles(p, tau, dt_of(p), 10)
    }))
}

/// Lock-in dc output for each reference phase shift θ.
pub fn lock_in_sweep(b: &BeamParams, p: &FieldParams, thetas: &[f64], lock: &LockIn, exec: Exec) -> Result<Vec<(f64, f64)>> {
    let c = beam_coefficients(b, p)?;
    collect_results(map_points(exec, thetas, |&theta| Ok((theta, lock_in_dc_from(&c, p, theta, lock)?))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::default_dt;

    #[test]
    fn sequential_and_parallel_agree() {
        let p = FieldParams::from_eta0(0.05, 1.0, 0.0, 30.0).unwrap();
        let phis: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let a = phi_sweep(&p, 20.0, &phis, default_dt(&p), Exec::Sequential).unwrap();
        let b = phi_sweep(&p, 20.0, &phis, default_dt(&p), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..100).collect();
        let ys = map_points(Exec::Parallel, &xs, |x| x * 2);
        assert!(ys.iter().enumerate().all(|(i, y)| *y == 2 * i as u32));
    }
}
