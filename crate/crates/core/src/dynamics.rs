//! Direct integration of the rotating-frame Schrödinger equation.
//!
//! With C̃ = Q̂C the amplitudes obey dC̃/dt = −iH̃C̃ with
//! H̃ = α(t)σ₊ + α*(t)σ₋ and α(t) = −(g₀(t)/2)[1 + e^{−i(2ωt+2φ)}]:
//!
//! ```text
//! dC̃₀/dt = (i g₀/2)[1 + e^{−i(2ωt+2φ)}] C̃₁ − (iΔ_c/2) C̃₀
//! dC̃₁/dt = (i g₀/2)[1 + e^{+i(2ωt+2φ)}] C̃₀ + (iΔ_c/2) C̃₁
//! ```
//!
//! where Δ_c is the Bloch-Siegert counter-shift selected by
//! [`BsCompensation`](crate::BsCompensation). Dropping the exponentials gives
//! the rotating-wave (RWA) problem, which has no shift to compensate.

use std::fmt;

use crate::integrator::{run_to_times, run_uniform, Rhs};
use crate::{Error, FieldParams, Result, C64};

/// Samples are stored every this many integration steps by default.
pub const DEFAULT_STRIDE: usize = 10;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    Rotating,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
        })
    }
}

/// Amplitudes of |0⟩ and |1⟩ in one representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAmplitudes {
    pub c0: C64,
    pub c1: C64,
    pub frame: Frame,
}

impl StateAmplitudes {
    pub fn new(c0: C64, c1: C64, frame: Frame) -> Self {
        StateAmplitudes { c0, c1, frame }
    }

    /// All population in |0⟩.
    pub fn ground(frame: Frame) -> Self {
        StateAmplitudes::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), frame)
    }

    pub fn pop0(&self) -> f64 {
        self.c0.norm_sqr()
    }

    pub fn pop1(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.pop0() + self.pop1()
    }
}

/// Time-ordered samples of one integration run, all in the same frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<StateAmplitudes>,
    params: FieldParams,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<StateAmplitudes>, params: FieldParams) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Precondition(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("trajectory times must be strictly increasing".into()));
        }
        if let Some(first) = states.first() {
            if states.iter().any(|s| s.frame != first.frame) {
                return Err(Error::Precondition("trajectory mixes frames".into()));
            }
        }
        Ok(Trajectory { times, states, params })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[StateAmplitudes] {
        &self.states
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn frame(&self) -> Option<Frame> {
        self.states.first().map(|s| s.frame)
    }

    pub fn last(&self) -> Option<(f64, StateAmplitudes)> {
        Some((*self.times.last()?, *self.states.last()?))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &StateAmplitudes)> + '_ {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// Excited-state population |c1|² per sample.
    pub fn pop1(&self) -> Vec<f64> {
        self.states.iter().map(StateAmplitudes::pop1).collect()
    }

    /// max | |c0|² + |c1|² − 1 | over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|s| (s.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// The same trajectory in the lab frame.
    pub fn to_lab_frame(&self) -> Result<Trajectory> {
        let states = self
            .iter()
            .map(|(t, s)| to_lab_frame(s, t, &self.params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            params: self.params,
        })
    }
}

/// Which equations of motion to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Co- and counter-rotating terms.
    Full,
    /// Rotating-wave approximation.
    Rwa,
}

struct FullRhs<'a>(&'a FieldParams);

impl Rhs<2> for FullRhs<'_> {
    #[inline]
    fn eval(&self, t: f64, y: &[C64; 2]) -> [C64; 2] {
        let p = self.0;
        let half_g = 0.5 * p.envelope(t);
        let half_shift = 0.5 * p.compensation_shift(t);
        let counter = C64::from_polar(1.0, -2.0 * p.field_phase(t));
        let up = I * half_g;
        [
            up * (1.0 + counter) * y[1] - I * half_shift * y[0],
            up * (1.0 + counter.conj()) * y[0] + I * half_shift * y[1],
        ]
    }
}

struct RwaRhs<'a>(&'a FieldParams);

impl Rhs<2> for RwaRhs<'_> {
    #[inline]
    fn eval(&self, t: f64, y: &[C64; 2]) -> [C64; 2] {
        let up = I * (0.5 * self.0.envelope(t));
        [up * y[1], up * y[0]]
    }
}

/// Largest step accepted: (1/ω)/200.
pub fn max_dt(p: &FieldParams) -> f64 {
    1.0 / (200.0 * p.omega())
}

/// min(1/ω, 1/g0M)/500.
pub fn default_dt(p: &FieldParams) -> f64 {
    let slowest = if p.g0m() > 0.0 {
        (1.0 / p.omega()).min(1.0 / p.g0m())
    } else {
        1.0 / p.omega()
    };
    slowest / 500.0
}

pub(crate) fn check_step(p: &FieldParams, t_end: f64, dt: f64) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain("t_end", t_end, "must be positive"));
    }
    let max = max_dt(p);
    if !(dt > 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, max });
    }
    Ok(())
}

/// Integration settings beyond the step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solver {
    pub model: Model,
    pub dt: f64,
    pub stride: usize,
}

impl Solver {
    pub fn new(model: Model, p: &FieldParams) -> Self {
        Solver {
            model,
            dt: default_dt(p),
            stride: DEFAULT_STRIDE,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    /// Rotating-frame trajectory from the ground state at t = 0 to `t_end`.
    pub fn trajectory(&self, p: &FieldParams, t_end: f64) -> Result<Trajectory> {
        check_step(p, t_end, self.dt)?;
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut record = |t: f64, y: &[C64; 2]| {
            times.push(t);
            states.push(StateAmplitudes::new(y[0], y[1], Frame::Rotating));
        };
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        match self.model {
            Model::Full => run_uniform(&FullRhs(p), y0, t_end, self.dt, self.stride, &mut record),
            Model::Rwa => run_uniform(&RwaRhs(p), y0, t_end, self.dt, self.stride, &mut record),
        }
        Trajectory::new(times, states, *p)
    }

    /// Rotating-frame states at each of `times` (sorted, non-negative),
    /// integrating through them in one pass.
    pub fn sample(&self, p: &FieldParams, times: &[f64]) -> Result<Vec<StateAmplitudes>> {
        let last = times.last().copied().unwrap_or(0.0);
        check_step(p, last.max(f64::MIN_POSITIVE), self.dt)?;
        if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Precondition("sample times must be sorted and non-negative".into()));
        }
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let ys = match self.model {
            Model::Full => run_to_times(&FullRhs(p), y0, times, self.dt),
            Model::Rwa => run_to_times(&RwaRhs(p), y0, times, self.dt),
        };
        Ok(ys
            .into_iter()
            .map(|y| StateAmplitudes::new(y[0], y[1], Frame::Rotating))
            .collect())
    }
}

/// Full (non-RWA) rotating-frame trajectory with the default sample stride.
pub fn integrate_full(p: &FieldParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    Solver::new(Model::Full, p).with_dt(dt).trajectory(p, t_end)
}

/// RWA rotating-frame trajectory with the default sample stride.
pub fn integrate_rwa(p: &FieldParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    Solver::new(Model::Rwa, p).with_dt(dt).trajectory(p, t_end)
}

/// Full-model rotating-frame state at time `t`.
pub fn state_at(p: &FieldParams, t: f64, dt: f64) -> Result<StateAmplitudes> {
    let s = Solver::new(Model::Full, p).with_dt(dt).sample(p, &[t])?;
    Ok(s[0])
}

/// Undo the rotating-wave transformation: C₀ = C̃₀, C₁ = e^{−i(ωt+φ)} C̃₁.
pub fn to_lab_frame(s: &StateAmplitudes, t: f64, p: &FieldParams) -> Result<StateAmplitudes> {
    if s.frame != Frame::Rotating {
        return Err(Error::Frame { expected: "rotating" });
    }
    let rot = C64::from_polar(1.0, -p.field_phase(t));
    Ok(StateAmplitudes::new(s.c0, rot * s.c1, Frame::Lab))
}

/// Apply Q̂: C̃₀ = C₀, C̃₁ = e^{i(ωt+φ)} C₁.
pub fn to_rotating_frame(s: &StateAmplitudes, t: f64, p: &FieldParams) -> Result<StateAmplitudes> {
    if s.frame != Frame::Lab {
        return Err(Error::Frame { expected: "lab" });
    }
    let rot = C64::from_polar(1.0, p.field_phase(t));
    Ok(StateAmplitudes::new(s.c0, rot * s.c1, Frame::Rotating))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BsCompensation;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn undriven_stays_in_ground_state() {
        let p = FieldParams::new(0.0, 1.0, 0.4, 50.0).unwrap();
        for traj in [
            integrate_full(&p, 20.0, 0.002).unwrap(),
            integrate_rwa(&p, 20.0, 0.002).unwrap(),
        ] {
            for (_, s) in traj.iter() {
                assert_eq!(s.c0, C64::new(1.0, 0.0));
                assert_eq!(s.c1, C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn rejects_coarse_steps_and_bad_end() {
        let p = FieldParams::new(0.2, 1.0, 0.0, 100.0).unwrap();
        assert!(matches!(integrate_full(&p, 10.0, 0.01), Err(Error::StepSize { .. })));
        assert!(matches!(integrate_rwa(&p, 0.0, 0.001), Err(Error::Domain { .. })));
        assert!(integrate_full(&p, -1.0, 0.001).is_err());
        assert!(integrate_full(&p, 10.0, 0.005).is_ok());
    }

    #[test]
    fn rwa_pi_pulse_inverts() {
        let p = FieldParams::new(0.2, 1.0, 0.0, 0.0).unwrap();
        let traj = integrate_rwa(&p, PI / 0.2, 0.002).unwrap();
        let (_, s) = traj.last().unwrap();
        assert!((s.pop1() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rwa_matches_closed_form() {
        let p = FieldParams::new(0.2, 1.0, 0.0, 30.0).unwrap();
        let traj = integrate_rwa(&p, 120.0, default_dt(&p)).unwrap();
        for (t, s) in traj.iter().skip(1) {
            let theta = p.rabi_angle(t).unwrap();
            assert!((s.pop1() - (theta / 2.0).sin().powi(2)).abs() < 1e-8);
            assert!((s.c0 - C64::new((theta / 2.0).cos(), 0.0)).norm() < 1e-8);
            assert!((s.c1 - C64::new(0.0, (theta / 2.0).sin())).norm() < 1e-8);
        }
    }

    #[test]
    fn lab_frame_transform() {
        let p = FieldParams::new(0.2, 1.0, 0.7, 100.0).unwrap();
        let g = StateAmplitudes::ground(Frame::Rotating);
        let lab = to_lab_frame(&g, 3.3, &p).unwrap();
        assert_eq!((lab.c0, lab.c1), (g.c0, g.c1));
        let e = StateAmplitudes::new(C64::new(0.0, 0.0), C64::new(0.0, 1.0), Frame::Rotating);
        let lab = to_lab_frame(&e, -0.7, &p).unwrap();
        assert!((lab.c1 - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(to_lab_frame(&lab, 1.0, &p).is_err());
        let s = StateAmplitudes::new(C64::new(0.6, 0.1), C64::new(-0.2, 0.77), Frame::Rotating);
        let lab = to_lab_frame(&s, 12.5, &p).unwrap();
        assert_eq!(lab.frame, Frame::Lab);
        assert!((lab.pop1() - s.pop1()).abs() < 1e-15);
        let back = to_rotating_frame(&lab, 12.5, &p).unwrap();
        assert!((back.c1 - s.c1).norm() < 1e-15);
    }

    #[test]
    fn pi_half_population_window() {
        let p = FieldParams::from_eta0(0.05, 1.0, 0.9, 100.0).unwrap();
        let tau = crate::analytic::pi_half_time(&p).unwrap();
        let s = state_at(&p, tau, default_dt(&p)).unwrap();
        assert!((s.pop1() - 0.5).abs() <= 2.0 * p.eta0());
    }

    #[test]
    fn phase_period_is_pi() {
        let p = FieldParams::from_eta0(0.05, 1.0, 0.4, 100.0).unwrap();
        let tau = crate::analytic::pi_half_time(&p).unwrap();
        let dt = default_dt(&p);
        let a = state_at(&p, tau, dt).unwrap().pop1();
        let b = state_at(&p.with_phi(0.4 + PI), tau, dt).unwrap().pop1();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn compensation_modes_differ_only_slightly() {
        let base = FieldParams::from_eta0(0.05, 1.0, 0.0, 100.0).unwrap();
        let t = 60.0;
        let dt = 0.002;
        let dynamic = state_at(&base, t, dt).unwrap().pop1();
        let fixed = state_at(&base.with_compensation(BsCompensation::Static), t, dt).unwrap().pop1();
        let off = state_at(&base.with_compensation(BsCompensation::Off), t, dt).unwrap().pop1();
        assert!(dynamic != fixed && dynamic != off);
        assert!((dynamic - off).abs() < 0.1);
    }

    #[test]
    fn trajectory_validates() {
        let p = FieldParams::new(0.1, 1.0, 0.0, 10.0).unwrap();
        let g = StateAmplitudes::ground(Frame::Lab);
        assert!(Trajectory::new(vec![0.0, 0.0], vec![g, g], p).is_err());
        assert!(Trajectory::new(vec![0.0], vec![g, g], p).is_err());
        let r = StateAmplitudes::ground(Frame::Rotating);
        assert!(Trajectory::new(vec![0.0, 1.0], vec![g, r], p).is_err());
        assert!(Trajectory::new(vec![0.0, FRAC_PI_2], vec![g, g], p).is_ok());
    }
}
