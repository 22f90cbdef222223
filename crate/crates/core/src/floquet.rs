//! Six-mode truncation of the Fourier expansion
//! C̃ = Σₙ (aₙ, bₙ) e^{n(−i2ωt−i2φ)}, n ∈ {−1, 0, 1}:
//!
//! ```text
//! ȧ₀  =          i g₀(b₀ + b₋₁)/2
//! ḃ₀  =          i g₀(a₀ + a₁)/2
//! ȧ₁  =  i2ω a₁ + i g₀(b₁ + b₀)/2
//! ḃ₁  =  i2ω b₁ + i g₀ a₁/2
//! ȧ₋₁ = −i2ω a₋₁ + i g₀ b₋₁/2
//! ḃ₋₁ = −i2ω b₋₁ + i g₀(a₋₁ + a₀)/2
//! ```
//!
//! The Bloch-Siegert counter-shift enters as −iΔ_c/2 on every aₙ and +iΔ_c/2
//! on every bₙ, which is the Fourier image of the diagonal term used by
//! [`dynamics`](crate::dynamics).

use crate::dynamics::{check_step, Frame, StateAmplitudes, DEFAULT_STRIDE};
use crate::integrator::{run_uniform, Rhs};
use crate::{Error, FieldParams, Result, C64};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Mode amplitudes, each triple ordered (n = −1, n = 0, n = +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetState {
    pub a: [C64; 3],
    pub b: [C64; 3],
}

impl FloquetState {
    pub fn ground() -> Self {
        FloquetState {
            a: [ZERO, C64::new(1.0, 0.0), ZERO],
            b: [ZERO; 3],
        }
    }

    pub fn a_minus(&self) -> C64 {
        self.a[0]
    }
    pub fn a0(&self) -> C64 {
        self.a[1]
    }
    pub fn a_plus(&self) -> C64 {
        self.a[2]
    }
    pub fn b_minus(&self) -> C64 {
        self.b[0]
    }
    pub fn b0(&self) -> C64 {
        self.b[1]
    }
    pub fn b_plus(&self) -> C64 {
        self.b[2]
    }

    /// |a₋₁|, |a₀|, |a₁|, |b₋₁|, |b₀|, |b₁|.
    pub fn magnitudes(&self) -> [f64; 6] {
        [
            self.a[0].norm(),
            self.a[1].norm(),
            self.a[2].norm(),
            self.b[0].norm(),
            self.b[1].norm(),
            self.b[2].norm(),
        ]
    }

    /// Largest modulus of the difference of corresponding modes.
    pub fn max_mode_deviation(&self, other: &FloquetState) -> f64 {
        self.a
            .iter()
            .zip(&other.a)
            .chain(self.b.iter().zip(&other.b))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    fn to_array(self) -> [C64; 6] {
        [self.a[0], self.a[1], self.a[2], self.b[0], self.b[1], self.b[2]]
    }

    fn from_array(y: &[C64; 6]) -> Self {
        FloquetState {
            a: [y[0], y[1], y[2]],
            b: [y[3], y[4], y[5]],
        }
    }
}

struct SixMode<'a>(&'a FieldParams);

impl Rhs<6> for SixMode<'_> {
    #[inline]
    fn eval(&self, t: f64, y: &[C64; 6]) -> [C64; 6] {
        let p = self.0;
        let hg = I * (0.5 * p.envelope(t));
        let two_w = I * (2.0 * p.omega());
        let hs = I * (0.5 * p.compensation_shift(t));
        let [am, a0, ap, bm, b0, bp] = *y;
        [
            -two_w * am + hg * bm - hs * am,
            hg * (b0 + bm) - hs * a0,
            two_w * ap + hg * (bp + b0) - hs * ap,
            -two_w * bm + hg * (am + a0) + hs * bm,
            hg * (a0 + ap) + hs * b0,
            two_w * bp + hg * ap + hs * bp,
        ]
    }
}

/// Time-ordered mode samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FloquetState>,
}

impl FloquetTrajectory {
    /// Resummed rotating-frame amplitudes per sample.
    pub fn resummed(&self, p: &FieldParams) -> Vec<StateAmplitudes> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, f)| resum_modes(f, t, p))
            .collect()
    }
}

/// Integrate the six-mode system from a₀ = 1 with the default sample stride.
pub fn integrate_floquet(p: &FieldParams, t_end: f64, dt: f64) -> Result<FloquetTrajectory> {
    integrate_floquet_strided(p, t_end, dt, DEFAULT_STRIDE)
}

pub fn integrate_floquet_strided(
    p: &FieldParams,
    t_end: f64,
    dt: f64,
    stride: usize,
) -> Result<FloquetTrajectory> {
    check_step(p, t_end, dt)?;
    let mut out = FloquetTrajectory {
        times: Vec::new(),
        states: Vec::new(),
    };
    run_uniform(&SixMode(p), FloquetState::ground().to_array(), t_end, dt, stride, |t, y| {
        out.times.push(t);
        out.states.push(FloquetState::from_array(y));
    });
    Ok(out)
}

/// C̃₀ = Σ aₙ e^{n(−i2ωt−i2φ)}, C̃₁ = Σ bₙ e^{n(−i2ωt−i2φ)}.
pub fn resum_modes(f: &FloquetState, t: f64, p: &FieldParams) -> StateAmplitudes {
    let w = C64::from_polar(1.0, -2.0 * p.field_phase(t));
    let weights = [w.conj(), C64::new(1.0, 0.0), w];
    let sum = |m: &[C64; 3]| m.iter().zip(&weights).map(|(x, y)| x * y).sum::<C64>();
    StateAmplitudes::new(sum(&f.a), sum(&f.b), Frame::Rotating)
}

/// Adiabatically eliminated modes at time `t`:
/// a₀ = cos(θ/2), b₀ = i sin(θ/2), a₁ = −ηb₀, b₋₁ = ηa₀, a₋₁ = b₁ = 0,
/// with θ = g₀′(t)·t and η = η(t).
pub fn adiabatic_modes(p: &FieldParams, t: f64) -> Result<FloquetState> {
    if !(t > 0.0) {
        return Err(Error::domain("t", t, "adiabatic modes need t > 0"));
    }
    let half = 0.5 * p.rabi_angle(t)?;
    let eta = p.eta(t)?;
    let a0 = C64::new(half.cos(), 0.0);
    let b0 = C64::new(0.0, half.sin());
    Ok(FloquetState {
        a: [ZERO, a0, -b0 * eta],
        b: [a0 * eta, b0, ZERO],
    })
}
