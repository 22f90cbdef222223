//! Fixed-step classical Runge-Kutta for small complex linear systems.

use crate::C64;

pub(crate) trait Rhs<const N: usize> {
    fn eval(&self, t: f64, y: &[C64; N]) -> [C64; N];
}

impl<const N: usize, F> Rhs<N> for F
where
    F: Fn(f64, &[C64; N]) -> [C64; N],
{
    fn eval(&self, t: f64, y: &[C64; N]) -> [C64; N] {
        self(t, y)
    }
}

#[inline]
fn axpy<const N: usize>(y: &[C64; N], h: f64, k: &[C64; N]) -> [C64; N] {
    std::array::from_fn(|i| y[i] + k[i] * h)
}

#[inline]
pub(crate) fn rk4_step<const N: usize, F: Rhs<N>>(f: &F, t: f64, h: f64, y: &[C64; N]) -> [C64; N] {
    let half = 0.5 * h;
    let k1 = f.eval(t, y);
    let k2 = f.eval(t + half, &axpy(y, half, &k1));
    let k3 = f.eval(t + half, &axpy(y, half, &k2));
    let k4 = f.eval(t + h, &axpy(y, h, &k3));
    std::array::from_fn(|i| y[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
}

/// Integrates from 0 to `t_end` in `ceil(t_end/dt)` equal steps, calling
/// `record` on the initial state, every `stride`-th step, and the final step.
pub(crate) fn run_uniform<const N: usize, F: Rhs<N>>(
    f: &F,
    y0: [C64; N],
    t_end: f64,
    dt: f64,
    stride: usize,
    mut record: impl FnMut(f64, &[C64; N]),
) {
    let steps = step_count(t_end, dt);
    let h = t_end / steps as f64;
    let stride = stride.max(1);
    let mut y = y0;
    record(0.0, &y);
    for k in 0..steps {
        let t = k as f64 * h;
        y = rk4_step(f, t, h, &y);
        let done = k + 1;
        if done % stride == 0 || done == steps {
            let t_next = if done == steps { t_end } else { done as f64 * h };
            record(t_next, &y);
        }
    }
}

/// Integrates from 0 through each of the sorted, non-negative `times`,
/// landing exactly on every one of them with steps no longer than `dt`.
pub(crate) fn run_to_times<const N: usize, F: Rhs<N>>(
    f: &F,
    y0: [C64; N],
    times: &[f64],
    dt: f64,
) -> Vec<[C64; N]> {
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0;
    let mut t0 = 0.0;
    for &target in times {
        let span = target - t0;
        if span > 0.0 {
            let steps = step_count(span, dt);
            let h = span / steps as f64;
            for k in 0..steps {
                y = rk4_step(f, t0 + k as f64 * h, h, &y);
            }
            t0 = target;
        }
        out.push(y);
    }
    out
}

fn step_count(span: f64, dt: f64) -> usize {
    ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        // y' = -i y, y(0) = 1 → e^{-it}
        let f = |_t: f64, y: &[C64; 1]| [C64::new(0.0, -1.0) * y[0]];
        let err = |dt: f64| {
            let mut last = C64::new(0.0, 0.0);
            run_uniform(&f, [C64::new(1.0, 0.0)], 10.0, dt, 1, |_, y| last = y[0]);
            (last - C64::from_polar(1.0, -10.0)).norm()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn lands_on_requested_times() {
        let f = |_t: f64, _y: &[C64; 1]| [C64::new(1.0, 0.0)];
        let out = run_to_times(&f, [C64::new(0.0, 0.0)], &[0.0, 0.3, 0.3, 1.7], 0.1);
        let got: Vec<f64> = out.iter().map(|y| y[0].re).collect();
        for (g, w) in got.iter().zip([0.0, 0.3, 0.3, 1.7]) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn stride_keeps_endpoints() {
        let f = |_t: f64, _y: &[C64; 1]| [C64::new(0.0, 0.0)];
        let mut ts = Vec::new();
        run_uniform(&f, [C64::new(1.0, 0.0)], 1.0, 0.03, 10, |t, _| ts.push(t));
        assert_eq!(ts.first(), Some(&0.0));
        assert_eq!(ts.last(), Some(&1.0));
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }
}
