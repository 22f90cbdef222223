//! One function per mode, each producing a [`Table`] and an optional plot.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs;
use std::path::PathBuf;

use bso_core::analytic::{analytic_amplitudes, pi_half_time, saturated_readout_time};
use bso_core::beam::{beam_coefficients, BeamParams, LockIn};
use bso_core::dynamics::{default_dt, to_lab_frame, Model as SolverModel, Solver};
use bso_core::floquet::integrate_floquet_strided;
use bso_core::signal::{bso_residual, estimate_absolute_phase};
use bso_core::sweep::{compare_oracles, lock_in_sweep, map_points, phi_sweep, phi_sweep_analytic, Exec};
use bso_core::FieldParams;

use crate::config::{BsoSource, ConfigError, Mode, Model, OutputFrame, RunConfig};
use crate::output::{Plot, Table};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Io { path: PathBuf, source: std::io::Error },
    Numerics(bso_core::Error),
    /// A run finished but failed its own accuracy check.
    Check(String),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) | RunError::Io { .. } => 1,
            RunError::Numerics(e) if !e.is_numerical() => 1,
            RunError::Numerics(_) | RunError::Check(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "config error: {e}"),
            RunError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
            RunError::Numerics(e) => write!(f, "numerical error: {e}"),
            RunError::Check(msg) => write!(f, "accuracy check failed: {msg}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<bso_core::Error> for RunError {
    fn from(e: bso_core::Error) -> Self {
        RunError::Numerics(e)
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

/// What a mode produced: the table, an optional figure, and an optional
/// failure to report after the files are written.
pub struct Product {
    pub table: Table,
    pub plot: Option<Plot>,
    pub failure: Option<String>,
}

fn product(table: Table, plot: Option<Plot>) -> Product {
    Product {
        table,
        plot,
        failure: None,
    }
}

fn dt(c: &RunConfig, p: &FieldParams) -> f64 {
    c.numerics.dt.unwrap_or_else(|| default_dt(p))
}

/// Default end time: one Rabi cycle past the first saturated envelope peak.
fn t_end(c: &RunConfig) -> Result<f64, RunError> {
    if let Some(t) = c.numerics.t_end {
        return Ok(t);
    }
    if c.field.g0m() <= 0.0 {
        return Err(ConfigError {
            key: "numerics.t_end".into(),
            message: "required when field.g0M = 0".into(),
        }
        .into());
    }
    Ok(saturated_readout_time(&c.field, 0.99)? + TAU / c.field.g0m())
}

fn parameter_line(c: &RunConfig) -> String {
    let p = &c.field;
    let mut s = format!(
        "mode={} g0M={} omega={} phi={} tau_sw={} bs_compensation={} eta0={}",
        c.mode.name(),
        p.g0m(),
        p.omega(),
        p.phi(),
        p.tau_sw(),
        p.compensation(),
        p.eta0()
    );
    s += &format!(
        " dt={} stride={} nodes={}",
        dt(c, p),
        c.numerics.stride,
        c.numerics.nodes
    );
    if let Some(b) = &c.beam {
        s += &format!(
            " u={} z0={} z_sw={} tau_bar={} spread={:?}",
            b.u(),
            b.z0(),
            b.z_sw(),
            b.tau_bar(),
            b.spread
        );
    }
    s
}

pub fn run(c: &RunConfig) -> Result<Product, RunError> {
    let mut out = match c.mode {
        Mode::Trajectory => trajectory(c)?,
        Mode::Bso => bso(c)?,
        Mode::PhiSweep => phi_sweep_mode(c)?,
        Mode::Beam => beam(c)?,
        Mode::LockIn => lockin(c)?,
        Mode::OracleCompare => oracle_compare(c)?,
        Mode::Floquet => floquet(c)?,
    };
    out.table.header_comments.insert(0, parameter_line(c));
    Ok(out)
}

fn trajectory(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let t_end = t_end(c)?;
    let model = match c.numerics.model {
        Model::Full => SolverModel::Full,
        Model::Rwa => SolverModel::Rwa,
    };
    let traj = Solver::new(model, p)
        .with_dt(dt(c, p))
        .with_stride(c.numerics.stride)
        .trajectory(p, t_end)?;
    let mut table = Table::new(&["t", "re_c0", "im_c0", "re_c1", "im_c1", "pop1"]);
    table.header_comments.push(format!(
        "model={:?} frame={:?} t_end={t_end} max_norm_drift={:e}",
        c.numerics.model,
        c.output.frame,
        traj.max_norm_drift()
    ));
    for (t, s) in traj.iter() {
        let s = match c.output.frame {
            OutputFrame::Rotating => *s,
            OutputFrame::Lab => to_lab_frame(s, t, p)?,
        };
        table.push(vec![t, s.c0.re, s.c0.im, s.c1.re, s.c1.im, s.pop1()]);
    }
    let plot = Plot {
        title: "Excited-state population".into(),
        x_label: "t".into(),
        y_label: "|C1|^2".into(),
        x: table.column("t").unwrap(),
        series: vec![("pop1".into(), table.column("pop1").unwrap())],
    };
    Ok(product(table, Some(plot)))
}

fn bso(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let t_end = t_end(c)?;
    let (times, residual) = match c.bso_source {
        BsoSource::Full => {
            let traj = Solver::new(SolverModel::Full, p)
                .with_dt(dt(c, p))
                .with_stride(c.numerics.stride)
                .trajectory(p, t_end)?;
            (traj.times().to_vec(), bso_residual(&traj, p))
        }
        BsoSource::Analytic => {
            let h = dt(c, p) * c.numerics.stride as f64;
            let n = (t_end / h).ceil() as usize;
            let times: Vec<f64> = (0..=n).map(|k| (k as f64 * h).min(t_end)).collect();
            let residual = times
                .iter()
                .map(|&t| {
                    if t == 0.0 {
                        return Ok(0.0);
                    }
                    let rabi = (0.5 * p.rabi_angle(t)?).sin().powi(2);
                    Ok(analytic_amplitudes(p, t)?.pop1() - rabi)
                })
                .collect::<Result<Vec<_>, bso_core::Error>>()?;
            (times, residual)
        }
    };
    let mut table = Table::new(&["t", "residual", "g0"]);
    table.header_comments.push(format!(
        "source={} t_end={t_end} residual=|C1|^2-sin^2(g0'(t)t/2)",
        match c.bso_source {
            BsoSource::Analytic => "analytic",
            BsoSource::Full => "full",
        }
    ));
    for (t, r) in times.iter().zip(&residual) {
        table.push(vec![*t, *r, p.switching_profile(*t)?]);
    }
    let eta: Vec<f64> = times.iter().map(|&t| p.eta(t)).collect::<Result<_, _>>()?;
    let plot = Plot {
        title: "BSO residual and envelope".into(),
        x_label: "t".into(),
        y_label: "residual, eta(t) = g0(t)/4w".into(),
        x: times,
        series: vec![("residual".into(), residual), ("eta(t)".into(), eta)],
    };
    Ok(product(table, Some(plot)))
}

fn phi_sweep_mode(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let tau = match c.sweep_tau {
        Some(t) => t,
        None => saturated_readout_time(p, 0.99)?,
    };
    let n = c.sweep_points;
    let phis: Vec<f64> = (0..n).map(|i| i as f64 * PI / n as f64).collect();
    let full = phi_sweep(p, tau, &phis, dt(c, p), Exec::Parallel)?;
    let analytic = phi_sweep_analytic(p, tau, &phis)?;
    let mut table = Table::new(&["phi", "pop1_full", "pop1_analytic"]);
    table.header_comments.push(format!("tau={tau} points={n}"));
    for ((phi, a), (_, b)) in full.iter().zip(&analytic) {
        table.push(vec![*phi, *a, *b]);
    }
    if n >= 8 {
        let est = estimate_absolute_phase(&full, p, tau)?;
        table.footer_comments.push(format!(
            "fit: offset={} amplitude={} reference={} expected_amplitude={} residual_rms={} true_reference={}",
            est.offset,
            est.amplitude,
            est.reference,
            est.expected_amplitude,
            est.residual_rms,
            (p.omega() * tau).rem_euclid(PI)
        ));
    }
    let plot = Plot {
        title: format!("Population at tau = {tau:.3} vs initial phase"),
        x_label: "phi".into(),
        y_label: "|C1(tau)|^2".into(),
        x: phis,
        series: vec![
            ("full".into(), table.column("pop1_full").unwrap()),
            ("analytic".into(), table.column("pop1_analytic").unwrap()),
        ],
    };
    Ok(product(table, Some(plot)))
}

fn beam_params(c: &RunConfig) -> &BeamParams {
    c.beam.as_ref().expect("beam modes are validated to carry beam parameters")
}

fn beam(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let b = beam_params(c);
    let coef = beam_coefficients(b, p)?;
    let t_end = c.numerics.t_end.unwrap_or(4.0 * PI / p.omega());
    let n = c.numerics.samples;
    let mut table = Table::new(&["t", "S"]);
    table.header_comments.push(format!(
        "A={} B={} mass={} doubling_change={:e}",
        coef.dc, coef.amplitude, coef.mass, coef.doubling_change
    ));
    for k in 0..n {
        let t = t_end * k as f64 / (n - 1) as f64;
        table.push(vec![t, coef.signal(p, t)]);
    }
    let plot = Plot {
        title: "Beam-averaged excited population".into(),
        x_label: "t".into(),
        y_label: "S(t)".into(),
        x: table.column("t").unwrap(),
        series: vec![("S".into(), table.column("S").unwrap())],
    };
    Ok(product(table, Some(plot)))
}

fn lockin(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let b = beam_params(c);
    let lock = LockIn::periods(p, c.lockin_periods);
    let n = c.lockin_points;
    let thetas: Vec<f64> = (0..n).map(|i| i as f64 * TAU / n as f64).collect();
    let dc = lock_in_sweep(b, p, &thetas, &lock, Exec::Parallel)?;
    let scale = 0.5 * lock.amplitude * beam_coefficients(b, p)?.amplitude;
    let mut table = Table::new(&["theta", "dc", "ratio", "cos"]);
    table
        .header_comments
        .push(format!("periods={} B*F0/2={scale}", c.lockin_periods));
    for (theta, v) in dc {
        table.push(vec![theta, v, v / scale, theta.cos()]);
    }
    let plot = Plot {
        title: "Lock-in output vs reference phase".into(),
        x_label: "theta".into(),
        y_label: "dc / (B F0 / 2)".into(),
        x: thetas,
        series: vec![
            ("ratio".into(), table.column("ratio").unwrap()),
            ("cos".into(), table.column("cos").unwrap()),
        ],
    };
    Ok(product(table, Some(plot)))
}

fn oracle_compare(c: &RunConfig) -> Result<Product, RunError> {
    let base = &c.field;
    let fields = c
        .oracle_eta0
        .iter()
        .map(|&eta0| {
            FieldParams::from_eta0(eta0, base.omega(), base.phi(), base.tau_sw())
                .map(|q| q.with_compensation(base.compensation()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports = map_points(Exec::Parallel, &fields, |q| {
        let t_end = match c.numerics.t_end {
            Some(t) => t,
            None => pi_half_time(q)?,
        };
        compare_oracles(q, t_end, dt(c, q), c.numerics.stride)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&[
        "eta0",
        "t",
        "full",
        "floquet",
        "analytic",
        "d_full_floquet",
        "d_full_analytic",
        "d_floquet_analytic",
    ]);
    let mut failed = Vec::new();
    for r in &reports {
        for i in 0..r.times.len() {
            let (a, f, e) = (r.full[i], r.floquet[i], r.analytic[i]);
            table.push(vec![r.eta0, r.times[i], a, f, e, a - f, a - e, f - e]);
        }
        let [ff, fa, qa] = r.pairwise_max();
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        table.footer_comments.push(format!(
            "summary eta0={} max|full-floquet|={ff:e} max|full-analytic|={fa:e} max|floquet-analytic|={qa:e} bound={:e} {verdict}",
            r.eta0, r.bound
        ));
        if !r.passed() {
            failed.push(format!("η₀ = {}: {:e} > {:e}", r.eta0, r.max_difference(), r.bound));
        }
    }
    let first = &reports[0];
    let plot = Plot {
        title: format!("Solver differences, eta0 = {}", first.eta0),
        x_label: "t".into(),
        y_label: "population difference".into(),
        x: first.times.clone(),
        series: vec![
            ("full - floquet".into(), first.full.iter().zip(&first.floquet).map(|(a, b)| a - b).collect()),
            ("full - analytic".into(), first.full.iter().zip(&first.analytic).map(|(a, b)| a - b).collect()),
        ],
    };
    Ok(Product {
        table,
        plot: Some(plot),
        failure: (!failed.is_empty()).then(|| format!("5η₀² bound exceeded for {}", failed.join("; "))),
    })
}

fn floquet(c: &RunConfig) -> Result<Product, RunError> {
    let p = &c.field;
    let t_end = t_end(c)?;
    let modes = integrate_floquet_strided(p, t_end, dt(c, p), c.numerics.stride)?;
    let mut table = Table::new(&["t", "abs_a_m1", "abs_a_0", "abs_a_p1", "abs_b_m1", "abs_b_0", "abs_b_p1"]);
    for (t, f) in modes.times.iter().zip(&modes.states) {
        let mut row = vec![*t];
        row.extend(f.magnitudes());
        table.push(row);
    }
    let plot = Plot {
        title: "Sideband amplitudes".into(),
        x_label: "t".into(),
        y_label: "mode magnitude".into(),
        x: modes.times.clone(),
        series: vec![
            ("|a_1|".into(), table.column("abs_a_p1").unwrap()),
            ("|b_-1|".into(), table.column("abs_b_m1").unwrap()),
        ],
    };
    Ok(product(table, Some(plot)))
}

/// Write `<mode>.csv` and optionally `<mode>.svg`; returns the paths written.
pub fn emit(c: &RunConfig, out: &Product) -> Result<Vec<PathBuf>, RunError> {
    let dir = &c.output.dir;
    fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut written = Vec::new();
    let mut write = |name: String, body: String| -> Result<(), RunError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
        Ok(())
    };
    if c.output.csv {
        write(format!("{}.csv", c.mode.name()), out.table.to_csv())?;
    }
    if c.output.svg {
        if let Some(plot) = &out.plot {
            write(format!("{}.svg", c.mode.name()), plot.to_svg())?;
        }
    }
    Ok(written)
}
