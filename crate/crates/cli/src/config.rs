//! Run configuration: a flat `key = value` file with dotted section keys.
//!
//! ```text
//! mode = bso
//! field.eta0 = 0.05        # or field.g0M
//! field.tau_sw = 100
//! numerics.stride = 20
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bso_core::beam::{BeamParams, VelocityQuadrature, VelocitySpread};
use bso_core::{BsCompensation, FieldParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Trajectory,
    Bso,
    PhiSweep,
    Beam,
    LockIn,
    OracleCompare,
    Floquet,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Trajectory => "trajectory",
            Mode::Bso => "bso",
            Mode::PhiSweep => "phi_sweep",
            Mode::Beam => "beam",
            Mode::LockIn => "lockin",
            Mode::OracleCompare => "oracle_compare",
            Mode::Floquet => "floquet",
        }
    }

    fn needs_beam(self) -> bool {
        matches!(self, Mode::Beam | Mode::LockIn)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "trajectory" => Mode::Trajectory,
            "bso" => Mode::Bso,
            "phi_sweep" => Mode::PhiSweep,
            "beam" => Mode::Beam,
            "lockin" => Mode::LockIn,
            "oracle_compare" => Mode::OracleCompare,
            "floquet" => Mode::Floquet,
            _ => {
                return Err(format!(
                    "unknown mode `{s}` (expected trajectory, bso, phi_sweep, beam, lockin, oracle_compare or floquet)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsoSource {
    Analytic,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Full,
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFrame {
    Rotating,
    Lab,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub dt: Option<f64>,
    pub stride: usize,
    pub t_end: Option<f64>,
    pub nodes: usize,
    pub samples: usize,
    pub model: Model,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub dir: PathBuf,
    pub csv: bool,
    pub svg: bool,
    pub frame: OutputFrame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub field: FieldParams,
    pub beam: Option<BeamParams>,
    pub numerics: Numerics,
    pub output: Output,
    pub bso_source: BsoSource,
    pub sweep_points: usize,
    pub sweep_tau: Option<f64>,
    pub lockin_periods: u32,
    pub lockin_points: usize,
    pub oracle_eta0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted key the error refers to, or `line N` for syntax errors.
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

const KEYS: &[&str] = &[
    "mode",
    "field.g0M",
    "field.eta0",
    "field.omega",
    "field.phi",
    "field.tau_sw",
    "field.bs_compensation",
    "numerics.dt",
    "numerics.stride",
    "numerics.t_end",
    "numerics.nodes",
    "numerics.samples",
    "numerics.model",
    "beam.u",
    "beam.z0",
    "beam.z_sw",
    "beam.tau_bar",
    "beam.spread",
    "beam.half_width",
    "sweep.points",
    "sweep.tau",
    "lockin.periods",
    "lockin.points",
    "oracle.eta0",
    "bso.source",
    "output.dir",
    "output.csv",
    "output.svg",
    "output.frame",
];

/// Raw key/value pairs with typed accessors that report the key path.
struct Entries {
    map: BTreeMap<String, String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let here = format!("line {}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(&here, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(err(&here, "missing key before `=`"));
            }
            if !KEYS.contains(&key) {
                return Err(err(key, "unknown key"));
            }
            if value.is_empty() {
                return Err(err(key, "missing value"));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(err(key, format!("duplicate key ({here})")));
            }
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| err(key, format!("expected {what}, got `{v}`")))
            })
            .transpose()
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get::<f64>(key, "a number")? {
            Some(x) if !x.is_finite() => Err(err(key, format!("must be finite, got {x}"))),
            other => Ok(other),
        }
    }

    fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.number(key)? {
            Some(x) if x <= 0.0 => Err(err(key, format!("must be positive, got {x}"))),
            other => Ok(other),
        }
    }

    fn count(&self, key: &str, min: usize) -> Result<Option<usize>, ConfigError> {
        match self.get::<usize>(key, "a non-negative integer")? {
            Some(n) if n < min => Err(err(key, format!("must be at least {min}, got {n}"))),
            other => Ok(other),
        }
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.raw(key)
            .map(|v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(err(key, format!("expected true or false, got `{v}`"))),
            })
            .transpose()
    }

    fn choice<T>(&self, key: &str, options: &[(&str, T)]) -> Result<Option<T>, ConfigError>
    where
        T: Copy,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        options
            .iter()
            .find(|(name, _)| *name == v)
            .map(|(_, t)| Some(*t))
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                err(key, format!("expected one of {}, got `{v}`", names.join(", ")))
            })
    }

    fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(key, format!("expected a comma-separated list of numbers, got `{item}`")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

fn core_err(key: &str) -> impl Fn(bso_core::Error) -> ConfigError + '_ {
    move |e| err(key, e.to_string())
}

impl RunConfig {
    /// Parse and validate a configuration. `mode_override` replaces the
    /// file's `mode`.
    pub fn parse(text: &str, mode_override: Option<Mode>) -> Result<Self, ConfigError> {
        let e = Entries::parse(text)?;

        let mode = match mode_override {
            Some(m) => m,
            None => e
                .raw("mode")
                .ok_or_else(|| err("mode", "missing (or pass --mode)"))?
                .parse()
                .map_err(|m: String| err("mode", m))?,
        };

        let omega = e.positive("field.omega")?.unwrap_or(1.0);
        let phi = e.number("field.phi")?.unwrap_or(0.0);
        let tau_sw = e.number("field.tau_sw")?.unwrap_or(0.0);
        let compensation = e
            .get::<BsCompensation>("field.bs_compensation", "dynamic, static or off")?
            .unwrap_or_default();
        let field = match (e.number("field.g0M")?, e.number("field.eta0")?) {
            (Some(g), None) => FieldParams::new(g, omega, phi, tau_sw).map_err(core_err("field.g0M"))?,
            (None, Some(eta0)) => {
                FieldParams::from_eta0(eta0, omega, phi, tau_sw).map_err(core_err("field.eta0"))?
            }
            (Some(_), Some(_)) => return Err(err("field.g0M", "give either field.g0M or field.eta0, not both")),
            (None, None) => return Err(err("field.g0M", "missing (or give field.eta0)")),
        }
        .with_compensation(compensation);

        let numerics = Numerics {
            dt: e.positive("numerics.dt")?,
            stride: e.count("numerics.stride", 1)?.unwrap_or(10),
            t_end: e.positive("numerics.t_end")?,
            nodes: e.count("numerics.nodes", 2)?.unwrap_or(16),
            samples: e.count("numerics.samples", 2)?.unwrap_or(400),
            model: e
                .choice("numerics.model", &[("full", Model::Full), ("rwa", Model::Rwa)])?
                .unwrap_or(Model::Full),
        };

        let beam = match e.positive("beam.u")? {
            Some(u) => Some(beam_params(&e, u, &field, numerics.nodes)?),
            None if mode.needs_beam() => return Err(err("beam.u", format!("required by mode {}", mode.name()))),
            None => None,
        };

        let output = Output {
            dir: e.raw("output.dir").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            csv: e.flag("output.csv")?.unwrap_or(true),
            svg: e.flag("output.svg")?.unwrap_or(false),
            frame: e
                .choice("output.frame", &[("rotating", OutputFrame::Rotating), ("lab", OutputFrame::Lab)])?
                .unwrap_or(OutputFrame::Rotating),
        };

        let oracle_eta0 = e.numbers("oracle.eta0")?.unwrap_or_else(|| vec![field.eta0()]);
        for &eta0 in &oracle_eta0 {
            FieldParams::from_eta0(eta0, omega, phi, tau_sw).map_err(core_err("oracle.eta0"))?;
        }

        Ok(RunConfig {
            mode,
            field,
            beam,
            numerics,
            output,
            bso_source: e
                .choice("bso.source", &[("analytic", BsoSource::Analytic), ("full", BsoSource::Full)])?
                .unwrap_or(BsoSource::Analytic),
            sweep_points: e.count("sweep.points", 2)?.unwrap_or(32),
            sweep_tau: e.positive("sweep.tau")?,
            lockin_periods: match e.get::<u32>("lockin.periods", "a positive integer")? {
                Some(0) => return Err(err("lockin.periods", "must be at least 1")),
                Some(n) => n,
                None => 64,
            },
            lockin_points: e.count("lockin.points", 1)?.unwrap_or(16),
            oracle_eta0,
        })
    }
}

fn beam_params(e: &Entries, u: f64, field: &FieldParams, nodes: usize) -> Result<BeamParams, ConfigError> {
    let z0 = e.number("beam.z0")?.unwrap_or(0.0);
    let z_sw = e.positive("beam.z_sw")?.ok_or_else(|| err("beam.z_sw", "missing"))?;
    let b = match e.positive("beam.tau_bar")? {
        Some(tau_bar) => BeamParams::with_tau_bar(u, z0, z_sw, tau_bar).map_err(core_err("beam.tau_bar"))?,
        None => BeamParams::new(u, z0, z_sw, field).map_err(core_err("beam.z_sw"))?,
    };
    let spread = match e.raw("beam.spread").unwrap_or("thermal") {
        "thermal" => VelocitySpread::Thermal,
        "mono" => VelocitySpread::Mono,
        "window" => VelocitySpread::Window {
            half_width: e
                .positive("beam.half_width")?
                .ok_or_else(|| err("beam.half_width", "required when beam.spread = window"))?,
        },
        other => return Err(err("beam.spread", format!("expected thermal, window or mono, got `{other}`"))),
    };
    Ok(b.with_spread(spread).with_quadrature(VelocityQuadrature {
        nodes,
        ..VelocityQuadrature::default()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::parse("mode = trajectory\nfield.g0M = 0.2\n", None).unwrap();
        assert_eq!(c.mode, Mode::Trajectory);
        assert_eq!(c.field.g0m(), 0.2);
        assert_eq!(c.numerics.stride, 10);
        assert!(c.output.csv && !c.output.svg);
    }

    #[test]
    fn comments_and_override() {
        let text = "# run\nmode = bso # inline\nfield.eta0 = 0.05\nfield.tau_sw = 100\n";
        let c = RunConfig::parse(text, Some(Mode::Floquet)).unwrap();
        assert_eq!(c.mode, Mode::Floquet);
        assert!((c.field.g0m() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("mode = bso\nfield.g0M = abc\n", "field.g0M"),
            ("mode = bso\n", "field.g0M"),
            ("mode = bso\nfield.g0M = 0.1\nfield.colour = red\n", "field.colour"),
            ("mode = beam\nfield.g0M = 0.1\n", "beam.u"),
            ("mode = beam\nfield.g0M = 0.1\nbeam.u = 1\n", "beam.z_sw"),
            ("mode = warp\nfield.g0M = 0.1\n", "mode"),
            ("mode = bso\nfield.g0M = 0.1\nfield.omega = -1\n", "field.omega"),
            ("mode = bso\nfield.g0M = 0.1\nfield.g0M = 0.2\n", "field.g0M"),
            ("mode = bso\nfield.g0M = 0.1\noutput.svg = maybe\n", "output.svg"),
            ("mode = bso\nfield.g0M = 0.1\nlockin.periods = 0\n", "lockin.periods"),
            ("mode bso\n", "line 1"),
        ];
        for (text, key) in cases {
            let e = RunConfig::parse(text, None).unwrap_err();
            assert_eq!(e.key, key, "{text:?} gave {e}");
        }
    }

    #[test]
    fn oracle_list() {
        let c = RunConfig::parse(
            "mode = oracle_compare\nfield.eta0 = 0.05\noracle.eta0 = 0.01, 0.05,0.1\n",
            None,
        )
        .unwrap();
        assert_eq!(c.oracle_eta0, vec![0.01, 0.05, 0.1]);
    }
}
