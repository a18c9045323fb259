//! Scenario configuration: presets, validation, and the flat key-value
//! config file format.

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    ScalarWz,
    HilbertInterpolation,
    MollifiedNoise,
    MarkovDriver,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::ScalarWz => "scalar-wz",
            ScenarioKind::HilbertInterpolation => "hilbert-interpolation",
            ScenarioKind::MollifiedNoise => "mollified-noise",
            ScenarioKind::MarkovDriver => "markov-driver",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "scalar-wz" => Ok(ScenarioKind::ScalarWz),
            "hilbert-interpolation" => Ok(ScenarioKind::HilbertInterpolation),
            "mollified-noise" => Ok(ScenarioKind::MollifiedNoise),
            "markov-driver" => Ok(ScenarioKind::MarkovDriver),
            other => Err(Error::config(
                "scenario",
                format!(
                    "unknown scenario '{other}' (expected scalar-wz, \
                     hilbert-interpolation, mollified-noise, or markov-driver)"
                ),
            )),
        }
    }

    pub fn all() -> [ScenarioKind; 4] {
        [
            ScenarioKind::ScalarWz,
            ScenarioKind::HilbertInterpolation,
            ScenarioKind::MollifiedNoise,
            ScenarioKind::MarkovDriver,
        ]
    }

    pub fn describe(&self) -> &'static str {
        match self {
            ScenarioKind::ScalarWz => {
                "1-D Brownian motion, linear interpolation, geometric coefficient; \
                 checks the t/2 correction and the corrected limit equation"
            }
            ScenarioKind::HilbertInterpolation => {
                "d-dimensional Q-Wiener driver under linear interpolation; checks the \
                 tensor limits of the residual integral and cross covariation"
            }
            ScenarioKind::MollifiedNoise => {
                "space-time white noise mollified in space and time on a 1-D box; \
                 checks the remainder moment bound"
            }
            ScenarioKind::MarkovDriver => {
                "stationary finite Markov chain, martingale/telescope splitting; \
                 checks the limiting covariance against the exact double sum"
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Constant,
    Linear,
    Trig,
    Mixing,
}

impl FieldKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(FieldKind::Constant),
            "linear" => Ok(FieldKind::Linear),
            "trig" => Ok(FieldKind::Trig),
            "mixing" => Ok(FieldKind::Mixing),
            other => Err(Error::config(
                "field",
                format!("unknown field '{other}' (expected constant, linear, trig, or mixing)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    /// Q-Wiener process with the configured eigenvalues.
    QWiener,
    /// Deterministic linear driver `G(t) = t * h`; useful as a noiseless
    /// sanity scenario.
    Linear,
}

impl DriverKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "qwiener" => Ok(DriverKind::QWiener),
            "linear" => Ok(DriverKind::Linear),
            other => Err(Error::config(
                "driver",
                format!("unknown driver '{other}' (expected qwiener or linear)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `γ(x, u) = scale * exp(-(x-u)^2 / (2 width^2))`.
    Gaussian,
    /// `γ(x, u) = scale * sin(pi x / L) * cos(pi u / L)`, a rank-one kernel.
    Separable,
}

impl KernelKind {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(KernelKind::Gaussian),
            "separable" => Ok(KernelKind::Separable),
            other => Err(Error::config(
                "kernel",
                format!("unknown kernel '{other}' (expected gaussian or separable)"),
            )),
        }
    }
}

/// Full description of one scenario run. All fields have scenario-specific
/// defaults; a config file only overrides.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    /// Truncation dimension `d` (for the Markov scenario the number of
    /// states; for the mollified scenario superseded by `space_points`).
    pub dim: usize,
    pub horizon: f64,
    /// Strictly increasing interpolation levels.
    pub n_grid: Vec<usize>,
    /// Fine-grid refinement per interpolation cell (for the mollified
    /// scenario: time steps per mollifier width, at least 4).
    pub refine: usize,
    /// Euler substeps per fine cell in the approximating solver.
    pub substeps: usize,
    pub replicates: usize,
    pub seed: u64,
    pub field: FieldKind,
    pub field_scale: f64,
    /// Initial value of every state coordinate.
    pub x0: f64,
    pub driver: DriverKind,
    pub q_eigenvalues: Vec<f64>,
    pub space_points: usize,
    pub box_length: f64,
    pub kernel: KernelKind,
    pub kernel_width: f64,
    pub kernel_scale: f64,
    /// Row-stochastic transition matrix for the Markov scenario.
    pub markov_transition: Vec<Vec<f64>>,
    /// Run metadata, not part of the scientific config: reports stay
    /// byte-identical no matter where they are written.
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> Self {
        let base = ScenarioConfig {
            scenario: kind,
            dim: 4,
            horizon: 1.0,
            n_grid: vec![8, 16, 32, 64],
            refine: 8,
            substeps: 8,
            replicates: 10_000,
            seed: 7_710_241,
            field: FieldKind::Trig,
            field_scale: 1.0,
            x0: 0.0,
            driver: DriverKind::QWiener,
            q_eigenvalues: vec![1.0, 0.5, 0.25, 0.125],
            space_points: 16,
            box_length: 1.0,
            kernel: KernelKind::Gaussian,
            kernel_width: 0.25,
            kernel_scale: 1.0,
            markov_transition: vec![vec![0.7, 0.3], vec![0.6, 0.4]],
            out_dir: None,
        };
        match kind {
            ScenarioKind::ScalarWz => ScenarioConfig {
                dim: 1,
                substeps: 16,
                field: FieldKind::Linear,
                x0: 1.0,
                q_eigenvalues: vec![1.0],
                ..base
            },
            ScenarioKind::HilbertInterpolation => base,
            ScenarioKind::MollifiedNoise => ScenarioConfig {
                n_grid: vec![4, 8, 16],
                substeps: 4,
                ..base
            },
            ScenarioKind::MarkovDriver => ScenarioConfig {
                dim: 2,
                n_grid: vec![16, 32, 64, 128],
                substeps: 1,
                field: FieldKind::Mixing,
                field_scale: 0.5,
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must not be empty"));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("n_grid", "must be strictly increasing"));
        }
        if self.replicates < 100 {
            return Err(Error::config(
                "replicates",
                "at least 100 replicates are needed for the statistical criteria",
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::config("horizon", "must be positive and finite"));
        }
        for n in &self.n_grid {
            let cells = self.horizon * *n as f64;
            if (cells - cells.round()).abs() > 1e-9 {
                return Err(Error::config(
                    "n_grid",
                    format!("horizon {} is not a multiple of 1/{n}", self.horizon),
                ));
            }
        }
        if self.refine == 0 || self.substeps == 0 {
            return Err(Error::config(
                "refine/substeps",
                "must be at least 1",
            ));
        }
        if !(self.field_scale.is_finite() && self.field_scale != 0.0) {
            return Err(Error::config("field_scale", "must be finite and nonzero"));
        }
        match self.scenario {
            ScenarioKind::ScalarWz => {
                if self.dim != 1 || self.q_eigenvalues.len() != 1 {
                    return Err(Error::config("dim", "scalar-wz runs with dim = 1"));
                }
            }
            ScenarioKind::HilbertInterpolation => {
                if self.q_eigenvalues.len() != self.dim {
                    return Err(Error::config(
                        "q_eigenvalues",
                        format!("expected {} eigenvalues, got {}", self.dim, {
                            self.q_eigenvalues.len()
                        }),
                    ));
                }
            }
            ScenarioKind::MollifiedNoise => {
                if self.refine < 4 {
                    return Err(Error::config(
                        "refine",
                        "mollified-noise needs at least 4 time steps per mollifier width",
                    ));
                }
                if self.space_points == 0 {
                    return Err(Error::config("space_points", "must be positive"));
                }
                let v = self.box_length / self.space_points as f64;
                let finest = *self.n_grid.last().expect("non-empty");
                if v > 1.0 / finest as f64 + 1e-12 {
                    return Err(Error::config(
                        "space_points",
                        format!(
                            "cell width {v} does not resolve the finest mollifier width 1/{finest}"
                        ),
                    ));
                }
            }
            ScenarioKind::MarkovDriver => {
                if self.markov_transition.len() != self.dim {
                    return Err(Error::config(
                        "markov_transition",
                        format!(
                            "expected a {dim} x {dim} matrix for dim = {dim}",
                            dim = self.dim
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Parses the flat `key = value` config format, starting from the
    /// preset of the declared scenario.
    pub fn from_flat_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    "<file>",
                    format!("line {}: expected 'key = value', got '{line}'", lineno + 1),
                )
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        let scenario_name = pairs
            .iter()
            .find(|(k, _)| k == "scenario")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::config("scenario", "missing required key"))?;
        let kind = ScenarioKind::parse(&scenario_name)?;
        let mut config = ScenarioConfig::preset(kind);
        for (key, value) in &pairs {
            config.apply(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => {} // already consumed
            "dim" => self.dim = parse_num(key, value)?,
            "horizon" => self.horizon = parse_num(key, value)?,
            "n_grid" => self.n_grid = parse_list(key, value)?,
            "refine" => self.refine = parse_num(key, value)?,
            "substeps" => self.substeps = parse_num(key, value)?,
            "replicates" => self.replicates = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "field" => self.field = FieldKind::parse(value)?,
            "field_scale" => self.field_scale = parse_num(key, value)?,
            "x0" => self.x0 = parse_num(key, value)?,
            "driver" => self.driver = DriverKind::parse(value)?,
            "q_eigenvalues" => self.q_eigenvalues = parse_list(key, value)?,
            "space_points" => self.space_points = parse_num(key, value)?,
            "box_length" => self.box_length = parse_num(key, value)?,
            "kernel" => self.kernel = KernelKind::parse(value)?,
            "kernel_width" => self.kernel_width = parse_num(key, value)?,
            "kernel_scale" => self.kernel_scale = parse_num(key, value)?,
            "markov_transition" => self.markov_transition = parse_matrix(key, value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            other => {
                return Err(Error::config(
                    other,
                    "unknown key (see the documented config keys)",
                ))
            }
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn parse_matrix(key: &str, value: &str) -> Result<Vec<Vec<f64>>> {
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|row| parse_list(key, row))
        .collect()
}
