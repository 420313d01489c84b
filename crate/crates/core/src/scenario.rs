//! Scenario configs: a flat `key=value` format, validation, bundled presets,
//! and the runner that turns a config into a diagnostics time series.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{Frame, ModelKind, ModelParams, System, TimeGrid};
use crate::measures::{reduced_qubit_density, DiagnosticsRecord};
use crate::mismatch::{alias_free_sample_count, ensemble_average_series, gaussian_weight_grid};
use crate::qalg::{ComplexMatrix, ComplexVector, C64};
use crate::statekit::{sufficient_n_max, FockCoherent, SpinCoherent, NORM_TOL};
use crate::timing::{field_revival_estimate, spin_revival_estimate, RevivalEstimate};

/// A config problem, always tied to the key (or line) that caused it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }

    /// The offending key, if the error is tied to one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Duplicate { key, .. } | Self::Invalid { key, .. } => Some(key),
            Self::UnknownKey(key) => Some(key),
            Self::Missing(key) => Some(key),
            Self::Syntax { .. } => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Numerical {
        context: &'static str,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

fn numerical<E>(context: &'static str) -> impl FnOnce(E) -> ScenarioError
where
    E: std::error::Error + Send + Sync + 'static,
{
    move |e| ScenarioError::Numerical {
        context,
        source: Box::new(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelConfig {
    Field {
        n_bar: f64,
        theta: f64,
        n_max: Option<usize>,
    },
    Spin {
        zeta2: f64,
        n_spins: usize,
        phi: f64,
    },
}

impl ModelConfig {
    /// Phase that fixes the attractor states.
    pub fn phase(&self) -> f64 {
        match *self {
            Self::Field { theta, .. } => theta,
            Self::Spin { phi, .. } => phi,
        }
    }

    /// Mean excitation number of the initial mode state.
    pub fn mean_excitation(&self) -> f64 {
        match *self {
            Self::Field { n_bar, .. } => n_bar,
            Self::Spin { zeta2, n_spins, .. } => {
                let n = n_spins as f64;
                n * zeta2 / (n + zeta2)
            }
        }
    }
}

/// Number of points in the coupling-mismatch ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleCount {
    /// [`alias_free_sample_count`] for the scenario's horizon.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub m_q: usize,
    /// `[c_ee, c_eg, c_ge, c_gg]` for two qubits, `[c_e, c_g]` for one.
    pub amplitudes: Vec<C64>,
    pub lambda: f64,
    pub omega: f64,
    pub delta_width: f64,
    pub delta_samples: SampleCount,
    pub t_max_factor: f64,
    pub n_points: usize,
    /// Columns to plot; the CSV always carries every column.
    pub outputs: Vec<String>,
    pub out_path: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "model",
    "m_q",
    "n_bar",
    "theta",
    "n_max",
    "zeta2",
    "n_spins",
    "phi",
    "c_ee",
    "c_eg",
    "c_ge",
    "c_gg",
    "c_e",
    "c_g",
    "lambda",
    "omega",
    "delta_width",
    "delta_samples",
    "t_max_factor",
    "n_points",
    "outputs",
    "out_path",
];

const FIELD_KEYS: &[&str] = &["n_bar", "theta", "n_max"];
const SPIN_KEYS: &[&str] = &["zeta2", "n_spins", "phi"];
const TWO_QUBIT_KEYS: &[&str] = &["c_ee", "c_eg", "c_ge", "c_gg"];
const ONE_QUBIT_KEYS: &[&str] = &["c_e", "c_g"];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line: i + 1,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError::invalid(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.parsed(key)?.ok_or(ConfigError::Missing(key))
    }

    fn real(&self, key: &'static str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = match default {
            Some(d) => self.parsed(key)?.unwrap_or(d),
            None => self.required(key)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ConfigError::invalid(key, "must be finite"))
        }
    }

    fn reject(&self, keys: &[&str], reason: &str) -> Result<(), ConfigError> {
        match keys.iter().find(|k| self.0.contains_key(**k)) {
            Some(k) => Err(ConfigError::invalid(k, format!("not used {reason}"))),
            None => Ok(()),
        }
    }
}

/// `re+imi`, `re-imi`, or a plain real number.
pub fn parse_complex(text: &str) -> Result<C64, String> {
    C64::from_str(text.trim()).map_err(|e| format!("cannot parse complex `{text}`: {e:?}"))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, format!("must be positive, got {v}")))
    }
}

fn positive_count(key: &str, v: usize) -> Result<usize, ConfigError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be positive"))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let e = Entries::parse(text)?;
        let model = match e.required::<String>("model")?.as_str() {
            "field" => {
                e.reject(SPIN_KEYS, "by model=field")?;
                ModelConfig::Field {
                    n_bar: positive("n_bar", e.real("n_bar", None)?)?,
                    theta: e.real("theta", Some(0.0))?,
                    n_max: e.parsed::<usize>("n_max")?
                        .map(|n| positive_count("n_max", n))
                        .transpose()?,
                }
            }
            "spin" => {
                e.reject(FIELD_KEYS, "by model=spin")?;
                ModelConfig::Spin {
                    zeta2: positive("zeta2", e.real("zeta2", None)?)?,
                    n_spins: positive_count("n_spins", e.required("n_spins")?)?,
                    phi: e.real("phi", Some(0.0))?,
                }
            }
            other => {
                return Err(ConfigError::invalid(
                    "model",
                    format!("expected `field` or `spin`, got `{other}`"),
                ))
            }
        };
        let m_q: usize = e.parsed("m_q")?.unwrap_or(2);
        let amp_keys = match m_q {
            1 => {
                e.reject(TWO_QUBIT_KEYS, "with m_q=1")?;
                ONE_QUBIT_KEYS
            }
            2 => {
                e.reject(ONE_QUBIT_KEYS, "with m_q=2")?;
                TWO_QUBIT_KEYS
            }
            _ => return Err(ConfigError::invalid("m_q", format!("must be 1 or 2, got {m_q}"))),
        };
        let amplitudes = amp_keys
            .iter()
            .map(|&k| match e.raw(k) {
                None => Ok(C64::new(0.0, 0.0)),
                Some(v) => parse_complex(v).map_err(|m| ConfigError::invalid(k, m)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL || !norm.is_finite() {
            return Err(ConfigError::invalid(
                amp_keys[0],
                format!(
                    "amplitudes {} have squared norm {norm}, expected 1",
                    amp_keys.join(",")
                ),
            ));
        }
        let delta_width = e.real("delta_width", Some(0.0))?;
        if delta_width < 0.0 {
            return Err(ConfigError::invalid("delta_width", "must be >= 0"));
        }
        if m_q == 1 && delta_width > 0.0 {
            return Err(ConfigError::invalid(
                "delta_width",
                "coupling mismatch needs m_q=2",
            ));
        }
        let delta_samples = match e.raw("delta_samples") {
            None | Some("auto") => SampleCount::Auto,
            Some(_) => {
                let k: usize = e.required("delta_samples")?;
                if k == 0 || k.is_multiple_of(2) {
                    return Err(ConfigError::invalid(
                        "delta_samples",
                        format!("must be `auto` or an odd count >= 1, got {k}"),
                    ));
                }
                SampleCount::Fixed(k)
            }
        };
        let outputs: Vec<String> = match e.raw("outputs") {
            None => ["p_ee", "s_lin", "tangle"].map(String::from).to_vec(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        };
        if let Some(bad) = outputs
            .iter()
            .find(|c| !DiagnosticsRecord::COLUMNS.contains(&c.as_str()) || *c == "t")
        {
            return Err(ConfigError::invalid(
                "outputs",
                format!("unknown column `{bad}`"),
            ));
        }
        if outputs.is_empty() {
            return Err(ConfigError::invalid("outputs", "no columns listed"));
        }
        Ok(Self {
            model,
            m_q,
            amplitudes,
            lambda: positive("lambda", e.real("lambda", Some(1.0))?)?,
            omega: positive("omega", e.real("omega", Some(1.0))?)?,
            delta_width,
            delta_samples,
            t_max_factor: positive("t_max_factor", e.real("t_max_factor", Some(1.1))?)?,
            n_points: positive_count("n_points", e.parsed("n_points")?.unwrap_or(1200))?,
            outputs,
            out_path: e.raw("out_path").map(PathBuf::from),
        })
    }

    pub fn from_file(path: &Path) -> std::io::Result<Result<Self, ConfigError>> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// Config text of a bundled preset.
    pub fn preset(name: &str) -> Option<Self> {
        preset_text(name).map(|t| Self::parse(t).expect("bundled presets are valid"))
    }

    pub fn revival_estimate(&self) -> Result<RevivalEstimate, ScenarioError> {
        match self.model {
            ModelConfig::Field { n_bar, .. } => field_revival_estimate(n_bar, self.lambda),
            ModelConfig::Spin { zeta2, n_spins, .. } => {
                spin_revival_estimate(zeta2, n_spins, self.lambda)
            }
        }
        .map_err(numerical("revival time estimate"))
    }

    pub fn t_max(&self) -> Result<f64, ScenarioError> {
        Ok(self.t_max_factor * self.revival_estimate()?.t_revival)
    }

    pub fn sample_count(&self) -> Result<usize, ScenarioError> {
        match self.delta_samples {
            SampleCount::Fixed(k) => Ok(k),
            SampleCount::Auto => alias_free_sample_count(
                self.delta_width,
                self.model.mean_excitation(),
                self.t_max()?,
            )
            .map_err(numerical("mismatch sample count")),
        }
    }

    pub fn model_params(&self) -> Result<ModelParams, ScenarioError> {
        let kind = match self.model {
            ModelConfig::Field { n_bar, n_max, .. } => ModelKind::Field {
                n_max: n_max.unwrap_or_else(|| sufficient_n_max(n_bar)),
            },
            ModelConfig::Spin { n_spins, .. } => ModelKind::Spin { n_spins },
        };
        ModelParams::resonant(kind, self.omega, self.m_q, self.lambda)
            .map_err(numerical("model parameters"))
    }

    /// Initial joint state `|qubits> ⊗ |mode>`.
    pub fn initial_state(&self) -> Result<ComplexVector, ScenarioError> {
        let params = self.model_params()?;
        let mode = match (self.model, params.kind) {
            (ModelConfig::Field { n_bar, theta, .. }, ModelKind::Field { n_max }) => {
                FockCoherent::from_mean_photons(n_bar, theta, n_max)
                    .map_err(numerical("field coherent state"))?
                    .amplitudes
            }
            (ModelConfig::Spin { zeta2, n_spins, phi }, _) => {
                SpinCoherent::from_parameters(zeta2, phi, n_spins)
                    .map_err(numerical("spin coherent state"))?
                    .amplitudes
            }
            _ => unreachable!("model kind follows the config"),
        };
        params
            .hilbert()
            .product_state(&ComplexVector::from_column_slice(&self.amplitudes), &mode)
            .map_err(numerical("initial state"))
    }
}

/// Diagnostics at every grid time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeries {
    pub records: Vec<DiagnosticsRecord>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        DiagnosticsRecord::COLUMNS.iter().position(|c| *c == name)?;
        self.records.iter().map(|r| r.column(name)).collect()
    }

    /// Record whose time is closest to `t`.
    pub fn nearest(&self, t: f64) -> Option<&DiagnosticsRecord> {
        self.records
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    /// Records with `from <= t <= to`.
    pub fn window(&self, from: f64, to: f64) -> impl Iterator<Item = &DiagnosticsRecord> {
        self.records.iter().filter(move |r| r.t >= from && r.t <= to)
    }
}

/// A finished scenario with the qubit density matrices behind each record.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub series: TimeSeries,
    pub densities: Vec<ComplexMatrix>,
    pub estimate: RevivalEstimate,
    /// Ensemble members actually evolved.
    pub sample_count: usize,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<TimeSeries, ScenarioError> {
    Ok(run_scenario_detailed(config)?.series)
}

/// Runs on the config's uniform grid of `n_points` times up to `t_max`.
pub fn run_scenario_detailed(config: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    let grid = TimeGrid::uniform(config.t_max()?, config.n_points).map_err(numerical("time grid"))?;
    run_on_grid(config, &grid)
}

/// Runs on an explicit grid; `t_max_factor` and `n_points` are ignored
/// except through the automatic sample count.
pub fn run_on_grid(config: &ScenarioConfig, grid: &TimeGrid) -> Result<ScenarioRun, ScenarioError> {
    let estimate = config.revival_estimate()?;
    let params = config.model_params()?;
    let psi0 = config.initial_state()?;
    let phase = config.model.phase();
    let mut sample_count = 1;
    let densities = if config.m_q == 2 {
        let ensemble = gaussian_weight_grid(config.delta_width, config.sample_count()?)
            .map_err(numerical("mismatch ensemble"))?;
        sample_count = ensemble.len();
        ensemble_average_series(&params, &ensemble, &psi0, grid, Frame::Rotating)
            .map_err(numerical("ensemble evolution"))?
    } else {
        let system = System::new(params).map_err(numerical("propagator"))?;
        let spec = system.spec();
        let trajectory = system
            .trajectory(&psi0, Frame::Rotating)
            .map_err(numerical("trajectory"))?;
        grid.times()
            .par_iter()
            .map(|&t| reduced_qubit_density(&trajectory.state_at(t), &spec))
            .collect::<Result<_, _>>()
            .map_err(numerical("qubit reduction"))?
    };
    let records = grid
        .times()
        .par_iter()
        .zip(&densities)
        .map(|(&t, rho)| match config.m_q {
            1 => DiagnosticsRecord::from_single_qubit(t, rho, phase),
            _ => DiagnosticsRecord::from_two_qubit(t, rho, phase),
        })
        .collect::<Result<_, _>>()
        .map_err(numerical("diagnostics"))?;
    Ok(ScenarioRun {
        series: TimeSeries { records },
        densities,
        estimate,
        sample_count,
    })
}

/// Names of the bundled presets.
pub const PRESET_NAMES: [&str; 16] = [
    "fig1", "fig2", "fig4", "fig5", "fig6a", "fig6b", "fig6c", "fig7a", "fig7b", "fig7c",
    "fig8a", "fig8b", "fig8c", "fig9a", "fig9b", "fig9c",
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig1" => include_str!("../presets/fig1.conf"),
        "fig2" => include_str!("../presets/fig2.conf"),
        "fig4" => include_str!("../presets/fig4.conf"),
        "fig5" => include_str!("../presets/fig5.conf"),
        "fig6a" => include_str!("../presets/fig6a.conf"),
        "fig6b" => include_str!("../presets/fig6b.conf"),
        "fig6c" => include_str!("../presets/fig6c.conf"),
        "fig7a" => include_str!("../presets/fig7a.conf"),
        "fig7b" => include_str!("../presets/fig7b.conf"),
        "fig7c" => include_str!("../presets/fig7c.conf"),
        "fig8a" => include_str!("../presets/fig8a.conf"),
        "fig8b" => include_str!("../presets/fig8b.conf"),
        "fig8c" => include_str!("../presets/fig8c.conf"),
        "fig9a" => include_str!("../presets/fig9a.conf"),
        "fig9b" => include_str!("../presets/fig9b.conf"),
        "fig9c" => include_str!("../presets/fig9c.conf"),
        _ => return None,
    })
}

/// `max_t |P_ee^spin(t) - P_ee^field(t)|` on `n_points` uniform times in
/// `[0, t_r / 2]`, Bell initial state, `|zeta|^2 = n_bar`, zero phases.
/// `t_r` is the field-mode revival time.
pub fn field_spin_deviation(
    n_bar: f64,
    n_spins: usize,
    lambda: f64,
    n_points: usize,
) -> Result<f64, ScenarioError> {
    let bell = "c_ee=0.7071067811865476\nc_gg=0.7071067811865476\n";
    let field = ScenarioConfig::parse(&format!("model=field\nn_bar={n_bar}\nlambda={lambda}\n{bell}"))?;
    let spin = ScenarioConfig::parse(&format!(
        "model=spin\nzeta2={n_bar}\nn_spins={n_spins}\nlambda={lambda}\n{bell}"
    ))?;
    let t_half = 0.5 * field.revival_estimate()?.t_revival;
    let grid = TimeGrid::uniform(t_half, n_points).map_err(numerical("time grid"))?;
    let p_ee = |cfg: &ScenarioConfig| -> Result<Vec<f64>, ScenarioError> {
        let system = System::new(cfg.model_params()?).map_err(numerical("propagator"))?;
        let spec = system.spec();
        let trajectory = system
            .trajectory(&cfg.initial_state()?, Frame::Lab)
            .map_err(numerical("trajectory"))?;
        Ok(grid
            .times()
            .par_iter()
            .map(|&t| {
                let psi = trajectory.state_at(t);
                (0..spec.mode_dim).map(|n| psi[spec.index(0, n)].norm_sqr()).sum()
            })
            .collect())
    };
    let (a, b) = (p_ee(&field)?, p_ee(&spin)?);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
