//! Scenario configuration files (JSON).

use std::path::{Path, PathBuf};

use delaystab::models::{build_beam1d, build_wave1d_boundary, build_wave1d_interior, BeamSupport};
use delaystab::rng::SplitMix64;
use delaystab::{DampingProfile, Mechanism, Mode, Model, SchemeParams, State};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Wave1dInterior,
    Wave1dBoundary,
    Beam1dHinged,
    Beam1dClamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    Indicator { value: f64, support: [f64; 2] },
    /// One value per unknown, in node order.
    Samples { values: Vec<f64> },
}

impl ProfileSpec {
    pub fn to_profile(&self) -> DampingProfile {
        match self {
            ProfileSpec::Constant { value } => DampingProfile::Constant(*value),
            ProfileSpec::Indicator { value, support } => DampingProfile::Indicator {
                value: *value,
                support: (support[0], support[1]),
            },
            ProfileSpec::Samples { values } => DampingProfile::Samples(values.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    #[default]
    Buffer,
    Transport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    #[default]
    Plain,
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitSpec {
    /// 1-based index into the ascending stiffness spectrum.
    Eigenmode { index: usize },
    /// Nodal `u` then `v`, uniform on `[-1, 1)`.
    Random { seed: u64 },
    /// JSON object `{"u": [...], "v": [...]}` with nodal values.
    File { path: PathBuf },
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec::Eigenmode { index: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HistorySpec {
    #[default]
    Zero,
    /// Constant history equal to the initial velocity trace.
    MatchInitial,
    /// JSON object `{"samples": [[...], ...]}`: nodal velocities at
    /// `-tau, -tau + dt, ..., 0`, oldest first.
    File { path: PathBuf },
}

fn default_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelKind,
    pub n: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    pub tau: f64,
    pub xi: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<ProfileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<ProfileSpec>,
    /// Boundary feedback gain (wave1d-boundary only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Interior delayed damping (wave1d-boundary only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ProfileSpec>,
    #[serde(default)]
    pub mechanism: MechanismKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_rho: Option<usize>,
    #[serde(default)]
    pub mode: ModeKind,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub f0: HistorySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitFile {
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryFile {
    samples: Vec<Vec<f64>>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.check_keys()?;
        Ok(config)
    }

    /// Reads a config file; relative data-file paths are resolved against the
    /// directory containing it.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut config: Self = read_json(path)?;
        config.check_keys()?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let InitSpec::File { path } = &mut config.init {
            *path = base.join(&*path);
        }
        if let HistorySpec::File { path } = &mut config.f0 {
            *path = base.join(&*path);
        }
        Ok(config)
    }

    fn check_keys(&self) -> Result<(), CliError> {
        let boundary = self.model == ModelKind::Wave1dBoundary;
        let missing = |key: &str| CliError::Config(format!("model {:?} needs key '{key}'", self.model_name()));
        let stray = |key: &str| CliError::Config(format!("key '{key}' does not apply to model {:?}", self.model_name()));
        if boundary {
            if self.k.is_none() {
                return Err(missing("k"));
            }
            if self.b.is_none() {
                return Err(missing("b"));
            }
            if self.b1.is_some() {
                return Err(stray("b1"));
            }
            if self.b2.is_some() {
                return Err(stray("b2"));
            }
        } else {
            if self.b1.is_none() {
                return Err(missing("b1"));
            }
            if self.b2.is_none() {
                return Err(missing("b2"));
            }
            if self.k.is_some() {
                return Err(stray("k"));
            }
            if self.b.is_some() {
                return Err(stray("b"));
            }
        }
        if self.mechanism == MechanismKind::Buffer && self.n_rho.is_some() {
            return Err(CliError::Config("n_rho applies only to the transport mechanism".into()));
        }
        Ok(())
    }

    pub fn model_name(&self) -> &'static str {
        match self.model {
            ModelKind::Wave1dInterior => "wave1d-interior",
            ModelKind::Wave1dBoundary => "wave1d-boundary",
            ModelKind::Beam1dHinged => "beam1d-hinged",
            ModelKind::Beam1dClamped => "beam1d-clamped",
        }
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        let profile = |p: &Option<ProfileSpec>| p.as_ref().map(ProfileSpec::to_profile).unwrap_or_else(DampingProfile::zero);
        let model = match self.model {
            ModelKind::Wave1dInterior => {
                build_wave1d_interior(self.n, self.length, &profile(&self.b1), &profile(&self.b2), self.tau, self.xi)?
            }
            ModelKind::Wave1dBoundary => build_wave1d_boundary(
                self.n,
                self.length,
                self.k.unwrap_or_default(),
                &profile(&self.b),
                self.tau,
                self.xi,
            )?,
            ModelKind::Beam1dHinged | ModelKind::Beam1dClamped => {
                let support = if self.model == ModelKind::Beam1dHinged {
                    BeamSupport::Hinged
                } else {
                    BeamSupport::Clamped
                };
                build_beam1d(
                    self.n,
                    self.length,
                    support,
                    &profile(&self.b1),
                    &profile(&self.b2),
                    self.tau,
                    self.xi,
                )?
            }
        };
        Ok(model)
    }

    pub fn scheme(&self) -> SchemeParams {
        let mode = match self.mode {
            ModeKind::Plain => Mode::Plain,
            ModeKind::Auxiliary => Mode::Auxiliary,
        };
        SchemeParams::new(self.dt).with_mode(mode)
    }

    pub fn mechanism(&self) -> Mechanism {
        match self.mechanism {
            MechanismKind::Buffer => Mechanism::Buffer,
            MechanismKind::Transport => Mechanism::Transport { n_rho: self.n_rho },
        }
    }

    pub fn initial_state(&self, model: &Model) -> Result<State, CliError> {
        let n = model.system.n_dof();
        match &self.init {
            InitSpec::Eigenmode { index } => Ok(model.eigenmode_state(*index)?),
            InitSpec::Random { seed } => {
                let mut rng = SplitMix64::new(*seed);
                let u: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
                let v: Vec<f64> = (0..n).map(|_| rng.next_symmetric()).collect();
                Ok(State::new(0.0, model.to_coordinates(&u), model.to_coordinates(&v)))
            }
            InitSpec::File { path } => {
                let data: InitFile = read_json(path)?;
                if data.u.len() != n || data.v.len() != n {
                    return Err(CliError::Config(format!(
                        "{}: expected {n} nodal values in u and v, got {} and {}",
                        path.display(),
                        data.u.len(),
                        data.v.len()
                    )));
                }
                Ok(State::new(0.0, model.to_coordinates(&data.u), model.to_coordinates(&data.v)))
            }
        }
    }

    /// Number of history samples on `[-tau, 0]`.
    pub fn history_len(&self) -> Result<usize, CliError> {
        Ok(delaystab::delay::steps_per_delay(self.dt, self.tau)? + 1)
    }

    /// Initial history `B2* u_t(s)` at `s = -tau, -tau + dt, ..., 0`.
    pub fn history(&self, model: &Model, init: &State) -> Result<Vec<Vec<f64>>, CliError> {
        let sys = &model.system;
        let len = self.history_len()?;
        match &self.f0 {
            HistorySpec::Zero => Ok(vec![vec![0.0; sys.m2()]; len]),
            HistorySpec::MatchInitial => Ok(vec![sys.b2_adjoint(&init.v); len]),
            HistorySpec::File { path } => {
                let data: HistoryFile = read_json(path)?;
                if data.samples.len() != len {
                    return Err(CliError::Config(format!(
                        "{}: expected {len} history samples, got {}",
                        path.display(),
                        data.samples.len()
                    )));
                }
                data.samples
                    .iter()
                    .map(|s| {
                        if s.len() != sys.n_dof() {
                            return Err(CliError::Config(format!(
                                "{}: history sample has {} values, expected {}",
                                path.display(),
                                s.len(),
                                sys.n_dof()
                            )));
                        }
                        Ok(sys.b2_adjoint(&model.to_coordinates(s)))
                    })
                    .collect()
            }
        }
    }

    pub fn fit_window(&self) -> (f64, f64) {
        match self.fit_window {
            Some([a, b]) => (a, b),
            None => (0.0, self.t_final),
        }
    }
}
