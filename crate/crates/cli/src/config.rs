//! TOML instance files.
//!
//! ```toml
//! name = "example"
//! mode = "exact"            # or "relaxed"
//! state_dim = 2
//! input_dim = 1
//! horizon = 1
//! channels = 1
//!
//! [dynamics]
//! a = { constant = [[1.0, 0.1], [0.0, 1.0]] }
//! b = { per_step = [[[0.0], [1.0]]] }   # one matrix per step
//! d = { constant = [0.0, 0.0] }
//! w = { constant = [[0.0, 0.0], [0.0, 0.01]] }
//! abar = [{ constant = [[0.1, 0.0], [0.0, 0.0]] }]   # one entry per channel
//! bbar = [{ constant = [[0.0], [0.2]] }]
//!
//! [boundary]
//! mu0 = [0.0, 0.0]
//! sigma0 = [[1.0, 0.0], [0.0, 1.0]]
//! mud = [0.0, 0.0]
//! sigmad = [[2.0, 0.0], [0.0, 2.0]]
//!
//! [weights]
//! q = { constant = [[1.0, 0.0], [0.0, 1.0]] }
//! r = { constant = [[1.0]] }
//!
//! [solver]                  # optional
//! max_iterations = 200
//! gap_tol = 1e-5            # relaxation-gap tolerance for policy recovery
//!
//! [simulation]              # optional
//! samples = 10000
//! seed = 1
//! family = "gaussian_unit"  # uniform_sqrt3, three_point, degenerate
//! ```
//!
//! Matrices are lists of rows. `constant` replicates one value over all
//! steps; `per_step` lists exactly `horizon` values.

use covsteer::{
    BoundaryMoments, CostWeights, ModelError, NoiseFamily, ProblemInstance, SimulationConfig, SteeringMode,
    SteeringSettings, SystemDynamics,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn schema(msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema(msg.into())
}

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSeq {
    Constant(Rows),
    PerStep(Vec<Rows>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorSeq {
    Constant(Vec<f64>),
    PerStep(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub a: MatrixSeq,
    pub b: MatrixSeq,
    pub d: VectorSeq,
    pub w: MatrixSeq,
    #[serde(default)]
    pub abar: Vec<MatrixSeq>,
    #[serde(default)]
    pub bbar: Vec<MatrixSeq>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub mu0: Vec<f64>,
    pub sigma0: Rows,
    pub mud: Vec<f64>,
    pub sigmad: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub q: MatrixSeq,
    pub r: MatrixSeq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub family: NoiseFamily,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 1,
            family: NoiseFamily::GaussianUnit,
        }
    }
}

impl SimulationSection {
    pub fn to_config(&self) -> SimulationConfig {
        SimulationConfig::new(self.samples, self.seed, self.family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
}

impl SolverSection {
    pub fn settings(&self) -> SteeringSettings {
        let mut s = SteeringSettings::default();
        if let Some(it) = self.max_iterations {
            s.solver.max_iterations = it;
        }
        if let Some(tol) = self.gap_tol {
            s.gap_tol = tol;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default)]
    pub name: String,
    pub mode: SteeringMode,
    pub state_dim: usize,
    pub input_dim: usize,
    pub horizon: usize,
    #[serde(default)]
    pub channels: usize,
    pub dynamics: DynamicsConfig,
    pub boundary: BoundaryConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

fn matrix(what: &str, rows: &Rows, nr: usize, nc: usize) -> Result<DMatrix<f64>, ConfigError> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        let found_cols = rows.first().map_or(0, Vec::len);
        return Err(schema(format!(
            "{what}: expected {nr}x{nc}, found {} rows of {found_cols}",
            rows.len()
        )));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn vector(what: &str, v: &[f64], n: usize) -> Result<DVector<f64>, ConfigError> {
    if v.len() != n {
        return Err(schema(format!("{what}: expected length {n}, found {}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

fn matrices(what: &str, seq: &MatrixSeq, nr: usize, nc: usize, horizon: usize) -> Result<Vec<DMatrix<f64>>, ConfigError> {
    match seq {
        MatrixSeq::Constant(rows) => Ok(vec![matrix(what, rows, nr, nc)?; horizon]),
        MatrixSeq::PerStep(list) => {
            if list.len() != horizon {
                return Err(schema(format!("{what}: expected {horizon} matrices, found {}", list.len())));
            }
            list.iter()
                .enumerate()
                .map(|(k, rows)| matrix(&format!("{what}[{k}]"), rows, nr, nc))
                .collect()
        }
    }
}

fn vectors(what: &str, seq: &VectorSeq, n: usize, horizon: usize) -> Result<Vec<DVector<f64>>, ConfigError> {
    match seq {
        VectorSeq::Constant(v) => Ok(vec![vector(what, v, n)?; horizon]),
        VectorSeq::PerStep(list) => {
            if list.len() != horizon {
                return Err(schema(format!("{what}: expected {horizon} vectors, found {}", list.len())));
            }
            list.iter()
                .enumerate()
                .map(|(k, v)| vector(&format!("{what}[{k}]"), v, n))
                .collect()
        }
    }
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn seq_of(list: &[DMatrix<f64>]) -> MatrixSeq {
    if list.iter().all(|m| m == &list[0]) {
        MatrixSeq::Constant(rows_of(&list[0]))
    } else {
        MatrixSeq::PerStep(list.iter().map(rows_of).collect())
    }
}

impl InstanceConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(schema("horizon must be at least 1"));
        }
        if self.solver.max_iterations == Some(0) || self.solver.gap_tol.is_some_and(|t| !(t > 0.0)) {
            return Err(schema("solver.max_iterations and solver.gap_tol must be positive"));
        }
        if self.state_dim == 0 || self.input_dim == 0 {
            return Err(schema("state_dim and input_dim must be at least 1"));
        }
        let d = &self.dynamics;
        if d.abar.len() != self.channels || d.bbar.len() != self.channels {
            return Err(schema(format!(
                "channels = {} but abar has {} and bbar has {} entries",
                self.channels,
                d.abar.len(),
                d.bbar.len()
            )));
        }
        Ok(())
    }

    pub fn to_instance(&self) -> Result<ProblemInstance, ConfigError> {
        self.validate()?;
        let (n, m, h) = (self.state_dim, self.input_dim, self.horizon);
        let d = &self.dynamics;
        let mut abar = vec![Vec::with_capacity(self.channels); h];
        let mut bbar = vec![Vec::with_capacity(self.channels); h];
        for l in 0..self.channels {
            let a_l = matrices(&format!("abar[{l}]"), &d.abar[l], n, n, h)?;
            let b_l = matrices(&format!("bbar[{l}]"), &d.bbar[l], n, m, h)?;
            for (k, (a, b)) in a_l.into_iter().zip(b_l).enumerate() {
                abar[k].push(a);
                bbar[k].push(b);
            }
        }
        let dynamics = SystemDynamics::new(
            matrices("a", &d.a, n, n, h)?,
            matrices("b", &d.b, n, m, h)?,
            vectors("d", &d.d, n, h)?,
            matrices("w", &d.w, n, n, h)?,
            abar,
            bbar,
        )?;
        let bd = &self.boundary;
        let boundary = BoundaryMoments::new(
            vector("mu0", &bd.mu0, n)?,
            matrix("sigma0", &bd.sigma0, n, n)?,
            vector("mud", &bd.mud, n)?,
            matrix("sigmad", &bd.sigmad, n, n)?,
        )?;
        let weights = CostWeights::new(
            matrices("q", &self.weights.q, n, n, h)?,
            matrices("r", &self.weights.r, m, m, h)?,
        )?;
        Ok(ProblemInstance::new(dynamics, boundary, weights, self.mode)?)
    }

    /// Config describing `instance`; time-invariant sequences use `constant`.
    pub fn from_instance(name: &str, instance: &ProblemInstance, simulation: SimulationSection) -> Self {
        let dy = instance.dynamics();
        let h = dy.horizon();
        let collect = |f: &dyn Fn(usize) -> DMatrix<f64>| (0..h).map(f).collect::<Vec<_>>();
        let ds: Vec<Vec<f64>> = (0..h).map(|k| dy.d(k).iter().copied().collect()).collect();
        let d = if ds.iter().all(|v| v == &ds[0]) {
            VectorSeq::Constant(ds[0].clone())
        } else {
            VectorSeq::PerStep(ds)
        };
        let bd = instance.boundary();
        Self {
            name: name.to_string(),
            mode: instance.mode(),
            state_dim: dy.state_dim(),
            input_dim: dy.input_dim(),
            horizon: h,
            channels: dy.channels(),
            dynamics: DynamicsConfig {
                a: seq_of(&collect(&|k| dy.a(k).clone())),
                b: seq_of(&collect(&|k| dy.b(k).clone())),
                d,
                w: seq_of(&collect(&|k| dy.w(k).clone())),
                abar: (0..dy.channels()).map(|l| seq_of(&collect(&|k| dy.abar(k)[l].clone()))).collect(),
                bbar: (0..dy.channels()).map(|l| seq_of(&collect(&|k| dy.bbar(k)[l].clone()))).collect(),
            },
            boundary: BoundaryConfig {
                mu0: bd.mu0().iter().copied().collect(),
                sigma0: rows_of(bd.sigma0()),
                mud: bd.mud().iter().copied().collect(),
                sigmad: rows_of(bd.sigmad()),
            },
            weights: WeightsConfig {
                q: seq_of(&collect(&|k| instance.weights().q(k).clone())),
                r: seq_of(&collect(&|k| instance.weights().r(k).clone())),
            },
            solver: SolverSection::default(),
            simulation,
        }
    }
}

pub const EXAMPLE1: &str = include_str!("../configs/example1.toml");
pub const UAV_RELAXED: &str = include_str!("../configs/uav-relaxed.toml");
pub const UAV_EXACT: &str = include_str!("../configs/uav-exact.toml");

/// Bundled config by name.
pub fn bundled(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(EXAMPLE1),
        "uav-relaxed" => Some(UAV_RELAXED),
        "uav-exact" => Some(UAV_EXACT),
        _ => None,
    }
}

pub const BUNDLED_NAMES: [&str; 3] = ["example1", "uav-relaxed", "uav-exact"];
