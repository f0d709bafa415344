//! Run configuration: JSON validated against the published schema, then
//! deserialized.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::CliError;
use crate::classifier::{
    default_sample_times, sector_decompose, ClassifierError, GeneratorSet, SectorDecomposition, SectorKind,
};
use crate::engine::{IecAnsatz, InvariantKind, Method, NmrParams, SolverOptions, TimeGrid};
use crate::lie::{AdjointMatrix, Coefficient, GeneratorBasis, HamiltonianSpec, LieError, COEFFICIENT_NAMES};
use crate::linalg::{c, CVec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CoeffValue {
    Number(f64),
    Expr(String),
}

impl CoeffValue {
    pub fn to_coefficient(&self, name: &str) -> Result<Coefficient, CliError> {
        match self {
            CoeffValue::Number(x) => Ok(Coefficient::Constant(*x)),
            CoeffValue::Expr(s) => Coefficient::parse(s)
                .map_err(|e| CliError::config(format!("/hamiltonian/{name}"), e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GridConfig {
    pub t0: f64,
    pub tf: f64,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_method() -> Method {
    Method::Rk4
}
fn default_tol() -> f64 {
    1e-10
}
fn default_substeps() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: default_method(),
            tol: default_tol(),
            substeps: default_substeps(),
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            method: self.method,
            tol: self.tol,
            substeps: self.substeps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum BlockSpec {
    Named(String),
    Labels(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Numeric,
    Exact,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Numeric => "numeric",
            Mode::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct NmrConfig {
    #[serde(rename = "J")]
    pub j: f64,
    pub hx: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub omega: f64,
}

impl NmrConfig {
    pub fn params(&self) -> Result<NmrParams, CliError> {
        NmrParams::new(self.j, self.hx, self.b, self.omega).map_err(|e| CliError::config("/nmr", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IecConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    #[serde(default = "default_iec_steps")]
    pub steps: usize,
    pub gamma_poly: Option<[f64; 4]>,
    pub beta_poly: Option<[f64; 5]>,
}

fn default_epsilon() -> f64 {
    0.001
}
fn default_delta() -> f64 {
    0.2
}
fn default_t_final() -> f64 {
    1.0
}
fn default_omega0() -> f64 {
    1.0
}
fn default_iec_steps() -> usize {
    4000
}

impl Default for IecConfig {
    fn default() -> Self {
        IecConfig {
            epsilon: default_epsilon(),
            delta: default_delta(),
            t_final: default_t_final(),
            omega0: default_omega0(),
            steps: default_iec_steps(),
            gamma_poly: None,
            beta_poly: None,
        }
    }
}

impl IecConfig {
    pub fn ansatz(&self) -> Result<IecAnsatz, CliError> {
        let built = match (self.gamma_poly, self.beta_poly) {
            (None, None) => IecAnsatz::boundary(self.epsilon, self.delta, self.t_final, self.omega0),
            (Some(g), Some(b)) => {
                let a = IecAnsatz {
                    omega0: self.omega0,
                    gamma_poly: g,
                    beta_poly: b,
                    t_final: self.t_final,
                };
                a.validate().map(|_| a)
            }
            _ => {
                return Err(CliError::config(
                    "/iec",
                    "gammaPoly and betaPoly must be given together",
                ))
            }
        };
        built.map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputKind {
    Trajectory,
    Residuals,
    Propagator,
    Classification,
    Populations,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct OutputSpec {
    pub kind: OutputKind,
    pub path: String,
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunConfig {
    #[serde(default)]
    pub hamiltonian: BTreeMap<String, CoeffValue>,
    pub time_grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub initial_state: Option<InitialState>,
    pub initial_g: Option<Vec<f64>>,
    pub block: Option<BlockSpec>,
    #[serde(default)]
    pub mode: Mode,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub probe_states: usize,
    pub nmr: Option<NmrConfig>,
    pub iec: Option<IecConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: Vec<OutputSpec>,
}

/// The sector a solve runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSelection {
    pub indices: Vec<usize>,
    pub labels: Vec<String>,
    pub kind: InvariantKind,
}

impl RunConfig {
    /// Schema check, then deserialization.
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        if let Some(err) = super::output::validator("run_config").iter_errors(&value).next() {
            let pointer = err.instance_path().to_string();
            return Err(CliError::config(pointer, err.to_string()));
        }
        serde_json::from_value(value).map_err(|e| CliError::config("", e.to_string()))
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::config("", format!("invalid JSON: {e}")))?;
        Self::from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Hamiltonian from the coefficient table, or from the NMR parameters
    /// when the table is empty.
    pub fn hamiltonian(&self) -> Result<HamiltonianSpec, CliError> {
        if self.hamiltonian.is_empty() {
            if let Some(nmr) = &self.nmr {
                return nmr.params()?.hamiltonian().map_err(CliError::from);
            }
            return Err(CliError::config("/hamiltonian", "no coefficients given"));
        }
        let mut coeffs: [Coefficient; 9] = std::array::from_fn(|_| Coefficient::zero());
        for (i, name) in COEFFICIENT_NAMES.iter().enumerate() {
            if let Some(v) = self.hamiltonian.get(*name) {
                coeffs[i] = v.to_coefficient(name)?;
            }
        }
        HamiltonianSpec::new(coeffs).map_err(|e| CliError::config("/hamiltonian", e.to_string()))
    }

    /// Grid from the config, with `steps` overridden or defaulted to 2000
    /// per characteristic period of the coefficients.
    pub fn grid(&self, h: &HamiltonianSpec, steps_override: Option<usize>) -> Result<TimeGrid, CliError> {
        let g = self
            .time_grid
            .ok_or_else(|| CliError::config("/timeGrid", "a time grid is required"))?;
        let steps = match steps_override.or(g.steps) {
            Some(s) => s,
            None => default_steps(h, g.t0, g.tf, self.nmr.map(|n| n.omega)),
        };
        if steps < 2 {
            return Err(CliError::config("/timeGrid/steps", "at least 2 steps are required"));
        }
        let grid = TimeGrid::new(g.t0, g.tf, steps).map_err(|e| CliError::config("/timeGrid", e.to_string()))?;
        if steps < 4 {
            log::warn!("{steps} grid steps: phase quadrature and finite differences drop to low order");
        }
        Ok(grid)
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.options()
    }

    /// Initial state, renormalized with a warning when needed.
    pub fn initial_state(&self) -> Result<CVec, CliError> {
        let psi = match &self.initial_state {
            None => named_state("00").expect("known label"),
            Some(InitialState::Named(n)) => {
                named_state(n).ok_or_else(|| CliError::config("/initialState", format!("unknown basis state {n}")))?
            }
            Some(InitialState::Amplitudes(a)) => CVec::from_iterator(4, a.iter().map(|z| c(z[0], z[1]))),
        };
        let norm = psi.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CliError::config("/initialState", "state has zero norm"));
        }
        if (norm - 1.0).abs() > 1e-12 {
            log::warn!("initial state has norm {norm}; renormalized");
        }
        Ok(psi / c(norm, 0.0))
    }

    /// Sector named by `block`, checked against the decomposition of `h`.
    pub fn block(&self, h: &HamiltonianSpec, grid: &TimeGrid) -> Result<BlockSelection, CliError> {
        let spinor = GeneratorBasis::spinor();
        let decomp = decompose(h, grid)?;
        let from = |idx: Vec<usize>, kind: InvariantKind| BlockSelection {
            labels: idx.iter().map(|&i| spinor.label(i).to_string()).collect(),
            indices: idx,
            kind,
        };
        match &self.block {
            None => Ok(from((0..15).collect(), InvariantKind::Full)),
            Some(BlockSpec::Named(n)) if n == "full" => Ok(from((0..15).collect(), InvariantKind::Full)),
            Some(BlockSpec::Named(n)) => {
                let kind = if n == "S" { SectorKind::S } else { SectorKind::D };
                let (_, sector) = decomp
                    .of_kind(kind)
                    .next()
                    .ok_or_else(|| CliError::config("/block", format!("the Hamiltonian has no {n} sector")))?;
                let kind = if kind == SectorKind::S { InvariantKind::S } else { InvariantKind::D };
                Ok(from(sector.indices.clone(), kind))
            }
            Some(BlockSpec::Labels(labels)) => {
                let mut idx: Vec<usize> = labels
                    .iter()
                    .map(|l| spinor.index_of(l).ok_or_else(|| CliError::config("/block", format!("unknown label {l}"))))
                    .collect::<Result<_, _>>()?;
                idx.sort_unstable();
                let mut kinds = Vec::new();
                for (b, sector) in decomp.blocks.iter().enumerate() {
                    let inside = sector.indices.iter().filter(|i| idx.contains(i)).count();
                    if inside != 0 && inside != sector.indices.len() {
                        return Err(CliError::config(
                            "/block",
                            format!("labels cut through sector {b} ({})", sector.dimension_label),
                        ));
                    }
                    if inside != 0 {
                        kinds.push(sector.kind);
                    }
                }
                let kind = match (idx.len(), kinds.contains(&SectorKind::S)) {
                    (15, _) => InvariantKind::Full,
                    (_, true) => InvariantKind::S,
                    _ => InvariantKind::D,
                };
                Ok(from(idx, kind))
            }
        }
    }

    /// `initialG`, or the Hamiltonian's own coefficients on the block, or
    /// the first unit vector when those vanish.
    pub fn initial_g(&self, h: &HamiltonianSpec, block: &BlockSelection, t0: f64) -> Result<Vec<f64>, CliError> {
        if let Some(g) = &self.initial_g {
            if g.len() != block.indices.len() {
                return Err(CliError::config(
                    "/initialG",
                    format!("{} components for a block of {}", g.len(), block.indices.len()),
                ));
            }
            if g.iter().all(|x| *x == 0.0) {
                return Err(CliError::config("/initialG", "initial vector is zero"));
            }
            return Ok(g.clone());
        }
        let full = h.spinor_vector_at(t0).map_err(CliError::from)?;
        let mut g: Vec<f64> = block.indices.iter().map(|&i| full[i]).collect();
        if g.iter().all(|x| *x == 0.0) {
            g[0] = 1.0;
        }
        Ok(g)
    }

    pub fn tolerance(&self, over: Option<f64>) -> f64 {
        over.or(self.tolerance).unwrap_or(1e-6)
    }
}

fn named_state(n: &str) -> Option<CVec> {
    let k = ["00", "01", "10", "11"].iter().position(|s| *s == n)?;
    let mut v = CVec::zeros(4);
    v[k] = c(1.0, 0.0);
    Some(v)
}

/// Connected sectors of the adjoint matrix over the grid's span.
pub fn decompose(h: &HamiltonianSpec, grid: &TimeGrid) -> Result<SectorDecomposition, CliError> {
    let a = AdjointMatrix::spinor(h);
    let samples = default_sample_times(grid.t0, grid.tf);
    sector_decompose(&a, &GeneratorSet::new(h.support()), &samples).map_err(|e| match e {
        ClassifierError::Lie(LieError::Eval(e)) => CliError::from(e),
        e => CliError::config("/hamiltonian", e.to_string()),
    })
}

fn default_steps(h: &HamiltonianSpec, t0: f64, tf: f64, omega: Option<f64>) -> usize {
    let mut rate = omega.map(f64::abs).unwrap_or(0.0);
    for t in default_sample_times(t0, tf) {
        if let Ok(v) = h.coefficients_at(t) {
            rate = v.iter().fold(rate, |m, x| m.max(x.abs()));
        }
    }
    let periods = (tf - t0).abs() * rate / (2.0 * std::f64::consts::PI);
    (2000.0 * periods.max(1.0)).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_rejects_numbers_as_strings() {
        let err = RunConfig::parse_str(r#"{"timeGrid": {"t0": "0", "tf": 1}}"#).unwrap_err();
        match err {
            CliError::Config { pointer, .. } => assert_eq!(pointer, "/timeGrid/t0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_coefficient_is_rejected_with_pointer() {
        let err = RunConfig::parse_str(r#"{"hamiltonian": {"J_w": 1}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config { ref pointer, .. } if pointer == "/hamiltonian"), "{err:?}");
    }

    #[test]
    fn zero_coupling_is_a_config_error() {
        let cfg = RunConfig::parse_str(r#"{"hamiltonian": {"h1_x": 1, "J_x": "0"}}"#).unwrap();
        assert!(matches!(cfg.hamiltonian(), Err(CliError::Config { .. })));
    }

    #[test]
    fn state_is_renormalized() {
        let cfg = RunConfig::parse_str(r#"{"initialState": [[2,0],[0,0],[0,0],[0,0]]}"#).unwrap();
        let psi = cfg.initial_state().unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert_eq!(psi[0], c(1.0, 0.0));
    }

    #[test]
    fn ising_blocks_select() {
        let cfg = RunConfig::parse_str(
            r#"{"hamiltonian": {"J_x": "1", "h2_x": 0.3, "h2_y": "0.2*cos(t)", "h2_z": -0.4},
                "timeGrid": {"t0": 0, "tf": 2, "steps": 10}, "block": "D"}"#,
        )
        .unwrap();
        let h = cfg.hamiltonian().unwrap();
        let grid = cfg.grid(&h, None).unwrap();
        let b = cfg.block(&h, &grid).unwrap();
        assert_eq!(b.indices.len(), 4);
        assert_eq!(b.kind, InvariantKind::D);
        assert_eq!(cfg.initial_g(&h, &b, 0.0).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        let mut cut = cfg.clone();
        cut.block = Some(BlockSpec::Labels(vec!["1X".into()]));
        assert!(cut.block(&h, &grid).is_err());
    }

    #[test]
    fn default_steps_scale_with_rate() {
        let h = HamiltonianSpec::constant([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(default_steps(&h, 0.0, 1.0, None), 2000);
        let n = default_steps(&h, 0.0, 20.0 * std::f64::consts::PI, None);
        assert_eq!(n, 20000);
    }
}
