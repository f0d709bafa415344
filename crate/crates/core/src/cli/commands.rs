use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{decompose, CoeffValue, Mode, OutputKind, RunConfig};
use super::output::{cell, complex_rows, numbers, read_csv, resolve, write_csv, write_json};
use super::{CliError, Context};
use crate::classifier::{enumerate_dtype, identify_subalgebra, commutator_closure, su3_exclusion_check, GeneratorSet, SectorKind};
use crate::engine::{
    assemble_invariant, evolution_operator, lr_spectrum, nmr_exact, schrodinger_oracle, solve_adjoint,
    verify_with_oracle, iec_two_level, CoefficientTrajectory, DynamicalInvariant, EvolutionOperator,
    IecAnsatz, InvariantKind, LRSpectrum, NmrParams, ResidualReport, TimeGrid,
};
use crate::lie::{GeneratorBasis, HamiltonianSpec, COEFFICIENT_NAMES};
use crate::linalg::{hermitian_eigen, inner, random_state, re, CVec};

// ---------------------------------------------------------------- classify

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SubalgebraDoc {
    pub name: String,
    pub dimension: usize,
    pub span_dimension: usize,
    pub center: Vec<String>,
    pub commutant: Vec<String>,
    pub table_row: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockDoc {
    pub kind: SectorKind,
    pub size: usize,
    pub label: String,
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintDoc {
    pub condition: String,
    pub lambda: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Su3Doc {
    pub feasible: bool,
    pub constraints: Vec<ConstraintDoc>,
    pub residual_span_dim: usize,
    pub residual_lambdas: Vec<usize>,
    pub generated_dim: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationReport {
    pub subalgebra: SubalgebraDoc,
    pub hamiltonian_set: Vec<String>,
    pub blocks: Vec<BlockDoc>,
    pub block_sizes: Vec<usize>,
    pub s_set: Vec<String>,
    pub d_sets: Vec<Vec<String>>,
    pub charge: Option<String>,
    pub su3: Su3Doc,
}

fn config_err<E: std::fmt::Display>(pointer: &'static str) -> impl FnOnce(E) -> CliError {
    move |e| CliError::config(pointer, e.to_string())
}

pub fn classification_report(h: &HamiltonianSpec, grid: &TimeGrid) -> Result<ClassificationReport, CliError> {
    let spinor = GeneratorBasis::spinor();
    let names = |idx: &[usize]| idx.iter().map(|&i| spinor.label(i).to_string()).collect::<Vec<_>>();
    let hset = GeneratorSet::new(h.support());
    let closure = commutator_closure(&hset, &spinor).map_err(config_err("/hamiltonian"))?;
    let label = identify_subalgebra(&closure, &spinor).map_err(config_err("/hamiltonian"))?;
    let decomp = decompose(h, grid)?;
    let dtype = enumerate_dtype(&decomp).map_err(config_err("/hamiltonian"))?;
    let su3 = su3_exclusion_check(h);
    let s_set: Vec<String> = decomp
        .of_kind(SectorKind::S)
        .flat_map(|(_, s)| names(&s.indices))
        .collect();
    Ok(ClassificationReport {
        subalgebra: SubalgebraDoc {
            name: label.name.as_str().to_string(),
            dimension: label.dimension,
            span_dimension: label.span_dimension,
            center: names(&label.center),
            commutant: names(&label.commutant),
            table_row: label.table_match.as_ref().map(|m| m.row),
        },
        hamiltonian_set: names(hset.members()),
        blocks: decomp
            .blocks
            .iter()
            .map(|s| BlockDoc {
                kind: s.kind,
                size: s.indices.len(),
                label: s.dimension_label.clone(),
                generators: names(&s.indices),
            })
            .collect(),
        block_sizes: decomp.block_sizes(),
        s_set,
        d_sets: dtype
            .sets
            .iter()
            .map(|d| d.generators.iter().map(|g| g.to_string()).collect())
            .collect(),
        charge: dtype.charge.clone(),
        su3: Su3Doc {
            feasible: su3.feasible,
            constraints: su3
                .constraints_forced
                .iter()
                .map(|f| ConstraintDoc {
                    condition: f.constraint.to_string(),
                    lambda: f.lambda,
                    satisfied: f.satisfied,
                })
                .collect(),
            residual_span_dim: su3.residual_span_dim,
            residual_lambdas: su3.residual_lambdas.clone(),
            generated_dim: su3.generated_dim,
        },
    })
}

/// Echoes a document on stdout. A closed pipe is not an error.
fn emit(value: &serde_json::Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

/// Grid for commands that only need a time window.
fn window(cfg: &RunConfig) -> TimeGrid {
    cfg.time_grid
        .and_then(|g| TimeGrid::new(g.t0, g.tf, 2).ok())
        .unwrap_or(TimeGrid { t0: 0.0, tf: 1.0, steps: 2 })
}

pub fn run_classify(cfg: &RunConfig, ctx: &Context) -> Result<ClassificationReport, CliError> {
    let h = cfg.hamiltonian()?;
    let report = classification_report(&h, &window(cfg))?;
    let value = write_json(&ctx.out_dir.join("classification.json"), "classification", &report)?;
    emit(&value);
    Ok(report)
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolveSummary {
    pub mode: String,
    pub kind: String,
    pub labels: Vec<String>,
    pub steps: usize,
    pub max_di_residual: f64,
    pub max_expectation_drift: f64,
    pub max_norm_drift: f64,
    pub max_unitarity_drift: f64,
    pub analytic_derivative: bool,
    /// Drift of `g_X1² + g_Y1²` when both components are solved.
    pub conservation_drift: Option<f64>,
    pub lr_transport_defect: Option<f64>,
    /// Smallest `|⟨ψ_oracle|ψ_LR⟩|²` along the grid.
    pub lr_fidelity: Option<f64>,
}

/// Everything a solve produces before anything is written.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub hamiltonian: HamiltonianSpec,
    pub grid: TimeGrid,
    pub trajectory: CoefficientTrajectory,
    pub invariant: DynamicalInvariant,
    pub report: ResidualReport,
    pub oracle: EvolutionOperator,
    pub spectrum: Option<LRSpectrum>,
    pub psi0: CVec,
    pub summary: SolveSummary,
}

fn conservation_drift(traj: &CoefficientTrajectory) -> Option<f64> {
    let x = traj.component("X1")?;
    let y = traj.component("Y1")?;
    let r: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * a + b * b).collect();
    Some(r.iter().map(|v| (v - r[0]).abs()).fold(0.0, f64::max))
}

/// Solves the configured problem without writing anything.
pub fn solve_core(cfg: &RunConfig, steps: Option<usize>) -> Result<SolveRun, CliError> {
    let spinor = GeneratorBasis::spinor();
    let opts = cfg.solver_options();
    let (h, grid, trajectory, invariant, nmr) = match cfg.mode {
        Mode::Exact => {
            let nmr = cfg
                .nmr
                .ok_or_else(|| CliError::config("/mode", "exact mode needs an nmr section"))?;
            if !matches!(&cfg.block, None | Some(super::config::BlockSpec::Named(_)))
                || matches!(&cfg.block, Some(super::config::BlockSpec::Named(n)) if n != "full")
            {
                return Err(CliError::config("/block", "exact mode solves the full basis"));
            }
            let params = nmr.params()?;
            let h = params.hamiltonian()?;
            let grid = nmr_grid(cfg, &params, &h, steps)?;
            let sol = nmr_exact(params, &grid)?;
            let vectors = grid
                .times()
                .into_iter()
                .map(|t| {
                    let mut g = vec![0.0; 15];
                    let gp = params.g_plus(t);
                    g[6] = 2.0 * params.j;
                    g[0] = 2.0 * (gp[0] - params.j);
                    g[1] = 2.0 * gp[1];
                    g[2] = 2.0 * gp[2];
                    g
                })
                .collect();
            let traj = CoefficientTrajectory {
                grid,
                labels: spinor.labels().iter().map(|s| s.to_string()).collect(),
                indices: None,
                vectors,
            };
            (h, grid, traj, sol.invariant.clone(), Some(sol))
        }
        Mode::Numeric => {
            let h = cfg.hamiltonian()?;
            let grid = cfg.grid(&h, steps)?;
            let block = cfg.block(&h, &grid)?;
            let g0 = cfg.initial_g(&h, &block, grid.t0)?;
            let a = crate::lie::AdjointMatrix::spinor(&h).restrict(&block.indices);
            let traj = solve_adjoint(&a, &g0, &grid, &opts)?.with_indices(block.indices.clone());
            let inv = assemble_invariant(&traj, &spinor, block.kind)?;
            (h, grid, traj, inv, None)
        }
    };
    let psi0 = cfg.initial_state()?;
    let mut states = vec![psi0.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    states.extend((0..cfg.probe_states).map(|_| random_state(&mut rng, 4)));
    let oracle = schrodinger_oracle(&h, &grid, &opts)?;
    let report = verify_with_oracle(&invariant, &h, Some(&oracle), &states)?;

    let spectrum = match &nmr {
        Some(sol) => Some(sol.spectrum(Some(&psi0))?),
        None => match lr_spectrum(&invariant, &h, Some(&psi0)) {
            Ok(s) => Some(s),
            Err(e) => {
                log::info!("no LR spectrum for this invariant: {e}");
                None
            }
        },
    };
    let (transport, fidelity) = match &spectrum {
        Some(s) if s.states() == s.dim() => {
            let lr_states = s.evolve_state(&psi0);
            let fid = lr_states
                .iter()
                .zip(oracle.evolve(&psi0))
                .map(|(a, b)| inner(&b, a).norm_sqr())
                .fold(f64::INFINITY, f64::min);
            (Some(s.transport_defect(&oracle)?), Some(fid))
        }
        _ => (None, None),
    };
    let summary = SolveSummary {
        mode: cfg.mode.as_str().to_string(),
        kind: invariant.kind().to_string(),
        labels: trajectory.labels.clone(),
        steps: grid.steps,
        max_di_residual: report.max_di_residual,
        max_expectation_drift: report.max_expectation_drift,
        max_norm_drift: trajectory.max_norm_drift(),
        max_unitarity_drift: oracle.max_unitarity_drift(),
        analytic_derivative: report.analytic_derivative,
        conservation_drift: conservation_drift(&trajectory),
        lr_transport_defect: transport,
        lr_fidelity: fidelity,
    };
    Ok(SolveRun {
        hamiltonian: h,
        grid,
        trajectory,
        invariant,
        report,
        oracle,
        spectrum,
        psi0,
        summary,
    })
}

#[derive(Serialize)]
struct Snapshot {
    t: f64,
    u: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct PropagatorDoc {
    source: crate::engine::PropagatorSource,
    snapshots: Vec<Snapshot>,
}

fn trajectory_header(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("g_{i}")))
        .collect()
}

pub fn run_solve(cfg: &RunConfig, ctx: &Context) -> Result<SolveRun, CliError> {
    let run = solve_core(cfg, ctx.steps)?;
    let times = run.grid.times();
    for out in &cfg.outputs {
        let path = resolve(&ctx.out_dir, &out.path);
        let stride = out.stride.unwrap_or(1);
        match out.kind {
            OutputKind::Trajectory => write_csv(
                &path,
                &trajectory_header(run.trajectory.dim()),
                times
                    .iter()
                    .zip(&run.trajectory.vectors)
                    .map(|(t, g)| numbers(std::iter::once(*t).chain(g.iter().copied()))),
            )?,
            OutputKind::Residuals => {
                let drift = run.trajectory.norm_drift();
                write_csv(
                    &path,
                    &["t", "di_residual", "expectation_drift", "norm_drift"].map(String::from),
                    (0..times.len()).map(|k| {
                        numbers([
                            times[k],
                            run.report.di_residual[k],
                            run.report.expectation_drift[k],
                            drift[k],
                        ])
                    }),
                )?
            }
            OutputKind::Propagator => {
                let doc = PropagatorDoc {
                    source: run.oracle.source,
                    snapshots: (0..times.len())
                        .step_by(stride)
                        .map(|k| Snapshot {
                            t: times[k],
                            u: complex_rows(&run.oracle.matrices[k]),
                        })
                        .collect(),
                };
                write_json(&path, "propagator", &doc)?;
            }
            OutputKind::Populations => write_csv(
                &path,
                &["t", "p_0", "p_1", "p_2", "p_3"].map(String::from),
                run.oracle
                    .evolve(&run.psi0)
                    .iter()
                    .zip(&times)
                    .step_by(stride)
                    .map(|(psi, t)| numbers(std::iter::once(*t).chain(psi.iter().map(|z| z.norm_sqr())))),
            )?,
            OutputKind::Classification => {
                write_json(&path, "classification", &classification_report(&run.hamiltonian, &run.grid)?)?;
            }
        }
    }
    let value = write_json(&ctx.out_dir.join("summary.json"), "summary", &run.summary)?;
    emit(&value);
    if let Some(tol) = ctx.tol {
        if !(run.summary.max_di_residual <= tol) {
            return Err(CliError::Verification(format!(
                "DI residual {:e} exceeds {tol:e}",
                run.summary.max_di_residual
            )));
        }
    }
    Ok(run)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    pub pass: bool,
    pub tolerance: f64,
    pub rows: usize,
    pub max_di_residual: f64,
    pub worst_row: usize,
    pub failing_rows: Vec<usize>,
}

pub fn run_verify(cfg: &RunConfig, trajectory: &Path, ctx: &Context) -> Result<VerifyReport, CliError> {
    let (header, rows) = read_csv(trajectory)?;
    if rows.len() < 2 {
        return Err(CliError::config("", format!("{} holds fewer than two rows", trajectory.display())));
    }
    let n = header.len() - 1;
    if header != trajectory_header(n) {
        return Err(CliError::config("", format!("unexpected header {header:?}")));
    }
    let t0 = rows[0][0];
    let tf = rows[rows.len() - 1][0];
    let grid = TimeGrid::new(t0, tf, rows.len() - 1).map_err(config_err(""))?;
    for (k, r) in rows.iter().enumerate() {
        if (r[0] - grid.time(k)).abs() > 1e-9 * (1.0 + tf.abs()) {
            return Err(CliError::config("", format!("row {k}: times are not uniformly spaced")));
        }
    }
    let h = match cfg.mode {
        Mode::Exact => cfg
            .nmr
            .ok_or_else(|| CliError::config("/mode", "exact mode needs an nmr section"))?
            .params()?
            .hamiltonian()?,
        Mode::Numeric => cfg.hamiltonian()?,
    };
    let block = match cfg.mode {
        Mode::Exact => super::config::BlockSelection {
            indices: (0..15).collect(),
            labels: Vec::new(),
            kind: InvariantKind::Full,
        },
        Mode::Numeric => cfg.block(&h, &grid)?,
    };
    if block.indices.len() != n {
        return Err(CliError::config(
            "/block",
            format!("trajectory has {n} components, block has {}", block.indices.len()),
        ));
    }
    let traj = CoefficientTrajectory {
        grid,
        labels: (1..=n).map(|i| format!("g_{i}")).collect(),
        indices: Some(block.indices.clone()),
        vectors: rows.iter().map(|r| r[1..].to_vec()).collect(),
    };
    let inv = assemble_invariant(&traj, &GeneratorBasis::spinor(), block.kind)?;
    let residual = verify_with_oracle(&inv, &h, None, &[])?;
    let tol = cfg.tolerance(ctx.tol);
    let failing: Vec<usize> = residual
        .di_residual
        .iter()
        .enumerate()
        .filter(|(_, r)| !(**r <= tol))
        .map(|(k, _)| k)
        .collect();
    let worst = residual
        .di_residual
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let report = VerifyReport {
        pass: failing.is_empty(),
        tolerance: tol,
        rows: rows.len(),
        max_di_residual: residual.max_di_residual,
        worst_row: worst,
        failing_rows: failing,
    };
    let value = write_json(&ctx.out_dir.join("verify_report.json"), "verify_report", &report)?;
    emit(&value);
    if !report.pass {
        return Err(CliError::Verification(format!(
            "{} rows exceed {tol:e}; first failing row {}, worst row {worst} ({:e})",
            report.failing_rows.len(),
            report.failing_rows[0],
            report.max_di_residual
        )));
    }
    Ok(report)
}

// ---------------------------------------------------------------- nmr

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NmrParamsDoc {
    #[serde(rename = "J")]
    pub j: f64,
    pub hx: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NmrReport {
    pub params: NmrParamsDoc,
    pub period: Option<f64>,
    pub steps: usize,
    pub g_plus0: [f64; 3],
    pub g_minus0: [f64; 3],
    pub adjoint_residual: f64,
    pub max_di_residual: f64,
    /// Largest change of the sorted spectrum of `I_S/2` from `±|g±(0)|`.
    pub eigenvalue_deviation: f64,
    pub lr_oracle_distance: f64,
    pub transport_defect: f64,
    pub degenerate: bool,
}

/// The configured grid, else one drive period.
fn nmr_grid(cfg: &RunConfig, params: &NmrParams, h: &HamiltonianSpec, steps: Option<usize>) -> Result<TimeGrid, CliError> {
    match cfg.time_grid {
        Some(_) => cfg.grid(h, steps),
        None if params.period().is_finite() => {
            TimeGrid::new(0.0, params.period(), steps.unwrap_or(2000)).map_err(config_err("/nmr"))
        }
        None => Err(CliError::config("/timeGrid", "a static field needs an explicit time grid")),
    }
}

pub fn run_nmr(cfg: &RunConfig, ctx: &Context) -> Result<NmrReport, CliError> {
    let nmr = cfg.nmr.ok_or_else(|| CliError::config("/nmr", "an nmr section is required"))?;
    let params = nmr.params()?;
    let h = params.hamiltonian()?;
    let grid = nmr_grid(cfg, &params, &h, ctx.steps)?;
    let opts = cfg.solver_options();
    let sol = nmr_exact(params, &grid)?;
    let residual = verify_with_oracle(&sol.invariant, &sol.hamiltonian, None, &[])?;
    let spectrum = sol.spectrum(None)?;
    let oracle = schrodinger_oracle(&sol.hamiltonian, &grid, &opts)?;
    let u = evolution_operator(&spectrum)?;
    let norm = |g: [f64; 3]| g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (np, nm) = (norm(params.g_plus(grid.t0)), norm(params.g_minus(grid.t0)));
    let mut expect = vec![np, -np, nm, -nm];
    expect.sort_by(f64::total_cmp);
    let mut deviation: f64 = 0.0;
    for k in 0..grid.len() {
        let (vals, _) = hermitian_eigen(&(sol.invariant.matrix(k) * re(0.5)));
        for (a, b) in vals.iter().zip(&expect) {
            deviation = deviation.max((a - b).abs());
        }
    }
    let degenerate = crate::engine::nmr_eigensystem(params.g_plus(grid.t0), params.g_minus(grid.t0))?.degenerate;
    let report = NmrReport {
        params: NmrParamsDoc {
            j: params.j,
            hx: params.hx,
            b: params.b,
            omega: params.omega,
        },
        period: Some(params.period()).filter(|p| p.is_finite()),
        steps: grid.steps,
        g_plus0: params.g_plus(grid.t0),
        g_minus0: params.g_minus(grid.t0),
        adjoint_residual: sol.adjoint_residual()?,
        max_di_residual: residual.max_di_residual,
        eigenvalue_deviation: deviation,
        lr_oracle_distance: u.max_distance(&oracle),
        transport_defect: spectrum.transport_defect(&oracle)?,
        degenerate,
    };
    let times = grid.times();
    write_csv(
        &ctx.out_dir.join("nmr_g.csv"),
        &["t", "gp_1", "gp_2", "gp_3", "gm_1", "gm_2", "gm_3"].map(String::from),
        times.iter().map(|&t| {
            numbers(std::iter::once(t).chain(params.g_plus(t)).chain(params.g_minus(t)))
        }),
    )?;
    write_csv(
        &ctx.out_dir.join("nmr_spectrum.csv"),
        &["t", "lambda_1", "lambda_2", "lambda_3", "lambda_4", "alpha_1", "alpha_2", "alpha_3", "alpha_4"]
            .map(String::from),
        (0..times.len()).map(|k| {
            numbers(
                std::iter::once(times[k])
                    .chain(spectrum.eigenvalues[k].iter().copied())
                    .chain(spectrum.phases[k].iter().copied()),
            )
        }),
    )?;
    let value = write_json(&ctx.out_dir.join("nmr.json"), "nmr_report", &report)?;
    emit(&value);
    if let Some(tol) = ctx.tol {
        if !(report.lr_oracle_distance <= tol) {
            return Err(CliError::Verification(format!(
                "LR propagator differs from the oracle by {:e}",
                report.lr_oracle_distance
            )));
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- iec

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnsatzDoc {
    pub omega0: f64,
    pub gamma_poly: [f64; 4],
    pub beta_poly: [f64; 5],
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IecReport {
    pub ansatz: AnsatzDoc,
    pub steps: usize,
    pub inversion_fidelity: f64,
    pub boundary_commutators: [f64; 2],
    pub max_di_residual: f64,
    pub max_unitarity_drift: f64,
    pub final_state: [[f64; 2]; 2],
}

pub fn run_iec(cfg: &RunConfig, ctx: &Context) -> Result<IecReport, CliError> {
    let iec = cfg.iec.clone().unwrap_or_default();
    let ansatz: IecAnsatz = iec.ansatz()?;
    let steps = ctx.steps.unwrap_or(iec.steps);
    let r = iec_two_level(&ansatz, steps, &cfg.solver_options())?;
    let report = IecReport {
        ansatz: AnsatzDoc {
            omega0: ansatz.omega0,
            gamma_poly: ansatz.gamma_poly,
            beta_poly: ansatz.beta_poly,
            t_final: ansatz.t_final,
        },
        steps,
        inversion_fidelity: r.inversion_fidelity,
        boundary_commutators: r.boundary_commutators,
        max_di_residual: r.max_di_residual,
        max_unitarity_drift: r.max_unitarity_drift,
        final_state: r.final_state,
    };
    let grid = TimeGrid::new(0.0, ansatz.t_final, steps)?;
    let rows = grid
        .times()
        .into_iter()
        .map(|t| {
            let hm = ansatz.hamiltonian_at(t)?;
            Ok(numbers([t, ansatz.gamma(t).0, ansatz.beta(t).0, 2.0 * hm[(0, 1)].re, 2.0 * hm[(0, 0)].re]))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    write_csv(
        &ctx.out_dir.join("iec_hamiltonian.csv"),
        &["t", "gamma", "beta", "omega_x", "omega_z"].map(String::from),
        rows,
    )?;
    let value = write_json(&ctx.out_dir.join("iec.json"), "iec_report", &report)?;
    emit(&value);
    if let Some(tol) = ctx.tol {
        if !(1.0 - report.inversion_fidelity <= tol) {
            return Err(CliError::Verification(format!(
                "inversion infidelity {:e} exceeds {tol:e}",
                1.0 - report.inversion_fidelity
            )));
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: SolveSummary,
}

pub fn run_sweep(
    cfg: &RunConfig,
    parameter: Option<&str>,
    values: Option<&[f64]>,
    ctx: &Context,
) -> Result<Vec<SweepRow>, CliError> {
    let parameter = parameter
        .map(str::to_string)
        .or_else(|| cfg.sweep.as_ref().map(|s| s.parameter.clone()))
        .ok_or_else(|| CliError::config("/sweep", "no sweep parameter given"))?;
    if !COEFFICIENT_NAMES.contains(&parameter.as_str()) {
        return Err(CliError::config("/sweep/parameter", format!("unknown coefficient {parameter}")));
    }
    let values: Vec<f64> = values
        .map(<[f64]>::to_vec)
        .or_else(|| cfg.sweep.as_ref().map(|s| s.values.clone()))
        .unwrap_or_default();
    if values.is_empty() {
        return Err(CliError::config("/sweep/values", "no values to sweep"));
    }
    if let Some(current) = cfg.hamiltonian.get(&parameter) {
        let c = current.to_coefficient(&parameter)?;
        if c.constant_value().is_none() {
            return Err(CliError::config(
                format!("/hamiltonian/{parameter}"),
                "only constant coefficients can be swept",
            ));
        }
    }
    let job = |v: &f64| -> Result<SweepRow, CliError> {
        let mut point = cfg.clone();
        point.hamiltonian.insert(parameter.clone(), CoeffValue::Number(*v));
        Ok(SweepRow {
            value: *v,
            summary: solve_core(&point, ctx.steps)?.summary,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config("", e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(job).collect::<Result<_, _>>())?;
    let path = resolve(
        &ctx.out_dir,
        cfg.sweep.as_ref().and_then(|s| s.path.as_deref()).unwrap_or("sweep.csv"),
    );
    let header = [
        parameter.as_str(),
        "max_di_residual",
        "max_expectation_drift",
        "max_norm_drift",
        "conservation_drift",
        "lr_transport_defect",
        "lr_fidelity",
    ]
    .map(String::from);
    write_csv(
        &path,
        &header,
        rows.iter().map(|r| {
            let s = &r.summary;
            vec![
                r.value.to_string(),
                s.max_di_residual.to_string(),
                s.max_expectation_drift.to_string(),
                s.max_norm_drift.to_string(),
                cell(s.conservation_drift),
                cell(s.lr_transport_defect),
                cell(s.lr_fidelity),
            ]
        }),
    )?;
    {
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), "wrote {} rows to {}", rows.len(), path.display());
    }
    Ok(rows)
}
