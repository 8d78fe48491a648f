//! The `validate`, `soliton` and `flow` subcommands.

use std::path::{Path, PathBuf};

use horoflow_core::flow::{fit_xi, soliton_residual, Flow, FlowConfig, FlowOperator, Grid, Phase2, TraceRow};
use horoflow_core::functionals::{f_tilde, j_tilde};
use horoflow_core::soliton::solve_xi;
use horoflow_core::SolitonReport64;
use serde_json::{json, Value};

use crate::checkpoint::{self, Context, GridHeader};
use crate::scenario::{self, Prepared};
use crate::svg::{line_plot, Series};
use crate::trace::TraceWriter;
use crate::{CliError, EXIT_NOT_CONVERGED, EXIT_OK};

pub const CHECKPOINT: &str = "checkpoint.ckpt";
pub const FINAL_POTENTIAL: &str = "final_potential.ckpt";
pub const TRACE: &str = "trace.csv";
pub const REPORT: &str = "report.json";
pub const DIAGNOSTICS: &str = "diagnostics.json";

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn validation_json(p: &Prepared) -> Value {
    let v = &p.validation;
    let mut out = json!({
        "scenario": p.scenario.name,
        "scenario_hash": p.hash,
        "passed": v.passed(),
        "rank": p.rank(),
        "manifold_dim": p.manifold_dim(),
        "zero_margin": finite(v.zero_margin),
        "zero_interior": v.zero_interior,
        "f_prime": finite(v.f_prime),
        "min_pairing": finite(v.min_pairing),
        "two_rho_margin": finite(v.two_rho_margin),
        "two_rho_interior": v.two_rho_interior,
        "violations": v.violations,
        "delta_vertices": p.delta.vertices,
        "delta_plus_vertices": p.delta_plus.vertices,
        "restricted_roots": p.roots.restricted_roots,
        "shift": p.roots.shift_s,
    });
    if let Some(r) = &p.reflectivity {
        out["reflectivity"] = json!({
            "reflective": r.reflective(),
            "vertices_in_lattice": r.vertices_in_lattice,
            "dual_vertices_in_dual_lattice": r.dual_vertices_in_dual_lattice,
            "coroots_in_q": r.coroots_in_q,
            "details": r.details,
        });
    }
    out
}

/// Validation report; `Err(Validation)` carries it when a check fails.
pub fn cmd_validate(path: &Path) -> Result<Value, CliError> {
    let p = scenario::load(path)?;
    let report = validation_json(&p);
    if p.validation.passed() {
        Ok(report)
    } else {
        Err(CliError::Validation(report.to_string()))
    }
}

fn soliton_json(s: &SolitonReport64) -> Value {
    json!({
        "xi": s.xi,
        "xi_norm": s.xi.iter().map(|x| x * x).sum::<f64>().sqrt(),
        "residual_norm": s.residual_norm,
        "newton_iters": s.newton_iters,
        "objective_value": s.objective_value,
        "hessian_min_eig": s.hessian_min_eig,
    })
}

fn solve(p: &Prepared) -> Result<SolitonReport64, CliError> {
    solve_xi(&p.problem, 1e-12).map_err(|e| CliError::Invariant(format!("soliton solve: {e}")))
}

fn validated(path: &Path) -> Result<Prepared, CliError> {
    let p = scenario::load(path)?;
    if !p.validation.passed() {
        return Err(CliError::Validation(validation_json(&p).to_string()));
    }
    Ok(p)
}

pub fn cmd_soliton(path: &Path) -> Result<Value, CliError> {
    let p = validated(path)?;
    let s = solve(&p)?;
    let mut out = soliton_json(&s);
    out["scenario"] = json!(p.scenario.name);
    out["scenario_hash"] = json!(p.hash);
    Ok(out)
}

/// Command-line overrides of the scenario's grid, flow and output blocks.
#[derive(Clone, Debug, Default)]
pub struct FlowOptions {
    pub resume: bool,
    pub grid: Option<usize>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    /// Keep stepping to `t_max` after convergence.
    pub no_stop: bool,
    /// Stop after this many accepted steps in total, leaving a resumable checkpoint.
    pub max_steps: Option<usize>,
}

pub struct FlowOutcome {
    pub exit_code: i32,
    pub dir: PathBuf,
    pub report: Value,
}

fn core_err(e: horoflow_core::Error) -> CliError {
    match e {
        horoflow_core::Error::Config(m) => CliError::Schema(m),
        other => CliError::Invariant(other.to_string()),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn cmd_flow(path: &Path, opts: &FlowOptions) -> Result<FlowOutcome, CliError> {
    let p = validated(path)?;
    let sol = solve(&p)?;
    let sc = &p.scenario;
    let r = p.rank();
    let n = opts.grid.unwrap_or(sc.grid.points_per_axis);
    let grid = Grid::new(r, sc.grid.half_width, n).map_err(core_err)?;
    let op = FlowOperator::from_weighted(grid, &p.problem).map_err(core_err)?;
    let phase2: Phase2 = sc.flow.phase2.parse().map_err(core_err)?;
    let dt_init = opts.dt.unwrap_or(sc.flow.dt_init);
    let config = FlowConfig {
        dt_init,
        dt_max: sc.flow.dt_max.max(dt_init),
        t_max: opts.t_max.unwrap_or(sc.flow.t_max),
        tol: opts.tol.unwrap_or(sc.flow.tol),
        phase2,
        xi: if phase2 == Phase2::FixedXi { sol.xi.clone() } else { Vec::new() },
        delta: sc.flow.delta,
        stop_on_convergence: sc.flow.stop_on_convergence && !opts.no_stop,
        ..FlowConfig::default()
    };
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&sc.output.directory));
    std::fs::create_dir_all(dir.join("plots")).map_err(io_err(&dir))?;
    let grid_header = GridHeader { dim: r, half_width: sc.grid.half_width, points_per_axis: n };
    let trace_path = dir.join(TRACE);
    let ckpt_path = dir.join(CHECKPOINT);

    let (mut flow, mut writer, mut rows_written) = if opts.resume {
        let (h, state) = checkpoint::load_state(&ckpt_path)?;
        if h.scenario_hash != p.hash || h.grid != grid_header {
            return Err(CliError::Checkpoint("checkpoint belongs to a different scenario or grid".to_string()));
        }
        let flow = Flow::resume(op, &p.problem, p.manifold_dim(), config, state).map_err(core_err)?;
        // the checkpointed state's row is written again by the loop below
        let keep = h.trace_rows - 1;
        (flow, TraceWriter::truncate_to(&trace_path, keep)?, keep)
    } else {
        let flow = Flow::new(op, &p.problem, p.manifold_dim(), config, None).map_err(core_err)?;
        (flow, TraceWriter::create(&trace_path, r)?, 0)
    };

    let every = sc.output.checkpoint_every;
    let save = |flow: &Flow<f64>, row: &TraceRow<f64>, rows: usize| {
        let ctx = Context { scenario_hash: &p.hash, grid: grid_header.clone(), c_t: row.c_t, x_t: row.x_t.clone(), trace_rows: rows };
        checkpoint::save_state(&ckpt_path, ctx, &flow.state)
    };

    let mut rows: Vec<TraceRow<f64>> = Vec::new();
    let mut abort: Option<String> = None;
    let first = flow.row().map_err(core_err)?;
    writer.push(&first)?;
    rows_written += 1;
    let mut converged = first.sup_dudt < flow.config.tol;
    rows.push(first);
    let budget_left = |flow: &Flow<f64>| opts.max_steps.is_none_or(|m| flow.state.steps < m);
    while !flow.finished() && !(converged && flow.config.stop_on_convergence) && budget_left(&flow) {
        if let Err(e) = flow.step() {
            abort = Some(e.to_string());
            break;
        }
        let row = match flow.row() {
            Ok(row) => row,
            Err(e) => {
                abort = Some(e.to_string());
                break;
            }
        };
        writer.push(&row)?;
        rows_written += 1;
        converged = row.sup_dudt < flow.config.tol;
        if every > 0 && flow.state.steps % every == 0 {
            save(&flow, &row, rows_written)?;
        }
        rows.push(row);
    }
    let last = rows.last().expect("initial row").clone();
    save(&flow, &last, rows_written)?;
    let ctx = Context { scenario_hash: &p.hash, grid: grid_header.clone(), c_t: last.c_t, x_t: last.x_t.clone(), trace_rows: rows_written };
    checkpoint::save_potential(&dir.join(FINAL_POTENTIAL), ctx, flow.state.t, flow.state.steps, &flow.potential())?;

    // the whole trace, including rows from before a resume
    let table = crate::trace::Table::read(&trace_path)?;
    write_plots(&dir, &flow, &table)?;

    let exit_code = if abort.is_some() {
        3
    } else if converged || flow.config.t_max == 0.0 {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    };
    let report = run_report(&p, &sol, &flow, &table, converged, exit_code, &dir);
    std::fs::write(dir.join(REPORT), serde_json::to_string_pretty(&report).expect("json")).map_err(io_err(&dir))?;
    if let Some(reason) = abort {
        let diag = json!({
            "error": reason,
            "last_rejection": flow.last_rejection,
            "t": flow.state.t,
            "steps": flow.state.steps,
            "rejected": flow.state.rejected,
            "dt": flow.state.dt,
        });
        std::fs::write(dir.join(DIAGNOSTICS), serde_json::to_string_pretty(&diag).expect("json")).map_err(io_err(&dir))?;
        return Err(CliError::Invariant(format!("{reason} (diagnostics in {})", dir.join(DIAGNOSTICS).display())));
    }
    Ok(FlowOutcome { exit_code, dir, report })
}

fn column_max(table: &crate::trace::Table, name: &str, f: impl Fn(f64) -> f64) -> f64 {
    table.column(name).unwrap_or_default().into_iter().filter(|x| x.is_finite()).map(f).fold(f64::NEG_INFINITY, f64::max)
}

type Functional = fn(&FlowOperator<f64>, &[f64], &[f64], f64, usize) -> horoflow_core::Result<f64>;

fn run_report(
    p: &Prepared,
    sol: &SolitonReport64,
    flow: &Flow<f64>,
    table: &crate::trace::Table,
    converged: bool,
    exit_code: i32,
    dir: &Path,
) -> Value {
    let op = &flow.op;
    let psi = &flow.state.psi;
    let volume = table.column("volume").unwrap_or_default();
    let v0 = volume.first().copied().unwrap_or(f64::NAN);
    let k = table.column("k_energy").unwrap_or_default();
    let k_violations = k.windows(2).filter(|w| w[1] > w[0]).count();
    let gap = table.column("sandwich_gap").unwrap_or_default();
    let a_band = gap.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - gap.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    // F̃ and J̃ need θ to match the frame of ψ, which the smoothed path does not provide
    let theta = match flow.config.phase2 {
        Phase2::FixedXi => Some(sol.xi.clone()),
        Phase2::Off => Some(vec![0.0; p.rank()]),
        Phase2::SmoothedPath => None,
    };
    let functional = |f: Functional| theta.as_ref().and_then(|th| f(op, psi, th, flow.dh_mass, 16).ok()).map(finite).unwrap_or(Value::Null);
    let last = table.rows.last();
    let col = |name: &str| table.columns.iter().position(|c| c == name).and_then(|k| last.map(|r| r[k])).unwrap_or(f64::NAN);
    json!({
        "scenario": p.scenario.name,
        "scenario_hash": p.hash,
        "threads": rayon::current_num_threads(),
        "validation": validation_json(p),
        "soliton": soliton_json(sol),
        "grid": {"dim": p.rank(), "half_width": op.grid.half_width, "points_per_axis": op.grid.points_per_axis},
        "flow": {
            "phase2": flow.config.phase2.as_str(),
            "dt_init": flow.config.dt_init,
            "t_max": flow.config.t_max,
            "tol": flow.config.tol,
            "stop_on_convergence": flow.config.stop_on_convergence,
        },
        "converged": converged,
        "exit_code": exit_code,
        "final": {
            "t": flow.state.t,
            "steps": flow.state.steps,
            "rejected": flow.state.rejected,
            "sup_dudt": col("sup_dudt"),
            "soliton_residual": soliton_residual(op, psi, &sol.xi).map(finite).unwrap_or(Value::Null),
            "fitted_xi": fit_xi(op, psi).ok(),
            "volume": col("volume"),
            "dh_mass": flow.dh_mass,
            "j_tilde": functional(j_tilde),
            "f_tilde": functional(f_tilde),
        },
        "checks": {
            "volume_rel_drift_max": finite(volume.iter().map(|v| (v / v0 - 1.0).abs()).fold(0.0, f64::max)),
            "pushforward_rel_error": finite((v0 / flow.dh_mass - 1.0).abs()),
            "k_energy_violations": k_violations,
        },
        "empirical": {
            "a_band": finite(a_band),
            "c0_ratio_max": finite(column_max(table, "osc_ratio", |x| x)),
            "drift_max": finite(column_max(table, "drift", |x| x)),
            "c_t_abs_max": finite(column_max(table, "c_t", f64::abs)),
        },
        "artifacts": {
            "directory": dir.display().to_string(),
            "trace": TRACE,
            "final_potential": FINAL_POTENTIAL,
            "checkpoint": CHECKPOINT,
            "plots": ["plots/potential.svg", "plots/trace.svg", "plots/energy.svg"],
        },
    })
}

fn write_plots(dir: &Path, flow: &Flow<f64>, table: &crate::trace::Table) -> Result<(), CliError> {
    let grid = &flow.op.grid;
    let field = flow.potential();
    // slice along the first axis through the grid argmin
    let best = (0..field.values.len()).fold(0, |b, i| if field.values[i] < field.values[b] { i } else { b });
    let mb = grid.multi_index(best);
    let slice: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| {
            let m = grid.multi_index(i);
            (1..grid.dim).all(|a| m[a] == mb[a])
        })
        .map(|i| (grid.coords(i)[0], field.values[i]))
        .collect();
    let reference: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&i| {
            let m = grid.multi_index(i);
            (1..grid.dim).all(|a| m[a] == mb[a])
        })
        .map(|i| (grid.coords(i)[0], flow.op.u0_values()[i]))
        .collect();
    let svg = line_plot(
        &format!("potential slice at t = {}", flow.state.t),
        "x_0",
        &[Series { name: "u".into(), points: slice }, Series { name: "u0".into(), points: reference }],
        false,
    );
    let write = |name: &str, s: String| std::fs::write(dir.join("plots").join(name), s).map_err(io_err(dir));
    write("potential.svg", svg)?;

    let t = table.column("t").unwrap_or_default();
    let series =
        |name: &str| Series { name: name.to_string(), points: t.iter().copied().zip(table.column(name).unwrap_or_default()).collect() };
    write(
        "trace.svg",
        line_plot("flow monitors", "t", &[series("sup_dudt"), series("phi_sup"), series("drift"), series("path_gap")], true),
    )?;
    write("energy.svg", line_plot("K-energy and volume", "t", &[series("k_energy"), series("sandwich_gap"), series("c_t")], false))?;
    Ok(())
}
