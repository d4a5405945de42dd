//! Subcommand drivers: the only I/O surface of the crate.
//!
//! Every float is printed with 17 significant digits so output files are
//! byte-reproducible golden artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::{
    classify, mu_star, phase_sweep, ClassifyConfig, ClassifyError, ProbeSetup, SweepPoint,
};
use crate::config::RunConfig;
use crate::dynamics::{run_fb, solve_ode, SimConfig, Trajectory};
use crate::grid::Grid;
use crate::growth::{self, equilibrium};
use crate::spectral::{self, eigen_nodes_for, lambda_p, SpectralError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("{0}")]
    Runtime(String),
    #[error("mu-star probe undecided: {0}")]
    Undecided(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code: 0 ok, 1 validation, 2 runtime, 3 undecided.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io(_) => 2,
            CliError::Undecided(_) => 3,
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::UndecidedRun { .. } => CliError::Undecided(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::dynamics::DynamicsError> for CliError {
    fn from(e: crate::dynamics::DynamicsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// 17 significant digits; enough to round-trip any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let cfg = RunConfig::from_json(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Validation(errors))
    }
}

fn build_grid(cfg: &RunConfig) -> Result<Grid, CliError> {
    Grid::new(cfg.grid.half_length, cfg.grid.nodes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn record_every(cfg: &RunConfig) -> usize {
    ((cfg.time.record_stride / cfg.time.dt).round() as usize).max(1)
}

fn classify_config(cfg: &RunConfig) -> Result<ClassifyConfig, CliError> {
    let t_max = cfg.classify.t_max.unwrap_or(cfg.time.t_end);
    let mut cc = ClassifyConfig::defaults(&cfg.kernel, &cfg.params, &cfg.growth, t_max)?;
    if let Some(l) = cfg.classify.l_spread {
        cc.l_spread = l;
    }
    cc.eps_vanish = cfg.classify.eps_vanish;
    if let Some(h) = cfg.classify.hold_time {
        cc.hold_time = h;
    }
    Ok(cc)
}

/// `validate`: check every model assumption, print derived scalars, exit
/// nonzero only when a check fails (a subcritical model is still valid).
pub fn cmd_validate(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let kernel_report = cfg.kernel.validate(256);
    write!(out, "{kernel_report}")?;
    let growth_report = growth::validate_growth(&cfg.growth, &cfg.params, 100.0);
    write!(out, "{growth_report}")?;

    let scal = growth::derived_scalars(
        &cfg.params,
        &cfg.growth,
        cfg.initial.sup_u0(),
        cfg.initial.sup_v0(),
    );
    writeln!(out, "R0 = {}", fmt_f64(scal.r0))?;
    writeln!(out, "theta = {}", fmt_f64(scal.theta))?;
    match scal.equilibrium {
        Some((k1, k2)) => {
            writeln!(out, "K1 = {}", fmt_f64(k1))?;
            writeln!(out, "K2 = {}", fmt_f64(k2))?;
        }
        None => writeln!(out, "no positive equilibrium (R0 <= 1)")?,
    }
    writeln!(out, "A_bound = {}", fmt_f64(scal.a_bound))?;
    writeln!(out, "B_bound = {}", fmt_f64(scal.b_bound))?;
    if scal.theta > 0.0 && scal.theta < cfg.params.d {
        let ls = spectral::l_star(&cfg.kernel, &cfg.params, &cfg.growth, cfg.lstar_tol)?;
        writeln!(out, "l_star = {}", fmt_f64(ls))?;
    }

    if kernel_report.all_passed() && growth_report.all_passed() {
        Ok(())
    } else {
        let failures = kernel_report
            .failures()
            .chain(growth_report.failures())
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(CliError::Validation(failures))
    }
}

fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "t,g,h,mass_u,mass_v,u_center,v_center,max_u,max_v")?;
    for r in &traj.records {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.g),
            fmt_f64(r.h),
            fmt_f64(r.mass_u),
            fmt_f64(r.mass_v),
            fmt_f64(r.u_center),
            fmt_f64(r.v_center),
            fmt_f64(r.max_u),
            fmt_f64(r.max_v),
        )?;
    }
    Ok(())
}

/// `simulate`: run the free-boundary system, write the trajectory CSV,
/// field snapshots, and a verdict JSON tied to the config hash.
pub fn cmd_simulate(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out_dir)?;
    let grid = build_grid(cfg)?;
    let cc = classify_config(cfg)?;
    let k1 = equilibrium(&cfg.params, &cfg.growth).ok().map(|(k, _)| k);
    let sim = SimConfig {
        dt: cfg.time.dt,
        t_end: cfg.time.t_end,
        record_every: record_every(cfg),
        snapshot_times: cfg.snapshots.clone(),
        early_exit: cfg.classify.early_exit.then(|| cc.early_exit(k1)),
    };
    let traj = run_fb(
        &cfg.initial,
        &cfg.params,
        &cfg.kernel,
        &cfg.growth,
        &grid,
        &sim,
    )?;

    write_trajectory_csv(&out_dir.join("trajectory.csv"), &traj)?;
    for (i, snap) in traj.snapshots.iter().enumerate() {
        let mut f = fs::File::create(out_dir.join(format!("snapshot_{i:03}.csv")))?;
        writeln!(f, "x,u,v")?;
        for j in 0..snap.x.len() {
            writeln!(
                f,
                "{},{},{}",
                fmt_f64(snap.x[j]),
                fmt_f64(snap.u[j]),
                fmt_f64(snap.v[j])
            )?;
        }
    }

    let verdict = classify(&traj, &cfg.params, &cfg.growth, &cc)?;
    let payload = serde_json::json!({
        "outcome": verdict.outcome,
        "evidence": verdict.evidence,
        "config_hash": cfg.canonical_hash(),
    });
    let verdict_path = out_dir.join("verdict.json");
    fs::write(
        &verdict_path,
        serde_json::to_string_pretty(&payload)?.as_bytes(),
    )?;
    Ok(verdict_path)
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// `eigen`: principal eigenvalue per interval length, one CSV row each.
pub fn cmd_eigen(cfg: &RunConfig, out_dir: &Path, out: &mut impl Write) -> Result<(), CliError> {
    let Some(eigen) = &cfg.eigen else {
        return Err(CliError::Validation(vec![
            "eigen section missing from config".into(),
        ]));
    };
    fs::create_dir_all(out_dir)?;
    let mut csv = fs::File::create(out_dir.join("eigen.csv"))?;
    writeln!(csv, "l1,l2,lambda_p")?;
    writeln!(out, "l1,l2,lambda_p")?;
    for (i, &len) in eigen.lengths.iter().enumerate() {
        let (l1, l2) = (-0.5 * len, 0.5 * len);
        let n = eigen_nodes_for(&cfg.kernel, len, eigen.nodes_per_support);
        let sp = lambda_p(&cfg.kernel, &cfg.params, &cfg.growth, l1, l2, n)?;
        let row = format!("{},{},{}", fmt_f64(l1), fmt_f64(l2), fmt_f64(sp.lambda_p));
        writeln!(csv, "{row}")?;
        writeln!(out, "{row}")?;
        if eigen.dump_eigenfunction {
            let mut f = fs::File::create(out_dir.join(format!("eigenfunction_{i:03}.csv")))?;
            writeln!(f, "x,phi")?;
            for (j, &phi) in sp.eigenfunction.iter().enumerate() {
                writeln!(f, "{},{}", fmt_f64(sp.interval.node(j)), fmt_f64(phi))?;
            }
        }
    }
    Ok(())
}

/// `lstar`: the critical length with its bisection bracket.
pub fn cmd_lstar(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let (lo, hi) = spectral::l_star_bracket(&cfg.kernel, &cfg.params, &cfg.growth, cfg.lstar_tol)?;
    writeln!(out, "l_star = {}", fmt_f64(0.5 * (lo + hi)))?;
    writeln!(out, "bracket = [{}, {}]", fmt_f64(lo), fmt_f64(hi))?;
    writeln!(out, "tolerance = {}", fmt_f64(cfg.lstar_tol))?;
    Ok(())
}

/// `mustar`: the critical expansion coefficient as a bracket.
pub fn cmd_mustar(cfg: &RunConfig, out: &mut impl Write) -> Result<(), CliError> {
    let grid = build_grid(cfg)?;
    let cc = classify_config(cfg)?;
    let setup = ProbeSetup {
        kernel: &cfg.kernel,
        growth: &cfg.growth,
        init: &cfg.initial,
        grid: &grid,
        dt: cfg.time.dt,
    };
    let r = mu_star(&cfg.params, &setup, &cc, cfg.mustar_tol)?;
    writeln!(
        out,
        "mu_star in [{}, {}]",
        fmt_f64(r.mu_lo),
        fmt_f64(r.mu_hi)
    )?;
    writeln!(out, "midpoint = {}", fmt_f64(r.midpoint()))?;
    writeln!(out, "tolerance = {}", fmt_f64(cfg.mustar_tol))?;
    writeln!(
        out,
        "verdicts: mu_lo -> {}, mu_hi -> {}",
        r.verdict_lo, r.verdict_hi
    )?;
    Ok(())
}

/// `sweep`: classify every `(alpha, h0, mu)` triple, one CSV row per point.
pub fn cmd_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    let Some(sweep) = &cfg.sweep else {
        return Err(CliError::Validation(vec![
            "sweep section missing from config".into(),
        ]));
    };
    fs::create_dir_all(out_dir)?;
    let grid = build_grid(cfg)?;
    let mut points = Vec::new();
    for &alpha in &sweep.alphas {
        for &h0 in &sweep.h0s {
            for &mu in &sweep.mus {
                points.push(SweepPoint { alpha, h0, mu });
            }
        }
    }
    let setup = ProbeSetup {
        kernel: &cfg.kernel,
        growth: &cfg.growth,
        init: &cfg.initial,
        grid: &grid,
        dt: cfg.time.dt,
    };
    let t_max = sweep.t_max.unwrap_or(cfg.time.t_end);
    let rows = phase_sweep(&points, &cfg.params, &setup, t_max, cfg.workers);

    let path = out_dir.join("sweep.csv");
    let mut f = fs::File::create(&path)?;
    writeln!(
        f,
        "alpha,h0,mu,R0,theta,l_star,predicted,verdict,final_gap,final_max_u,u_center_err"
    )?;
    for row in &rows {
        let (verdict, gap, max_u, center_err) = match &row.verdict {
            Ok(v) => (
                v.outcome.to_string(),
                fmt_f64(v.evidence.final_gap),
                fmt_f64(v.evidence.final_max_u),
                v.evidence
                    .u_center_rel_err
                    .map(fmt_f64)
                    .unwrap_or_else(|| "nan".into()),
            ),
            Err(e) => (
                format!("error: {e}"),
                "nan".into(),
                "nan".into(),
                "nan".into(),
            ),
        };
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(row.point.alpha),
            fmt_f64(row.point.h0),
            fmt_f64(row.point.mu),
            fmt_f64(row.r0),
            fmt_f64(row.theta),
            row.l_star.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            row.predicted,
            verdict,
            gap,
            max_u,
            center_err,
        )?;
    }
    Ok(path)
}

/// `ode`: the spatially homogeneous system by RK4, written as CSV.
pub fn cmd_ode(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf, CliError> {
    let Some(ode) = &cfg.ode else {
        return Err(CliError::Validation(vec![
            "ode section missing from config".into(),
        ]));
    };
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("ode.csv");
    let mut f = fs::File::create(&path)?;
    writeln!(f, "t,u,v")?;
    for (t, u, v) in solve_ode(&cfg.params, &cfg.growth, ode.u0, ode.v0, ode.t_end, ode.dt) {
        writeln!(f, "{},{},{}", fmt_f64(t), fmt_f64(u), fmt_f64(v))?;
    }
    Ok(path)
}
