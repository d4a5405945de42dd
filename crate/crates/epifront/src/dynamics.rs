//! Time integration: the free-boundary system, the fixed-domain system, and
//! the spatially homogeneous ODE, plus trajectory recording and the
//! mass-balance diagnostic.
//!
//! The free-boundary scheme is forward Euler on the master grid:
//!
//! ```text
//! u⁺ = u + dt [ d (J *_[g,h] u) - d u - a u + c v ]
//! v⁺ = v + dt [ -b v + G(u) ]
//! h⁺ = h + dt μ ∫_g^h u(x) T(h - x) dx
//! g⁺ = g - dt μ ∫_g^h u(x) T(x - g) dx
//! ```
//!
//! Fronts move continuously; nodes that enter the window start at zero,
//! matching the zero boundary values of the continuum problem. The explicit
//! step is monotone under `dt (d + a) <= 1/2`, `dt b <= 1/2`, which is what
//! keeps the comparison and positivity properties of the continuum intact
//! discretely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    active_range, convolve_core, flux_unchecked, quad_weight, ActiveWindow, Field, Grid, GridError,
    KernelTable, Side,
};
use crate::growth::{GrowthLaw, ModelParams};
use crate::interval::{convolve_on_interval, interval_kernel_table, IntervalGrid};
use crate::kernel::Kernel;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dt = {dt} violates the stability margin dt(d+a) <= 1/2, dt b <= 1/2")]
    StabilityViolation { dt: f64 },
    #[error("front hit the master-grid guard band at t = {t} (g = {g:.6}, h = {h:.6})")]
    GridExhausted { t: f64, g: f64, h: f64 },
    #[error("trajectory lacks the reaction-integral diagnostics")]
    MissingDiagnostics,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Instantaneous state of the free-boundary system.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub window: ActiveWindow,
    pub u: Field,
    pub v: Field,
}

/// Built-in initial profiles on `[-h0, h0]`, zero at the ends and positive
/// inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialShape {
    /// `amp (1 - (x/h0)²)`
    Bump,
    /// `amp cos(π x / (2 h0))`
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub shape: InitialShape,
    pub amp_u: f64,
    pub amp_v: f64,
}

impl InitialData {
    fn profile(&self, x: f64, h0: f64) -> f64 {
        let z = x / h0;
        if z.abs() >= 1.0 {
            return 0.0;
        }
        match self.shape {
            InitialShape::Bump => 1.0 - z * z,
            InitialShape::Cosine => (0.5 * std::f64::consts::PI * z).cos(),
        }
    }

    pub fn u0(&self, x: f64, h0: f64) -> f64 {
        self.amp_u * self.profile(x, h0)
    }

    pub fn v0(&self, x: f64, h0: f64) -> f64 {
        self.amp_v * self.profile(x, h0)
    }

    /// Sup-norms of the two profiles (both peak at the origin).
    pub fn sup_u0(&self) -> f64 {
        self.amp_u
    }

    pub fn sup_v0(&self) -> f64 {
        self.amp_v
    }
}

/// Per-record summary of the state.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub u_center: f64,
    pub v_center: f64,
    pub max_u: f64,
    pub max_v: f64,
    /// `∫ (-a u + (c/b) G(u)) dx`, the reaction term of the mass balance.
    pub react_int: Option<f64>,
}

/// Full field dump at one instant (active nodes only).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Why a run stopped before `t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// A front reached the guard band next to the master-grid boundary;
    /// a normal spreading outcome, not a failure.
    GridEscape,
    /// The early-exit hook saw conclusive evidence.
    EarlyVerdict,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub snapshots: Vec<Snapshot>,
    pub truncation: Option<Truncation>,
    /// Number of clamped negative values exceeding `1e-10` in magnitude.
    pub clamp_warnings: usize,
    pub final_state: SimState,
}

impl Trajectory {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory has >= 1 record")
    }
}

/// Early-exit thresholds checked at record times.
#[derive(Debug, Clone)]
pub struct EarlyExit {
    pub spread_length: f64,
    /// When set, spreading also requires the center value to have entered
    /// this band at some record.
    pub center_band: Option<(f64, f64)>,
    pub eps_vanish: f64,
    pub hold_time: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between records.
    pub record_every: usize,
    pub snapshot_times: Vec<f64>,
    pub early_exit: Option<EarlyExit>,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Self {
        SimConfig {
            dt,
            t_end,
            record_every: record_every.max(1),
            snapshot_times: Vec::new(),
            early_exit: None,
        }
    }
}

fn check_stability(p: &ModelParams, dt: f64) -> Result<(), DynamicsError> {
    if !(dt > 0.0) || dt * (p.d + p.a) > 0.5 || dt * p.b > 0.5 {
        return Err(DynamicsError::StabilityViolation { dt });
    }
    Ok(())
}

/// One forward-Euler step, in place. `scratch` holds the convolution.
#[allow(clippy::too_many_arguments)]
fn step_inplace(
    state: &mut SimState,
    p: &ModelParams,
    growth: &GrowthLaw,
    grid: &Grid,
    kernel: &Kernel,
    kt: &KernelTable,
    support: f64,
    dt: f64,
    scratch: &mut [f64],
    clamp_warnings: &mut usize,
) -> Result<(), DynamicsError> {
    let w = state.window;
    let Some((lo, hi)) = active_range(grid, &w) else {
        // Empty interior: both fields vanish, fluxes are zero, fronts rest.
        state.t += dt;
        return Ok(());
    };

    let flux_r = flux_unchecked(state.u.values(), &w, grid, kernel, lo, hi, Side::Right);
    let flux_l = flux_unchecked(state.u.values(), &w, grid, kernel, lo, hi, Side::Left);
    let h_new = w.h + dt * p.mu * flux_r;
    let g_new = w.g - dt * p.mu * flux_l;
    if h_new > grid.half_length() - support || g_new < -grid.half_length() + support {
        return Err(DynamicsError::GridExhausted {
            t: state.t,
            g: g_new,
            h: h_new,
        });
    }

    convolve_core(state.u.values(), &w, grid, kt, lo, hi, scratch);
    let u = state.u.values_mut();
    let v = state.v.values_mut();
    for i in lo..=hi {
        let du = dt * (p.d * scratch[i] - p.d * u[i] - p.a * u[i] + p.c * v[i]);
        let dv = dt * (-p.b * v[i] + growth.rate(u[i]));
        let mut un = u[i] + du;
        let mut vn = v[i] + dv;
        if un < 0.0 {
            if un < -1e-10 {
                *clamp_warnings += 1;
            }
            un = 0.0;
        }
        if vn < 0.0 {
            if vn < -1e-10 {
                *clamp_warnings += 1;
            }
            vn = 0.0;
        }
        u[i] = un;
        v[i] = vn;
    }
    state.window = ActiveWindow { g: g_new, h: h_new };
    state.t += dt;
    Ok(())
}

/// One forward-Euler step of the free-boundary system.
pub fn step_fb(
    state: &SimState,
    p: &ModelParams,
    kernel: &Kernel,
    growth: &GrowthLaw,
    grid: &Grid,
    dt: f64,
) -> Result<SimState, DynamicsError> {
    check_stability(p, dt)?;
    let mut next = state.clone();
    let kt = KernelTable::build(kernel, grid);
    let mut scratch = vec![0.0; grid.n()];
    let mut warnings = 0;
    step_inplace(
        &mut next,
        p,
        growth,
        grid,
        kernel,
        &kt,
        kernel.support_radius(),
        dt,
        &mut scratch,
        &mut warnings,
    )?;
    Ok(next)
}

fn summarize(
    state: &SimState,
    p: &ModelParams,
    growth: &GrowthLaw,
    grid: &Grid,
) -> TrajectoryRecord {
    let w = state.window;
    let center = grid.center_index();
    let mut rec = TrajectoryRecord {
        t: state.t,
        g: w.g,
        h: w.h,
        mass_u: 0.0,
        mass_v: 0.0,
        u_center: state.u.values()[center],
        v_center: state.v.values()[center],
        max_u: 0.0,
        max_v: 0.0,
        react_int: Some(0.0),
    };
    if let Some((lo, hi)) = active_range(grid, &w) {
        let u = state.u.values();
        let v = state.v.values();
        let mut mass_u = 0.0;
        let mut mass_v = 0.0;
        let mut react = 0.0;
        let mut max_u = 0.0f64;
        let mut max_v = 0.0f64;
        for i in lo..=hi {
            let wq = quad_weight(grid, &w, lo, hi, i);
            mass_u += wq * u[i];
            mass_v += wq * v[i];
            react += wq * (-p.a * u[i] + p.c / p.b * growth.rate(u[i]));
            max_u = max_u.max(u[i]);
            max_v = max_v.max(v[i]);
        }
        rec.mass_u = mass_u;
        rec.mass_v = mass_v;
        rec.react_int = Some(react);
        rec.max_u = max_u;
        rec.max_v = max_v;
    }
    rec
}

fn take_snapshot(state: &SimState, grid: &Grid) -> Snapshot {
    let mut snap = Snapshot {
        t: state.t,
        x: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
    };
    if let Some((lo, hi)) = active_range(grid, &state.window) {
        for i in lo..=hi {
            snap.x.push(grid.node(i));
            snap.u.push(state.u.values()[i]);
            snap.v.push(state.v.values()[i]);
        }
    }
    snap
}

/// Integrate the free-boundary system and record summaries.
///
/// Stops at `t_end`, when a front reaches the guard band (recorded as a
/// [`Truncation::GridEscape`], the normal spreading outcome), or when the
/// optional early-exit thresholds are conclusively met.
pub fn run_fb(
    init: &InitialData,
    p: &ModelParams,
    kernel: &Kernel,
    growth: &GrowthLaw,
    grid: &Grid,
    cfg: &SimConfig,
) -> Result<Trajectory, DynamicsError> {
    check_stability(p, cfg.dt)?;
    let support = kernel.support_radius();
    if p.h0 >= grid.half_length() - support {
        return Err(DynamicsError::GridExhausted {
            t: 0.0,
            g: -p.h0,
            h: p.h0,
        });
    }

    let window = ActiveWindow { g: -p.h0, h: p.h0 };
    let mut state = SimState {
        t: 0.0,
        window,
        u: Field::from_fn(grid, &window, |x| init.u0(x, p.h0)),
        v: Field::from_fn(grid, &window, |x| init.v0(x, p.h0)),
    };

    let kt = KernelTable::build(kernel, grid);
    let mut scratch = vec![0.0; grid.n()];
    let mut clamp_warnings = 0;

    let n_steps = (cfg.t_end / cfg.dt + 0.5).floor() as usize;
    let mut records = vec![summarize(&state, p, growth, grid)];
    let mut snap_times = cfg.snapshot_times.clone();
    snap_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut snapshots = Vec::new();
    let mut next_snap = 0usize;
    while next_snap < snap_times.len() && snap_times[next_snap] <= 0.5 * cfg.dt {
        snapshots.push(take_snapshot(&state, grid));
        next_snap += 1;
    }

    let mut truncation = None;
    let mut band_entered = false;
    let mut below_since: Option<f64> = None;

    for step in 1..=n_steps {
        match step_inplace(
            &mut state,
            p,
            growth,
            grid,
            kernel,
            &kt,
            support,
            cfg.dt,
            &mut scratch,
            &mut clamp_warnings,
        ) {
            Ok(()) => {}
            Err(DynamicsError::GridExhausted { .. }) => {
                truncation = Some(Truncation::GridEscape);
                break;
            }
            Err(e) => return Err(e),
        }

        while next_snap < snap_times.len() && snap_times[next_snap] <= state.t + 0.5 * cfg.dt {
            snapshots.push(take_snapshot(&state, grid));
            next_snap += 1;
        }

        if step.is_multiple_of(cfg.record_every) || step == n_steps {
            let rec = summarize(&state, p, growth, grid);
            records.push(rec);

            if let Some(exit) = &cfg.early_exit {
                if let Some((lo_band, hi_band)) = exit.center_band {
                    if rec.u_center >= lo_band && rec.u_center <= hi_band {
                        band_entered = true;
                    }
                }
                if rec.max_u < exit.eps_vanish && rec.max_v < exit.eps_vanish {
                    below_since.get_or_insert(rec.t);
                } else {
                    below_since = None;
                }
                let spreading = rec.h - rec.g >= exit.spread_length
                    && (exit.center_band.is_none() || band_entered);
                let vanishing = below_since.is_some_and(|t0| rec.t - t0 >= exit.hold_time);
                if spreading || vanishing {
                    truncation = Some(Truncation::EarlyVerdict);
                    break;
                }
            }
        }
    }

    if truncation.is_some() {
        let rec = summarize(&state, p, growth, grid);
        if records.last().map(|r| r.t) != Some(rec.t) {
            records.push(rec);
        }
    }

    Ok(Trajectory {
        records,
        snapshots,
        truncation,
        clamp_warnings,
        final_state: state,
    })
}

/// One explicit step of the fixed-interval system on `[l1, l2]`.
///
/// No boundary motion, and the fields are not forced to zero at the ends:
/// the fixed-domain problem carries no boundary condition.
pub fn step_fixed(
    w: &[f64],
    z: &[f64],
    iv: &IntervalGrid,
    p: &ModelParams,
    kernel: &Kernel,
    growth: &GrowthLaw,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>), DynamicsError> {
    check_stability(p, dt)?;
    assert_eq!(w.len(), iv.n);
    assert_eq!(z.len(), iv.n);
    let (table, reach) = interval_kernel_table(kernel, iv);
    let mut conv = vec![0.0; iv.n];
    convolve_on_interval(&mut conv, w, iv, &table, reach);
    let mut w_next = Vec::with_capacity(iv.n);
    let mut z_next = Vec::with_capacity(iv.n);
    for i in 0..iv.n {
        w_next.push(w[i] + dt * (p.d * conv[i] - p.d * w[i] - p.a * w[i] + p.c * z[i]));
        z_next.push(z[i] + dt * (-p.b * z[i] + growth.rate(w[i])));
    }
    Ok((w_next, z_next))
}

/// Classical fourth-order Runge-Kutta for the spatially homogeneous system
/// `u' = -a u + c v`, `v' = -b v + G(u)`.
pub fn solve_ode(
    p: &ModelParams,
    growth: &GrowthLaw,
    u0: f64,
    v0: f64,
    t_end: f64,
    dt: f64,
) -> Vec<(f64, f64, f64)> {
    assert!(dt > 0.0 && u0 >= 0.0 && v0 >= 0.0);
    let f = |u: f64, v: f64| (-p.a * u + p.c * v, -p.b * v + growth.rate(u));
    let n_steps = (t_end / dt + 0.5).floor() as usize;
    let mut out = Vec::with_capacity(n_steps + 1);
    let (mut u, mut v) = (u0, v0);
    out.push((0.0, u, v));
    for k in 1..=n_steps {
        let (k1u, k1v) = f(u, v);
        let (k2u, k2v) = f(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
        let (k3u, k3v) = f(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
        let (k4u, k4v) = f(u + dt * k3u, v + dt * k3v);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push((k as f64 * dt, u, v));
    }
    out
}

/// Residual of the mass-balance identity at every record:
///
/// ```text
/// ∫(u + (c/b) v) dx  -  [initial value]  +  (d/μ)(h - g)  -  (d/μ) 2h0
///   - ∫_0^t ∫ (-a u + (c/b) G(u)) dx ds
/// ```
///
/// with the time integral accumulated by the trapezoid rule over records.
/// Exact for the continuum; discretely it shrinks like `O(dt + dx²)`.
pub fn mass_balance_residual(
    traj: &Trajectory,
    p: &ModelParams,
) -> Result<Vec<f64>, DynamicsError> {
    let records = &traj.records;
    let first = records.first().ok_or(DynamicsError::MissingDiagnostics)?;
    let react0 = first.react_int.ok_or(DynamicsError::MissingDiagnostics)?;
    let m0 = first.mass_u + p.c / p.b * first.mass_v;
    let gap0 = first.h - first.g;

    let mut out = Vec::with_capacity(records.len());
    let mut integral = 0.0;
    let mut prev_t = first.t;
    let mut prev_react = react0;
    for rec in records {
        let react = rec.react_int.ok_or(DynamicsError::MissingDiagnostics)?;
        integral += 0.5 * (react + prev_react) * (rec.t - prev_t);
        prev_t = rec.t;
        prev_react = react;
        let m = rec.mass_u + p.c / p.b * rec.mass_v;
        out.push(m - m0 + p.d / p.mu * ((rec.h - rec.g) - gap0) - integral);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (Kernel, ModelParams, GrowthLaw, Grid) {
        (
            Kernel::CompactQuadratic { sigma: 1.0 },
            ModelParams {
                a: 1.0,
                b: 1.0,
                c: 1.0,
                d: 2.0,
                mu: 1.0,
                h0: 1.0,
            },
            GrowthLaw::Hill { alpha: 2.0 },
            Grid::new(20.0, 801).unwrap(),
        )
    }

    fn bump_init() -> InitialData {
        InitialData {
            shape: InitialShape::Bump,
            amp_u: 0.5,
            amp_v: 0.5,
        }
    }

    #[test]
    fn zero_state_only_advances_time() {
        let (k, p, g, grid) = setup();
        let w = ActiveWindow { g: -1.0, h: 1.0 };
        let state = SimState {
            t: 0.0,
            window: w,
            u: Field::zeros(&grid),
            v: Field::zeros(&grid),
        };
        let next = step_fb(&state, &p, &k, &g, &grid, 1e-3).unwrap();
        assert_eq!(next.window, w);
        assert_eq!(next.u, state.u);
        assert_eq!(next.v, state.v);
        assert!((next.t - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn decoupled_linear_decay() {
        // With d = 0 and c = 0 the u-equation is u' = -a u at every node.
        let (k, mut p, g, grid) = setup();
        p.d = 0.0;
        p.c = 0.0;
        let w = ActiveWindow { g: -1.0, h: 1.0 };
        let init = bump_init();
        let state = SimState {
            t: 0.0,
            window: w,
            u: Field::from_fn(&grid, &w, |x| init.u0(x, 1.0)),
            v: Field::zeros(&grid),
        };
        let dt = 1e-2;
        let next = step_fb(&state, &p, &k, &g, &grid, dt).unwrap();
        let (lo, hi) = active_range(&grid, &w).unwrap();
        for i in lo..=hi {
            let expect = state.u.values()[i] * (1.0 - p.a * dt);
            assert!((next.u.values()[i] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_center_matches_independent_quadrature() {
        // Oracle: evaluate the right-hand side at x = 0 with a test-local
        // Simpson rule on the analytic initial profile.
        let (k, p, g, _) = setup();
        let init = bump_init();
        let dt = 1e-3;

        fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
            let h = (b - a) / panels as f64;
            let mut s = f(a) + f(b);
            for i in 1..panels {
                let x = a + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        }

        let conv0 = simpson(|y| k.density(-y) * init.u0(y, p.h0), -1.0, 1.0, 4096);
        let u00 = init.u0(0.0, p.h0);
        let v00 = init.v0(0.0, p.h0);
        let expected = u00 + dt * (p.d * conv0 - p.d * u00 - p.a * u00 + p.c * v00);

        let mut errs = Vec::new();
        for n in [401, 801] {
            let grid = Grid::new(20.0, n).unwrap();
            let w = ActiveWindow { g: -p.h0, h: p.h0 };
            let state = SimState {
                t: 0.0,
                window: w,
                u: Field::from_fn(&grid, &w, |x| init.u0(x, p.h0)),
                v: Field::from_fn(&grid, &w, |x| init.v0(x, p.h0)),
            };
            let next = step_fb(&state, &p, &k, &g, &grid, dt).unwrap();
            errs.push((next.u.values()[grid.center_index()] - expected).abs());
        }
        assert!(errs[1] < errs[0], "errors {errs:?}");
        assert!(errs[1] < 1e-7, "errors {errs:?}");
    }

    #[test]
    fn run_with_zero_t_end_yields_single_record() {
        let (k, p, g, grid) = setup();
        let traj = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(1e-3, 0.0, 100),
        )
        .unwrap();
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.records[0].t, 0.0);
        assert!(traj.truncation.is_none());
    }

    #[test]
    fn fronts_monotone_and_positivity_on_short_run() {
        let (k, p, g, grid) = setup();
        let traj = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(1e-3, 5.0, 50),
        )
        .unwrap();
        for pair in traj.records.windows(2) {
            assert!(pair[1].h >= pair[0].h);
            assert!(pair[1].g <= pair[0].g);
            assert!(pair[1].t > pair[0].t);
        }
        // u(t, 0) > 0 along the run (u0 not identically zero).
        for rec in &traj.records {
            assert!(rec.u_center > 0.0);
        }
        assert_eq!(traj.clamp_warnings, 0);
    }

    #[test]
    fn grid_escape_is_reported_as_truncation() {
        let (k, p, g, _) = setup();
        let grid = Grid::new(4.0, 161).unwrap();
        let traj = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(1e-3, 500.0, 1000),
        )
        .unwrap();
        assert_eq!(traj.truncation, Some(Truncation::GridEscape));
        let last = traj.final_record();
        assert!(last.t < 500.0);
        // The recorded final state still honors the guard band.
        assert!(last.h <= 4.0 - 1.0 && last.g >= -4.0 + 1.0);
    }

    #[test]
    fn stability_violation_is_rejected() {
        let (k, p, g, grid) = setup();
        let err = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(0.3, 1.0, 10),
        );
        assert!(matches!(err, Err(DynamicsError::StabilityViolation { .. })));
    }

    #[test]
    fn truncated_gaussian_kernel_runs_clean() {
        // Unbounded-support families go through the truncation radius; the
        // scheme must keep its structure (positivity, monotone fronts,
        // conserved diagnostics) unchanged.
        let (_, p, g, _) = setup();
        let k = Kernel::Gaussian { sigma: 0.5 };
        let grid = Grid::new(20.0, 801).unwrap();
        let traj = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(1e-3, 3.0, 50),
        )
        .unwrap();
        assert_eq!(traj.clamp_warnings, 0);
        for pair in traj.records.windows(2) {
            assert!(pair[1].h >= pair[0].h && pair[1].g <= pair[0].g);
        }
        let res = mass_balance_residual(&traj, &p).unwrap();
        assert!(res.iter().all(|r| r.abs() < 5e-3), "{res:?}");
    }

    #[test]
    fn ode_equilibrium_is_stationary() {
        let (_, p, g, _) = setup();
        let (k1, k2) = crate::growth::equilibrium(&p, &g).unwrap();
        let path = solve_ode(&p, &g, k1, k2, 100.0, 0.01);
        let (_, u, v) = path.last().unwrap();
        assert!((u - k1).abs() < 1e-10);
        assert!((v - k2).abs() < 1e-10);
    }

    #[test]
    fn ode_converges_to_equilibrium_when_supercritical() {
        let (_, p, g, _) = setup();
        let path = solve_ode(&p, &g, 0.01, 0.01, 200.0, 0.01);
        let (_, u, v) = path.last().unwrap();
        assert!((u - 1.0).abs() < 1e-6, "u = {u}");
        assert!((v - 1.0).abs() < 1e-6, "v = {v}");
    }

    #[test]
    fn ode_decays_when_subcritical() {
        let (_, p, _, _) = setup();
        let g = GrowthLaw::Hill { alpha: 0.5 };
        // Reference: the same trajectory at an 8x finer step.
        let coarse = solve_ode(&p, &g, 0.7, 0.4, 80.0, 0.02);
        let fine = solve_ode(&p, &g, 0.7, 0.4, 80.0, 0.0025);
        let (_, uc, vc) = coarse.last().unwrap();
        let (_, uf, vf) = fine.last().unwrap();
        assert!(uc.abs() < 1e-8 && vc.abs() < 1e-8, "u = {uc}, v = {vc}");
        assert!((uc - uf).abs() < 1e-10 && (vc - vf).abs() < 1e-10);
    }

    #[test]
    fn mass_balance_zero_data_is_exact() {
        let (k, p, g, grid) = setup();
        let init = InitialData {
            shape: InitialShape::Bump,
            amp_u: 0.0,
            amp_v: 0.0,
        };
        let traj = run_fb(&init, &p, &k, &g, &grid, &SimConfig::new(1e-3, 1.0, 10)).unwrap();
        let res = mass_balance_residual(&traj, &p).unwrap();
        assert!(res.iter().all(|r| r.abs() == 0.0));
    }

    #[test]
    fn mass_balance_requires_diagnostics() {
        let (k, p, g, grid) = setup();
        let mut traj = run_fb(
            &bump_init(),
            &p,
            &k,
            &g,
            &grid,
            &SimConfig::new(1e-3, 0.5, 10),
        )
        .unwrap();
        traj.records[1].react_int = None;
        assert!(matches!(
            mass_balance_residual(&traj, &p),
            Err(DynamicsError::MissingDiagnostics)
        ));
    }

    #[test]
    fn mass_conservation_check_on_vanishing_run() {
        // Subcritical run: the mass identity bounds the front gap.
        let (k, mut p, _, grid) = setup();
        p.d = 2.0;
        let g = GrowthLaw::Hill { alpha: 0.8 };
        let init = bump_init();
        let traj = run_fb(&init, &p, &k, &g, &grid, &SimConfig::new(1e-3, 20.0, 100)).unwrap();
        let first = &traj.records[0];
        let bound = p.mu / p.d * (first.mass_u + p.c / p.b * first.mass_v) + 2.0 * p.h0;
        for rec in &traj.records {
            assert!(
                rec.h - rec.g <= bound * 1.01,
                "gap {} vs bound {bound}",
                rec.h - rec.g
            );
        }
    }

    #[test]
    fn fixed_step_keeps_boundary_values_free() {
        let (k, p, g, _) = setup();
        let iv = IntervalGrid::new(-2.0, 2.0, 201);
        let w: Vec<f64> = (0..201).map(|_| 0.3).collect();
        let z: Vec<f64> = (0..201).map(|_| 0.2).collect();
        let (w1, _) = step_fixed(&w, &z, &iv, &p, &k, &g, 0.05).unwrap();
        // No boundary condition: the endpoint evolves and stays positive.
        assert!(w1[0] > 0.0 && w1[0] != 0.3);

        // Zero fields are a fixed point.
        let zero = vec![0.0; 201];
        let (w0, z0) = step_fixed(&zero, &zero, &iv, &p, &k, &g, 0.05).unwrap();
        assert!(w0.iter().all(|&v| v == 0.0) && z0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fixed_march_monotone_from_sub_and_super_solutions() {
        let (k, p, g, _) = setup();
        // An interval with lambda_p > 0 (length beyond the critical one).
        let sp = crate::spectral::lambda_p(&k, &p, &g, -2.0, 2.0, 201).unwrap();
        assert!(sp.lambda_p > 0.0);
        let iv = sp.interval;
        let gp0 = g.slope_at_zero();
        let dt = 0.5 / (p.d + p.a).max(p.b);

        // Sub-solution pair: nondecreasing in t at every node.
        let eps = 1e-3;
        let mut w: Vec<f64> = sp.eigenfunction.iter().map(|&x| eps * x).collect();
        let mut z: Vec<f64> = w
            .iter()
            .map(|&x| (gp0 / p.b - sp.lambda_p / (4.0 * p.c)) * x)
            .collect();
        for _ in 0..200 {
            let (w1, z1) = step_fixed(&w, &z, &iv, &p, &k, &g, dt).unwrap();
            for i in 0..iv.n {
                assert!(w1[i] >= w[i] - 1e-12);
                assert!(z1[i] >= z[i] - 1e-12);
            }
            w = w1;
            z = z1;
        }

        // Super-solution pair (M1, M2): nonincreasing in t at every node.
        let (k1, _) = crate::growth::equilibrium(&p, &g).unwrap();
        let m1 = 2.0 * k1.max(1.0);
        let m2 = 0.5 * (g.rate(m1) / p.b + p.a / p.c * m1);
        let mut w = vec![m1; iv.n];
        let mut z = vec![m2; iv.n];
        for _ in 0..200 {
            let (w1, z1) = step_fixed(&w, &z, &iv, &p, &k, &g, dt).unwrap();
            for i in 0..iv.n {
                assert!(w1[i] <= w[i] + 1e-12);
                assert!(z1[i] <= z[i] + 1e-12);
            }
            w = w1;
            z = z1;
        }
    }

    #[test]
    fn mu_comparison_on_short_runs() {
        let (k, p, g, grid) = setup();
        let init = bump_init();
        let cfg = SimConfig::new(1e-3, 3.0, 30);
        let mut lo = p;
        lo.mu = 0.5;
        let mut hi = p;
        hi.mu = 1.0;
        let t_lo = run_fb(&init, &lo, &k, &g, &grid, &cfg).unwrap();
        let t_hi = run_fb(&init, &hi, &k, &g, &grid, &cfg).unwrap();
        assert_eq!(t_lo.records.len(), t_hi.records.len());
        for (a, b) in t_lo.records.iter().zip(&t_hi.records) {
            assert!(a.h <= b.h + 1e-9);
            assert!(a.g >= b.g - 1e-9);
            assert!(a.u_center <= b.u_center + 1e-6);
        }
    }

    #[test]
    fn a_priori_bounds_hold_along_runs() {
        let (k, p, g, grid) = setup();
        let init = bump_init();
        let scal = crate::growth::derived_scalars(&p, &g, init.sup_u0(), init.sup_v0());
        let traj = run_fb(&init, &p, &k, &g, &grid, &SimConfig::new(1e-3, 10.0, 100)).unwrap();
        for rec in &traj.records {
            assert!(rec.max_u <= scal.a_bound + 1e-6);
            assert!(rec.max_v <= scal.b_bound + 1e-6);
        }
    }

    #[test]
    fn refinement_improves_final_fields() {
        // Error against a fine reference drops by >= 1.8x when n doubles and
        // dt halves.
        let (k, p, g, _) = setup();
        let init = bump_init();
        let t_end = 1.0;
        let run = |n: usize, dt: f64| {
            let grid = Grid::new(10.0, n).unwrap();
            let traj =
                run_fb(&init, &p, &k, &g, &grid, &SimConfig::new(dt, t_end, 100000)).unwrap();
            (grid, traj.final_state)
        };
        let (gf, reference) = run(3201, 1.25e-4);
        let err = |n: usize, dt: f64| {
            let (gc, state) = run(n, dt);
            let stride = (gf.n() - 1) / (gc.n() - 1);
            let mut e = 0.0f64;
            for i in 0..gc.n() {
                e = e.max((state.u.values()[i] - reference.u.values()[i * stride]).abs());
            }
            e
        };
        let e1 = err(401, 1e-3);
        let e2 = err(801, 5e-4);
        assert!(e1 / e2 >= 1.8, "e1 = {e1}, e2 = {e2}");
    }
}
