//! Spreading/vanishing classification, the critical expansion coefficient
//! `μ*`, and parameter sweeps.
//!
//! The dichotomy: every run either expands its range indefinitely with the
//! fields locking onto the endemic equilibrium, or keeps a bounded range
//! while both densities decay to zero. Vanishing is an infinite-time
//! statement, so it is certified heuristically — decay held below a
//! threshold for a configurable hold time plus a mass-balance check — and
//! `Undecided` is a first-class outcome, never coerced.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    run_fb, DynamicsError, EarlyExit, InitialData, SimConfig, Trajectory, Truncation,
};
use crate::grid::Grid;
use crate::growth::{self, equilibrium, GrowthLaw, ModelParams};
use crate::kernel::Kernel;
use crate::spectral::{l_star, SpectralError};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("both spreading and vanishing evidence fired; thresholds are misconfigured")]
    InconsistentEvidence,
    #[error("record stride {stride:.3} exceeds hold_time/4 = {allowed:.3}")]
    StrideTooCoarse { stride: f64, allowed: f64 },
    #[error("mu-star needs 0 < theta < d and 2 h0 < l*: {reason}")]
    RegimeError { reason: String },
    #[error("probe at mu = {mu} was still undecided at t_max = {t_max}")]
    UndecidedRun { mu: f64, t_max: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Spreading,
    Vanishing,
    Undecided,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Spreading => write!(f, "spreading"),
            Outcome::Vanishing => write!(f, "vanishing"),
            Outcome::Undecided => write!(f, "undecided"),
        }
    }
}

/// The observable facts a verdict rests on.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Evidence {
    pub final_t: f64,
    pub final_gap: f64,
    pub final_max_u: f64,
    pub final_max_v: f64,
    /// `|u(t_end, 0) - K1| / K1` when the equilibrium exists.
    pub u_center_rel_err: Option<f64>,
    pub grid_escape: bool,
    /// Center value entered `[0.9 K1, 1.1 K1]` at some record.
    pub band_entered: bool,
    /// How long the fields have stayed below `eps_vanish` at the end.
    pub decay_hold: f64,
    /// Front gap against the subcritical mass bound; only defined when
    /// `theta <= 0`, where the bound holds.
    pub mass_bound_ok: Option<bool>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub evidence: Evidence,
}

/// Thresholds for the classifier.
#[derive(Debug, Clone)]
pub struct ClassifyConfig {
    /// Front gap from which a run counts as spreading.
    pub l_spread: f64,
    /// Density threshold below which fields count as decayed.
    pub eps_vanish: f64,
    /// How long the decay must persist.
    pub hold_time: f64,
    /// Simulation cutoff for probe runs.
    pub t_max: f64,
}

impl ClassifyConfig {
    /// Defaults: `l_spread = 4 l*` when the critical length exists, else
    /// `40 h0`; `eps_vanish = 1e-5`; `hold_time = 10 / min(a, b)`.
    pub fn defaults(
        kernel: &Kernel,
        p: &ModelParams,
        g: &GrowthLaw,
        t_max: f64,
    ) -> Result<Self, SpectralError> {
        let l_spread = match l_star(kernel, p, g, 1e-6) {
            Ok(ls) => 4.0 * ls,
            Err(SpectralError::RegimeError { .. }) => 40.0 * p.h0,
            Err(e) => return Err(e),
        };
        Ok(ClassifyConfig {
            l_spread,
            eps_vanish: 1e-5,
            hold_time: 10.0 / p.a.min(p.b),
            t_max,
        })
    }

    pub fn early_exit(&self, k1: Option<f64>) -> EarlyExit {
        EarlyExit {
            spread_length: self.l_spread,
            center_band: k1.map(|k| (0.9 * k, 1.1 * k)),
            eps_vanish: self.eps_vanish,
            hold_time: self.hold_time,
        }
    }
}

/// Decide the outcome of a finished trajectory.
///
/// Spreading requires front growth past `l_spread` (or a grid escape) plus,
/// the equilibrium being the spreading attractor, the center value having
/// visited `[0.9 K1, 1.1 K1]`; it is only ever reported when `R0 > 1`.
/// Vanishing requires both fields below `eps_vanish` for `hold_time` and the
/// front gap to respect the mass-balance bound. Anything else is undecided.
pub fn classify(
    traj: &Trajectory,
    p: &ModelParams,
    g: &GrowthLaw,
    cfg: &ClassifyConfig,
) -> Result<Verdict, ClassifyError> {
    let records = &traj.records;
    let allowed = cfg.hold_time / 4.0;
    for pair in records.windows(2) {
        let stride = pair[1].t - pair[0].t;
        if stride > allowed * (1.0 + 1e-9) {
            return Err(ClassifyError::StrideTooCoarse { stride, allowed });
        }
    }

    let k1 = equilibrium(p, g).ok().map(|(k1, _)| k1);
    let last = traj.final_record();
    let first = &records[0];

    let band_entered = match k1 {
        Some(k1) => records
            .iter()
            .any(|r| r.u_center >= 0.9 * k1 && r.u_center <= 1.1 * k1),
        None => false,
    };
    let grid_escape = traj.truncation == Some(Truncation::GridEscape);
    let length_grown = last.h - last.g >= cfg.l_spread || grid_escape;
    let spreading = length_grown && k1.is_some() && band_entered;

    // Backwards scan: how long both fields have stayed below eps_vanish.
    let mut decay_start = None;
    for r in records.iter().rev() {
        if r.max_u < cfg.eps_vanish && r.max_v < cfg.eps_vanish {
            decay_start = Some(r.t);
        } else {
            break;
        }
    }
    let decay_hold = decay_start.map_or(0.0, |t0| last.t - t0);

    // Subcritical mass bound on the front gap: the total mass the initial
    // data can ever push across the fronts caps the range when theta <= 0.
    // No such closed bound exists for theta > 0, where decay persistence
    // alone certifies vanishing.
    let m0 = first.mass_u + p.c / p.b * first.mass_v;
    let theta = growth::theta(p, g);
    let mass_bound_ok = (theta <= 0.0).then(|| {
        let bound = p.mu / p.d * m0 + (first.h - first.g);
        last.h - last.g <= bound * 1.01
    });
    let vanishing = decay_hold >= cfg.hold_time && mass_bound_ok.unwrap_or(true);

    let evidence = Evidence {
        final_t: last.t,
        final_gap: last.h - last.g,
        final_max_u: last.max_u,
        final_max_v: last.max_v,
        u_center_rel_err: k1.map(|k| (last.u_center - k).abs() / k),
        grid_escape,
        band_entered,
        decay_hold,
        mass_bound_ok,
    };

    let outcome = match (spreading, vanishing) {
        (true, true) => return Err(ClassifyError::InconsistentEvidence),
        (true, false) => Outcome::Spreading,
        (false, true) => Outcome::Vanishing,
        (false, false) => Outcome::Undecided,
    };
    Ok(Verdict { outcome, evidence })
}

/// Result of the `μ*` bisection: a bracket with its endpoint verdicts.
#[derive(Debug, Clone)]
pub struct MuStarResult {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub verdict_lo: Outcome,
    pub verdict_hi: Outcome,
    /// The critical length, computed on the way in.
    pub l_star: f64,
}

impl MuStarResult {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.mu_lo + self.mu_hi)
    }

    pub fn width(&self) -> f64 {
        self.mu_hi - self.mu_lo
    }
}

/// Everything one classification probe needs besides `μ`.
#[derive(Debug, Clone)]
pub struct ProbeSetup<'a> {
    pub kernel: &'a Kernel,
    pub growth: &'a GrowthLaw,
    pub init: &'a InitialData,
    pub grid: &'a Grid,
    pub dt: f64,
}

fn probe(
    setup: &ProbeSetup,
    p: &ModelParams,
    cfg: &ClassifyConfig,
) -> Result<(Outcome, Verdict), ClassifyError> {
    let k1 = equilibrium(p, setup.growth).ok().map(|(k, _)| k);
    let record_every = ((cfg.hold_time / 8.0 / setup.dt).round() as usize).clamp(1, 100_000);
    let sim = SimConfig {
        dt: setup.dt,
        t_end: cfg.t_max,
        record_every,
        snapshot_times: Vec::new(),
        early_exit: Some(cfg.early_exit(k1)),
    };
    let traj = run_fb(setup.init, p, setup.kernel, setup.growth, setup.grid, &sim)?;
    let verdict = classify(&traj, p, setup.growth, cfg)?;
    Ok((verdict.outcome, verdict))
}

/// The critical expansion coefficient `μ*` by bisection on full runs.
///
/// Valid in the regime `0 < θ < d` with `2 h0 < l*`; monotonicity of the
/// solution in `μ` makes the verdict monotone, so a bracket whose endpoints
/// disagree pins `μ*`. An undecided probe is an error carrying the probe
/// `μ`, never silently retried.
pub fn mu_star(
    p_base: &ModelParams,
    setup: &ProbeSetup,
    cfg: &ClassifyConfig,
    tol: f64,
) -> Result<MuStarResult, ClassifyError> {
    let th = growth::theta(p_base, setup.growth);
    if !(th > 0.0 && th < p_base.d) {
        return Err(ClassifyError::RegimeError {
            reason: format!("theta = {th}, d = {}", p_base.d),
        });
    }
    let ls = l_star(setup.kernel, p_base, setup.growth, 1e-6)?;
    if 2.0 * p_base.h0 >= ls {
        return Err(ClassifyError::RegimeError {
            reason: format!("2 h0 = {} >= l* = {ls}", 2.0 * p_base.h0),
        });
    }

    let run_at = |mu: f64| -> Result<Outcome, ClassifyError> {
        let mut p = *p_base;
        p.mu = mu;
        let (outcome, _) = probe(setup, &p, cfg)?;
        if outcome == Outcome::Undecided {
            return Err(ClassifyError::UndecidedRun {
                mu,
                t_max: cfg.t_max,
            });
        }
        Ok(outcome)
    };

    let mut lo = 1e-3;
    let mut hi = 1.0;
    // The two bracket endpoints are independent runs; evaluate them in
    // parallel.
    let (r_lo, r_hi) = rayon::join(|| run_at(lo), || run_at(hi));
    let mut v_lo = r_lo?;
    let mut v_hi = r_hi?;
    let mut grow = 0;
    while v_lo == Outcome::Spreading {
        hi = lo;
        v_hi = Outcome::Spreading;
        lo /= 8.0;
        v_lo = run_at(lo)?;
        grow += 1;
        if grow > 40 {
            return Err(ClassifyError::RegimeError {
                reason: "no vanishing mu found".into(),
            });
        }
    }
    while v_hi == Outcome::Vanishing {
        lo = hi;
        v_lo = Outcome::Vanishing;
        hi *= 8.0;
        v_hi = run_at(hi)?;
        grow += 1;
        if grow > 40 {
            return Err(ClassifyError::RegimeError {
                reason: "no spreading mu found".into(),
            });
        }
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match run_at(mid)? {
            Outcome::Spreading => hi = mid,
            Outcome::Vanishing => lo = mid,
            Outcome::Undecided => unreachable!("undecided is an error in run_at"),
        }
    }
    Ok(MuStarResult {
        mu_lo: lo,
        mu_hi: hi,
        verdict_lo: v_lo,
        verdict_hi: v_hi,
        l_star: ls,
    })
}

/// What the sharp criteria predict for a parameter point, before running
/// anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prediction {
    Vanishing,
    Spreading,
    /// `1 < R0 < 1 + d/a` with `2 h0 < l*`: the outcome depends on `μ`
    /// through the threshold `μ*`.
    MuThreshold,
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Prediction::Vanishing => write!(f, "vanishing"),
            Prediction::Spreading => write!(f, "spreading"),
            Prediction::MuThreshold => write!(f, "mu-threshold"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepPoint {
    pub alpha: f64,
    pub h0: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub r0: f64,
    pub theta: f64,
    pub l_star: Option<f64>,
    pub predicted: Prediction,
    pub verdict: Result<Verdict, String>,
}

impl GrowthLaw {
    /// Same family with a replaced slope; sweeps vary `R0` through `α`.
    pub fn with_alpha(&self, alpha: f64) -> GrowthLaw {
        match self {
            GrowthLaw::Hill { .. } => GrowthLaw::Hill { alpha },
            GrowthLaw::SaturatingExp { .. } => GrowthLaw::SaturatingExp { alpha },
        }
    }
}

/// Classify every `(α, h0, μ)` triple of a sweep, in parallel.
///
/// Rows are independent full simulations; failures are recorded in the row
/// and the sweep continues. Results come back in input order regardless of
/// the worker count.
pub fn phase_sweep(
    points: &[SweepPoint],
    p_base: &ModelParams,
    setup: &ProbeSetup,
    t_max: f64,
    workers: usize,
) -> Vec<SweepRow> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| {
        points
            .par_iter()
            .map(|pt| sweep_row(*pt, p_base, setup, t_max))
            .collect()
    })
}

fn sweep_row(pt: SweepPoint, p_base: &ModelParams, setup: &ProbeSetup, t_max: f64) -> SweepRow {
    let growth = setup.growth.with_alpha(pt.alpha);
    let mut p = *p_base;
    p.h0 = pt.h0;
    p.mu = pt.mu;
    let r0 = growth::r0(&p, &growth);
    let theta = growth::theta(&p, &growth);
    let ls = if theta > 0.0 && theta < p.d {
        l_star(setup.kernel, &p, &growth, 1e-6).ok()
    } else {
        None
    };
    // Spreading is unconditional either through strong growth (theta >= d)
    // or through a wide-enough initial range (2 h0 >= l*).
    let predicted = if r0 <= 1.0 {
        Prediction::Vanishing
    } else if theta >= p.d || ls.is_some_and(|l| 2.0 * p.h0 >= l) {
        Prediction::Spreading
    } else {
        Prediction::MuThreshold
    };

    let row_setup = ProbeSetup {
        growth: &growth,
        ..*setup
    };
    let verdict = (|| -> Result<Verdict, ClassifyError> {
        let mut cfg = ClassifyConfig::defaults(setup.kernel, &p, &growth, t_max)?;
        cfg.l_spread = match ls {
            Some(l) => 4.0 * l,
            None => 40.0 * p.h0,
        };
        let (_, verdict) = probe(&row_setup, &p, &cfg)?;
        Ok(verdict)
    })()
    .map_err(|e| e.to_string());

    SweepRow {
        point: pt,
        r0,
        theta,
        l_star: ls,
        predicted,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InitialShape;

    fn setup() -> (Kernel, ModelParams, GrowthLaw, Grid, InitialData) {
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
            Grid::new(30.0, 1201).unwrap(),
            InitialData {
                shape: InitialShape::Bump,
                amp_u: 0.5,
                amp_v: 0.5,
            },
        )
    }

    #[test]
    fn all_zero_trajectory_is_vanishing() {
        let (k, p, g, grid, _) = setup();
        let init = InitialData {
            shape: InitialShape::Bump,
            amp_u: 0.0,
            amp_v: 0.0,
        };
        let cfg = ClassifyConfig {
            l_spread: 40.0,
            eps_vanish: 1e-5,
            hold_time: 10.0,
            t_max: 20.0,
        };
        let sim = SimConfig::new(1e-2, 20.0, 100);
        let traj = run_fb(&init, &p, &k, &g, &grid, &sim).unwrap();
        let verdict = classify(&traj, &p, &g, &cfg).unwrap();
        assert_eq!(verdict.outcome, Outcome::Vanishing);
    }

    #[test]
    fn grid_escape_with_center_near_k1_is_spreading() {
        let (k, p, g, _, init) = setup();
        let grid = Grid::new(6.0, 241).unwrap();
        let cfg = ClassifyConfig {
            l_spread: 1000.0, // unreachable; the escape is the evidence
            eps_vanish: 1e-5,
            hold_time: 10.0,
            t_max: 200.0,
        };
        let sim = SimConfig::new(1e-3, 200.0, 500);
        let traj = run_fb(&init, &p, &k, &g, &grid, &sim).unwrap();
        assert_eq!(traj.truncation, Some(Truncation::GridEscape));
        let verdict = classify(&traj, &p, &g, &cfg).unwrap();
        assert_eq!(verdict.outcome, Outcome::Spreading);
        assert!(verdict.evidence.grid_escape);
    }

    #[test]
    fn subcritical_run_vanishes_within_mass_bound() {
        let (k, p, _, grid, init) = setup();
        let g = GrowthLaw::Hill { alpha: 0.8 };
        let cfg = ClassifyConfig {
            l_spread: 40.0,
            eps_vanish: 1e-5,
            hold_time: 10.0,
            t_max: 150.0,
        };
        let sim = SimConfig::new(1e-3, 150.0, 500);
        let traj = run_fb(&init, &p, &k, &g, &grid, &sim).unwrap();
        let verdict = classify(&traj, &p, &g, &cfg).unwrap();
        assert_eq!(verdict.outcome, Outcome::Vanishing);
        assert_eq!(verdict.evidence.mass_bound_ok, Some(true));
        // Subcritical mass bound: gap below (mu/d) m0 + 2 h0.
        let first = &traj.records[0];
        let bound = p.mu / p.d * (first.mass_u + p.c / p.b * first.mass_v) + 2.0 * p.h0;
        assert!(verdict.evidence.final_gap <= bound * 1.01);
    }

    #[test]
    fn coarse_stride_is_rejected() {
        let (k, p, g, grid, init) = setup();
        let cfg = ClassifyConfig {
            l_spread: 40.0,
            eps_vanish: 1e-5,
            hold_time: 1.0,
            t_max: 10.0,
        };
        // Records every 1.0 time units > hold_time/4.
        let sim = SimConfig::new(1e-2, 10.0, 100);
        let traj = run_fb(&init, &p, &k, &g, &grid, &sim).unwrap();
        assert!(matches!(
            classify(&traj, &p, &g, &cfg),
            Err(ClassifyError::StrideTooCoarse { .. })
        ));
    }

    #[test]
    fn sweep_line_verdicts_monotone_in_mu() {
        // Along a mu-only sweep line in the threshold regime, vanishing
        // verdicts form an initial segment and spreading a final one; no
        // spreading row ever appears at R0 <= 1; spreading rows carry a
        // center value within 10% of K1.
        let (k, mut p, g, grid, init) = setup();
        p.h0 = 0.25 * crate::spectral::l_star(&k, &p, &g, 1e-6).unwrap();
        let setup_ref = ProbeSetup {
            kernel: &k,
            growth: &g,
            init: &init,
            grid: &grid,
            dt: 1e-3,
        };
        let points: Vec<SweepPoint> = [0.2, 0.6, 1.2, 2.4]
            .iter()
            .map(|&mu| SweepPoint {
                alpha: 2.0,
                h0: p.h0,
                mu,
            })
            .chain(std::iter::once(SweepPoint {
                alpha: 0.8,
                h0: p.h0,
                mu: 1.0,
            }))
            .collect();
        let rows = phase_sweep(&points, &p, &setup_ref, 2000.0, 2);

        let mu_line: Vec<Outcome> = rows[..4]
            .iter()
            .map(|r| r.verdict.as_ref().unwrap().outcome)
            .collect();
        let first_spread = mu_line
            .iter()
            .position(|&o| o == Outcome::Spreading)
            .expect("some mu spreads");
        assert!(first_spread > 0, "smallest mu must vanish");
        for (i, o) in mu_line.iter().enumerate() {
            let expect = if i < first_spread {
                Outcome::Vanishing
            } else {
                Outcome::Spreading
            };
            assert_eq!(*o, expect, "mu line {mu_line:?}");
        }
        for row in &rows[..4] {
            let v = row.verdict.as_ref().unwrap();
            if v.outcome == Outcome::Spreading {
                assert!(v.evidence.u_center_rel_err.unwrap() < 0.1);
            }
        }

        // The subcritical row: predicted vanishing, never spreading.
        let sub = &rows[4];
        assert_eq!(sub.predicted, Prediction::Vanishing);
        assert_eq!(sub.verdict.as_ref().unwrap().outcome, Outcome::Vanishing);
    }

    #[test]
    fn mu_star_rejects_wrong_regime() {
        let (k, p, g, grid, init) = setup();
        let setup_ref = ProbeSetup {
            kernel: &k,
            growth: &g,
            init: &init,
            grid: &grid,
            dt: 1e-3,
        };
        let cfg = ClassifyConfig {
            l_spread: 5.0,
            eps_vanish: 1e-5,
            hold_time: 10.0,
            t_max: 100.0,
        };
        // 2 h0 = 2 exceeds l* (about 1.2 here).
        assert!(matches!(
            mu_star(&p, &setup_ref, &cfg, 0.05),
            Err(ClassifyError::RegimeError { .. })
        ));

        // theta >= d: no critical length at all.
        let mut p2 = p;
        p2.d = 0.5;
        assert!(matches!(
            mu_star(&p2, &setup_ref, &cfg, 0.05),
            Err(ClassifyError::RegimeError { .. })
        ));
    }
}
