//! Principal eigenvalues of the nonlocal operator, the critical length, and
//! positive steady states on fixed intervals.
//!
//! The operator on an interval `Ω = (l1, l2)` is
//!
//! ```text
//! (L φ)(x) = d ∫_Ω J(x - y) φ(y) dy - d φ(x) + θ φ(x),
//! ```
//!
//! whose principal eigenvalue `λ_p` decides persistence on `Ω`: it increases
//! strictly with the interval length, from `θ - d` (length → 0) to `θ`
//! (length → ∞). When `0 < θ < d` it crosses zero at a unique critical
//! length `l*`.
//!
//! Discretely, trapezoid weights `w_j` turn `L` into a banded matrix; adding
//! the shift `(d - θ + 1) I` makes it entrywise nonnegative with positive
//! diagonal, so power iteration converges to the Perron pair and cannot pick
//! a non-principal eigenvalue.

use thiserror::Error;

use crate::growth::{self, equilibrium, GrowthLaw, ModelParams};
use crate::interval::{convolve_on_interval, interval_kernel_table, IntervalGrid};
use crate::kernel::Kernel;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("power iteration did not converge after {iterations} iterations (last increment {increment:.3e})")]
    NoConvergence { iterations: usize, increment: f64 },
    #[error("interval must satisfy l1 < l2 with at least 16 nodes, got [{l1}, {l2}] with n = {n}")]
    BadInterval { l1: f64, l2: f64, n: usize },
    #[error("critical quantities need the regime 0 < theta < d, got theta = {theta}, d = {d}")]
    RegimeError { theta: f64, d: f64 },
    #[error("sub- and super-solution marches disagree by {gap:.3e} (allowed {allowed:.3e})")]
    SandwichMismatch { gap: f64, allowed: f64 },
}

/// Principal eigenvalue with its positive eigenfunction, normalized to
/// sup-norm one.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda_p: f64,
    pub eigenfunction: Vec<f64>,
    pub interval: IntervalGrid,
    pub iterations: usize,
}

/// Apply `d (J *_Ω ·) + diag I` at every node of the interval grid.
fn apply_operator(
    out: &mut [f64],
    phi: &[f64],
    iv: &IntervalGrid,
    table: &[f64],
    reach: usize,
    d: f64,
    diag: f64,
) {
    convolve_on_interval(out, phi, iv, table, reach);
    for (o, p) in out.iter_mut().zip(phi) {
        *o = d * *o + diag * p;
    }
}

const MAX_POWER_ITERATIONS: usize = 100_000;

/// Principal eigenvalue of `L_{(l1,l2)} + θ` on an `n`-node grid.
///
/// Power iteration on the Perron-shifted matrix, stopped when the
/// Rayleigh-quotient increment falls below `1e-12`.
pub fn lambda_p(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    l1: f64,
    l2: f64,
    n: usize,
) -> Result<SpectralResult, SpectralError> {
    if !(l1 < l2) || n < 16 {
        return Err(SpectralError::BadInterval { l1, l2, n });
    }
    let th = growth::theta(p, g);
    let iv = IntervalGrid::new(l1, l2, n);
    let (table, reach) = interval_kernel_table(kernel, &iv);
    let shift = p.d - th + 1.0;
    let diag = -p.d + th + shift; // = 1, kept symbolic for clarity

    // Warm start: the principal eigenfunction is close to a half-cosine arch
    // widened by roughly one support radius; strictly positive on [l1, l2].
    let mid = 0.5 * (l1 + l2);
    let span = iv.len() + kernel.support_radius();
    let mut phi: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::PI * (iv.node(i) - mid) / span).cos())
        .collect();
    let mut next = vec![0.0; n];

    // Stop once the Rayleigh-quotient increment settles below 1e-12; keep
    // polishing the eigenvector afterwards until the eigenpair residual is
    // tight or the iteration budget runs out (the Rayleigh quotient
    // converges quadratically in the eigenvector error, so it settles long
    // before the vector does).
    let mut rq_prev = f64::NAN;
    let mut increment = f64::INFINITY;
    let mut settled = false;
    for iter in 1..=MAX_POWER_ITERATIONS {
        apply_operator(&mut next, &phi, &iv, &table, reach, p.d, diag);
        // Rayleigh quotient in the weight-induced inner product, where the
        // operator is symmetric.
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let w = iv.weight(i);
            num += w * phi[i] * next[i];
            den += w * phi[i] * phi[i];
        }
        let rq = num / den;
        let mut residual = 0.0f64;
        for i in 0..n {
            residual = residual.max((next[i] - rq * phi[i]).abs());
        }
        let sup = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in next.iter_mut() {
            *v /= sup;
        }
        std::mem::swap(&mut phi, &mut next);
        increment = (rq - rq_prev).abs();
        rq_prev = rq;
        if increment < 1e-12 {
            settled = true;
        }
        if settled && (residual < 1e-8 || iter == MAX_POWER_ITERATIONS) {
            return Ok(SpectralResult {
                lambda_p: rq - shift,
                eigenfunction: phi,
                interval: iv,
                iterations: iter,
            });
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: MAX_POWER_ITERATIONS,
        increment,
    })
}

/// Grid-resolution policy for eigen computations driven by interval length:
/// `nodes_per_support` nodes per support radius, clamped to a sane range.
pub fn eigen_nodes_for(kernel: &Kernel, len: f64, nodes_per_support: usize) -> usize {
    let dx_target = kernel.support_radius() / nodes_per_support as f64;
    let n = (len / dx_target).ceil() as usize + 1;
    n.clamp(131, 6001)
}

/// The critical length `l*`: the unique interval length with
/// `λ_p(L + θ) = 0`, defined in the regime `0 < θ < d`.
///
/// Bisection over the length, exploiting strict monotonicity of `λ_p`.
pub fn l_star(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    tol: f64,
) -> Result<f64, SpectralError> {
    let (lo, hi) = l_star_bracket(kernel, p, g, tol)?;
    Ok(0.5 * (lo + hi))
}

/// The final bisection bracket around `l*`, of width at most `tol`.
pub fn l_star_bracket(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    tol: f64,
) -> Result<(f64, f64), SpectralError> {
    l_star_bracket_with_resolution(kernel, p, g, tol, 100)
}

/// As [`l_star`], with an explicit eigen-grid density (nodes per support
/// radius) so convergence under grid refinement can be probed.
pub fn l_star_with_resolution(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    tol: f64,
    nodes_per_support: usize,
) -> Result<f64, SpectralError> {
    let (lo, hi) = l_star_bracket_with_resolution(kernel, p, g, tol, nodes_per_support)?;
    Ok(0.5 * (lo + hi))
}

fn l_star_bracket_with_resolution(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    tol: f64,
    nodes_per_support: usize,
) -> Result<(f64, f64), SpectralError> {
    let th = growth::theta(p, g);
    if !(th > 0.0 && th < p.d) {
        return Err(SpectralError::RegimeError { theta: th, d: p.d });
    }
    let eval = |len: f64| -> Result<f64, SpectralError> {
        let n = eigen_nodes_for(kernel, len, nodes_per_support);
        Ok(lambda_p(kernel, p, g, -0.5 * len, 0.5 * len, n)?.lambda_p)
    };

    let support = kernel.support_radius();
    let mut lo = support / 256.0;
    while eval(lo)? >= 0.0 {
        lo /= 4.0;
    }
    let mut hi = 2.0 * support;
    let mut grow = 0;
    while eval(hi)? <= 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(SpectralError::RegimeError { theta: th, d: p.d });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if eval(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// The steady state `(W, Z)` of the fixed-interval system.
///
/// `W` solves `d ∫ J(x-y) W(y) dy - d W - a W + c G(W)/b = 0` and
/// `Z = G(W)/b` holds nodewise.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub interval: IntervalGrid,
}

/// Unique positive steady state when `λ_p > 0`, identically zero otherwise.
///
/// Time-marches the fixed-domain system from an eigenfunction-based
/// sub-solution and a constant super-solution; the two limits must agree
/// within `10 tol`, which certifies uniqueness numerically.
pub fn steady_state(
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    l1: f64,
    l2: f64,
    n: usize,
    tol: f64,
) -> Result<SteadyState, SpectralError> {
    let sp = lambda_p(kernel, p, g, l1, l2, n)?;
    let iv = sp.interval;
    if sp.lambda_p <= 0.0 {
        return Ok(SteadyState {
            w: vec![0.0; n],
            z: vec![0.0; n],
            interval: iv,
        });
    }

    let (k1, _) = equilibrium(p, g).expect("lambda_p > 0 implies R0 > 1");
    let gp0 = g.slope_at_zero();
    let z_factor = gp0 / p.b - sp.lambda_p / (4.0 * p.c);

    // Sub-solution (ε φ, (G'(0)/b - λ_p/(4c)) ε φ); shrink ε until the
    // lower-solution inequality for the z-equation holds at every node.
    let mut eps = 1e-3 * k1.min(1.0);
    let mut tries = 0;
    let eps = loop {
        let ok = sp.eigenfunction.iter().all(|&phi| {
            let w = eps * phi;
            -p.b * z_factor * w + g.rate(w) >= -1e-13
        });
        if ok {
            break eps;
        }
        eps *= 0.5;
        tries += 1;
        if tries > 200 {
            return Err(SpectralError::NoConvergence {
                iterations: tries,
                increment: eps,
            });
        }
    };
    let lower_w: Vec<f64> = sp.eigenfunction.iter().map(|&phi| eps * phi).collect();
    let lower_z: Vec<f64> = lower_w.iter().map(|&w| z_factor * w).collect();

    // Super-solution (M₁, M₂) with G(M₁) < b M₂ < (ab/c) M₁.
    let m1 = 2.0 * k1.max(1.0);
    let m2 = 0.5 * (g.rate(m1) / p.b + p.a / p.c * m1);
    let upper_w = vec![m1; n];
    let upper_z = vec![m2; n];

    let (w_lo, z_lo) = march_to_fixed_point(lower_w, lower_z, &iv, kernel, p, g, tol)?;
    let (w_hi, z_hi) = march_to_fixed_point(upper_w, upper_z, &iv, kernel, p, g, tol)?;

    let mut gap = 0.0f64;
    for i in 0..n {
        gap = gap
            .max((w_hi[i] - w_lo[i]).abs())
            .max((z_hi[i] - z_lo[i]).abs());
    }
    if gap > 10.0 * tol {
        return Err(SpectralError::SandwichMismatch {
            gap,
            allowed: 10.0 * tol,
        });
    }
    Ok(SteadyState {
        w: w_lo,
        z: z_lo,
        interval: iv,
    })
}

/// Stability-limited explicit march, stopped when the estimated time
/// derivative (per-step change over `dt`) falls below a twentieth of `tol`;
/// that keeps both the fixed-point residual and the distance between the
/// two one-sided marches within the `10 tol` budget.
fn march_to_fixed_point(
    mut w: Vec<f64>,
    mut z: Vec<f64>,
    iv: &IntervalGrid,
    kernel: &Kernel,
    p: &ModelParams,
    g: &GrowthLaw,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
    let dt = 0.5 / (p.d + p.a).max(p.b);
    let threshold = 0.05 * tol * dt;
    let (table, reach) = interval_kernel_table(kernel, iv);
    let n = iv.n;
    let mut conv = vec![0.0; n];

    for iter in 0..2_000_000usize {
        apply_operator(&mut conv, &w, iv, &table, reach, 1.0, 0.0);
        let mut delta = 0.0f64;
        for i in 0..n {
            let dw = dt * (p.d * conv[i] - p.d * w[i] - p.a * w[i] + p.c * z[i]);
            let dz = dt * (-p.b * z[i] + g.rate(w[i]));
            w[i] += dw;
            z[i] += dz;
            delta = delta.max(dw.abs()).max(dz.abs());
        }
        if delta < threshold {
            return Ok((w, z));
        }
        if iter == 1_999_999 {
            return Err(SpectralError::NoConvergence {
                iterations: iter,
                increment: delta,
            });
        }
    }
    unreachable!()
}
