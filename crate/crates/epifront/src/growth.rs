//! Infection-rate laws and model parameters.
//!
//! The infection rate `G` converts agent concentration into new human
//! infections. Both built-in families satisfy the structural assumptions the
//! theory needs: `G(0) = 0`, `G' > 0`, and `G(z)/z` strictly decreasing with
//! `lim G(z)/z < ab/c`.
//!
//! From `G` and the rate constants come the threshold quantities:
//! the reproduction number `R₀ = c G'(0) / (a b)`, the effective linear
//! growth rate `θ = c G'(0) / b - a = a (R₀ - 1)`, and, when `R₀ > 1`, the
//! endemic equilibrium `(K₁, K₂)` solving `G(K₁) = (ab/c) K₁`,
//! `K₂ = G(K₁)/b`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::ValidationReport;

/// Infection-rate law `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GrowthLaw {
    /// `G(z) = α z / (1 + z)`.
    Hill { alpha: f64 },
    /// `G(z) = α (1 - e^{-z})`.
    SaturatingExp { alpha: f64 },
}

impl GrowthLaw {
    pub fn rate(&self, z: f64) -> f64 {
        match *self {
            GrowthLaw::Hill { alpha } => alpha * z / (1.0 + z),
            GrowthLaw::SaturatingExp { alpha } => alpha * (1.0 - (-z).exp()),
        }
    }

    pub fn rate_prime(&self, z: f64) -> f64 {
        match *self {
            GrowthLaw::Hill { alpha } => alpha / ((1.0 + z) * (1.0 + z)),
            GrowthLaw::SaturatingExp { alpha } => alpha * (-z).exp(),
        }
    }

    /// `G'(0)`, which is `α` for both families.
    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            GrowthLaw::Hill { alpha } | GrowthLaw::SaturatingExp { alpha } => alpha,
        }
    }
}

/// The six scalar parameters of the model.
///
/// `a`: decay rate of the agents, `b`: recovery rate of infected humans,
/// `c`: agent production per infected human, `d`: dispersal rate,
/// `mu`: front-expansion coefficient, `h0`: half-length of the initial range.
/// All must be strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub mu: f64,
    pub h0: f64,
}

impl ModelParams {
    /// Check positivity of every field, naming the first offender.
    pub fn validate(&self) -> Result<(), GrowthError> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
            ("mu", self.mu),
            ("h0", self.h0),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(GrowthError::NonPositiveParam {
                    name: name.to_string(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("no positive equilibrium: R0 = {r0} <= 1")]
    NoPositiveEquilibrium { r0: f64 },
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParam { name: String, value: f64 },
}

/// Basic reproduction number `R₀ = c G'(0) / (a b)`.
pub fn r0(p: &ModelParams, g: &GrowthLaw) -> f64 {
    p.c * g.slope_at_zero() / (p.a * p.b)
}

/// Effective linear growth rate `θ = c G'(0) / b - a`; equals `a (R₀ - 1)`.
pub fn theta(p: &ModelParams, g: &GrowthLaw) -> f64 {
    p.c * g.slope_at_zero() / p.b - p.a
}

/// The endemic equilibrium `(K₁, K₂)`, defined when `R₀ > 1`.
///
/// `K₁` is the unique positive root of `G(z)/z = ab/c`, found by bisection
/// (uniqueness follows from `G(z)/z` strictly decreasing); `K₂ = G(K₁)/b`.
pub fn equilibrium(p: &ModelParams, g: &GrowthLaw) -> Result<(f64, f64), GrowthError> {
    let target = p.a * p.b / p.c;
    let slope0 = g.slope_at_zero();
    if slope0 <= target {
        return Err(GrowthError::NoPositiveEquilibrium { r0: r0(p, g) });
    }
    let ratio = |z: f64| g.rate(z) / z - target;

    let mut lo = 1e-14;
    // G(z)/z decreases to a limit below ab/c, so growing the upper bracket
    // geometrically always finds the sign change.
    let mut hi = (10.0 * p.c * slope0 * p.c / (p.a * p.b)).max(10.0);
    let mut grow = 0;
    while ratio(hi) >= 0.0 {
        hi *= 2.0;
        grow += 1;
        assert!(grow < 600, "equilibrium bracket failed to close");
    }

    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Resolve from above: K1 >= the true root keeps G(A) <= (ab/c) A exact
    // in floating point for A >= K1, which the a-priori bounds rely on.
    let k1 = hi;
    Ok((k1, g.rate(k1) / p.b))
}

/// The a-priori bounds `A` and `B` of the solution, together with the
/// threshold scalars. `sup_u0`, `sup_v0` are the sup-norms of the initial
/// profiles.
#[derive(Debug, Clone, Copy)]
pub struct DerivedScalars {
    pub r0: f64,
    pub theta: f64,
    /// `(K₁, K₂)` when `R₀ > 1`.
    pub equilibrium: Option<(f64, f64)>,
    pub a_bound: f64,
    pub b_bound: f64,
}

pub fn derived_scalars(p: &ModelParams, g: &GrowthLaw, sup_u0: f64, sup_v0: f64) -> DerivedScalars {
    let eq = equilibrium(p, g).ok();
    let mut a_bound = sup_u0.max(p.c / p.a * sup_v0);
    if let Some((k1, _)) = eq {
        a_bound = a_bound.max(k1);
    }
    let b_bound = sup_v0.max(g.rate(a_bound) / p.b);
    DerivedScalars {
        r0: r0(p, g),
        theta: theta(p, g),
        equilibrium: eq,
        a_bound,
        b_bound,
    }
}

/// Check the structural assumptions on `G` over `(0, z_max]` and report the
/// outcome per clause.
pub fn validate_growth(g: &GrowthLaw, p: &ModelParams, z_max: f64) -> ValidationReport {
    assert!(z_max > 0.0);
    validate_growth_law(|z| g.rate(z), |z| g.rate_prime(z), p, z_max)
}

pub(crate) fn validate_growth_law(
    rate: impl Fn(f64) -> f64,
    rate_prime: impl Fn(f64) -> f64,
    p: &ModelParams,
    z_max: f64,
) -> ValidationReport {
    let mut report = ValidationReport::new();
    let n = 1000;

    let g0 = rate(0.0);
    report.record("zero-at-origin", g0 == 0.0, format!("G(0) = {g0}"));

    let mut prime_ok = true;
    let mut ratio_ok = true;
    let mut prev_ratio = f64::INFINITY;
    for i in 1..=n {
        let z = z_max * i as f64 / n as f64;
        if rate_prime(z) <= 0.0 {
            prime_ok = false;
        }
        let ratio = rate(z) / z;
        if ratio > prev_ratio + 1e-14 {
            ratio_ok = false;
        }
        prev_ratio = ratio;
    }
    report.record(
        "derivative-positive",
        prime_ok,
        format!("G' sampled on (0, {z_max}]"),
    );
    report.record(
        "ratio-nonincreasing",
        ratio_ok,
        format!("G(z)/z sampled on (0, {z_max}]"),
    );

    let limit = rate(z_max) / z_max;
    let target = p.a * p.b / p.c;
    report.record(
        "ratio-limit",
        limit < target,
        format!("G(z_max)/z_max = {limit:.6} vs ab/c = {target:.6}"),
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, c: f64) -> ModelParams {
        ModelParams {
            a,
            b,
            c,
            d: 1.0,
            mu: 1.0,
            h0: 1.0,
        }
    }

    #[test]
    fn r0_direct_formula() {
        assert_eq!(
            r0(&params(1.0, 1.0, 1.0), &GrowthLaw::Hill { alpha: 2.0 }),
            2.0
        );
        assert_eq!(
            r0(&params(2.0, 1.0, 1.0), &GrowthLaw::Hill { alpha: 2.0 }),
            1.0
        );
        assert_eq!(
            r0(
                &params(1.0, 2.0, 3.0),
                &GrowthLaw::SaturatingExp { alpha: 4.0 }
            ),
            6.0
        );
    }

    #[test]
    fn theta_values_and_identity() {
        let g = GrowthLaw::Hill { alpha: 2.0 };
        assert_eq!(theta(&params(1.0, 1.0, 1.0), &g), 1.0);
        assert_eq!(
            theta(&params(1.0, 1.0, 1.0), &GrowthLaw::Hill { alpha: 1.0 }),
            0.0
        );
        assert_eq!(
            theta(&params(2.0, 1.0, 1.0), &GrowthLaw::Hill { alpha: 1.0 }),
            -1.0
        );

        // θ = a (R₀ - 1) to machine precision across a parameter grid.
        for a in [0.3, 1.0, 2.5] {
            for b in [0.5, 1.0, 4.0] {
                for alpha in [0.2, 1.0, 3.7] {
                    let p = params(a, b, 1.3);
                    let g = GrowthLaw::Hill { alpha };
                    let lhs = theta(&p, &g);
                    let rhs = a * (r0(&p, &g) - 1.0);
                    assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()));
                }
            }
        }
    }

    #[test]
    fn hill_equilibrium_matches_closed_form() {
        // For Hill, G(z)/z = α/(1+z), so K₁ = cα/(ab) - 1.
        let p = params(1.0, 1.0, 1.0);
        let (k1, k2) = equilibrium(&p, &GrowthLaw::Hill { alpha: 2.0 }).unwrap();
        assert!((k1 - 1.0).abs() < 1e-10);
        assert!((k2 - 1.0).abs() < 1e-10);

        let (k1, k2) = equilibrium(&p, &GrowthLaw::Hill { alpha: 3.0 }).unwrap();
        assert!((k1 - 2.0).abs() < 1e-10);
        assert!((k2 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_requires_supercritical_r0() {
        let p = params(1.0, 1.0, 1.0);
        let err = equilibrium(&p, &GrowthLaw::Hill { alpha: 1.0 });
        assert!(matches!(
            err,
            Err(GrowthError::NoPositiveEquilibrium { .. })
        ));
    }

    #[test]
    fn equilibrium_exists_iff_theta_positive() {
        for a in [0.5, 1.0, 2.0] {
            for alpha in [0.3, 0.9, 1.1, 2.0, 5.0] {
                for c in [0.05, 0.5, 1.0, 3.0] {
                    let p = params(a, 1.0, c);
                    let g = GrowthLaw::Hill { alpha };
                    let th = theta(&p, &g);
                    let eq = equilibrium(&p, &g);
                    assert_eq!(th > 0.0, eq.is_ok(), "a={a} alpha={alpha} c={c}");
                    if let Ok((k1, k2)) = eq {
                        assert!(k1 > 0.0 && k2 > 0.0);
                        // Root property: G(K₁) = (ab/c) K₁.
                        let res = g.rate(k1) - p.a * p.b / p.c * k1;
                        assert!(res.abs() < 1e-10 * (1.0 + k1));
                    }
                }
            }
        }
    }

    #[test]
    fn saturating_exp_equilibrium_satisfies_root_equation() {
        let p = params(1.0, 2.0, 3.0);
        let g = GrowthLaw::SaturatingExp { alpha: 4.0 };
        let (k1, k2) = equilibrium(&p, &g).unwrap();
        assert!((g.rate(k1) - p.a * p.b / p.c * k1).abs() < 1e-10);
        assert!((k2 - g.rate(k1) / p.b).abs() < 1e-15);
    }

    #[test]
    fn slope_at_zero_is_alpha() {
        assert_eq!(GrowthLaw::Hill { alpha: 2.5 }.rate_prime(0.0), 2.5);
        assert_eq!(GrowthLaw::SaturatingExp { alpha: 0.7 }.rate_prime(0.0), 0.7);
    }

    #[test]
    fn bounds_ordering() {
        // B ≤ (a/c) A across a parameter grid.
        for a in [0.5, 1.0, 2.0] {
            for c in [0.25, 1.0, 2.0] {
                for alpha in [0.5, 2.0, 6.0] {
                    for sup in [(0.5, 0.5), (2.0, 0.1), (0.01, 3.0)] {
                        let p = params(a, 1.0, c);
                        let g = GrowthLaw::Hill { alpha };
                        let s = derived_scalars(&p, &g, sup.0, sup.1);
                        assert!(
                            s.b_bound <= a / c * s.a_bound * (1.0 + 1e-12),
                            "a={a} c={c} alpha={alpha} sup={sup:?}: B={} (a/c)A={}",
                            s.b_bound,
                            a / c * s.a_bound
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn validate_growth_accepts_builtins() {
        let p = params(1.0, 1.0, 1.0);
        let rep = validate_growth(&GrowthLaw::Hill { alpha: 2.0 }, &p, 100.0);
        assert!(rep.all_passed(), "{rep}");
        // G(100)/100 = 2/101 ≈ 0.0198 < 1.
        assert!(rep.check("ratio-limit").unwrap().passed);

        let rep = validate_growth(&GrowthLaw::SaturatingExp { alpha: 3.0 }, &p, 50.0);
        assert!(rep.all_passed(), "{rep}");
    }

    #[test]
    fn quadratic_growth_fails_ratio_check() {
        let p = params(1.0, 1.0, 1.0);
        let rep = validate_growth_law(|z| z * z, |z| 2.0 * z, &p, 10.0);
        assert!(!rep.check("ratio-nonincreasing").unwrap().passed);
    }

    #[test]
    fn params_validation_names_offending_field() {
        let mut p = params(1.0, 1.0, 1.0);
        p.d = -2.0;
        match p.validate() {
            Err(GrowthError::NonPositiveParam { name, .. }) => assert_eq!(name, "d"),
            other => panic!("unexpected: {other:?}"),
        }
    }
}
