//! Dispersal kernels.
//!
//! A kernel `J` is the density through which infectious agents redistribute:
//! the dispersal operator is `d (J * u - u)`. Every built-in family is
//! continuous, bounded, symmetric, nonnegative, has `J(0) > 0` and unit mass.
//!
//! Besides the density itself, the moving-front laws need the tail mass
//! `T(r) = ∫_r^∞ J(s) ds`: the fraction of a jump that lands beyond distance
//! `r`. Families are a closed enum so `T` can be evaluated in closed form;
//! quadrature error in the tail would feed straight into the front speeds.

use serde::{Deserialize, Serialize};

use crate::report::ValidationReport;

/// Fraction of kernel mass allowed to be lost when an unbounded-support
/// family is truncated for convolution assembly.
pub const TRUNCATION_MASS: f64 = 1e-10;

/// A symmetric dispersal density with its tail-mass function.
///
/// `sigma` is the length scale of each family; for `CompactQuadratic` it is
/// also the support radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Kernel {
    Gaussian {
        sigma: f64,
    },
    Laplace {
        sigma: f64,
    },
    /// `J(x) = 3/(4σ) (1 - (x/σ)²)` on `[-σ, σ]` (Epanechnikov shape).
    CompactQuadratic {
        sigma: f64,
    },
}

impl Kernel {
    pub fn sigma(&self) -> f64 {
        match *self {
            Kernel::Gaussian { sigma }
            | Kernel::Laplace { sigma }
            | Kernel::CompactQuadratic { sigma } => sigma,
        }
    }

    /// Density `J(x)`. Exactly zero outside the support of compact families.
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            Kernel::Laplace { sigma } => (-x.abs() / sigma).exp() / (2.0 * sigma),
            Kernel::CompactQuadratic { sigma } => {
                let z = x / sigma;
                if z.abs() <= 1.0 {
                    0.75 * (1.0 - z * z) / sigma
                } else {
                    0.0
                }
            }
        }
    }

    /// Tail mass `T(r) = ∫_r^∞ J(s) ds`, in closed form for every family.
    ///
    /// `T(0) = 1/2` by symmetry and `T(-r) = 1 - T(r)`.
    pub fn tail(&self, r: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma } => 0.5 * libm::erfc(r / (sigma * std::f64::consts::SQRT_2)),
            Kernel::Laplace { sigma } => {
                if r >= 0.0 {
                    0.5 * (-r / sigma).exp()
                } else {
                    1.0 - 0.5 * (r / sigma).exp()
                }
            }
            Kernel::CompactQuadratic { sigma } => {
                let z = r / sigma;
                if z >= 1.0 {
                    0.0
                } else if z <= -1.0 {
                    1.0
                } else {
                    0.5 - 0.75 * z + 0.25 * z * z * z
                }
            }
        }
    }

    /// Radius beyond which the kernel is treated as zero.
    ///
    /// Exact for `CompactQuadratic`; for unbounded families it is the radius
    /// containing all but [`TRUNCATION_MASS`] of the total mass.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Kernel::CompactQuadratic { sigma } => sigma,
            Kernel::Laplace { sigma } => sigma * (1.0 / TRUNCATION_MASS).ln(),
            Kernel::Gaussian { sigma } => {
                // Smallest r with 2 T(r) <= TRUNCATION_MASS, by bisection.
                let target = 0.5 * TRUNCATION_MASS;
                let mut lo = 0.0;
                let mut hi = 10.0 * sigma;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// Check every kernel assumption on `samples` points and report the
    /// outcome per clause. `samples` must be at least 16.
    pub fn validate(&self, samples: usize) -> ValidationReport {
        assert!(samples >= 16, "kernel validation needs at least 16 samples");
        let radius = self.support_radius();
        validate_density(|x| self.density(x), |r| self.tail(r), radius, samples)
    }
}

/// Validate an arbitrary density/tail pair against the kernel assumptions.
///
/// Internal seam so tests can feed deliberately broken densities through the
/// same checks the public [`Kernel::validate`] uses.
pub(crate) fn validate_density(
    density: impl Fn(f64) -> f64,
    tail: impl Fn(f64) -> f64,
    radius: f64,
    samples: usize,
) -> ValidationReport {
    let mut report = ValidationReport::new();

    let j0 = density(0.0);
    report.record("origin-positive", j0 > 0.0, format!("J(0) = {j0}"));

    let mut sym_worst = 0.0f64;
    let mut neg_worst = 0.0f64;
    for i in 0..samples {
        let x = radius * (i as f64 + 0.5) / samples as f64;
        let err = (density(x) - density(-x)).abs();
        sym_worst = sym_worst.max(err);
        neg_worst = neg_worst.min(density(x)).min(density(-x));
    }
    report.record(
        "symmetric",
        sym_worst <= 1e-12,
        format!("max |J(x) - J(-x)| = {sym_worst:.3e}"),
    );
    report.record(
        "nonnegative",
        neg_worst >= 0.0,
        format!("min sampled density = {neg_worst:.3e}"),
    );

    let mass = adaptive_simpson(&density, -radius, radius, 1e-12, 60);
    report.record(
        "unit-mass",
        (mass - 1.0).abs() <= 1e-8 + TRUNCATION_MASS,
        format!("quadrature mass over [-R, R] = {mass:.12}"),
    );

    let t0 = tail(0.0);
    report.record(
        "tail-half-at-zero",
        (t0 - 0.5).abs() <= 1e-12,
        format!("T(0) = {t0}"),
    );

    let mut monotone = true;
    let mut prev = tail(0.0);
    for i in 1..=samples {
        let r = 1.5 * radius * i as f64 / samples as f64;
        let t = tail(r);
        if t > prev + 1e-14 {
            monotone = false;
        }
        prev = t;
    }
    report.record(
        "tail-nonincreasing",
        monotone,
        format!("sampled on [0, {:.3}]", 1.5 * radius),
    );

    let t_far = tail(1.5 * radius);
    report.record(
        "tail-decays",
        t_far <= 1e-9,
        format!("T(1.5 R) = {t_far:.3e}"),
    );

    report
}

/// Adaptive Simpson quadrature; also serves as the fallback for tail masses
/// of families without a closed form (none of the built-ins need it).
pub(crate) fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_density_outside_support_is_zero() {
        let k = Kernel::CompactQuadratic { sigma: 1.0 };
        assert_eq!(k.density(2.0), 0.0);
        assert_eq!(k.density(-1.0000001), 0.0);
    }

    #[test]
    fn density_positive_at_origin_for_all_families() {
        for k in [
            Kernel::Gaussian { sigma: 1.0 },
            Kernel::Laplace { sigma: 0.7 },
            Kernel::CompactQuadratic { sigma: 2.0 },
        ] {
            assert!(k.density(0.0) > 0.0);
        }
    }

    #[test]
    fn gaussian_density_is_symmetric() {
        let k = Kernel::Gaussian { sigma: 1.0 };
        assert_eq!(k.density(1.0), k.density(-1.0));
    }

    #[test]
    fn tail_at_zero_is_half() {
        for k in [
            Kernel::Gaussian { sigma: 1.3 },
            Kernel::Laplace { sigma: 1.0 },
            Kernel::CompactQuadratic { sigma: 1.0 },
        ] {
            assert!((k.tail(0.0) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn compact_tail_at_support_edge() {
        let k = Kernel::CompactQuadratic { sigma: 1.0 };
        assert_eq!(k.tail(1.0), 0.0);
        assert_eq!(k.tail(-1.0), 1.0);
    }

    #[test]
    fn compact_tail_half_sigma_matches_antiderivative() {
        // ∫_{1/2}^{1} (3/4)(1 - s²) ds = [ (3/4)(s - s³/3) ]_{1/2}^{1}
        //                              = 1/2 - 11/32 = 5/32 = 0.15625
        let k = Kernel::CompactQuadratic { sigma: 1.0 };
        assert!((k.tail(0.5) - 0.15625).abs() < 1e-15);
    }

    #[test]
    fn tail_matches_adaptive_quadrature_of_density() {
        for k in [
            Kernel::Gaussian { sigma: 0.8 },
            Kernel::Laplace { sigma: 1.2 },
            Kernel::CompactQuadratic { sigma: 1.5 },
        ] {
            let radius = k.support_radius();
            for frac in [0.05, 0.3, 0.7] {
                let r = frac * radius;
                let oracle = adaptive_simpson(&|x| k.density(x), r, radius, 1e-13, 60);
                assert!(
                    (k.tail(r) - oracle).abs() < 1e-10,
                    "{k:?} tail({r}) = {} vs quadrature {oracle}",
                    k.tail(r)
                );
            }
        }
    }

    #[test]
    fn tail_derivative_is_minus_density() {
        let eps = 1e-5;
        for k in [
            Kernel::Gaussian { sigma: 1.0 },
            Kernel::Laplace { sigma: 1.0 },
            Kernel::CompactQuadratic { sigma: 1.0 },
        ] {
            let radius = k.support_radius();
            for i in 0..100 {
                let r = 0.9 * radius * (i as f64 + 0.5) / 100.0;
                let fd = (k.tail(r + eps) - k.tail(r - eps)) / (2.0 * eps);
                assert!(
                    (fd + k.density(r)).abs() < 1e-6,
                    "{k:?} at r={r}: fd {fd} vs -J {}",
                    -k.density(r)
                );
            }
        }
    }

    #[test]
    fn support_radius_captures_required_mass() {
        for k in [
            Kernel::Gaussian { sigma: 2.0 },
            Kernel::Laplace { sigma: 0.5 },
        ] {
            let r = k.support_radius();
            assert!(2.0 * k.tail(r) <= TRUNCATION_MASS * 1.0001);
            assert!(2.0 * k.tail(0.99 * r) > TRUNCATION_MASS);
        }
    }

    #[test]
    fn builtin_families_validate_clean() {
        assert!(Kernel::Gaussian { sigma: 1.0 }.validate(64).all_passed());
        assert!(Kernel::CompactQuadratic { sigma: 2.0 }
            .validate(64)
            .all_passed());
        assert!(Kernel::Laplace { sigma: 1.0 }.validate(64).all_passed());
    }

    #[test]
    fn misnormalized_density_fails_mass_check() {
        let k = Kernel::CompactQuadratic { sigma: 1.0 };
        let report = validate_density(|x| 2.0 * k.density(x), |r| k.tail(r), 1.0, 64);
        assert!(!report.all_passed());
        assert!(!report.check("unit-mass").unwrap().passed);
        // The unrelated clauses still pass.
        assert!(report.check("symmetric").unwrap().passed);
    }

    #[test]
    fn config_round_trip() {
        let k: Kernel =
            serde_json::from_str(r#"{"family":"compact_quadratic","sigma":1.0}"#).unwrap();
        assert_eq!(k, Kernel::CompactQuadratic { sigma: 1.0 });
        let s = serde_json::to_string(&Kernel::Gaussian { sigma: 2.5 }).unwrap();
        assert!(s.contains(r#""family":"gaussian""#));
    }
}
