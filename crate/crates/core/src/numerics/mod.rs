//! Heat kernels and deterministic adaptive quadrature.
//!
//! Semi-infinite domains are mapped through t = u/(1-u); spectral integrals
//! over (xi0, xi) in R x R^d can exploit declared isotropy in xi, reducing to
//! a 2-D nested integral with the surface-area factor pulled out.  All
//! routines are sequential and bit-reproducible for identical inputs.

mod gk;
pub mod special;

pub use special::{bessel_j0, bessel_j1, gauss_legendre, standard_normal_quantile};

use crate::error::Error;
use crate::Result;
use gk::Ctx;
use serde::{Deserialize, Serialize};

/// Tolerances and budget for one quadrature request (nested parts included).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Relative tolerance on the final value.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    /// Hard cap on integrand evaluations, shared across nesting levels.
    #[serde(default = "default_max_evals")]
    pub max_evals: u64,
}

fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_max_evals() -> u64 {
    10_000_000
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: default_rel_tol(),
            abs_tol: default_abs_tol(),
            max_evals: default_max_evals(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0 && self.rel_tol <= 0.1) {
            return Err(Error::domain(format!(
                "rel_tol must lie in (0, 0.1], got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol >= 0.0) {
            return Err(Error::domain(format!(
                "abs_tol must be finite and nonnegative, got {}",
                self.abs_tol
            )));
        }
        if self.max_evals < 15 {
            return Err(Error::domain(format!(
                "max_evals must be at least 15, got {}",
                self.max_evals
            )));
        }
        Ok(())
    }
}

/// Outcome of a converged quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub error_estimate: f64,
    /// Integrand evaluations spent.
    pub evals: u64,
}

/// Whether a spectral integrand depends on the spatial frequency only through
/// its norm.  Declared by the caller; `Isotropic` unlocks the radial fast
/// path, `General` integrates every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectralSymmetry {
    Isotropic,
    General,
}

/// Surface area of the unit sphere in R^d, d in 1..=4.
pub fn surface_area(d: usize) -> Result<f64> {
    match d {
        1 => Ok(2.0),
        2 => Ok(2.0 * std::f64::consts::PI),
        3 => Ok(4.0 * std::f64::consts::PI),
        4 => Ok(2.0 * std::f64::consts::PI * std::f64::consts::PI),
        _ => Err(Error::domain(format!("dimension must be 1..=4, got {d}"))),
    }
}

/// Transition density of d-dimensional Brownian motion:
/// (2 pi t)^(-d/2) exp(-|x|^2 / (2t)).
pub fn heat_kernel(t: f64, x: &[f64], d: usize) -> Result<f64> {
    if !(1..=4).contains(&d) {
        return Err(Error::domain(format!("dimension must be 1..=4, got {d}")));
    }
    if x.len() != d {
        return Err(Error::domain(format!(
            "point has {} coordinates but d = {d}",
            x.len()
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::domain(format!("time must be positive and finite, got {t}")));
    }
    let r2: f64 = x.iter().map(|xi| xi * xi).sum();
    if !r2.is_finite() {
        return Err(Error::domain("point coordinates must be finite".to_string()));
    }
    let norm = (2.0 * std::f64::consts::PI * t).powf(-(d as f64) / 2.0);
    Ok(norm * (-r2 / (2.0 * t)).exp())
}

fn seal(ctx: &Ctx, value: f64, error: f64) -> Result<QuadratureResult> {
    if let Some(x) = ctx.bad_node() {
        return Err(Error::domain(format!(
            "integrand returned a non-finite value near coordinate {x:e}"
        )));
    }
    if ctx.exhausted() {
        return Err(Error::QuadratureBudget {
            value,
            error_estimate: error,
            evals: ctx.used(),
        });
    }
    Ok(QuadratureResult {
        value,
        error_estimate: error,
        evals: ctx.used(),
    })
}

/// Integrate `f` over the finite interval [a, b].
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("interval endpoints must be finite".to_string()));
    }
    let ctx = Ctx::new(spec.max_evals);
    let (v, e) = gk::adaptive(&mut f, a, b, spec.rel_tol, spec.abs_tol, &ctx);
    seal(&ctx, v, e)
}

fn semi_infinite_inner(
    f: &mut dyn FnMut(f64) -> f64,
    rel_tol: f64,
    abs_tol: f64,
    ctx: &Ctx,
) -> (f64, f64) {
    let mut mapped = |u: f64| {
        let om = 1.0 - u;
        if om <= 0.0 {
            // u rounded to the endpoint; the mapped integrand tends to zero
            // there whenever the original integral converges.
            return 0.0;
        }
        let t = u / om;
        f(t) / (om * om)
    };
    gk::adaptive(&mut mapped, 0.0, 1.0, rel_tol, abs_tol, ctx)
}

fn real_line_inner(
    f: &mut dyn FnMut(f64) -> f64,
    rel_tol: f64,
    abs_tol: f64,
    ctx: &Ctx,
) -> (f64, f64) {
    let (vp, ep) = semi_infinite_inner(&mut |t| f(t), rel_tol, 0.5 * abs_tol, ctx);
    let (vn, en) = semi_infinite_inner(&mut |t| f(-t), rel_tol, 0.5 * abs_tol, ctx);
    (vp + vn, ep + en)
}

/// Integrate `f` over [0, infinity).
pub fn integrate_semi_infinite(
    mut f: impl FnMut(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    let ctx = Ctx::new(spec.max_evals);
    let (v, e) = semi_infinite_inner(&mut f, spec.rel_tol, spec.abs_tol, &ctx);
    seal(&ctx, v, e)
}

/// Integrate `f` over the whole real line.
pub fn integrate_real_line(
    mut f: impl FnMut(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    let ctx = Ctx::new(spec.max_evals);
    let (v, e) = real_line_inner(&mut f, spec.rel_tol, spec.abs_tol, &ctx);
    seal(&ctx, v, e)
}

/// Integrate x -> h(|x|) over R^d by radial reduction:
/// S_{d-1} * int_0^inf h(r) r^(d-1) dr.
pub fn integrate_spatial_radial(
    mut h: impl FnMut(f64) -> f64,
    d: usize,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    let sd = surface_area(d)?;
    let pow = (d - 1) as i32;
    let ctx = Ctx::new(spec.max_evals);
    let (v, e) = semi_infinite_inner(
        &mut |r| h(r) * r.powi(pow),
        spec.rel_tol,
        spec.abs_tol,
        &ctx,
    );
    seal(&ctx, sd * v, sd * e)
}

/// Integrate g(xi0, xi) over R x R^d.
///
/// With `SpectralSymmetry::Isotropic` the caller asserts g depends on xi only
/// through |xi|; the spatial part collapses to a radial integral and g is
/// probed at xi = (r, 0, ..., 0).  With `General`, all d+1 coordinates are
/// integrated by nested adaptive passes (substantially more expensive; keep
/// tolerances modest).
pub fn integrate_spectral(
    mut g: impl FnMut(f64, &[f64]) -> f64,
    d: usize,
    symmetry: SpectralSymmetry,
    spec: &QuadratureSpec,
) -> Result<QuadratureResult> {
    spec.validate()?;
    if !(1..=4).contains(&d) {
        return Err(Error::domain(format!("dimension must be 1..=4, got {d}")));
    }
    let ctx = Ctx::new(spec.max_evals);
    match symmetry {
        SpectralSymmetry::Isotropic => {
            let sd = surface_area(d)?;
            let pow = (d - 1) as i32;
            let inner_rel = 0.25 * spec.rel_tol;
            let inner_abs = 0.25 * spec.abs_tol;
            let mut outer = |xi0: f64| {
                let mut xi = [0.0f64; 4];
                let mut radial = |r: f64| {
                    xi[0] = r;
                    g(xi0, &xi[..d]) * r.powi(pow)
                };
                let (v, _) = semi_infinite_inner(&mut radial, inner_rel, inner_abs, &ctx);
                sd * v
            };
            let (v, e) = real_line_inner(&mut outer, spec.rel_tol, spec.abs_tol, &ctx);
            seal(&ctx, v, e)
        }
        SpectralSymmetry::General => {
            let mut coords = [0.0f64; 5];
            let mut wrapped = |c: &[f64]| g(c[0], &c[1..]);
            let (v, e) = nested_full(
                &mut wrapped,
                &mut coords,
                0,
                d + 1,
                spec.rel_tol,
                spec.abs_tol,
                &ctx,
            );
            seal(&ctx, v, e)
        }
    }
}

/// Iterated integration over R^total, peeling one coordinate per level.
/// Deeper levels run at tighter tolerance so outer error estimates stay
/// meaningful.
fn nested_full(
    g: &mut dyn FnMut(&[f64]) -> f64,
    coords: &mut [f64; 5],
    level: usize,
    total: usize,
    rel_tol: f64,
    abs_tol: f64,
    ctx: &Ctx,
) -> (f64, f64) {
    let last = level + 1 == total;
    let mut integrand = |v: f64| {
        coords[level] = v;
        if last {
            g(&coords[..total])
        } else {
            nested_full(g, coords, level + 1, total, rel_tol / 3.0, abs_tol / 3.0, ctx).0
        }
    };
    real_line_inner(&mut integrand, rel_tol, abs_tol, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const SQRT_HALF_PI: f64 = 1.2533141373155003; // sqrt(pi/2)
    const SQRT_TWO_PI: f64 = 2.5066282746310002;
    const INV_TWO_PI_SQ: f64 = 0.025330295910584444; // (2*pi)^-2

    /// Plain composite trapezoid rule; deliberately independent of the
    /// adaptive engine so it can serve as an oracle.
    fn trapezoid_oracle(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut sum = 0.5 * (f(a) + f(b));
        for i in 1..n {
            sum += f(a + i as f64 * h);
        }
        sum * h
    }

    #[test]
    fn semi_infinite_exponential() {
        let r = integrate_semi_infinite(|t| (-t).exp(), &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn semi_infinite_gaussian_matches_trapezoid_oracle() {
        // Oracle: truncation at t=40 is far below 1e-12; h ~ 1e-5.
        let oracle = trapezoid_oracle(|t| (-0.5 * t * t).exp(), 0.0, 40.0, 1 << 22);
        assert_abs_diff_eq!(oracle, SQRT_HALF_PI, epsilon = 1e-9);
        let r = integrate_semi_infinite(|t| (-0.5 * t * t).exp(), &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(r.value, SQRT_HALF_PI, epsilon = 1e-8 * SQRT_HALF_PI);
        assert_abs_diff_eq!(r.value, oracle, epsilon = 1e-8);
    }

    #[test]
    fn semi_infinite_algebraic_tail() {
        // Antiderivative of (1+t)^(-3/2) is -2 (1+t)^(-1/2): the integral is 2.
        // The u/(1-u) map turns this tail into a sqrt singularity at u = 1,
        // which caps the reachable accuracy near 1e-7; the estimate must say so.
        let r = integrate_semi_infinite(|t| (1.0 + t).powf(-1.5), &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-7);
        assert!(r.error_estimate < 1e-6);
        assert!((2.0 - r.value).abs() <= 10.0 * r.error_estimate);
    }

    #[test]
    fn real_line_gaussian() {
        let r = integrate_real_line(|t| (-0.5 * t * t).exp(), &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(r.value, SQRT_TWO_PI, epsilon = 1e-8 * SQRT_TWO_PI);
    }

    #[test]
    fn interval_sine() {
        let r = integrate_interval(|x| x.sin(), 0.0, std::f64::consts::PI, &QuadratureSpec::default())
            .unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn heat_kernel_reference_values() {
        assert_abs_diff_eq!(heat_kernel(1.0, &[0.0], 1).unwrap(), 0.3989422804014327, epsilon = 1e-12);
        assert_abs_diff_eq!(
            heat_kernel(1.0, &[0.0, 0.0, 0.0], 3).unwrap(),
            0.06349363593424097,
            epsilon = 1e-12
        );
        // Off-center value relates to the center by the Gaussian factor.
        let center = heat_kernel(2.0, &[0.0, 0.0, 0.0], 3).unwrap();
        let off = heat_kernel(2.0, &[2.0, 0.0, 0.0], 3).unwrap();
        assert_abs_diff_eq!(off, center * (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn heat_kernel_rejects_bad_input() {
        assert!(heat_kernel(0.0, &[0.0], 1).is_err());
        assert!(heat_kernel(-1.0, &[0.0], 1).is_err());
        assert!(heat_kernel(1.0, &[0.0, 0.0], 1).is_err());
        assert!(heat_kernel(1.0, &[0.0; 5], 5).is_err());
    }

    #[test]
    fn heat_kernel_normalizes_in_each_dimension() {
        for d in 1..=4 {
            let r = integrate_spatial_radial(
                |rad| {
                    let mut x = [0.0f64; 4];
                    x[0] = rad;
                    heat_kernel(0.7, &x[..d], d).unwrap()
                },
                d,
                &QuadratureSpec::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn spectral_gaussian_isotropic() {
        let norm = (2.0 * std::f64::consts::PI).powi(-4);
        let r = integrate_spectral(
            |xi0, xi| {
                let k2: f64 = xi.iter().map(|k| k * k).sum();
                norm * (-0.5 * (xi0 * xi0 + k2)).exp()
            },
            3,
            SpectralSymmetry::Isotropic,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, INV_TWO_PI_SQ, epsilon = 1e-8 * INV_TWO_PI_SQ);
    }

    #[test]
    fn declared_isotropy_matches_general_integration_d1() {
        let g = |xi0: f64, xi: &[f64]| {
            let k2 = xi[0] * xi[0];
            (-(xi0 - 0.5) * (xi0 - 0.5) / 2.0).exp() * (-k2).exp() * (1.0 + k2)
        };
        let spec = QuadratureSpec::default();
        let iso = integrate_spectral(g, 1, SpectralSymmetry::Isotropic, &spec).unwrap();
        let full = integrate_spectral(g, 1, SpectralSymmetry::General, &spec).unwrap();
        assert_abs_diff_eq!(iso.value, full.value, epsilon = 2.0 * spec.rel_tol * iso.value.abs());
    }

    #[test]
    fn declared_isotropy_matches_general_integration_d2() {
        let g = |xi0: f64, xi: &[f64]| {
            let k2: f64 = xi.iter().map(|k| k * k).sum();
            (-0.5 * (xi0 * xi0 + k2)).exp() * (1.0 + 0.3 * k2)
        };
        let spec = QuadratureSpec {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            max_evals: 50_000_000,
        };
        let iso = integrate_spectral(g, 2, SpectralSymmetry::Isotropic, &spec).unwrap();
        let full = integrate_spectral(g, 2, SpectralSymmetry::General, &spec).unwrap();
        assert_abs_diff_eq!(iso.value, full.value, epsilon = 2.0 * spec.rel_tol * iso.value.abs());
    }

    #[test]
    fn budget_exhaustion_carries_best_estimate() {
        let spec = QuadratureSpec {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_evals: 200,
        };
        match integrate_semi_infinite(|t| (-t).exp() * (40.0 * t).sin().abs(), &spec) {
            Err(Error::QuadratureBudget { value, evals, .. }) => {
                assert!(value.is_finite());
                assert!(evals <= 200);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let bad = QuadratureSpec {
            rel_tol: 0.0,
            ..QuadratureSpec::default()
        };
        assert!(integrate_semi_infinite(|t| (-t).exp(), &bad).is_err());
        let bad = QuadratureSpec {
            abs_tol: -1.0,
            ..QuadratureSpec::default()
        };
        assert!(integrate_semi_infinite(|t| (-t).exp(), &bad).is_err());
    }

    #[test]
    fn non_finite_integrand_reports_domain_error() {
        let r = integrate_interval(|_| f64::NAN, 0.0, 1.0, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn spectral_calls_are_bit_reproducible() {
        let run = || {
            integrate_spectral(
                |xi0, xi| (-0.5 * (xi0 * xi0 + xi[0] * xi[0] + xi[1] * xi[1])).exp(),
                2,
                SpectralSymmetry::Isotropic,
                &QuadratureSpec::default(),
            )
            .unwrap()
            .value
        };
        assert_eq!(run().to_bits(), run().to_bits());
    }

    proptest! {
        /// Brownian scaling: q_t(x) = t^(-d/2) q_1(x / sqrt t).
        #[test]
        fn heat_kernel_scaling(t in 0.05f64..20.0, a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
            for d in 1..=3usize {
                let x = [a, b, c];
                let lhs = heat_kernel(t, &x[..d], d).unwrap();
                let scaled: Vec<f64> = x[..d].iter().map(|v| v / t.sqrt()).collect();
                let rhs = t.powf(-(d as f64) / 2.0) * heat_kernel(1.0, &scaled, d).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
            }
        }

        /// The kernel is positive and decreasing in |x|.
        #[test]
        fn heat_kernel_radial_monotonicity(t in 0.05f64..10.0, r1 in 0.0f64..4.0, dr in 0.0f64..4.0) {
            let near = heat_kernel(t, &[r1, 0.0, 0.0], 3).unwrap();
            let far = heat_kernel(t, &[r1 + dr, 0.0, 0.0], 3).unwrap();
            prop_assert!(near > 0.0);
            prop_assert!(far <= near);
        }
    }
}
