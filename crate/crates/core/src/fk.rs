//! Monte Carlo evaluation of the oscillatory-potential equation and closed
//! forms for its homogenized limit.
//!
//! Per path the solver computes f(x + B_t)·exp(i·phase), where the phase is
//! a rescaled line integral of the field along the path.  All regimes share
//! one scaling skeleton; only the exponents differ.

use num_complex::Complex64;
use serde::Serialize;

use crate::covariance::CovarianceModel;
use crate::effective::{rho, DampingRegime};
use crate::field::FieldSampler;
use crate::paths::{field_line_integral, sample_paths, BrownianPath, PathSpec};
use crate::rng::RngStream;
use crate::stats::{ComplexStats, MonteCarloEstimate};
use crate::{Error, Result};

/// Time-rescaling exponent of the potential, with the white-noise endpoint
/// kept as its own tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

impl Alpha {
    pub fn validate(&self) -> Result<()> {
        match self {
            Alpha::Finite(a) if a.is_finite() && *a >= 0.0 => Ok(()),
            Alpha::Finite(_) => Err(Error::domain("alpha must be finite and nonnegative")),
            Alpha::Infinite => Ok(()),
        }
    }

    /// Phase-strength exponent: ε^{-δ} multiplies the potential integral.
    pub fn delta(&self) -> f64 {
        match self {
            Alpha::Finite(a) => (a / 2.0).max(1.0),
            Alpha::Infinite => 0.5,
        }
    }
}

/// Bounded continuous initial data with closed-form heat evolution.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    CosineWave { kappa: Vec<f64> },
    GaussianBump { center: Vec<f64>, width: f64 },
    Constant { c: f64 },
}

impl InitialData {
    /// Spatial dimension pinned by the data, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            InitialData::CosineWave { kappa } => Some(kappa.len()),
            InitialData::GaussianBump { center, .. } => Some(center.len()),
            InitialData::Constant { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialData::CosineWave { kappa } if kappa.is_empty() => {
                Err(Error::domain("wave vector must have at least one component"))
            }
            InitialData::GaussianBump { center, width } => {
                if center.is_empty() {
                    return Err(Error::domain("bump center must have at least one component"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::domain("bump width must be positive"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            InitialData::CosineWave { kappa } => {
                kappa.iter().zip(x).map(|(k, xc)| k * xc).sum::<f64>().cos()
            }
            InitialData::GaussianBump { center, width } => {
                let r2: f64 = center.iter().zip(x).map(|(c, xc)| (xc - c) * (xc - c)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
            InitialData::Constant { c } => *c,
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            InitialData::CosineWave { .. } | InitialData::GaussianBump { .. } => 1.0,
            InitialData::Constant { c } => c.abs(),
        }
    }
}

/// E_B f(x + B_t), in closed form per initial-data kind.
pub fn heat_semigroup(f: &InitialData, t: f64, x: &[f64]) -> Result<f64> {
    f.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("time must be nonnegative"));
    }
    if let Some(d) = f.dim() {
        if d != x.len() {
            return Err(Error::domain("point and initial data dimensions differ"));
        }
    }
    Ok(match f {
        InitialData::CosineWave { kappa } => {
            let k2: f64 = kappa.iter().map(|k| k * k).sum();
            let dot: f64 = kappa.iter().zip(x).map(|(k, xc)| k * xc).sum();
            (-0.5 * k2 * t).exp() * dot.cos()
        }
        InitialData::GaussianBump { center, width } => {
            let s2 = width * width + t;
            let r2: f64 = center.iter().zip(x).map(|(c, xc)| (xc - c) * (xc - c)).sum();
            (width * width / s2).powf(x.len() as f64 / 2.0) * (-r2 / (2.0 * s2)).exp()
        }
        InitialData::Constant { c } => *c,
    })
}

/// One Monte Carlo evaluation point for the oscillatory solver.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSpec {
    pub epsilon: f64,
    pub alpha: Alpha,
    pub t: f64,
    pub x: Vec<f64>,
    pub n_paths: u64,
    pub dt: f64,
    pub stream: RngStream,
}

impl SolveSpec {
    fn validate(&self) -> Result<()> {
        self.alpha.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1]"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain("time must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt must be positive"));
        }
        if self.n_paths == 0 {
            return Err(Error::domain("need at least one path"));
        }
        if self.x.is_empty() {
            return Err(Error::domain("evaluation point must have at least one component"));
        }
        Ok(())
    }
}

/// The common skeleton phase = coeff·∫₀^{s_end} V(rate·s, shift + B_s) ds on
/// the microscopic clock, terminal point x + terminal_scale·B_{s_end}.
///
/// Finite α substitutes s = ε²u in the macroscopic integral, leaving the
/// space argument an unscaled microscopic Brownian motion; the white-noise
/// form substitutes s = εu and shrinks space by √ε instead.
pub(crate) struct FkScaling {
    coeff: f64,
    time_rate: f64,
    space_scale: f64,
    shift: Vec<f64>,
    terminal_scale: f64,
    s_end: f64,
}

fn fk_scaling(spec: &SolveSpec) -> FkScaling {
    let eps = spec.epsilon;
    match spec.alpha {
        Alpha::Finite(a) => FkScaling {
            coeff: eps.powf(2.0 - spec.alpha.delta()),
            time_rate: eps.powf(2.0 - a),
            space_scale: 1.0,
            shift: spec.x.iter().map(|c| c / eps).collect(),
            terminal_scale: eps,
            s_end: spec.t / (eps * eps),
        },
        Alpha::Infinite => white_noise_scaling(spec.t, eps, &spec.x),
    }
}

/// The α = ∞ arm on its own, for callers that drive one field realization
/// path by path.
pub(crate) fn white_noise_scaling(t: f64, epsilon: f64, x: &[f64]) -> FkScaling {
    FkScaling {
        coeff: epsilon.sqrt(),
        time_rate: 1.0,
        space_scale: epsilon.sqrt(),
        shift: x.to_vec(),
        terminal_scale: epsilon.sqrt(),
        s_end: t / epsilon,
    }
}

pub(crate) fn fk_sample(
    sampler: &FieldSampler,
    f: &InitialData,
    sc: &FkScaling,
    x: &[f64],
    path: &BrownianPath,
    terminal: &mut [f64],
) -> Result<Complex64> {
    let phase = sc.coeff
        * field_line_integral(sampler, path, sc.time_rate, sc.space_scale, &sc.shift, sc.s_end)?;
    path.lerp_into(sc.s_end, terminal);
    for (tc, xc) in terminal.iter_mut().zip(x) {
        *tc = xc + sc.terminal_scale * *tc;
    }
    let (sin, cos) = phase.sin_cos();
    Ok(f.eval(terminal) * Complex64::new(cos, sin))
}

/// Step-size adequacy bound for the realized field under this scaling, the
/// same shape as the paths module's default-step policy.
pub(crate) fn dt_bound(sampler: &FieldSampler, sc: &FkScaling) -> f64 {
    let (ell_t, ell_x) = sampler.correlation_scales();
    let dt_time = ell_t / sc.time_rate / 8.0;
    let dx = ell_x / sc.space_scale;
    let dt_space = dx * dx / 16.0;
    dt_time.min(dt_space)
}

/// Feynman-Kac estimate of the oscillatory solution at (t, x): the path
/// average of f(x+B_t)·exp(i·ε^{−δ}∫V).
pub fn solve_u_eps(
    sampler: &FieldSampler,
    f: &InitialData,
    spec: &SolveSpec,
) -> Result<MonteCarloEstimate> {
    spec.validate()?;
    f.validate()?;
    let d = sampler.d();
    if spec.x.len() != d {
        return Err(Error::domain("field and evaluation point dimensions differ"));
    }
    if let Some(fd) = f.dim() {
        if fd != d {
            return Err(Error::domain("field and initial data dimensions differ"));
        }
    }
    let sc = fk_scaling(spec);
    let paths = sample_paths(&PathSpec {
        d,
        horizon: sc.s_end,
        dt: spec.dt,
        n_paths: spec.n_paths,
        stream: spec.stream,
    })?;
    let mut stats = ComplexStats::new();
    let mut terminal = vec![0.0; d];
    for i in 0..paths.n_paths() {
        let path = paths.path(i);
        stats.push(fk_sample(sampler, f, &sc, &spec.x, &path, &mut terminal)?);
    }
    let mut est = MonteCarloEstimate::from_stats(&stats, spec.stream);
    let bound = dt_bound(sampler, &sc);
    if spec.dt > 8.0 * bound {
        est = est.with_warning(format!(
            "dt = {} exceeds 8x the resolution bound {bound:.3e} for this \
             field and scaling; the phase integral is under-resolved",
            spec.dt
        ));
    }
    Ok(est)
}

/// Homogenized solution e^{−ρt}·E_B f(x+B_t), with ρ from the damping
/// quadrature of the given regime.
pub fn solve_u0(
    model: &CovarianceModel,
    f: &InitialData,
    t: f64,
    x: &[f64],
    regime: DampingRegime,
) -> Result<f64> {
    let coeffs = rho(model, regime)?;
    Ok((-coeffs.rho * t).exp() * heat_semigroup(f, t, x)?)
}

/// Template for a convergence sweep: everything but ε.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSpec {
    pub alpha: Alpha,
    pub t: f64,
    pub x: Vec<f64>,
    pub n_paths: u64,
    pub n_fields: u64,
    pub dt: f64,
    pub stream: RngStream,
}

/// One ε row of a convergence table.  Means and standard errors are over the
/// field ensemble of per-field path averages; `dt_delta` is the paired
/// fine-vs-coarsened discretization shift measured on the first field.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub re_mean: f64,
    pub im_mean: f64,
    pub re_stderr: f64,
    pub im_stderr: f64,
    pub u0_ref: f64,
    pub abs_err: f64,
    pub dt_delta: f64,
    pub n_paths: u64,
    pub n_fields: u64,
}

/// Sweep ε over a decreasing schedule: per ε, `n_fields` independent field
/// realizations each averaged over `n_paths` paths, compared against the
/// homogenized reference.  Deterministic given the template stream.
pub fn convergence_table(
    factory: &dyn Fn(RngStream) -> Result<FieldSampler>,
    model: &CovarianceModel,
    f: &InitialData,
    eps_schedule: &[f64],
    template: &ConvergenceSpec,
) -> Result<Vec<ConvergenceRow>> {
    template.alpha.validate()?;
    f.validate()?;
    if eps_schedule.len() < 2 {
        return Err(Error::domain("need at least two epsilon values"));
    }
    if !eps_schedule.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::domain("epsilon schedule must be strictly decreasing"));
    }
    if template.n_fields < 2 {
        return Err(Error::domain("need at least two field realizations"));
    }
    let regime = match template.alpha {
        Alpha::Finite(a) => DampingRegime::for_alpha(a),
        Alpha::Infinite => {
            return Err(Error::domain(
                "the white-noise regime has its own limit; convergence tables \
                 cover finite alpha",
            ))
        }
    };
    let u0 = solve_u0(model, f, template.t, &template.x, regime)?;

    let mut rows = Vec::with_capacity(eps_schedule.len());
    for (e, &eps) in eps_schedule.iter().enumerate() {
        let row_stream = template.stream.derive(e as u64);
        let mut field_means = ComplexStats::new();
        let mut dt_delta = 0.0;
        for k in 0..template.n_fields {
            let sampler = factory(row_stream.derive(k))?;
            let spec = SolveSpec {
                epsilon: eps,
                alpha: template.alpha,
                t: template.t,
                x: template.x.clone(),
                n_paths: template.n_paths,
                dt: template.dt,
                stream: row_stream.derive(1_000_000 + k),
            };
            if k == 0 {
                let (fine, coarse) = probe_estimate(&sampler, f, &spec)?;
                dt_delta = (fine.mean() - coarse.mean()).norm();
                field_means.push(fine.mean());
            } else {
                field_means.push(solve_u_eps(&sampler, f, &spec)?.mean);
            }
        }
        let mean = field_means.mean();
        rows.push(ConvergenceRow {
            epsilon: eps,
            re_mean: mean.re,
            im_mean: mean.im,
            re_stderr: field_means.stderr_re(),
            im_stderr: field_means.stderr_im(),
            u0_ref: u0,
            abs_err: (mean - Complex64::new(u0, 0.0)).norm(),
            dt_delta,
            n_paths: template.n_paths,
            n_fields: template.n_fields,
        });
    }
    Ok(rows)
}

/// Path ensemble evaluated at the requested step and, pairwise on the same
/// Brownian nodes, at twice the step.  The step is nudged so the horizon
/// splits into an even number of exact steps.
fn probe_estimate(
    sampler: &FieldSampler,
    f: &InitialData,
    spec: &SolveSpec,
) -> Result<(ComplexStats, ComplexStats)> {
    spec.validate()?;
    let d = sampler.d();
    if spec.x.len() != d {
        return Err(Error::domain("field and evaluation point dimensions differ"));
    }
    let sc = fk_scaling(spec);
    let mut n_steps = (sc.s_end / spec.dt).ceil() as usize;
    n_steps += n_steps % 2;
    let dt = sc.s_end / n_steps as f64;
    let paths = sample_paths(&PathSpec {
        d,
        horizon: sc.s_end,
        dt,
        n_paths: spec.n_paths,
        stream: spec.stream,
    })?;
    let mut fine = ComplexStats::new();
    let mut coarse = ComplexStats::new();
    let mut terminal = vec![0.0; d];
    for i in 0..paths.n_paths() {
        let path = paths.path(i);
        fine.push(fk_sample(sampler, f, &sc, &spec.x, &path, &mut terminal)?);
        let halved = path.coarsen(2)?;
        coarse.push(fk_sample(sampler, f, &sc, &spec.x, &halved, &mut terminal)?);
    }
    Ok((fine, coarse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::HarmonicField;
    use approx::assert_abs_diff_eq;

    const SQRT_HALF_PI: f64 = 1.2533141373155003;

    fn unit_gaussian(d: usize) -> CovarianceModel {
        CovarianceModel::gaussian(1.0, 1.0, 1.0, d).unwrap()
    }

    fn cosine_x1() -> InitialData {
        InitialData::CosineWave {
            kappa: vec![1.0, 0.0, 0.0],
        }
    }

    #[test]
    fn heat_semigroup_closed_forms() {
        let f = cosine_x1();
        let v = heat_semigroup(&f, 1.0, &[0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            heat_semigroup(&f, 0.0, &[0.3, 1.0, -2.0]).unwrap(),
            f.eval(&[0.3, 1.0, -2.0]),
            epsilon = 1e-15
        );

        let c = InitialData::Constant { c: -2.5 };
        assert_eq!(heat_semigroup(&c, 7.0, &[1.0]).unwrap(), -2.5);

        assert!(heat_semigroup(&f, -1.0, &[0.0, 0.0, 0.0]).is_err());
        assert!(heat_semigroup(&f, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn bump_evolution_matches_direct_convolution() {
        // One-dimensional quadrature oracle: (q_t * f)(x) with the heat
        // kernel written out, independent of the width-combination algebra.
        let f = InitialData::GaussianBump {
            center: vec![0.7],
            width: 0.6,
        };
        let (t, x) = (0.9, 0.4);
        let spec = crate::numerics::QuadratureSpec::default();
        let oracle = crate::numerics::integrate_real_line(
            |y| {
                let q = (-(x - y) * (x - y) / (2.0 * t)).exp()
                    / (2.0 * std::f64::consts::PI * t).sqrt();
                q * f.eval(&[y])
            },
            &spec,
        )
        .unwrap()
        .value;
        let v = heat_semigroup(&f, t, &[x]).unwrap();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-9);
    }

    #[test]
    fn zero_potential_recovers_pure_heat_flow() {
        let f = cosine_x1();
        let sampler = FieldSampler::Harmonic(HarmonicField::constant(0.0, 3));
        for alpha in [Alpha::Finite(3.0), Alpha::Finite(1.0), Alpha::Infinite] {
            let spec = SolveSpec {
                epsilon: 0.5,
                alpha,
                t: 1.0,
                x: vec![0.0; 3],
                n_paths: 4000,
                dt: 0.0625,
                stream: RngStream::new(11),
            };
            let est = solve_u_eps(&sampler, &f, &spec).unwrap();
            assert_eq!(est.mean.im, 0.0);
            assert_eq!(est.stderr_im, 0.0);
            let heat = (-0.5f64).exp();
            assert!(
                (est.mean.re - heat).abs() <= 3.0 * est.stderr_re,
                "{alpha:?}: {} vs {heat} (stderr {})",
                est.mean.re,
                est.stderr_re
            );
            assert!(est.warnings.is_empty());
        }
    }

    #[test]
    fn constant_potential_is_a_deterministic_phase_rotation() {
        let f = cosine_x1();
        let zero = FieldSampler::Harmonic(HarmonicField::constant(0.0, 3));
        let c = 0.8;
        let shifted = FieldSampler::Harmonic(HarmonicField::constant(c, 3));
        for alpha in [Alpha::Finite(3.0), Alpha::Finite(2.0), Alpha::Infinite] {
            let spec = SolveSpec {
                epsilon: 0.4,
                alpha,
                t: 0.75,
                x: vec![0.1, -0.2, 0.3],
                n_paths: 500,
                dt: 0.0625,
                stream: RngStream::new(12),
            };
            let base = solve_u_eps(&zero, &f, &spec).unwrap();
            let rotated = solve_u_eps(&shifted, &f, &spec).unwrap();
            // Same paths, same moduli; the phase advances by ε^{−δ}·c·t.
            let theta = spec.epsilon.powf(-alpha.delta()) * c * spec.t;
            let expected = base.mean * Complex64::new(theta.cos(), theta.sin());
            assert_abs_diff_eq!(rotated.mean.re, expected.re, epsilon = 1e-10);
            assert_abs_diff_eq!(rotated.mean.im, expected.im, epsilon = 1e-10);
            assert_abs_diff_eq!(rotated.mean.norm(), base.mean.norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn estimates_respect_the_modulus_bound() {
        let model = unit_gaussian(3);
        let sampler =
            FieldSampler::Harmonic(HarmonicField::synth(&model, 24, RngStream::new(13)).unwrap());
        let spec = SolveSpec {
            epsilon: 0.25,
            alpha: Alpha::Finite(3.0),
            t: 1.0,
            x: vec![0.0; 3],
            n_paths: 2000,
            dt: 0.0078125,
            stream: RngStream::new(14),
        };
        let f = cosine_x1();
        let est = solve_u_eps(&sampler, &f, &spec).unwrap();
        assert!(est.mean.norm() <= f.sup_bound() + 3.0 * est.combined_stderr());
        assert!(est.mean.norm().is_finite());
    }

    #[test]
    fn scaling_is_continuous_across_the_regime_boundary() {
        // alpha = 2 sits on the seam between the two finite-alpha exponent
        // branches; estimates must agree across it to first order.
        let model = unit_gaussian(3);
        let sampler =
            FieldSampler::Harmonic(HarmonicField::synth(&model, 16, RngStream::new(15)).unwrap());
        let f = cosine_x1();
        let mut means = Vec::new();
        for a in [2.0 - 1e-9, 2.0, 2.0 + 1e-9] {
            let spec = SolveSpec {
                epsilon: 0.4,
                alpha: Alpha::Finite(a),
                t: 0.5,
                x: vec![0.0; 3],
                n_paths: 300,
                dt: 0.0625,
                stream: RngStream::new(16),
            };
            means.push(solve_u_eps(&sampler, &f, &spec).unwrap().mean);
        }
        assert!((means[0] - means[1]).norm() < 1e-6);
        assert!((means[2] - means[1]).norm() < 1e-6);
    }

    #[test]
    fn homogenized_solution_composes_damping_and_heat() {
        let model = unit_gaussian(3);
        let f = cosine_x1();
        let x = [0.0, 0.0, 0.0];
        let v = solve_u0(&model, &f, 1.0, &x, DampingRegime::TimeMixing).unwrap();
        let oracle = (-SQRT_HALF_PI).exp() * (-0.5f64).exp();
        assert_abs_diff_eq!(v, oracle, epsilon = 1e-8);

        assert_abs_diff_eq!(
            solve_u0(&model, &f, 0.0, &x, DampingRegime::TimeMixing).unwrap(),
            f.eval(&x),
            epsilon = 1e-12
        );

        let faint = CovarianceModel::gaussian(1e-12, 1.0, 1.0, 3).unwrap();
        let undamped = solve_u0(&faint, &f, 1.0, &x, DampingRegime::SpaceMixing).unwrap();
        assert_abs_diff_eq!(undamped, (-0.5f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn coarse_steps_are_flagged_not_rejected() {
        let model = unit_gaussian(3);
        let sampler =
            FieldSampler::Harmonic(HarmonicField::synth(&model, 16, RngStream::new(17)).unwrap());
        let f = cosine_x1();
        let mut spec = SolveSpec {
            epsilon: 0.5,
            alpha: Alpha::Finite(1.0),
            t: 0.5,
            x: vec![0.0; 3],
            n_paths: 10,
            dt: 2.0,
            stream: RngStream::new(18),
        };
        let est = solve_u_eps(&sampler, &f, &spec).unwrap();
        assert_eq!(est.warnings.len(), 1);

        spec.dt = 0.03125;
        let est = solve_u_eps(&sampler, &f, &spec).unwrap();
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn solver_rejects_mismatched_dimensions() {
        let sampler = FieldSampler::Harmonic(HarmonicField::constant(0.0, 3));
        let f = InitialData::CosineWave { kappa: vec![1.0] };
        let spec = SolveSpec {
            epsilon: 0.5,
            alpha: Alpha::Finite(1.0),
            t: 1.0,
            x: vec![0.0; 3],
            n_paths: 10,
            dt: 0.25,
            stream: RngStream::new(19),
        };
        assert!(solve_u_eps(&sampler, &f, &spec).is_err());
        let bad_width = InitialData::GaussianBump {
            center: vec![0.0; 3],
            width: 0.0,
        };
        assert!(solve_u_eps(&sampler, &bad_width, &spec).is_err());
    }

    #[test]
    fn zero_potential_table_reduces_to_the_heat_error() {
        let model = unit_gaussian(3);
        let factory =
            |_: RngStream| Ok(FieldSampler::Harmonic(HarmonicField::constant(0.0, 3)));
        let f = cosine_x1();
        let template = ConvergenceSpec {
            alpha: Alpha::Finite(1.0),
            t: 1.0,
            x: vec![0.0; 3],
            n_paths: 1500,
            n_fields: 4,
            dt: 0.125,
            stream: RngStream::new(21),
        };
        let rows = convergence_table(&factory, &model, &f, &[0.5, 0.25], &template).unwrap();
        assert_eq!(rows.len(), 2);
        let rho_lt2 = 2.0f64;
        let heat = (-0.5f64).exp();
        let expected_err = (1.0 - (-rho_lt2).exp()) * heat;
        for row in &rows {
            assert_eq!(row.im_mean, 0.0);
            assert_eq!(row.dt_delta, 0.0);
            assert_abs_diff_eq!(row.u0_ref, (-rho_lt2).exp() * heat, epsilon = 1e-6);
            let noise = 3.0 * row.re_stderr.hypot(row.im_stderr) + 1e-6;
            assert!(
                (row.abs_err - expected_err).abs() <= noise,
                "err {} vs {expected_err} (noise band {noise})",
                row.abs_err
            );
        }
    }

    #[test]
    fn convergence_tables_are_deterministic() {
        let model = unit_gaussian(3);
        let factory = |s: RngStream| {
            Ok(FieldSampler::Harmonic(HarmonicField::synth(
                &unit_gaussian(3),
                8,
                s,
            )?))
        };
        let f = cosine_x1();
        let template = ConvergenceSpec {
            alpha: Alpha::Finite(1.0),
            t: 0.5,
            x: vec![0.0; 3],
            n_paths: 40,
            n_fields: 3,
            dt: 0.125,
            stream: RngStream::new(22),
        };
        let a = convergence_table(&factory, &model, &f, &[0.5, 0.35], &template).unwrap();
        let b = convergence_table(&factory, &model, &f, &[0.5, 0.35], &template).unwrap();
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.re_mean, rb.re_mean);
            assert_eq!(ra.im_mean, rb.im_mean);
            assert_eq!(ra.dt_delta, rb.dt_delta);
        }
    }

    #[test]
    fn table_error_shrinks_toward_the_homogenized_limit() {
        let model = unit_gaussian(3);
        let factory = |s: RngStream| {
            Ok(FieldSampler::Harmonic(HarmonicField::synth(
                &unit_gaussian(3),
                16,
                s,
            )?))
        };
        let f = cosine_x1();
        let template = ConvergenceSpec {
            alpha: Alpha::Finite(1.0),
            t: 1.0,
            x: vec![0.0; 3],
            n_paths: 1200,
            n_fields: 12,
            dt: 0.0625,
            stream: RngStream::new(23),
        };
        let rows =
            convergence_table(&factory, &model, &f, &[0.5, 0.35, 0.25], &template).unwrap();
        let first = &rows[0];
        let last = &rows[rows.len() - 1];
        let noise = 3.0
            * (first.re_stderr.hypot(first.im_stderr) + last.re_stderr.hypot(last.im_stderr));
        assert!(
            last.abs_err <= first.abs_err + noise,
            "error grew: {} -> {} (noise {noise})",
            first.abs_err,
            last.abs_err
        );
        for row in &rows {
            assert!(row.dt_delta.is_finite() && row.dt_delta >= 0.0);
        }
    }

    #[test]
    fn schedule_validation_rejects_bad_input() {
        let model = unit_gaussian(3);
        let factory =
            |_: RngStream| Ok(FieldSampler::Harmonic(HarmonicField::constant(0.0, 3)));
        let f = cosine_x1();
        let template = ConvergenceSpec {
            alpha: Alpha::Finite(1.0),
            t: 1.0,
            x: vec![0.0; 3],
            n_paths: 10,
            n_fields: 2,
            dt: 0.25,
            stream: RngStream::new(24),
        };
        assert!(convergence_table(&factory, &model, &f, &[0.5], &template).is_err());
        assert!(convergence_table(&factory, &model, &f, &[0.25, 0.5], &template).is_err());
        let mut inf = template.clone();
        inf.alpha = Alpha::Infinite;
        assert!(convergence_table(&factory, &model, &f, &[0.5, 0.25], &inf).is_err());
        assert!(Alpha::Finite(f64::NAN).validate().is_err());
        assert!(Alpha::Finite(-1.0).validate().is_err());
    }
}
