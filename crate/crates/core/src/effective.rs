//! Effective coefficients of the homogenized equation and the corrector
//! machinery behind them.
//!
//! The damping rate ρ admits two independent computational routes: a
//! time-domain integral of the (path-averaged) covariance and a spectral
//! integral of R̂.  Keeping both routes alive and comparing them is the
//! module's main self-check; nothing here collapses one into the other.

use std::cell::RefCell;

use serde::Serialize;

use crate::covariance::{CovarianceModel, ModelKind};
use crate::field::FieldSampler;
use crate::numerics::{
    integrate_interval, integrate_semi_infinite, integrate_spectral, surface_area, QuadratureResult,
    QuadratureSpec, SpectralSymmetry,
};
use crate::paths::{scenery_integral, BrownianPath, SceneryRegime};
use crate::{Error, Result};

/// Which mechanism produces the damping: fast decorrelation in the field's
/// own time (α > 2), both arguments running together (α = 2), or Brownian
/// motion sweeping the spatial decorrelation (α < 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DampingRegime {
    TimeMixing,
    Balanced,
    SpaceMixing,
}

impl DampingRegime {
    pub fn for_alpha(alpha: f64) -> Self {
        if alpha > 2.0 {
            DampingRegime::TimeMixing
        } else if alpha == 2.0 {
            DampingRegime::Balanced
        } else {
            DampingRegime::SpaceMixing
        }
    }
}

/// Damping rate and variance rate with the quadrature's own error report.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveCoeffs {
    pub rho: f64,
    pub sigma2: f64,
    pub regime: DampingRegime,
    pub rho_error: f64,
    /// Outer-quadrature evaluation count.
    pub evals: u64,
    pub warnings: Vec<String>,
}

fn outer_spec() -> QuadratureSpec {
    QuadratureSpec {
        max_evals: 50_000_000,
        ..QuadratureSpec::default()
    }
}

/// E[R(t_arg, B_t)] for d-dimensional Brownian motion at time t, where
/// t_arg is t itself or 0.  Closed form for the separable model; for the
/// tapered model a radial quadrature in the rescaled variable u = r/√t,
/// which keeps the integrand O(1)-wide for every t.
fn heat_averaged_cov(
    model: &CovarianceModel,
    t_arg: f64,
    t: f64,
    poisoned: &RefCell<Option<Error>>,
) -> f64 {
    let d = model.d();
    match model.kind() {
        ModelKind::GaussianSeparable => {
            let lt = t_arg / model.ell_t();
            let spread = (1.0 + t / (model.ell_x() * model.ell_x())).powf(-(d as f64) / 2.0);
            model.amplitude() * (-0.5 * lt * lt).exp() * spread
        }
        ModelKind::TaperedGaussian => {
            let m = model.taper_radius().expect("tapered model has a radius");
            if t <= 0.0 {
                return model.r_radial(t_arg, 0.0);
            }
            let sqrt_t = t.sqrt();
            let u_max = (m / sqrt_t).min(12.0);
            if u_max <= 0.0 {
                return 0.0;
            }
            let norm = surface_area(d).expect("d validated by the model")
                * (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
            let pow = (d - 1) as i32;
            let spec = QuadratureSpec {
                rel_tol: 1e-9,
                abs_tol: 1e-14,
                max_evals: 2_000_000,
            };
            let inner = integrate_interval(
                |u| u.powi(pow) * (-0.5 * u * u).exp() * model.r_radial(t_arg, sqrt_t * u),
                0.0,
                u_max,
                &spec,
            );
            match inner {
                Ok(r) => norm * r.value,
                Err(e) => {
                    poisoned.replace(Some(e));
                    0.0
                }
            }
        }
    }
}

/// Damping rate ρ of the homogenized drift, computed in the time domain:
/// the semi-infinite integral of R(t, 0), E[R(t, B_t)], or E[R(0, B_t)]
/// depending on the regime.
pub fn rho(model: &CovarianceModel, regime: DampingRegime) -> Result<EffectiveCoeffs> {
    let mut warnings = Vec::new();
    if model.d() < 3 && regime != DampingRegime::TimeMixing {
        warnings.push(format!(
            "spatial dimension {} is below 3: the Brownian spread decays too \
             slowly and the damping integral may diverge",
            model.d()
        ));
    }
    let spec = outer_spec();
    let poisoned: RefCell<Option<Error>> = RefCell::new(None);
    let result = match (regime, model.kind()) {
        (DampingRegime::TimeMixing, ModelKind::GaussianSeparable) => {
            integrate_semi_infinite(|t| model.r_radial(t, 0.0), &spec)?
        }
        (DampingRegime::TimeMixing, ModelKind::TaperedGaussian) => {
            // R(t, 0) vanishes beyond the taper radius.
            let m = model.taper_radius().expect("tapered model has a radius");
            integrate_interval(|t| model.r_radial(t, 0.0), 0.0, m, &spec)?
        }
        (DampingRegime::Balanced, ModelKind::TaperedGaussian) => {
            // The time argument alone kills the integrand beyond the radius.
            let m = model.taper_radius().expect("tapered model has a radius");
            integrate_interval(|t| heat_averaged_cov(model, t, t, &poisoned), 0.0, m, &spec)?
        }
        (DampingRegime::Balanced, _) => {
            integrate_semi_infinite(|t| heat_averaged_cov(model, t, t, &poisoned), &spec)?
        }
        (DampingRegime::SpaceMixing, _) => {
            integrate_semi_infinite(|t| heat_averaged_cov(model, 0.0, t, &poisoned), &spec)?
        }
    };
    if let Some(e) = poisoned.into_inner() {
        return Err(e);
    }
    Ok(EffectiveCoeffs {
        rho: result.value,
        sigma2: 2.0 * result.value,
        regime,
        rho_error: result.error_estimate,
        evals: result.evals,
        warnings,
    })
}

fn two_pi_pow(d: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powi(-(d as i32 + 1))
}

fn scale_result(mut r: QuadratureResult, c: f64) -> QuadratureResult {
    r.value *= c;
    r.error_estimate *= c;
    r
}

/// Spectral value of R̂ for either model at (|ξ₀|, |ξ|).
fn spectral_density(model: &CovarianceModel, xi0: f64, k: f64) -> f64 {
    model.r_hat_radial(xi0, k)
}

/// Variance rate σ² straight from the spectrum.  The slow-time regimes only:
/// the balanced form integrates |ξ|²R̂/(¼|ξ|⁴ + ξ₀²), the space-mixing form
/// 4R̂/|ξ|² (which needs d ≥ 3 for the origin to be integrable).
pub fn sigma2_spectral(model: &CovarianceModel, regime: DampingRegime) -> Result<QuadratureResult> {
    let d = model.d();
    let spec = outer_spec();
    match regime {
        DampingRegime::TimeMixing => Err(Error::domain(
            "the spectral variance form applies to the slow-time regimes only",
        )),
        DampingRegime::Balanced => {
            let r = integrate_spectral(
                |xi0, xi| {
                    let k2: f64 = xi.iter().map(|c| c * c).sum();
                    let denom = 0.25 * k2 * k2 + xi0 * xi0;
                    if denom == 0.0 {
                        return 0.0;
                    }
                    k2 * spectral_density(model, xi0.abs(), k2.sqrt()) / denom
                },
                d,
                SpectralSymmetry::Isotropic,
                &spec,
            )?;
            Ok(scale_result(r, two_pi_pow(d)))
        }
        DampingRegime::SpaceMixing => {
            if d < 3 {
                return Err(Error::domain(
                    "the space-mixing spectral form needs d >= 3: 1/|xi|^2 is \
                     not integrable at the origin below that",
                ));
            }
            let r = integrate_spectral(
                |xi0, xi| {
                    let k2: f64 = xi.iter().map(|c| c * c).sum();
                    if k2 == 0.0 {
                        return 0.0;
                    }
                    4.0 * spectral_density(model, xi0.abs(), k2.sqrt()) / k2
                },
                d,
                SpectralSymmetry::Isotropic,
                &spec,
            )?;
            Ok(scale_result(r, two_pi_pow(d)))
        }
    }
}

/// Regularization parameters of the corrector resolvent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrectorSpec {
    pub lambda: f64,
    pub epsilon: f64,
    pub alpha: f64,
}

impl CorrectorSpec {
    pub fn new(lambda: f64, epsilon: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain("lambda must be positive"));
        }
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1]"));
        }
        if !(0.0..=2.0).contains(&alpha) {
            return Err(Error::domain(
                "the corrector machinery covers 0 <= alpha <= 2",
            ));
        }
        Ok(Self {
            lambda,
            epsilon,
            alpha,
        })
    }

    /// The production coupling λ = ε².
    pub fn coupled(epsilon: f64, alpha: f64) -> Result<Self> {
        Self::new(epsilon * epsilon, epsilon, alpha)
    }

    /// Rate ε^{2−α} at which the field's time argument advances.
    pub fn time_rate(&self) -> f64 {
        self.epsilon.powf(2.0 - self.alpha)
    }

    /// Weight ε^{4−2α} multiplying ξ₀² in resolvent denominators.
    fn freq_weight(&self) -> f64 {
        let tr = self.time_rate();
        tr * tr
    }
}

/// Σ_k ‖D_kΦ_λ‖²: the regularized variance rate that increases to σ² as
/// λ (and its coupled ε) go to zero.
pub fn sigma2_lambda(model: &CovarianceModel, spec: &CorrectorSpec) -> Result<QuadratureResult> {
    let d = model.d();
    let lambda = spec.lambda;
    let w = spec.freq_weight();
    let r = integrate_spectral(
        |xi0, xi| {
            let k2: f64 = xi.iter().map(|c| c * c).sum();
            let p = lambda + 0.5 * k2;
            k2 * spectral_density(model, xi0.abs(), k2.sqrt()) / (p * p + xi0 * xi0 * w)
        },
        d,
        SpectralSymmetry::Isotropic,
        &outer_spec(),
    )?;
    Ok(scale_result(r, two_pi_pow(d)))
}

/// λ⟨Φ_λ, Φ_λ⟩: the corrector's weighted norm, vanishing as λ → 0 in d ≥ 3.
pub fn corrector_norm(model: &CovarianceModel, spec: &CorrectorSpec) -> Result<QuadratureResult> {
    let d = model.d();
    let lambda = spec.lambda;
    let w = spec.freq_weight();
    let r = integrate_spectral(
        |xi0, xi| {
            let k2: f64 = xi.iter().map(|c| c * c).sum();
            let p = lambda + 0.5 * k2;
            lambda * spectral_density(model, xi0.abs(), k2.sqrt()) / (p * p + xi0 * xi0 * w)
        },
        d,
        SpectralSymmetry::Isotropic,
        &outer_spec(),
    )?;
    Ok(scale_result(r, two_pi_pow(d)))
}

/// Corrector value with every derivative the decomposition needs.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectorValue {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub time_deriv: f64,
    pub laplacian: f64,
}

/// Per-mode resolvent action on a harmonic field.  For the mode
/// amp·cos(ωt + k·x + θ) the corrector contribution is
/// Re[amp·e^{iφ}/(λ + ½|k|² − iωε^{2−α})]; everything else is its exact
/// derivative.
pub struct CorrectorOperator<'a> {
    field: &'a crate::field::HarmonicField,
    spec: CorrectorSpec,
    /// Per mode: amp·(λ+½|k|²)/den and amp·ωε^{2−α}/den.
    cp: Vec<f64>,
    cq: Vec<f64>,
}

impl<'a> CorrectorOperator<'a> {
    pub fn new(sampler: &'a FieldSampler, spec: &CorrectorSpec) -> Result<Self> {
        let field = sampler.as_harmonic().ok_or_else(|| {
            Error::UnsupportedBackend(
                "the corrector needs per-mode frequencies; only the harmonic \
                 backend carries them"
                    .into(),
            )
        })?;
        let tr = spec.time_rate();
        let j = field.n_modes();
        let mut cp = Vec::with_capacity(j);
        let mut cq = Vec::with_capacity(j);
        for m in 0..j {
            let (omega, k, amp, _) = field.mode(m);
            let k2: f64 = k.iter().map(|c| c * c).sum();
            let p = spec.lambda + 0.5 * k2;
            let q = omega * tr;
            let den = p * p + q * q;
            cp.push(amp * p / den);
            cq.push(amp * q / den);
        }
        Ok(Self {
            field,
            spec: *spec,
            cp,
            cq,
        })
    }

    pub fn d(&self) -> usize {
        self.field.d()
    }

    /// Value, time derivative, and Laplacian; the gradient accumulates into
    /// `grad` (length d, zeroed here).
    pub fn eval_into(&self, t: f64, x: &[f64], grad: &mut [f64]) -> (f64, f64, f64) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        let mut time_deriv = 0.0;
        let mut laplacian = 0.0;
        for m in 0..self.field.n_modes() {
            let (omega, k, _, theta) = self.field.mode(m);
            let mut phase = omega * t + theta;
            for (kc, xc) in k.iter().zip(x) {
                phase += kc * xc;
            }
            let (sin, cos) = phase.sin_cos();
            let even = self.cp[m] * cos - self.cq[m] * sin;
            let odd = -self.cp[m] * sin - self.cq[m] * cos;
            let k2: f64 = k.iter().map(|c| c * c).sum();
            value += even;
            time_deriv += omega * odd;
            laplacian -= k2 * even;
            for (g, kc) in grad.iter_mut().zip(k) {
                *g += kc * odd;
            }
        }
        (value, time_deriv, laplacian)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> CorrectorValue {
        let mut grad = vec![0.0; self.d()];
        let (value, time_deriv, laplacian) = self.eval_into(t, x, &mut grad);
        CorrectorValue {
            value,
            gradient: grad,
            time_deriv,
            laplacian,
        }
    }

    /// |(λ − ε^{2−α}∂_t − ½Δ)Φ − V| at one point, from analytic derivatives.
    pub fn resolvent_residual(&self, sampler: &FieldSampler, t: f64, x: &[f64]) -> f64 {
        let mut grad = vec![0.0; self.d()];
        let (value, time_deriv, laplacian) = self.eval_into(t, x, &mut grad);
        let lhs = self.spec.lambda * value - self.spec.time_rate() * time_deriv - 0.5 * laplacian;
        (lhs - sampler.eval(t, x)).abs()
    }
}

pub fn corrector_eval(
    sampler: &FieldSampler,
    spec: &CorrectorSpec,
    t: f64,
    x: &[f64],
) -> Result<CorrectorValue> {
    Ok(CorrectorOperator::new(sampler, spec)?.eval(t, x))
}

/// Per-path split of the scenery value into the corrector remainder and the
/// martingale part.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionResult {
    pub x_value: f64,
    pub r_term: f64,
    pub m_term: f64,
    /// X − R − M; pure time-discretization error.
    pub residual: f64,
}

/// Itô decomposition of X_ε(t) along one path in the slow-time regime:
/// R collects the λ∫Φ term and the endpoint corrector values, M is the
/// left-endpoint stochastic sum of the corrector gradient.
pub fn martingale_decompose(
    sampler: &FieldSampler,
    path: &BrownianPath,
    spec: &CorrectorSpec,
    t: f64,
) -> Result<DecompositionResult> {
    let op = CorrectorOperator::new(sampler, spec)?;
    if path.d() != op.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    let eps = spec.epsilon;
    let regime = SceneryRegime::space_mixing(spec.alpha, eps)?;
    let x_value = scenery_integral(sampler, path, &regime, t)?;

    let s_end = t / (eps * eps);
    let dt = path.dt();
    let n_full = (((s_end / dt) + 1e-9).floor() as usize).min(path.n_steps());
    let rem = s_end - n_full as f64 * dt;
    let partial = rem > 1e-12 * dt;
    let time_rate = spec.time_rate();
    let d = path.d();

    let mut grad = vec![0.0; d];
    let mut end_pos = vec![0.0; d];
    let mut phi_sum = 0.0;
    let mut m_sum = 0.0;
    for i in 0..n_full {
        let s = i as f64 * dt;
        let here = path.node(i);
        let (phi, _, _) = op.eval_into(time_rate * s, here, &mut grad);
        phi_sum += dt * phi;
        let next = path.node(i + 1);
        for c in 0..d {
            m_sum += grad[c] * (next[c] - here[c]);
        }
    }
    if partial {
        let s = n_full as f64 * dt;
        let here = path.node(n_full);
        let (phi, _, _) = op.eval_into(time_rate * s, here, &mut grad);
        phi_sum += rem * phi;
        path_position(path, s_end, &mut end_pos);
        for c in 0..d {
            m_sum += grad[c] * (end_pos[c] - here[c]);
        }
    } else {
        end_pos.copy_from_slice(path.node(n_full));
    }

    let (phi_start, _, _) = op.eval_into(0.0, path.node(0), &mut grad);
    let (phi_end, _, _) = op.eval_into(time_rate * s_end, &end_pos, &mut grad);
    let r_term = eps * (spec.lambda * phi_sum - phi_end + phi_start);
    let m_term = eps * m_sum;
    Ok(DecompositionResult {
        x_value,
        r_term,
        m_term,
        residual: x_value - r_term - m_term,
    })
}

/// Realized quadratic variation of the martingale part:
/// ε² Σ_steps Σ_k (D_kΦ)²·Δs.  Its ensemble mean is σ_λ²·t.
pub fn quadratic_variation(
    sampler: &FieldSampler,
    path: &BrownianPath,
    spec: &CorrectorSpec,
    t: f64,
) -> Result<f64> {
    let op = CorrectorOperator::new(sampler, spec)?;
    if path.d() != op.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    let eps = spec.epsilon;
    let s_end = t / (eps * eps);
    if path.horizon() < s_end * (1.0 - 1e-12) {
        return Err(Error::domain("path horizon too short for this t"));
    }
    let time_rate = spec.time_rate();
    let dt = path.dt();
    let n_full = (((s_end / dt) + 1e-9).floor() as usize).min(path.n_steps());
    let rem = s_end - n_full as f64 * dt;
    let mut grad = vec![0.0; path.d()];
    let mut sum = 0.0;
    for i in 0..n_full {
        let s = i as f64 * dt;
        op.eval_into(time_rate * s, path.node(i), &mut grad);
        sum += dt * grad.iter().map(|g| g * g).sum::<f64>();
    }
    if rem > 1e-12 * dt {
        let s = n_full as f64 * dt;
        op.eval_into(time_rate * s, path.node(n_full), &mut grad);
        sum += rem * grad.iter().map(|g| g * g).sum::<f64>();
    }
    Ok(eps * eps * sum)
}

/// Per-coordinate drift diagnostic ε² ∫ D_kΦ ds; each entry's ensemble mean
/// magnitude shrinks as ε does.
pub fn corrector_drift(
    sampler: &FieldSampler,
    path: &BrownianPath,
    spec: &CorrectorSpec,
    t: f64,
) -> Result<Vec<f64>> {
    let op = CorrectorOperator::new(sampler, spec)?;
    if path.d() != op.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    let eps = spec.epsilon;
    let s_end = t / (eps * eps);
    if path.horizon() < s_end * (1.0 - 1e-12) {
        return Err(Error::domain("path horizon too short for this t"));
    }
    let time_rate = spec.time_rate();
    let dt = path.dt();
    let n_full = (((s_end / dt) + 1e-9).floor() as usize).min(path.n_steps());
    let rem = s_end - n_full as f64 * dt;
    let d = path.d();
    let mut grad = vec![0.0; d];
    let mut sums = vec![0.0; d];
    for i in 0..n_full {
        let s = i as f64 * dt;
        op.eval_into(time_rate * s, path.node(i), &mut grad);
        for c in 0..d {
            sums[c] += dt * grad[c];
        }
    }
    if rem > 1e-12 * dt {
        let s = n_full as f64 * dt;
        op.eval_into(time_rate * s, path.node(n_full), &mut grad);
        for c in 0..d {
            sums[c] += rem * grad[c];
        }
    }
    for v in sums.iter_mut() {
        *v *= eps * eps;
    }
    Ok(sums)
}

/// Linear interpolation of the path at an off-grid time.
fn path_position(path: &BrownianPath, s: f64, out: &mut [f64]) {
    let dt = path.dt();
    let u = (s / dt).clamp(0.0, path.n_steps() as f64);
    let i = (u.floor() as usize).min(path.n_steps() - 1);
    let frac = u - i as f64;
    let a = path.node(i);
    let b = path.node(i + 1);
    for c in 0..out.len() {
        out[c] = a[c] + frac * (b[c] - a[c]);
    }
}
