//! Rough-noise endpoint of the scaling family: the mollified noise
//! covariance, the conditional variance of its Duhamel increment along a
//! fixed path, and Monte Carlo moments of the limiting multiplicative-noise
//! solution, together with the finite-ε solver they are compared against.

use num_complex::Complex64;
use serde::Serialize;

use crate::covariance::CovarianceModel;
use crate::error::Error;
use crate::Result;
use crate::field::FieldSampler;
use crate::fk::{
    dt_bound, fk_sample, solve_u_eps, white_noise_scaling, Alpha, InitialData, SolveSpec,
};
use crate::paths::{sample_paths, BrownianPath, PathSpec};
use crate::rng::RngStream;
use crate::stats::{ComplexStats, MonteCarloEstimate};

/// Mollification scale: a triangular window of width `eps_moll` in the time
/// lag and heat-kernel blur at time `eps_moll` in space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MollifierSpec {
    pub eps_moll: f64,
}

impl MollifierSpec {
    fn validate(&self) -> Result<()> {
        if !(self.eps_moll > 0.0 && self.eps_moll.is_finite()) {
            return Err(Error::domain("mollification scale must be positive and finite"));
        }
        Ok(())
    }
}

/// Triangular time window: mass 1, width eps, mean absolute lag eps/3.
fn window(eps: f64, tau: f64) -> f64 {
    if tau.abs() < eps {
        (eps - tau.abs()) / (eps * eps)
    } else {
        0.0
    }
}

/// Covariance of the mollified noise at lag (dt_lag, dx_lag): the triangular
/// window in time times the heat-smoothed time-integrated covariance in
/// space.  Scaling the value by eps_moll recovers the unsmoothed
/// time-integrated covariance as eps_moll → 0.
pub fn mollified_noise_cov(
    model: &CovarianceModel,
    spec: &MollifierSpec,
    dt_lag: f64,
    dx_lag: &[f64],
) -> Result<f64> {
    spec.validate()?;
    if dx_lag.len() != model.d() {
        return Err(Error::domain("lag dimension differs from the model"));
    }
    if !dt_lag.is_finite() {
        return Err(Error::domain("time lag must be finite"));
    }
    let w = window(spec.eps_moll, dt_lag);
    if w == 0.0 {
        return Ok(0.0);
    }
    let r = dx_lag.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(w * model.r_time_integral_smoothed(r, spec.eps_moll)?)
}

const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Variance of ∫₀ᵗ W_moll(t−s, x+B_s) ds conditioned on the path B.
///
/// The noise covariance is banded in the time lag, so the double integral
/// reduces to 2·∫₀^{min(eps,t)} window(τ)·I(τ) dτ with I(τ) the along-path
/// overlap ∫ smoothed(|B_{s+τ} − B_s|) ds; the lag integral uses three-point
/// Gauss nodes, exact for the frozen path.  Stationarity makes the value
/// independent of x, which therefore does not appear.
pub fn cauchy_variance(
    model: &CovarianceModel,
    spec: &MollifierSpec,
    path: &BrownianPath,
    t: f64,
) -> Result<f64> {
    spec.validate()?;
    let d = model.d();
    if path.d() != d {
        return Err(Error::domain("path dimension differs from the model"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("time must be nonnegative and finite"));
    }
    if t > path.horizon() * (1.0 + 1e-12) {
        return Err(Error::domain("time exceeds the path horizon"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let eps = spec.eps_moll;
    let tau_max = eps.min(t);
    let mut pa = [0.0f64; 4];
    let mut pb = [0.0f64; 4];
    let mut total = 0.0;
    for (xi, wi) in GL3 {
        let tau = tau_max * xi;
        let len = t - tau;
        let n_sub = ((len / path.dt()).ceil() as usize).max(8);
        let h = len / n_sub as f64;
        let mut inner = 0.0;
        for k in 0..n_sub {
            let s = (k as f64 + 0.5) * h;
            path.lerp_into(s, &mut pa[..d]);
            path.lerp_into(s + tau, &mut pb[..d]);
            let r2: f64 = (0..d).map(|c| (pa[c] - pb[c]) * (pa[c] - pb[c])).sum();
            inner += h * model.r_time_integral_smoothed(r2.sqrt(), eps)?;
        }
        total += tau_max * wi * window(eps, tau) * inner;
    }
    Ok(2.0 * total)
}

/// Monte Carlo layout for one limiting moment E ∏ u₀ · ∏ conj(u₀), all
/// factors evaluated at the same (t, x).
#[derive(Debug, Clone, Serialize)]
pub struct MomentSpec {
    /// Number of plain factors.
    pub n1: u32,
    /// Number of conjugated factors.
    pub n2: u32,
    pub n_path_tuples: u64,
    pub t: f64,
    pub x: Vec<f64>,
    /// Step of the macroscopic pair-overlap sums; the finite-ε comparison
    /// refines it to the microscopic clock.
    pub dt: f64,
    pub stream: RngStream,
}

impl MomentSpec {
    fn validate(&self) -> Result<()> {
        if self.n1 + self.n2 == 0 {
            return Err(Error::domain("moment needs at least one factor"));
        }
        if self.n_path_tuples == 0 {
            return Err(Error::domain("need at least one path tuple"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain("time must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt must be positive"));
        }
        if self.x.is_empty() {
            return Err(Error::domain("evaluation point must have at least one component"));
        }
        Ok(())
    }
}

/// Midpoint sum of ∫₀ᵗ R̄(B¹_s − B²_s) ds for one path pair, R̄ the
/// time-integrated covariance.
fn pair_overlap(model: &CovarianceModel, a: &BrownianPath, b: &BrownianPath, t: f64) -> f64 {
    let d = a.d();
    let dt = a.dt();
    let n_full = (t / dt).floor() as usize;
    let mut sum = 0.0;
    for k in 0..n_full {
        let (a0, a1) = (a.node(k), a.node(k + 1));
        let (b0, b1) = (b.node(k), b.node(k + 1));
        let r2: f64 = (0..d)
            .map(|c| {
                let diff = 0.5 * (a0[c] + a1[c]) - 0.5 * (b0[c] + b1[c]);
                diff * diff
            })
            .sum();
        sum += dt * model.r_time_integral_radial(r2.sqrt());
    }
    let rem = t - n_full as f64 * dt;
    if rem > 1e-12 * dt {
        let s_mid = n_full as f64 * dt + 0.5 * rem;
        let mut pa = [0.0f64; 4];
        let mut pb = [0.0f64; 4];
        a.lerp_into(s_mid, &mut pa[..d]);
        b.lerp_into(s_mid, &mut pb[..d]);
        let r2: f64 = (0..d).map(|c| (pa[c] - pb[c]) * (pa[c] - pb[c])).sum();
        sum += rem * model.r_time_integral_radial(r2.sqrt());
    }
    sum
}

/// Moment of the limiting solution by its path representation: the average
/// over independent (n1 + n2)-tuples of Brownian paths of
/// ∏ f(x + Bʲ_t) · exp(−½ ΣΣ b_m b_n ∫ R̄(Bᵐ − Bⁿ)), with b = +1 on plain
/// and −1 on conjugated factors.  The integrand is real, so the imaginary
/// part is exactly zero and conjugating the moment is a sign-bookkeeping
/// identity rather than a numerical one.
pub fn limit_moment(
    model: &CovarianceModel,
    f: &InitialData,
    spec: &MomentSpec,
) -> Result<MonteCarloEstimate> {
    spec.validate()?;
    f.validate()?;
    let d = model.d();
    if spec.x.len() != d {
        return Err(Error::domain("evaluation point dimension differs from the model"));
    }
    if let Some(fd) = f.dim() {
        if fd != d {
            return Err(Error::domain("initial data dimension differs from the model"));
        }
    }
    let n = (spec.n1 + spec.n2) as usize;
    let r0 = model.r_time_integral_radial(0.0);
    let ens = sample_paths(&PathSpec {
        d,
        horizon: spec.t,
        dt: spec.dt,
        n_paths: spec.n_path_tuples * n as u64,
        stream: spec.stream,
    })?;
    let mut stats = ComplexStats::new();
    let mut tuple: Vec<BrownianPath> = Vec::with_capacity(n);
    let mut terminal = vec![0.0; d];
    for i in 0..spec.n_path_tuples {
        tuple.clear();
        for j in 0..n as u64 {
            tuple.push(ens.path(i * n as u64 + j));
        }
        // Diagonal pairs contribute b_j² R̄(0) t each; off-diagonal pairs
        // come in ordered twins, hence the single signed term per pair.
        let mut exponent = -0.5 * n as f64 * r0 * spec.t;
        for m in 0..n {
            for p in (m + 1)..n {
                let same_group = (m < spec.n1 as usize) == (p < spec.n1 as usize);
                let sign = if same_group { 1.0 } else { -1.0 };
                exponent -= sign * pair_overlap(model, &tuple[m], &tuple[p], spec.t);
            }
        }
        let mut product = 1.0;
        for path in &tuple {
            path.lerp_into(spec.t, &mut terminal);
            for (tc, xc) in terminal.iter_mut().zip(&spec.x) {
                *tc += xc;
            }
            product *= f.eval(&terminal);
        }
        stats.push(Complex64::new(product * exponent.exp(), 0.0));
    }
    Ok(MonteCarloEstimate::from_stats(&stats, spec.stream))
}

/// Oscillatory solver specialized to the white-noise scaling, with the step
/// chosen from the sampler's realized correlation scales (capped so the
/// horizon keeps at least 32 steps).
pub fn u_eps_alpha_inf(
    sampler: &FieldSampler,
    f: &InitialData,
    t: f64,
    x: &[f64],
    epsilon: f64,
    n_paths: u64,
    stream: RngStream,
) -> Result<MonteCarloEstimate> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1]"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("time must be positive"));
    }
    let sc = white_noise_scaling(t, epsilon, x);
    let s_end = t / epsilon;
    let mut dt = dt_bound(sampler, &sc).min(s_end / 32.0);
    if !(dt.is_finite() && dt > 0.0) {
        dt = s_end / 32.0;
    }
    solve_u_eps(
        sampler,
        f,
        &SolveSpec {
            epsilon,
            alpha: Alpha::Infinite,
            t,
            x: x.to_vec(),
            n_paths,
            dt,
            stream,
        },
    )
}

/// ε-level moment on one field realization: the tuple average of
/// ∏ f(x + √ε Wʲ)·e^{±i√ε ∫ V}.  Field-to-field statistics live one level
/// up, in `moment_compare`.
fn moment_eps(
    sampler: &FieldSampler,
    f: &InitialData,
    spec: &MomentSpec,
    epsilon: f64,
    stream: RngStream,
) -> Result<Complex64> {
    let d = sampler.d();
    let sc = white_noise_scaling(spec.t, epsilon, &spec.x);
    let s_end = spec.t / epsilon;
    let mut dt = (spec.dt / epsilon).min(dt_bound(sampler, &sc));
    if !(dt.is_finite() && dt > 0.0) {
        dt = s_end / 32.0;
    }
    let n = (spec.n1 + spec.n2) as usize;
    let ens = sample_paths(&PathSpec {
        d,
        horizon: s_end,
        dt,
        n_paths: spec.n_path_tuples * n as u64,
        stream,
    })?;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut terminal = vec![0.0; d];
    for i in 0..spec.n_path_tuples {
        let mut product = Complex64::new(1.0, 0.0);
        for j in 0..n {
            let path = ens.path(i * n as u64 + j as u64);
            let z = fk_sample(sampler, f, &sc, &spec.x, &path, &mut terminal)?;
            product *= if j < spec.n1 as usize { z } else { z.conj() };
        }
        acc += product;
    }
    Ok(acc / spec.n_path_tuples as f64)
}

/// One ε row of a moment comparison.  Moment statistics are over field
/// realizations; the limit columns repeat the ε-independent reference.
#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub epsilon: f64,
    pub n1: u32,
    pub n2: u32,
    pub re_moment: f64,
    pub im_moment: f64,
    pub re_stderr: f64,
    pub im_stderr: f64,
    pub limit_re: f64,
    pub limit_im: f64,
    pub limit_stderr: f64,
    pub abs_diff: f64,
    pub n_fields: u64,
}

/// Compare finite-ε moments against their limits, one row per (layout, ε).
///
/// Every tuple inside a field shares that field realization, so the ε-level
/// columns estimate E_field E_paths of the factor product; rows are ordered
/// layout-major, ε-minor, and depend only on the specs and schedule.
pub fn moment_compare(
    factory: &dyn Fn(RngStream) -> Result<FieldSampler>,
    model: &CovarianceModel,
    f: &InitialData,
    specs: &[MomentSpec],
    eps_schedule: &[f64],
    n_fields: u64,
) -> Result<Vec<MomentRow>> {
    if specs.is_empty() {
        return Err(Error::domain("need at least one moment layout"));
    }
    if eps_schedule.is_empty() {
        return Err(Error::domain("epsilon schedule must not be empty"));
    }
    for &e in eps_schedule {
        if !(e > 0.0 && e <= 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1]"));
        }
    }
    for w in eps_schedule.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::domain("epsilon schedule must be strictly decreasing"));
        }
    }
    if n_fields < 2 {
        return Err(Error::domain("need at least two field realizations"));
    }
    let mut rows = Vec::with_capacity(specs.len() * eps_schedule.len());
    for spec in specs {
        let limit = limit_moment(model, f, spec)?;
        let limit_stderr = limit.combined_stderr();
        for (e_idx, &eps) in eps_schedule.iter().enumerate() {
            // Row ids count down from the top of the id space so they can
            // never collide with the tuple ids used by limit_moment.
            let row_stream = spec.stream.derive(u64::MAX - e_idx as u64);
            let mut stats = ComplexStats::new();
            for k in 0..n_fields {
                let sampler = factory(row_stream.derive(k))?;
                if sampler.d() != model.d() {
                    return Err(Error::domain("factory dimension differs from the model"));
                }
                stats.push(moment_eps(
                    &sampler,
                    f,
                    spec,
                    eps,
                    row_stream.derive(1_000_000_000 + k),
                )?);
            }
            let mean = stats.mean();
            rows.push(MomentRow {
                epsilon: eps,
                n1: spec.n1,
                n2: spec.n2,
                re_moment: mean.re,
                im_moment: mean.im,
                re_stderr: stats.stderr_re(),
                im_stderr: stats.stderr_im(),
                limit_re: limit.mean.re,
                limit_im: limit.mean.im,
                limit_stderr,
                abs_diff: (mean - limit.mean).norm(),
                n_fields,
            });
        }
    }
    Ok(rows)
}
