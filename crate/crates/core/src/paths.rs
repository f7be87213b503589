//! Brownian path ensembles and path functionals of the random field.
//!
//! The central object is the rescaled additive functional
//! X_ε(t) = ε ∫₀^{t/ε²} V(time argument, space argument) ds, where the
//! arguments depend on the scaling regime.  All integrals are midpoint
//! Riemann sums over the path's grid with the path linearized inside each
//! step; all randomness flows through [`RngStream`] so every per-path value
//! is reproducible from (stream, path index) alone.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::covariance::{CovarianceModel, ModelKind};
use crate::field::FieldSampler;
use crate::rng::RngStream;
use crate::stats::ComplexStats;
use crate::{Error, Result};

const MAX_STEPS: f64 = 1e8;

/// Ensemble description: dimension, rescaled horizon (in units of t/ε²),
/// step, path count, and the stream the paths derive from.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathSpec {
    pub d: usize,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub stream: RngStream,
}

impl PathSpec {
    fn validate(&self) -> Result<usize> {
        if self.d == 0 {
            return Err(Error::domain("path dimension must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain("horizon must be positive"));
        }
        if self.n_paths == 0 {
            return Err(Error::domain("need at least one path"));
        }
        let q = self.horizon / self.dt;
        if q > MAX_STEPS {
            return Err(Error::ResourceLimit(format!(
                "horizon/dt = {q:.3e} steps exceeds the {MAX_STEPS:e} guard"
            )));
        }
        Ok(steps_covering(self.horizon, self.dt))
    }
}

/// Smallest step count whose grid covers the given length, tolerating
/// floating-point slop when the length is an exact multiple of dt.
fn steps_covering(length: f64, dt: f64) -> usize {
    let q = length / dt;
    if (q - q.round()).abs() < 1e-9 * q.max(1.0) {
        q.round() as usize
    } else {
        q.ceil() as usize
    }
}

/// Lazy handle: paths are generated on demand, one at a time.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    spec: PathSpec,
    n_steps: usize,
}

pub fn sample_paths(spec: &PathSpec) -> Result<PathEnsemble> {
    let n_steps = spec.validate()?;
    Ok(PathEnsemble { spec: *spec, n_steps })
}

impl PathEnsemble {
    pub fn spec(&self) -> &PathSpec {
        &self.spec
    }

    pub fn n_paths(&self) -> u64 {
        self.spec.n_paths
    }

    /// Path i, reproducible from (stream, i) alone.
    pub fn path(&self, i: u64) -> BrownianPath {
        BrownianPath::generate(self.spec.d, self.spec.dt, self.n_steps, self.spec.stream.derive(i))
    }
}

/// One discretized Brownian path: nodes at multiples of dt, exact
/// N(0, dt·I_d) increments.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    d: usize,
    dt: f64,
    /// (n_steps + 1) nodes, row-major [node][coordinate].
    positions: Vec<f64>,
}

impl BrownianPath {
    fn generate(d: usize, dt: f64, n_steps: usize, stream: RngStream) -> Self {
        let mut rng = stream.rng();
        let sqrt_dt = dt.sqrt();
        let mut positions = vec![0.0; (n_steps + 1) * d];
        for i in 0..n_steps {
            let (prev, next) = positions[i * d..(i + 2) * d].split_at_mut(d);
            for c in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                next[c] = prev[c] + sqrt_dt * g;
            }
        }
        Self { d, dt, positions }
    }

    /// Path frozen at the origin: every node zero.  Deterministic reference
    /// for conditional functionals.
    pub fn at_rest(d: usize, dt: f64, n_steps: usize) -> Result<Self> {
        if d == 0 || n_steps == 0 || !dt.is_finite() || dt <= 0.0 {
            return Err(Error::Domain(
                "resting path needs d >= 1, n_steps >= 1, dt > 0".into(),
            ));
        }
        Ok(Self {
            d,
            dt,
            positions: vec![0.0; (n_steps + 1) * d],
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.positions.len() / self.d - 1
    }

    /// Time length actually covered by the grid.
    pub fn horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    /// Keep every factor-th node: the same Brownian realization on a grid
    /// factor times coarser.  Step count must divide evenly.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 {
            return Err(Error::domain("coarsening factor must be at least 1"));
        }
        let n = self.n_steps();
        if n % factor != 0 {
            return Err(Error::domain(format!(
                "cannot coarsen {n} steps by factor {factor}"
            )));
        }
        let positions = (0..=n / factor)
            .flat_map(|i| self.node(i * factor).iter().copied())
            .collect();
        Ok(BrownianPath {
            d: self.d,
            dt: self.dt * factor as f64,
            positions,
        })
    }

    /// Position linearly interpolated inside a step.
    pub fn lerp_into(&self, s: f64, out: &mut [f64]) {
        let u = (s / self.dt).clamp(0.0, self.n_steps() as f64);
        let i = (u.floor() as usize).min(self.n_steps() - 1);
        let frac = u - i as f64;
        let a = self.node(i);
        let b = self.node(i + 1);
        for c in 0..self.d {
            out[c] = a[c] + frac * (b[c] - a[c]);
        }
    }
}

/// Scaling regime of the scenery integral: which of the field's arguments
/// carries the rescaling and at what rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SceneryRegime {
    kind: RegimeKind,
    alpha: f64,
    epsilon: f64,
}

/// The three integrand shapes.  `TimeMixing`: V(s, ε^β B_s) with
/// β = 1 − 2/α; decorrelation comes from the field's time argument running
/// at full speed.  `SpaceMixing`: V(ε^{2−α} s, B_s); the time argument is
/// slowed and the Brownian motion itself does the mixing.  `WhiteNoise`:
/// V(s, ε B_s), the β → 1 endpoint of `TimeMixing`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegimeKind {
    TimeMixing,
    SpaceMixing,
    WhiteNoise,
}

impl SceneryRegime {
    pub fn time_mixing(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 2.0 && alpha.is_finite()) {
            return Err(Error::domain("time-mixing regime needs alpha > 2"));
        }
        Self::checked(RegimeKind::TimeMixing, alpha, epsilon)
    }

    pub fn space_mixing(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&alpha) {
            return Err(Error::domain("space-mixing regime needs 0 <= alpha <= 2"));
        }
        Self::checked(RegimeKind::SpaceMixing, alpha, epsilon)
    }

    pub fn white_noise(epsilon: f64) -> Result<Self> {
        Self::checked(RegimeKind::WhiteNoise, f64::INFINITY, epsilon)
    }

    fn checked(kind: RegimeKind, alpha: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::domain("epsilon must lie in (0, 1]"));
        }
        Ok(Self { kind, alpha, epsilon })
    }

    pub fn kind(&self) -> RegimeKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Spatial shrinking exponent of the time-mixing regime.
    pub fn beta(&self) -> f64 {
        match self.kind {
            RegimeKind::TimeMixing => 1.0 - 2.0 / self.alpha,
            RegimeKind::WhiteNoise => 1.0,
            RegimeKind::SpaceMixing => 0.0,
        }
    }

    /// (time rate, space scale): the integrand is V(rate·s, scale·B_s).
    pub fn scales(&self) -> (f64, f64) {
        let eps = self.epsilon;
        match self.kind {
            RegimeKind::TimeMixing => (1.0, eps.powf(self.beta())),
            RegimeKind::SpaceMixing => (eps.powf(2.0 - self.alpha), 1.0),
            RegimeKind::WhiteNoise => (1.0, eps),
        }
    }
}

/// Step that resolves the fastest oscillation the regime injects: an eighth
/// of the field's decorrelation time as seen through the time argument, or
/// small enough that one Brownian step moves the space argument a quarter
/// correlation length, whichever binds.
pub fn default_dt(model: &CovarianceModel, regime: &SceneryRegime) -> f64 {
    let (time_rate, space_scale) = regime.scales();
    let dt_time = model.ell_t() / time_rate / 8.0;
    let dx = model.ell_x() / space_scale;
    let dt_space = dx * dx / 16.0;
    dt_time.min(dt_space)
}

/// Midpoint sum of V(rate·s, shift + scale·B_s) over [0, s_end] on the path
/// grid, with a partial final step when s_end falls inside one.  Returns the
/// sum already weighted by step widths (no ε factor).
fn integrand_sum(
    sampler: &FieldSampler,
    path: &BrownianPath,
    time_rate: f64,
    space_scale: f64,
    shift: Option<&[f64]>,
    s_start_node: usize,
    s_end: f64,
) -> f64 {
    let d = path.d();
    let dt = path.dt();
    let n_full = ((s_end / dt) + 1e-9).floor() as usize;
    let n_full = n_full.min(path.n_steps()).max(s_start_node);
    let offset = |c: usize| shift.map_or(0.0, |s| s[c]);
    let mut scratch = vec![0.0; d];
    let mut node_sum = 0.0;
    for i in s_start_node..n_full {
        let mid_t = (i as f64 + 0.5) * dt;
        let a = path.node(i);
        let b = path.node(i + 1);
        for c in 0..d {
            scratch[c] = offset(c) + space_scale * 0.5 * (a[c] + b[c]);
        }
        node_sum += sampler.eval(time_rate * mid_t, &scratch);
    }
    let mut total = dt * node_sum;
    let rem = s_end - n_full as f64 * dt;
    if rem > 1e-12 * dt {
        let mid = n_full as f64 * dt + 0.5 * rem;
        path.lerp_into(mid, &mut scratch);
        for (c, v) in scratch.iter_mut().enumerate() {
            *v = offset(c) + space_scale * *v;
        }
        total += rem * sampler.eval(time_rate * mid, &scratch);
    }
    total
}

/// Midpoint-rule integral of V(rate·s, shift + scale·B_s) over [0, s_end],
/// with no regime weight applied.  The raw primitive behind the scenery
/// functionals, exposed for solvers that scale the result themselves.
pub fn field_line_integral(
    sampler: &FieldSampler,
    path: &BrownianPath,
    time_rate: f64,
    space_scale: f64,
    shift: &[f64],
    s_end: f64,
) -> Result<f64> {
    if sampler.d() != path.d() || shift.len() != path.d() {
        return Err(Error::domain("field, path, and shift dimensions differ"));
    }
    if !(s_end >= 0.0 && s_end.is_finite()) {
        return Err(Error::domain("integration endpoint must be finite and nonnegative"));
    }
    if path.horizon() < s_end * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "path horizon {} is below the requested endpoint {s_end}",
            path.horizon()
        )));
    }
    Ok(integrand_sum(sampler, path, time_rate, space_scale, Some(shift), 0, s_end))
}

/// X_ε(t) for one path: ε times the midpoint sum of the regime's integrand
/// over [0, t/ε²].
pub fn scenery_integral(
    sampler: &FieldSampler,
    path: &BrownianPath,
    regime: &SceneryRegime,
    t: f64,
) -> Result<f64> {
    if sampler.d() != path.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain("time must be positive"));
    }
    let eps = regime.epsilon();
    let s_end = t / (eps * eps);
    if path.horizon() < s_end * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "path horizon {} is below the required t/eps^2 = {s_end}",
            path.horizon()
        )));
    }
    let (time_rate, space_scale) = regime.scales();
    Ok(eps * integrand_sum(sampler, path, time_rate, space_scale, None, 0, s_end))
}

/// Block decomposition of the scenery integral: alternating long blocks and
/// short gaps of lengths ε^{−γ₁} and ε^{−γ₂}, plus the leftover tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BlockSplit {
    /// Contribution of the long blocks.
    pub blocks: f64,
    /// Contribution of the short gaps between blocks.
    pub gaps: f64,
    /// Contribution of [N·Δt, t/ε²].
    pub tail: f64,
    /// Number of complete block+gap periods, floor(t/(ε²Δt)).
    pub n_blocks: u64,
    /// Block-plus-gap period ε^{−γ₁} + ε^{−γ₂}.
    pub delta_t: f64,
    /// Variance asymptotics for the block sums need γ₁ < 1/2; larger values
    /// are allowed for exploration and flagged here instead of rejected.
    pub gamma1_below_half: bool,
}

impl BlockSplit {
    pub fn total(&self) -> f64 {
        self.blocks + self.gaps + self.tail
    }
}

/// Split X_ε(t) into block, gap, and tail contributions.  Boundaries are
/// rounded to the nearest grid node, so the three parts sum to
/// [`scenery_integral`] up to floating-point roundoff.
pub fn block_split(
    sampler: &FieldSampler,
    path: &BrownianPath,
    regime: &SceneryRegime,
    gamma1: f64,
    gamma2: f64,
    t: f64,
) -> Result<BlockSplit> {
    if !(0.0 < gamma2 && gamma2 < gamma1 && gamma1 < 2.0) {
        return Err(Error::domain("need 0 < gamma2 < gamma1 < 2"));
    }
    if sampler.d() != path.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    let eps = regime.epsilon();
    let s_end = t / (eps * eps);
    if path.horizon() < s_end * (1.0 - 1e-12) {
        return Err(Error::domain("path horizon too short for this t"));
    }
    let block_len = eps.powf(-gamma1);
    let gap_len = eps.powf(-gamma2);
    let delta_t = block_len + gap_len;
    let n_blocks = (s_end / delta_t).floor() as u64;
    let (time_rate, space_scale) = regime.scales();
    let dt = path.dt();

    let node_of = |s: f64| -> usize { ((s / dt).round() as usize).min(path.n_steps()) };
    let seg = |from: usize, to: usize| -> f64 {
        if to <= from {
            return 0.0;
        }
        integrand_sum(sampler, path, time_rate, space_scale, None, from, to as f64 * dt)
    };

    let mut blocks = 0.0;
    let mut gaps = 0.0;
    let mut cursor = 0usize;
    for k in 0..n_blocks {
        let start = k as f64 * delta_t;
        let block_end = node_of(start + block_len).max(cursor);
        let gap_end = node_of(start + delta_t).max(block_end);
        blocks += seg(cursor, block_end);
        gaps += seg(block_end, gap_end);
        cursor = gap_end;
    }
    // Tail: from the last rounded boundary to exactly s_end, partial step
    // included, matching scenery_integral's coverage.
    let tail = integrand_sum(sampler, path, time_rate, space_scale, None, cursor, s_end);

    Ok(BlockSplit {
        blocks: eps * blocks,
        gaps: eps * gaps,
        tail: eps * tail,
        n_blocks,
        delta_t,
        gamma1_below_half: gamma1 < 0.5,
    })
}

/// Time average of the slowed observable V(ε^{2−α}s, B_s) over [0, T_run].
pub fn ergodic_average(
    sampler: &FieldSampler,
    path: &BrownianPath,
    epsilon: f64,
    alpha: f64,
    t_run: f64,
) -> Result<f64> {
    if !(0.0..=2.0).contains(&alpha) {
        return Err(Error::domain("ergodic average applies for 0 <= alpha <= 2"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1]"));
    }
    if sampler.d() != path.d() {
        return Err(Error::domain("field and path dimensions differ"));
    }
    if !(t_run > 0.0) || path.horizon() < t_run * (1.0 - 1e-12) {
        return Err(Error::domain("path horizon too short for this T_run"));
    }
    let time_rate = epsilon.powf(2.0 - alpha);
    Ok(integrand_sum(sampler, path, time_rate, 1.0, None, 0, t_run) / t_run)
}

/// Which pair of paths the covariance-overlap functional couples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapMode {
    /// ε^γ ∫∫_{[0,ε^{−γ}]²} R(s−u, ε^β(B_s−B_u)) ds du along one path.
    SamePath { gamma: f64 },
    /// ε² ∫∫_{[0,t/ε²]²} |R(s−u, ε^β(B_s−W_u))| ds du across two
    /// independent paths; consumes paths (2i, 2i+1).  The weight matches
    /// the window so the mean decays like ε^{2−2β} for every β in (0, 1).
    IndependentPaths { t: f64 },
}

/// Double Riemann sum of the field covariance along Brownian paths.  Returns
/// one value per path (same-path mode) or per path pair (independent mode).
pub fn overlap_functional(
    model: &CovarianceModel,
    paths: &PathEnsemble,
    epsilon: f64,
    beta: f64,
    mode: OverlapMode,
) -> Result<Vec<f64>> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(Error::domain("beta must lie in (0, 1)"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain("epsilon must lie in (0, 1]"));
    }
    if model.d() != paths.spec().d {
        return Err(Error::domain("model and path dimensions differ"));
    }
    match mode {
        OverlapMode::SamePath { gamma } => {
            if !(gamma > 0.0) {
                return Err(Error::domain("gamma must be positive"));
            }
            let window = epsilon.powf(-gamma);
            let weight = epsilon.powf(gamma);
            let mut out = Vec::with_capacity(paths.n_paths() as usize);
            for i in 0..paths.n_paths() {
                let p = paths.path(i);
                let (mids, widths) = cell_midpoints(&p, window)?;
                let scale = epsilon.powf(beta);
                let mut sum = 0.0;
                for a in 0..mids.times.len() {
                    // Diagonal counts once, off-diagonal pairs twice.
                    sum += widths[a] * widths[a] * model.amplitude();
                    for b in 0..a {
                        let r = mids.dist(a, b, &mids, scale);
                        let v = pair_cov(model, mids.times[a] - mids.times[b], r);
                        sum += 2.0 * widths[a] * widths[b] * v;
                    }
                }
                out.push(weight * sum);
            }
            Ok(out)
        }
        OverlapMode::IndependentPaths { t } => {
            if !(t > 0.0) {
                return Err(Error::domain("time must be positive"));
            }
            if paths.n_paths() < 2 {
                return Err(Error::domain("independent mode needs at least two paths"));
            }
            let window = t / (epsilon * epsilon);
            let scale = epsilon.powf(beta);
            let mut out = Vec::with_capacity((paths.n_paths() / 2) as usize);
            for i in 0..paths.n_paths() / 2 {
                let p = paths.path(2 * i);
                let q = paths.path(2 * i + 1);
                let (pm, pw) = cell_midpoints(&p, window)?;
                let (qm, qw) = cell_midpoints(&q, window)?;
                let mut sum = 0.0;
                for a in 0..pm.times.len() {
                    for b in 0..qm.times.len() {
                        let r = pm.dist(a, b, &qm, scale);
                        let v = pair_cov(model, pm.times[a] - qm.times[b], r).abs();
                        sum += pw[a] * qw[b] * v;
                    }
                }
                out.push(epsilon * epsilon * sum);
            }
            Ok(out)
        }
    }
}

/// Covariance at a (time lag, spatial distance) pair.
fn pair_cov(model: &CovarianceModel, t_lag: f64, r: f64) -> f64 {
    match model.kind() {
        ModelKind::GaussianSeparable => {
            let lt = t_lag / model.ell_t();
            let lx = r / model.ell_x();
            model.amplitude() * (-0.5 * (lt * lt + lx * lx)).exp()
        }
        ModelKind::TaperedGaussian => model.r_radial(t_lag, r),
    }
}

/// Midpoint times and positions of the cells covering [0, window].
struct CellMidpoints {
    times: Vec<f64>,
    /// Row-major [cell][coordinate].
    positions: Vec<f64>,
    d: usize,
}

impl CellMidpoints {
    /// Scaled distance between cell a of self and cell b of other.
    fn dist(&self, a: usize, b: usize, other: &CellMidpoints, scale: f64) -> f64 {
        let pa = &self.positions[a * self.d..(a + 1) * self.d];
        let pb = &other.positions[b * other.d..(b + 1) * other.d];
        let mut r2 = 0.0;
        for (x, y) in pa.iter().zip(pb) {
            let diff = scale * (x - y);
            r2 += diff * diff;
        }
        r2.sqrt()
    }
}

fn cell_midpoints(path: &BrownianPath, window: f64) -> Result<(CellMidpoints, Vec<f64>)> {
    if path.horizon() < window * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "path horizon {} is below the overlap window {window}",
            path.horizon()
        )));
    }
    let d = path.d();
    let dt = path.dt();
    let n_full = (((window / dt) + 1e-9).floor() as usize).min(path.n_steps());
    let rem = window - n_full as f64 * dt;
    let partial = rem > 1e-12 * dt;
    let n_cells = n_full + usize::from(partial);
    let mut times = Vec::with_capacity(n_cells);
    let mut positions = Vec::with_capacity(n_cells * d);
    let mut widths = Vec::with_capacity(n_cells);
    for i in 0..n_full {
        times.push((i as f64 + 0.5) * dt);
        let a = path.node(i);
        let b = path.node(i + 1);
        for c in 0..d {
            positions.push(0.5 * (a[c] + b[c]));
        }
        widths.push(dt);
    }
    if partial {
        let mid = n_full as f64 * dt + 0.5 * rem;
        times.push(mid);
        let mut scratch = vec![0.0; d];
        path.lerp_into(mid, &mut scratch);
        positions.extend_from_slice(&scratch);
        widths.push(rem);
    }
    Ok((CellMidpoints { times, positions, d }, widths))
}

/// Empirical characteristic function value E[exp(icX)] at one frequency.
#[derive(Debug, Clone, Serialize)]
pub struct CharPoint {
    pub c: f64,
    pub mean: Complex64,
    pub stderr: f64,
}

/// Per-path scenery values with the ensemble statistics derived from them.
#[derive(Debug, Clone, Serialize)]
pub struct SceneryResult {
    pub values: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub char_fn: Vec<CharPoint>,
}

impl SceneryResult {
    /// All statistics recomputed from the per-path values; calling this on
    /// `self.values` reproduces `self` exactly.
    pub fn from_values(values: Vec<f64>, c_grid: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::domain("need at least two per-path values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let char_fn = c_grid
            .iter()
            .map(|&c| {
                let mut cs = ComplexStats::new();
                for &x in &values {
                    cs.push(Complex64::new(0.0, c * x).exp());
                }
                CharPoint {
                    c,
                    mean: cs.mean(),
                    stderr: cs.stderr_re().hypot(cs.stderr_im()),
                }
            })
            .collect();
        Ok(Self {
            values,
            mean,
            variance,
            char_fn,
        })
    }
}
