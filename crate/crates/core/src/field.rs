//! Concrete realizations of the stationary mean-zero random field V(t, x).
//!
//! Two backends with complementary fidelity.  The harmonic backend is a
//! finite superposition of cosines with random frequencies and phases: it is
//! uniformly bounded and its ensemble covariance equals the target exactly
//! for every mode count, but it has long-range dependence.  The grid backend
//! synthesizes a Gaussian field on a periodic space-time lattice from the
//! discrete spectrum: Wick moments are exact and, with the tapered model,
//! dependence has finite range, but values are unbounded.  No single
//! construction does everything at once; callers pick per use.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, ModelKind};
use crate::numerics::standard_normal_quantile;
use crate::rng::RngStream;
use crate::stats::RunningStats;
use crate::{Error, Result};

/// Superposition of J cosine modes; stationary and mean-zero over the phase
/// distribution, bounded by sqrt(2 A J).
#[derive(Debug, Clone)]
pub struct HarmonicField {
    d: usize,
    omegas: Vec<f64>,
    wavevecs: Vec<f64>, // J x d, row-major
    amps: Vec<f64>,
    thetas: Vec<f64>,
}

impl HarmonicField {
    /// Draw J modes from the model's normalized spectrum.  Requires the
    /// separable gaussian model: its spectrum factorizes per coordinate, so
    /// frequencies come from exact inverse-transform sampling.
    pub fn synth(model: &CovarianceModel, j_modes: usize, stream: RngStream) -> Result<Self> {
        if j_modes == 0 {
            return Err(Error::domain("mode count must be at least 1"));
        }
        if model.kind() != ModelKind::GaussianSeparable {
            return Err(Error::UnsupportedBackend(
                "harmonic synthesis needs the closed-form separable spectrum; \
                 use the grid backend for tapered models"
                    .into(),
            ));
        }
        let d = model.d();
        let mut rng = stream.rng();
        let amp = (2.0 * model.amplitude() / j_modes as f64).sqrt();
        let mut omegas = Vec::with_capacity(j_modes);
        let mut wavevecs = Vec::with_capacity(j_modes * d);
        let mut thetas = Vec::with_capacity(j_modes);
        for _ in 0..j_modes {
            omegas.push(standard_normal_quantile(open_unit(&mut rng)) / model.ell_t());
            for _ in 0..d {
                wavevecs.push(standard_normal_quantile(open_unit(&mut rng)) / model.ell_x());
            }
            thetas.push(std::f64::consts::TAU * rng.gen::<f64>());
        }
        Ok(Self {
            d,
            omegas,
            wavevecs,
            amps: vec![amp; j_modes],
            thetas,
        })
    }

    /// Single zero-frequency mode: V identically equal to c.
    pub fn constant(c: f64, d: usize) -> Self {
        Self {
            d,
            omegas: vec![0.0],
            wavevecs: vec![0.0; d],
            amps: vec![c],
            thetas: vec![0.0],
        }
    }

    /// Field with explicitly chosen modes.
    pub fn from_modes(d: usize, modes: &[ModeSpec]) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::domain("need at least one mode"));
        }
        let mut omegas = Vec::with_capacity(modes.len());
        let mut wavevecs = Vec::with_capacity(modes.len() * d);
        let mut amps = Vec::with_capacity(modes.len());
        let mut thetas = Vec::with_capacity(modes.len());
        for m in modes {
            if m.wavevec.len() != d {
                return Err(Error::domain("wave vector length must equal d"));
            }
            omegas.push(m.omega);
            wavevecs.extend_from_slice(&m.wavevec);
            amps.push(m.amp);
            thetas.push(m.theta);
        }
        Ok(Self {
            d,
            omegas,
            wavevecs,
            amps,
            thetas,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    /// (omega, wave vector, amplitude, phase) of mode j.
    pub fn mode(&self, j: usize) -> (f64, &[f64], f64, f64) {
        (
            self.omegas[j],
            &self.wavevecs[j * self.d..(j + 1) * self.d],
            self.amps[j],
            self.thetas[j],
        )
    }

    /// Everywhere-valid bound: |V| <= sum of mode amplitudes.
    pub fn sup_bound(&self) -> f64 {
        self.amps.iter().sum()
    }

    /// Correlation scales (time, space) implied by the realized modes: the
    /// reciprocal RMS frequency per argument.  Infinite when the field does
    /// not vary in that argument.
    pub fn correlation_scales(&self) -> (f64, f64) {
        let j = self.omegas.len() as f64;
        let mean_w2 = self.omegas.iter().map(|w| w * w).sum::<f64>() / j;
        let mean_k2 = self.wavevecs.iter().map(|k| k * k).sum::<f64>() / j;
        let time = if mean_w2 > 0.0 { mean_w2.sqrt().recip() } else { f64::INFINITY };
        let space = if mean_k2 > 0.0 {
            (self.d as f64 / mean_k2).sqrt()
        } else {
            f64::INFINITY
        };
        (time, space)
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        let d = self.d;
        let mut sum = 0.0;
        for j in 0..self.omegas.len() {
            let mut phase = self.omegas[j] * t + self.thetas[j];
            let row = &self.wavevecs[j * d..(j + 1) * d];
            for (kc, xc) in row.iter().zip(x) {
                phase += kc * xc;
            }
            sum += self.amps[j] * phase.cos();
        }
        sum
    }
}

/// One cosine mode of a [`HarmonicField`].
#[derive(Debug, Clone)]
pub struct ModeSpec {
    pub omega: f64,
    pub wavevec: Vec<f64>,
    pub amp: f64,
    pub theta: f64,
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    // Rejects the measure-zero endpoints so the normal quantile stays finite.
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 && u < 1.0 {
            return u;
        }
    }
}

/// Periodic space-time lattice for grid synthesis.  Axis 0 is time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub periods: Vec<f64>,
    pub spacings: Vec<f64>,
}

impl GridSpec {
    /// Uniform spec: one period/spacing for the time axis and one shared by
    /// all spatial axes.
    pub fn uniform(d: usize, period_t: f64, spacing_t: f64, period_x: f64, spacing_x: f64) -> Self {
        let mut periods = vec![period_t];
        let mut spacings = vec![spacing_t];
        periods.extend(std::iter::repeat(period_x).take(d));
        spacings.extend(std::iter::repeat(spacing_x).take(d));
        Self { periods, spacings }
    }

    fn validate(&self, model: &CovarianceModel) -> Result<Vec<usize>> {
        let d = model.d();
        if self.periods.len() != d + 1 || self.spacings.len() != d + 1 {
            return Err(Error::domain("grid spec needs d+1 periods and spacings"));
        }
        let mut shape = Vec::with_capacity(d + 1);
        for (axis, (&p, &h)) in self.periods.iter().zip(&self.spacings).enumerate() {
            if !(p > 0.0 && h > 0.0 && p.is_finite() && h.is_finite()) {
                return Err(Error::domain("periods and spacings must be positive"));
            }
            let ell = if axis == 0 { model.ell_t() } else { model.ell_x() };
            if p < 8.0 * ell {
                return Err(Error::domain(format!(
                    "axis {axis}: period {p} is below 8 correlation lengths"
                )));
            }
            if h > ell / 4.0 + 1e-12 {
                return Err(Error::domain(format!(
                    "axis {axis}: spacing {h} exceeds a quarter correlation length"
                )));
            }
            let n = (p / h).round() as usize;
            if n < 2 {
                return Err(Error::domain("grid axis needs at least 2 nodes"));
            }
            shape.push(n);
        }
        if let Some(m) = model.taper_radius() {
            for &p in &self.periods {
                if p < 2.0 * m {
                    return Err(Error::Synthesis(format!(
                        "period {p} is below twice the taper radius {m}; \
                         the nearest-image covariance would be wrong"
                    )));
                }
            }
        }
        let total: usize = shape.iter().product();
        if total > 1 << 26 {
            return Err(Error::ResourceLimit(format!(
                "grid has {total} nodes; refusing above {}",
                1 << 26
            )));
        }
        Ok(shape)
    }
}

/// Gaussian field sampled on a periodic lattice, multilinearly interpolated
/// in between.  Lattice covariance equals the periodization of the model's R.
#[derive(Debug, Clone)]
pub struct GridField {
    model: CovarianceModel,
    shape: Vec<usize>,
    periods: Vec<f64>,
    spacings: Vec<f64>,
    values: Vec<f64>,
    stream: RngStream,
}

impl GridField {
    pub fn synth(model: &CovarianceModel, grid: &GridSpec, stream: RngStream) -> Result<Self> {
        Ok(Self::synth_pair(model, grid, stream)?.0)
    }

    /// One spectral synthesis yields two independent realizations (real and
    /// imaginary parts of the complex inverse transform); ensemble loops
    /// should consume both.
    pub fn synth_pair(
        model: &CovarianceModel,
        grid: &GridSpec,
        stream: RngStream,
    ) -> Result<(Self, Self)> {
        let shape = grid.validate(model)?;
        let spacings: Vec<f64> = shape
            .iter()
            .zip(&grid.periods)
            .map(|(&n, &p)| p / n as f64)
            .collect();
        let spectrum = discrete_spectrum(model, &shape, &spacings)?;
        let n_total: usize = shape.iter().product();

        let mut rng = stream.rng();
        let mut buf: Vec<Complex64> = spectrum
            .iter()
            .map(|&s| {
                let xi: f64 = rng.sample(StandardNormal);
                let eta: f64 = rng.sample(StandardNormal);
                s.sqrt() * Complex64::new(xi, eta)
            })
            .collect();
        fft_nd(&mut buf, &shape, true);

        let scale = 1.0 / (n_total as f64).sqrt();
        let re: Vec<f64> = buf.iter().map(|z| z.re * scale).collect();
        let im: Vec<f64> = buf.iter().map(|z| z.im * scale).collect();
        let mk = |values: Vec<f64>| Self {
            model: model.clone(),
            shape: shape.clone(),
            periods: grid.periods.clone(),
            spacings: spacings.clone(),
            values,
            stream,
        };
        Ok((mk(re), mk(im)))
    }

    pub fn model(&self) -> &CovarianceModel {
        &self.model
    }

    pub fn d(&self) -> usize {
        self.shape.len() - 1
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a lattice node given by per-axis indices.
    pub fn node_value(&self, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for (axis, &i) in idx.iter().enumerate() {
            flat = flat * self.shape[axis] + (i % self.shape[axis]);
        }
        self.values[flat]
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.d());
        let rank = self.shape.len();
        let mut base = [0usize; 5];
        let mut frac = [0.0f64; 5];
        for axis in 0..rank {
            let coord = if axis == 0 { t } else { x[axis - 1] };
            let n = self.shape[axis];
            let u = (coord / self.spacings[axis]).rem_euclid(n as f64);
            let i = u.floor() as usize;
            base[axis] = i.min(n - 1);
            frac[axis] = u - i as f64;
        }
        // Multilinear blend over the 2^rank surrounding nodes.
        let mut acc = 0.0;
        for corner in 0..(1usize << rank) {
            let mut weight = 1.0;
            let mut flat = 0;
            for axis in 0..rank {
                let n = self.shape[axis];
                let up = (corner >> axis) & 1 == 1;
                weight *= if up { frac[axis] } else { 1.0 - frac[axis] };
                let i = if up { (base[axis] + 1) % n } else { base[axis] };
                flat = flat * n + i;
            }
            acc += weight * self.values[flat];
        }
        acc
    }

    /// Serialize to a self-describing binary container.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let header = GridHeader {
            model: self.model.clone(),
            shape: self.shape.clone(),
            periods: self.periods.clone(),
            spacings: self.spacings.clone(),
            stream: self.stream,
        };
        let header_bytes = serde_json::to_vec(&header)?;
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        w.write_all(&header_bytes)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Format("not a grid field container".into()));
        }
        let mut len_bytes = [0u8; 8];
        r.read_exact(&mut len_bytes)?;
        let header_len = u64::from_le_bytes(len_bytes) as usize;
        if header_len > 1 << 20 {
            return Err(Error::Format("unreasonable header length".into()));
        }
        let mut header_bytes = vec![0u8; header_len];
        r.read_exact(&mut header_bytes)?;
        let header: GridHeader = serde_json::from_slice(&header_bytes)?;
        let n_total: usize = header.shape.iter().product();
        let mut values = vec![0.0f64; n_total];
        let mut chunk = [0u8; 8];
        for v in values.iter_mut() {
            r.read_exact(&mut chunk)?;
            *v = f64::from_le_bytes(chunk);
        }
        Ok(Self {
            model: header.model,
            shape: header.shape,
            periods: header.periods,
            spacings: header.spacings,
            values,
            stream: header.stream,
        })
    }
}

const GRID_MAGIC: &[u8; 8] = b"SHGRIDF1";

#[derive(Serialize, Deserialize)]
struct GridHeader {
    model: CovarianceModel,
    shape: Vec<usize>,
    periods: Vec<f64>,
    spacings: Vec<f64>,
    stream: RngStream,
}

/// Periodized lattice covariance, flat in row-major order.
fn periodized_covariance(model: &CovarianceModel, shape: &[usize], spacings: &[f64]) -> Vec<f64> {
    match model.kind() {
        ModelKind::GaussianSeparable => {
            // Separable: the periodization is the product of per-axis
            // periodized one-dimensional factors.
            let axes: Vec<Vec<f64>> = shape
                .iter()
                .zip(spacings)
                .enumerate()
                .map(|(axis, (&n, &h))| {
                    let ell = if axis == 0 { model.ell_t() } else { model.ell_x() };
                    let p = n as f64 * h;
                    (0..n)
                        .map(|i| {
                            let base = i as f64 * h;
                            (-4..=4i64)
                                .map(|m| {
                                    let lag = base + m as f64 * p;
                                    (-0.5 * (lag / ell).powi(2)).exp()
                                })
                                .sum()
                        })
                        .collect()
                })
                .collect();
            let n_total: usize = shape.iter().product();
            let mut c = vec![model.amplitude(); n_total];
            for flat in 0..n_total {
                let mut rem = flat;
                for axis in (0..shape.len()).rev() {
                    let i = rem % shape[axis];
                    rem /= shape[axis];
                    c[flat] *= axes[axis][i];
                }
            }
            c
        }
        ModelKind::TaperedGaussian => {
            // Compact support inside half a period: the nearest image is the
            // whole periodization, exactly.
            let n_total: usize = shape.iter().product();
            let mut c = vec![0.0; n_total];
            for (flat, slot) in c.iter_mut().enumerate() {
                let mut rem = flat;
                let mut t_lag = 0.0;
                let mut r2 = 0.0;
                for axis in (0..shape.len()).rev() {
                    let i = rem % shape[axis];
                    rem /= shape[axis];
                    let p = shape[axis] as f64 * spacings[axis];
                    let mut lag = i as f64 * spacings[axis];
                    if lag > 0.5 * p {
                        lag -= p;
                    }
                    if axis == 0 {
                        t_lag = lag;
                    } else {
                        r2 += lag * lag;
                    }
                }
                *slot = model.r_radial(t_lag, r2.sqrt());
            }
            c
        }
    }
}

/// DFT of the periodized covariance with tiny negative entries clipped.
/// Genuinely negative entries mean the model cannot live on this lattice.
fn discrete_spectrum(
    model: &CovarianceModel,
    shape: &[usize],
    spacings: &[f64],
) -> Result<Vec<f64>> {
    let c = periodized_covariance(model, shape, spacings);
    let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, shape, false);
    let max = buf.iter().map(|z| z.re).fold(0.0f64, f64::max);
    let floor = -1e-9 * max;
    let mut spectrum = Vec::with_capacity(buf.len());
    for z in &buf {
        if z.re < floor {
            return Err(Error::Synthesis(format!(
                "discrete spectrum entry {:.3e} below the clip floor {:.3e}; \
                 model and lattice are incompatible",
                z.re, floor
            )));
        }
        spectrum.push(z.re.max(0.0));
    }
    Ok(spectrum)
}

/// Largest deviation (relative to the zero-lag value) between the periodized
/// covariance and its reconstruction through the clipped discrete spectrum.
/// This is the exactness check for the synthesis covariance: the field's
/// lattice covariance is the reconstruction by construction.
pub fn grid_spectrum_deviation(model: &CovarianceModel, grid: &GridSpec) -> Result<f64> {
    let shape = grid.validate(model)?;
    let spacings: Vec<f64> = shape
        .iter()
        .zip(&grid.periods)
        .map(|(&n, &p)| p / n as f64)
        .collect();
    let c = periodized_covariance(model, &shape, &spacings);
    let spectrum = discrete_spectrum(model, &shape, &spacings)?;
    let mut buf: Vec<Complex64> = spectrum.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    fft_nd(&mut buf, &shape, true);
    let n_total = c.len() as f64;
    let mut worst = 0.0f64;
    for (z, &target) in buf.iter().zip(&c) {
        worst = worst.max((z.re / n_total - target).abs());
    }
    Ok(worst / c[0])
}

/// In-place multidimensional FFT, axis by axis.
fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total);
    let mut stride_after = 1usize;
    for axis in (0..shape.len()).rev() {
        let n = shape[axis];
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let n_lines = total / n;
        for li in 0..n_lines {
            // Decompose the line index into (outer, inner) around this axis.
            let inner = li % stride_after;
            let outer = li / stride_after;
            let base = outer * stride_after * n + inner;
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = data[base + i * stride_after];
            }
            fft.process(&mut line);
            for (i, &v) in line.iter().enumerate() {
                data[base + i * stride_after] = v;
            }
        }
        stride_after *= n;
    }
}

/// Backend-dispatching sampler handle.  Evaluation is pure and deterministic
/// given the construction stream.
#[derive(Debug, Clone)]
pub enum FieldSampler {
    Harmonic(HarmonicField),
    Grid(GridField),
}

impl FieldSampler {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            FieldSampler::Harmonic(h) => h.eval(t, x),
            FieldSampler::Grid(g) => g.eval(t, x),
        }
    }

    pub fn d(&self) -> usize {
        match self {
            FieldSampler::Harmonic(h) => h.d(),
            FieldSampler::Grid(g) => g.d(),
        }
    }

    pub fn as_harmonic(&self) -> Option<&HarmonicField> {
        match self {
            FieldSampler::Harmonic(h) => Some(h),
            FieldSampler::Grid(_) => None,
        }
    }

    /// Correlation scales (time, space) of the realized field, used to judge
    /// step-size adequacy.  Grid fields answer with their model's lengths.
    pub fn correlation_scales(&self) -> (f64, f64) {
        match self {
            FieldSampler::Harmonic(h) => h.correlation_scales(),
            FieldSampler::Grid(g) => (g.model().ell_t(), g.model().ell_x()),
        }
    }
}

/// One covariance estimate at a space-time lag.
#[derive(Debug, Clone, Serialize)]
pub struct CovEstimate {
    pub t_lag: f64,
    pub x_lag: Vec<f64>,
    pub estimate: f64,
    pub stderr: f64,
}

/// Sample covariance at the given lags over independent realizations drawn
/// from the factory.  The fields are mean-zero by construction, so the plain
/// product average is the unbiased estimator.
pub fn empirical_cov(
    factory: &dyn Fn(RngStream) -> Result<FieldSampler>,
    lags: &[(f64, Vec<f64>)],
    n_realizations: u64,
    stream: RngStream,
) -> Result<Vec<CovEstimate>> {
    if n_realizations < 100 {
        return Err(Error::domain("need at least 100 realizations"));
    }
    let mut stats = vec![RunningStats::new(); lags.len()];
    for i in 0..n_realizations {
        let sampler = factory(stream.derive(i))?;
        let zero = vec![0.0; sampler.d()];
        let base = sampler.eval(0.0, &zero);
        for (stat, (t, x)) in stats.iter_mut().zip(lags) {
            stat.push(sampler.eval(*t, x) * base);
        }
    }
    Ok(stats
        .iter()
        .zip(lags)
        .map(|(s, (t, x))| CovEstimate {
            t_lag: *t,
            x_lag: x.clone(),
            estimate: s.mean(),
            stderr: s.stderr(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_gaussian() -> CovarianceModel {
        CovarianceModel::gaussian(1.0, 1.0, 1.0, 3).unwrap()
    }

    fn tapered_2d() -> CovarianceModel {
        static MODEL: std::sync::OnceLock<CovarianceModel> = std::sync::OnceLock::new();
        MODEL
            .get_or_init(|| CovarianceModel::tapered(1.0, 1.0, 1.0, 2, 4.0).unwrap())
            .clone()
    }

    #[test]
    fn single_mode_field_is_one_cosine() {
        let model = unit_gaussian();
        let f = HarmonicField::synth(&model, 1, RngStream::new(42)).unwrap();
        let (_, _, amp, theta) = f.mode(0);
        assert_abs_diff_eq!(amp, 2.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            f.eval(0.0, &[0.0; 3]),
            amp * theta.cos(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn constant_field() {
        let f = HarmonicField::constant(3.25, 3);
        assert_eq!(f.eval(0.0, &[0.0; 3]), 3.25);
        assert_eq!(f.eval(-7.0, &[1.0, 2.0, 3.0]), 3.25);
    }

    #[test]
    fn harmonic_rejects_tapered_model() {
        let model = CovarianceModel::tapered(1.0, 1.0, 1.0, 3, 8.0).unwrap();
        match HarmonicField::synth(&model, 8, RngStream::new(1)) {
            Err(Error::UnsupportedBackend(_)) => {}
            other => panic!("expected unsupported-backend error, got {other:?}"),
        }
    }

    #[test]
    fn harmonic_synthesis_is_deterministic() {
        let model = unit_gaussian();
        let a = HarmonicField::synth(&model, 16, RngStream::new(5).derive(3)).unwrap();
        let b = HarmonicField::synth(&model, 16, RngStream::new(5).derive(3)).unwrap();
        assert_eq!(a.omegas, b.omegas);
        assert_eq!(a.wavevecs, b.wavevecs);
        assert_eq!(a.thetas, b.thetas);
    }

    #[test]
    fn harmonic_bound_holds_everywhere_sampled() {
        let model = CovarianceModel::gaussian(1.7, 1.0, 1.0, 3).unwrap();
        let j = 24;
        let f = HarmonicField::synth(&model, j, RngStream::new(9)).unwrap();
        let exact = (2.0 * 1.7 * j as f64).sqrt();
        assert_abs_diff_eq!(f.sup_bound(), exact, epsilon = 1e-12);
        let mut rng = RngStream::new(10).rng();
        for _ in 0..200 {
            let t: f64 = rng.gen_range(-20.0..20.0);
            let x = [
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            ];
            assert!(f.eval(t, &x).abs() <= f.sup_bound() + 1e-12);
        }
    }

    #[test]
    fn harmonic_ensemble_mean_and_covariance() {
        let model = unit_gaussian();
        let stream = RngStream::new(2024);
        let lags = vec![
            (0.0, vec![0.0; 3]),
            (1.0, vec![0.0; 3]),
            (0.5, vec![0.8, 0.0, 0.0]),
            (0.0, vec![0.0, 1.5, 0.0]),
        ];
        let n = 2000;

        // Mean of V(0,0) over realizations.
        let mut mean_stat = RunningStats::new();
        for i in 0..n {
            let f = HarmonicField::synth(&model, 64, stream.derive(i)).unwrap();
            mean_stat.push(f.eval(0.0, &[0.0; 3]));
        }
        assert!(mean_stat.mean().abs() <= 3.0 * mean_stat.stderr());

        let factory = move |s: RngStream| {
            Ok(FieldSampler::Harmonic(HarmonicField::synth(&model, 64, s)?))
        };
        let est = empirical_cov(&factory, &lags, n, stream).unwrap();
        let model = unit_gaussian();
        for e in &est {
            let target = model.r_eval(e.t_lag, &e.x_lag);
            assert!(
                (e.estimate - target).abs() <= 3.0 * e.stderr,
                "lag ({}, {:?}): {} vs {} (stderr {})",
                e.t_lag,
                e.x_lag,
                e.estimate,
                target,
                e.stderr
            );
        }
    }

    #[test]
    fn harmonic_moments_are_shift_invariant() {
        // Same lag from two different base points: estimates agree within
        // joint error bars.
        let model = unit_gaussian();
        let n = 1500;
        let stream = RngStream::new(77);
        let mut at_origin = RunningStats::new();
        let mut shifted = RunningStats::new();
        for i in 0..n {
            let f = HarmonicField::synth(&model, 32, stream.derive(i)).unwrap();
            at_origin.push(f.eval(1.0, &[0.5, 0.0, 0.0]) * f.eval(0.0, &[0.0; 3]));
            shifted.push(f.eval(4.0, &[2.5, -1.0, 0.7]) * f.eval(3.0, &[2.0, -1.0, 0.7]));
        }
        let gap = (at_origin.mean() - shifted.mean()).abs();
        let band = 3.0 * at_origin.stderr().hypot(shifted.stderr());
        assert!(gap <= band, "gap {gap} exceeds band {band}");
    }

    #[test]
    fn grid_synthesis_is_deterministic() {
        let model = tapered_2d();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let a = GridField::synth(&model, &grid, RngStream::new(3)).unwrap();
        let b = GridField::synth(&model, &grid, RngStream::new(3)).unwrap();
        assert_eq!(a.values, b.values);
        let c = GridField::synth(&model, &grid, RngStream::new(4)).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn grid_eval_is_exact_at_nodes_and_linear_between() {
        let model = tapered_2d();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let f = GridField::synth(&model, &grid, RngStream::new(11)).unwrap();
        let v000 = f.node_value(&[0, 0, 0]);
        assert_eq!(f.eval(0.0, &[0.0, 0.0]), v000);
        let v100 = f.node_value(&[1, 0, 0]);
        assert_eq!(f.eval(0.25, &[0.0, 0.0]), v100);
        // Midpoint along the time axis: arithmetic mean of the two nodes.
        assert_abs_diff_eq!(
            f.eval(0.125, &[0.0, 0.0]),
            0.5 * (v000 + v100),
            epsilon = 1e-14
        );
        // Periodic wrap: one full period back is the same node.
        assert_abs_diff_eq!(f.eval(-8.0, &[0.0, 0.0]), v000, epsilon = 1e-12);
    }

    #[test]
    fn grid_spectrum_reconstruction_is_exact() {
        for model in [
            CovarianceModel::gaussian(1.0, 1.0, 1.0, 2).unwrap(),
            tapered_2d(),
        ] {
            let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
            let dev = grid_spectrum_deviation(&model, &grid).unwrap();
            assert!(dev < 1e-10, "spectrum round trip deviation {dev:e}");
        }
    }

    #[test]
    fn grid_site_variance_matches_amplitude() {
        let model = CovarianceModel::gaussian(1.0, 1.0, 1.0, 2).unwrap();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let stream = RngStream::new(31);
        let mut stat = RunningStats::new();
        for i in 0..250 {
            let (a, b) = GridField::synth_pair(&model, &grid, stream.derive(i)).unwrap();
            stat.push(a.node_value(&[3, 5, 7]).powi(2));
            stat.push(b.node_value(&[3, 5, 7]).powi(2));
        }
        let target = model.amplitude();
        assert!(
            (stat.mean() - target).abs() <= 3.0 * stat.stderr(),
            "variance {} vs {} (stderr {})",
            stat.mean(),
            target,
            stat.stderr()
        );
    }

    #[test]
    fn grid_pair_members_are_uncorrelated() {
        let model = CovarianceModel::gaussian(1.0, 1.0, 1.0, 2).unwrap();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let stream = RngStream::new(57);
        let mut cross = RunningStats::new();
        for i in 0..250 {
            let (a, b) = GridField::synth_pair(&model, &grid, stream.derive(i)).unwrap();
            cross.push(a.node_value(&[1, 2, 3]) * b.node_value(&[1, 2, 3]));
        }
        assert!(cross.mean().abs() <= 3.0 * cross.stderr());
    }

    #[test]
    fn grid_four_point_moment_satisfies_wick_identity() {
        let model = CovarianceModel::gaussian(1.0, 1.0, 1.0, 2).unwrap();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let sites: [[usize; 3]; 4] = [[0, 0, 0], [2, 1, 0], [0, 3, 2], [1, 1, 1]];

        // Analytic pair covariances of the periodized lattice field,
        // computed directly from the model (independent of the synthesis).
        let spacing = 0.25;
        let period = 8.0;
        let pair_cov = |a: &[usize; 3], b: &[usize; 3]| {
            let mut lags = [0.0f64; 3];
            for c in 0..3 {
                let mut lag = (a[c] as f64 - b[c] as f64) * spacing;
                lag = lag.rem_euclid(period);
                if lag > 0.5 * period {
                    lag -= period;
                }
                lags[c] = lag;
            }
            // Nearest image of the gaussian: images beyond the first are
            // below 1e-13 at these periods.
            model.r_eval(lags[0], &lags[1..3])
        };
        let target = pair_cov(&sites[0], &sites[1]) * pair_cov(&sites[2], &sites[3])
            + pair_cov(&sites[0], &sites[2]) * pair_cov(&sites[1], &sites[3])
            + pair_cov(&sites[0], &sites[3]) * pair_cov(&sites[1], &sites[2]);

        let stream = RngStream::new(71);
        let mut stat = RunningStats::new();
        for i in 0..250 {
            let (fa, fb) = GridField::synth_pair(&model, &grid, stream.derive(i)).unwrap();
            for f in [&fa, &fb] {
                let p: f64 = sites.iter().map(|s| f.node_value(s)).product();
                stat.push(p);
            }
        }
        assert!(
            (stat.mean() - target).abs() <= 3.0 * stat.stderr(),
            "four-point {} vs {} (stderr {})",
            stat.mean(),
            target,
            stat.stderr()
        );
    }

    #[test]
    fn tapered_grid_covariance_vanishes_at_taper_radius() {
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let stream = RngStream::new(90);
        let factory = move |s: RngStream| {
            let m = tapered_2d();
            Ok(FieldSampler::Grid(GridField::synth(&m, &grid, s)?))
        };
        let lags = vec![(0.0, vec![4.0, 0.0]), (4.0, vec![0.0, 0.0])];
        let est = empirical_cov(&factory, &lags, 150, stream).unwrap();
        for e in &est {
            assert!(
                e.estimate.abs() <= 3.0 * e.stderr,
                "lag ({}, {:?}) estimate {} stderr {}",
                e.t_lag,
                e.x_lag,
                e.estimate,
                e.stderr
            );
        }
    }

    #[test]
    fn empirical_cov_stderr_scales_with_ensemble_size() {
        let model = unit_gaussian();
        let factory = move |s: RngStream| {
            Ok(FieldSampler::Harmonic(HarmonicField::synth(&model, 16, s)?))
        };
        let lags = vec![(0.0, vec![0.0; 3])];
        let small = empirical_cov(&factory, &lags, 400, RngStream::new(5)).unwrap();
        let large = empirical_cov(&factory, &lags, 1600, RngStream::new(5)).unwrap();
        let ratio = small[0].stderr / large[0].stderr;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "stderr ratio {ratio} not near 2"
        );
    }

    #[test]
    fn empirical_cov_rejects_tiny_ensembles() {
        let model = unit_gaussian();
        let factory = move |s: RngStream| {
            Ok(FieldSampler::Harmonic(HarmonicField::synth(&model, 4, s)?))
        };
        assert!(empirical_cov(&factory, &[(0.0, vec![0.0; 3])], 50, RngStream::new(1)).is_err());
    }

    #[test]
    fn grid_container_round_trip() {
        let model = tapered_2d();
        let grid = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        let f = GridField::synth(&model, &grid, RngStream::new(123)).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let g = GridField::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(f.values, g.values);
        assert_eq!(f.shape, g.shape);
        assert_eq!(g.model().kind(), ModelKind::TaperedGaussian);
        assert_eq!(f.eval(1.3, &[0.7, 2.2]), g.eval(1.3, &[0.7, 2.2]));

        // Corrupted magic is rejected.
        buf[0] = b'X';
        match GridField::read_from(&mut buf.as_slice()) {
            Err(Error::Format(_)) => {}
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn grid_rejects_bad_specs() {
        let model = CovarianceModel::gaussian(1.0, 1.0, 1.0, 2).unwrap();
        // Period below 8 correlation lengths.
        let small = GridSpec::uniform(2, 4.0, 0.25, 8.0, 0.25);
        assert!(GridField::synth(&model, &small, RngStream::new(1)).is_err());
        // Spacing above a quarter correlation length.
        let coarse = GridSpec::uniform(2, 8.0, 0.5, 8.0, 0.25);
        assert!(GridField::synth(&model, &coarse, RngStream::new(1)).is_err());
        // Tapered model with a period below its support diameter.
        let tap = CovarianceModel::tapered(1.0, 1.0, 1.0, 2, 6.0).unwrap();
        let tight = GridSpec::uniform(2, 8.0, 0.25, 8.0, 0.25);
        match GridField::synth(&tap, &tight, RngStream::new(1)) {
            Err(Error::Synthesis(_)) => {}
            other => panic!("expected synthesis error, got {other:?}"),
        }
    }
}
