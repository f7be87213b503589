//! Space-time covariance models R(t, x), their power spectra, and derived
//! quantities: the time-integrated covariance and the sup-over-time envelope.
//!
//! Two families are shipped.  `gaussian_separable` has closed forms for
//! everything and serves as the oracle workhorse.  `tapered_gaussian`
//! multiplies the Gaussian by a compactly supported radial bump in space-time,
//! giving finite-range dependence; its spectrum is tabulated once at
//! construction and interpolated.  The taper is a Wendland-type quintic,
//! positive definite as a radial function up to five dimensions, so the
//! product remains a valid covariance (Schur) and the tabulated spectrum is
//! nonnegative up to interpolation noise.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numerics::{
    self, gauss_legendre, integrate_interval, integrate_semi_infinite, QuadratureSpec,
};
use crate::{Error, Result};

const TWO_PI: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GaussianSeparable,
    TaperedGaussian,
}

/// Stationary mean-zero covariance model, isotropic in x.
///
/// Invariants: amplitude > 0, correlation lengths > 0, 1 <= d <= 4,
/// R(0,0) = amplitude, R(t,x) = R(-t,-x).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelParams", into = "ModelParams")]
pub struct CovarianceModel {
    kind: ModelKind,
    amplitude: f64,
    ell_t: f64,
    ell_x: f64,
    d: usize,
    taper_radius: Option<f64>,
    // Tabulated spectrum, tapered model only.  Built eagerly; immutable.
    table: Option<Arc<SpectralTable>>,
}

/// Serialization shadow: the table is rebuilt on deserialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelParams {
    kind: ModelKind,
    amplitude: f64,
    ell_t: f64,
    ell_x: f64,
    d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    taper_radius: Option<f64>,
}

impl From<CovarianceModel> for ModelParams {
    fn from(m: CovarianceModel) -> Self {
        ModelParams {
            kind: m.kind,
            amplitude: m.amplitude,
            ell_t: m.ell_t,
            ell_x: m.ell_x,
            d: m.d,
            taper_radius: m.taper_radius,
        }
    }
}

impl TryFrom<ModelParams> for CovarianceModel {
    type Error = Error;

    fn try_from(p: ModelParams) -> Result<Self> {
        match p.kind {
            ModelKind::GaussianSeparable => {
                if p.taper_radius.is_some() {
                    return Err(Error::domain(
                        "taper_radius is only meaningful for tapered_gaussian",
                    ));
                }
                CovarianceModel::gaussian(p.amplitude, p.ell_t, p.ell_x, p.d)
            }
            ModelKind::TaperedGaussian => {
                let m = p.taper_radius.ok_or_else(|| {
                    Error::domain("tapered_gaussian requires taper_radius")
                })?;
                CovarianceModel::tapered(p.amplitude, p.ell_t, p.ell_x, p.d, m)
            }
        }
    }
}

fn validate_common(amplitude: f64, ell_t: f64, ell_x: f64, d: usize) -> Result<()> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::domain("amplitude must be positive and finite"));
    }
    if !(ell_t > 0.0 && ell_t.is_finite() && ell_x > 0.0 && ell_x.is_finite()) {
        return Err(Error::domain("correlation lengths must be positive and finite"));
    }
    if !(1..=4).contains(&d) {
        return Err(Error::domain("dimension must be between 1 and 4"));
    }
    Ok(())
}

impl CovarianceModel {
    pub fn gaussian(amplitude: f64, ell_t: f64, ell_x: f64, d: usize) -> Result<Self> {
        validate_common(amplitude, ell_t, ell_x, d)?;
        Ok(Self {
            kind: ModelKind::GaussianSeparable,
            amplitude,
            ell_t,
            ell_x,
            d,
            taper_radius: None,
            table: None,
        })
    }

    pub fn tapered(
        amplitude: f64,
        ell_t: f64,
        ell_x: f64,
        d: usize,
        taper_radius: f64,
    ) -> Result<Self> {
        validate_common(amplitude, ell_t, ell_x, d)?;
        if !(taper_radius > 0.0 && taper_radius.is_finite()) {
            return Err(Error::domain("taper_radius must be positive and finite"));
        }
        let mut model = Self {
            kind: ModelKind::TaperedGaussian,
            amplitude,
            ell_t,
            ell_x,
            d,
            taper_radius: Some(taper_radius),
            table: None,
        };
        model.table = Some(Arc::new(SpectralTable::build(&model)));
        Ok(model)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn ell_t(&self) -> f64 {
        self.ell_t
    }

    pub fn ell_x(&self) -> f64 {
        self.ell_x
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn taper_radius(&self) -> Option<f64> {
        self.taper_radius
    }

    /// Covariance at lag (t, x).
    pub fn r_eval(&self, t: f64, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "lag dimension mismatch");
        self.r_radial(t, norm(x))
    }

    /// Covariance at lag (t, |x| = r); the models are isotropic in x.
    pub fn r_radial(&self, t: f64, r: f64) -> f64 {
        let gauss = self.amplitude
            * (-0.5 * (t / self.ell_t).powi(2)).exp()
            * (-0.5 * (r / self.ell_x).powi(2)).exp();
        match self.kind {
            ModelKind::GaussianSeparable => gauss,
            ModelKind::TaperedGaussian => {
                let m = self.taper_radius.unwrap();
                gauss * taper_weight(t.hypot(r) / m)
            }
        }
    }

    /// Power spectrum R-hat(xi0, xi) >= 0.
    pub fn r_hat_eval(&self, xi0: f64, xi: &[f64]) -> f64 {
        assert_eq!(xi.len(), self.d, "frequency dimension mismatch");
        self.r_hat_radial(xi0, norm(xi))
    }

    /// Power spectrum at (xi0, |xi| = k).
    pub fn r_hat_radial(&self, xi0: f64, k: f64) -> f64 {
        match self.kind {
            ModelKind::GaussianSeparable => {
                let d = self.d as f64;
                self.amplitude
                    * TWO_PI.powf(0.5 * (d + 1.0))
                    * self.ell_t
                    * self.ell_x.powf(d)
                    * (-0.5 * (self.ell_t * xi0).powi(2)).exp()
                    * (-0.5 * (self.ell_x * k).powi(2)).exp()
            }
            ModelKind::TaperedGaussian => self.table.as_ref().unwrap().lookup(xi0.abs(), k.abs()),
        }
    }

    /// Time-integrated covariance: integral of R(t, x) over all t.
    pub fn r_time_integral(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "lag dimension mismatch");
        self.r_time_integral_radial(norm(x))
    }

    pub fn r_time_integral_radial(&self, r: f64) -> f64 {
        match self.kind {
            ModelKind::GaussianSeparable => {
                self.amplitude
                    * self.ell_t
                    * TWO_PI.sqrt()
                    * (-0.5 * (r / self.ell_x).powi(2)).exp()
            }
            ModelKind::TaperedGaussian => {
                let m = self.taper_radius.unwrap();
                if r >= m {
                    return 0.0;
                }
                // Support in t is |t| < sqrt(M^2 - r^2); integrand is even.
                let t_max = (m * m - r * r).sqrt();
                let spec = QuadratureSpec::default();
                let res = integrate_interval(|t| self.r_radial(t, r), 0.0, t_max, &spec)
                    .expect("time integral of a smooth compactly supported covariance");
                2.0 * res.value
            }
        }
    }

    /// Time-integrated covariance smoothed by the heat kernel at time s:
    /// the spectrum is damped by e^{-s |xi|^2}, so each coordinate picks up
    /// Gaussian blur of variance 2s.  s = 0 recovers `r_time_integral`.
    pub fn r_time_integral_smoothed(&self, r: f64, s: f64) -> Result<f64> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::domain("smoothing time must be nonnegative and finite"));
        }
        match self.kind {
            ModelKind::GaussianSeparable => {
                let var = self.ell_x * self.ell_x + 2.0 * s;
                Ok(self.amplitude
                    * self.ell_t
                    * TWO_PI.sqrt()
                    * self.ell_x.powi(self.d as i32)
                    * var.powf(-0.5 * self.d as f64)
                    * (-0.5 * r * r / var).exp())
            }
            ModelKind::TaperedGaussian => {
                let table = self.table.as_ref().unwrap();
                let f = |k: f64| {
                    radial_kernel(self.d, r, k) * (-s * k * k).exp() * self.r_hat_radial(0.0, k)
                };
                let res =
                    integrate_interval(f, 0.0, table.q_x, &QuadratureSpec::default())?;
                Ok(res.value * TWO_PI.powi(-(self.d as i32)))
            }
        }
    }

    /// Envelope g(x) = sup over t of |R(t, x)|.
    pub fn sup_envelope(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.d, "lag dimension mismatch");
        self.sup_envelope_radial(norm(x))
    }

    pub fn sup_envelope_radial(&self, r: f64) -> f64 {
        match self.kind {
            ModelKind::GaussianSeparable => {
                // Separable positive model: the sup in t sits at t = 0.
                self.amplitude * (-0.5 * (r / self.ell_x).powi(2)).exp()
            }
            ModelKind::TaperedGaussian => {
                let m = self.taper_radius.unwrap();
                if r >= m {
                    return 0.0;
                }
                // |R| is even in t, so scan t >= 0: coarse grid, then a
                // golden-section polish around the best cell.
                let t_max = (m * m - r * r).sqrt();
                let n = 256usize;
                let mut best_i = 0usize;
                let mut best = f64::NEG_INFINITY;
                for i in 0..=n {
                    let t = t_max * i as f64 / n as f64;
                    let v = self.r_radial(t, r).abs();
                    if v > best {
                        best = v;
                        best_i = i;
                    }
                }
                let lo = t_max * best_i.saturating_sub(1) as f64 / n as f64;
                let hi = t_max * (best_i + 1).min(n) as f64 / n as f64;
                golden_max(|t| self.r_radial(t, r).abs(), lo, hi).max(best)
            }
        }
    }

    /// Reconstruct R(t, |x| = rho) from the spectrum by Fourier inversion:
    /// an independent route used to validate `r_hat_eval` against `r_eval`.
    pub fn r_from_spectrum(&self, t: f64, rho: f64, spec: &QuadratureSpec) -> Result<f64> {
        let inner_spec = QuadratureSpec {
            rel_tol: spec.rel_tol / 4.0,
            abs_tol: spec.abs_tol / 4.0,
            max_evals: spec.max_evals,
        };
        let d = self.d;
        let spatial = |xi0: f64| -> f64 {
            // Radial inverse transform of R-hat(xi0, .) at radius rho; the
            // radial kernel is self-dual up to (2 pi)^{-d}.
            let f = |s: f64| radial_kernel(d, rho, s) * self.r_hat_radial(xi0, s);
            let res = match self.kind {
                ModelKind::GaussianSeparable => integrate_semi_infinite(f, &inner_spec),
                // Tabulated spectrum vanishes outside its box.
                ModelKind::TaperedGaussian => {
                    integrate_interval(f, 0.0, self.table.as_ref().unwrap().q_x, &inner_spec)
                }
            };
            res.map(|r| r.value).unwrap_or(f64::NAN) * TWO_PI.powi(-(d as i32))
        };
        let temporal = |xi0: f64| (xi0 * t).cos() * spatial(xi0);
        let res = match self.kind {
            ModelKind::GaussianSeparable => integrate_semi_infinite(temporal, spec)?,
            ModelKind::TaperedGaussian => {
                integrate_interval(temporal, 0.0, self.table.as_ref().unwrap().q_t, spec)?
            }
        };
        Ok(2.0 * res.value / TWO_PI)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Wendland-type quintic bump: w(rho) = (1-rho)^5 (5 rho + 1) on [0, 1].
///
/// w(0) = 1, w vanishes to high order at 1, and the radial extension is C^2
/// and positive definite on R^D for D <= 5, which covers space-time
/// dimension 1 + d for every supported d.
pub fn taper_weight(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        let u = 1.0 - rho;
        let u2 = u * u;
        u2 * u2 * u * (5.0 * rho + 1.0)
    }
}

/// Forward (and, up to (2 pi)^{-d}, inverse) radial Fourier kernel:
/// the transform of an isotropic h is int K_d(k, r) h(r) dr over r >= 0.
fn radial_kernel(d: usize, k: f64, r: f64) -> f64 {
    match d {
        1 => 2.0 * (k * r).cos(),
        2 => TWO_PI * r * numerics::bessel_j0(k * r),
        3 => {
            if k == 0.0 {
                2.0 * TWO_PI * r * r
            } else {
                2.0 * TWO_PI * r * (k * r).sin() / k
            }
        }
        4 => {
            if k == 0.0 {
                0.5 * TWO_PI * TWO_PI * r * r * r
            } else {
                TWO_PI * TWO_PI * r * r * numerics::bessel_j1(k * r) / k
            }
        }
        _ => unreachable!("dimension validated at construction"),
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// Tabulated spectrum of the tapered model on [0, Q_t] x [0, Q_x], with
/// bicubic interpolation and even reflection across the axes.  Values
/// outside the box are treated as zero; the box is sized so the truncated
/// mass is far below every test tolerance.
#[derive(Debug)]
struct SpectralTable {
    q_t: f64,
    q_x: f64,
    n: usize,
    values: Vec<f64>,
}

impl SpectralTable {
    fn build(model: &CovarianceModel) -> Self {
        let m = model.taper_radius.unwrap();
        // The taper's |y|^3 term at the origin gives the spectrum polynomial
        // tails, so the box must be generous for the truncated mass to stay
        // below round-trip tolerances.
        let q_t = 24.0 / model.ell_t;
        let q_x = 24.0 / model.ell_x;
        let n = 721;

        // Gauss-Legendre needs roughly phase/2 nodes to be in the
        // superexponential regime; the largest phase is max(Q) * M.
        let phase = q_t.max(q_x) * m;
        let n_gl = ((0.6 * phase) as usize + 48).clamp(96, 512);
        let (u, w) = gauss_legendre(n_gl);
        let half = 0.5 * m;
        let nodes: Vec<f64> = u.iter().map(|&ui| half * (ui + 1.0)).collect();
        let weights: Vec<f64> = w.iter().map(|&wi| half * wi).collect();

        let mut r_vals = vec![0.0; n_gl * n_gl];
        for i in 0..n_gl {
            for j in 0..n_gl {
                r_vals[i * n_gl + j] = model.r_radial(nodes[i], nodes[j]);
            }
        }

        // Two-stage contraction over the product rule: first the cosine
        // transform in t for every (xi0, r_j), then the spatial kernel in r.
        // Transcendentals are hoisted into weight-folded tables; the loops
        // below are pure multiply-adds.
        let d = model.d;
        let ht = q_t / (n - 1) as f64;
        let hx = q_x / (n - 1) as f64;
        let mut cos_tab = vec![0.0; n * n_gl];
        let mut kern_tab = vec![0.0; n * n_gl];
        for p in 0..n {
            let xi0 = p as f64 * ht;
            let k = p as f64 * hx;
            for i in 0..n_gl {
                cos_tab[p * n_gl + i] = weights[i] * (xi0 * nodes[i]).cos();
                kern_tab[p * n_gl + i] = weights[i] * radial_kernel(d, k, nodes[i]);
            }
        }

        let mut values = vec![0.0; n * n];
        let mut f_stage = vec![0.0; n_gl];
        for p in 0..n {
            let cos_row = &cos_tab[p * n_gl..(p + 1) * n_gl];
            for (j, fj) in f_stage.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..n_gl {
                    acc += cos_row[i] * r_vals[i * n_gl + j];
                }
                *fj = acc;
            }
            for q in 0..n {
                let kern_row = &kern_tab[q * n_gl..(q + 1) * n_gl];
                let mut acc = 0.0;
                for j in 0..n_gl {
                    acc += kern_row[j] * f_stage[j];
                }
                // Factor 2: the t-integral ran over [0, M] of an even function.
                values[p * n + q] = 2.0 * acc;
            }
        }

        Self { q_t, q_x, n, values }
    }

    fn lookup(&self, xi0: f64, k: f64) -> f64 {
        if xi0 > self.q_t || k > self.q_x {
            return 0.0;
        }
        let ht = self.q_t / (self.n - 1) as f64;
        let hx = self.q_x / (self.n - 1) as f64;
        let (ip, sp) = split_index(xi0 / ht, self.n);
        let (iq, sq) = split_index(k / hx, self.n);

        let mut rows = [0.0; 4];
        for (di, row) in rows.iter_mut().enumerate() {
            let p = reflect_clamp(ip + di as isize - 1, self.n);
            let mut cols = [0.0; 4];
            for (dj, col) in cols.iter_mut().enumerate() {
                let q = reflect_clamp(iq + dj as isize - 1, self.n);
                *col = self.values[p * self.n + q];
            }
            *row = catmull_rom(cols, sq);
        }
        catmull_rom(rows, sp)
    }
}

fn split_index(pos: f64, n: usize) -> (isize, f64) {
    let i = (pos.floor() as isize).clamp(0, n as isize - 2);
    (i, pos - i as f64)
}

/// Even reflection at 0 (the spectrum is even in each argument), clamp at top.
fn reflect_clamp(i: isize, n: usize) -> usize {
    let i = if i < 0 { -i } else { i };
    (i as usize).min(n - 1)
}

fn catmull_rom(f: [f64; 4], s: f64) -> f64 {
    let [fm, f0, f1, f2] = f;
    f0 + 0.5
        * s
        * (f1 - fm + s * (2.0 * fm - 5.0 * f0 + 4.0 * f1 - f2 + s * (3.0 * (f0 - f1) + f2 - fm)))
}
