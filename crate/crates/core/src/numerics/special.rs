//! Small special-function helpers: Gauss-Legendre rules, Bessel J0/J1,
//! and the standard normal quantile.

use statrs::distribution::{ContinuousCDF, Normal};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// nodes ascending.  Newton iteration on the Legendre recurrence; nodes are
/// accurate to machine precision.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1e-3) {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Where the J0/J1 power series hands over to the asymptotic expansion.
/// Below it the alternating series still has ~1e-11 cancellation headroom;
/// above it the truncated Stokes expansions are good to ~1e-9.
const BESSEL_SWITCH: f64 = 16.0;

/// Bessel function of the first kind, order zero.  Absolute error below
/// roughly 1e-9 everywhere.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < BESSEL_SWITCH {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -q / (kf * kf);
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        sum
    } else {
        let inv = 1.0 / ax;
        let inv2 = inv * inv;
        let p = 1.0
            + inv2 * (-9.0 / 128.0 + inv2 * (3675.0 / 32768.0 - inv2 * 2_401_245.0 / 4_194_304.0));
        let q = inv
            * (-1.0 / 8.0
                + inv2
                    * (75.0 / 1024.0
                        + inv2 * (-59535.0 / 262_144.0 + inv2 * 18_261_468_225.0 / 10_569_646_080.0)));
        let chi = ax - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// Bessel function of the first kind, order one.  Absolute error below
/// roughly 1e-9 everywhere.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax < BESSEL_SWITCH {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -q / (kf * (kf + 1.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
        }
        0.5 * ax * sum
    } else {
        let inv = 1.0 / ax;
        let inv2 = inv * inv;
        let p = 1.0
            + inv2
                * (15.0 / 128.0 + inv2 * (-14175.0 / 98304.0 + inv2 * 127_702_575.0 / 188_743_680.0));
        let q = inv
            * (3.0 / 8.0
                + inv2
                    * (-315.0 / 3072.0
                        + inv2 * (1_091_475.0 / 3_932_160.0 - inv2 * 21_070_924_875.0 / 10_569_646_080.0)));
        let chi = ax - 3.0 * std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

/// Quantile of the standard normal distribution.
///
/// Exact inverse-transform sampling wants a deterministic, rejection-free
/// map from uniforms to normals; this is that map.
pub fn standard_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument must lie in (0,1)");
    // Rational approximation (AS 241) under the hood; good to ~1e-15.
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}
