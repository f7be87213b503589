//! Adaptive Gauss-Kronrod quadrature kernel.
//!
//! Fixed-order 7-15 nested rule per panel, global worst-panel-first
//! subdivision, shared evaluation budget across nested integrals.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Kronrod abscissae for the 7-15 pair on [-1, 1]; last entry is the center.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights; entries pair with `XGK[1]`, `XGK[3]`, `XGK[5]`
/// and the center node.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Shared state for one top-level quadrature request, including everything
/// nested beneath it.
pub(crate) struct Ctx {
    cap: u64,
    used: Cell<u64>,
    exhausted: Cell<bool>,
    bad_node: Cell<Option<f64>>,
}

impl Ctx {
    pub(crate) fn new(cap: u64) -> Self {
        Ctx {
            cap,
            used: Cell::new(0),
            exhausted: Cell::new(false),
            bad_node: Cell::new(None),
        }
    }

    /// Try to reserve `n` evaluations; marks the context exhausted on failure.
    fn consume(&self, n: u64) -> bool {
        let next = self.used.get() + n;
        if next > self.cap {
            self.exhausted.set(true);
            false
        } else {
            self.used.set(next);
            true
        }
    }

    pub(crate) fn used(&self) -> u64 {
        self.used.get()
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.exhausted.get()
    }

    pub(crate) fn bad_node(&self) -> Option<f64> {
        self.bad_node.get()
    }

    fn record_value(&self, x: f64, v: f64) -> f64 {
        if v.is_finite() {
            v
        } else {
            if self.bad_node.get().is_none() {
                self.bad_node.set(Some(x));
            }
            0.0
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod evaluation on [a, b].
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, ctx: &Ctx) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let mut fv1 = [0.0f64; 8];
    let mut fv2 = [0.0f64; 8];
    let fc = ctx.record_value(center, f(center));

    let mut res_kronrod = WGK[7] * fc;
    let mut res_gauss = WG[3] * fc;
    let mut res_abs = res_kronrod.abs();

    for j in 0..7 {
        let dx = half * XGK[j];
        let x1 = center - dx;
        let x2 = center + dx;
        let f1 = ctx.record_value(x1, f(x1));
        let f2 = ctx.record_value(x2, f(x2));
        fv1[j] = f1;
        fv2[j] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            res_gauss += WG[(j - 1) / 2] * fsum;
        }
        res_abs += WGK[j] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let value = res_kronrod * half;
    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    let error = rescale_error(raw_err, res_abs * abs_half, res_asc * abs_half);

    Panel { a, b, value, error }
}

/// QUADPACK-style error rescaling: sharpen the raw Kronrod-Gauss difference
/// and floor it at the roundoff level of the panel.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err;
    if res_asc != 0.0 && scaled != 0.0 {
        let ratio = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if ratio < 1.0 { res_asc * ratio } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// Adaptively integrate `f` over [a, b] to tolerance max(abs, rel*|value|).
///
/// Returns (value, error estimate).  Budget exhaustion and non-finite nodes
/// are recorded on `ctx`; the caller decides how to surface them.
pub(crate) fn adaptive(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    ctx: &Ctx,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    if !ctx.consume(15) {
        return (0.0, f64::INFINITY);
    }
    let first = gk15(f, a, b, ctx);

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let mut sum_value = first.value;
    let mut sum_error = first.error;
    // Panels too narrow to split further; their contribution is kept aside.
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    heap.push(first);

    loop {
        let tol = abs_tol.max(rel_tol * (sum_value + frozen_value).abs());
        if sum_error + frozen_error <= tol || heap.is_empty() {
            break;
        }
        // Frozen panels put a floor under the reachable error.  Once the
        // splittable panels are below that floor the tolerance is out of
        // reach; stop instead of burning the budget.
        if frozen_error > tol && sum_error <= frozen_error {
            break;
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        let too_narrow = (worst.b - worst.a).abs()
            <= 8.0 * f64::EPSILON * worst.a.abs().max(worst.b.abs()).max(1.0);
        if too_narrow {
            frozen_value += worst.value;
            frozen_error += worst.error;
            sum_value -= worst.value;
            sum_error -= worst.error;
            continue;
        }
        if !ctx.consume(30) {
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid, ctx);
        let right = gk15(f, mid, worst.b, ctx);
        sum_value += left.value + right.value - worst.value;
        sum_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Resum in interval order: deterministic and numerically tidy.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = frozen_value;
    let mut error = frozen_error;
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    (value, error)
}
