//! Scalar search helpers shared by the optimizers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`, stopping when
/// the bracket is narrower than `tol`. Both endpoints are also evaluated so a
/// maximum sitting on the boundary is returned exactly. Ties go to the
/// smaller abscissa.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> ScalarMax {
    let mut best = ScalarMax {
        x: lo,
        value: f(lo),
        evaluations: 1,
    };
    if hi <= lo {
        return best;
    }
    let consider = |x: f64, v: f64, best: &mut ScalarMax| {
        best.evaluations += 1;
        if v > best.value || (v == best.value && x < best.x) {
            best.x = x;
            best.value = v;
        }
    };
    let f_hi = f(hi);
    consider(hi, f_hi, &mut best);

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    consider(c, fc, &mut best);
    consider(d, fd, &mut best);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            consider(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            consider(d, fd, &mut best);
        }
    }
    best
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Returns the endpoint of
/// the final bracket on the same side as `lo`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
