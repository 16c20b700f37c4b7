//! One-dimensional minimization of a smooth convex function on an interval.

/// Result of a bounded convex minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
}

const MAX_ITER: usize = 200;

/// Minimizes a convex `f` on `[lo, hi]` given its first two derivatives.
///
/// The root of `df` is bracketed and refined by Newton steps; any step that
/// leaves the bracket or is not finite is replaced by bisection. If the
/// derivative itself is not finite at the ends, golden-section search on `f`
/// takes over. `guess` seeds the first Newton step when it lies in the bracket.
pub fn convex_min(
    lo: f64,
    hi: f64,
    tol: f64,
    guess: Option<f64>,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    d2f: impl Fn(f64) -> f64,
) -> Minimum {
    debug_assert!(lo <= hi);
    if lo == hi {
        return Minimum { x: lo, value: f(lo) };
    }
    let (d_lo, d_hi) = (df(lo), df(hi));
    if !d_lo.is_finite() || !d_hi.is_finite() {
        return golden(lo, hi, tol, &f);
    }
    if d_lo >= 0.0 {
        return Minimum { x: lo, value: f(lo) };
    }
    if d_hi <= 0.0 {
        return Minimum { x: hi, value: f(hi) };
    }

    let (mut a, mut b) = (lo, hi);
    let mut x = match guess {
        Some(g) if g > a && g < b => g,
        _ => 0.5 * (a + b),
    };
    for _ in 0..MAX_ITER {
        let d = df(x);
        if d == 0.0 {
            break;
        }
        if d < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let curv = d2f(x);
        let newton = x - d / curv;
        let next = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= tol || b - a <= tol {
            break;
        }
    }
    Minimum { x, value: f(x) }
}

/// Golden-section search; used only when derivatives are unusable.
pub fn golden(lo: f64, hi: f64, tol: f64, f: &impl Fn(f64) -> f64) -> Minimum {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let mut best = Minimum {
        x: 0.5 * (a + b),
        value: f(0.5 * (a + b)),
    };
    for x in [lo, hi] {
        let v = f(x);
        if v < best.value {
            best = Minimum { x, value: v };
        }
    }
    best
}
