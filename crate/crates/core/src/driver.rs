//! BSDE drivers for the exponential-utility problem with one default.
//!
//! For a fixed strategy `pi` the value process solves a linear BSDE with driver
//!
//! ```text
//! f_pi(y, z, u) = (g^2/2) pi^2 sigma^2 y - g pi (mu y + sigma z) - lambda (1 - e^{-g pi beta}) (y + u)
//! ```
//!
//! where `g` is the risk aversion. The value function solves the BSDE whose
//! driver is the pointwise infimum of `f_pi` over the admissible interval.
//! After the change of variables `y = ln(Y)/g`, `z = Z/(g Y)`,
//! `u = ln(1 + U/Y)/g` the same problem is a quadratic BSDE with driver
//! [`g_quadratic`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimize::{convex_min, Minimum};

/// Coefficients at a fixed time and default state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoeffSnapshot {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CoeffSnapshot {
    /// `mu + lambda beta`, the drift of the stock under the compensated jump.
    pub fn risk_premium(&self) -> f64 {
        self.mu + self.lambda * self.beta
    }
}

/// Compact interval of admissible amounts held in the stock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategySet {
    pub lo: f64,
    pub hi: f64,
}

impl StrategySet {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::input(
                "driver",
                format!("strategy set [{lo}, {hi}] must be finite with lo <= hi"),
            ));
        }
        Ok(Self { lo, hi })
    }

    /// The symmetric set `[-k, k]`.
    pub fn symmetric(k: f64) -> Result<Self> {
        Self::new(-k, k)
    }

    pub fn contains(&self, pi: f64) -> bool {
        self.lo <= pi && pi <= self.hi
    }

    pub fn clamp(&self, pi: f64) -> f64 {
        pi.clamp(self.lo, self.hi)
    }

    fn tolerance(&self) -> f64 {
        1e-12 * (1.0 + self.hi - self.lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverMin {
    pub value: f64,
    pub pi: f64,
}

pub fn f_pi(c: &CoeffSnapshot, pi: f64, y: f64, z: f64, u: f64) -> f64 {
    let g = c.gamma;
    0.5 * g * g * pi * pi * c.sigma * c.sigma * y
        - g * pi * (c.mu * y + c.sigma * z)
        + c.lambda * (-g * pi * c.beta).exp_m1() * (y + u)
}

/// Infimum of [`f_pi`] over the strategy set, with its minimizer.
///
/// Requires `y > 0` and `y + u >= 0`, where `f_pi` is strictly convex in `pi`.
pub fn minimize_driver(
    c: &CoeffSnapshot,
    set: &StrategySet,
    y: f64,
    z: f64,
    u: f64,
) -> Result<DriverMin> {
    if !(y > 0.0) || !(y + u >= 0.0) {
        return Err(Error::input(
            "driver",
            format!("driver evaluated outside y > 0, y + u >= 0 (y={y:e}, u={u:e})"),
        ));
    }
    Ok(minimize_driver_unchecked(c, set, y, z, u))
}

pub(crate) fn minimize_driver_unchecked(
    c: &CoeffSnapshot,
    set: &StrategySet,
    y: f64,
    z: f64,
    u: f64,
) -> DriverMin {
    let g = c.gamma;
    let s2 = c.sigma * c.sigma;
    let vertex = (c.mu * y + c.sigma * z) / (g * s2 * y);
    let jump = c.lambda * c.beta * (y + u);

    let m = if jump == 0.0 {
        let pi = set.clamp(vertex);
        Minimum {
            x: pi,
            value: f_pi(c, pi, y, z, u),
        }
    } else {
        let w = c.lambda * (y + u);
        convex_min(
            set.lo,
            set.hi,
            set.tolerance(),
            Some(vertex),
            |pi| f_pi(c, pi, y, z, u),
            |pi| g * g * s2 * y * pi - g * (c.mu * y + c.sigma * z) - g * jump * (-g * pi * c.beta).exp(),
            |pi| g * g * s2 * y + g * g * c.beta * c.beta * w * (-g * pi * c.beta).exp(),
        )
    };
    tie_break(set, m)
}

// f_pi(0) = 0, so a minimum of exactly zero is shared with pi = 0.
fn tie_break(set: &StrategySet, m: Minimum) -> DriverMin {
    if set.contains(0.0) && m.value >= 0.0 {
        DriverMin { value: 0.0, pi: 0.0 }
    } else {
        DriverMin {
            value: m.value,
            pi: m.x,
        }
    }
}

/// `lambda (e^{g v} - 1 - g v) / g`, the jump penalty of the quadratic driver.
pub fn jump_penalty(c: &CoeffSnapshot, v: f64) -> f64 {
    let g = c.gamma;
    c.lambda * ((g * v).exp_m1() - g * v) / g
}

/// Driver of the quadratic BSDE solved by `y = ln(Y)/g`:
///
/// ```text
/// g(z, u) = inf_pi { (g/2) |pi sigma - (z + alpha/g)|^2 + |u - pi beta|_g } - alpha z - alpha^2/(2g)
/// ```
///
/// with `alpha = (mu + lambda beta) / sigma`. Related to the infimum driver by
/// `f_min(Y, Z, U) = g Y (g(z, u) - (g/2) z^2 - |u|_g)`.
pub fn g_quadratic(c: &CoeffSnapshot, set: &StrategySet, z: f64, u: f64) -> DriverMin {
    let g = c.gamma;
    let alpha = c.risk_premium() / c.sigma;
    let target = z + alpha / g;
    let shift = -alpha * z - alpha * alpha / (2.0 * g);
    let h = |pi: f64| {
        let d = pi * c.sigma - target;
        0.5 * g * d * d + jump_penalty(c, u - pi * c.beta)
    };

    let m = if c.lambda * c.beta == 0.0 {
        let pi = set.clamp(target / c.sigma);
        Minimum { x: pi, value: h(pi) }
    } else {
        convex_min(
            set.lo,
            set.hi,
            set.tolerance(),
            Some(target / c.sigma),
            h,
            |pi| {
                g * c.sigma * (pi * c.sigma - target)
                    - c.lambda * c.beta * (g * (u - pi * c.beta)).exp_m1()
            },
            |pi| {
                g * c.sigma * c.sigma
                    + c.lambda * g * c.beta * c.beta * (g * (u - pi * c.beta)).exp()
            },
        )
    };
    DriverMin {
        value: m.value + shift,
        pi: m.x,
    }
}

/// Lipschitz constant of the infimum driver in the l1 norm of `(y, z, u)`.
///
/// Each coefficient bound is monotone in `|pi|` on either side of zero, so
/// the maximum over the interval is attained at an endpoint.
pub fn lipschitz_constant(c: &CoeffSnapshot, set: &StrategySet) -> f64 {
    let g = c.gamma;
    [set.lo, set.hi, 0.0]
        .into_iter()
        .filter(|&pi| set.contains(pi))
        .map(|pi| {
            let jump = c.lambda * (-g * pi * c.beta).exp_m1().abs();
            let y_coef = 0.5 * g * g * pi * pi * c.sigma * c.sigma + g * pi.abs() * c.mu.abs() + jump;
            let z_coef = g * pi.abs() * c.sigma;
            y_coef.max(z_coef).max(jump)
        })
        .fold(0.0, f64::max)
}

/// Bounds `(C1, C2)` of `e^{-g pi beta} - 1` over the set. `C1 > -1` is what
/// makes the comparison theorem with jumps applicable.
pub fn jump_comparison_bounds(c: &CoeffSnapshot, set: &StrategySet) -> (f64, f64) {
    let a = (-c.gamma * set.lo * c.beta).exp_m1();
    let b = (-c.gamma * set.hi * c.beta).exp_m1();
    (a.min(b).min(0.0), a.max(b).max(0.0))
}
