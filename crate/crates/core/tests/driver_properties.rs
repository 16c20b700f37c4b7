use indiff_core::driver::{
    f_pi, g_quadratic, jump_comparison_bounds, jump_penalty, lipschitz_constant, minimize_driver,
    CoeffSnapshot, StrategySet,
};
use proptest::prelude::*;

fn snapshot() -> impl Strategy<Value = CoeffSnapshot> {
    (-0.5f64..0.5, 0.05f64..1.0, 0.0f64..2.0, -0.95f64..2.0, 0.2f64..3.0).prop_map(
        |(mu, sigma, lambda, beta, gamma)| CoeffSnapshot {
            mu,
            sigma,
            lambda,
            beta,
            gamma,
        },
    )
}

fn set() -> impl Strategy<Value = StrategySet> {
    (-5.0f64..5.0, 0.0f64..6.0).prop_map(|(lo, w)| StrategySet::new(lo, lo + w).unwrap())
}

/// Sum of the magnitudes of the three terms of `f_pi`; the floating-point
/// error of any evaluation of `f_pi` is relative to this, not to the sum.
fn term_scale(c: &CoeffSnapshot, pi: f64, y: f64, z: f64, u: f64) -> f64 {
    let g = c.gamma;
    (0.5 * g * g * pi * pi * c.sigma * c.sigma * y).abs()
        + (g * pi * (c.mu * y + c.sigma * z)).abs()
        + (c.lambda * (-g * pi * c.beta).exp_m1() * (y + u)).abs()
}

/// `(y, z, u)` with `y > 0`, `y + u >= 0`.
fn state() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.01f64..2.0, -2.0f64..2.0, 0.0f64..1.0, 0.0f64..2.0)
        .prop_map(|(y, z, a, b)| (y, z, -a * y + b * a.min(1.0 - a)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn minimum_dominates_every_strategy(c in snapshot(), s in set(), (y, z, u) in state(), t in 0.0f64..1.0) {
        let m = minimize_driver(&c, &s, y, z, u).unwrap();
        prop_assert!(s.contains(m.pi));
        let pi = s.lo + t * (s.hi - s.lo);
        let scale = 1.0 + f_pi(&c, pi, y, z, u).abs();
        prop_assert!(m.value <= f_pi(&c, pi, y, z, u) + 1e-13 * scale);
        prop_assert!((m.value - f_pi(&c, m.pi, y, z, u)).abs() <= 1e-15 * scale);
    }

    #[test]
    fn positively_homogeneous(c in snapshot(), s in set(), (y, z, u) in state(), t in 0.01f64..100.0) {
        let a = minimize_driver(&c, &s, y, z, u).unwrap();
        let b = minimize_driver(&c, &s, t * y, t * z, t * u).unwrap();
        let scale = t * term_scale(&c, a.pi, y, z, u).max(a.value.abs());
        prop_assert!((b.value - t * a.value).abs() <= 1e-12 * scale);
        prop_assert!((b.pi - a.pi).abs() <= 1e-10 * (1.0 + s.hi - s.lo));
    }

    #[test]
    fn lipschitz_bound(c in snapshot(), s in set(), p in state(), q in state()) {
        let a = minimize_driver(&c, &s, p.0, p.1, p.2).unwrap().value;
        let b = minimize_driver(&c, &s, q.0, q.1, q.2).unwrap().value;
        let l = lipschitz_constant(&c, &s);
        let dist = (p.0 - q.0).abs() + (p.1 - q.1).abs() + (p.2 - q.2).abs();
        prop_assert!((a - b).abs() <= l * dist * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn jump_comparison_coefficients(c in snapshot(), s in set()) {
        let (c1, c2) = jump_comparison_bounds(&c, &s);
        prop_assert!((-1.0..=0.0).contains(&c1) && c2 >= 0.0);
        // e^{-g pi beta} - 1 > -1 without the cancellation of subtracting 1
        for pi in [s.lo, s.hi] {
            prop_assert!((-c.gamma * pi * c.beta).exp() > 0.0);
        }
        for k in 0..=10 {
            let pi = s.lo + (s.hi - s.lo) * k as f64 / 10.0;
            let coef = (-c.gamma * pi * c.beta).exp_m1();
            prop_assert!(c1 <= coef + 1e-12 && coef <= c2 * (1.0 + 1e-12) + 1e-12);
        }
    }

    /// The infimum driver seen through `y = ln(Y)/gamma`, `z = Z/(gamma Y)`,
    /// `u = ln(1 + U/Y)/gamma` equals `gamma Y (g - gamma z^2/2 - |u|_gamma)`.
    #[test]
    fn change_of_variables(c in snapshot(), s in set(), (y, z, u) in state()) {
        prop_assume!(y + u > 1e-6 * y);
        let f = minimize_driver(&c, &s, y, z, u).unwrap();
        let zq = z / (c.gamma * y);
        let uq = (u / y).ln_1p() / c.gamma;
        let g = g_quadratic(&c, &s, zq, uq);
        let via_g = c.gamma * y * (g.value - 0.5 * c.gamma * zq * zq - jump_penalty(&c, uq));
        // the two routes cancel terms of size gamma Y (|g| + gamma z^2/2 + |u|_gamma)
        let scale = f.value.abs().max(c.gamma * y * (g.value.abs() + 0.5 * c.gamma * zq * zq + jump_penalty(&c, uq).abs()));
        prop_assert!((f.value - via_g).abs() <= 1e-8 * scale, "{} vs {}", f.value, via_g);
        prop_assert!((f.pi - g.pi).abs() <= 1e-7 * (1.0 + s.hi - s.lo));
    }
}

#[test]
fn agrees_with_brute_force_scan() {
    // deterministic sweep over a lattice of snapshots
    let mut worst = 0.0f64;
    for &mu in &[-0.3, 0.0, 0.05, 0.4] {
        for &lambda in &[0.0, 0.3, 1.5] {
            for &beta in &[-0.8, -0.4, 0.0, 0.7] {
                let c = CoeffSnapshot {
                    mu,
                    sigma: 0.6,
                    lambda,
                    beta,
                    gamma: 1.3,
                };
                let s = StrategySet::new(-3.0, 3.0).unwrap();
                let (y, z, u) = (0.8, 0.15, -0.2);
                let n = 200_000;
                let scan = (0..=n)
                    .map(|k| -3.0 + 6.0 * k as f64 / n as f64)
                    .map(|pi| f_pi(&c, pi, y, z, u))
                    .fold(f64::INFINITY, f64::min);
                let m = minimize_driver(&c, &s, y, z, u).unwrap();
                assert!(m.value <= scan + 1e-15);
                worst = worst.max(scan - m.value);
            }
        }
    }
    assert!(worst < 1e-8, "scan gap {worst}");
}
