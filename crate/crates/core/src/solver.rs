//! Backward grid-quadrature scheme for the constrained value-function BSDE.
//!
//! The state is `(t, x = ln(S/s0), n)` with `n = 1` after default. The
//! post-default slice is a pure-diffusion BSDE; the pre-default slice mixes
//! a diffusion move (probability `1 - p`) with a jump to the post-default
//! slice at `x + ln(1 + beta)` (probability `p = 1 - e^{-lambda dt}`).
//! Each step computes the conditional mean `E`, the Brownian coefficient `Z`
//! and the jump size `U`, then sets `Y = E + dt * f_min(E, Z, U)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::driver::{minimize_driver_unchecked, CoeffSnapshot, StrategySet};
use crate::error::{Error, Result};
use crate::model::{validate_model, Claim, MarketModel, Strategy};
use crate::quadrature::Quadrature;

pub const DEFAULT_HALF_WIDTH_SDS: f64 = 6.0;

/// Uniform grid in log-moneyness `x = ln(S/s0)` on `[-L, L]` with `M + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceGrid {
    pub intervals: usize,
    pub half_width: f64,
}

impl SpaceGrid {
    pub fn new(intervals: usize, half_width: f64) -> Result<Self> {
        if intervals < 2 {
            return Err(Error::input("solver", "space grid needs at least 2 intervals"));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::input("solver", "space grid half-width must be positive"));
        }
        Ok(Self {
            intervals,
            half_width,
        })
    }

    /// Half-width `mult * sigma_max * sqrt(T)`.
    pub fn for_model(model: &MarketModel, intervals: usize, mult: f64) -> Result<Self> {
        let l = mult * model.coeffs.max_sigma() * model.grid.horizon.sqrt();
        Self::new(intervals, l)
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        let m = self.intervals as f64;
        self.half_width * (2.0 * j as f64 - m) / m
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.node(j)).collect()
    }

    fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.intervals as f64
    }

    /// Linear interpolation of nodal values, flat beyond the ends.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let pos = (x + self.half_width) / self.spacing();
        if !(pos > 0.0) {
            return values[0];
        }
        if pos >= self.intervals as f64 {
            return values[self.intervals];
        }
        let k = (pos.floor() as usize).min(self.intervals - 1);
        let theta = pos - k as f64;
        let (a, b) = (values[k], values[k + 1]);
        a + theta * (b - a)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Re-evaluate the driver once at the first explicit iterate.
    pub refine: bool,
}


/// Discrete solution `(Y, Z, U, pi_hat)` on `(time, space, default state)`.
///
/// `Y` has `N + 1` time slices; `Z`, `U` and `pi_hat` are defined on the
/// first `N`. `U` exists only before default.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    pub model: MarketModel,
    pub claim: Claim,
    pub set: StrategySet,
    pub space: SpaceGrid,
    pub quad_nodes: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    u: Vec<f64>,
    pi_hat: Vec<f64>,
}

impl ValueSurface {
    pub fn steps(&self) -> usize {
        self.model.grid.steps
    }

    fn offset(&self, i: usize, n: usize) -> usize {
        (i * 2 + n) * self.space.len()
    }

    pub fn y_slice(&self, i: usize, defaulted: bool) -> &[f64] {
        let o = self.offset(i, defaulted as usize);
        &self.y[o..o + self.space.len()]
    }

    pub fn z_slice(&self, i: usize, defaulted: bool) -> &[f64] {
        let o = self.offset(i, defaulted as usize);
        &self.z[o..o + self.space.len()]
    }

    pub fn pi_slice(&self, i: usize, defaulted: bool) -> &[f64] {
        let o = self.offset(i, defaulted as usize);
        &self.pi_hat[o..o + self.space.len()]
    }

    pub fn u_slice(&self, i: usize) -> &[f64] {
        let o = i * self.space.len();
        &self.u[o..o + self.space.len()]
    }

    /// `Y` at time index `i` and stock price `s`, interpolated in `ln s`.
    pub fn value(&self, i: usize, s: f64, defaulted: bool) -> f64 {
        let x = (s / self.model.s0).ln();
        self.space.interpolate(self.y_slice(i, defaulted), x)
    }

    /// Index of the time slice in force at time `t`.
    pub fn step_index(&self, t: f64) -> usize {
        let i = (t / self.model.grid.dt() + 1e-9).floor();
        (i.max(0.0) as usize).min(self.steps())
    }

    pub fn optimal_strategy(&self) -> OptimalStrategy<'_> {
        extract_optimal_strategy(self)
    }
}

/// The minimizer `pi_hat` as a feedback strategy.
#[derive(Debug, Clone, Copy)]
pub struct OptimalStrategy<'a> {
    surface: &'a ValueSurface,
}

impl Strategy for OptimalStrategy<'_> {
    fn amount(&self, t: f64, s: f64, defaulted: bool) -> f64 {
        let sf = self.surface;
        let i = sf.step_index(t).min(sf.steps() - 1);
        let x = (s / sf.model.s0).ln();
        sf.set.clamp(sf.space.interpolate(sf.pi_slice(i, defaulted), x))
    }
}

pub fn extract_optimal_strategy(surface: &ValueSurface) -> OptimalStrategy<'_> {
    OptimalStrategy { surface }
}

/// `Y` at `t = 0`, `S = s0`, before default.
pub fn surface_at_origin(surface: &ValueSurface) -> f64 {
    surface.space.interpolate(surface.y_slice(0, false), 0.0)
}

pub fn solve_bsde(
    model: &MarketModel,
    claim: &Claim,
    set: &StrategySet,
    space: &SpaceGrid,
    quad: &Quadrature,
) -> Result<ValueSurface> {
    solve_bsde_with(model, claim, set, space, quad, SolveOptions::default())
}

struct NodeSolution {
    y: f64,
    z: f64,
    u: f64,
    pi: f64,
}

pub fn solve_bsde_with(
    model: &MarketModel,
    claim: &Claim,
    set: &StrategySet,
    space: &SpaceGrid,
    quad: &Quadrature,
    opts: SolveOptions,
) -> Result<ValueSurface> {
    validate_model(model).into_result()?;
    claim.validate()?;
    if quad.is_empty() {
        return Err(Error::input("solver", "quadrature rule is empty"));
    }

    let steps = model.grid.steps;
    let width = space.len();
    let gamma = model.gamma;
    let mut surface = ValueSurface {
        model: model.clone(),
        claim: claim.clone(),
        set: *set,
        space: *space,
        quad_nodes: quad.len(),
        y: vec![0.0; (steps + 1) * 2 * width],
        z: vec![0.0; steps * 2 * width],
        u: vec![0.0; steps * width],
        pi_hat: vec![0.0; steps * 2 * width],
    };

    let xs = space.nodes();
    for n in 0..2 {
        let o = surface.offset(steps, n);
        for (j, &x) in xs.iter().enumerate() {
            let s = model.s0 * x.exp();
            surface.y[o + j] = (-gamma * claim.payoff(s, n == 1)).exp();
        }
    }

    let dt = model.grid.dt();
    let sqrt_dt = dt.sqrt();
    for i in (0..steps).rev() {
        let t = model.grid.time(i);
        let (next0, next1) = {
            let o0 = surface.offset(i + 1, 0);
            let o1 = surface.offset(i + 1, 1);
            (
                surface.y[o0..o0 + width].to_vec(),
                surface.y[o1..o1 + width].to_vec(),
            )
        };

        // Gaussian moves of x under P: drift (mu - sigma^2/2) dt
        let diffuse = |c: &CoeffSnapshot, x: f64, next: &[f64]| -> (f64, f64) {
            let drift = (c.mu - 0.5 * c.sigma * c.sigma) * dt;
            // centred on the value at x so constant slices are reproduced exactly
            let base = space.interpolate(next, x);
            let mut mean = 0.0;
            let mut moment = 0.0;
            for (&g, &w) in quad.nodes.iter().zip(&quad.weights) {
                let v = space.interpolate(next, x + drift + c.sigma * sqrt_dt * g) - base;
                mean += w * v;
                moment += w * v * g;
            }
            (base + mean, moment / sqrt_dt)
        };

        let post = model.snapshot(t, true);
        let post_nodes: Vec<Result<NodeSolution>> = xs
            .par_iter()
            .enumerate()
            .map(|(j, &x)| {
                let (e, z) = diffuse(&post, x, &next1);
                step_node(&post, set, e, z, 0.0, dt, opts.refine)
                    .ok_or(Error::DomainViolation {
                        step: i,
                        node: j,
                        state: 1,
                        y: e,
                        u: 0.0,
                    })
            })
            .collect();

        let pre = model.snapshot(t, false);
        let p = model.default_probability(i);
        let jump_shift = pre.beta.ln_1p();
        let pre_nodes: Vec<Result<NodeSolution>> = xs
            .par_iter()
            .enumerate()
            .map(|(j, &x)| {
                let (e0, z0) = diffuse(&pre, x, &next0);
                let after_jump = space.interpolate(&next1, x + jump_shift);
                let e = (1.0 - p) * e0 + p * after_jump;
                let z = (1.0 - p) * z0;
                let u = after_jump - e0;
                step_node(&pre, set, e, z, u, dt, opts.refine).ok_or(Error::DomainViolation {
                    step: i,
                    node: j,
                    state: 0,
                    y: e,
                    u,
                })
            })
            .collect();

        for (n, nodes) in [(1usize, post_nodes), (0usize, pre_nodes)] {
            let oy = surface.offset(i, n);
            for (j, sol) in nodes.into_iter().enumerate() {
                let sol = sol?;
                surface.y[oy + j] = sol.y;
                surface.z[oy + j] = sol.z;
                surface.pi_hat[oy + j] = sol.pi;
                if n == 0 {
                    surface.u[i * width + j] = sol.u;
                }
            }
        }
    }
    Ok(surface)
}

/// Explicit update `Y = E + dt f_min(E, Z, U)`; `None` when the iterate or
/// its inputs leave `Y > 0`, `Y + U >= 0`.
fn step_node(
    c: &CoeffSnapshot,
    set: &StrategySet,
    e: f64,
    z: f64,
    u: f64,
    dt: f64,
    refine: bool,
) -> Option<NodeSolution> {
    if !(e > 0.0) || !(e + u >= 0.0) {
        return None;
    }
    let mut m = minimize_driver_unchecked(c, set, e, z, u);
    let mut y = e + dt * m.value;
    if refine && y > 0.0 && y + u >= 0.0 {
        m = minimize_driver_unchecked(c, set, y, z, u);
        y = e + dt * m.value;
    }
    if !(y > 0.0) {
        return None;
    }
    Some(NodeSolution { y, z, u, pi: m.pi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RegimeCoefficients, TimeGrid};

    fn model(mu: f64, sigma: f64, beta: f64, lambda: f64, steps: usize) -> MarketModel {
        MarketModel::new(
            TimeGrid::new(1.0, steps),
            RegimeCoefficients::constant(mu, sigma, beta, lambda),
            1.0,
            1.0,
        )
    }

    fn solve(m: &MarketModel, claim: &Claim, k: f64, intervals: usize) -> ValueSurface {
        let space = SpaceGrid::for_model(m, intervals, DEFAULT_HALF_WIDTH_SDS).unwrap();
        solve_bsde(m, claim, &StrategySet::symmetric(k).unwrap(), &space, &Quadrature::default()).unwrap()
    }

    #[test]
    fn grid_is_symmetric() {
        let g = SpaceGrid::new(10, 1.5).unwrap();
        let xs = g.nodes();
        for j in 0..=10 {
            assert_eq!(xs[j], -xs[10 - j]);
        }
        assert_eq!(xs[5], 0.0);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn interpolation_is_flat_outside() {
        let g = SpaceGrid::new(4, 2.0).unwrap();
        let v = [0.0, 1.0, 4.0, 9.0, 16.0];
        assert_eq!(g.interpolate(&v, -5.0), 0.0);
        assert_eq!(g.interpolate(&v, 5.0), 16.0);
        assert_eq!(g.interpolate(&v, 0.5), 6.5);
        assert_eq!(g.interpolate(&v, 1.0), 9.0);
    }

    #[test]
    fn trivial_problem_is_constant() {
        let m = model(0.0, 0.3, -0.2, 0.0, 20);
        let sf = solve(&m, &Claim::zero(), 2.0, 40);
        for i in 0..20 {
            for n in [false, true] {
                assert!(sf.y_slice(i, n).iter().all(|&y| (y - 1.0).abs() < 1e-14));
                assert!(sf.z_slice(i, n).iter().all(|&z| z.abs() < 1e-14));
                assert!(sf.pi_slice(i, n).iter().all(|&p| p == 0.0));
            }
            assert!(sf.u_slice(i).iter().all(|&u| u.abs() < 1e-14));
        }
    }

    #[test]
    fn merton_value_and_strategy() {
        let m = model(1.0, 1.0, 0.0, 0.0, 200);
        let sf = solve(&m, &Claim::zero(), 2.0, 200);
        assert!((surface_at_origin(&sf) - (-0.5f64).exp()).abs() < 1e-3);
        let strat = sf.optimal_strategy();
        assert!((strat.amount(0.3, 1.7, false) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn clipped_merton_strategy() {
        let m = model(1.0, 1.0, 0.0, 0.0, 50);
        let sf = solve(&m, &Claim::zero(), 0.5, 50);
        assert!(sf.pi_slice(0, false).iter().all(|&p| p == 0.5));
    }

    #[test]
    fn bond_is_a_martingale() {
        let m = model(0.0, 0.2, 0.0, 0.1, 100);
        let bond = Claim::DefaultIndicator {
            survive: 1.0,
            default: 0.0,
        };
        let sf = solve(&m, &bond, 2.0, 100);
        let q = (-0.1f64).exp();
        let exact = q * (-1.0f64).exp() + 1.0 - q;
        assert!((surface_at_origin(&sf) - exact).abs() < 1e-12);
        assert!(sf.pi_slice(0, false).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn terminal_slice_is_exact() {
        let m = model(0.1, 0.3, -0.4, 0.5, 10);
        let space = SpaceGrid::for_model(&m, 30, 6.0).unwrap();
        let nodes: Vec<f64> = space.nodes().iter().map(|x| x.exp()).collect();
        let claim = Claim::tabulate(&nodes, |s, d| if d { 0.2 } else { (s - 1.0).max(0.0) });
        let sf = solve_bsde(&m, &claim, &StrategySet::symmetric(1.0).unwrap(), &space, &Quadrature::default()).unwrap();
        for (j, &s) in nodes.iter().enumerate() {
            for d in [false, true] {
                assert_eq!(sf.y_slice(10, d)[j], (-claim.payoff(s, d)).exp());
            }
        }
    }

    #[test]
    fn coarse_grid_reports_domain_violation() {
        // one huge step with a strongly negative driver drives Y below zero
        let m = MarketModel::new(
            TimeGrid::new(1.0, 1),
            RegimeCoefficients::constant(5.0, 0.5, 0.0, 0.0),
            1.0,
            1.0,
        );
        let space = SpaceGrid::for_model(&m, 10, 6.0).unwrap();
        let err = solve_bsde(&m, &Claim::zero(), &StrategySet::symmetric(50.0).unwrap(), &space, &Quadrature::default())
            .unwrap_err();
        assert!(matches!(err, Error::DomainViolation { step: 0, .. }), "{err}");
    }

    #[test]
    fn invalid_model_is_rejected() {
        let m = model(0.1, 0.0, 0.0, 0.0, 10);
        let space = SpaceGrid::new(10, 1.0).unwrap();
        let r = solve_bsde(&m, &Claim::zero(), &StrategySet::symmetric(1.0).unwrap(), &space, &Quadrature::default());
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }
}
