//! Unconstrained value function as the nonincreasing limit of the values
//! constrained to `[-k, k]`.

use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use crate::driver::StrategySet;
use crate::error::{Error, Result};
use crate::model::{Claim, MarketModel};
use crate::quadrature::Quadrature;
use crate::solver::{solve_bsde_with, surface_at_origin, SolveOptions, SpaceGrid, ValueSurface};

/// Nonincrease in `k` is certified up to this slack.
pub const MONOTONE_TOL: f64 = 1e-9;
pub const MAX_DOUBLINGS: usize = 20;

/// Discretization shared by every solve of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub space: SpaceGrid,
    pub quad: Quadrature,
    pub options: SolveOptions,
}

impl Numerics {
    pub fn new(space: SpaceGrid, quad: Quadrature) -> Self {
        Self {
            space,
            quad,
            options: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct KSweepResult {
    pub ks: Vec<f64>,
    pub j0s: Vec<f64>,
    pub runtimes_ms: Vec<f64>,
    /// Retained only when requested.
    pub surfaces: Vec<ValueSurface>,
    pub converged: bool,
    /// Bound whose value was accepted by the stopping rule.
    pub k_star: Option<f64>,
    /// Largest increase `J0(k_{i+1}) - J0(k_i)`; zero or negative when monotone.
    pub max_increase: f64,
}

impl KSweepResult {
    fn from_runs(runs: Vec<(f64, f64, f64, Option<ValueSurface>)>) -> Self {
        let mut r = KSweepResult {
            ks: Vec::with_capacity(runs.len()),
            j0s: Vec::with_capacity(runs.len()),
            runtimes_ms: Vec::with_capacity(runs.len()),
            surfaces: Vec::new(),
            converged: false,
            k_star: None,
            max_increase: f64::NEG_INFINITY,
        };
        for (k, j0, ms, sf) in runs {
            r.ks.push(k);
            r.j0s.push(j0);
            r.runtimes_ms.push(ms);
            r.surfaces.extend(sf);
        }
        r.max_increase = max_increase(&r.j0s);
        r
    }

    pub fn is_monotone(&self) -> bool {
        self.max_increase <= MONOTONE_TOL
    }

    pub fn last_j0(&self) -> f64 {
        *self.j0s.last().expect("sweep is nonempty")
    }
}

fn max_increase(j0s: &[f64]) -> f64 {
    j0s.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn solve_at(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k: f64,
    keep: bool,
) -> Result<(f64, f64, f64, Option<ValueSurface>)> {
    let start = Instant::now();
    let tag = |e: Error| Error::AtBound {
        k,
        source: Box::new(e),
    };
    let set = StrategySet::symmetric(k).map_err(tag)?;
    let sf = solve_bsde_with(model, claim, &set, &numerics.space, &numerics.quad, numerics.options)
        .map_err(tag)?;
    let j0 = surface_at_origin(&sf);
    let ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((k, j0, ms, keep.then_some(sf)))
}

/// One solve per bound in `ks` (in parallel), gathered in order.
pub fn k_sweep(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    ks: &[f64],
    keep_surfaces: bool,
) -> Result<KSweepResult> {
    if ks.is_empty() {
        return Err(Error::input("approx", "k schedule is empty"));
    }
    if ks.iter().any(|&k| !(k > 0.0 && k.is_finite())) || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input(
            "approx",
            "k schedule must be positive and strictly increasing",
        ));
    }
    let runs: Vec<Result<_>> = ks
        .par_iter()
        .map(|&k| solve_at(model, claim, numerics, k, keep_surfaces))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let r = KSweepResult::from_runs(runs);
    if !r.is_monotone() {
        warn!(
            "approx: J0 increases by {:e} along the k schedule (scheme noise above {MONOTONE_TOL:e})",
            r.max_increase
        );
    }
    Ok(r)
}

/// Doubles `k` from `k0` until `|J0(2k) - J0(k)| <= tol_rel * J0(k)` and
/// returns the last value as the unconstrained `J(0)`.
pub fn converge(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k0: f64,
    tol_rel: f64,
) -> Result<(f64, KSweepResult)> {
    if !(k0 > 0.0 && k0.is_finite()) {
        return Err(Error::input("approx", "k0 must be positive"));
    }
    if !(tol_rel > 0.0) {
        return Err(Error::input("approx", "tol_rel must be positive"));
    }
    let mut runs = vec![solve_at(model, claim, numerics, k0, false)?];
    for _ in 0..MAX_DOUBLINGS {
        let (k, prev, _, _) = runs[runs.len() - 1];
        let next = solve_at(model, claim, numerics, 2.0 * k, false)?;
        let j = next.1;
        runs.push(next);
        if (j - prev).abs() <= tol_rel * prev {
            let mut r = KSweepResult::from_runs(runs);
            r.converged = true;
            r.k_star = Some(2.0 * k);
            if !r.is_monotone() {
                warn!("approx: J0 increases by {:e} along the doublings", r.max_increase);
            }
            return Ok((j, r));
        }
    }
    let r = KSweepResult::from_runs(runs);
    Err(Error::NonConvergence {
        ks: r.ks,
        j0s: r.j0s,
    })
}
