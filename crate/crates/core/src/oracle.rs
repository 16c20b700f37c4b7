//! Independent checks of the solver.
//!
//! [`brute_force_dp`] evaluates `inf_pi E[exp(-gamma (X_T + xi))]` directly on
//! a small scenario tree: each step branches into `q` Gauss–Hermite
//! increments (no default) plus one default branch, and at every node the
//! expected next value is minimized over a fixed grid of strategies. Since
//! `exp(-gamma X)` factors out of the conditional expectation, wealth never
//! has to be carried in the tree state.
//!
//! [`martingale_check`] simulates `exp(-gamma X_t) Y(t, S_t, N_t)` along
//! paths: it must be a submartingale for every strategy and a martingale
//! for the optimal one. It tests the solver's surface against the dynamic
//! programming principle, not against ground truth.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{simulate_path, validate_model, Claim, MarketModel, Strategy};
use crate::quadrature::Quadrature;
use crate::solver::ValueSurface;

pub const MAX_TREE_STEPS: usize = 10;
pub const MAX_BRANCHES: usize = 9;
pub const MAX_STRATEGIES: usize = 101;
pub const DEFAULT_BUDGET: u128 = 4_000_000_000;
pub const MIN_PATHS: usize = 1000;

/// Scenario tree and strategy grid for [`brute_force_dp`].
#[derive(Debug, Clone, PartialEq)]
pub struct DpTree {
    pub steps: usize,
    pub branches: usize,
    pub strategies: Vec<f64>,
    /// Cap on `node evaluations x strategies x children`.
    pub budget: u128,
}

impl DpTree {
    /// `count` equispaced strategies on `[-k, k]`; a single strategy means `{0}`.
    pub fn new(steps: usize, branches: usize, count: usize, k: f64) -> Self {
        let strategies = if count <= 1 {
            vec![0.0]
        } else {
            (0..count)
                .map(|g| k * (2.0 * g as f64 - (count - 1) as f64) / (count - 1) as f64)
                .collect()
        };
        Self {
            steps,
            branches,
            strategies,
            budget: DEFAULT_BUDGET,
        }
    }

    fn check(&self) -> Result<()> {
        if !(1..=MAX_TREE_STEPS).contains(&self.steps) {
            return Err(Error::input("oracle", format!("tree steps must be in 1..={MAX_TREE_STEPS}")));
        }
        if !(1..=MAX_BRANCHES).contains(&self.branches) {
            return Err(Error::input("oracle", format!("branch count must be in 1..={MAX_BRANCHES}")));
        }
        if self.strategies.is_empty() || self.strategies.len() > MAX_STRATEGIES {
            return Err(Error::input("oracle", format!("strategy grid size must be in 1..={MAX_STRATEGIES}")));
        }
        if self.strategies.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("oracle", "strategy grid must be finite"));
        }
        Ok(())
    }

    /// Work units of the full (stock-dependent) tree.
    fn full_work(&self) -> u128 {
        let q = self.branches as u128;
        let per_node = self.strategies.len() as u128 * (q + 1);
        // internal node counts, pre- and post-default
        let (mut pre, mut post) = (1u128, 0u128);
        let mut internal = 0u128;
        for _ in 0..self.steps {
            internal += pre + post;
            let next_pre = pre * q;
            let next_post = post * q + pre;
            pre = next_pre;
            post = next_post;
        }
        internal * per_node
    }

    fn collapsed_work(&self) -> u128 {
        2 * self.steps as u128 * self.strategies.len() as u128 * (self.branches as u128 + 1)
    }
}

/// Per-step discount factors `exp(-gamma pi * return)` for every strategy.
struct StepTables {
    p: f64,
    pre_drift: f64,
    pre_vol: f64,
    post_drift: f64,
    post_vol: f64,
    jump_shift: f64,
    /// `[g][m]` for the no-default moves, before and after default.
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    /// `[g]` for the default branch.
    jump: Vec<f64>,
}

fn tables(model: &MarketModel, tree: &DpTree, quad: &Quadrature) -> Vec<StepTables> {
    let dt = model.grid.horizon / tree.steps as f64;
    let sq = dt.sqrt();
    let gamma = model.gamma;
    (0..tree.steps)
        .map(|i| {
            let t = i as f64 * dt;
            let pre = model.snapshot(t, false);
            let post = model.snapshot(t, true);
            let factors = |mu: f64, sigma: f64| -> Vec<Vec<f64>> {
                tree.strategies
                    .iter()
                    .map(|&pi| {
                        quad.nodes
                            .iter()
                            .map(|&g| (-gamma * pi * (mu * dt + sigma * sq * g)).exp())
                            .collect()
                    })
                    .collect()
            };
            StepTables {
                p: -(-pre.lambda * dt).exp_m1(),
                pre_drift: (pre.mu - 0.5 * pre.sigma * pre.sigma) * dt,
                pre_vol: pre.sigma * sq,
                post_drift: (post.mu - 0.5 * post.sigma * post.sigma) * dt,
                post_vol: post.sigma * sq,
                jump_shift: pre.beta.ln_1p(),
                pre: factors(pre.mu, pre.sigma),
                post: factors(post.mu, post.sigma),
                jump: tree
                    .strategies
                    .iter()
                    .map(|&pi| (-gamma * pi * (pre.mu * dt + pre.beta)).exp())
                    .collect(),
            }
        })
        .collect()
}

fn best_post(tab: &StepTables, weights: &[f64], children: &[f64]) -> f64 {
    tab.post
        .iter()
        .map(|row| {
            row.iter()
                .zip(weights)
                .zip(children)
                .map(|((a, w), c)| a * w * c)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn best_pre(tab: &StepTables, weights: &[f64], children: &[f64], after_jump: f64) -> f64 {
    tab.pre
        .iter()
        .zip(&tab.jump)
        .map(|(row, b)| {
            let diffuse: f64 = row
                .iter()
                .zip(weights)
                .zip(children)
                .map(|((a, w), c)| a * w * c)
                .sum();
            (1.0 - tab.p) * diffuse + tab.p * b * after_jump
        })
        .fold(f64::INFINITY, f64::min)
}

struct Tree<'a> {
    model: &'a MarketModel,
    claim: &'a Claim,
    quad: &'a Quadrature,
    tabs: Vec<StepTables>,
}

impl Tree<'_> {
    fn terminal(&self, log_s: f64, defaulted: bool) -> f64 {
        let s = self.model.s0 * log_s.exp();
        (-self.model.gamma * self.claim.payoff(s, defaulted)).exp()
    }

    fn node(&self, i: usize, log_s: f64, defaulted: bool) -> f64 {
        if i == self.tabs.len() {
            return self.terminal(log_s, defaulted);
        }
        let tab = &self.tabs[i];
        let (drift, vol) = if defaulted {
            (tab.post_drift, tab.post_vol)
        } else {
            (tab.pre_drift, tab.pre_vol)
        };
        let child = |g: &f64| self.node(i + 1, log_s + drift + vol * g, defaulted);
        let children: Vec<f64> = if i < 2 {
            self.quad.nodes.par_iter().map(child).collect()
        } else {
            self.quad.nodes.iter().map(child).collect()
        };
        if defaulted {
            best_post(tab, &self.quad.weights, &children)
        } else {
            let after_jump = self.node(i + 1, log_s + tab.jump_shift, true);
            best_pre(tab, &self.quad.weights, &children, after_jump)
        }
    }

    /// Values depend only on `(step, default state)` when the claim ignores `S`.
    fn collapsed(&self) -> f64 {
        let mut pre = self.terminal(0.0, false);
        let mut post = self.terminal(0.0, true);
        let m = self.quad.len();
        for tab in self.tabs.iter().rev() {
            let new_post = best_post(tab, &self.quad.weights, &vec![post; m]);
            pre = best_pre(tab, &self.quad.weights, &vec![pre; m], post);
            post = new_post;
        }
        pre
    }
}

/// Root value `inf_pi E[exp(-gamma (X_T + xi))]` of the scenario tree.
pub fn brute_force_dp(model: &MarketModel, claim: &Claim, tree: &DpTree) -> Result<f64> {
    validate_model(model).into_result()?;
    claim.validate()?;
    tree.check()?;
    let required = if claim.depends_on_stock() {
        tree.full_work()
    } else {
        tree.collapsed_work()
    };
    if required > tree.budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: tree.budget,
        });
    }
    let quad = Quadrature::gauss_hermite(tree.branches)?;
    let t = Tree {
        model,
        claim,
        quad: &quad,
        tabs: tables(model, tree, &quad),
    };
    Ok(if claim.depends_on_stock() {
        t.node(0, 0.0, false)
    } else {
        t.collapsed()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDrift {
    pub step: usize,
    pub t: f64,
    pub mean_increment: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub n_paths: usize,
    /// Mean over paths of `V_T - V_0`.
    pub mean: f64,
    pub stderr: f64,
    pub steps: Vec<StepDrift>,
}

impl DriftReport {
    /// `|mean| <= sds * stderr`.
    pub fn is_martingale(&self, sds: f64) -> bool {
        self.mean.abs() <= sds * self.stderr
    }

    /// `mean >= -sds * stderr`.
    pub fn is_submartingale(&self, sds: f64) -> bool {
        self.mean >= -sds * self.stderr
    }
}

fn mean_and_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    (mean, (var / nf).sqrt())
}

/// Drift of `V_t = exp(-gamma X_t) Y(t, S_t, N_t)` along simulated paths.
pub fn martingale_check(
    model: &MarketModel,
    claim: &Claim,
    surface: &ValueSurface,
    strategy: &dyn Strategy,
    n_paths: usize,
    seed: u64,
) -> Result<DriftReport> {
    if n_paths < MIN_PATHS {
        return Err(Error::input(
            "oracle",
            format!("martingale check needs at least {MIN_PATHS} paths"),
        ));
    }
    if surface.model != *model || surface.claim != *claim {
        return Err(Error::input(
            "oracle",
            "surface was solved for a different model or claim",
        ));
    }
    validate_model(model).into_result()?;
    let gamma = model.gamma;
    let steps = model.grid.steps;

    let increments: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path(model, strategy, seed, k);
            let v: Vec<f64> = (0..=steps)
                .map(|i| (-gamma * path.x[i]).exp() * surface.value(i, path.s[i], path.n[i] == 1))
                .collect();
            v.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect();

    let step_stats = (0..steps)
        .map(|i| {
            let (mean, se) = mean_and_stderr(increments.iter().map(|d| d[i]), n_paths);
            StepDrift {
                step: i,
                t: model.grid.time(i),
                mean_increment: mean,
                stderr: se,
            }
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(increments.iter().map(|d| d.iter().sum::<f64>()), n_paths);
    Ok(DriftReport {
        n_paths,
        mean,
        stderr,
        steps: step_stats,
    })
}
