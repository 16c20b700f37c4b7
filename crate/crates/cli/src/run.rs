//! Subcommand bodies. Parallelism lives inside the library calls.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use indiff_core::approx::Numerics;
use indiff_core::report::{
    write_drift_csv, write_paths_csv, write_price_json, write_surface_csv, write_sweep_csv,
};
use indiff_core::{
    brute_force_dp, converge, extract_optimal_strategy, indifference_price, indifference_price_at,
    k_sweep, martingale_check, simulate_paths, solve_bsde_with, surface_at_origin, validate_model,
    DpTree, MarketModel, StrategySet, TimeGrid,
};
use log::{info, warn};
use serde::Serialize;

use crate::config::{NumericsBlock, OracleBlock, Resolved, RunConfig};
use crate::CliError;

/// Buffers the whole report, then writes it to `path` or standard output.
fn emit(
    path: Option<&Path>,
    write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<(), CliError> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory");
    match path {
        Some(p) => fs::write(p, &buf).map_err(|e| CliError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => io::stdout()
            .lock()
            .write_all(&buf)
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                source: e,
            }),
    }
}

fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

#[derive(Serialize)]
struct ValidateOutput<'a> {
    valid: bool,
    risk_premia: &'a [indiff_core::model::RiskPremium],
}

/// Model and claim checks only.
pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let report = validate_model(&cfg.market_model());
    for a in &report.alphas {
        info!("{} regime from t={}: alpha = {}", a.regime, a.start, a.alpha);
    }
    let alphas = report.alphas.clone();
    report.into_result()?;
    cfg.claim.validate()?;
    emit_json(
        None,
        &ValidateOutput {
            valid: true,
            risk_premia: &alphas,
        },
    )
}

fn required_k(block: &NumericsBlock) -> Result<f64, CliError> {
    block
        .k
        .ok_or_else(|| CliError::Config("numerics.k is required for solve".into()))
}

pub fn solve(r: &Resolved) -> Result<(), CliError> {
    let k = required_k(&r.block)?;
    let set = StrategySet::symmetric(k)?;
    let sf = solve_bsde_with(&r.model, &r.claim, &set, &r.numerics.space, &r.numerics.quad, r.numerics.options)?;
    info!("solve: J0(k={k}) = {}", surface_at_origin(&sf));
    emit(r.output.surface.as_deref(), |w| write_surface_csv(&sf, w))
}

pub fn converge_cmd(r: &Resolved) -> Result<(), CliError> {
    let sweep = match &r.block.ks {
        Some(ks) => k_sweep(&r.model, &r.claim, &r.numerics, ks, false)?,
        None => {
            let (j0, sweep) = converge(&r.model, &r.claim, &r.numerics, r.block.k0, r.block.tol_rel)?;
            info!("converge: J0 = {j0} at k = {:?}", sweep.k_star);
            sweep
        }
    };
    if !sweep.is_monotone() {
        warn!("converge: scheme noise {:e} above the monotonicity tolerance", sweep.max_increase);
    }
    emit(r.output.sweep.as_deref(), |w| write_sweep_csv(&sweep, w))
}

pub fn price(r: &Resolved) -> Result<(), CliError> {
    let report = match r.block.k {
        Some(k) => indifference_price_at(&r.model, &r.claim, &r.numerics, k)?,
        None => indifference_price(&r.model, &r.claim, &r.numerics, r.block.k0, r.block.tol_rel)?,
    };
    info!(
        "price: buy {} sell {} (k* = {:?})",
        report.buy_price, report.sell_price, report.diagnostics.k_star_claim
    );
    emit(r.output.price.as_deref(), |w| write_price_json(&report, w))
}

#[derive(Serialize)]
struct OracleSummary<'a> {
    #[serde(rename = "J0_tree")]
    j0_tree: f64,
    #[serde(rename = "J0_solver")]
    j0_solver: f64,
    rel_gap: f64,
    drift_mean: f64,
    drift_stderr: f64,
    /// `|drift| <= 3 SE` under the extracted optimal strategy.
    martingale: bool,
    numerics: &'a NumericsBlock,
    oracle: &'a OracleBlock,
}

pub fn oracle(r: &Resolved) -> Result<(), CliError> {
    let o = &r.oracle;
    let coarse = MarketModel {
        grid: TimeGrid::new(r.model.grid.horizon, o.n_small),
        ..r.model.clone()
    };
    let tree = DpTree::new(o.n_small, o.q, o.g, o.k);
    let Numerics { space, quad, options } = &r.numerics;
    let set = StrategySet::symmetric(o.k)?;
    let (bf, sf) = rayon::join(
        || brute_force_dp(&coarse, &r.claim, &tree),
        || solve_bsde_with(&r.model, &r.claim, &set, space, quad, *options),
    );
    let (bf, sf) = (bf?, sf?);
    let j0 = surface_at_origin(&sf);
    let strategy = extract_optimal_strategy(&sf);
    let drift = martingale_check(&r.model, &r.claim, &sf, &strategy, o.n_paths, o.seed)?;
    let summary = OracleSummary {
        j0_tree: bf,
        j0_solver: j0,
        rel_gap: ((j0 - bf) / bf).abs(),
        drift_mean: drift.mean,
        drift_stderr: drift.stderr,
        martingale: drift.is_martingale(3.0),
        numerics: &r.block,
        oracle: o,
    };
    info!(
        "oracle: tree {bf} solver {j0} drift {:e} +- {:e}",
        drift.mean, drift.stderr
    );
    if !summary.martingale {
        warn!("oracle: optimal-strategy drift exceeds 3 standard errors");
    }
    emit(r.output.drift.as_deref(), |w| write_drift_csv(&drift, w))?;
    if let Some(p) = r.output.oracle.as_deref() {
        emit_json(Some(p), &summary)?;
    }
    if let Some(p) = r.output.paths.as_deref() {
        let ens = simulate_paths(&r.model, &strategy, o.n_paths, o.seed)?;
        emit(Some(p), |w| write_paths_csv(&ens, w))?;
    }
    Ok(())
}
