//! Hodges indifference prices from pairs of value functions.
//!
//! The buying price of `xi` is `p = ln(J(0,0) / J(0,xi)) / gamma`; the
//! selling price is `-p(-xi)`. Every leg uses the same numerics and k
//! schedule so most of the discretization error cancels in the ratio.

use serde::Serialize;

use crate::approx::{converge, k_sweep, KSweepResult, Numerics};
use crate::error::{Error, Result};
use crate::model::{validate_model, Claim, MarketModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KPrice {
    pub k: f64,
    pub p: f64,
}

/// Resolved numerical settings, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSettings {
    #[serde(rename = "N")]
    pub steps: usize,
    #[serde(rename = "M")]
    pub intervals: usize,
    /// Half-width of the log-price grid.
    #[serde(rename = "L")]
    pub half_width: f64,
    pub quad_nodes: usize,
    pub refine: bool,
    /// Set for doubling runs.
    pub k0: Option<f64>,
    pub tol_rel: Option<f64>,
    /// Set for single-bound runs.
    pub k: Option<f64>,
}

impl PriceSettings {
    fn new(model: &MarketModel, numerics: &Numerics) -> Self {
        Self {
            steps: model.grid.steps,
            intervals: numerics.space.intervals,
            half_width: numerics.space.half_width,
            quad_nodes: numerics.quad.len(),
            refine: numerics.options.refine,
            k0: None,
            tol_rel: None,
            k: None,
        }
    }
}

/// Serialized field order is the report format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceReport {
    pub gamma: f64,
    #[serde(rename = "J0_zero")]
    pub j0_zero: f64,
    #[serde(rename = "J0_claim")]
    pub j0_claim: f64,
    pub buy_price: f64,
    pub sell_price: f64,
    pub per_k: Vec<KPrice>,
    pub settings: PriceSettings,
    #[serde(skip)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub k_star_zero: Option<f64>,
    pub k_star_claim: Option<f64>,
    pub k_star_negated: Option<f64>,
    /// Largest increase of J0 along each leg's k schedule.
    pub max_increase: [f64; 3],
}

/// `ln(j_zero / j_claim) / gamma`.
pub fn price_from_values(j_zero: f64, j_claim: f64, gamma: f64) -> f64 {
    (j_zero / j_claim).ln() / gamma
}

/// Value `e^{-gamma x} V0` at initial wealth `x` given the value `V0` at zero.
pub fn wealth_scaling(x: f64, v0: f64, gamma: f64) -> f64 {
    (-gamma * x).exp() * v0
}

fn leg(
    name: &'static str,
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k0: f64,
    tol_rel: f64,
) -> Result<(f64, KSweepResult)> {
    converge(model, claim, numerics, k0, tol_rel).map_err(|e| Error::Leg {
        leg: name,
        source: Box::new(e),
    })
}

fn per_k(zero: &KSweepResult, other: &KSweepResult, gamma: f64) -> Vec<KPrice> {
    zero.ks
        .iter()
        .zip(&zero.j0s)
        .zip(other.ks.iter().zip(&other.j0s))
        .filter(|((ka, _), (kb, _))| ka == kb)
        .map(|((&k, &a), (_, &b))| KPrice {
            k,
            p: price_from_values(a, b, gamma),
        })
        .collect()
}

fn check_inputs(model: &MarketModel, claim: &Claim) -> Result<()> {
    validate_model(model).into_result()?;
    claim.validate()?;
    if !claim.lower_bound().is_finite() {
        return Err(Error::input("pricing", "claim must be bounded below"));
    }
    Ok(())
}

fn check_bounded_above(claim: &Claim) -> Result<()> {
    if !claim.upper_bound().is_finite() {
        return Err(Error::input(
            "pricing",
            "selling price needs a claim bounded above",
        ));
    }
    Ok(())
}

/// Buying and selling prices of `claim`, with per-k buying prices.
///
/// The zero, claim and negated-claim legs run concurrently.
pub fn indifference_price(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k0: f64,
    tol_rel: f64,
) -> Result<PriceReport> {
    check_inputs(model, claim)?;
    check_bounded_above(claim)?;
    let negated = claim.negated();
    let (zero, (with_claim, with_negated)) = rayon::join(
        || leg("zero", model, &Claim::zero(), numerics, k0, tol_rel),
        || {
            rayon::join(
                || leg("claim", model, claim, numerics, k0, tol_rel),
                || leg("negated claim", model, &negated, numerics, k0, tol_rel),
            )
        },
    );
    let (j0_zero, zero) = zero?;
    let (j0_claim, with_claim) = with_claim?;
    let (j0_negated, with_negated) = with_negated?;

    let gamma = model.gamma;
    Ok(PriceReport {
        gamma,
        j0_zero,
        j0_claim,
        buy_price: price_from_values(j0_zero, j0_claim, gamma),
        sell_price: -price_from_values(j0_zero, j0_negated, gamma),
        per_k: per_k(&zero, &with_claim, gamma),
        settings: PriceSettings {
            k0: Some(k0),
            tol_rel: Some(tol_rel),
            ..PriceSettings::new(model, numerics)
        },
        diagnostics: Diagnostics {
            k_star_zero: zero.k_star,
            k_star_claim: with_claim.k_star,
            k_star_negated: with_negated.k_star,
            max_increase: [
                zero.max_increase,
                with_claim.max_increase,
                with_negated.max_increase,
            ],
        },
    })
}

/// Prices with every leg solved at the single bound `k`; `per_k` is empty.
pub fn indifference_price_at(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k: f64,
) -> Result<PriceReport> {
    check_inputs(model, claim)?;
    check_bounded_above(claim)?;
    let negated = claim.negated();
    let one = |name: &'static str, c: &Claim| {
        k_sweep(model, c, numerics, &[k], false)
            .map(|r| r.last_j0())
            .map_err(|e| Error::Leg {
                leg: name,
                source: Box::new(e),
            })
    };
    let (zero, (with_claim, with_negated)) = rayon::join(
        || one("zero", &Claim::zero()),
        || rayon::join(|| one("claim", claim), || one("negated claim", &negated)),
    );
    let (j0_zero, j0_claim, j0_negated) = (zero?, with_claim?, with_negated?);
    let gamma = model.gamma;
    Ok(PriceReport {
        gamma,
        j0_zero,
        j0_claim,
        buy_price: price_from_values(j0_zero, j0_claim, gamma),
        sell_price: -price_from_values(j0_zero, j0_negated, gamma),
        per_k: Vec::new(),
        settings: PriceSettings {
            k: Some(k),
            ..PriceSettings::new(model, numerics)
        },
        diagnostics: Diagnostics {
            k_star_zero: Some(k),
            k_star_claim: Some(k),
            k_star_negated: Some(k),
            max_increase: [f64::NEG_INFINITY; 3],
        },
    })
}

/// Buying price only (two legs).
pub fn buy_price(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k0: f64,
    tol_rel: f64,
) -> Result<f64> {
    check_inputs(model, claim)?;
    let (zero, with_claim) = rayon::join(
        || leg("zero", model, &Claim::zero(), numerics, k0, tol_rel),
        || leg("claim", model, claim, numerics, k0, tol_rel),
    );
    Ok(price_from_values(zero?.0, with_claim?.0, model.gamma))
}

/// `p* = -p(-xi)`.
pub fn selling_price(
    model: &MarketModel,
    claim: &Claim,
    numerics: &Numerics,
    k0: f64,
    tol_rel: f64,
) -> Result<f64> {
    check_bounded_above(claim)?;
    Ok(-buy_price(model, &claim.negated(), numerics, k0, tol_rel)?)
}
