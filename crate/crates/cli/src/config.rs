//! Run configuration: JSON schema, defaults, and resolution into library
//! inputs. Everything is checked here, before any compute starts.

use std::fs;
use std::path::{Path, PathBuf};

use indiff_core::approx::Numerics;
use indiff_core::model::{PostDefault, PreDefault};
use indiff_core::oracle::{MAX_BRANCHES, MAX_STRATEGIES, MAX_TREE_STEPS, MIN_PATHS};
use indiff_core::{
    validate_model, Claim, MarketModel, Quadrature, RegimeCoefficients, SolveOptions, SpaceGrid,
    TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub claim: Claim,
    #[serde(default)]
    pub numerics: NumericsBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub gamma: f64,
    #[serde(default = "one")]
    pub s0: f64,
    pub pre_default: PreDefault,
    pub post_default: PostDefault,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBlock {
    /// Space intervals; defaults to the number of time steps.
    #[serde(rename = "M", default)]
    pub intervals: Option<usize>,
    /// Grid half-width in units of `max sigma * sqrt(T)`.
    #[serde(rename = "L_mult", default = "default_l_mult")]
    pub half_width_sds: f64,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_tol_rel")]
    pub tol_rel: f64,
    /// Explicit schedule for `converge`; doubling from `k0` when absent.
    #[serde(default)]
    pub ks: Option<Vec<f64>>,
    /// Single bound for `solve` and single-bound `price` runs.
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub refine: bool,
}

impl Default for NumericsBlock {
    fn default() -> Self {
        Self {
            intervals: None,
            half_width_sds: default_l_mult(),
            quad_nodes: default_quad_nodes(),
            k0: default_k0(),
            tol_rel: default_tol_rel(),
            ks: None,
            k: None,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    #[serde(rename = "N_small", default = "default_n_small")]
    pub n_small: usize,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(rename = "G", default = "default_g")]
    pub g: usize,
    #[serde(default = "default_oracle_k")]
    pub k: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self {
            n_small: default_n_small(),
            q: default_q(),
            g: default_g(),
            k: default_oracle_k(),
            n_paths: default_n_paths(),
            seed: 0,
        }
    }
}

/// Report destinations; standard output when absent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub surface: Option<PathBuf>,
    pub sweep: Option<PathBuf>,
    pub price: Option<PathBuf>,
    pub drift: Option<PathBuf>,
    /// Oracle summary JSON.
    pub oracle: Option<PathBuf>,
    /// Simulated paths under the optimal strategy (oracle only).
    pub paths: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}
fn default_l_mult() -> f64 {
    indiff_core::solver::DEFAULT_HALF_WIDTH_SDS
}
fn default_quad_nodes() -> usize {
    7
}
fn default_k0() -> f64 {
    0.25
}
fn default_tol_rel() -> f64 {
    1e-6
}
fn default_n_small() -> usize {
    8
}
fn default_q() -> usize {
    7
}
fn default_g() -> usize {
    81
}
fn default_oracle_k() -> f64 {
    2.0
}
fn default_n_paths() -> usize {
    10_000
}

/// Validated library inputs.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: MarketModel,
    pub claim: Claim,
    pub numerics: Numerics,
    pub block: NumericsBlock,
    pub oracle: OracleBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn market_model(&self) -> MarketModel {
        let m = &self.model;
        MarketModel::new(
            TimeGrid::new(m.horizon, m.steps),
            RegimeCoefficients {
                pre_default: m.pre_default.clone(),
                post_default: m.post_default.clone(),
            },
            m.gamma,
            m.s0,
        )
    }

    /// Checks every block and the output paths; `seed` overrides the oracle seed.
    pub fn resolve(mut self, seed: Option<u64>) -> Result<Resolved, CliError> {
        let model = self.market_model();
        validate_model(&model).into_result()?;
        self.claim.validate()?;
        if let Some(s) = seed {
            self.oracle.seed = s;
        }

        let mut block = self.numerics;
        let intervals = *block.intervals.get_or_insert(model.grid.steps);
        let space = SpaceGrid::for_model(&model, intervals, block.half_width_sds)?;
        let quad = Quadrature::gauss_hermite(block.quad_nodes)?;
        check(block.k0 > 0.0 && block.k0.is_finite(), "numerics.k0 must be positive")?;
        check(block.tol_rel > 0.0 && block.tol_rel.is_finite(), "numerics.tol_rel must be positive")?;
        if let Some(k) = block.k {
            check(k > 0.0 && k.is_finite(), "numerics.k must be positive")?;
        }
        if let Some(ks) = &block.ks {
            check(!ks.is_empty(), "numerics.ks must not be empty")?;
            check(
                ks.iter().all(|&k| k > 0.0 && k.is_finite()) && ks.windows(2).all(|w| w[0] < w[1]),
                "numerics.ks must be positive and strictly increasing",
            )?;
        }

        let o = &self.oracle;
        check(
            (1..=MAX_TREE_STEPS).contains(&o.n_small),
            format!("oracle.N_small must be in 1..={MAX_TREE_STEPS}"),
        )?;
        check((1..=MAX_BRANCHES).contains(&o.q), format!("oracle.q must be in 1..={MAX_BRANCHES}"))?;
        check((1..=MAX_STRATEGIES).contains(&o.g), format!("oracle.G must be in 1..={MAX_STRATEGIES}"))?;
        check(o.k > 0.0 && o.k.is_finite(), "oracle.k must be positive")?;
        check(o.n_paths >= MIN_PATHS, format!("oracle.n_paths must be at least {MIN_PATHS}"))?;

        let out = &self.output;
        for p in [&out.surface, &out.sweep, &out.price, &out.drift, &out.oracle, &out.paths]
            .into_iter()
            .flatten()
        {
            check_writable(p)?;
        }

        let numerics = Numerics {
            space,
            quad,
            options: SolveOptions {
                refine: block.refine,
            },
        };
        Ok(Resolved {
            model,
            claim: self.claim,
            numerics,
            block,
            oracle: self.oracle,
            output: self.output,
        })
    }
}

fn check(ok: bool, message: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(message.into()))
    }
}

fn check_writable(path: &Path) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |msg: &str| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, msg.to_string()),
    };
    if !parent.is_dir() {
        return Err(io_err("output directory does not exist"));
    }
    if path.is_dir() {
        return Err(io_err("output path is a directory"));
    }
    let readonly = fs::metadata(parent).map(|m| m.permissions().readonly()).unwrap_or(true);
    if readonly {
        return Err(io_err("output directory is not writable"));
    }
    Ok(())
}
