//! Two-stage iterative hard thresholding for one scaled node problem.
//!
//! The dynamic stage starts from `β = 0` at `λ0 = c2 (sqrt(log(pK)/N) + ‖Zᵀ X_j / N‖∞)`
//! and shrinks the threshold geometrically by `κ` while it stays above
//! `λ∞ = c1 σ sqrt((log K + log(p)/s0) / N)`. The fixed stage then iterates at
//! `λ_fix = c3 σ sqrt((log(ŝ K) + log(p)/s0) / N)` until the iteration counter
//! passes `ceil(log(λ0/λ∞) / log(1/κ)) + c4 log N`. Each iteration is a unit
//! gradient step on `‖X_j - Z β‖² / (2N)` followed by the two-step threshold.
//!
//! `σ` is a plug-in noise scale: `sqrt(‖X_j‖² / N)` for the dynamic stage and
//! the root mean squared residual at the stage boundary for the fixed stage.
//! It can be switched off with [`SolverConfig::noise_scale`].

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientStack, ScaledDesign};
use crate::threshold::two_step_threshold_in_place;

/// How the neighbor-similarity level `s0` is chosen for each node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum S0Selection {
    /// Minimize the information criterion over the grid, node by node.
    #[default]
    PerNode,
    /// Use one shared value for every node.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Geometric decay of the dynamic threshold, in `(0, 1)`.
    pub kappa: f64,
    /// Column scaling constant: every scaled column has squared norm `c0 N`.
    /// It is also the effective gradient step on standardized covariates, so
    /// it must stay below `2 / λ_max` of their correlation matrix.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Penalty constant of the information criterion.
    pub c_ic: f64,
    /// Candidate `s0` values; `None` uses [`default_s0_grid`].
    pub s0_grid: Option<Vec<f64>>,
    pub s0_selection: S0Selection,
    /// Multiply `λ∞` and `λ_fix` by the plug-in noise scale.
    pub noise_scale: bool,
    pub max_total_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 0.85,
            c0: 0.1,
            c1: 0.27,
            c2: 1.5,
            c3: 0.45,
            c4: 30.0,
            c_ic: 2.0,
            s0_grid: None,
            s0_selection: S0Selection::PerNode,
            noise_scale: true,
            max_total_iters: 10_000,
        }
    }
}

/// All integers `1..=K` for `K <= 20`; otherwise 15 geometrically spaced
/// values in `[1, K]`, rounded and deduplicated.
pub fn default_s0_grid(k: usize) -> Vec<f64> {
    if k <= 20 {
        return (1..=k).map(|v| v as f64).collect();
    }
    let ratio = (k as f64).ln() / 14.0;
    let mut grid: Vec<f64> = (0..15)
        .map(|i| ((i as f64 * ratio).exp().round()).clamp(1.0, k as f64))
        .collect();
    grid.dedup();
    grid
}

impl SolverConfig {
    /// The `s0` candidates for `K` datasets.
    pub fn grid(&self, k: usize) -> Vec<f64> {
        match (&self.s0_selection, &self.s0_grid) {
            (S0Selection::Fixed(s0), _) => vec![*s0],
            (S0Selection::PerNode, Some(grid)) => grid.clone(),
            (S0Selection::PerNode, None) => default_s0_grid(k),
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad(format!("kappa must lie in (0, 1), got {}", self.kappa));
        }
        for (name, v) in [
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("c_ic", self.c_ic),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_total_iters == 0 {
            return bad("max_total_iters must be positive".into());
        }
        let grid = self.grid(k);
        if grid.is_empty() {
            return bad("s0 grid is empty".into());
        }
        if let Some(s0) = grid.iter().find(|s| !(**s >= 1.0 && **s <= k as f64)) {
            return bad(format!("s0 = {s0} is outside [1, {k}]"));
        }
        Ok(())
    }
}

/// Diagnostics of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub s0: f64,
    /// Threshold used at each iteration.
    pub lambdas: Vec<f64>,
    /// Iteration index at which the fixed stage began.
    pub stage_boundary: usize,
    pub lambda_0: f64,
    pub lambda_inf: f64,
    pub lambda_fix: f64,
    /// `(ŝ, Â)`: union support size (at least 1) and total nonzero count.
    pub final_support_sizes: (usize, usize),
    /// `‖X_j - Z β‖²` summed over datasets.
    pub residual_sq_norm: f64,
    /// Information criterion value, set by the tuner.
    pub criterion: Option<f64>,
}

/// `β + Zᵀ (X_j - Z β) / N`, block by block from the scaled data.
pub fn gradient_step(problem: &ScaledDesign, beta: &CoefficientStack) -> CoefficientStack {
    let total = problem.total() as f64;
    let sub = (0..problem.k())
        .map(|k| {
            let r = problem.residual(k, beta.sub(k));
            beta.sub(k) + problem.block(k).tr_mul(&r) / total
        })
        .collect();
    CoefficientStack::from_subvectors(sub, beta.node())
}

/// The same step through the cached Gram matrices: `β + c - G β`, touching
/// only the columns of `G` on the support of `β`.
fn gram_step(problem: &ScaledDesign, beta: &mut CoefficientStack, scratch: &mut DVector<f64>) {
    for k in 0..problem.k() {
        let gram = problem.gram(k);
        scratch.copy_from(problem.cross(k));
        let b = beta.sub(k);
        for (i, &v) in b.iter().enumerate() {
            if v != 0.0 {
                scratch.axpy(-v, &gram.column(i), 1.0);
            }
        }
        *beta.sub_mut(k) += &*scratch;
    }
}

fn iterate(
    problem: &ScaledDesign,
    beta: &mut CoefficientStack,
    lambda: f64,
    s0: f64,
    scratch: &mut DVector<f64>,
    iteration: usize,
) -> Result<()> {
    gram_step(problem, beta, scratch);
    if !beta.is_finite() {
        return Err(Error::NonFinite { iteration });
    }
    two_step_threshold_in_place(beta, lambda, s0);
    Ok(())
}

/// Runs the two-stage solver at a fixed `s0`.
pub fn solve(
    problem: &ScaledDesign,
    s0: f64,
    config: &SolverConfig,
) -> Result<(CoefficientStack, SolveTrace)> {
    let k = problem.k() as f64;
    let p = problem.p() as f64;
    let total = problem.total() as f64;
    if !(s0 >= 1.0 && s0 <= k) {
        return Err(Error::InvalidArgument(format!("s0 = {s0} is outside [1, {k}]")));
    }

    let sigma0 = if config.noise_scale {
        problem.response_mean_square().sqrt()
    } else {
        1.0
    };
    let lambda_inf = config.c1 * sigma0 * ((k.ln() + p.ln() / s0) / total).sqrt();
    let max_corr = (0..problem.k())
        .flat_map(|kk| problem.cross(kk).iter().copied())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let lambda_0 = config.c2 * (((p * k).ln() / total).sqrt() + max_corr);
    let planned = ((lambda_0 / lambda_inf).ln() / (1.0 / config.kappa).ln()).ceil()
        + config.c4 * total.ln();
    // The fixed stage runs while t <= planned, so it ends at floor(planned) + 1.
    let required = if planned >= 0.0 {
        planned.floor() as usize + 1
    } else {
        0
    };
    if required > config.max_total_iters {
        return Err(Error::IterationCapExceeded {
            required,
            cap: config.max_total_iters,
        });
    }

    let mut beta = CoefficientStack::zeros(problem.k(), problem.dim(), problem.node());
    let mut scratch = DVector::zeros(problem.dim());
    let mut lambdas = Vec::with_capacity(required);
    let mut t = 0usize;

    let mut lambda = lambda_0;
    while lambda >= lambda_inf {
        iterate(problem, &mut beta, lambda, s0, &mut scratch, t)?;
        lambdas.push(lambda);
        lambda *= config.kappa;
        t += 1;
    }
    let stage_boundary = t;

    let s_hat = beta.union_support().len().max(1) as f64;
    let sigma_fix = if config.noise_scale {
        (problem.residual_sq_norms(&beta).iter().sum::<f64>() / total).sqrt()
    } else {
        1.0
    };
    let lambda_fix = config.c3 * sigma_fix * (((s_hat * k).ln() + p.ln() / s0) / total).sqrt();
    while (t as f64) <= planned {
        iterate(problem, &mut beta, lambda_fix, s0, &mut scratch, t)?;
        lambdas.push(lambda_fix);
        t += 1;
    }

    let residual_sq_norm = problem.residual_sq_norms(&beta).iter().sum();
    let trace = SolveTrace {
        s0,
        lambdas,
        stage_boundary,
        lambda_0,
        lambda_inf,
        lambda_fix,
        final_support_sizes: (beta.union_support().len().max(1), beta.total_support()),
        residual_sq_norm,
        criterion: None,
    };
    Ok((beta, trace))
}

/// `log(‖X_j - Z β‖² / N) + (c_ic / N) (ŝ log p + Â log(K ŝ))`.
pub fn information_criterion(problem: &ScaledDesign, trace: &SolveTrace, c_ic: f64) -> f64 {
    let total = problem.total() as f64;
    let (s_hat, a_hat) = trace.final_support_sizes;
    let s_hat = s_hat as f64;
    (trace.residual_sq_norm / total).ln()
        + c_ic / total
            * (s_hat * (problem.p() as f64).ln() + a_hat as f64 * (problem.k() as f64 * s_hat).ln())
}

/// Solves at every grid value and keeps the information-criterion minimizer;
/// ties go to the smaller `s0`.
pub fn tune_s0(
    problem: &ScaledDesign,
    config: &SolverConfig,
) -> Result<(f64, CoefficientStack, SolveTrace)> {
    let mut grid = config.grid(problem.k());
    if grid.is_empty() {
        return Err(Error::InvalidArgument("s0 grid is empty".into()));
    }
    grid.sort_by(f64::total_cmp);
    let mut best: Option<(f64, CoefficientStack, SolveTrace)> = None;
    for s0 in grid {
        let (beta, mut trace) = solve(problem, s0, config)?;
        let ic = information_criterion(problem, &trace, config.c_ic);
        trace.criterion = Some(ic);
        let better = match &best {
            None => true,
            Some((_, _, b)) => ic < b.criterion.unwrap_or(f64::INFINITY),
        };
        if better {
            best = Some((s0, beta, trace));
        }
    }
    Ok(best.expect("grid is non-empty"))
}
