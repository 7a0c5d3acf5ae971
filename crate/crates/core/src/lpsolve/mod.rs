//! Linear programming backend.
//!
//! [`solve_lp`] is the only entry point the rest of the crate uses; any
//! backend honoring [`LpResult`]'s contract can stand in for the bundled
//! interior-point method. [`kkt_report`] recomputes optimality residuals from
//! scratch so results can be audited independently of the solver.

mod ipm;
pub mod ldl;
pub mod program;
pub mod sparse;

use serde::{Deserialize, Serialize};

pub use program::StandardFormProgram;
pub use sparse::CsrMatrix;

use crate::error::{Error, Result};
use sparse::{dot, norm_inf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Primal and dual feasibility tolerance, relative to `1 + ‖rhs‖∞`.
    pub tol_feas: f64,
    /// Relative duality-gap tolerance.
    pub tol_gap: f64,
    /// Threshold on normalized Farkas residuals for declaring infeasibility.
    pub tol_infeas: f64,
    pub max_iter: usize,
    /// Wall-clock budget in seconds.
    pub time_limit: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_feas: 1e-8,
            tol_gap: 1e-8,
            tol_infeas: 1e-8,
            max_iter: 200,
            time_limit: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            tol_feas: tol,
            tol_gap: tol,
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let ok = self.tol_feas > 0.0
            && self.tol_gap > 0.0
            && self.tol_infeas > 0.0
            && self.max_iter >= 1
            && self.time_limit.is_none_or(|t| t > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid solver options {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    PrimalInfeasible,
    /// The problem is unbounded below.
    DualInfeasible,
    /// Iteration or time budget exhausted.
    IterationLimit,
    NumericalFailure,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LpStatus::Optimal => "Optimal",
            LpStatus::PrimalInfeasible => "PrimalInfeasible",
            LpStatus::DualInfeasible => "DualInfeasible",
            LpStatus::IterationLimit => "IterationLimit",
            LpStatus::NumericalFailure => "NumericalFailure",
        };
        f.write_str(s)
    }
}

/// Proof of primal infeasibility: multipliers with
/// `−Eᵀy + Gᵀλ − μ ≈ 0`, `λ, μ ≥ 0` and `eᵀy − gᵀλ + lbᵀμ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    pub y: Vec<f64>,
    pub lambda: Vec<f64>,
    /// One entry per variable; zero for free variables.
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
}

/// Solver output.
///
/// Duals follow the convention `c − Eᵀy + Gᵀλ − μ = 0` with `λ, μ ≥ 0`,
/// so the dual objective is `eᵀy − gᵀλ + lbᵀμ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_ineq: Vec<f64>,
    /// Multipliers of the lower bounds, one per variable.
    pub dual_bounds: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub solve_time: f64,
    pub certificate: Option<FarkasCertificate>,
    pub trace: Vec<IterateLog>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solve `p` with a homogeneous interior-point method.
pub fn solve_lp(p: &StandardFormProgram, opts: &SolverOptions) -> Result<LpResult> {
    p.check()?;
    opts.check()?;
    Ok(ipm::solve(p, opts))
}

/// Residuals recomputed from the program data and the returned vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// `‖E z − e‖∞`.
    pub primal_eq: f64,
    /// `max(G z − g, 0)`.
    pub primal_ineq: f64,
    /// `max(lb − z, 0)`.
    pub bound_violation: f64,
    /// `‖c − Eᵀy + Gᵀλ − μ‖∞`.
    pub dual_residual: f64,
    /// `max(−λ, −μ, 0)`.
    pub dual_sign_violation: f64,
    /// `max_i |λ_i (g − G z)_i|` together with `|μ_j (z_j − lb_j)|`.
    pub complementarity: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal − dual| / max(1, |primal|)`.
    pub relative_gap: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal_eq
            .max(self.primal_ineq)
            .max(self.bound_violation)
            .max(self.dual_residual)
            .max(self.dual_sign_violation)
    }
}

pub fn kkt_report(p: &StandardFormProgram, r: &LpResult) -> Result<KktReport> {
    let n = p.nvars();
    let lens_ok = r.primal.len() == n
        && r.dual_eq.len() == p.n_eq()
        && r.dual_ineq.len() == p.n_ineq()
        && r.dual_bounds.len() == n;
    let all_finite = r
        .primal
        .iter()
        .chain(&r.dual_eq)
        .chain(&r.dual_ineq)
        .chain(&r.dual_bounds)
        .all(|v| v.is_finite());
    if !lens_ok || !all_finite {
        return Err(Error::Structural(
            "result lacks primal or dual vectors for this program".into(),
        ));
    }
    let z = &r.primal;
    let ez = p.eq.mul_vec(z);
    let primal_eq = norm_inf(&ez.iter().zip(&p.eq_rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    let gz = p.ineq.mul_vec(z);
    let slack: Vec<f64> = p.ineq_rhs.iter().zip(&gz).map(|(g, v)| g - v).collect();
    let primal_ineq = slack.iter().fold(0.0, |m: f64, s| m.max(-s));
    let mut bound_violation: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut lb_dot = 0.0;
    for i in 0..n {
        if p.lower[i].is_finite() {
            bound_violation = bound_violation.max(p.lower[i] - z[i]);
            complementarity = complementarity.max((r.dual_bounds[i] * (z[i] - p.lower[i])).abs());
            lb_dot += p.lower[i] * r.dual_bounds[i];
        } else if r.dual_bounds[i] != 0.0 {
            return Err(Error::Structural(format!("bound multiplier on free variable {i}")));
        }
    }
    for (l, s) in r.dual_ineq.iter().zip(&slack) {
        complementarity = complementarity.max((l * s).abs());
    }
    let mut grad = p.c.clone();
    p.eq.add_tr_mul_vec(-1.0, &r.dual_eq, &mut grad);
    p.ineq.add_tr_mul_vec(1.0, &r.dual_ineq, &mut grad);
    for (g, m) in grad.iter_mut().zip(&r.dual_bounds) {
        *g -= m;
    }
    let dual_residual = norm_inf(&grad);
    let dual_sign_violation = r
        .dual_ineq
        .iter()
        .chain(&r.dual_bounds)
        .fold(0.0, |m: f64, v| m.max(-v));
    let primal_objective = dot(&p.c, z);
    let dual_objective = dot(&p.eq_rhs, &r.dual_eq) - dot(&p.ineq_rhs, &r.dual_ineq) + lb_dot;
    Ok(KktReport {
        primal_eq,
        primal_ineq: primal_ineq.max(0.0),
        bound_violation: bound_violation.max(0.0),
        dual_residual,
        dual_sign_violation,
        complementarity,
        primal_objective,
        dual_objective,
        relative_gap: (primal_objective - dual_objective).abs() / primal_objective.abs().max(1.0),
    })
}
