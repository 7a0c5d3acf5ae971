//! Finite-dimensional linear program for the relaxed fuel-optimal problem
//! under zero-order hold.
//!
//! Decision vector, for `N` steps, `n` states and `m` inputs:
//!
//! ```text
//! [ u⁺_0 u⁻_0 ν_0 | u⁺_1 u⁻_1 ν_1 | ... | u⁺_{N-1} u⁻_{N-1} ν_{N-1} | x_0 x_1 ... x_N ]
//! ```
//!
//! with `u_k = u⁺_k − u⁻_k`. The program is
//!
//! ```text
//! minimize    dt Σ ν_k
//! subject to  x_0 = x0,  x_N = xf
//!             x_{k+1} = A_d x_k + B_d (u⁺_k − u⁻_k)
//!             Σ_j (u⁺_k + u⁻_k)_j ≤ ν_k ≤ u_max
//!             u⁺, u⁻, ν ≥ 0
//! ```
//!
//! The cost state of the augmented plant is not materialized: under a zero
//! order hold on `ν` it equals `dt Σ ν_k` at the final time.

use nalgebra::DVector;

use crate::analysis::{ComplementarityFlag, Solution};
use crate::error::{Error, Result};
use crate::inputset::DiscreteInputSet;
use crate::linsys::{controllability_rank, zoh_discretize, DiscretizedSystem, LtiSystem};
use crate::lpsolve::{solve_lp, CsrMatrix, LpResult, SolverOptions, StandardFormProgram};

/// Offsets of each block in the decision vector and constraint rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub steps: usize,
    pub n: usize,
    pub m: usize,
}

impl VariableLayout {
    fn block(&self) -> usize {
        2 * self.m + 1
    }

    pub fn u_plus(&self, k: usize) -> usize {
        k * self.block()
    }

    pub fn u_minus(&self, k: usize) -> usize {
        k * self.block() + self.m
    }

    pub fn nu(&self, k: usize) -> usize {
        k * self.block() + 2 * self.m
    }

    /// Number of input-block variables `N (2m + 1)`.
    pub fn input_vars(&self) -> usize {
        self.steps * self.block()
    }

    /// Number of state variables `(N + 1) n`.
    pub fn state_vars(&self) -> usize {
        (self.steps + 1) * self.n
    }

    pub fn x(&self, k: usize) -> usize {
        self.input_vars() + k * self.n
    }

    pub fn total(&self) -> usize {
        self.input_vars() + self.state_vars()
    }

    pub fn initial_rows(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    pub fn dynamics_rows(&self, k: usize) -> std::ops::Range<usize> {
        let s = self.n + k * self.n;
        s..s + self.n
    }

    pub fn terminal_rows(&self) -> std::ops::Range<usize> {
        let s = self.n * (self.steps + 1);
        s..s + self.n
    }

    pub fn eq_rows(&self) -> usize {
        self.n * (self.steps + 2)
    }

    pub fn epigraph_row(&self, k: usize) -> usize {
        2 * k
    }

    pub fn cap_row(&self, k: usize) -> usize {
        2 * k + 1
    }

    pub fn ineq_rows(&self) -> usize {
        2 * self.steps
    }
}

#[derive(Debug, Clone)]
pub struct TranscribedProblem {
    pub sysd: DiscretizedSystem,
    pub set: DiscreteInputSet,
    pub x0: DVector<f64>,
    pub xf: DVector<f64>,
    pub layout: VariableLayout,
    pub program: StandardFormProgram,
}

/// Discretize and transcribe.
pub fn transcribe(
    sys: &LtiSystem,
    set: &DiscreteInputSet,
    x0: &[f64],
    xf: &[f64],
    t_f: f64,
    steps: usize,
) -> Result<TranscribedProblem> {
    if steps == 0 {
        return Err(Error::Argument("need at least one step".into()));
    }
    if !(t_f > 0.0) || !t_f.is_finite() || !(t_f / steps as f64 > 0.0) {
        return Err(Error::Argument(format!("invalid horizon t_f = {t_f} with N = {steps}")));
    }
    check_problem(sys, set, x0, xf)?;
    let sysd = zoh_discretize(sys, t_f, steps)?;
    build(sysd, set, x0, xf)
}

/// Transcribe on an already discretized plant.
pub fn transcribe_discrete(
    sysd: &DiscretizedSystem,
    set: &DiscreteInputSet,
    x0: &[f64],
    xf: &[f64],
) -> Result<TranscribedProblem> {
    check_problem(&sysd.source, set, x0, xf)?;
    build(sysd.clone(), set, x0, xf)
}

fn check_problem(sys: &LtiSystem, set: &DiscreteInputSet, x0: &[f64], xf: &[f64]) -> Result<()> {
    set.ensure_valid()?;
    if set.m() != sys.m() {
        return Err(Error::Structural(format!(
            "input set has dimension {}, plant has {} inputs",
            set.m(),
            sys.m()
        )));
    }
    if x0.len() != sys.n() || xf.len() != sys.n() {
        return Err(Error::Structural(format!(
            "boundary states must have dimension {}",
            sys.n()
        )));
    }
    if x0.iter().chain(xf).any(|v| !v.is_finite()) {
        return Err(Error::Structural("non-finite boundary state".into()));
    }
    let ctrb = controllability_rank(sys);
    if !ctrb.is_controllable {
        return Err(Error::Precondition(format!(
            "(A, B) is not controllable (rank {} < {}); normality of the relaxation is not certified",
            ctrb.rank, ctrb.n
        )));
    }
    Ok(())
}

fn build(
    sysd: DiscretizedSystem,
    set: &DiscreteInputSet,
    x0: &[f64],
    xf: &[f64],
) -> Result<TranscribedProblem> {
    let (n, m, steps) = (sysd.n(), sysd.m(), sysd.steps);
    let lay = VariableLayout { steps, n, m };
    let nv = lay.total();

    let mut c = vec![0.0; nv];
    let mut lower = vec![f64::NEG_INFINITY; nv];
    for k in 0..steps {
        c[lay.nu(k)] = sysd.dt;
        for i in lay.u_plus(k)..=lay.nu(k) {
            lower[i] = 0.0;
        }
    }

    let mut eq = Vec::with_capacity(steps * n * (n + 2 * m + 1) + 2 * n);
    let mut eq_rhs = vec![0.0; lay.eq_rows()];
    for i in 0..n {
        eq.push((lay.initial_rows().start + i, lay.x(0) + i, 1.0));
        eq_rhs[lay.initial_rows().start + i] = x0[i];
        eq.push((lay.terminal_rows().start + i, lay.x(steps) + i, 1.0));
        eq_rhs[lay.terminal_rows().start + i] = xf[i];
    }
    for k in 0..steps {
        let r0 = lay.dynamics_rows(k).start;
        for i in 0..n {
            let row = r0 + i;
            eq.push((row, lay.x(k + 1) + i, 1.0));
            for j in 0..n {
                let a = sysd.a_d[(i, j)];
                if a != 0.0 {
                    eq.push((row, lay.x(k) + j, -a));
                }
            }
            for j in 0..m {
                let b = sysd.b_d[(i, j)];
                if b != 0.0 {
                    eq.push((row, lay.u_plus(k) + j, -b));
                    eq.push((row, lay.u_minus(k) + j, b));
                }
            }
        }
    }

    let mut ineq = Vec::with_capacity(steps * (2 * m + 2));
    let mut ineq_rhs = vec![0.0; lay.ineq_rows()];
    for k in 0..steps {
        let epi = lay.epigraph_row(k);
        for j in 0..m {
            ineq.push((epi, lay.u_plus(k) + j, 1.0));
            ineq.push((epi, lay.u_minus(k) + j, 1.0));
        }
        ineq.push((epi, lay.nu(k), -1.0));
        let cap = lay.cap_row(k);
        ineq.push((cap, lay.nu(k), 1.0));
        ineq_rhs[cap] = set.u_max();
    }

    let program = StandardFormProgram {
        c,
        eq: CsrMatrix::from_triplets(lay.eq_rows(), nv, &eq),
        eq_rhs,
        ineq: CsrMatrix::from_triplets(lay.ineq_rows(), nv, &ineq),
        ineq_rhs,
        lower,
    };
    program.check()?;
    Ok(TranscribedProblem {
        sysd,
        set: set.clone(),
        x0: DVector::from_column_slice(x0),
        xf: DVector::from_column_slice(xf),
        layout: lay,
        program,
    })
}

/// Default complementarity and slack-gap tolerance, `1e-6 · max(1, u_max)`.
pub fn default_tol_comp(u_max: f64) -> f64 {
    1e-6 * u_max.max(1.0)
}

impl TranscribedProblem {
    pub fn tol_comp(&self) -> f64 {
        default_tol_comp(self.set.u_max())
    }

    /// The same program with explicit rows `Σ_j (u⁺_k + u⁻_k)_j ≤ u_max`
    /// appended. They are implied by the epigraph and cap rows.
    pub fn with_redundant_norm_rows(&self) -> StandardFormProgram {
        let lay = &self.layout;
        let mut t = Vec::new();
        for k in 0..lay.steps {
            for j in 0..lay.m {
                t.push((k, lay.u_plus(k) + j, 1.0));
                t.push((k, lay.u_minus(k) + j, 1.0));
            }
        }
        let extra = CsrMatrix::from_triplets(lay.steps, lay.total(), &t);
        let mut p = self.program.clone();
        p.ineq = p.ineq.vstack(&extra);
        p.ineq_rhs.extend(std::iter::repeat_n(self.set.u_max(), lay.steps));
        p
    }

    /// Same plant and input set with a different terminal state.
    pub fn retarget(&self, xf: &[f64]) -> Result<TranscribedProblem> {
        transcribe_discrete(&self.sysd, &self.set, self.x0.as_slice(), xf)
    }

    /// Solve and extract. The solution is `None` unless the solver reports
    /// an optimum.
    pub fn solve(&self, opts: &SolverOptions) -> Result<(LpResult, Option<Solution>)> {
        let r = solve_lp(&self.program, opts)?;
        let sol = if r.is_optimal() {
            let mut s = extract_solution(self, &r.primal)?;
            s.solve_time = r.solve_time;
            Some(s)
        } else {
            None
        };
        Ok((r, sol))
    }

    /// Multipliers of the terminal equality rows, i.e. the sensitivity of the
    /// optimal cost to `xf`.
    pub fn terminal_duals(&self, r: &LpResult) -> Vec<f64> {
        r.dual_eq[self.layout.terminal_rows()].to_vec()
    }
}

/// Map a primal vector back to input, slack and state sequences.
pub fn extract_solution(prob: &TranscribedProblem, z: &[f64]) -> Result<Solution> {
    let lay = &prob.layout;
    if z.len() != lay.total() {
        return Err(Error::Structural(format!(
            "primal vector has length {}, layout expects {}",
            z.len(),
            lay.total()
        )));
    }
    let tol = prob.tol_comp();
    let mut u = Vec::with_capacity(lay.steps);
    let mut nu = Vec::with_capacity(lay.steps);
    let mut complementarity = Vec::new();
    let mut slack_gaps = Vec::new();
    let mut max_slack_gap: f64 = 0.0;
    for k in 0..lay.steps {
        let mut uk = DVector::zeros(lay.m);
        for j in 0..lay.m {
            let (p, q) = (z[lay.u_plus(k) + j], z[lay.u_minus(k) + j]);
            uk[j] = p - q;
            if p.min(q) > tol {
                complementarity.push(ComplementarityFlag {
                    step: k,
                    component: j,
                    plus: p,
                    minus: q,
                });
            }
        }
        let v = z[lay.nu(k)];
        let gap = v - uk.lp_norm(1);
        max_slack_gap = max_slack_gap.max(gap);
        if gap > tol {
            slack_gaps.push((k, gap));
        }
        u.push(uk);
        nu.push(v);
    }
    let x = (0..=lay.steps)
        .map(|k| DVector::from_column_slice(&z[lay.x(k)..lay.x(k) + lay.n]))
        .collect();
    let dt = prob.sysd.dt;
    Ok(Solution {
        cost: dt * nu.iter().sum::<f64>(),
        u,
        nu,
        x,
        dt,
        status: crate::lpsolve::LpStatus::Optimal,
        solve_time: 0.0,
        complementarity_flags: complementarity,
        slack_gap_flags: slack_gaps,
        max_slack_gap,
    })
}
