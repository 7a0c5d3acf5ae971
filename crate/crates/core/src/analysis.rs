//! Post-solve certification: propagation, discreteness metrics, bang-bang
//! checks and the hands-off (L0) measure.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inputset::DiscreteInputSet;
use crate::linsys::DiscretizedSystem;
use crate::lpsolve::LpStatus;
use crate::transcription::default_tol_comp;

/// Both halves of a split input active at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityFlag {
    pub step: usize,
    pub component: usize,
    pub plus: f64,
    pub minus: f64,
}

/// Input, slack and state sequences of a solved program.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: Vec<DVector<f64>>,
    pub nu: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub dt: f64,
    /// Fuel `dt Σ ν_k`.
    pub cost: f64,
    pub status: LpStatus,
    pub solve_time: f64,
    pub complementarity_flags: Vec<ComplementarityFlag>,
    /// Steps with `ν_k − ‖u_k‖₁` above the complementarity tolerance.
    pub slack_gap_flags: Vec<(usize, f64)>,
    pub max_slack_gap: f64,
}

impl Solution {
    pub fn steps(&self) -> usize {
        self.u.len()
    }

    /// `dt Σ ‖u_k‖₁`.
    pub fn fuel(&self) -> f64 {
        self.dt * self.u.iter().map(|u| u.lp_norm(1)).sum::<f64>()
    }

    /// Build from an input sequence alone: `ν_k = ‖u_k‖₁`, states propagated.
    pub fn from_inputs(sysd: &DiscretizedSystem, x0: &[f64], u: Vec<DVector<f64>>) -> Result<Self> {
        let x = propagate(sysd, x0, &u)?;
        let nu: Vec<f64> = u.iter().map(|v| v.lp_norm(1)).collect();
        Ok(Self {
            cost: sysd.dt * nu.iter().sum::<f64>(),
            u,
            nu,
            x,
            dt: sysd.dt,
            status: LpStatus::Optimal,
            solve_time: 0.0,
            complementarity_flags: Vec::new(),
            slack_gap_flags: Vec::new(),
            max_slack_gap: 0.0,
        })
    }
}

/// `x_{k+1} = A_d x_k + B_d u_k`; returns all `N + 1` states.
pub fn propagate(sysd: &DiscretizedSystem, x0: &[f64], u: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    if x0.len() != sysd.n() {
        return Err(Error::Argument(format!(
            "x0 has dimension {}, expected {}",
            x0.len(),
            sysd.n()
        )));
    }
    if let Some(k) = u.iter().position(|v| v.len() != sysd.m()) {
        return Err(Error::Argument(format!(
            "u[{k}] has dimension {}, expected {}",
            u[k].len(),
            sysd.m()
        )));
    }
    let mut xs = Vec::with_capacity(u.len() + 1);
    let mut x = DVector::from_column_slice(x0);
    xs.push(x.clone());
    for uk in u {
        x = sysd.step(&x, uk);
        xs.push(x.clone());
    }
    Ok(xs)
}

/// Vertex-proximity tolerance, `1e-4 · max(1, u_max)`.
pub fn default_tol_vertex(u_max: f64) -> f64 {
    1e-4 * u_max.max(1.0)
}

/// Default share of on-vertex steps required for the bang-bang certificate.
pub const DEFAULT_VERTEX_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretenessReport {
    /// `d(u_k) = min over ζ of ‖u_k − ζ‖₂`.
    pub d: Vec<f64>,
    /// `(1/N) Σ d(u_k)`.
    pub d_bar: f64,
    pub fraction_on_vertices: f64,
    pub tol_vertex: f64,
    /// Steps whose input sits within `tol_vertex` of an extra (non-vertex) point.
    pub steps_near_extra: Vec<usize>,
    /// Nearest set member per step, as indices into the set's point list.
    pub quantized_index: Vec<usize>,
    pub quantized: Vec<Vec<f64>>,
    /// `‖x_N − xf‖₂` after propagating the quantized sequence open loop.
    pub quantized_terminal_error: f64,
}

/// Discreteness metrics for an optimal solution.
pub fn discreteness_report(
    set: &DiscreteInputSet,
    sol: &Solution,
    sysd: &DiscretizedSystem,
    xf: &[f64],
) -> Result<DiscretenessReport> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status.to_string()));
    }
    if sol.u.is_empty() {
        return Err(Error::Argument("empty control sequence".into()));
    }
    let aug = set.augmented_extreme_points()?;
    let tol_vertex = default_tol_vertex(set.u_max());
    let n_axis = 1 + 2 * set.m();
    let mut d = Vec::with_capacity(sol.steps());
    let mut quantized_index = Vec::with_capacity(sol.steps());
    let mut on_vertex = 0usize;
    let mut steps_near_extra = Vec::new();
    for (k, (uk, &nuk)) in sol.u.iter().zip(&sol.nu).enumerate() {
        let (idx, dist) = set.nearest(uk.as_slice());
        d.push(dist);
        quantized_index.push(idx);
        if aug.nearest_vertex(uk.as_slice(), nuk).1 <= tol_vertex {
            on_vertex += 1;
        }
        if idx >= n_axis && dist <= tol_vertex {
            steps_near_extra.push(k);
        }
    }
    let d_bar = d.iter().sum::<f64>() / d.len() as f64;
    let quantized: Vec<DVector<f64>> = quantized_index
        .iter()
        .map(|&i| set.points()[i].clone())
        .collect();
    let x0 = sol.x.first().ok_or_else(|| Error::Argument("empty state sequence".into()))?;
    let xq = propagate(sysd, x0.as_slice(), &quantized)?;
    let err = (xq.last().unwrap() - DVector::from_column_slice(xf)).norm();
    Ok(DiscretenessReport {
        d,
        d_bar,
        fraction_on_vertices: on_vertex as f64 / sol.steps() as f64,
        tol_vertex,
        steps_near_extra,
        quantized_index,
        quantized: quantized.iter().map(|v| v.iter().copied().collect()).collect(),
        quantized_terminal_error: err,
    })
}

/// `dt Σ_k ‖u_k‖₀`, counting components with `|u_kj| > zero_tol`.
pub fn hands_off_measure(sol: &Solution, zero_tol: f64) -> f64 {
    let active: usize = sol
        .u
        .iter()
        .map(|u| u.iter().filter(|v| v.abs() > zero_tol).count())
        .sum();
    sol.dt * active as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangBangCertificate {
    pub certified: bool,
    pub fraction_on_vertices: f64,
    pub threshold: f64,
    pub max_slack_gap: f64,
    pub tol_comp: f64,
    /// Steps off the vertex set or with a loose slack.
    pub exceptions: Vec<usize>,
}

/// Certify that the solution sits on the relaxed set's vertices at all but a
/// `1 − threshold` share of steps and that every slack is tight.
pub fn verify_bang_bang(set: &DiscreteInputSet, sol: &Solution, threshold: f64) -> Result<BangBangCertificate> {
    if sol.status != LpStatus::Optimal {
        return Err(Error::NotOptimal(sol.status.to_string()));
    }
    let aug = set.augmented_extreme_points()?;
    let tol_vertex = default_tol_vertex(set.u_max());
    let tol_comp = default_tol_comp(set.u_max());
    let mut exceptions = Vec::new();
    let mut on_vertex = 0usize;
    let mut max_gap: f64 = 0.0;
    for (k, (uk, &nuk)) in sol.u.iter().zip(&sol.nu).enumerate() {
        let near = aug.nearest_vertex(uk.as_slice(), nuk).1 <= tol_vertex;
        let gap = nuk - uk.lp_norm(1);
        max_gap = max_gap.max(gap);
        if near {
            on_vertex += 1;
        }
        if !near || gap > tol_comp {
            exceptions.push(k);
        }
    }
    let fraction = if sol.steps() == 0 {
        1.0
    } else {
        on_vertex as f64 / sol.steps() as f64
    };
    Ok(BangBangCertificate {
        certified: fraction >= threshold && max_gap <= tol_comp,
        fraction_on_vertices: fraction,
        threshold,
        max_slack_gap: max_gap,
        tol_comp,
        exceptions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::{zoh_discretize, LtiSystem};
    use approx::assert_abs_diff_eq;

    fn scalar_integrator(dt: f64, steps: usize) -> DiscretizedSystem {
        let s = LtiSystem::from_row_slices(1, 1, &[0.0], &[1.0]).unwrap();
        zoh_discretize(&s, dt * steps as f64, steps).unwrap()
    }

    fn seq(v: &[f64]) -> Vec<DVector<f64>> {
        v.iter().map(|x| DVector::from_element(1, *x)).collect()
    }

    #[test]
    fn propagate_zero_dynamics() {
        let s = LtiSystem::from_row_slices(2, 1, &[0.0; 4], &[1.0, 0.0]).unwrap();
        let d = zoh_discretize(&s, 3.0, 3).unwrap();
        let xs = propagate(&d, &[1.0, -2.0], &seq(&[0.0, 0.0, 0.0])).unwrap();
        assert!(xs.iter().all(|x| x.as_slice() == [1.0, -2.0]));
        assert!(propagate(&d, &[1.0], &seq(&[0.0])).is_err());
        assert!(propagate(&d, &[1.0, 0.0], &[DVector::zeros(2)]).is_err());
    }

    #[test]
    fn propagate_double_integrator_step() {
        let s = LtiSystem::from_row_slices(2, 1, &[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0]).unwrap();
        let d = zoh_discretize(&s, 1.0, 1).unwrap();
        let xs = propagate(&d, &[0.0, 0.0], &seq(&[1.0])).unwrap();
        assert_abs_diff_eq!(xs[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(xs[1][1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn all_vertex_solution() {
        let set = DiscreteInputSet::axis_only(2, 2.0).unwrap();
        let s = LtiSystem::from_row_slices(2, 2, &[0.0; 4], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let d = zoh_discretize(&s, 1.0, 4).unwrap();
        let u = vec![DVector::from_vec(vec![2.0, 0.0]); 4];
        let sol = Solution::from_inputs(&d, &[0.0, 0.0], u).unwrap();
        let r = discreteness_report(&set, &sol, &d, &[2.0, 0.0]).unwrap();
        assert_eq!(r.d_bar, 0.0);
        assert_eq!(r.fraction_on_vertices, 1.0);
        assert_abs_diff_eq!(r.quantized_terminal_error, 0.0, epsilon = 1e-14);
        let c = verify_bang_bang(&set, &sol, DEFAULT_VERTEX_FRACTION).unwrap();
        assert!(c.certified && c.exceptions.is_empty());
    }

    #[test]
    fn average_distance_arithmetic() {
        let set = DiscreteInputSet::axis_only(1, 1.0).unwrap();
        let d = scalar_integrator(1.0, 3);
        let sol = Solution::from_inputs(&d, &[0.0], seq(&[0.4, 1.0, 0.0])).unwrap();
        let r = discreteness_report(&set, &sol, &d, &[1.4]).unwrap();
        assert_abs_diff_eq!(r.d_bar, 0.4 / 3.0, epsilon = 1e-15);
        assert_eq!(r.quantized_index, vec![0, 1, 0]);
        assert_abs_diff_eq!(r.quantized_terminal_error, 0.4, epsilon = 1e-12);
        assert!((r.fraction_on_vertices - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn non_optimal_is_refused() {
        let set = DiscreteInputSet::axis_only(1, 1.0).unwrap();
        let d = scalar_integrator(1.0, 2);
        let mut sol = Solution::from_inputs(&d, &[0.0], seq(&[0.0, 0.0])).unwrap();
        sol.status = LpStatus::PrimalInfeasible;
        assert!(matches!(discreteness_report(&set, &sol, &d, &[0.0]), Err(Error::NotOptimal(_))));
        assert!(verify_bang_bang(&set, &sol, 0.95).is_err());
    }

    #[test]
    fn hands_off_counts_active_steps() {
        let d = scalar_integrator(1.0, 4);
        let sol = Solution::from_inputs(&d, &[0.0], seq(&[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert_eq!(hands_off_measure(&sol, 1e-4), 2.0);
        let zero = Solution::from_inputs(&d, &[0.0], seq(&[0.0; 4])).unwrap();
        assert_eq!(hands_off_measure(&zero, 1e-4), 0.0);
    }

    #[test]
    fn one_switching_step_in_hundred() {
        let set = DiscreteInputSet::axis_only(1, 1.0).unwrap();
        let d = scalar_integrator(0.1, 100);
        let mut u = vec![0.0; 100];
        for v in u.iter_mut().take(30) {
            *v = 1.0;
        }
        u[30] = 0.37;
        let sol = Solution::from_inputs(&d, &[0.0], seq(&u)).unwrap();
        let c = verify_bang_bang(&set, &sol, DEFAULT_VERTEX_FRACTION).unwrap();
        assert!(c.certified);
        assert_eq!(c.exceptions, vec![30]);
        assert_abs_diff_eq!(c.fraction_on_vertices, 0.99);
    }

    #[test]
    fn loose_slack_breaks_certificate() {
        let set = DiscreteInputSet::axis_only(1, 1.0).unwrap();
        let d = scalar_integrator(1.0, 2);
        let mut sol = Solution::from_inputs(&d, &[0.0], seq(&[0.0, 1.0])).unwrap();
        sol.nu[0] = 0.5;
        let c = verify_bang_bang(&set, &sol, 0.0).unwrap();
        assert!(!c.certified);
        assert_eq!(c.exceptions, vec![0]);
    }
}
