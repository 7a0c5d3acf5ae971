//! Homogeneous self-dual primal-dual interior-point method with Mehrotra
//! predictor-corrector steps.
//!
//! Constraints are stacked as `A x + s = b` with
//!
//! ```text
//! A = [ E ; G ; -I_B ],   b = [ e ; g ; -lb_B ],   s = [ 0 ; s_G ; s_B ] ,
//! ```
//!
//! where the equality block has zero slack and `s_G, s_B ≥ 0`. The embedding
//! adds `τ, κ ≥ 0` so that optimality (`τ > 0`) and infeasibility (`κ > 0`)
//! are both limits of the same iteration. Each Newton step factors the
//! quasi-definite matrix
//!
//! ```text
//! [ ρI + D_B   Eᵀ     Gᵀ  ]
//! [ E          -δI    0   ]
//! [ G          0      -W_G ]
//! ```
//!
//! once, where the bound rows are condensed into `D_B`, and uses it for the
//! three solves of the iteration.

use std::time::Instant;

use super::ldl::QuasiDefiniteLdl;
use super::program::StandardFormProgram;
use super::sparse::{dot, norm_inf};
use super::{FarkasCertificate, IterateLog, LpResult, LpStatus, SolverOptions};

const STATIC_REG: f64 = 1e-8;
const MAX_STATIC_REG: f64 = 1e-4;
const STEP_FRACTION: f64 = 0.99;
const MAX_REFINE: usize = 10;

struct Layout {
    nv: usize,
    p: usize,
    q: usize,
    /// variable index of each bound row
    bvar: Vec<usize>,
}

impl Layout {
    fn ncone(&self) -> usize {
        self.q + self.bvar.len()
    }

    fn nrows(&self) -> usize {
        self.p + self.ncone()
    }
}

struct Ipm<'a> {
    prog: &'a StandardFormProgram,
    lay: Layout,
    b: Vec<f64>,
    kkt: QuasiDefiniteLdl,
    // W = s/z on cone rows (G rows first, then bound rows)
    w: Vec<f64>,
    var_diag: Vec<f64>,
}

impl<'a> Ipm<'a> {
    fn new(prog: &'a StandardFormProgram) -> Self {
        let nv = prog.nvars();
        let p = prog.n_eq();
        let q = prog.n_ineq();
        let bvar = prog.bounded();
        let mut b = Vec::with_capacity(p + q + bvar.len());
        b.extend_from_slice(&prog.eq_rhs);
        b.extend_from_slice(&prog.ineq_rhs);
        b.extend(bvar.iter().map(|&i| -prog.lower[i]));

        let mut off = Vec::with_capacity(prog.eq.nnz() + prog.ineq.nnz());
        for (r, c, v) in prog.eq.triplets() {
            off.push((c, nv + r, v));
        }
        for (r, c, v) in prog.ineq.triplets() {
            off.push((c, nv + p + r, v));
        }
        let mut signs = vec![1.0; nv];
        signs.extend(std::iter::repeat_n(-1.0, p + q));
        let kkt = QuasiDefiniteLdl::new(nv + p + q, &off, &signs);
        let lay = Layout { nv, p, q, bvar };
        let ncone = lay.ncone();
        Self {
            prog,
            lay,
            b,
            kkt,
            w: vec![1.0; ncone],
            var_diag: vec![0.0; nv],
        }
    }

    /// `A x` over all stacked rows.
    fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.prog.eq.mul_vec(x);
        out.extend(self.prog.ineq.mul_vec(x));
        out.extend(self.lay.bvar.iter().map(|&i| -x[i]));
        out
    }

    /// `Aᵀ z`.
    fn at_mul(&self, z: &[f64]) -> Vec<f64> {
        let (p, q) = (self.lay.p, self.lay.q);
        let mut out = vec![0.0; self.lay.nv];
        self.prog.eq.add_tr_mul_vec(1.0, &z[..p], &mut out);
        self.prog.ineq.add_tr_mul_vec(1.0, &z[p..p + q], &mut out);
        for (k, &i) in self.lay.bvar.iter().enumerate() {
            out[i] -= z[p + q + k];
        }
        out
    }

    /// Refactor with scaling `w` on the cone rows. If the factorization
    /// breaks down, the static regularization is raised and refinement
    /// against the unregularized operator makes up the difference.
    fn factor(&mut self, w: &[f64]) -> Result<(), String> {
        let (nv, p, q) = (self.lay.nv, self.lay.p, self.lay.q);
        self.w.copy_from_slice(w);
        self.var_diag.iter_mut().for_each(|d| *d = 0.0);
        for (k, &i) in self.lay.bvar.iter().enumerate() {
            self.var_diag[i] += 1.0 / w[q + k];
        }
        let mut reg = STATIC_REG;
        loop {
            let mut diag = Vec::with_capacity(nv + p + q);
            diag.extend(self.var_diag.iter().map(|d| d + reg));
            diag.extend(std::iter::repeat_n(-reg, p));
            diag.extend(w[..q].iter().map(|wi| -wi - reg));
            match self.kkt.factor(&diag) {
                Ok(()) => return Ok(()),
                Err(e) if reg >= MAX_STATIC_REG => return Err(e),
                Err(_) => reg *= 100.0,
            }
        }
    }

    /// Unregularized reduced operator.
    fn reduced_mul(&self, v: &[f64]) -> Vec<f64> {
        let (nv, p, q) = (self.lay.nv, self.lay.p, self.lay.q);
        let (vx, rest) = v.split_at(nv);
        let (veq, vin) = rest.split_at(p);
        let mut out = vec![0.0; nv + p + q];
        for i in 0..nv {
            out[i] = self.var_diag[i] * vx[i];
        }
        self.prog.eq.add_tr_mul_vec(1.0, veq, &mut out[..nv]);
        self.prog.ineq.add_tr_mul_vec(1.0, vin, &mut out[..nv]);
        let ex = self.prog.eq.mul_vec(vx);
        out[nv..nv + p].copy_from_slice(&ex);
        let gx = self.prog.ineq.mul_vec(vx);
        for k in 0..q {
            out[nv + p + k] = gx[k] - self.w[k] * vin[k];
        }
        out
    }

    /// Solve `[0 Aᵀ; A -W] [dx; dz] = [rx; rz]` with bound rows condensed.
    fn solve(&self, rx: &[f64], rz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (nv, p, q) = (self.lay.nv, self.lay.p, self.lay.q);
        let mut rhs = Vec::with_capacity(nv + p + q);
        rhs.extend_from_slice(rx);
        for (k, &i) in self.lay.bvar.iter().enumerate() {
            rhs[i] -= rz[p + q + k] / self.w[q + k];
        }
        rhs.extend_from_slice(&rz[..p + q]);

        let mut v = rhs.clone();
        self.kkt.solve(&mut v);
        let scale = 1.0 + norm_inf(&rhs);
        let mut res: Vec<f64> = rhs
            .iter()
            .zip(self.reduced_mul(&v))
            .map(|(a, b)| a - b)
            .collect();
        let mut res_norm = norm_inf(&res);
        for _ in 0..MAX_REFINE {
            if res_norm <= 1e-13 * scale {
                break;
            }
            let mut corr = res.clone();
            self.kkt.solve(&mut corr);
            let cand: Vec<f64> = v.iter().zip(&corr).map(|(a, b)| a + b).collect();
            let cand_res: Vec<f64> = rhs
                .iter()
                .zip(self.reduced_mul(&cand))
                .map(|(a, b)| a - b)
                .collect();
            let cand_norm = norm_inf(&cand_res);
            if cand_norm >= res_norm {
                break;
            }
            v = cand;
            res = cand_res;
            res_norm = cand_norm;
        }

        let dx = v[..nv].to_vec();
        let mut dz = Vec::with_capacity(self.lay.nrows());
        dz.extend_from_slice(&v[nv..]);
        for (k, &i) in self.lay.bvar.iter().enumerate() {
            dz.push((-dx[i] - rz[p + q + k]) / self.w[q + k]);
        }
        (dx, dz)
    }
}

/// Largest step in `[0, 1]` keeping `v + α dv ≥ 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter().zip(dv).fold(1.0, |a, (&x, &d)| if d < 0.0 { a.min(-x / d) } else { a })
}

fn shift_to_cone(v: &mut [f64]) {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    if min < f64::EPSILON.sqrt() {
        let shift = 1.0 - min;
        v.iter_mut().for_each(|x| *x += shift);
    }
}

pub(super) fn solve(prog: &StandardFormProgram, opts: &SolverOptions) -> LpResult {
    let start = Instant::now();
    let mut ipm = Ipm::new(prog);
    let (nv, p) = (ipm.lay.nv, ipm.lay.p);
    let nrows = ipm.lay.nrows();
    let ncone = ipm.lay.ncone();
    let c = &prog.c;

    let e_norm = norm_inf(&prog.eq_rhs);
    let g_norm = norm_inf(&prog.ineq_rhs);
    let c_norm = norm_inf(c);
    let q_rows = ipm.lay.q;
    let lb_norm = norm_inf(&ipm.b[p + q_rows..]);

    let fail = |status: LpStatus, iterations: usize, trace: Vec<IterateLog>| LpResult {
        status,
        primal: vec![f64::NAN; nv],
        dual_eq: vec![f64::NAN; p],
        dual_ineq: vec![f64::NAN; q_rows],
        dual_bounds: vec![0.0; nv],
        objective: f64::NAN,
        dual_objective: f64::NAN,
        iterations,
        solve_time: start.elapsed().as_secs_f64(),
        certificate: None,
        trace,
    };

    // initial point from two least-squares solves with W = I
    if ipm.factor(&vec![1.0; ncone]).is_err() {
        return fail(LpStatus::NumericalFailure, 0, Vec::new());
    }
    let zeros_x = vec![0.0; nv];
    let zeros_z = vec![0.0; nrows];
    let (mut x, zp) = ipm.solve(&zeros_x, &ipm.b.clone());
    let mut s = vec![0.0; nrows];
    for k in p..nrows {
        s[k] = -zp[k];
    }
    let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
    let (_, mut z) = ipm.solve(&neg_c, &zeros_z);
    shift_to_cone(&mut s[p..]);
    shift_to_cone(&mut z[p..]);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut trace = Vec::new();
    let mut stalls = 0;
    let mut iter = 0;
    loop {
        if x.iter().chain(&z).chain(&s).any(|v| !v.is_finite()) {
            return fail(LpStatus::NumericalFailure, iter, trace);
        }
        // residuals of the embedding
        let atz = ipm.at_mul(&z);
        let ax = ipm.a_mul(&x);
        let r_x: Vec<f64> = atz.iter().zip(c).map(|(a, ci)| a + ci * tau).collect();
        let r_z: Vec<f64> = (0..nrows).map(|k| ax[k] + s[k] - ipm.b[k] * tau).collect();
        let cx = dot(c, &x);
        let bz = dot(&ipm.b, &z);
        let r_tau = cx + bz + kappa;
        let sz = dot(&s[p..], &z[p..]);
        let mu = (sz + tau * kappa) / (ncone + 1) as f64;

        // convergence on the normalized iterate
        let pcost = cx / tau;
        let dcost = -bz / tau;
        let q = ipm.lay.q;
        let eq_res = norm_inf(&r_z[..p]) / tau;
        let in_res = norm_inf(&r_z[p..p + q]) / tau;
        let bnd_res = norm_inf(&r_z[p + q..]) / tau;
        let du_res = norm_inf(&r_x) / tau;
        trace.push(IterateLog {
            iteration: iter,
            primal_objective: pcost,
            dual_objective: dcost,
            primal_residual: eq_res.max(in_res).max(bnd_res),
            dual_residual: du_res,
            mu,
            tau,
            kappa,
        });
        let gap = (pcost - dcost).abs();
        if eq_res <= opts.tol_feas * (1.0 + e_norm)
            && in_res <= opts.tol_feas * (1.0 + g_norm)
            && bnd_res <= opts.tol_feas * (1.0 + lb_norm)
            && du_res <= opts.tol_feas * (1.0 + c_norm)
            && gap <= opts.tol_gap * pcost.abs().max(1.0)
        {
            let xs: Vec<f64> = x.iter().map(|v| v / tau).collect();
            let zs: Vec<f64> = z.iter().map(|v| v / tau).collect();
            let mut dual_bounds = vec![0.0; nv];
            for (k, &i) in ipm.lay.bvar.iter().enumerate() {
                dual_bounds[i] = zs[p + q + k];
            }
            return LpResult {
                status: LpStatus::Optimal,
                primal: xs,
                dual_eq: zs[..p].iter().map(|v| -v).collect(),
                dual_ineq: zs[p..p + q].to_vec(),
                dual_bounds,
                objective: pcost,
                dual_objective: dcost,
                iterations: iter,
                solve_time: start.elapsed().as_secs_f64(),
                certificate: None,
                trace,
            };
        }
        // infeasibility certificates
        if bz < 0.0 && norm_inf(&atz) <= opts.tol_infeas * -bz {
            let scale = -1.0 / bz;
            let mut mu_b = vec![0.0; nv];
            for (k, &i) in ipm.lay.bvar.iter().enumerate() {
                mu_b[i] = z[p + q + k] * scale;
            }
            let cert = FarkasCertificate {
                y: z[..p].iter().map(|v| -v * scale).collect(),
                lambda: z[p..p + q].iter().map(|v| v * scale).collect(),
                mu: mu_b,
            };
            let mut r = fail(LpStatus::PrimalInfeasible, iter, trace);
            r.certificate = Some(cert);
            return r;
        }
        if cx < 0.0 {
            let axs: Vec<f64> = (0..nrows).map(|k| ax[k] + s[k]).collect();
            if norm_inf(&axs) <= opts.tol_infeas * -cx {
                let mut r = fail(LpStatus::DualInfeasible, iter, trace);
                r.primal = x.iter().map(|v| v / -cx).collect();
                return r;
            }
        }
        if iter >= opts.max_iter {
            return fail(LpStatus::IterationLimit, iter, trace);
        }
        if let Some(limit) = opts.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                return fail(LpStatus::IterationLimit, iter, trace);
            }
        }
        iter += 1;

        // Newton system
        let w: Vec<f64> = (p..nrows).map(|k| s[k] / z[k]).collect();
        if ipm.factor(&w).is_err() {
            return fail(LpStatus::NumericalFailure, iter, trace);
        }
        let (x1, z1) = ipm.solve(&neg_c, &ipm.b.clone());
        let denom_base = dot(c, &x1) + dot(&ipm.b, &z1);

        let direction = |eta: f64, ds_rhs: &[f64], dk_rhs: f64| {
            let rx: Vec<f64> = r_x.iter().map(|v| -eta * v).collect();
            let mut rz: Vec<f64> = r_z.iter().map(|v| -eta * v).collect();
            for k in p..nrows {
                rz[k] += ds_rhs[k - p] / z[k];
            }
            let (x2, z2) = ipm.solve(&rx, &rz);
            let dtau = (-eta * r_tau - dot(c, &x2) - dot(&ipm.b, &z2) + dk_rhs / tau)
                / (denom_base - kappa / tau);
            let dx: Vec<f64> = x2.iter().zip(&x1).map(|(a, b)| a + dtau * b).collect();
            let dz: Vec<f64> = z2.iter().zip(&z1).map(|(a, b)| a + dtau * b).collect();
            let mut ds = vec![0.0; nrows];
            for k in p..nrows {
                ds[k] = -ds_rhs[k - p] / z[k] - w[k - p] * dz[k];
            }
            let dkappa = (-dk_rhs - kappa * dtau) / tau;
            (dx, dz, ds, dtau, dkappa)
        };
        let step_len = |dz: &[f64], ds: &[f64], dtau: f64, dkappa: f64| {
            max_step(&s[p..], &ds[p..])
                .min(max_step(&z[p..], &dz[p..]))
                .min(max_step(&[tau, kappa], &[dtau, dkappa]))
        };

        // predictor
        let ds_aff_rhs: Vec<f64> = (p..nrows).map(|k| s[k] * z[k]).collect();
        let (_, dz_a, ds_a, dtau_a, dkappa_a) = direction(1.0, &ds_aff_rhs, tau * kappa);
        let alpha_aff = step_len(&dz_a, &ds_a, dtau_a, dkappa_a);
        let sigma = (1.0 - alpha_aff).powi(3);

        // corrector
        let ds_rhs: Vec<f64> = (p..nrows)
            .map(|k| s[k] * z[k] + ds_a[k] * dz_a[k] - sigma * mu)
            .collect();
        let dk_rhs = tau * kappa + dtau_a * dkappa_a - sigma * mu;
        let (dx, dz, ds, dtau, dkappa) = direction(1.0 - sigma, &ds_rhs, dk_rhs);
        let alpha = (STEP_FRACTION * step_len(&dz, &ds, dtau, dkappa)).min(1.0);

        if alpha < 1e-10 {
            stalls += 1;
            if stalls >= 5 {
                return fail(LpStatus::NumericalFailure, iter, trace);
            }
        } else {
            stalls = 0;
        }
        for i in 0..nv {
            x[i] += alpha * dx[i];
        }
        for k in 0..nrows {
            z[k] += alpha * dz[k];
            s[k] += alpha * ds[k];
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }
}
