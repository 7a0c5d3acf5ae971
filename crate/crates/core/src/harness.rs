//! Problem files, the Clohessy–Wiltshire rendezvous scenario, and the
//! experiment drivers (single solve, grid sweep, Monte Carlo, oracle suite).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    default_tol_vertex, discreteness_report, hands_off_measure, verify_bang_bang, BangBangCertificate,
    DiscretenessReport, Solution, DEFAULT_VERTEX_FRACTION,
};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::inputset::{rendezvous_extra_points, DiscreteInputSet, InputSetSpec};
use crate::linsys::{controllability_rank, zoh_discretize, DiscretizedSystem, LtiSystem};
use crate::lpsolve::{LpStatus, SolverOptions};
use crate::oracle::{enumerate_optimal, verify_losslessness, LosslessnessReport, OracleConfig, OracleObjective};
use crate::transcription::transcribe;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Row-major dense matrix as stored in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixSpec {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Structural(format!(
                "matrix declared {}x{} but has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

fn default_steps() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(rename = "A")]
    pub a: MatrixSpec,
    #[serde(rename = "B")]
    pub b: MatrixSpec,
    pub input_set: InputSetSpec,
    pub x0: Vec<f64>,
    /// Target state; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xf: Option<Vec<f64>>,
    pub t_f: f64,
    #[serde(rename = "N", default = "default_steps")]
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
}

impl ProblemSpec {
    /// Parse and check dimensions.
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ProblemSpec = serde_json::from_str(s)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        let sys = self.system()?;
        let n = sys.n();
        if self.input_set.m != sys.m() {
            return Err(Error::Structural(format!(
                "input_set.m = {} but B has {} columns",
                self.input_set.m,
                sys.m()
            )));
        }
        if self.x0.len() != n || self.xf.as_ref().is_some_and(|v| v.len() != n) {
            return Err(Error::Structural(format!("x0 and xf must have length {n}")));
        }
        if !(self.t_f > 0.0) || !self.t_f.is_finite() || self.steps == 0 {
            return Err(Error::Argument("t_f must be positive and N at least 1".into()));
        }
        if let Some(o) = &self.solver {
            o.check()?;
        }
        Ok(())
    }

    pub fn system(&self) -> Result<LtiSystem> {
        LtiSystem::new(self.a.to_matrix()?, self.b.to_matrix()?)
    }

    pub fn input_set(&self) -> Result<DiscreteInputSet> {
        DiscreteInputSet::from_spec(&self.input_set)
    }

    pub fn target(&self) -> Vec<f64> {
        self.xf.clone().unwrap_or_else(|| vec![0.0; self.x0.len()])
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.unwrap_or_default()
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RendezvousScenario {
    /// Chief orbit radius in meters.
    #[serde(rename = "R")]
    pub radius: f64,
    /// Gravitational parameter in m³/s².
    pub mu: f64,
    pub u_max: f64,
}

impl Default for RendezvousScenario {
    fn default() -> Self {
        Self {
            radius: 7102.8e3,
            mu: 3.986004418e14,
            u_max: 1.0,
        }
    }
}

impl RendezvousScenario {
    pub fn check(&self) -> Result<()> {
        if self.radius > 0.0 && self.mu >= 0.0 && self.u_max > 0.0 && self.radius.is_finite() && self.mu.is_finite() {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid scenario {self:?}")))
        }
    }

    /// Mean motion of the chief, `sqrt(mu / R³)`.
    pub fn mean_motion(&self) -> f64 {
        (self.mu / self.radius.powi(3)).sqrt()
    }

    pub fn input_set(&self) -> Result<DiscreteInputSet> {
        DiscreteInputSet::new(3, self.u_max, rendezvous_extra_points(self.u_max))
    }

    /// Problem file for a transfer from `(r0, v0)` to the origin.
    pub fn problem(&self, x0: &[f64], t_f: f64, steps: usize) -> Result<ProblemSpec> {
        let sys = cw_system(self)?;
        let spec = ProblemSpec {
            a: MatrixSpec::from_matrix(sys.a()),
            b: MatrixSpec::from_matrix(sys.b()),
            input_set: self.input_set()?.to_spec(),
            x0: x0.to_vec(),
            xf: None,
            t_f,
            steps,
            solver: None,
            seeds: None,
        };
        spec.check()?;
        Ok(spec)
    }
}

/// Clohessy–Wiltshire relative dynamics, state `(r, v)`, input acceleration.
pub fn cw_system(s: &RendezvousScenario) -> Result<LtiSystem> {
    s.check()?;
    let n = s.mean_motion();
    let mut a = DMatrix::zeros(6, 6);
    for i in 0..3 {
        a[(i, i + 3)] = 1.0;
    }
    a[(3, 0)] = 3.0 * n * n;
    a[(3, 4)] = 2.0 * n;
    a[(4, 3)] = -2.0 * n;
    a[(5, 2)] = -n * n;
    let mut b = DMatrix::zeros(6, 3);
    for i in 0..3 {
        b[(i + 3, i)] = 1.0;
    }
    LtiSystem::new(a, b)
}

/// Process exit codes of the solve pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExitStatus {
    Certified,
    Io,
    Validation,
    Infeasible,
    SolverFailure,
    CertificationFailure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Certified => 0,
            ExitStatus::Io => 1,
            ExitStatus::Validation => 2,
            ExitStatus::Infeasible => 3,
            ExitStatus::SolverFailure => 4,
            ExitStatus::CertificationFailure => 5,
        }
    }

    /// Exit status for a pipeline error.
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::Io(_) => ExitStatus::Io,
            Error::NotOptimal(_) => ExitStatus::SolverFailure,
            _ => ExitStatus::Validation,
        }
    }

    fn for_status(s: LpStatus) -> Self {
        match s {
            LpStatus::Optimal => ExitStatus::Certified,
            LpStatus::PrimalInfeasible => ExitStatus::Infeasible,
            _ => ExitStatus::SolverFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub spec_sha256: String,
    pub solver_options: SolverOptions,
    pub parallel_feature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub provenance: Provenance,
    pub exit_code: i32,
    pub exit_status: ExitStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_status: Option<LpStatus>,
    pub steps: usize,
    pub t_f: f64,
    pub dt: f64,
    pub controllability_rank: Option<usize>,
    pub iterations: usize,
    /// Wall-clock inside the LP solver.
    pub solve_time_s: f64,
    /// Wall-clock of the whole pipeline.
    pub total_time_s: f64,
    pub cost: Option<f64>,
    pub fuel: Option<f64>,
    pub hands_off: Option<f64>,
    pub terminal_residual: Option<f64>,
    pub terminal_state: Option<Vec<f64>>,
    pub discreteness: Option<DiscretenessReport>,
    pub bang_bang: Option<BangBangCertificate>,
}

#[derive(Debug, Clone)]
pub struct SolveRun {
    pub report: SolveReport,
    pub solution: Option<Solution>,
    pub sysd: Option<DiscretizedSystem>,
}

impl SolveRun {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

/// Validate, transcribe, solve and certify one problem.
///
/// Pipeline failures end up in the report's exit status rather than in the
/// `Err` branch, which is reserved for I/O.
pub fn run_solve(spec: &ProblemSpec) -> SolveRun {
    let t0 = Instant::now();
    let opts = spec.solver_options();
    let mut report = SolveReport {
        provenance: Provenance {
            version: VERSION.to_string(),
            spec_sha256: spec.hash(),
            solver_options: opts,
            parallel_feature: cfg!(feature = "parallel"),
        },
        exit_code: 0,
        exit_status: ExitStatus::Certified,
        error: None,
        lp_status: None,
        steps: spec.steps,
        t_f: spec.t_f,
        dt: spec.t_f / spec.steps as f64,
        controllability_rank: None,
        iterations: 0,
        solve_time_s: 0.0,
        total_time_s: 0.0,
        cost: None,
        fuel: None,
        hands_off: None,
        terminal_residual: None,
        terminal_state: None,
        discreteness: None,
        bang_bang: None,
    };
    let mut run = SolveRun {
        report: report.clone(),
        solution: None,
        sysd: None,
    };
    let result = solve_inner(spec, &opts, &mut report, &mut run);
    if let Err(e) = result {
        report.exit_status = ExitStatus::for_error(&e);
        report.error = Some(ErrorInfo::from(&e));
    }
    report.exit_code = report.exit_status.code();
    report.total_time_s = t0.elapsed().as_secs_f64();
    run.report = report;
    run
}

fn solve_inner(spec: &ProblemSpec, opts: &SolverOptions, report: &mut SolveReport, run: &mut SolveRun) -> Result<()> {
    spec.check()?;
    let sys = spec.system()?;
    let set = spec.input_set()?;
    set.ensure_valid()?;
    report.controllability_rank = Some(controllability_rank(&sys).rank);
    let xf = spec.target();
    let prob = transcribe(&sys, &set, &spec.x0, &xf, spec.t_f, spec.steps)?;
    let (lp, sol) = prob.solve(opts)?;
    report.lp_status = Some(lp.status);
    report.iterations = lp.iterations;
    report.solve_time_s = lp.solve_time;
    report.exit_status = ExitStatus::for_status(lp.status);
    let Some(sol) = sol else {
        report.error = Some(ErrorInfo {
            kind: "lp_status".into(),
            message: format!("solver returned {}", lp.status),
        });
        return Ok(());
    };
    let last = sol.x.last().expect("states");
    report.terminal_residual = Some((last - DVector::from_column_slice(&xf)).norm());
    report.terminal_state = Some(last.iter().copied().collect());
    report.cost = Some(sol.cost);
    report.fuel = Some(sol.fuel());
    report.hands_off = Some(hands_off_measure(&sol, default_tol_vertex(set.u_max())));
    let disc = discreteness_report(&set, &sol, &prob.sysd, &xf)?;
    let bb = verify_bang_bang(&set, &sol, DEFAULT_VERTEX_FRACTION)?;
    if !bb.certified {
        report.exit_status = ExitStatus::CertificationFailure;
    }
    report.discreteness = Some(disc);
    report.bang_bang = Some(bb);
    run.solution = Some(sol);
    run.sysd = Some(prob.sysd);
    Ok(())
}

/// Trajectory table with columns `t, x1..xn, u1..um, nu, d`, one row per step.
pub fn solution_csv(sol: &Solution, d: &[f64]) -> String {
    let n = sol.x[0].len();
    let m = sol.u[0].len();
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    for i in 1..=m {
        let _ = write!(out, ",u{i}");
    }
    out.push_str(",nu,d\n");
    for k in 0..sol.steps() {
        let _ = write!(out, "{}", k as f64 * sol.dt);
        for v in sol.x[k].iter().chain(sol.u[k].iter()) {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{},{}", sol.nu[k], d[k]);
    }
    out
}

/// Write `report.json` and, when a solution exists, `solution.csv`.
pub fn write_solve_outputs(run: &SolveRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&run.report)?)?;
    if let (Some(sol), Some(disc)) = (&run.solution, &run.report.discreteness) {
        fs::write(dir.join("solution.csv"), solution_csv(sol, &disc.d))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    #[serde(rename = "N")]
    pub steps: usize,
    pub solve_time_s: f64,
    pub d_bar: Option<f64>,
    pub cost: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub spec_sha256: String,
    pub records: Vec<SweepRecord>,
    /// Rank correlation between N and d̄ over the successful rows.
    pub spearman_rho: Option<f64>,
    pub note: String,
}

/// Solve the same physical problem on each grid in `n_list`.
pub fn run_sweep(spec: &ProblemSpec, n_list: &[usize], exec: Execution) -> Result<SweepReport> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Argument("N list must be nonempty, positive and strictly ascending".into()));
    }
    let records = map_indexed(exec, n_list.len(), |i| {
        let mut s = spec.clone();
        s.steps = n_list[i];
        let run = run_solve(&s);
        let r = &run.report;
        SweepRecord {
            steps: n_list[i],
            solve_time_s: r.solve_time_s,
            d_bar: r.discreteness.as_ref().map(|d| d.d_bar),
            cost: r.cost,
            status: status_label(r),
        }
    });
    let (ns, ds): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| r.d_bar.map(|d| (r.steps as f64, d)))
        .unzip();
    Ok(SweepReport {
        spec_sha256: spec.hash(),
        spearman_rho: (ns.len() >= 2).then(|| spearman(&ns, &ds)),
        records,
        note: "reference observation: beyond N = 400 the mean distance decreases only marginally".into(),
    })
}

fn status_label(r: &SolveReport) -> String {
    match (&r.lp_status, &r.error) {
        (Some(s), _) => s.to_string(),
        (None, Some(e)) => e.kind.clone(),
        (None, None) => "unknown".into(),
    }
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(r: &SweepReport) -> String {
    let mut out = String::from("N,solve_time_s,d_bar,cost\n");
    for rec in &r.records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            rec.steps,
            rec.solve_time_s,
            opt_field(rec.d_bar),
            opt_field(rec.cost)
        );
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    /// Bound on `‖r‖∞` in meters.
    pub r_inf_bound: f64,
    /// Bound on `‖v‖∞` in m/s.
    pub v_inf_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub samples: usize,
    #[serde(rename = "box")]
    pub bounds: SampleBox,
    pub t_f: f64,
    #[serde(rename = "N")]
    pub steps: usize,
    pub seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            bounds: SampleBox {
                r_inf_bound: 500.0,
                v_inf_bound: 5.0,
            },
            t_f: 300.0,
            steps: 400,
            seed: 1,
        }
    }
}

impl MonteCarloConfig {
    pub fn check(&self) -> Result<()> {
        let b = self.bounds;
        if self.samples >= 1 && b.r_inf_bound > 0.0 && b.v_inf_bound > 0.0 && self.t_f > 0.0 && self.steps >= 1 {
            Ok(())
        } else {
            Err(Error::Argument(format!("invalid Monte Carlo configuration {self:?}")))
        }
    }

    /// Initial state of sample `index`, uniform on the box.
    ///
    /// Each sample draws from its own ChaCha8 stream: the key is `seed` and
    /// the stream id is `index`, so a sample's state does not depend on which
    /// other samples ran or in what order.
    pub fn initial_state(&self, index: u64) -> [f64; 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let (rb, vb) = (self.bounds.r_inf_bound, self.bounds.v_inf_bound);
        let mut x = [0.0; 6];
        for (i, v) in x.iter_mut().enumerate() {
            let b = if i < 3 { rb } else { vb };
            *v = rng.random_range(-b..=b);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: usize,
    pub x0: Vec<f64>,
    pub solve_time_s: f64,
    pub d_bar: Option<f64>,
    pub cost: Option<f64>,
    pub status: String,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over the data range.
    pub fn new(data: &[f64], bins: usize) -> Self {
        if data.is_empty() || bins == 0 {
            return Self {
                edges: vec![],
                counts: vec![],
            };
        }
        let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let w = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + w * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in data {
            let b = (((v - lo) / w) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Self { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub config: MonteCarloConfig,
    pub scenario: RendezvousScenario,
    pub records: Vec<SampleRecord>,
    pub success_rate: f64,
    /// False when any sample failed to solve.
    pub all_optimal: bool,
    pub mean_solve_time_s: f64,
    pub median_solve_time_s: f64,
    pub max_solve_time_s: f64,
    pub mean_d_bar: f64,
    pub solve_time_histogram: Histogram,
    pub d_bar_histogram: Histogram,
}

/// Solve the rendezvous transfer from each of `x0s` to the origin.
pub fn run_samples(
    scenario: &RendezvousScenario,
    x0s: &[Vec<f64>],
    t_f: f64,
    steps: usize,
    opts: Option<SolverOptions>,
    exec: Execution,
) -> Result<Vec<SampleRecord>> {
    let base = scenario.problem(&[0.0; 6], t_f, steps)?;
    Ok(map_indexed(exec, x0s.len(), |i| {
        let mut spec = base.clone();
        spec.x0.clone_from(&x0s[i]);
        spec.solver = opts;
        let run = run_solve(&spec);
        let r = &run.report;
        SampleRecord {
            sample: i,
            x0: x0s[i].clone(),
            solve_time_s: r.solve_time_s,
            d_bar: r.discreteness.as_ref().map(|d| d.d_bar),
            cost: r.cost,
            status: status_label(r),
            certified: r.exit_status == ExitStatus::Certified,
        }
    }))
}

pub fn run_montecarlo(
    cfg: &MonteCarloConfig,
    scenario: &RendezvousScenario,
    opts: Option<SolverOptions>,
    exec: Execution,
) -> Result<MonteCarloReport> {
    cfg.check()?;
    let x0s: Vec<Vec<f64>> = (0..cfg.samples).map(|i| cfg.initial_state(i as u64).to_vec()).collect();
    let records = run_samples(scenario, &x0s, cfg.t_f, cfg.steps, opts, exec)?;
    Ok(aggregate(cfg, scenario, records))
}

fn aggregate(cfg: &MonteCarloConfig, scenario: &RendezvousScenario, records: Vec<SampleRecord>) -> MonteCarloReport {
    let ok: Vec<&SampleRecord> = records.iter().filter(|r| r.d_bar.is_some()).collect();
    let mut times: Vec<f64> = records.iter().map(|r| r.solve_time_s).collect();
    let dbars: Vec<f64> = ok.iter().filter_map(|r| r.d_bar).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    MonteCarloReport {
        config: *cfg,
        scenario: *scenario,
        success_rate: ok.len() as f64 / records.len() as f64,
        all_optimal: ok.len() == records.len(),
        mean_solve_time_s: mean(&times),
        median_solve_time_s: median,
        max_solve_time_s: times[n - 1],
        mean_d_bar: mean(&dbars),
        solve_time_histogram: Histogram::new(&times, 20),
        d_bar_histogram: Histogram::new(&dbars, 20),
        records,
    }
}

pub fn montecarlo_csv(r: &MonteCarloReport) -> String {
    let mut out = String::from("sample,solve_time_s,d_bar,cost,status\n");
    for rec in &r.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rec.sample,
            rec.solve_time_s,
            opt_field(rec.d_bar),
            opt_field(rec.cost),
            rec.status
        );
    }
    out
}

/// Double-integrator suite for checking the relaxation against enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSuiteConfig {
    pub steps_list: Vec<usize>,
    pub pairs_per_n: usize,
    pub dt: f64,
    pub seed: u64,
    pub terminal_tol: f64,
    pub solver_tol: f64,
}

impl Default for OracleSuiteConfig {
    fn default() -> Self {
        Self {
            steps_list: vec![8, 12, 16],
            pairs_per_n: 20,
            dt: 0.5,
            seed: 7,
            terminal_tol: 1e-6,
            solver_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub x0: Vec<f64>,
    pub xf: Vec<f64>,
    /// Supporting direction `(p, p0)` the target was generated from.
    pub costate: Vec<f64>,
    pub generating_inputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    #[serde(rename = "N")]
    pub steps: usize,
    pub index: usize,
    pub pair: BoundaryPair,
    pub report: LosslessnessReport,
    pub hands_off_oracle: Option<f64>,
    pub hands_off_lp: f64,
    pub hands_off_within_dt: bool,
}

pub fn double_integrator() -> LtiSystem {
    LtiSystem::from_row_slices(2, 1, &[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0]).expect("static data")
}

/// A target on the boundary of the fuel-augmented reachable set.
///
/// A supporting direction `(p, p0)` is drawn at random and each step takes
/// the input in `{0, ±1}` that maximizes `pᵀ G_k u − p0 |u|`, where
/// `G_k = A^{N−1−k} B`. Draws where some step is within 2% of a tie are
/// rejected, so the maximizer is unique at every step and the generated
/// sequence is the unique fuel-optimal control to the resulting target.
/// Initial states lie on a dyadic grid, which keeps the propagated targets
/// exact in floating point when `dt` is a power of two.
pub fn boundary_pair(sysd: &DiscretizedSystem, seed: u64, stream: u64) -> BoundaryPair {
    let steps = sysd.steps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut g = Vec::with_capacity(steps);
    let mut col = sysd.b_d.column(0).into_owned();
    for _ in 0..steps {
        g.push(col.clone());
        col = &sysd.a_d * col;
    }
    g.reverse();
    loop {
        let x0 = vec![rng.random_range(-16i32..=16) as f64 / 8.0, rng.random_range(-2i32..=2) as f64 / 2.0];
        let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let p = DVector::from_vec(vec![th.cos(), th.sin()]);
        let s: Vec<f64> = g.iter().map(|gk| p.dot(gk)).collect();
        let smax = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if smax == 0.0 {
            continue;
        }
        let p0 = rng.random_range(0.2..0.8) * smax;
        if s.iter().any(|v| (v.abs() - p0).abs() < 0.02 * smax) {
            continue;
        }
        let u: Vec<f64> = s.iter().map(|v| if v.abs() > p0 { v.signum() } else { 0.0 }).collect();
        let mut x = DVector::from_vec(x0.clone());
        for &uk in &u {
            x = sysd.step(&x, &DVector::from_element(1, uk));
        }
        return BoundaryPair {
            x0,
            xf: x.iter().copied().collect(),
            costate: vec![p[0], p[1], p0],
            generating_inputs: u,
        };
    }
}

/// Run the relaxation-versus-enumeration suite on the double integrator with
/// inputs `{0, ±1}`.
pub fn run_oracle_suite(cfg: &OracleSuiteConfig, exec: Execution) -> Result<Vec<OracleCase>> {
    let sys = double_integrator();
    let set = DiscreteInputSet::axis_only(1, 1.0)?;
    let opts = SolverOptions::with_tolerance(cfg.solver_tol);
    let mut out = Vec::new();
    for &steps in &cfg.steps_list {
        let sysd = zoh_discretize(&sys, cfg.dt * steps as f64, steps)?;
        let ocfg = OracleConfig {
            terminal_tol: cfg.terminal_tol,
            max_nodes: 3u64.pow(steps as u32).max(1),
            execution: exec,
            ..OracleConfig::default()
        };
        for i in 0..cfg.pairs_per_n {
            let pair = boundary_pair(&sysd, cfg.seed, (steps * 1000 + i) as u64);
            let report = verify_losslessness(&sysd, &set, &pair.x0, &pair.xf, &ocfg, &opts)?;
            let ho = enumerate_optimal(
                &sysd,
                &set,
                &pair.x0,
                &pair.xf,
                &OracleConfig {
                    objective: OracleObjective::HandsOff,
                    zero_tol: default_tol_vertex(1.0),
                    ..ocfg
                },
            )?;
            let hands_off_oracle = ho.outcome.solution().map(|s| s.cost);
            let within = hands_off_oracle.is_some_and(|h| (h - report.lp_hands_off).abs() <= sysd.dt + 1e-12);
            out.push(OracleCase {
                steps,
                index: i,
                hands_off_lp: report.lp_hands_off,
                pair,
                report,
                hands_off_oracle,
                hands_off_within_dt: within,
            });
        }
    }
    Ok(out)
}
