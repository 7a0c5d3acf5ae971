use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lcvx::exec::Execution;
use lcvx::harness::{
    montecarlo_csv, run_montecarlo, run_oracle_suite, run_solve, run_sweep, sweep_csv, write_solve_outputs,
    ExitStatus, MonteCarloConfig, OracleSuiteConfig, ProblemSpec, RendezvousScenario,
};
use lcvx::linsys::controllability_rank;
use lcvx::lpsolve::SolverOptions;
use lcvx::Error;

#[derive(Parser)]
#[command(name = "lcvx", version, about = "Fuel-optimal control with discrete-valued inputs")]
struct Cli {
    /// Run experiments on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate the input set and controllability of a problem file.
    Check { spec: PathBuf },
    /// Solve a problem file and write report.json and solution.csv.
    Solve {
        spec: PathBuf,
        #[arg(long)]
        n_steps: Option<usize>,
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        solver_tol: Option<f64>,
    },
    /// Solve one problem over several grid sizes.
    Sweep {
        spec: PathBuf,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,500,600,700,800,900,1000")]
        n_list: Vec<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Rendezvous transfers from random initial states.
    Montecarlo {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 300.0)]
        tf: f64,
        #[arg(long, default_value_t = 400)]
        n_steps: usize,
        #[arg(long, default_value_t = 1.0)]
        u_max: f64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Compare the relaxation with exhaustive enumeration on small instances.
    OracleVerify {
        #[arg(long, value_delimiter = ',', default_value = "8,12,16")]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print the rendezvous problem file for a given initial state.
    Scenario {
        #[arg(long, value_delimiter = ',', default_value = "-100,-500,-100,0,0,0")]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 240.0)]
        tf: f64,
        #[arg(long, default_value_t = 800)]
        n_steps: usize,
        #[arg(long, default_value_t = 1.0)]
        u_max: f64,
    },
}

fn fail(e: &Error) -> ExitCode {
    let status = ExitStatus::for_error(e);
    eprintln!("error[{}]: {e}", e.kind());
    ExitCode::from(status.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match run(cli.cmd, exec) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn run(cmd: Cmd, exec: Execution) -> lcvx::Result<ExitCode> {
    match cmd {
        Cmd::Check { spec } => {
            let spec = ProblemSpec::load(&spec)?;
            let set = spec.input_set()?;
            let report = set.validate();
            let ctrb = controllability_rank(&spec.system()?);
            let out = serde_json::json!({ "input_set": report, "controllability": ctrb });
            println!("{}", serde_json::to_string_pretty(&out)?);
            let ok = report.valid && ctrb.is_controllable;
            Ok(ExitCode::from(if ok { 0 } else { ExitStatus::Validation.code() as u8 }))
        }
        Cmd::Solve {
            spec,
            n_steps,
            tf,
            out_dir,
            solver_tol,
        } => {
            let mut spec = ProblemSpec::load(&spec)?;
            if let Some(n) = n_steps {
                spec.steps = n;
            }
            if let Some(t) = tf {
                spec.t_f = t;
            }
            if let Some(tol) = solver_tol {
                spec.solver = Some(SolverOptions {
                    tol_feas: tol,
                    tol_gap: tol,
                    ..spec.solver_options()
                });
            }
            let run = run_solve(&spec);
            write_solve_outputs(&run, &out_dir)?;
            let r = &run.report;
            println!(
                "status {:?}, exit {}, cost {}, d_bar {}, solve {:.3} s",
                r.lp_status,
                r.exit_code,
                r.cost.map_or("-".into(), |c| format!("{c:.6}")),
                r.discreteness.as_ref().map_or("-".into(), |d| format!("{:.6}", d.d_bar)),
                r.solve_time_s
            );
            if let Some(e) = &r.error {
                eprintln!("error[{}]: {}", e.kind, e.message);
            }
            Ok(ExitCode::from(r.exit_code as u8))
        }
        Cmd::Sweep { spec, n_list, out_dir } => {
            let spec = ProblemSpec::load(&spec)?;
            let rep = run_sweep(&spec, &n_list, exec)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("sweep.csv"), sweep_csv(&rep))?;
            fs::write(out_dir.join("sweep.json"), serde_json::to_string_pretty(&rep)?)?;
            print!("{}", sweep_csv(&rep));
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Montecarlo {
            samples,
            seed,
            tf,
            n_steps,
            u_max,
            out_dir,
        } => {
            let cfg = MonteCarloConfig {
                samples,
                seed,
                t_f: tf,
                steps: n_steps,
                ..MonteCarloConfig::default()
            };
            let scenario = RendezvousScenario {
                u_max,
                ..Default::default()
            };
            let rep = run_montecarlo(&cfg, &scenario, None, exec)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("montecarlo.csv"), montecarlo_csv(&rep))?;
            fs::write(out_dir.join("montecarlo.json"), serde_json::to_string_pretty(&rep)?)?;
            println!(
                "success {:.1}%, mean solve {:.4} s, median {:.4} s, max {:.4} s, mean d_bar {:.6}",
                100.0 * rep.success_rate,
                rep.mean_solve_time_s,
                rep.median_solve_time_s,
                rep.max_solve_time_s,
                rep.mean_d_bar
            );
            Ok(ExitCode::from(if rep.all_optimal { 0 } else { ExitStatus::SolverFailure.code() as u8 }))
        }
        Cmd::OracleVerify {
            n_list,
            pairs,
            seed,
            out_dir,
        } => {
            let cfg = OracleSuiteConfig {
                steps_list: n_list,
                pairs_per_n: pairs,
                seed,
                ..OracleSuiteConfig::default()
            };
            let cases = run_oracle_suite(&cfg, exec)?;
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join("oracle.json"), serde_json::to_string_pretty(&cases)?)?;
            let certified = cases.iter().filter(|c| c.report.certified).count();
            for c in &cases {
                println!(
                    "N={:<3} pair={:<3} lp={:.9} oracle={:.9} eps_gap={:.2e} certified={}",
                    c.steps, c.index, c.report.lp_cost, c.report.oracle_cost, c.report.epsilon_gap, c.report.certified
                );
            }
            println!("certified {certified}/{}", cases.len());
            Ok(ExitCode::from(if certified == cases.len() {
                0
            } else {
                ExitStatus::CertificationFailure.code() as u8
            }))
        }
        Cmd::Scenario { x0, tf, n_steps, u_max } => {
            let scenario = RendezvousScenario {
                u_max,
                ..Default::default()
            };
            println!("{}", scenario.problem(&x0, tf, n_steps)?.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
    }
}
