use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lcvx::exec::Execution;
use lcvx::harness::{double_integrator, run_montecarlo, MonteCarloConfig, RendezvousScenario};
use lcvx::inputset::DiscreteInputSet;
use lcvx::linsys::zoh_discretize;
use lcvx::oracle::{enumerate_optimal, OracleConfig};

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn montecarlo(c: &mut Criterion) {
    let cfg = MonteCarloConfig {
        samples: 16,
        steps: 100,
        ..MonteCarloConfig::default()
    };
    let sc = RendezvousScenario::default();
    let mut g = c.benchmark_group("montecarlo_16x100");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_montecarlo(&cfg, &sc, None, exec).unwrap())
        });
    }
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    let sysd = zoh_discretize(&double_integrator(), 6.0, 12).unwrap();
    let set = DiscreteInputSet::axis_only(1, 1.0).unwrap();
    let mut g = c.benchmark_group("oracle_n12");
    g.sample_size(10);
    for (name, exec) in STRATEGIES {
        let cfg = OracleConfig {
            terminal_tol: 0.05,
            execution: exec,
            ..OracleConfig::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| enumerate_optimal(&sysd, &set, &[1.25, -0.5], &[0.0, 0.0], &cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, montecarlo, enumeration);
criterion_main!(benches);
