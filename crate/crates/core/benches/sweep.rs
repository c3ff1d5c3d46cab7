use criterion::{criterion_group, criterion_main, Criterion};

use qstatten::exec::Execution;
use qstatten::experiment::{load_scenario, run_sweep_with};

const SCENARIO: &str = r#"
scenario = "bench"
system = "qubit"
N = 50
sample = "qubit_bloch"
metrics = ["fidelity"]
seed = 42

[[fibers]]
alpha = 0.2
lengths_km = { start = 0, stop = 100, step = 25 }
"#;

fn sweep(c: &mut Criterion) {
    let config = load_scenario(SCENARIO, &[]).expect("bench scenario");
    let mut group = c.benchmark_group("qubit_sweep");
    group.sample_size(10);
    let backends = [
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ];
    for (name, exec) in backends {
        group.bench_function(name, |b| {
            b.iter(|| run_sweep_with(&config, exec).expect("sweep"))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep);
criterion_main!(benches);
