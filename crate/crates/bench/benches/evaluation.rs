use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use morphoqd::algorithms::{nsga, Search};
use morphoqd::evaluator::surrogate::{self, SurrogateEvaluator};
use morphoqd::metrics::mann_whitney_u;
use morphoqd::{AlgorithmKind, EnvironmentSpec, VariationConfig};
use morphoqd_bench::genomes;

fn surrogate_batch(c: &mut Criterion) {
    let batch = genomes(200, 1);
    let circular = EnvironmentSpec::circular();
    c.bench_function("surrogate/batch200_circular", |b| {
        b.iter(|| batch.iter().map(|g| surrogate::evaluate(g, &circular).fitness).sum::<f64>())
    });
}

fn search_steps(c: &mut Criterion) {
    for kind in AlgorithmKind::ALL {
        c.bench_function(&format!("search/{kind}_step"), |b| {
            b.iter_batched(
                || {
                    let mut ev = SurrogateEvaluator::with_threads(EnvironmentSpec::flat(), 1);
                    let mut s = Search::new(kind, VariationConfig::for_algorithm(kind), 3);
                    s.initialize(&mut ev).unwrap();
                    (s, ev)
                },
                |(mut s, mut ev)| s.step(&mut ev).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
}

fn sorting(c: &mut Criterion) {
    let pts: Vec<Vec<f64>> = genomes(400, 5)
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let (m, j) = g.kind_counts();
            vec![(i % 37) as f64, m as f64, j as f64]
        })
        .collect();
    c.bench_function("nsga/sort400", |b| b.iter(|| nsga::nondominated_sort(&pts, &nsga::MAXIMIZE_ALL)));
}

fn rank_test(c: &mut Criterion) {
    let a: Vec<f64> = (0..8).map(|i| i as f64 * 1.3).collect();
    let b: Vec<f64> = (0..8).map(|i| i as f64 * 1.1 + 0.05).collect();
    c.bench_function("stats/mwu_exact_8x8", |bch| bch.iter(|| mann_whitney_u(&a, &b)));
}

criterion_group!(benches, surrogate_batch, search_steps, sorting, rank_test);
criterion_main!(benches);
