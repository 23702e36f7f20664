//! Sequential vs. data-parallel execution of the per-case batch loops.

use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mutabench::dataset::{self, TestCase};
use mutabench::exec::Exec;
use mutabench::mutate::{MutationConfig, MutationKind, MutationPlan};
use mutabench::report::bleu;

/// The pinned corpus replicated to CRUXEval size (800 cases).
fn corpus() -> Vec<TestCase> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/pinned_subset.jsonl");
    let base = dataset::load(&path, "cruxeval").expect("pinned subset loads").cases;
    (0..8)
        .flat_map(|copy| {
            base.iter().map(move |c| {
                let mut c = c.with_program(c.program.text.clone());
                c.id = format!("{}#{copy}", c.id);
                c
            })
        })
        .collect()
}

fn executors() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn bench_mutate(c: &mut Criterion) {
    let cases = corpus();
    let config = MutationConfig::with_seed(42);
    let mut group = c.benchmark_group("mutate");
    group.throughput(Throughput::Elements(cases.len() as u64));
    for tag in ["constunfold", "fuv"] {
        let plan = MutationPlan::parse(tag).unwrap();
        for (name, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(tag, name), &exec, |b, &exec| {
                b.iter(|| black_box(dataset::mutate_cases(&cases, &plan, &config, exec)))
            });
        }
    }
    group.finish();
}

fn bench_census(c: &mut Criterion) {
    let cases = corpus();
    let mut group = c.benchmark_group("census");
    group.throughput(Throughput::Elements((cases.len() * MutationKind::ALL.len()) as u64));
    for (name, exec) in executors() {
        group.bench_function(name, |b| {
            b.iter(|| {
                MutationKind::ALL
                    .iter()
                    .map(|k| dataset::count_applicable(&cases, *k, exec))
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

fn bench_bleu(c: &mut Criterion) {
    let cases = corpus();
    let outcomes = dataset::mutate_cases(&cases, &MutationPlan::parse("fuv").unwrap(), &MutationConfig::with_seed(42), Exec::Parallel);
    let originals: Vec<&str> = cases.iter().map(|c| c.program.text.as_str()).collect();
    let mutants: Vec<&str> = outcomes
        .iter()
        .zip(&cases)
        .map(|(o, c)| o.as_ref().map_or(c.program.text.as_str(), |o| o.mutated.text.as_str()))
        .collect();
    c.bench_function("bleu/fuv", |b| b.iter(|| black_box(bleu(&originals, &mutants).unwrap())));
}

criterion_group!(benches, bench_mutate, bench_census, bench_bleu);
criterion_main!(benches);
