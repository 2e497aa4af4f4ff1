//! Sequential vs rayon sweeps over group sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use m2o::actors::GroupConfig;
use m2o::batch;
use m2o::costmodel::{cost_table, cost_table_seq, TimingModel, FITTED_PRESET};
use m2o::crypto::KeySize;
use m2o::netsim::{run_fresh, AdversaryScript};

fn honest(nc: usize) -> u64 {
    let cfg = GroupConfig::with_size(nc).unwrap();
    run_fresh(&cfg, KeySize::InsecureTest(512), &AdversaryScript::passive(), nc as u64).unwrap().1.end_time
}

fn sweeps(c: &mut Criterion) {
    let sizes: Vec<usize> = (2..=17).collect();
    let mut g = c.benchmark_group("honest-runs");
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("seq", "nc2..17"), |b| b.iter(|| batch::map_seq(sizes.clone(), honest)));
    #[cfg(feature = "parallel")]
    g.bench_function(BenchmarkId::new("par", "nc2..17"), |b| b.iter(|| batch::map_par(sizes.clone(), honest)));
    g.finish();

    let timing = TimingModel::preset(FITTED_PRESET).unwrap();
    let mut g = c.benchmark_group("cost-table");
    g.bench_function(BenchmarkId::new("seq", "nc2..4000"), |b| b.iter(|| cost_table_seq(2..=4000, &timing).unwrap()));
    g.bench_function(BenchmarkId::new("map", "nc2..4000"), |b| b.iter(|| cost_table(2..=4000, &timing).unwrap()));
    g.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
