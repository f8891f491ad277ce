use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use surfpinn_bench::desk;
use surfpinn_core::autodiff::{Jet2, MlpParams, NetShape};
use surfpinn_core::inverse::{adam_step, evaluate, AdamState};

fn mlp(c: &mut Criterion) {
    let mut group = c.benchmark_group("mlp");
    group.sample_size(20);
    for width in [64, 256] {
        let params = MlpParams::init(NetShape::new(4, width), 8.0, 0.2, 3);
        let xs: Vec<f64> = (0..480).map(|i| -8.0 + (i as f64 + 0.5) / 30.0).collect();
        group.bench_with_input(BenchmarkId::new("forward_batch", width), &width, |b, _| {
            b.iter(|| black_box(params.forward_batch(&xs)))
        });
        let (jets, cache) = params.forward_batch(&xs);
        let bars: Vec<Jet2<f64>> = jets.iter().map(|j| Jet2 { v: 1.0, d1: j.d1, d2: 0.1 * j.d2 }).collect();
        group.bench_with_input(BenchmarkId::new("backward_batch", width), &width, |b, _| {
            b.iter(|| black_box(params.backward_batch(&cache, &bars)))
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    let (cfg, obs) = desk();
    let mut params = MlpParams::init(cfg.shape(), cfg.half_length, cfg.h_bound, cfg.seed);
    let mut state = AdamState::new(params.param_count());
    let mut group = c.benchmark_group("training");
    group.sample_size(10);
    group.bench_function("desk_iteration", |b| {
        let mut t = 0;
        b.iter(|| {
            t += 1;
            let ev = evaluate(&params, &cfg, &obs, t).unwrap();
            let grads: Vec<f64> = ev.grads.iter().flat_map(|l| l.weight.iter().chain(l.bias.iter()).copied()).collect();
            let mut flat = params.flatten();
            adam_step(&mut flat, &grads, &mut state, cfg.learning_rate).unwrap();
            params.set_flat(&flat).unwrap();
            black_box(ev.record.loss)
        })
    });
    group.finish();
}

criterion_group!(benches, mlp, iteration);
criterion_main!(benches);
