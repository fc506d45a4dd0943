use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use polyglot_core::kernels::{matmul_acc, matmul_acc_seq};
use polyglot_core::nn::{init_uniform, CellKind, SeqBatch, StackedBiLstm};
use polyglot_core::{par, seeded_rng, Graph, ParamStore, Rng, Tensor};
use std::hint::black_box;

fn matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &n in &[64usize, 256, 512] {
        let mut rng = seeded_rng(1);
        let a: Tensor<f32> = init_uniform(&mut rng, &[n, n], 1.0);
        let b: Tensor<f32> = init_uniform(&mut rng, &[n, n], 1.0);
        let mut out = vec![0f32; n * n];
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |bench, &n| {
            bench.iter(|| {
                out.fill(0.0);
                matmul_acc_seq(a.data(), b.data(), &mut out, n, n, n);
                black_box(&out);
            })
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |bench, &n| {
            bench.iter(|| {
                out.fill(0.0);
                matmul_acc(a.data(), b.data(), &mut out, n, n, n);
                black_box(&out);
            })
        });
    }
    group.finish();
}

// Independent forward passes over sentence batches, the shape of evaluation
// and representation extraction.
fn batched_encoder(c: &mut Criterion) {
    let mut rng = seeded_rng(2);
    let mut store = ParamStore::<f32>::new();
    let enc = StackedBiLstm::new(&mut store, "enc", CellKind::Highway, 32, 64, 2, 0.0, 0.0, &mut rng);
    let batches: Vec<Vec<Tensor<f32>>> = (0..16)
        .map(|_| (0..8).map(|i| init_uniform(&mut rng, &[5 + i, 32], 1.0)).collect())
        .collect();
    let run = |parts: &Vec<Tensor<f32>>| {
        let mut g = Graph::new();
        let lens: Vec<usize> = parts.iter().map(Tensor::rows).collect();
        let vars: Vec<_> = parts.iter().map(|t| g.constant(t.clone())).collect();
        let flat = g.concat_rows(&vars);
        let out = enc.forward::<f32, Rng>(&mut g, &store, &SeqBatch::new(&lens), flat, None);
        g.value(out).sum()
    };
    let mut group = c.benchmark_group("encoder_batches");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(batches.iter().map(run).collect::<Vec<_>>()))
    });
    group.bench_function("parallel", |b| b.iter(|| black_box(par::map(&batches, run))));
    group.finish();
}

criterion_group!(benches, matmul, batched_encoder);
criterion_main!(benches);
