//! Rayon-dispatched helpers against plain sequential loops over the same work.
//! Build with `--no-default-features` to make the dispatched path sequential too.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use contour_vad::descriptors::chi2_unchecked;
use contour_vad::par;
use contour_vad::shapecluster::chi2_matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 1200;

fn random_rows(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..n * DIM).map(|_| rng.random_range(0.0..10.0)).collect()
}

fn chi2_sequential(data: &[f64]) -> Vec<f64> {
    let n = data.len() / DIM;
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(chi2_unchecked(&data[i * DIM..(i + 1) * DIM], &data[j * DIM..(j + 1) * DIM]));
        }
    }
    out
}

fn bench_chi2(c: &mut Criterion) {
    let data = random_rows(200);
    let mut g = c.benchmark_group("chi2-matrix-200");
    g.sample_size(10);
    let label = if par::is_parallel() { "rayon" } else { "dispatch-sequential" };
    g.bench_function(label, |b| b.iter(|| chi2_matrix(black_box(&data), DIM)));
    g.bench_function("sequential-loop", |b| b.iter(|| chi2_sequential(black_box(&data))));
    g.finish();
}

fn bench_row_norms(c: &mut Criterion) {
    let data = random_rows(2000);
    let rows: Vec<&[f64]> = data.chunks(DIM).collect();
    let norm = |r: &&[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut g = c.benchmark_group("row-norms-2000");
    let label = if par::is_parallel() { "rayon" } else { "dispatch-sequential" };
    g.bench_function(label, |b| b.iter(|| par::map(black_box(&rows), norm)));
    g.bench_function("sequential-loop", |b| {
        b.iter(|| black_box(&rows).iter().map(norm).collect::<Vec<_>>())
    });
    g.finish();
}

criterion_group!(benches, bench_chi2, bench_row_norms);
criterion_main!(benches);
