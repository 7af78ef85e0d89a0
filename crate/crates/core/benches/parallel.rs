//! Single-thread pool against the default pool on the data-parallel hot
//! paths. Build with `--no-default-features` to time the sequential fallback.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shiftgibbs::interaction::Interaction;
use shiftgibbs::potential::Potential;
use shiftgibbs::shift::{Alphabet, Config, Window};
use shiftgibbs::specification::Specification;
use shiftgibbs::transfer::{dlr_residual, equilibrium_markov};
use shiftgibbs::verify::{bowen_report, Extension};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", single), ("default", default)]
}

fn kernels(c: &mut Criterion) {
    let ising = Specification::from_interaction(Interaction::ising(Alphabet::spins(), 0.5, 0.0).unwrap());
    let dyson = Specification::from_cocycle(Potential::dyson(Alphabet::spins(), 0.0, 0.3, 3.0).unwrap());
    let boundary = Config::constant(1);
    let mut g = c.benchmark_group("kernel_table");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("ising_w16", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| ising.kernel_table(black_box(Window::new(0, 15).unwrap()), &boundary).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("dyson_w10", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| dyson.kernel_table(black_box(Window::new(0, 9).unwrap()), &boundary).unwrap()))
        });
    }
    g.finish();
}

fn verifiers(c: &mut Criterion) {
    let inter = Interaction::ising(Alphabet::spins(), 0.5, 0.0).unwrap();
    let spec = Specification::from_interaction(inter);
    let phi = Potential::ising(Alphabet::spins(), 0.5, 0.0).unwrap();
    let mu = equilibrium_markov(&phi).unwrap();
    let p = shiftgibbs::transfer::pressure(&phi).unwrap();
    let mut g = c.benchmark_group("verifiers");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("dlr_pad4", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| dlr_residual(&mu, &spec, Window::site(0), black_box(4)).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("bowen_n12", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| bowen_report(&mu, &phi, p, black_box(12), Extension::Background, None).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, verifiers);
criterion_main!(benches);
