use std::hint::black_box;

use ccrm::analysis::hungarian;
use ccrm::graph::generate_graph;
use ccrm::inference::{hmc_update, mcmc_sweep, resample_latent_counts, SweepControl};
use ccrm::levy::laplace_exponent;
use ccrm::sim::sample_ccrm_atoms;
use ccrm::{CcrmParams, Hyperpriors, InitialValues, McmcState};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bench_levy(c: &mut Criterion) {
    let params = CcrmParams::symmetric(2, 0.5, 1.0, 0.2, 0.5).unwrap();
    c.bench_function("laplace_exponent p=2", |b| {
        b.iter(|| laplace_exponent(black_box(&[3.0, 7.0]), &params).unwrap())
    });
}

fn bench_atoms(c: &mut Criterion) {
    let params = CcrmParams::symmetric(2, 0.5, 1.0, 0.2, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("ccrm atoms alpha=50 eps=1e-4", |b| {
        b.iter(|| {
            sample_ccrm_atoms(&params, 50.0, 1e-4, &[0.0, 0.0], &mut rng)
                .unwrap()
                .len()
        })
    });
}

fn bench_hungarian(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [5usize, 50] {
        let cost: Vec<f64> = (0..n * n).map(|_| rng.random()).collect();
        c.bench_function(&format!("hungarian n={n}"), |b| {
            b.iter(|| hungarian(black_box(&cost), n).unwrap())
        });
    }
}

fn fitted_state() -> McmcState {
    let params = CcrmParams::symmetric(2, 0.2, 1.0, 0.2, 0.5).unwrap();
    let (graph, _) = generate_graph(&params, 50.0, 2e-6, 3)
        .unwrap()
        .graph
        .connected_subgraph();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut s = McmcState::initial(&graph, 2, false, &InitialValues::default()).unwrap();
    s.latent = resample_latent_counts(&graph, &s.weights(), 2, &mut rng).unwrap();
    s
}

fn bench_mcmc(c: &mut Criterion) {
    let base = fitted_state();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    c.bench_function(&format!("hmc L=10 n={}", base.n()), |b| {
        let mut s = base.clone();
        b.iter(|| hmc_update(&mut s, 10, 0.01, &mut rng).unwrap())
    });
    let ctl = SweepControl {
        leapfrog_steps: 10,
        epsilon: 1e-3,
        update_weights: true,
        adapt: None,
    };
    let priors = Hyperpriors::default();
    c.bench_function(&format!("mcmc sweep n={}", base.n()), |b| {
        let mut s = base.clone();
        b.iter(|| mcmc_sweep(&mut s, &priors, &ctl, &mut rng).unwrap())
    });
}

criterion_group!(benches, bench_levy, bench_atoms, bench_hungarian, bench_mcmc);
criterion_main!(benches);
