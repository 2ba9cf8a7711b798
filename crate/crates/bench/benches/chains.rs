use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use revjuggle_core::imrjmc::knutson_chain;
use revjuggle_core::matrixmodel::MatrixState;
use revjuggle_core::mrjmc::{bump_paths, MrjmcChain};
use revjuggle_core::numerics::{draw, seeded_rng};
use revjuggle_core::oracle::{build_matrix, solve_stationary, EXACT_STATE_CAP, FLOAT_STATE_CAP};
use revjuggle_core::rjmc::RjmcChain;
use revjuggle_core::states::enumerate_multipermutations;
use revjuggle_core::{Content, MarkovChain, Rational};

fn exact_solve(c: &mut Criterion) {
    let mut rng = seeded_rng(1);
    let content = Content::new(vec![1; 5]).unwrap();
    let chain = MrjmcChain::<Rational>::new(
        content.clone(),
        draw::distribution(&mut rng, 5),
        draw::open_unit_vec(&mut rng, content.alpha_len()),
    )
    .unwrap();
    let matrix = build_matrix(&chain, EXACT_STATE_CAP).unwrap();
    c.bench_function("exact solve, 120 multispecies states", |b| {
        b.iter(|| solve_stationary(black_box(&matrix)).unwrap())
    });
}

fn kernel_build(c: &mut Criterion) {
    let mut rng = seeded_rng(2);
    let x: Vec<f64> = draw::distribution(&mut rng, 6)
        .iter()
        .map(revjuggle_core::Scalar::to_f64)
        .collect();
    let chain = RjmcChain::<f64>::new(12, 5, x).unwrap();
    c.bench_function("float kernel build, m = 12, b = 5", |b| {
        b.iter(|| build_matrix(black_box(&chain), FLOAT_STATE_CAP).unwrap())
    });
}

fn bump_path_enumeration(c: &mut Criterion) {
    let mut rng = seeded_rng(3);
    let content = Content::new(vec![2, 1, 2, 1]).unwrap();
    let alpha = draw::open_unit_vec(&mut rng, content.alpha_len());
    let states = enumerate_multipermutations(&content);
    c.bench_function("bump paths from every start, content (2,1,2,1)", |b| {
        b.iter(|| {
            for tau in &states {
                for j in 1..=content.size() {
                    black_box(bump_paths(tau, &alpha, j).unwrap());
                }
            }
        })
    });
}

fn labelled_step(c: &mut Criterion) {
    let chain = knutson_chain::<Rational>(3, 4).unwrap();
    let state = "1324@(1,2,4,5)".parse().unwrap();
    c.bench_function("labelled kernel row, b = 4", |b| {
        b.iter(|| chain.step_distribution(black_box(&state)).unwrap())
    });
}

fn matrix_model_prepends(c: &mut Criterion) {
    c.bench_function("1000 prepends with both projections, b = 4, q = 3", |b| {
        b.iter(|| {
            let mut state = MatrixState::identity(4, 3).unwrap();
            let mut rng = seeded_rng(4);
            for _ in 0..1000 {
                state.prepend_random_column(&mut rng);
                black_box(state.rank_increase_positions());
                black_box(state.pivot_labels());
            }
        })
    });
}

criterion_group!(
    benches,
    exact_solve,
    kernel_build,
    bump_path_enumeration,
    labelled_step,
    matrix_model_prepends
);
criterion_main!(benches);
