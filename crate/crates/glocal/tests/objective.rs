mod oracle;

use nalgebra::DMatrix;
use needscope_glocal::{gradient, init_model, objective, Block, GlocalError, GlocalParams, TrainingData};

#[test]
fn matches_term_by_term_oracle() {
    for seed in 0..20 {
        let (model, data) = oracle::random_instance(seed, 5, 20, 10, 4, 3);
        let got = objective(&model, &data).unwrap();
        let want = oracle::objective_terms(&model, &data);
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        assert!(rel(got.total(), want.total()) < 1e-10);
        assert!(rel(got.fit, want.fit) < 1e-10);
        assert!(rel(got.latent, want.latent) < 1e-10);
        assert!(rel(got.global, want.global) < 1e-10);
        assert!(rel(got.local, want.local) < 1e-10);
        assert!(rel(got.regularizer, want.regularizer) < 1e-10);
    }
}

#[test]
fn zero_factors_leave_label_energy() {
    let (mut model, data) = oracle::random_instance(1, 5, 20, 10, 4, 3);
    model.u.fill(0.0);
    model.v.fill(0.0);
    model.w.fill(0.0);
    let got = objective(&model, &data).unwrap().total();
    assert!((got - data.y.norm_squared()).abs() < 1e-12);
}

#[test]
fn exact_factorization_costs_nothing() {
    let (mut model, mut data) = oracle::random_instance(2, 5, 20, 10, 4, 3);
    model.params.lambda2 = 0.0;
    model.params.lambda3 = 0.0;
    model.params.lambda4 = 0.0;
    model.v = model.w.transpose() * &data.x;
    data.y = &model.u * &model.v;
    assert!(objective(&model, &data).unwrap().total() < 1e-20);
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        let (model, data) = oracle::random_instance(100 + seed, 5, 20, 10, 4, 3);
        for block in oracle::blocks(3) {
            let analytic = gradient(&model, &data, block).unwrap();
            let numeric = oracle::fd_gradient(&model, &data, block, 1e-6);
            let err = oracle::relative_error(&analytic, &numeric);
            assert!(err <= 1e-4, "seed {seed} block {block}: {err}");
        }
    }
}

#[test]
fn masked_entries_do_not_contribute() {
    let (model, mut data) = oracle::random_instance(3, 5, 20, 10, 4, 3);
    data.mask[(2, 7)] = 0.0;
    let before = objective(&model, &data).unwrap().total();
    data.y[(2, 7)] = -data.y[(2, 7)];
    assert_eq!(objective(&model, &data).unwrap().total(), before);
    for block in [Block::U, Block::V] {
        let err = oracle::relative_error(&gradient(&model, &data, block).unwrap(), &oracle::fd_gradient(&model, &data, block, 1e-6));
        assert!(err <= 1e-4);
    }
}

#[test]
fn z_gradient_vanishes_without_correlation_terms() {
    let (mut model, data) = oracle::random_instance(4, 5, 20, 10, 4, 3);
    model.params.lambda3 = 0.0;
    model.params.lambda4 = 0.0;
    for m in 0..3 {
        assert!(gradient(&model, &data, Block::Z(m)).unwrap().iter().all(|&v| v == 0.0));
    }
}

#[test]
fn gradient_vanishes_at_block_minimizer() {
    // with everything else fixed and J = 1, V solves
    // (UᵀU + (λ1 + λ2) I) V = UᵀY + λ1 WᵀX
    let (mut model, data) = oracle::random_instance(5, 5, 20, 10, 4, 3);
    let p = &model.params;
    let mut a = model.u.transpose() * &model.u;
    for i in 0..a.nrows() {
        a[(i, i)] += p.lambda1 + p.lambda2;
    }
    let b = model.u.transpose() * &data.y + (model.w.transpose() * &data.x) * p.lambda1;
    model.v = a.lu().solve(&b).unwrap();
    let g = gradient(&model, &data, Block::V).unwrap();
    assert!(g.norm() <= 1e-6 * (1.0 + model.v.norm()), "{}", g.norm());
}

#[test]
fn unknown_block_and_shape_errors() {
    let (model, data) = oracle::random_instance(6, 5, 20, 10, 4, 3);
    assert!(matches!(gradient(&model, &data, Block::Z(3)), Err(GlocalError::UnknownBlock { .. })));
    let narrow = TrainingData::new(DMatrix::zeros(9, 20), &DMatrix::from_element(5, 20, 1i8)).unwrap();
    assert!(matches!(objective(&model, &narrow), Err(GlocalError::Shape { .. })));
}

fn rank_k_labels(k: usize, n: usize) -> DMatrix<i8> {
    // k linearly independent ±1 patterns repeated over the columns
    let patterns = [[1i8, -1, -1, 1, -1], [-1, 1, -1, -1, 1], [1, 1, -1, -1, -1], [1, -1, 1, -1, 1]];
    DMatrix::from_fn(5, n, |l, j| patterns[j % k][l])
}

#[test]
fn init_recovers_exact_rank() {
    for k in 1..=4 {
        let y = rank_k_labels(k, 20);
        let x = DMatrix::from_fn(6, 20, |i, j| ((i * 13 + j * 7) % 11) as f64 / 11.0);
        let data = TrainingData::new(x, &y).unwrap();
        let params = GlocalParams { k, g: 2, ..Default::default() };
        let model = init_model(&data, &params).unwrap();
        assert_eq!(model.latent_dim(), k);
        let rel = (&data.y - &model.u * &model.v).norm() / data.y.norm();
        assert!(rel <= 1e-8, "k {k}: {rel}");
        for z in &model.z {
            for r in 0..z.nrows() {
                assert!((z.row(r).norm() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(init_model(&data, &params).unwrap(), model);
    }
}

#[test]
fn init_shrinks_k_to_label_rank() {
    let data = TrainingData::new(DMatrix::from_fn(3, 12, |i, j| (i + j) as f64), &rank_k_labels(2, 12)).unwrap();
    let model = init_model(&data, &GlocalParams { k: 4, g: 2, ..Default::default() }).unwrap();
    assert_eq!(model.latent_dim(), 2);
    assert_eq!(model.z[0].ncols(), 2);
}

#[test]
fn invalid_params_rejected() {
    let data = TrainingData::new(DMatrix::zeros(3, 6), &rank_k_labels(2, 6)).unwrap();
    for params in [
        GlocalParams { k: 6, ..Default::default() },
        GlocalParams { k: 0, ..Default::default() },
        GlocalParams { g: 7, ..Default::default() },
        GlocalParams { lambda3: -1.0, ..Default::default() },
    ] {
        assert!(matches!(init_model(&data, &params), Err(GlocalError::InvalidParams(_))));
    }
}
