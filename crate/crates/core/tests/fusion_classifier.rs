use hagnn::fusion::{
    class_balanced_loss, loss_targets, Classifier, FusionConfig, InfoAttention, LossError, Projector, Source,
};
use hagnn::graph::DatasetSplit;
use hagnn::input::NodeInput;
use hagnn::seed::rng_for;
use hagnn::tensor::{sigmoid, Activation, Matrix, ParamStore, Tape};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = rng_for(seed, "test:matrix");
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

fn small_config() -> FusionConfig {
    FusionConfig {
        proj_hidden: 5,
        embed_dim: 3,
        fusion_hidden: 4,
        classifier_hidden: 6,
        activation: Activation::leaky_relu(),
    }
}

/// `act(W x + b)` for a single row.
fn dense_loop(w: &Matrix, b: &Matrix, x: &[f64], act: Option<Activation>) -> Vec<f64> {
    (0..w.rows())
        .map(|o| {
            let v = (0..w.cols()).map(|c| w.get(o, c) * x[c]).sum::<f64>() + b.get(0, o);
            act.map_or(v, |a| a.apply(v))
        })
        .collect()
}

fn randomize_biases(store: &mut ParamStore, seed: u64) {
    let ids: Vec<_> = store.ids().filter(|&id| store.name(id).ends_with(".bias")).collect();
    for (k, id) in ids.into_iter().enumerate() {
        let (r, c) = store.get(id).shape();
        *store.get_mut(id) = random_matrix(r, c, seed + k as u64);
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn projection_matches_layer_by_layer_evaluation() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let proj = Projector::new(&mut store, &cfg, [Some(7), Some(2), Some(4)], &mut rng_for(1, "t"));
    randomize_biases(&mut store, 10);
    let x = random_matrix(3, 4, 2);
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    let xv = tape.constant(x.clone()).unwrap();
    let out = proj.project(&mut tape, &bind, Source::Feature, &NodeInput::dense(xv)).unwrap();
    let out = tape.value(out).clone();
    assert_eq!(out.shape(), (3, 3));
    let first = proj.first[Source::Feature.index()].unwrap();
    for i in 0..3 {
        let hidden = dense_loop(store.get(first.weight), store.get(first.bias), x.row(i), Some(cfg.activation));
        let want = dense_loop(store.get(proj.second.weight), store.get(proj.second.bias), &hidden, None);
        assert!(close(out.row(i), &want, 1e-14));
    }
}

#[test]
fn projection_shapes_and_zero_input() {
    let cfg = FusionConfig::default();
    let mut store = ParamStore::new();
    let proj = Projector::new(&mut store, &cfg, [Some(10), Some(6), Some(3)], &mut rng_for(2, "t"));
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    for (s, w) in Source::ALL.into_iter().zip([10, 6, 3]) {
        let x = tape.constant(Matrix::zeros(4, w)).unwrap();
        let out = proj.project(&mut tape, &bind, s, &NodeInput::dense(x)).unwrap();
        assert_eq!(tape.value(out), &Matrix::zeros(4, 32));
    }
    let bad = tape.constant(Matrix::zeros(4, 5)).unwrap();
    assert!(proj.project(&mut tape, &bind, Source::Local, &NodeInput::dense(bad)).is_err());
}

fn fuse_with(store: &ParamStore, info: &InfoAttention, parts: &[Matrix]) -> (Matrix, Matrix, Matrix) {
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    let vars: Vec<_> = parts.iter().map(|m| tape.constant(m.clone()).unwrap()).collect();
    let fused = info.fuse(&mut tape, &bind, &vars).unwrap();
    (tape.value(fused.eta).clone(), tape.value(fused.phi).clone(), tape.value(fused.z).clone())
}

#[test]
fn constructed_scores_give_sevenths() {
    let cfg = FusionConfig {
        embed_dim: 3,
        fusion_hidden: 3,
        ..small_config()
    };
    let mut store = ParamStore::new();
    let info = InfoAttention::new(&mut store, &cfg, &mut rng_for(3, "t"));
    *store.get_mut(info.weight) = Matrix::identity(3);
    let t = 1f64.tanh();
    *store.get_mut(info.query) = Matrix::row_vector(&[0.0, 2f64.ln() / t, 4f64.ln() / t]);
    let parts = [
        Matrix::row_vector(&[0.0, 0.0, 0.0]),
        Matrix::row_vector(&[0.0, 1.0, 0.0]),
        Matrix::row_vector(&[0.0, 0.0, 1.0]),
    ];
    let (eta, phi, _) = fuse_with(&store, &info, &parts);
    assert!(close(eta.row(0), &[0.0, 2f64.ln(), 4f64.ln()], 1e-14));
    assert!(close(phi.row(0), &[1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0], 1e-14));
}

#[test]
fn zero_query_or_identical_sources_are_uniform() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let info = InfoAttention::new(&mut store, &cfg, &mut rng_for(4, "t"));
    let m = random_matrix(5, 3, 1);
    let (_, phi, z) = fuse_with(&store, &info, &[m.clone(), m.clone(), m.clone()]);
    assert!(phi.as_slice().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    assert!(close(z.as_slice(), m.as_slice(), 1e-14));

    *store.get_mut(info.query) = Matrix::zeros(1, cfg.fusion_hidden);
    let parts = [random_matrix(5, 3, 2), random_matrix(5, 3, 3), random_matrix(5, 3, 4)];
    let (_, phi, _) = fuse_with(&store, &info, &parts);
    assert!(phi.as_slice().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn fusion_matches_direct_evaluation() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let info = InfoAttention::new(&mut store, &cfg, &mut rng_for(5, "t"));
    randomize_biases(&mut store, 20);
    let parts = [random_matrix(6, 3, 5), random_matrix(6, 3, 6), random_matrix(6, 3, 7)];
    let (_, phi, z) = fuse_with(&store, &info, &parts);
    let q = store.get(info.query).as_slice().to_vec();
    for i in 0..6 {
        let eta: Vec<f64> = parts
            .iter()
            .map(|m| {
                let h = dense_loop(store.get(info.weight), store.get(info.bias), m.row(i), Some(Activation::Tanh));
                h.iter().zip(&q).map(|(a, b)| a * b).sum()
            })
            .collect();
        let max = eta.iter().cloned().fold(f64::MIN, f64::max);
        let e: Vec<f64> = eta.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = e.iter().sum();
        let want_phi: Vec<f64> = e.iter().map(|v| v / total).collect();
        assert!(close(phi.row(i), &want_phi, 1e-14));
        let want_z: Vec<f64> = (0..3).map(|c| (0..3).map(|s| want_phi[s] * parts[s].get(i, c)).sum()).collect();
        assert!(close(z.row(i), &want_z, 1e-14));
        assert!((phi.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn collinear_sources_fuse_inside_their_hull() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let info = InfoAttention::new(&mut store, &cfg, &mut rng_for(6, "t"));
    let base = Matrix::row_vector(&[1.0, -2.0, 0.5]);
    let parts = [base.scaled(-1.0), base.scaled(0.5), base.scaled(3.0)];
    let (_, _, z) = fuse_with(&store, &info, &parts);
    for c in 0..3 {
        let vals: Vec<f64> = parts.iter().map(|m| m.get(0, c)).collect();
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        assert!(z.get(0, c) >= lo - 1e-15 && z.get(0, c) <= hi + 1e-15);
    }
}

#[test]
fn prediction_matches_scalar_evaluation() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let clf = Classifier::new(&mut store, &cfg, &mut rng_for(7, "t"));
    randomize_biases(&mut store, 30);
    let z = random_matrix(8, 3, 8);
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    let zv = tape.constant(z.clone()).unwrap();
    let probs = clf.predict(&mut tape, &bind, zv).unwrap();
    let probs = tape.value(probs).clone();
    for i in 0..8 {
        let h = dense_loop(store.get(clf.hidden.weight), store.get(clf.hidden.bias), z.row(i), Some(cfg.activation));
        let logit = dense_loop(store.get(clf.output.weight), store.get(clf.output.bias), &h, None)[0];
        assert!((probs.get(i, 0) - sigmoid(logit)).abs() < 1e-15);
    }

    for id in store.ids().collect::<Vec<_>>() {
        let (r, c) = store.get(id).shape();
        *store.get_mut(id) = Matrix::zeros(r, c);
    }
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    let zv = tape.constant(z).unwrap();
    let probs = clf.predict(&mut tape, &bind, zv).unwrap();
    assert!(tape.value(probs).as_slice().iter().all(|&p| p == 0.5));
}

#[test]
fn output_bias_moves_probability_monotonically() {
    let cfg = small_config();
    let mut store = ParamStore::new();
    let clf = Classifier::new(&mut store, &cfg, &mut rng_for(8, "t"));
    let z = random_matrix(1, 3, 9);
    let mut last = 0.0;
    for b in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        *store.get_mut(clf.output.bias) = Matrix::scalar(b);
        let mut tape = Tape::new();
        let bind = store.bind(&mut tape).unwrap();
        let zv = tape.constant(z.clone()).unwrap();
        let p = clf.predict(&mut tape, &bind, zv).unwrap();
        let p = tape.value(p).item();
        assert!(p > last);
        last = p;
    }
}

#[test]
fn loss_examples() {
    let probs = vec![0.5; 6];
    let loss = class_balanced_loss(&probs, &[0, 1, 2], &[3, 4, 5], 1.0).unwrap();
    assert!((loss - 6.0 * 2f64.ln()).abs() < 1e-14);
    let perfect = [0.0, 0.0, 1.0, 1.0];
    let loss = class_balanced_loss(&perfect, &[0, 1], &[2, 3], 0.4).unwrap();
    assert!(loss >= 0.0 && loss < 1e-6);
    assert_eq!(class_balanced_loss(&probs, &[0, 1], &[1, 2], 0.4), Err(LossError::Overlap(1)));
    assert!(class_balanced_loss(&probs, &[0, 9], &[1], 0.4).is_err());
    assert!(class_balanced_loss(&probs, &[0], &[1], 0.0).is_err());
}

#[test]
fn logit_gradient_is_weighted_residual() {
    let split = DatasetSplit {
        train_legit: vec![0, 2],
        train_fraud: vec![1, 3],
        test_legit: vec![4],
        test_fraud: vec![],
    };
    let lambda = 0.4;
    let targets = loss_targets(&split, 5, lambda).unwrap();
    let logits = Matrix::column(&[0.3, -1.2, 2.0, 0.7, -0.4]);
    let mut tape = Tape::new();
    let lv = tape.leaf(logits.clone()).unwrap();
    let loss = tape.weighted_bce(lv, targets.clone()).unwrap();
    tape.backward(loss).unwrap();
    let grad = tape.grad(lv).unwrap().clone();

    let loss_at = |l: &Matrix| {
        let probs: Vec<f64> = l.as_slice().iter().map(|&x| sigmoid(x)).collect();
        class_balanced_loss(&probs, &split.train_legit, &split.train_fraud, lambda).unwrap()
    };
    assert!((tape.value(loss).item() - loss_at(&logits)).abs() < 1e-12);
    let eps = 1e-6;
    for i in 0..5 {
        let p = sigmoid(logits.get(i, 0));
        let (y, w) = match i {
            0 | 2 => (0.0, lambda),
            1 | 3 => (1.0, 1.0),
            _ => (0.0, 0.0),
        };
        assert!((grad.get(i, 0) - w * (p - y)).abs() < 1e-14);
        let mut up = logits.clone();
        up.set(i, 0, logits.get(i, 0) + eps);
        let mut down = logits.clone();
        down.set(i, 0, logits.get(i, 0) - eps);
        let numeric = (loss_at(&up) - loss_at(&down)) / (2.0 * eps);
        assert!((grad.get(i, 0) - numeric).abs() < 1e-8, "node {i}: {} vs {numeric}", grad.get(i, 0));
    }
}

proptest! {
    #[test]
    fn loss_decreases_in_fraud_probability(
        probs in prop::collection::vec(0.01f64..0.99, 6),
        bump in 0.001f64..0.5,
    ) {
        let base = class_balanced_loss(&probs, &[0, 1, 2], &[3, 4, 5], 0.4).unwrap();
        prop_assert!(base >= 0.0);
        let mut up = probs.clone();
        up[4] = (up[4] + bump).min(0.999);
        if up[4] > probs[4] {
            prop_assert!(class_balanced_loss(&up, &[0, 1, 2], &[3, 4, 5], 0.4).unwrap() < base);
        }
    }

    #[test]
    fn smaller_lambda_only_shrinks_legit_terms(
        probs in prop::collection::vec(0.01f64..0.99, 6),
        lambda in 0.05f64..1.0,
        cut in 0.1f64..0.9,
    ) {
        let legit = [0usize, 1, 2];
        let fraud = [3usize, 4, 5];
        let fraud_only = class_balanced_loss(&probs, &[], &fraud, lambda).unwrap();
        let fraud_only_low = class_balanced_loss(&probs, &[], &fraud, lambda * cut).unwrap();
        prop_assert_eq!(fraud_only, fraud_only_low);
        for &i in &legit {
            let hi = class_balanced_loss(&probs, &[i], &[], lambda).unwrap();
            let lo = class_balanced_loss(&probs, &[i], &[], lambda * cut).unwrap();
            prop_assert!(lo < hi);
        }
    }

    #[test]
    fn phi_is_a_shift_invariant_probability_vector(
        eta in prop::collection::vec(-20.0f64..20.0, 3),
        c in -50.0f64..50.0,
    ) {
        let mut tape = Tape::new();
        let a = tape.constant(Matrix::row_vector(&eta)).unwrap();
        let b = tape.constant(Matrix::row_vector(&eta.iter().map(|v| v + c).collect::<Vec<_>>())).unwrap();
        let pa = tape.softmax_rows(a).unwrap();
        let pb = tape.softmax_rows(b).unwrap();
        let (pa, pb) = (tape.value(pa).as_slice().to_vec(), tape.value(pb).as_slice().to_vec());
        prop_assert!((pa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(pa.iter().all(|&v| v > 0.0));
        prop_assert!(close(&pa, &pb, 1e-12));
    }
}
