use hagnn::graph::{generate_synthetic, MultiRelationGraph, RelationEdgeList, SynthConfig};
use hagnn::relation_attention::{local_embedding, relation_weights, RelationAttention};
use hagnn::seed::rng_for;
use hagnn::tensor::{Matrix, ParamStore, Tape};
use proptest::prelude::*;
use rand::Rng;

fn random_graph(n: usize, relations: usize, p: f64, seed: u64) -> MultiRelationGraph {
    let mut rng = rng_for(seed, "test:graph");
    let lists: Vec<_> = (0..relations)
        .map(|r| {
            let mut pairs = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random::<f64>() < p {
                        pairs.push((a, b));
                    }
                }
            }
            RelationEdgeList::from_pairs(r, pairs).0
        })
        .collect();
    let names = (0..relations).map(|r| format!("r{r}")).collect();
    MultiRelationGraph::assemble(Matrix::zeros(n, 2), vec![None; n], &lists, names).unwrap()
}

/// `(1/N) Σ_i Σ_k q_k tanh(Σ_j W_kj a_ij + b_k)` with dense loops.
fn importance_oracle(store: &ParamStore, ra: &RelationAttention, g: &MultiRelationGraph, r: usize) -> f64 {
    let (w, b, q) = (store.get(ra.weight), store.get(ra.bias), store.get(ra.query));
    let n = g.num_nodes();
    let mut total = 0.0;
    for i in 0..n {
        let a = g.adjacency_row_dense(r, i).unwrap();
        for k in 0..w.rows() {
            let pre: f64 = (0..n).map(|j| w.get(k, j) * a[j]).sum::<f64>() + b.get(0, k);
            total += q.get(0, k) * pre.tanh();
        }
    }
    total / n as f64
}

#[test]
fn importance_matches_loop_evaluation() {
    for seed in 0..10 {
        let g = random_graph(5, 2, 0.4, seed);
        let mut store = ParamStore::new();
        let ra = RelationAttention::new(&mut store, 5, 7, &mut rng_for(seed, "test:init"));
        *store.get_mut(ra.bias) = Matrix::from_vec(1, 7, (0..7).map(|k| 0.1 * k as f64 - 0.3).collect()).unwrap();
        let got = ra.importances(&store, &g).unwrap();
        for r in 0..2 {
            let want = importance_oracle(&store, &ra, &g, r);
            assert!((got[r] - want).abs() < 1e-13, "seed {seed} r {r}: {} vs {want}", got[r]);
        }
    }
}

#[test]
fn tape_beta_and_local_embedding_match_free_functions() {
    let g = random_graph(9, 3, 0.3, 4);
    let mut store = ParamStore::new();
    let ra = RelationAttention::new(&mut store, 9, 5, &mut rng_for(8, "test:init"));
    let mut tape = Tape::new();
    let bind = store.bind(&mut tape).unwrap();
    let out = ra.forward(&mut tape, &bind, &g).unwrap();
    let w = tape.value(out.importance).as_slice().to_vec();
    let beta = relation_weights(&w);
    for (a, b) in tape.value(out.beta).as_slice().iter().zip(&beta) {
        assert!((a - b).abs() < 1e-15);
    }
    let dense = out.local.dense(&mut tape).unwrap();
    for i in 0..9 {
        let h = local_embedding(&g, i, &beta).unwrap();
        for (a, b) in tape.value(dense).row(i).iter().zip(&h) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn selector_weights_pick_one_relation() {
    let g = random_graph(8, 3, 0.4, 2);
    for i in 0..8 {
        assert_eq!(local_embedding(&g, i, &[0.0, 1.0, 0.0]).unwrap(), g.adjacency_row_dense(1, i).unwrap());
    }
}

#[test]
fn local_embedding_mass_is_beta_weighted_degree() {
    let (g, _) = generate_synthetic(&SynthConfig::benchmark(1)).unwrap();
    let beta = [0.5, 0.3, 0.2];
    for i in (0..g.num_nodes()).step_by(37) {
        let h = local_embedding(&g, i, &beta).unwrap();
        let mass: f64 = h.iter().map(|v| v.abs()).sum();
        let census: f64 = (0..3).map(|r| beta[r] * g.degree(r, i) as f64).sum();
        assert!((mass - census).abs() < 1e-12);
        assert!(h.iter().all(|&v| (0.0..=1.0 + 1e-15).contains(&v)));
        let support: Vec<usize> = (0..h.len()).filter(|&j| h[j] > 0.0).collect();
        let mut union = g.neighbor_union(i).unwrap();
        union.retain(|&j| j != i);
        assert_eq!(support, union);
    }
}

#[test]
fn permuting_nodes_permutes_local_embeddings() {
    let g = random_graph(10, 2, 0.35, 6);
    let mut store = ParamStore::new();
    let ra = RelationAttention::new(&mut store, 10, 6, &mut rng_for(3, "test:init"));
    let perm: Vec<usize> = vec![3, 7, 0, 9, 1, 5, 8, 2, 6, 4];
    let pg = g.permuted(&perm).unwrap();
    let mut pstore = ParamStore::new();
    let pra = RelationAttention::new(&mut pstore, 10, 6, &mut rng_for(3, "test:init"));
    let w = store.get(ra.weight).clone();
    let pw = pstore.get_mut(pra.weight);
    for k in 0..w.rows() {
        for j in 0..10 {
            pw.set(k, perm[j], w.get(k, j));
        }
    }
    let beta = relation_weights(&ra.importances(&store, &g).unwrap());
    let pbeta = relation_weights(&pra.importances(&pstore, &pg).unwrap());
    for (a, b) in beta.iter().zip(&pbeta) {
        assert!((a - b).abs() < 1e-13);
    }
    for i in 0..10 {
        let h = local_embedding(&g, i, &beta).unwrap();
        let ph = local_embedding(&pg, perm[i], &pbeta).unwrap();
        for j in 0..10 {
            assert!((h[j] - ph[perm[j]]).abs() < 1e-13);
        }
    }
}

proptest! {
    #[test]
    fn beta_is_a_shift_invariant_probability_vector(
        w in prop::collection::vec(-50.0f64..50.0, 1..8),
        c in -100.0f64..100.0,
    ) {
        let beta = relation_weights(&w);
        prop_assert!(beta.iter().all(|&b| b > 0.0));
        prop_assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let shifted: Vec<f64> = w.iter().map(|v| v + c).collect();
        let moved = relation_weights(&shifted);
        for (a, b) in beta.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_from_random_parameters_is_normalized(seed in 0u64..500, hidden in 1usize..10) {
        let g = random_graph(6, 3, 0.4, seed);
        let mut store = ParamStore::new();
        let ra = RelationAttention::new(&mut store, 6, hidden, &mut rng_for(seed, "test:prop"));
        let beta = relation_weights(&ra.importances(&store, &g).unwrap());
        prop_assert!(beta.iter().all(|&b| b >= 0.0));
        prop_assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
