use hagnn::evaluation::{
    ablate, auc, avg_feature_similarity, avg_label_similarity, camouflage_report, lambda_sweep, mean_auc_by_key,
    recall, write_comparison, EdgeSet, FeatureSimilarity, MetricError, MetricReport,
};
use hagnn::graph::{generate_synthetic, split_nodes, Label, MultiRelationGraph, RelationEdgeList, SynthConfig};
use hagnn::seed::rng_for;
use hagnn::tensor::Matrix;
use hagnn::training::{train, TrainConfig, Variant};
use proptest::prelude::*;
use rand::Rng;

/// Exhaustive pair count, ties counting half, as `2·wins + ties` over `2·P·N`.
fn pair_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &yi) in labels.iter().enumerate() {
        if !yi {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj {
                continue;
            }
            pairs += 1;
            twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice as f64 / (2 * pairs) as f64
}

#[test]
fn auc_examples() {
    assert_eq!(auc(&[0.9, 0.8, 0.3, 0.1], &[true, false, true, false]).unwrap(), 0.75);
    assert_eq!(auc(&[0.9, 0.7, 0.2, 0.1], &[true, true, false, false]).unwrap(), 1.0);
    assert_eq!(auc(&[0.4; 5], &[true, false, true, false, false]).unwrap(), 0.5);
    assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(MetricError::DegenerateClass { .. })));
    assert!(auc(&[0.1, f64::NAN], &[true, false]).is_err());
    assert!(auc(&[0.1], &[true, false]).is_err());
}

#[test]
fn auc_equals_pair_counting_on_random_sets() {
    let mut rng = rng_for(1, "test:auc");
    for _ in 0..500 {
        let n = rng.random_range(2..60);
        // Coarse grid scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..12) as f64 / 11.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.3).collect();
        labels[0] = true;
        labels[1] = false;
        assert_eq!(auc(&scores, &labels).unwrap(), pair_auc(&scores, &labels));
    }
}

#[test]
fn recall_examples_and_counting_oracle() {
    assert_eq!(recall(&[0.9, 0.6, 0.1], &[true, true, false], 0.5).unwrap(), 1.0);
    assert_eq!(recall(&[0.2, 0.4, 0.9], &[true, true, false], 0.5).unwrap(), 0.0);
    assert!(matches!(recall(&[0.2], &[false], 0.5), Err(MetricError::NoPositives)));

    let mut rng = rng_for(2, "test:recall");
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.4).collect();
        labels[0] = true;
        let threshold = rng.random::<f64>();
        let tp = (0..n).filter(|&i| labels[i] && scores[i] >= threshold).count();
        let pos = labels.iter().filter(|&&y| y).count();
        assert_eq!(recall(&scores, &labels, threshold).unwrap(), tp as f64 / pos as f64);
    }
}

#[test]
fn report_counts_add_up() {
    let scores = [0.9, 0.2, 0.6, 0.4, 0.5, 0.1];
    let labels = [true, true, false, false, true, false];
    let r = MetricReport::compute(&scores, &labels, 0.5).unwrap();
    assert_eq!((r.tp, r.fn_, r.fp, r.tn), (2, 1, 1, 2));
    assert_eq!(r.recall, 2.0 / 3.0);
    let by_node = MetricReport::for_nodes(&scores, &[2, 3, 5], &[0, 1, 4], 0.5).unwrap();
    assert_eq!(by_node, r);
}

proptest! {
    #[test]
    fn auc_is_rank_based(
        raw in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..40),
    ) {
        let mut scores: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let mut labels: Vec<bool> = raw.iter().map(|r| r.1).collect();
        scores[0] += 2.0;
        labels[0] = true;
        labels[1] = false;
        let base = auc(&scores, &labels).unwrap();
        prop_assert_eq!(base, pair_auc(&scores, &labels));
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auc(&warped, &labels).unwrap(), base);
        let distinct = {
            let mut s = scores.clone();
            s.sort_by(f64::total_cmp);
            s.windows(2).all(|w| w[0] != w[1])
        };
        if distinct {
            let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
            prop_assert!((auc(&flipped, &labels).unwrap() + base - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn recall_does_not_increase_with_threshold(
        scores in prop::collection::vec(0.0f64..1.0, 1..30),
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| i % 2 == 0).collect();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(recall(&scores, &labels, hi).unwrap() <= recall(&scores, &labels, lo).unwrap());
    }
}

fn toy(n: usize, edges: Vec<Vec<(usize, usize)>>, labels: Vec<Option<Label>>, features: Matrix) -> MultiRelationGraph {
    let names = (0..edges.len()).map(|r| format!("r{r}")).collect();
    let lists: Vec<_> = edges.into_iter().enumerate().map(|(r, e)| RelationEdgeList::from_pairs(r, e).0).collect();
    assert_eq!(labels.len(), n);
    MultiRelationGraph::assemble(features, labels, &lists, names).unwrap()
}

const F: Option<Label> = Some(Label::Fraud);
const L: Option<Label> = Some(Label::Legit);

#[test]
fn label_similarity_examples() {
    let tri = toy(3, vec![vec![(0, 1), (1, 2), (0, 2)]], vec![F, F, L], Matrix::zeros(3, 1));
    assert_eq!(avg_label_similarity(&tri, EdgeSet::Relation(0)).unwrap(), 1.0 / 3.0);
    let one = toy(3, vec![vec![(0, 1), (1, 2)]], vec![L, L, L], Matrix::zeros(3, 1));
    assert_eq!(avg_label_similarity(&one, EdgeSet::Relation(0)).unwrap(), 1.0);
    let partial = toy(4, vec![vec![(0, 1), (1, 2), (2, 3)]], vec![F, L, None, L], Matrix::zeros(4, 1));
    assert_eq!(avg_label_similarity(&partial, EdgeSet::Relation(0)).unwrap(), 0.0);
    let unlabeled = toy(3, vec![vec![(0, 1)]], vec![None, L, L], Matrix::zeros(3, 1));
    assert!(matches!(avg_label_similarity(&unlabeled, EdgeSet::Relation(0)), Err(MetricError::NoEligibleEdges)));
    assert!(avg_label_similarity(&unlabeled, EdgeSet::Relation(3)).is_err());
}

#[test]
fn feature_similarity_examples() {
    let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0], vec![3.0, -1.0]]).unwrap();
    let g = toy(3, vec![vec![(0, 1), (1, 2), (0, 2)], vec![]], vec![F, L, L], x.clone());
    let loop_sum: f64 = [(0, 1), (1, 2), (0, 2)]
        .iter()
        .map(|&(u, v): &(usize, usize)| {
            let d2: f64 = (0..2).map(|c| (x.get(u, c) - x.get(v, c)).powi(2)).sum();
            (-d2 / 2.0).exp()
        })
        .sum();
    let got = avg_feature_similarity(&g, EdgeSet::Relation(0), FeatureSimilarity::Normalized).unwrap();
    assert!((got - loop_sum / 3.0).abs() < 1e-15);
    assert!(matches!(
        avg_feature_similarity(&g, EdgeSet::Relation(1), FeatureSimilarity::Normalized),
        Err(MetricError::EmptyRelation)
    ));
    let same = toy(3, vec![vec![(0, 1), (1, 2)]], vec![F, L, L], Matrix::filled(3, 4, 0.3));
    assert_eq!(avg_feature_similarity(&same, EdgeSet::Relation(0), FeatureSimilarity::Normalized).unwrap(), 1.0);
    let far = toy(2, vec![vec![(0, 1)]], vec![F, L], Matrix::from_rows(&[vec![0.0], vec![1e3]]).unwrap());
    assert!(avg_feature_similarity(&far, EdgeSet::Relation(0), FeatureSimilarity::Normalized).unwrap() < 1e-300);
    let raw = avg_feature_similarity(&same, EdgeSet::Relation(0), FeatureSimilarity::Raw).unwrap();
    assert_eq!(raw, 0.25);
}

#[test]
fn union_row_deduplicates_shared_edges() {
    let g = toy(4, vec![vec![(0, 1), (1, 2)], vec![(0, 1), (2, 3)]], vec![F, F, L, L], Matrix::zeros(4, 1));
    let rows = camouflage_report(&g, FeatureSimilarity::Normalized).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2].relation, "ALL");
    assert_eq!(rows[2].edges, 3);
    assert_eq!(rows[2].label_similarity, Some(2.0 / 3.0));
    assert_eq!(avg_label_similarity(&g, EdgeSet::Union).unwrap(), 2.0 / 3.0);
}

#[test]
fn similarities_match_brute_force_on_random_small_graphs() {
    let mut rng = rng_for(3, "test:similarity");
    for _ in 0..200 {
        let n = rng.random_range(3..12);
        let d = rng.random_range(1..4);
        let edges: Vec<(usize, usize)> = (0..rng.random_range(1..50))
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
            .collect();
        let labels: Vec<_> = (0..n).map(|_| if rng.random::<f64>() < 0.4 { F } else { L }).collect();
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let g = toy(n, vec![edges], labels.clone(), x.clone());
        let kept = g.relation_edges(0);
        if kept.is_empty() {
            continue;
        }
        let same = kept.iter().filter(|&&(u, v)| labels[u] == labels[v]).count();
        assert_eq!(avg_label_similarity(&g, EdgeSet::Relation(0)).unwrap(), same as f64 / kept.len() as f64);
        let mut total = 0.0;
        for &(u, v) in &kept {
            let d2: f64 = (0..d).map(|c| (x.get(u, c) - x.get(v, c)) * (x.get(u, c) - x.get(v, c))).sum();
            total += (-d2 / d as f64).exp();
        }
        let got = avg_feature_similarity(&g, EdgeSet::Relation(0), FeatureSimilarity::Normalized).unwrap();
        assert_eq!(got, total / kept.len() as f64);
    }
}

#[test]
fn similarities_survive_relabeling_and_feature_shift() {
    let (g, _) = generate_synthetic(&SynthConfig::benchmark(2)).unwrap();
    let n = g.num_nodes();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let pg = g.permuted(&perm).unwrap();
    let shifted = g.with_features(g.features().map(|v| v + 4.25)).unwrap();
    for set in [EdgeSet::Relation(0), EdgeSet::Relation(2), EdgeSet::Union] {
        let l = avg_label_similarity(&g, set).unwrap();
        assert!((avg_label_similarity(&pg, set).unwrap() - l).abs() < 1e-15);
        let f = avg_feature_similarity(&g, set, FeatureSimilarity::Normalized).unwrap();
        assert!((avg_feature_similarity(&pg, set, FeatureSimilarity::Normalized).unwrap() - f).abs() < 1e-12);
        assert!((avg_feature_similarity(&shifted, set, FeatureSimilarity::Normalized).unwrap() - f).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&l) && (0.0..=1.0).contains(&f));
    }
}

fn quick_config() -> TrainConfig {
    let mut c = TrainConfig::default();
    for kv in ["epochs=2", "relation_hidden=4", "heads=2", "head_dim=2", "proj_hidden=4", "embed_dim=4", "fusion_hidden=3", "classifier_hidden=3"] {
        c.apply_assignment(kv).unwrap();
    }
    c
}

fn quick_graph() -> MultiRelationGraph {
    let cfg = SynthConfig {
        num_nodes: 40,
        fraud_fraction: 0.25,
        num_relations: 2,
        edge_probs: vec![0.2, 0.1],
        camouflage_rate: 0.3,
        feature_dim: 3,
        feature_camouflage_rate: 0.3,
        feature_shift: 1.0,
        balance_degrees: true,
        seed: 5,
    };
    generate_synthetic(&cfg).unwrap().0
}

#[test]
fn ablation_emits_one_row_per_variant_and_seed() {
    let g = quick_graph();
    let rows = ablate(&g, &quick_config(), &Variant::ABLATION, &[0, 1], 1).unwrap();
    assert_eq!(rows.len(), 6);
    for seed in [0, 1] {
        let mine: Vec<_> = rows.iter().filter(|r| r.seed == seed).collect();
        assert_eq!(mine.iter().map(|r| r.key.as_str()).collect::<Vec<_>>(), vec!["V1", "V2", "FULL"]);
        assert!(mine.iter().all(|r| r.split_digest == mine[0].split_digest));
    }
    assert_ne!(rows[0].split_digest, rows[3].split_digest);
    let parallel = ablate(&g, &quick_config(), &Variant::ABLATION, &[0, 1], 3).unwrap();
    assert_eq!(parallel, rows);
    let means = mean_auc_by_key(&rows);
    assert_eq!(means.len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ablation.csv");
    write_comparison(&path, &rows).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "variant_or_lambda,auc,recall,seed");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn sweep_rows_and_single_lambda_equivalence() {
    let g = quick_graph();
    let base = quick_config();
    let rows = lambda_sweep(&g, &base, &[0.2, 0.4, 0.6, 0.8], &[3], 1).unwrap();
    assert_eq!(rows.iter().map(|r| r.key.as_str()).collect::<Vec<_>>(), vec!["0.2", "0.4", "0.6", "0.8"]);

    let single = lambda_sweep(&g, &base, &[0.6], &[3], 1).unwrap();
    let config = TrainConfig {
        seed: 3,
        lambda: 0.6,
        ..base.clone()
    };
    let split = split_nodes(g.labels(), config.train_fraction, 3).unwrap();
    let out = train(&g, &split, &config).unwrap();
    let probs = out.state.forward_pass(&g).unwrap().probs;
    let direct = MetricReport::for_nodes(&probs, &split.test_legit, &split.test_fraud, config.threshold).unwrap();
    assert_eq!(single[0].report, direct);
    assert_eq!(single[0], rows[2]);
}
