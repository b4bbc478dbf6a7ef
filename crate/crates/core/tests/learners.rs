use movecorpus::learners::{
    evaluate, oversample_random, oversample_smote, split_train_test, Dataset, Hyper, LearnerRegistry,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(seed: u64, n: usize, positive_rate: f64, gap: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let y = rng.random_bool(positive_rate);
            let centre = if y { gap } else { -gap };
            ((0..4).map(|_| centre + rng.random_range(-1.0..1.0)).collect(), y)
        })
        .collect();
    Dataset::from_dense(rows).unwrap()
}

#[test]
fn thousand_row_stratified_split_keeps_ratios() {
    let data = blobs(1, 1000, 0.13, 1.0);
    let (pos, neg) = data.class_counts();
    let (train, test) = split_train_test(&data, 0.8, 42, true).unwrap();
    let (tp, tn) = train.class_counts();
    assert!((tp as f64 - 0.8 * pos as f64).abs() <= 1.0, "{tp} of {pos}");
    assert!((tn as f64 - 0.8 * neg as f64).abs() <= 1.0, "{tn} of {neg}");
    assert_eq!(train.len() + test.len(), 1000);
}

#[test]
fn fifty_point_smote_is_on_neighbour_segments() {
    let data = blobs(2, 400, 50.0 / 400.0, 0.5);
    let minority: Vec<Vec<f64>> = data.rows.iter().filter(|r| r.positive).map(|r| r.x.to_dense()).collect();
    let out = oversample_smote(&data, 5, 9).unwrap();
    assert_eq!(out.class_counts().0, out.class_counts().1);
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    for s in &out.rows[data.len()..] {
        let x = s.x.to_dense();
        let ok = minority.iter().any(|a| {
            let mut order: Vec<&Vec<f64>> = minority.iter().filter(|b| *b != a).collect();
            order.sort_by(|p, q| d2(a, p).total_cmp(&d2(a, q)));
            order.iter().take(5).any(|b| {
                let dir: Vec<f64> = a.iter().zip(b.iter()).map(|(p, q)| q - p).collect();
                let u = x.iter().zip(a).zip(&dir).map(|((xv, av), dv)| (xv - av) * dv).sum::<f64>() / d2(a, b);
                (0.0..=1.0).contains(&u)
                    && x.iter().zip(a).zip(&dir).all(|((xv, av), dv)| (xv - av - u * dv).abs() < 1e-9)
            })
        });
        assert!(ok, "{} is not on a neighbour segment", s.id);
    }
}

#[test]
fn every_learner_separates_blobs_and_round_trips() {
    let reg = LearnerRegistry::standard();
    let train = blobs(3, 300, 0.3, 1.5);
    let test = blobs(4, 200, 0.3, 1.5);
    for kind in ["logreg", "linear_svm", "random_forest", "gbdt", "mlp1"] {
        let model = reg.train(kind, &train, &Hyper::default(), 7, "dense").unwrap();
        let m = evaluate(&model, &test, 0.5).unwrap();
        assert!(m.accuracy > 0.95, "{kind}: {m:?}");
        let again = reg.train(kind, &train, &Hyper::default(), 7, "dense").unwrap();
        assert_eq!(again, model, "{kind} is not deterministic for a fixed seed");
        let restored = movecorpus::learners::TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
        for r in &test.rows {
            assert_eq!(restored.predict_proba(&r.x).unwrap(), model.predict_proba(&r.x).unwrap());
        }
    }
    assert!(reg.train("naive_bayes", &train, &Hyper::default(), 7, "dense").is_err());
}

proptest! {
    #[test]
    fn oversampling_balances_and_keeps_originals(seed in 0u64..200, n in 6usize..80, rate in 0.1f64..0.5) {
        let data = blobs(seed, n, rate, 1.0);
        let (pos, neg) = data.class_counts();
        prop_assume!(pos > 0 && neg > 0);
        for out in [oversample_random(&data, seed).unwrap(), oversample_smote(&data, 5, seed).unwrap()] {
            prop_assert_eq!(out.class_counts(), (pos.max(neg), pos.max(neg)));
            prop_assert_eq!(&out.rows[..data.len()], &data.rows[..]);
        }
    }
}
