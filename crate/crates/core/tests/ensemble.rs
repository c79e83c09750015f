use d2nn::data::{Image, LabeledImage, SplitTag};
use d2nn::ensemble::synthetic::score_cache;
use d2nn::ensemble::{
    accuracy, build_score_cache, ensemble_predict, optimize_weights, pruning_loss,
    pruning_loss_and_gradient, rank_networks, report_metrics, run_pruning, select_ensemble,
    EliminationKind, Interval, PruningConfig, RetainScheme, ScoreCache, WeightMatrix,
    WeightOptConfig,
};
use d2nn::frontend::{EncodingSpec, FrontEndSpec, ObjectFilterSpec, PhaseRange};
use d2nn::network::{Architecture, Bench, D2nnModel};
use d2nn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(steps: usize) -> WeightOptConfig {
    WeightOptConfig {
        steps,
        eval_every: 1,
        lr: 0.01,
        ..WeightOptConfig::default()
    }
}

fn models() -> Vec<D2nnModel> {
    let arch = Architecture {
        layers: 2,
        ..Architecture::desk()
    };
    (0..2)
        .map(|i| {
            let spec = FrontEndSpec::object(
                EncodingSpec::Phase {
                    range: PhaseRange::Pi,
                },
                ObjectFilterSpec::Circle {
                    cx: 0.0,
                    cy: 0.0,
                    radius: 5.0 + i as f64,
                },
            );
            D2nnModel::random(&arch, spec, i).unwrap().quantized()
        })
        .collect()
}

fn images(n: usize) -> Vec<LabeledImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    (0..n)
        .map(|i| LabeledImage {
            image: Image::new(32, (0..1024).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap(),
            label: (i % 10) as u8,
            origin: i,
        })
        .collect()
}

#[test]
fn cache_matches_forward_and_is_deterministic() {
    let ms = models();
    let imgs = images(3);
    let names = vec!["a".to_string(), "b".to_string()];
    let build = || build_score_cache(&names, |k| Ok(ms[k].clone()), &imgs, SplitTag::Validation).unwrap();
    let one = build();
    let two = build();
    assert_eq!(one.cache, two.cache);
    assert_eq!(one.degenerate, 0);
    for (k, m) in ms.iter().enumerate() {
        let bench = Bench::new(m).unwrap();
        for (s, img) in imgs.iter().enumerate() {
            let f = bench.forward(m, &img.image).unwrap();
            for c in 0..10 {
                assert_eq!(one.cache.score(s, k, c), f.scores[c] as f32);
            }
        }
    }
    assert!(one.cache.scores().iter().all(|z| z.abs() <= 10.0));

    let single = build_score_cache(&names[..1], |k| Ok(ms[k].clone()), &imgs[..1], SplitTag::Validation)
        .unwrap();
    assert_eq!(single.cache.scores().len(), 10);
}

#[test]
fn degenerate_samples_become_zero() {
    let ms = models();
    let spec = FrontEndSpec::object(
        EncodingSpec::Amplitude,
        ObjectFilterSpec::Circle {
            cx: 0.0,
            cy: 0.0,
            radius: 5.0,
        },
    );
    let m = D2nnModel::random(&Architecture::desk(), spec, 0).unwrap();
    let black = vec![LabeledImage {
        image: Image::filled(32, 0.0).unwrap(),
        label: 0,
        origin: 0,
    }];
    let b = build_score_cache(&["z".into()], |_| Ok(m.clone()), &black, SplitTag::Validation).unwrap();
    assert_eq!(b.degenerate, 10);
    assert!(b.cache.scores().iter().all(|z| *z == 0.0));
    drop(ms);
}

#[test]
fn cache_file_roundtrip_and_errors() {
    let cache = score_cache(3, 20, &[1.0, 2.0, 0.5], 10, 10.0, SplitTag::Validation).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.d2sc");
    cache.save(&path).unwrap();
    assert_eq!(ScoreCache::load(&path).unwrap(), cache);
    let bytes = std::fs::read(&path).unwrap();
    assert!(matches!(ScoreCache::from_bytes(&bytes[..bytes.len() - 1]), Err(Error::Checksum)));
    let mut bad = bytes.clone();
    bad[3] = b'X';
    assert!(matches!(ScoreCache::from_bytes(&bad), Err(Error::Format(_))));
    let tsv = cache.to_tsv();
    assert_eq!(tsv.lines().count(), 1 + 20 * 3);
    assert!(tsv.starts_with("sample\tlabel\tnetwork\tz0"));
    assert!(ScoreCache::new(SplitTag::Train, 10, vec!["a".into(), "a".into()], vec![], vec![]).is_err());
}

#[test]
fn loss_terms_and_gradient() {
    let cache = score_cache(7, 50, &[1.0, 0.5, 2.0], 10, 10.0, SplitTag::Validation).unwrap();
    let ones = WeightMatrix::equal(3, 10);
    let with = pruning_loss(&cache, &ones, 0.001).unwrap();
    let without = pruning_loss(&cache, &ones, 0.0).unwrap();
    assert!((with - without - 0.0005 * 3.0 * 10.0).abs() < 1e-12);
    let zero = WeightMatrix::filled(3, 10, 0.0);
    assert!((pruning_loss(&cache, &zero, 0.001).unwrap() - 10f64.ln()).abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = WeightMatrix::from_values(3, 10, (0..30).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
    let (_, g) = pruning_loss_and_gradient(&cache, &w, 0.001).unwrap();
    let h = 1e-5;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..30 {
        let mut up = w.values().to_vec();
        let mut dn = w.values().to_vec();
        up[i] += h;
        dn[i] -= h;
        let fd = (pruning_loss(&cache, &WeightMatrix::from_values(3, 10, up).unwrap(), 0.001).unwrap()
            - pruning_loss(&cache, &WeightMatrix::from_values(3, 10, dn).unwrap(), 0.001).unwrap())
            / (2.0 * h);
        num += (fd - g.values()[i]).powi(2);
        den += g.values()[i].powi(2);
    }
    assert!((num / den).sqrt() <= 1e-8, "{}", (num / den).sqrt());
}

#[test]
fn optimizer_snapshot_rules() {
    let cache = score_cache(11, 200, &[1.5, 0.2, 0.8, 1.0], 10, 10.0, SplitTag::Validation).unwrap();
    let init = accuracy(&cache, &WeightMatrix::uniform(4, 10)).unwrap();
    let none = optimize_weights(&cache, &quick(0)).unwrap();
    assert_eq!(none.best_weights, WeightMatrix::uniform(4, 10));
    assert_eq!(none.final_weights, WeightMatrix::uniform(4, 10));
    assert_eq!(none.best_accuracy, init);
    let some = optimize_weights(&cache, &quick(100)).unwrap();
    assert!(some.best_accuracy >= init);
}

#[test]
fn optimizer_prefers_the_correct_network() {
    // network 0 always right, network 1 always votes against the truth
    let n = 100;
    let labels: Vec<u8> = (0..n).map(|s| (s % 10) as u8).collect();
    let mut scores = Vec::new();
    for &l in &labels {
        for c in 0..10u8 {
            scores.push(if c == l { 5.0 } else { -0.5 });
        }
        for c in 0..10u8 {
            scores.push(if c == (l + 1) % 10 { 5.0 } else if c == l { -5.0 } else { 0.0 });
        }
    }
    let cache = ScoreCache::new(SplitTag::Validation, 10, vec!["good".into(), "bad".into()], labels, scores)
        .unwrap();
    let out = optimize_weights(&cache, &quick(200)).unwrap();
    assert!(out.final_weights.l1(0) > out.final_weights.l1(1));
    assert!(out.best_weights.l1(0) >= out.best_weights.l1(1));
    assert_eq!(out.best_accuracy, 1.0);
}

#[test]
fn ranking_properties() {
    let mut v: Vec<f64> = (0..40).map(|i| ((i * 7 % 11) as f64 - 5.0) / 10.0).collect();
    v[20..30].iter_mut().for_each(|x| *x = 0.0);
    let w = WeightMatrix::from_values(4, 10, v.clone()).unwrap();
    let r = rank_networks(&w);
    assert_eq!(*r.last().unwrap(), 2);
    // permute rows: new row j holds old row perm[j]
    let perm = [3, 0, 2, 1];
    let pv: Vec<f64> = perm.iter().flat_map(|&k| v[k * 10..(k + 1) * 10].to_vec()).collect();
    let pr = rank_networks(&WeightMatrix::from_values(4, 10, pv).unwrap());
    let mapped: Vec<usize> = pr.iter().map(|&j| perm[j]).collect();
    assert_eq!(mapped, r);
}

fn cfg(interval: Interval, ratio: usize, scheme: RetainScheme) -> PruningConfig {
    PruningConfig {
        interval,
        ratio,
        scheme,
        n_max: 4,
        seed: 5,
        optimizer: quick(20),
        ..PruningConfig::default()
    }
}

#[test]
fn pruning_trace_invariants() {
    let skill: Vec<f64> = (0..8).map(|k| 0.3 + 0.2 * k as f64).collect();
    let cache = score_cache(1, 100, &skill, 10, 10.0, SplitTag::Validation).unwrap();
    let c = cfg(Interval::Every(2), 3, RetainScheme::Stepwise);
    let t = run_pruning(&cache, &c).unwrap();
    assert_eq!(t, run_pruning(&cache, &c).unwrap());
    assert_eq!(t.records.last().unwrap().size, 1);
    for pair in t.records.windows(2) {
        assert!(pair[1].size < pair[0].size);
        assert!(pair[1].members.iter().all(|m| pair[0].members.contains(m)));
        assert!(pair[0].elimination.is_some());
    }
    assert!(t.records.iter().any(|r| r.elimination == Some(EliminationKind::Random)));
    assert!(t.records.iter().all(|r| r.validation_accuracy >= r.equal_weights_accuracy - 1e-12
        || r.best_step > 0));

    let never = run_pruning(&cache, &cfg(Interval::Never, 3, RetainScheme::Constant)).unwrap();
    assert!(never
        .records
        .iter()
        .filter_map(|r| r.elimination)
        .all(|k| k == EliminationKind::Ranked));

    let test_cache = score_cache(1, 10, &skill, 10, 10.0, SplitTag::Test).unwrap();
    assert!(run_pruning(&test_cache, &c).is_err());
}

#[test]
fn selection_rules() {
    let skill: Vec<f64> = (0..6).map(|k| 0.5 + 0.3 * k as f64).collect();
    let cache = score_cache(8, 100, &skill, 10, 10.0, SplitTag::Validation).unwrap();
    let t = run_pruning(&cache, &cfg(Interval::Never, 1, RetainScheme::Constant)).unwrap();
    let all = select_ensemble(&t, 100).unwrap();
    let best = t.records.iter().map(|r| r.validation_accuracy).fold(0.0, f64::max);
    assert_eq!(all.validation_accuracy, best);
    assert_eq!(select_ensemble(&t, 1).unwrap().size, 1);
    for n in 1..=6 {
        assert!(select_ensemble(&t, n).unwrap().size <= n);
    }
    assert!(select_ensemble(&t, 0).is_err());
}

#[test]
fn prediction_rules() {
    let cache = score_cache(2, 30, &[1.0, 2.0], 10, 10.0, SplitTag::Validation).unwrap();
    let single = cache.select(&[1]).unwrap();
    for s in 0..30 {
        let row = single.sample(s);
        let own = (0..10).fold(0, |b, c| if row[c] > row[b] { c } else { b });
        assert_eq!(ensemble_predict(row, &WeightMatrix::equal(1, 10)), own);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = WeightMatrix::from_values(2, 10, (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    for s in 0..30 {
        let row = cache.sample(s);
        assert_eq!(ensemble_predict(row, &w), ensemble_predict(row, &w.scaled(3.7)));
        // brute force over every class
        let totals: Vec<f64> = (0..10)
            .map(|c| (0..2).map(|k| w.get(k, c) * f64::from(row[k * 10 + c])).sum())
            .collect();
        let best = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let expect = totals.iter().position(|v| *v == best).unwrap();
        assert_eq!(ensemble_predict(row, &w), expect);
    }
    // exact ties go to the lowest class
    let flat = vec![1.0f32; 10];
    assert_eq!(ensemble_predict(&flat, &WeightMatrix::equal(1, 10)), 0);
}

#[test]
fn tpr_table_matches_hand_count() {
    let labels = [0, 0, 0, 1, 1, 2, 2, 2, 2, 3];
    let preds = [0, 1, 0, 1, 1, 2, 0, 2, 3, 3];
    let m = report_metrics(&preds, &labels, 5, 5).unwrap();
    assert!((m.accuracy - 70.0).abs() < 1e-12);
    assert!((m.accuracy_per_network - 14.0).abs() < 1e-12);
    let tpr: Vec<Option<f64>> = vec![Some(200.0 / 3.0), Some(100.0), Some(50.0), Some(100.0), None];
    for (a, b) in m.per_class_tpr.iter().zip(&tpr) {
        match (a, b) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
            (None, None) => {}
            _ => panic!("{a:?} vs {b:?}"),
        }
    }
}
