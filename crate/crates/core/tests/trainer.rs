use d2nn::data::synthetic::{write_cifar_dir, SyntheticConfig};
use d2nn::data::{load_cifar10_with, CifarLayout, DataSplits, SplitTag};
use d2nn::format::sha256_hex;
use d2nn::frontend::{
    sample_pool_specs, EncodingSpec, FourierFilterSpec, FrontEndSpec, ObjectFilterSpec, PhaseRange,
    PoolCounts, SamplerRanges,
};
use d2nn::network::{load_checkpoint, Architecture};
use d2nn::trainer::{
    adam_step, lr_schedule, member_seed, train_network, train_pool, AdamState, TrainHyperparams,
};

fn small_splits() -> (tempfile::TempDir, DataSplits) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SyntheticConfig {
        records_per_file: 40,
        ..SyntheticConfig::fixture()
    };
    write_cifar_dir(dir.path(), &cfg).unwrap();
    let layout = CifarLayout {
        records_per_file: Some(40),
        validation_size: 40,
    };
    let s = load_cifar10_with(dir.path(), &layout).unwrap();
    (dir, s.truncated(64, 32, 8))
}

fn hp(epochs: usize) -> TrainHyperparams {
    TrainHyperparams {
        epochs,
        lr0: 0.05,
        seed: 17,
        ..TrainHyperparams::default()
    }
}

fn circle_spec() -> FrontEndSpec {
    FrontEndSpec::object(
        EncodingSpec::Phase {
            range: PhaseRange::TwoPi,
        },
        ObjectFilterSpec::Circle {
            cx: 0.0,
            cy: 0.0,
            radius: 7.0,
        },
    )
}

/// Independent scalar Adam written from the textbook recursion.
fn reference_adam(grad: impl Fn(f64, f64) -> (f64, f64), start: (f64, f64), lr: f64, steps: usize) -> Vec<(f64, f64)> {
    let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
    let (mut x, mut y) = start;
    let (mut mx, mut my, mut vx, mut vy) = (0.0, 0.0, 0.0, 0.0);
    let mut out = Vec::new();
    for t in 1..=steps {
        let (gx, gy) = grad(x, y);
        mx = b1 * mx + (1.0 - b1) * gx;
        my = b1 * my + (1.0 - b1) * gy;
        vx = b2 * vx + (1.0 - b2) * gx * gx;
        vy = b2 * vy + (1.0 - b2) * gy * gy;
        let bc1 = 1.0 - b1.powi(t as i32);
        let bc2 = 1.0 - b2.powi(t as i32);
        x -= lr * (mx / bc1) / ((vx / bc2).sqrt() + eps);
        y -= lr * (my / bc1) / ((vy / bc2).sqrt() + eps);
        out.push((x, y));
    }
    out
}

#[test]
fn adam_matches_scalar_reference_on_quadratic() {
    // f = 3x² + xy + 0.5y² − 2x
    let grad = |x: f64, y: f64| (6.0 * x + y - 2.0, x + y);
    let reference = reference_adam(grad, (1.5, -0.7), 0.1, 10);
    let mut p = vec![1.5, -0.7];
    let mut s = AdamState::new(2);
    for (x, y) in reference {
        let g = grad(p[0], p[1]);
        adam_step(&mut p, &[g.0, g.1], &mut s, 0.1).unwrap();
        assert!((p[0] - x).abs() <= 1e-12 && (p[1] - y).abs() <= 1e-12);
    }
}

#[test]
fn schedule_hits_decay_points() {
    assert_eq!(
        [lr_schedule(0), lr_schedule(8), lr_schedule(16)],
        [0.001, 0.0007, 0.00049]
    );
}

#[test]
fn training_is_deterministic_and_keeps_best_epoch() {
    let (_d, splits) = small_splits();
    let arch = Architecture {
        layers: 3,
        ..Architecture::desk()
    };
    let a = train_network(&circle_spec(), &arch, &splits, &hp(3), None).unwrap();
    let b = train_network(&circle_spec(), &arch, &splits, &hp(3), None).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.log.len(), 3);
    assert!(a.log.iter().zip(&b.log).all(|(x, y)| x.same_result(y)));
    let last = a.log.last().unwrap().validation_accuracy;
    assert!(a.best_validation_accuracy >= last);
    let best = a.log.iter().map(|r| r.validation_accuracy).fold(0.0, f64::max);
    assert_eq!(a.best_validation_accuracy, best);
    let first_best = a.log.iter().position(|r| r.validation_accuracy == best).unwrap();
    assert_eq!(a.best_epoch, first_best);
    assert!(a.log.last().unwrap().mean_loss < a.log[0].mean_loss);
    // training never reads the test split
    assert!(!splits.audit().touched(SplitTag::Test));
}

#[test]
fn empty_split_is_an_error() {
    let (_d, splits) = small_splits();
    let empty = splits.truncated(0, 8, 8);
    assert!(train_network(&circle_spec(), &Architecture::desk(), &empty, &hp(1), None).is_err());
}

#[test]
fn pool_is_independent_of_workers_and_resumes() {
    let (_d, splits) = small_splits();
    let arch = Architecture {
        layers: 2,
        ..Architecture::desk()
    };
    let geo = arch.geometry().unwrap();
    let mut specs = sample_pool_specs(
        3,
        &PoolCounts {
            amplitude_object: 1,
            phase_object: 1,
            ..Default::default()
        },
        &geo,
        &SamplerRanges::default(),
    )
    .unwrap();
    specs.push(FrontEndSpec::fourier(
        EncodingSpec::Amplitude,
        FourierFilterSpec::equal_rings(52.0, vec![true, true, false, false, false, false, false, false]),
        1.0,
    ));
    let hp = hp(1);

    let one = tempfile::tempdir().unwrap();
    let four = tempfile::tempdir().unwrap();
    let a = train_pool(&specs, &arch, &splits, &hp, 1, Some(one.path())).unwrap();
    let b = train_pool(&specs, &arch, &splits, &hp, 4, Some(four.path())).unwrap();
    assert_eq!(a.members.len(), 3);
    for (x, y) in a.members.iter().zip(&b.members) {
        let sx = x.result.as_ref().unwrap();
        assert_eq!(sx, y.result.as_ref().unwrap());
        assert_eq!(sx.seed, member_seed(17, x.index));
        let bytes = std::fs::read(one.path().join(format!("{}.d2nn", x.name))).unwrap();
        assert_eq!(sha256_hex(&bytes), sx.checkpoint_sha256);
        load_checkpoint(one.path().join(format!("{}.d2nn", x.name))).unwrap();
        let log = std::fs::read_to_string(one.path().join(format!("{}.jsonl", x.name))).unwrap();
        assert_eq!(log.lines().count(), 1);
    }

    // member 1 retrained alone reproduces its pooled checkpoint
    let alone = TrainHyperparams {
        seed: member_seed(17, 1),
        ..hp.clone()
    };
    let solo = train_network(&specs[1], &arch, &splits, &alone, None).unwrap();
    let pooled = load_checkpoint(one.path().join("member_0001.d2nn")).unwrap();
    assert_eq!(solo.model, pooled);

    let again = train_pool(&specs, &arch, &splits, &hp, 2, Some(one.path())).unwrap();
    assert!(again.members.iter().all(|m| m.resumed));

    let empty = train_pool(&[], &arch, &splits, &hp, 2, None).unwrap();
    assert!(empty.members.is_empty());
}

#[test]
fn failing_member_is_recorded() {
    let (_d, splits) = small_splits();
    let bad = FrontEndSpec::fourier(EncodingSpec::Amplitude, FourierFilterSpec::Trainable, 3.0);
    let out = train_pool(
        &[circle_spec(), bad],
        &Architecture {
            layers: 1,
            ..Architecture::desk()
        },
        &splits,
        &hp(1),
        2,
        None,
    )
    .unwrap();
    assert!(out.members[0].result.is_ok());
    assert!(out.members[0].model.is_some());
    assert_eq!(out.failures().count(), 1);
}
