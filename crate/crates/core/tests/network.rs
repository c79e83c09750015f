use d2nn::data::Image;
use d2nn::frontend::{
    EncodingSpec, FourierFilterSpec, FrontEndSpec, GaussianSpot, ObjectFilterSpec, PhaseRange,
};
use d2nn::network::{
    d2nn_loss, differential_scores, load_checkpoint, save_checkpoint, Architecture, Bench,
    D2nnModel, Denominator, Sample,
};
use d2nn::optics::GridSpec;
use d2nn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::new(32, (0..1024).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

fn gaussian_front() -> FrontEndSpec {
    FrontEndSpec::object(
        EncodingSpec::Phase {
            range: PhaseRange::TwoPi,
        },
        ObjectFilterSpec::Gaussian {
            spot: GaussianSpot {
                cx: 1.0,
                cy: -2.0,
                sigma_x: 6.0,
                sigma_y: 9.0,
            },
        },
    )
}

fn three_layer_desk() -> Architecture {
    Architecture {
        layers: 3,
        ..Architecture::desk()
    }
}

fn loss_at(bench: &Bench, model: &D2nnModel, params: &[f64], img: &Image, label: usize) -> f64 {
    let mut m = model.clone();
    m.set_parameters(params).unwrap();
    bench.backward(&m, img, label, Denominator::Strict).unwrap().0
}

/// Central differences on `coords`; returns (max relative error, vector
/// relative error).
fn fd_check(model: &D2nnModel, img: &Image, label: usize, coords: &[usize], h: f64) -> (f64, f64) {
    let bench = Bench::new(model).unwrap();
    let (_, grad, _) = bench.backward(model, img, label, Denominator::Strict).unwrap();
    let g = grad.flatten();
    let base = model.parameters();
    let scale = coords.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
    let (mut worst, mut num, mut den) = (0.0f64, 0.0, 0.0);
    for &i in coords {
        let mut p = base.clone();
        p[i] = base[i] + h;
        let up = loss_at(&bench, model, &p, img, label);
        p[i] = base[i] - h;
        let down = loss_at(&bench, model, &p, img, label);
        let fd = (up - down) / (2.0 * h);
        let err = (fd - g[i]).abs();
        worst = worst.max(err / fd.abs().max(g[i].abs()).max(1e-3 * scale));
        num += err * err;
        den += fd * fd;
    }
    (worst, (num / den).sqrt())
}

#[test]
fn phase_gradients_match_finite_differences() {
    let model = D2nnModel::random(&three_layer_desk(), gaussian_front(), 11).unwrap();
    let n = model.parameter_count();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coords: Vec<usize> = (0..200).map(|_| rng.gen_range(0..n)).collect();
    let (worst, vector) = fd_check(&model, &random_image(3), 4, &coords, 1e-4);
    assert!(worst <= 1e-4, "worst coordinate relative error {worst:e}");
    assert!(vector <= 1e-6, "vector relative error {vector:e}");
}

#[test]
fn trainable_filter_gradients_match_finite_differences() {
    let spec = FrontEndSpec::fourier(EncodingSpec::Amplitude, FourierFilterSpec::Trainable, 1.0);
    let mut model = D2nnModel::random(&three_layer_desk(), spec, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut p = model.parameters();
    let phases = 3 * 64 * 64;
    for v in &mut p[phases..] {
        *v = rng.gen_range(-2.0..2.0);
    }
    model.set_parameters(&p).unwrap();
    // latent pixels near the optical axis of the 256² relay carry the signal
    let mut coords: Vec<usize> = (0..40)
        .map(|_| {
            let r = rng.gen_range(112..144);
            let c = rng.gen_range(112..144);
            phases + r * 256 + c
        })
        .collect();
    coords.extend((0..20).map(|_| rng.gen_range(0..phases)));
    let (worst, vector) = fd_check(&model, &random_image(9), 7, &coords, 1e-4);
    assert!(worst <= 1e-4, "worst coordinate relative error {worst:e}");
    assert!(vector <= 1e-6, "vector relative error {vector:e}");
}

#[test]
fn directional_derivative_matches() {
    let model = D2nnModel::random(&three_layer_desk(), gaussian_front(), 21).unwrap();
    let bench = Bench::new(&model).unwrap();
    let img = random_image(1);
    let (_, grad, _) = bench.backward(&model, &img, 2, Denominator::Strict).unwrap();
    let g = grad.flatten();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let base = model.parameters();
    for _ in 0..3 {
        let dir: Vec<f64> = (0..base.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = 1e-5;
        let shifted = |s: f64| -> Vec<f64> { base.iter().zip(&dir).map(|(b, d)| b + s * d).collect() };
        let fd = (loss_at(&bench, &model, &shifted(h), &img, 2)
            - loss_at(&bench, &model, &shifted(-h), &img, 2))
            / (2.0 * h);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd - an).abs() <= 1e-5 * an.abs(), "{fd} vs {an}");
    }
}

#[test]
fn scores_bounded_and_deterministic() {
    let arch = Architecture::desk();
    for seed in 0..4 {
        let model = D2nnModel::random(&arch, gaussian_front(), seed).unwrap();
        let bench = Bench::new(&model).unwrap();
        let img = random_image(seed + 100);
        let a = bench.forward(&model, &img).unwrap();
        let b = bench.forward(&model, &img).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.signals.len(), 20);
        assert!(a.signals.iter().all(|s| *s >= 0.0));
        assert!(a.scores.iter().all(|z| z.abs() <= 10.0));
    }
}

#[test]
fn swapping_detectors_negates_one_score() {
    let model = D2nnModel::random(&Architecture::desk(), gaussian_front(), 4).unwrap();
    let bench = Bench::new(&model).unwrap();
    let img = random_image(4);
    let z = bench.forward(&model, &img).unwrap().scores;
    let swapped = model.with_swapped_detectors(6);
    let w = bench.forward(&swapped, &img).unwrap().scores;
    for c in 0..10 {
        if c == 6 {
            assert_eq!(w[c], -z[c]);
        } else {
            assert_eq!(w[c], z[c]);
        }
    }
}

#[test]
fn zero_amplitude_image_is_degenerate() {
    let spec = FrontEndSpec::object(
        EncodingSpec::Amplitude,
        ObjectFilterSpec::Circle {
            cx: 0.0,
            cy: 0.0,
            radius: 30.0,
        },
    );
    let model = D2nnModel::random(&Architecture::desk(), spec, 1).unwrap();
    let bench = Bench::new(&model).unwrap();
    let black = Image::filled(32, 0.0).unwrap();
    assert!(matches!(
        bench.forward(&model, &black),
        Err(Error::DegenerateSignal { .. })
    ));
    let (loss, grad, _) = bench.backward(&model, &black, 0, Denominator::Regularized).unwrap();
    assert!((loss - 10f64.ln()).abs() < 1e-12);
    assert!(grad.flatten().iter().all(|g| *g == 0.0));
}

#[test]
fn batch_gradient_is_mean_of_samples() {
    let model = D2nnModel::random(&Architecture::desk(), gaussian_front(), 3).unwrap();
    let bench = Bench::new(&model).unwrap();
    let imgs: Vec<Image> = (0..3).map(random_image).collect();
    let samples: Vec<Sample> = imgs
        .iter()
        .enumerate()
        .map(|(i, image)| Sample { image, label: i })
        .collect();
    let batch = bench.batch_gradient(&model, &samples, Denominator::Strict).unwrap();
    let mut sum = vec![0.0; model.parameter_count()];
    let mut loss = 0.0;
    for s in &samples {
        let (l, g, _) = bench.backward(&model, s.image, s.label, Denominator::Strict).unwrap();
        loss += l;
        for (a, b) in sum.iter_mut().zip(g.flatten()) {
            *a += b;
        }
    }
    assert!((batch.mean_loss - loss / 3.0).abs() < 1e-14);
    for (a, b) in batch.gradient.flatten().iter().zip(&sum) {
        assert!((a - b / 3.0).abs() <= 1e-15 * b.abs().max(1.0));
    }
    // scaling the loss scales the gradient
    let mut doubled = batch.gradient.clone();
    doubled.scale(2.0);
    for (a, b) in doubled.flatten().iter().zip(batch.gradient.flatten()) {
        assert_eq!(*a, 2.0 * b);
    }
}

#[test]
fn checkpoint_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = FrontEndSpec::fourier(
        EncodingSpec::Phase {
            range: PhaseRange::Pi,
        },
        FourierFilterSpec::Trainable,
        1.5,
    );
    let mut model = D2nnModel::random(&Architecture::desk(), spec, 9).unwrap();
    let mut p = model.parameters();
    p.iter_mut().enumerate().for_each(|(i, v)| *v += (i as f64).sin() * 0.1);
    model.set_parameters(&p).unwrap();
    let model = model.quantized();
    let path = dir.path().join("m.d2nn");
    save_checkpoint(&model, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, model);
    let bits = |m: &D2nnModel| m.parameters().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&model));

    let bytes = std::fs::read(&path).unwrap();
    assert!(matches!(
        D2nnModel::from_bytes(&bytes[..bytes.len() - 7]),
        Err(Error::Checksum)
    ));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(D2nnModel::from_bytes(&bad), Err(Error::Format(_))));
}

#[test]
fn paper_architecture_builds() {
    let arch = Architecture::paper();
    arch.validate().unwrap();
    assert_eq!(arch.layout().unwrap().detectors()[0].pixel_count(), 169);
    let model = D2nnModel::random(&arch, gaussian_front(), 0).unwrap();
    assert_eq!(model.layers().len(), 5);
    assert_eq!(model.grid(), &GridSpec::new(128, 0.5).unwrap());
}

#[test]
fn eq1_contract_on_random_signals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let pairs: Vec<(f64, f64)> = (0..10)
            .map(|_| (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0)))
            .collect();
        let z = differential_scores(&pairs, 0.1, Denominator::Strict).unwrap();
        assert!(z.iter().all(|v| v.abs() <= 10.0));
        let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let w = differential_scores(&swapped, 0.1, Denominator::Strict).unwrap();
        assert!(z.iter().zip(&w).all(|(a, b)| *a == -*b));
    }
    assert!((d2nn_loss(&[1.5; 10], 0).unwrap() - 10f64.ln()).abs() <= 1e-12);
}
