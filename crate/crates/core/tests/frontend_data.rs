use d2nn::data::synthetic::{write_cifar_dir, SyntheticConfig};
use d2nn::data::{flip_left_right, load_cifar10_with, CifarLayout, Image, SplitTag};
use d2nn::frontend::{sample_pool_specs, Category, FrontEnd, Geometry, PoolCounts, SamplerRanges};
use d2nn::optics::GridSpec;

fn desk_geometry() -> Geometry {
    Geometry::standard(GridSpec::new(64, 0.5).unwrap(), 32).unwrap()
}

#[test]
fn proportional_counts_sum_to_total_and_follow_the_mix() {
    for total in [1, 4, 16, 100, 1252] {
        assert_eq!(PoolCounts::proportional(total).total(), total);
    }
    assert_eq!(PoolCounts::proportional(PoolCounts::PAPER.total()), PoolCounts::PAPER);
    let c = PoolCounts::proportional(16);
    assert!(c.get(Category::PhaseObject) > c.get(Category::AmplitudeFourier));
}

#[test]
fn sampled_pool_is_deterministic_distinct_and_counted() {
    let g = desk_geometry();
    let counts = PoolCounts::proportional(16);
    let ranges = SamplerRanges::default();
    let a = sample_pool_specs(11, &counts, &g, &ranges).unwrap();
    let b = sample_pool_specs(11, &counts, &g, &ranges).unwrap();
    let c = sample_pool_specs(12, &counts, &g, &ranges).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 16);
    for (i, x) in a.iter().enumerate() {
        assert!(a[i + 1..].iter().all(|y| y != x));
    }
    for cat in Category::ALL {
        let n = a.iter().filter(|s| Category::of(s) == cat).count();
        assert_eq!(n, counts.get(cat), "{cat:?}");
    }
}

#[test]
fn every_sampled_front_end_builds_and_gives_finite_fields() {
    let g = desk_geometry();
    let specs =
        sample_pool_specs(3, &PoolCounts::proportional(16), &g, &SamplerRanges::default()).unwrap();
    let image = Image::new(32, (0..1024).map(|i| (i % 7) as f64 / 6.0).collect()).unwrap();
    for spec in specs {
        let fe = FrontEnd::new(spec, g).unwrap();
        let latent = fe.latent_len().map(|n| vec![0.0; n]);
        let field = fe.apply(&image, latent.as_deref()).unwrap();
        assert_eq!(field.grid(), g.grid());
        assert!(field.values().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        assert!(field.power() > 0.0);
    }
}

#[test]
fn flip_is_an_involution_that_mirrors_columns() {
    let image = Image::new(32, (0..1024).map(|i| i as f64 / 1023.0).collect()).unwrap();
    let flipped = flip_left_right(&image);
    assert_eq!(flipped.get(3, 0), image.get(3, 31));
    assert_eq!(flip_left_right(&flipped), image);
}

#[test]
fn synthetic_dataset_splits_and_audits() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SyntheticConfig::fixture();
    cfg.records_per_file = 30;
    write_cifar_dir(dir.path(), &cfg).unwrap();
    let layout = CifarLayout {
        records_per_file: Some(30),
        validation_size: 20,
    };
    let s = load_cifar10_with(dir.path(), &layout).unwrap();
    assert_eq!(s.sizes(), (130, 20, 30));
    assert!(s.audit().entries().is_empty());
    for r in s.train("train").iter().chain(s.validation("prune")) {
        assert!(r.label < 10);
        assert!(r.image.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
        assert_eq!((r.image.pixels()[0] * 255.0).round(), r.image.pixels()[0] * 255.0);
    }
    assert!(!s.audit().touched(SplitTag::Test));
    s.test("report");
    assert_eq!(s.audit().readers(SplitTag::Test), vec!["report".to_string()]);

    let strict = CifarLayout {
        records_per_file: Some(31),
        validation_size: 20,
    };
    assert!(load_cifar10_with(dir.path(), &strict).is_err());
}
