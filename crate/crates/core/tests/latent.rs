use proptest::prelude::*;
use proxydyn::latent::{
    apply_zero_rule, build_edit_video, build_pseudo_video, composite, downsample_mask, export_bundle,
    latent_frames, load_bundle, schedule_conditioning, BundleInputs, LatentEncoder, LatentError,
    LatentMask, LatentTensor, Prompts, Provenance, ReferenceEncoder, ScheduleOutcome,
};
use proxydyn::motion::DisocclusionMask;
use proxydyn::raster::{Grid, Image};
use proxydyn::tensor::Tensor4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(dims: [usize; 4], seed: u64) -> Tensor4 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dims.iter().product();
    Tensor4::from_vec(dims, (0..n).map(|_| rng.random_range(-4.0f32..4.0)).collect()).unwrap()
}

fn random_mask(dims: [usize; 4], seed: u64) -> LatentMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tensor4::zeros(dims);
    let per_frame = dims[1] * dims[2];
    for (i, v) in t.as_mut_slice().iter_mut().enumerate() {
        if i >= per_frame && rng.random_bool(0.4) {
            *v = 1.0;
        }
    }
    LatentMask::from_tensor(t).unwrap()
}

/// Naive max-pool: any set pixel-frame in the block sets the cell.
fn naive_downsample(mask: &DisocclusionMask) -> Vec<f32> {
    let (h, w) = mask.dims();
    let lf = 1 + (mask.frame_count() - 1) / 4;
    let mut out = vec![0.0; lf * (h / 8) * (w / 8)];
    for k in 0..lf {
        let frames: Vec<usize> = if k == 0 { vec![0] } else { (4 * k - 3..=4 * k).collect() };
        for lr in 0..h / 8 {
            for lc in 0..w / 8 {
                let mut any = false;
                for &t in &frames {
                    for r in 8 * lr..8 * lr + 8 {
                        for c in 8 * lc..8 * lc + 8 {
                            any |= *mask.frames[t].get(r, c);
                        }
                    }
                }
                out[(k * (h / 8) + lr) * (w / 8) + lc] = if any { 1.0 } else { 0.0 };
            }
        }
    }
    out
}

fn random_disocclusion(frames: usize, h: usize, w: usize, seed: u64, density: f64) -> DisocclusionMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DisocclusionMask {
        frames: (0..frames)
            .map(|t| Grid::from_fn(h, w, |_, _| t > 0 && rng.random_bool(density)))
            .collect(),
    }
}

#[test]
fn single_pixel_lands_in_one_cell() {
    let mut m = random_disocclusion(9, 16, 24, 0, 0.0);
    m.frames[3].set(8, 8, true);
    let lm = downsample_mask(&m).unwrap();
    assert_eq!(lm.dims(), [3, 2, 3, 1]);
    let set: Vec<usize> = lm.data().as_slice().iter().enumerate().filter(|(_, &v)| v == 1.0).map(|(i, _)| i).collect();
    assert_eq!(set, vec![6 + 3 + 1]);
}

#[test]
fn rejects_indivisible_dims() {
    assert!(matches!(latent_frames(48), Err(LatentError::Indivisible { .. })));
    assert!(downsample_mask(&random_disocclusion(9, 12, 16, 0, 0.0)).is_err());
    assert!(downsample_mask(&random_disocclusion(8, 16, 16, 0, 0.0)).is_err());
    assert!(ReferenceEncoder.encode(&Tensor4::zeros([9, 16, 20, 3])).is_err());
}

#[test]
fn composite_selects_per_cell() {
    let dims = [3, 2, 3, 16];
    let s = LatentTensor::new(random_tensor(dims, 1), Provenance::Source).unwrap();
    let e = LatentTensor::new(random_tensor(dims, 2), Provenance::Edit).unwrap();
    let m = random_mask([3, 2, 3, 1], 3);
    let out = composite(&s, &e, &m).unwrap();
    for f in 0..3 {
        for r in 0..2 {
            for c in 0..3 {
                let src = if m.data().at(f, r, c, 0) == 1.0 { &e } else { &s };
                for ch in 0..16 {
                    assert_eq!(out.data().at(f, r, c, ch).to_bits(), src.data().at(f, r, c, ch).to_bits());
                }
            }
        }
    }
}

#[test]
fn composite_shape_mismatch() {
    let s = LatentTensor::new(random_tensor([3, 2, 3, 16], 1), Provenance::Source).unwrap();
    let e = LatentTensor::new(random_tensor([3, 2, 2, 16], 2), Provenance::Edit).unwrap();
    assert!(composite(&s, &e, &random_mask([3, 2, 3, 1], 3)).is_err());
    assert!(composite(&s, &s, &random_mask([2, 2, 3, 1], 3)).is_err());
}

#[test]
fn mask_rejects_frame_zero_and_non_binary() {
    let mut t = Tensor4::zeros([2, 1, 1, 1]);
    t.as_mut_slice()[0] = 1.0;
    assert!(LatentMask::from_tensor(t).is_err());
    let mut t = Tensor4::zeros([2, 1, 1, 1]);
    t.as_mut_slice()[1] = 0.5;
    assert!(LatentMask::from_tensor(t).is_err());
}

#[test]
fn schedule_boundaries_for_ablation_values() {
    for m in [25, 30, 35, 40, 50] {
        let outcomes: Vec<_> = (1..=50).map(|n| schedule_conditioning(n, 50, m).unwrap().outcome).collect();
        assert_eq!(outcomes.iter().filter(|&&o| o == ScheduleOutcome::UseComposite).count(), m);
        if m < 50 {
            assert_eq!(outcomes[50 - m - 1], ScheduleOutcome::UseSource);
        }
        assert_eq!(outcomes[50 - m], ScheduleOutcome::UseComposite);
    }
    assert!(schedule_conditioning(0, 50, 35).is_err());
    assert!(schedule_conditioning(51, 50, 35).is_err());
    assert!(schedule_conditioning(1, 50, 51).is_err());
}

#[test]
fn pseudo_and_edit_videos() {
    let img: Image = Grid::from_fn(8, 8, |r, c| [r as u8, c as u8, 7]);
    let v = build_pseudo_video(&img, 4);
    assert_eq!(v.dims(), [5, 8, 8, 3]);
    assert_eq!(v.at(0, 2, 3, 1), 3.0);
    assert!(v.as_slice()[8 * 8 * 3..].iter().all(|&x| x == 0.0));
    let e = build_edit_video(&img, 4, (8, 8)).unwrap();
    for t in 0..5 {
        assert_eq!(e.frame(t), e.frame(0));
    }
    assert!(build_edit_video(&img, 4, (8, 16)).is_err());
}

#[test]
fn encoder_is_linear() {
    let a = random_tensor([5, 16, 16, 3], 7);
    let b = random_tensor([5, 16, 16, 3], 8);
    let sum = Tensor4::from_vec(a.dims(), a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x + y).collect()).unwrap();
    let (ea, eb, es) = (
        ReferenceEncoder.encode(&a).unwrap(),
        ReferenceEncoder.encode(&b).unwrap(),
        ReferenceEncoder.encode(&sum).unwrap(),
    );
    for i in 0..es.as_slice().len() {
        assert!((es.as_slice()[i] - ea.as_slice()[i] - eb.as_slice()[i]).abs() < 1e-5);
    }
}

fn bundle_inputs_fixture() -> (Image, Vec<Image>, DisocclusionMask, Image) {
    let img: Image = Grid::from_fn(16, 24, |r, c| [(r * 9) as u8, (c * 5) as u8, 40]);
    let tracking: Vec<Image> = (0..9).map(|t| img.map(|p| [p[0], p[1], (t * 20) as u8])).collect();
    let mask = random_disocclusion(9, 16, 24, 5, 0.05);
    let edited = img.map(|p| [255 - p[0], p[1], p[2]]);
    (img, tracking, mask, edited)
}

#[test]
fn bundle_round_trip_and_tamper_detection() {
    let (img, tracking, mask, edited) = bundle_inputs_fixture();
    let dir = tempfile::tempdir().unwrap();
    let inputs = BundleInputs {
        image: &img,
        tracking: &tracking,
        mask: &mask,
        edited: &edited,
        prompts: Prompts::new("a cabinet", "with a red shelf"),
        steps: 50,
        replace: 35,
        encoder: &ReferenceEncoder,
        created_at: None,
    };
    let manifest = export_bundle(&inputs, dir.path()).unwrap();
    assert_eq!(manifest.prompts.combined, "a cabinet with a red shelf");
    assert_eq!(manifest.schedule.len(), 50);
    let loaded = load_bundle(dir.path()).unwrap();
    assert_eq!(loaded.manifest, manifest);
    assert_eq!(loaded.input_image, img);
    assert_eq!(loaded.edited_frame, edited);
    assert_eq!(loaded.tensors["composite_latent"].dims(), [3, 2, 3, 16]);
    assert_eq!(loaded.tensors["latent_mask"].dims(), [3, 2, 3, 1]);

    // Zero rule held on disk: frames >= 1 are zero wherever the mask is 0.
    let lm = &loaded.tensors["latent_mask"];
    let comp = &loaded.tensors["composite_latent"];
    let edit = &loaded.tensors["edit_latent"];
    for f in 1..3 {
        for r in 0..2 {
            for c in 0..3 {
                for ch in 0..16 {
                    let want = if lm.at(f, r, c, 0) == 1.0 { edit.at(f, r, c, ch) } else { 0.0 };
                    assert_eq!(comp.at(f, r, c, ch).to_bits(), want.to_bits());
                }
            }
        }
    }

    let p = dir.path().join("mask.pdgt");
    let mut bytes = std::fs::read(&p).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&p, bytes).unwrap();
    assert!(matches!(load_bundle(dir.path()), Err(LatentError::Checksum { .. })));
}

#[test]
fn bundle_rejects_mismatched_edit() {
    let (img, tracking, mask, _) = bundle_inputs_fixture();
    let small: Image = Grid::filled(8, 8, [0; 3]);
    let dir = tempfile::tempdir().unwrap();
    let inputs = BundleInputs {
        image: &img,
        tracking: &tracking,
        mask: &mask,
        edited: &small,
        prompts: Prompts::new("a", "b"),
        steps: 50,
        replace: 35,
        encoder: &ReferenceEncoder,
        created_at: None,
    };
    assert!(export_bundle(&inputs, dir.path()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn downsample_matches_naive_max_pool(seed in any::<u64>(), groups in 1usize..4, lh in 1usize..4, lw in 1usize..4, density in 0.0f64..0.05) {
        let m = random_disocclusion(1 + 4 * groups, 8 * lh, 8 * lw, seed, density);
        let lm = downsample_mask(&m).unwrap();
        let want = naive_downsample(&m);
        prop_assert_eq!(lm.data().as_slice(), want.as_slice());
    }

    #[test]
    fn zero_rule_is_idempotent_and_keeps_frame_zero(seed in any::<u64>()) {
        let dims = [3, 2, 2, 16];
        let f = LatentTensor::new(random_tensor(dims, seed), Provenance::Composite).unwrap();
        let m = random_mask([3, 2, 2, 1], seed ^ 1);
        let once = apply_zero_rule(&f, &m).unwrap();
        let twice = apply_zero_rule(&once, &m).unwrap();
        prop_assert_eq!(once.data(), twice.data());
        prop_assert_eq!(once.data().frame(0), f.data().frame(0));
    }

    #[test]
    fn composite_with_empty_mask_is_source(seed in any::<u64>()) {
        let dims = [3, 2, 2, 16];
        let s = LatentTensor::new(random_tensor(dims, seed), Provenance::Source).unwrap();
        let e = LatentTensor::new(random_tensor(dims, seed + 1), Provenance::Edit).unwrap();
        let m = LatentMask::from_tensor(Tensor4::zeros([3, 2, 2, 1])).unwrap();
        let out = composite(&s, &e, &m).unwrap();
        prop_assert!(out.data().as_slice().iter().zip(s.data().as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn schedule_count_equals_replace(steps in 1usize..80, frac in 0.0f64..=1.0) {
        let replace = (steps as f64 * frac).floor() as usize;
        let uses = (1..=steps)
            .filter(|&n| schedule_conditioning(n, steps, replace).unwrap().outcome == ScheduleOutcome::UseComposite)
            .count();
        prop_assert_eq!(uses, replace);
    }
}
