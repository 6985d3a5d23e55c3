use mfd_core::edt::{brute_force_edt, squared_edt};
use mfd_core::minkowski::{
    dilation_curve, dilation_curve_with, estimate_fd, loglog, DilationCurve,
};
use mfd_core::synth::{generate, SynthKind, SynthParams, SynthSpec};
use mfd_core::volume::VideoVolume;
use mfd_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// V(q) = sum over voxels of Theta(sqrt q, r_i), recomputed from scratch for
/// every candidate radius present among the r_i.
fn heaviside_curve(vol: &VideoVolume, r_max: f64) -> (Vec<u32>, Vec<u64>) {
    let fg: Vec<(i64, i64, i64)> = vol
        .foreground_indices()
        .map(|i| {
            let (x, y, z) = vol.coords(i);
            (x as i64, y as i64, z as i64)
        })
        .collect();
    let r_i: Vec<f64> = (0..vol.len())
        .map(|i| {
            let (x, y, z) = vol.coords(i);
            let best = fg
                .iter()
                .map(|&(a, b, c)| {
                    (x as i64 - a).pow(2) + (y as i64 - b).pow(2) + (z as i64 - c).pow(2)
                })
                .min()
                .unwrap();
            (best as f64).sqrt()
        })
        .collect();
    let mut radii: Vec<u32> = r_i.iter().map(|r| (r * r).round() as u32).collect();
    radii.sort_unstable();
    radii.dedup();
    let cap = (r_max * r_max).floor() as u32;
    let mut qs = Vec::new();
    let mut vs = Vec::new();
    for q in radii.into_iter().filter(|&q| q <= cap) {
        let r = f64::from(q).sqrt();
        let v = r_i.iter().filter(|&&ri| r >= ri).count() as u64;
        qs.push(q);
        vs.push(v);
        if v == vol.len() as u64 {
            break;
        }
    }
    (qs, vs)
}

#[test]
fn matches_literal_heaviside_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let density = rng.random_range(0.002..0.05);
        let mut vol = VideoVolume::from_fn(12, 12, 12, |_, _, _| rng.random_bool(density)).unwrap();
        if vol.foreground_count() == 0 {
            vol.set(6, 6, 6, true);
        }
        let curve = dilation_curve(&squared_edt(&vol).unwrap(), 6.0).unwrap();
        let (qs, vs) = heaviside_curve(&vol, 6.0);
        assert_eq!(curve.sq_radii(), &qs[..]);
        assert_eq!(curve.volumes(), &vs[..]);
    }
}

#[test]
fn invariants_on_noise_volume() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let vol = VideoVolume::from_fn(30, 20, 16, |_, _, _| rng.random_bool(0.003)).unwrap();
    let field = squared_edt(&vol).unwrap();
    let curve = dilation_curve(&field, 9.0).unwrap();
    assert_eq!(curve.volumes()[0], vol.foreground_count() as u64);
    assert!(curve.volumes().windows(2).all(|w| w[1] > w[0]));
    assert!(*curve.volumes().last().unwrap() <= curve.total_voxels());
    for &q in curve.sq_radii() {
        let mut ok = false;
        for a in 0..10u32 {
            for b in 0..10u32 {
                for c in 0..10u32 {
                    ok |= a * a + b * b + c * c == q;
                }
            }
        }
        assert!(ok, "{q} is not a sum of three squares");
    }
    assert_eq!(
        curve,
        dilation_curve_with(&field, 9.0, Execution::Sequential).unwrap()
    );
    assert_eq!(
        curve,
        dilation_curve_with(&field, 9.0, Execution::Parallel).unwrap()
    );
    assert_eq!(field, brute_force_edt(&vol).unwrap());
}

#[test]
fn saturation_truncates_before_r_max() {
    let mut vol = VideoVolume::empty(5, 5, 5).unwrap();
    vol.set(2, 2, 2, true);
    let curve = dilation_curve(&squared_edt(&vol).unwrap(), 50.0).unwrap();
    assert!(curve.is_saturated());
    assert_eq!(*curve.sq_radii().last().unwrap(), 12);
    assert_eq!(*curve.volumes().last().unwrap(), 125);
}

fn canonical(kind: SynthKind, params: SynthParams) -> DilationCurve {
    let vol = generate(&SynthSpec::new(kind, (64, 64, 64)).with_params(params)).unwrap();
    dilation_curve(&squared_edt(&vol).unwrap(), 16.0).unwrap()
}

#[test]
fn canonical_dimensions() {
    let p = SynthParams::default();
    let dim = |c: &DilationCurve| estimate_fd(&loglog(c).unwrap(), 4.0, 16.0).unwrap();
    assert!(dim(&canonical(SynthKind::Point, p)).dimension.abs() <= 0.15);
    assert!((dim(&canonical(SynthKind::Line, p)).dimension - 1.0).abs() <= 0.15);
    assert!((dim(&canonical(SynthKind::Plane, p)).dimension - 2.0).abs() <= 0.15);
    let slab = SynthParams {
        block: Some([[0, 0, 0], [64, 64, 48]]),
        ..p
    };
    let est = dim(&canonical(SynthKind::SolidBlock, slab));
    assert!(est.slope <= 0.2 && est.dimension >= 2.8, "{est:?}");
}

#[test]
fn translation_invariance() {
    let shape = |ox: usize, oy: usize, oz: usize| {
        VideoVolume::from_fn(40, 40, 40, |x, y, z| {
            let (x, y, z) = (
                x as i64 - ox as i64,
                y as i64 - oy as i64,
                z as i64 - oz as i64,
            );
            (0..6).contains(&x)
                && (0..3).contains(&y)
                && (0..4).contains(&z)
                && (x + y + z) % 3 != 0
        })
        .unwrap()
    };
    let a =
        loglog(&dilation_curve(&squared_edt(&shape(10, 10, 10)).unwrap(), 8.0).unwrap()).unwrap();
    let b =
        loglog(&dilation_curve(&squared_edt(&shape(22, 15, 18)).unwrap(), 8.0).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        estimate_fd(&a, 2.0, 8.0).unwrap(),
        estimate_fd(&b, 2.0, 8.0).unwrap()
    );
}
