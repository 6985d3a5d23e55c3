use mfd_core::edt::{
    brute_force_edt, max_sqdist_bound, squared_edt, squared_edt_axes, squared_edt_with, Axis,
};
use mfd_core::volume::VideoVolume;
use mfd_core::Execution;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_volume(rng: &mut ChaCha8Rng, max_side: usize, density: f64) -> VideoVolume {
    let (w, h, d) = (
        rng.random_range(1..=max_side),
        rng.random_range(1..=max_side),
        rng.random_range(1..=max_side),
    );
    let mut v = VideoVolume::from_fn(w, h, d, |_, _, _| rng.random_bool(density)).unwrap();
    if v.foreground_count() == 0 {
        v.set(0, 0, 0, true);
    }
    v
}

fn arb_volume() -> impl Strategy<Value = VideoVolume> {
    (1usize..9, 1usize..9, 1usize..9)
        .prop_flat_map(|(w, h, d)| {
            (
                Just((w, h, d)),
                proptest::collection::vec(any::<bool>(), w * h * d),
            )
        })
        .prop_map(|((w, h, d), bits)| {
            let mut v = VideoVolume::from_fn(w, h, d, |x, y, z| bits[x + w * (y + h * z)]).unwrap();
            if v.foreground_count() == 0 {
                v.set(w - 1, 0, d / 2, true);
            }
            v
        })
}

proptest! {
    #[test]
    fn matches_brute_force(vol in arb_volume()) {
        prop_assert_eq!(squared_edt(&vol).unwrap(), brute_force_edt(&vol).unwrap());
    }

    #[test]
    fn axis_order_is_irrelevant(vol in arb_volume()) {
        let reference = squared_edt(&vol).unwrap();
        let orders = [
            [Axis::X, Axis::Z, Axis::Y],
            [Axis::Y, Axis::X, Axis::Z],
            [Axis::Y, Axis::Z, Axis::X],
            [Axis::Z, Axis::X, Axis::Y],
            [Axis::Z, Axis::Y, Axis::X],
        ];
        for order in orders {
            prop_assert_eq!(&squared_edt_axes(&vol, order, Execution::Sequential).unwrap(), &reference);
        }
    }
}

#[test]
fn random_dense_and_sparse_volumes() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..50 {
        let density = 0.05 + 0.45 * (i as f64 / 49.0);
        let vol = random_volume(&mut rng, 16, density);
        assert_eq!(
            squared_edt(&vol).unwrap(),
            brute_force_edt(&vol).unwrap(),
            "volume {i}"
        );
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vol = VideoVolume::from_fn(40, 33, 21, |_, _, _| rng.random_bool(0.002)).unwrap();
    assert_eq!(
        squared_edt_with(&vol, Execution::Sequential).unwrap(),
        squared_edt_with(&vol, Execution::Parallel).unwrap()
    );
}

#[test]
fn adding_foreground_never_increases_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut vol = VideoVolume::from_fn(14, 11, 9, |_, _, _| rng.random_bool(0.01)).unwrap();
    vol.set(3, 3, 3, true);
    let mut before = squared_edt(&vol).unwrap();
    for _ in 0..20 {
        let i = rng.random_range(0..vol.len());
        vol.set_index(i, true);
        let after = squared_edt(&vol).unwrap();
        assert!(after
            .as_slice()
            .iter()
            .zip(before.as_slice())
            .all(|(a, b)| a <= b));
        before = after;
    }
}

#[test]
fn lipschitz_lattice_and_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let vol = VideoVolume::from_fn(18, 15, 12, |_, _, _| rng.random_bool(0.01)).unwrap();
    let field = squared_edt(&vol).unwrap();
    let (w, h, d) = field.dims();

    // Values a^2+b^2+c^2 by direct enumeration.
    let mut achievable = vec![false; w * w + h * h + d * d];
    for a in 0..w {
        for b in 0..h {
            for c in 0..d {
                achievable[a * a + b * b + c * c] = true;
            }
        }
    }
    assert!(field.as_slice().iter().all(|&q| achievable[q as usize]));
    assert!(u64::from(field.max()) <= max_sqdist_bound(w, h, d));

    for _ in 0..5000 {
        let u = (
            rng.random_range(0..w),
            rng.random_range(0..h),
            rng.random_range(0..d),
        );
        let v = (
            rng.random_range(0..w),
            rng.random_range(0..h),
            rng.random_range(0..d),
        );
        let du = f64::from(field.get(u.0, u.1, u.2)).sqrt();
        let dv = f64::from(field.get(v.0, v.1, v.2)).sqrt();
        let sep = ((u.0 as f64 - v.0 as f64).powi(2)
            + (u.1 as f64 - v.1 as f64).powi(2)
            + (u.2 as f64 - v.2 as f64).powi(2))
        .sqrt();
        assert!((du - dv).abs() <= sep + 1e-12);
    }
}

#[test]
fn zero_exactly_on_foreground() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let vol = VideoVolume::from_fn(9, 10, 11, |_, _, _| rng.random_bool(0.2)).unwrap();
    let field = squared_edt(&vol).unwrap();
    for i in 0..vol.len() {
        assert_eq!(field.as_slice()[i] == 0, vol.get_index(i));
    }
}

#[test]
fn far_corner_reaches_bound() {
    let mut vol = VideoVolume::empty(7, 5, 4).unwrap();
    vol.set(0, 0, 0, true);
    let field = squared_edt(&vol).unwrap();
    assert_eq!(u64::from(field.get(6, 4, 3)), max_sqdist_bound(7, 5, 4));
}
