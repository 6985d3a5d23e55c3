use std::fs;
use std::path::Path;

use mfd_core::volume::{
    list_frame_dir, load_frame_sequence, load_input, load_volume, save_volume, FrameSpec,
    VideoVolume,
};
use mfd_core::{Error, Execution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn write_pgm(path: &Path, w: usize, h: usize, pixels: &[u8]) {
    let mut bytes = format!("P5\n# test frame\n{w} {h}\n255\n").into_bytes();
    bytes.extend_from_slice(pixels);
    fs::write(path, bytes).unwrap();
}

fn write_png(path: &Path, w: usize, h: usize, pixels: &[u8]) {
    image::GrayImage::from_raw(w as u32, h as u32, pixels.to_vec())
        .unwrap()
        .save(path)
        .unwrap();
}

#[test]
fn pgm_and_png_frames_decode_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (w, h) = (13, 9);
    let frames: Vec<Vec<u8>> = (0..5)
        .map(|_| (0..w * h).map(|_| rng.random()).collect())
        .collect();
    let pgm_dir = dir.path().join("pgm");
    let png_dir = dir.path().join("png");
    fs::create_dir_all(&pgm_dir).unwrap();
    fs::create_dir_all(&png_dir).unwrap();
    for (z, f) in frames.iter().enumerate() {
        write_pgm(&pgm_dir.join(format!("f{z:03}.pgm")), w, h, f);
        write_png(&png_dir.join(format!("f{z:03}.png")), w, h, f);
    }
    fs::write(pgm_dir.join("notes.txt"), "ignored").unwrap();

    let a = load_input(&pgm_dir, 128, Execution::Parallel).unwrap();
    let b = load_input(&png_dir, 128, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dims(), (w, h, 5));
    let expect = frames.iter().flatten().filter(|&&p| p >= 128).count();
    assert_eq!(a.foreground_count(), expect);
    for (z, f) in frames.iter().enumerate() {
        for y in 0..h {
            for x in 0..w {
                assert_eq!(a.get(x, y, z), f[x + w * y] >= 128);
            }
        }
    }
    assert_eq!(list_frame_dir(&pgm_dir).unwrap().len(), 5);
}

#[test]
fn threshold_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let paths: Vec<_> = (0..4)
        .map(|z| {
            let p = dir.path().join(format!("{z}.pgm"));
            let px: Vec<u8> = (0..64).map(|_| rng.random()).collect();
            write_pgm(&p, 8, 8, &px);
            p
        })
        .collect();
    let mut prev = usize::MAX;
    for t in (2..=250u8).step_by(8) {
        let n = match load_frame_sequence(
            &FrameSpec::frames(paths.clone()).with_threshold(t),
            Execution::Sequential,
        ) {
            Ok(v) => v.foreground_count(),
            Err(Error::EmptyVolume) => 0,
            Err(e) => panic!("{e}"),
        };
        assert!(n <= prev);
        prev = n;
    }
}

#[test]
fn corrupt_and_mismatched_frames() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.png");
    fs::write(&bad, b"definitely not a png").unwrap();
    assert!(matches!(
        load_frame_sequence(&FrameSpec::frames(vec![bad]), Execution::Sequential),
        Err(Error::DecodeError { .. })
    ));
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    write_pgm(&a, 4, 4, &[255; 16]);
    write_pgm(&b, 5, 4, &[255; 20]);
    assert!(matches!(
        load_frame_sequence(&FrameSpec::frames(vec![a, b]), Execution::Sequential),
        Err(Error::DimensionMismatch(_))
    ));
    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert!(matches!(
        load_input(&empty, 128, Execution::Sequential),
        Err(Error::EmptySequence)
    ));
    assert!(matches!(
        load_volume(dir.path().join("missing.vol")),
        Err(Error::IoError { .. })
    ));
}

#[test]
fn random_20_cube_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let vol = VideoVolume::from_fn(20, 20, 20, |_, _, _| rng.random_bool(0.3)).unwrap();
    let path = dir.path().join("v.vol");
    save_volume(&vol, &path).unwrap();
    let back = load_volume(&path).unwrap();
    assert_eq!(back.foreground_count(), vol.foreground_count());
    assert_eq!(back, vol);
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"MFV1");
    assert_eq!(bytes.len(), 16 + 1000);
    assert_eq!(load_input(&path, 0, Execution::Sequential).unwrap(), vol);
}

#[test]
fn bit_layout_is_lsb_first() {
    let mut vol = VideoVolume::empty(3, 2, 2).unwrap();
    vol.set(1, 0, 0, true); // bit 1
    vol.set(2, 1, 1, true); // bit 11
    let bytes = vol.encode();
    assert_eq!(&bytes[4..16], &[3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0]);
    assert_eq!(&bytes[16..], &[0b0000_0010, 0b0000_1000]);
}

proptest! {
    #[test]
    fn mfv1_round_trip(w in 1usize..12, h in 1usize..12, d in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vol = VideoVolume::from_fn(w, h, d, |_, _, _| rng.random_bool(0.4)).unwrap();
        vol.set(0, 0, 0, true);
        let back = VideoVolume::decode(&vol.encode()).unwrap();
        prop_assert_eq!(back.foreground_count(), vol.foreground_count());
        prop_assert_eq!(back, vol);
    }
}
