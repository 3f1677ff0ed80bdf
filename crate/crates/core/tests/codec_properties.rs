use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splitfov_core::codec::{decode, encode};
use splitfov_core::{pose_at, render_region, CameraPath, CameraRig, CodecId, Eye, Image, PathId, Rect, SceneConfig, SceneId};

fn arb_image() -> impl Strategy<Value = Image> {
    (1u32..=40, 1u32..=24).prop_flat_map(|(w, h)| {
        proptest::collection::vec(any::<u8>(), (w * h * 3) as usize)
            .prop_map(move |px| Image::from_raw(w, h, px).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lossless_roundtrip(img in arb_image()) {
        for codec in [CodecId::Raw, CodecId::PredDeflate] {
            let data = encode(codec, &img);
            prop_assert_eq!(decode(codec, &data, img.width(), img.height()).unwrap(), img.clone());
        }
    }

    #[test]
    fn random_bytes_never_panic(data in proptest::collection::vec(any::<u8>(), 0..512), w in 1u32..16, h in 1u32..16) {
        let r = decode(CodecId::PredDeflate, &data, w, h);
        if let Ok(img) = r {
            prop_assert_eq!(img.dims(), (w, h));
        }
    }
}

#[test]
fn rendered_content_compresses() {
    let path = CameraPath::preset(PathId::Orbit, 8);
    let pose = pose_at(&path, 2).unwrap();
    let rig = CameraRig::default();
    let mut raw = 0;
    let mut packed = 0;
    for eye in Eye::BOTH {
        let img = render_region(&SceneConfig::new(SceneId::Spheres), &rig, &pose, eye, (300, 270), Rect::new(86, 90, 128, 90))
            .unwrap();
        raw += encode(CodecId::Raw, &img).len();
        packed += encode(CodecId::PredDeflate, &img).len();
    }
    assert!(packed < raw, "{packed} >= {raw}");
    eprintln!("compression ratio on rendered fovea: {:.2}:1", raw as f64 / packed as f64);
}

#[test]
fn truncated_and_padded_payloads_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (w, h) = (rng.gen_range(1..30), rng.gen_range(1..30));
        let px: Vec<u8> = (0..w * h * 3).map(|_| rng.gen()).collect();
        let img = Image::from_raw(w, h, px).unwrap();
        for codec in [CodecId::Raw, CodecId::PredDeflate] {
            let data = encode(codec, &img);
            let cut = rng.gen_range(0..data.len());
            assert!(decode(codec, &data[..cut], w, h).is_err());
            let mut longer = data.clone();
            longer.push(rng.gen());
            assert!(decode(codec, &longer, w, h).is_err());
        }
    }
}

#[test]
fn bit_flips_never_panic_or_misreport_size() {
    // In-stream flips of a checksum-less DEFLATE stream may still decode; the
    // decoder must then return an image of the requested size.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let img = Image::from_raw(17, 9, (0..17 * 9 * 3).map(|i| (i * 31 % 251) as u8).collect()).unwrap();
    let data = encode(CodecId::PredDeflate, &img);
    for _ in 0..2000 {
        let mut bad = data.clone();
        let i = rng.gen_range(0..bad.len());
        bad[i] ^= 1 << rng.gen_range(0..8);
        if let Ok(out) = decode(CodecId::PredDeflate, &bad, 17, 9) {
            assert_eq!(out.dims(), (17, 9));
        }
    }
}
