use proptest::prelude::*;
use splitfov_core::metrics::{
    improvement_pct, iqr, median, read_csv_from, summarize, write_csv_to, ClientFrameRecord, ServerFrameTiming,
};
use splitfov_core::{Eye, PartitionSpec};

fn arb_valid_spec() -> impl Strategy<Value = PartitionSpec> {
    (1u32..400, 1u32..300, 1u32..=1000).prop_flat_map(|(eye_w, eye_h, scale_milli)| {
        (1..=eye_w, 1..=eye_h).prop_map(move |(fov_w, fov_h)| {
            PartitionSpec::new(eye_w * 2, eye_h, fov_w, fov_h, scale_milli as f32 / 1000.0)
        })
    })
}

proptest! {
    #[test]
    fn fovea_within_bounds_and_centered(spec in arb_valid_spec()) {
        prop_assert!(spec.validate().is_ok());
        for eye in Eye::BOTH {
            let r = spec.foveal_rect(eye).unwrap();
            prop_assert!(r.fits_within(spec.eye_w, spec.eye_h));
            let left = r.x as i64;
            let right = spec.eye_w as i64 - r.right() as i64;
            let top = r.y as i64;
            let bottom = spec.eye_h as i64 - r.bottom() as i64;
            prop_assert!((right - left) == 0 || (right - left) == 1);
            prop_assert!((bottom - top) == 0 || (bottom - top) == 1);
            let s = spec.foveal_rect_stereo(eye).unwrap();
            prop_assert!(s.fits_within(spec.full_w, spec.full_h));
        }
        let (rw, rh) = spec.reduced_dims().unwrap();
        prop_assert!(rw >= 1 && rh >= 1 && rw <= spec.full_w && rh <= spec.full_h);
    }

    #[test]
    fn quantiles_permutation_invariant(mut xs in proptest::collection::vec(-1e3f64..1e3, 1..60), seed in any::<u64>()) {
        let m = median(&xs).unwrap();
        let q = iqr(&xs).unwrap();
        prop_assert!(q >= 0.0);
        // deterministic shuffle
        let n = xs.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            xs.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(median(&xs).unwrap(), m);
        prop_assert_eq!(iqr(&xs).unwrap(), q);
    }

    #[test]
    fn improvement_decreases_with_split_time(native in 1.0f64..100.0, a in 1.0f64..100.0, b in 1.0f64..100.0) {
        prop_assume!(a < b);
        prop_assert!(improvement_pct(native, a).unwrap() > improvement_pct(native, b).unwrap());
    }

    #[test]
    fn csv_roundtrip(recs in proptest::collection::vec((any::<u64>(), proptest::array::uniform6(0.0f64..1e4), any::<u32>()), 1..20)) {
        let records: Vec<ClientFrameRecord> = recs
            .into_iter()
            .map(|(id, d, b)| ClientFrameRecord {
                frame_id: id,
                draw_ms: d[0],
                network_ms: d[1],
                decode_ms: d[2],
                merge_ms: d[3],
                pose_ms: d[4],
                total_ms: d[5],
                bytes_received: b as u64,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &records).unwrap();
        let back: Vec<ClientFrameRecord> = read_csv_from(&buf[..]).unwrap();
        prop_assert_eq!(back, records);
    }
}

#[test]
fn summary_of_synthetic_records() {
    // Totals 10, 20, 30, 40, 50 -> median 30, q1 20, q3 40, IQR 20.
    // Network 1..=5 ms with 125 kB each -> per-frame Mbps 1000, 500, 333.3, 250, 200 -> median 333.33.
    let client: Vec<ClientFrameRecord> = (1..=5)
        .map(|i| ClientFrameRecord {
            frame_id: i - 1,
            draw_ms: 2.0 * i as f64,
            network_ms: i as f64,
            decode_ms: 3.0,
            merge_ms: 0.5 * i as f64,
            pose_ms: 0.1,
            total_ms: 10.0 * i as f64,
            bytes_received: 125_000,
        })
        .collect();
    let server: Vec<ServerFrameTiming> = (0..4)
        .map(|i| ServerFrameTiming {
            frame_id: i,
            draw_ms: [4.0, 1.0, 3.0, 2.0][i as usize],
            encode_ms: 6.0,
            send_ms: 0.0,
            bytes_sent: 100,
        })
        .collect();
    let s = summarize(&client, Some(&server)).unwrap();
    assert_eq!(s.frame_count, 5);
    assert_eq!(s.total.median_ms, 30.0);
    assert_eq!(s.total.iqr_ms, 20.0);
    assert_eq!(s.draw.median_ms, 6.0);
    assert_eq!(s.draw.iqr_ms, 4.0);
    assert_eq!(s.merge.median_ms, 1.5);
    assert_eq!(s.decode.iqr_ms, 0.0);
    assert!((s.mbps.unwrap() - 1000.0 / 3.0).abs() < 1e-9);
    assert_eq!(s.median_fps(), 33);
    let srv = s.server.as_ref().unwrap();
    // draw [1,2,3,4]: median 2.5, IQR 1.5
    assert_eq!(srv.draw.median_ms, 2.5);
    assert_eq!(srv.draw.iqr_ms, 1.5);
    assert_eq!(srv.encode.median_ms, 6.0);

    let table = splitfov_core::metrics::render_table(&s, (512, 360));
    assert!(table.contains("512x360"));
    assert!(table.contains("Network"));
    assert!(table.contains("Encode Time"));
    assert!(table.contains("33 fps"));
    let kv = splitfov_core::metrics::to_key_values(&s);
    assert!(kv.contains("client.total.median_ms=30\n"));
    assert!(kv.contains("server.draw.iqr_ms=1.5\n"));
}

#[test]
fn native_records_have_no_rate() {
    let r = ClientFrameRecord { total_ms: 12.0, draw_ms: 11.0, ..Default::default() };
    let s = summarize(&[r, r], None).unwrap();
    assert_eq!(s.mbps, None);
    assert!(splitfov_core::metrics::render_table(&s, (1, 1)).contains(" -"));
}
