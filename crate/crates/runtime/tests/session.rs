use std::collections::BTreeMap;
use std::net::TcpListener;
use std::time::Instant;

use splitfov_core::wire::{HelloMsg, SubframeMsg};
use splitfov_core::{CodecId, Message, PartitionSpec};
use splitfov_runtime::link::sim_link;
use splitfov_runtime::trace::{check_lockstep, check_merge_order, EventKind, MsgKind};
use splitfov_runtime::*;

fn tiny() -> SessionConfig {
    SessionConfig { spec: PartitionSpec::new(64, 32, 16, 12, 0.5), frames: 4, ..Default::default() }
}

fn virtual_run(session: SessionConfig, net: NetModel, costs: CostModel) -> SimRun {
    let cfg = SimConfig::new(session, net, ClockMode::Virtual(costs));
    run_sim(&cfg, &mut NullSink).unwrap()
}

fn hand_costs() -> CostModel {
    CostModel {
        server_draw: StageCost::fixed(5.0),
        encode: StageCost::fixed(3.0),
        decode: StageCost::fixed(2.0),
        merge: StageCost::fixed(1.0),
        client_draw: StageCost::fixed(6.0),
        ..CostModel::zero()
    }
}

fn event_time(run: &SimRun, actor: Actor, kind: EventKind, frame_id: u64) -> f64 {
    run.trace
        .iter()
        .find(|e| e.actor == actor && e.kind == kind && e.frame_id == frame_id)
        .unwrap_or_else(|| panic!("no {actor:?} {kind:?} for frame {frame_id}"))
        .t_ms
}

#[test]
fn virtual_timeline_matches_hand_computation() {
    // Latency 2, infinite bandwidth. Relative to the pose send at t0:
    // server receives at +2, draws to +7, encodes to +10, subframes land at +12,
    // decodes run +12..+16, the client draw finished at +6, merge +16..+17.
    let session = SessionConfig { frames: 1, ..tiny() };
    let run = virtual_run(session, NetModel { latency_ms: 2.0, bandwidth_mbps: f64::INFINITY }, hand_costs());
    let t0 = event_time(&run, Actor::Client, EventKind::Sent(MsgKind::Pose), 0);
    assert_eq!(t0, 4.0, "Hello round trip takes two latencies");
    let at = |actor, kind| event_time(&run, actor, kind, 0) - t0;
    assert_eq!(at(Actor::Server, EventKind::Received(MsgKind::Pose)), 2.0);
    assert_eq!(at(Actor::Server, EventKind::End(Stage::ServerDraw)), 7.0);
    assert_eq!(at(Actor::Server, EventKind::End(Stage::Encode)), 10.0);
    assert_eq!(at(Actor::Client, EventKind::End(Stage::ClientDraw)), 6.0);
    assert_eq!(at(Actor::Client, EventKind::Begin(Stage::Merge)), 16.0);
    let rec = run.client.records[0];
    assert_eq!(rec.total_ms, 17.0);
    assert_eq!(rec.draw_ms, 6.0);
    assert_eq!(rec.decode_ms, 4.0);
    assert_eq!(rec.merge_ms, 1.0);
    assert_eq!(rec.network_ms, 0.0);
    let srv = run.server.records[0];
    assert_eq!((srv.draw_ms, srv.encode_ms), (5.0, 3.0));
    assert_eq!(run.server.outcome, Outcome::Completed);
}

#[test]
fn client_draw_overlaps_network_wait() {
    let costs = CostModel { client_draw: StageCost::fixed(30.0), ..hand_costs() };
    let net = NetModel { latency_ms: 20.0, bandwidth_mbps: f64::INFINITY };
    let run = virtual_run(SessionConfig { frames: 5, ..tiny() }, net, costs);
    for r in &run.client.records {
        // Sequential would be 30 + (20 + 5 + 3 + 20) + 4 + 1 = 83; overlapped is 48 + 4 + 1.
        assert_eq!(r.total_ms, 53.0);
    }
    assert!(check_merge_order(&run.trace).is_empty());
    assert!(check_lockstep(&run.trace, 5).is_empty());
}

#[test]
fn network_time_scales_with_bytes() {
    let net = NetModel { latency_ms: 1.0, bandwidth_mbps: 50.0 };
    let mut per_byte = Vec::new();
    for fov in [(16, 12), (32, 24)] {
        let spec = PartitionSpec::new(96, 48, fov.0, fov.1, 0.5);
        let session = SessionConfig { spec, codec: CodecId::Raw, frames: 2, ..tiny() };
        let run = virtual_run(session, net, CostModel::zero());
        let r = run.client.records[1];
        let expected = r.bytes_received as f64 * 8.0 / 50e3;
        assert!((r.network_ms - expected).abs() < 1e-9, "{} vs {expected}", r.network_ms);
        per_byte.push((r.network_ms, r.bytes_received));
    }
    let t_ratio = per_byte[1].0 / per_byte[0].0;
    let b_ratio = per_byte[1].1 as f64 / per_byte[0].1 as f64;
    assert!((t_ratio - b_ratio).abs() < 1e-9);
    assert!(b_ratio > 3.5);
}

#[test]
fn delayed_pose_delays_server_draw() {
    let mut cfg = SimConfig::new(
        SessionConfig { frames: 6, ..tiny() },
        NetModel::default(),
        ClockMode::Virtual(hand_costs()),
    );
    cfg.pose_delays = BTreeMap::from([(3, 50.0)]);
    let run = run_sim(&cfg, &mut NullSink).unwrap();
    let prev_send = event_time(&run, Actor::Server, EventKind::End(Stage::Send), 2);
    let draw = event_time(&run, Actor::Server, EventKind::Begin(Stage::ServerDraw), 3);
    assert!(draw - prev_send >= 50.0, "{draw} - {prev_send}");
    assert!(check_lockstep(&run.trace, 6).is_empty());
    assert!(run.client.records[3].total_ms > run.client.records[2].total_ms + 49.0);
}

#[test]
fn zero_and_one_frame_sessions() {
    let run = virtual_run(SessionConfig { frames: 0, ..tiny() }, NetModel::default(), hand_costs());
    assert!(run.client.records.is_empty() && run.server.records.is_empty());
    assert_eq!(run.server.outcome, Outcome::Completed);
    let kinds: Vec<_> = run.trace.iter().filter(|e| e.actor == Actor::Client).map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        vec![
            EventKind::Sent(MsgKind::Hello),
            EventKind::Received(MsgKind::Hello),
            EventKind::Sent(MsgKind::End),
            EventKind::Received(MsgKind::End)
        ]
    );

    let run = virtual_run(SessionConfig { frames: 1, ..tiny() }, NetModel::default(), hand_costs());
    assert_eq!(run.client.records.len(), 1);
    assert_eq!(run.server.records.len(), 1);
    assert!(check_lockstep(&run.trace, 1).is_empty());
}

#[test]
fn virtual_runs_are_deterministic() {
    let a = virtual_run(tiny(), NetModel::default(), CostModel::default());
    let b = virtual_run(tiny(), NetModel::default(), CostModel::default());
    assert_eq!(a.client.records, b.client.records);
    assert_eq!(a.server.records, b.server.records);
    assert_eq!(a.trace, b.trace);
}

#[test]
fn split_frames_match_native() {
    let session = SessionConfig { frames: 3, ..tiny() };
    let mut split = CollectSink::default();
    run_sim(&SimConfig::new(session, NetModel::ideal(), ClockMode::Wall), &mut split).unwrap();
    let mut native = CollectSink::default();
    let tl = Timeline::new(Clock::wall());
    run_native(&session, Upsample::Nearest, tl, Recorder::disabled(Actor::Client, Lane::Main), &mut native).unwrap();
    assert_eq!(split.frames.len(), 3);
    assert_eq!(split.frames, native.frames);
}

#[test]
fn server_overrides_win() {
    let mut cfg = SimConfig::new(tiny(), NetModel::default(), ClockMode::Virtual(CostModel::zero()));
    cfg.server.codec = Some(CodecId::Raw);
    let run = run_sim(&cfg, &mut NullSink).unwrap();
    assert_eq!(run.client.config.codec, CodecId::Raw);
    assert_eq!(run.server.config.codec, CodecId::Raw);
    // Raw payload: two 16x12 foveae plus headers.
    assert_eq!(run.client.records[0].bytes_received, 2 * (27 + 16 * 12 * 3));
}

#[test]
fn tcp_loopback_session() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        serve_one(&listener, &ServerOptions::default(), Recorder::disabled(Actor::Server, Lane::Main)).unwrap()
    });
    let mut sink = CollectSink::default();
    let run = run_client(addr, tiny(), Upsample::Nearest, Recorder::disabled(Actor::Client, Lane::Main), &mut sink).unwrap();
    let srv = server.join().unwrap();
    assert_eq!(srv.outcome, Outcome::Completed);
    assert_eq!(run.records.len(), 4);
    assert_eq!(srv.records.len(), 4);
    assert!(run.records.iter().all(|r| r.bytes_received > 0 && r.total_ms > 0.0));
    let mut native = CollectSink::default();
    run_native(&tiny(), Upsample::Nearest, Timeline::new(Clock::wall()), Recorder::disabled(Actor::Client, Lane::Main), &mut native)
        .unwrap();
    assert_eq!(sink.frames, native.frames);
}

/// Server side of a link driven by hand.
fn scripted_server(script: impl FnOnce(&mut dyn MsgTx, &mut dyn MsgRx) + Send + 'static) -> (link::SimTx, link::SimRx) {
    let clock = Clock::virtual_clock(CostModel::zero());
    let (c2s_tx, mut c2s_rx) = sim_link(NetModel::ideal(), clock.clone());
    let (mut s2c_tx, s2c_rx) = sim_link(NetModel::ideal(), clock);
    std::thread::spawn(move || script(&mut s2c_tx, &mut c2s_rx));
    (c2s_tx, s2c_rx)
}

fn run_against(tx: link::SimTx, rx: link::SimRx) -> ClientFailure {
    let tl = Timeline::new(Clock::virtual_clock(CostModel::zero()));
    run_client_session(tx, rx, tiny(), Upsample::Nearest, tl, Recorder::disabled(Actor::Client, Lane::Main), &mut NullSink)
        .unwrap_err()
}

#[test]
fn version_mismatch_is_explicit() {
    let (tx, rx) = scripted_server(|tx, rx| {
        let Some(Delivery { msg: Message::Hello(h), .. }) = rx.recv(0.0).unwrap() else { panic!() };
        tx.send(&Message::Hello(HelloMsg { protocol_version: 99, ..h }), 0.0).unwrap();
    });
    let f = run_against(tx, rx);
    assert!(matches!(f.error, SessionError::VersionMismatch { local: 1, peer: 99 }), "{}", f.error);

    // And the server side refuses an unknown client version.
    let clock = Clock::virtual_clock(CostModel::zero());
    let (mut c2s_tx, c2s_rx) = sim_link(NetModel::ideal(), clock.clone());
    let (s2c_tx, mut s2c_rx) = sim_link(NetModel::ideal(), clock.clone());
    let hello = HelloMsg { protocol_version: 7, ..tiny().hello() };
    c2s_tx.send(&Message::Hello(hello), 0.0).unwrap();
    let err = run_server_session(s2c_tx, c2s_rx, &ServerOptions::default(), Timeline::new(clock), Recorder::disabled(Actor::Server, Lane::Main))
        .unwrap_err();
    assert!(matches!(err, SessionError::VersionMismatch { local: 1, peer: 7 }));
    let Some(Delivery { msg: Message::Hello(reply), .. }) = s2c_rx.recv(0.0).unwrap() else { panic!() };
    assert_eq!(reply.protocol_version, 1);
}

#[test]
fn wrong_frame_id_is_protocol_error() {
    let (tx, rx) = scripted_server(|tx, rx| {
        let Some(Delivery { msg: Message::Hello(h), .. }) = rx.recv(0.0).unwrap() else { panic!() };
        tx.send(&Message::Hello(h), 0.0).unwrap();
        let _pose = rx.recv(0.0).unwrap();
        let spec = tiny().spec;
        let r = spec.foveal_rect(splitfov_core::Eye::Left).unwrap();
        let img = splitfov_core::Image::new(r.w, r.h, [1, 2, 3]).unwrap();
        let sub = SubframeMsg {
            frame_id: 5,
            eye: 0,
            codec: CodecId::PredDeflate as u8,
            rect: [r.x as u16, r.y as u16, r.w as u16, r.h as u16],
            payload: splitfov_core::codec::encode(CodecId::PredDeflate, &img),
        };
        tx.send(&Message::Subframe(sub.clone()), 0.0).unwrap();
        tx.send(&Message::Subframe(SubframeMsg { eye: 1, ..sub }), 0.0).unwrap();
        let _ = rx.recv(0.0);
    });
    let f = run_against(tx, rx);
    assert!(f.error.is_protocol(), "{}", f.error);
    assert!(f.error.to_string().contains("expected 0"));
}

#[test]
fn server_disconnect_keeps_completed_frames() {
    let (tx, rx) = scripted_server(|tx, rx| {
        let Some(Delivery { msg: Message::Hello(h), .. }) = rx.recv(0.0).unwrap() else { panic!() };
        tx.send(&Message::Hello(h), 0.0).unwrap();
        let spec = tiny().spec;
        let r = spec.foveal_rect(splitfov_core::Eye::Left).unwrap();
        let img = splitfov_core::Image::new(r.w, r.h, [9, 9, 9]).unwrap();
        for n in 0..2u64 {
            let _pose = rx.recv(0.0).unwrap();
            for eye in 0..2 {
                let sub = SubframeMsg {
                    frame_id: n,
                    eye,
                    codec: 1,
                    rect: [r.x as u16, r.y as u16, r.w as u16, r.h as u16],
                    payload: splitfov_core::codec::encode(CodecId::PredDeflate, &img),
                };
                tx.send(&Message::Subframe(sub), 0.0).unwrap();
            }
        }
        // Take the next pose, then drop both halves mid-session.
        let _pose = rx.recv(0.0).unwrap();
    });
    let f = run_against(tx, rx);
    assert!(matches!(f.error, SessionError::Disconnected(_)), "{}", f.error);
    assert_eq!(f.records.len(), 2);
}

#[test]
fn client_disconnect_keeps_server_records() {
    let clock = Clock::virtual_clock(CostModel::zero());
    let (mut c2s_tx, c2s_rx) = sim_link(NetModel::ideal(), clock.clone());
    let (s2c_tx, _s2c_rx) = sim_link(NetModel::ideal(), clock.clone());
    let cfg = tiny();
    c2s_tx.send(&Message::Hello(cfg.hello()), 0.0).unwrap();
    let path = cfg.camera_path();
    for n in 0..2 {
        let pose = splitfov_core::pose_at(&path, n).unwrap();
        c2s_tx
            .send(&Message::Pose(splitfov_core::wire::PoseUpdateMsg::from_pose(n, &pose)), 0.0)
            .unwrap();
    }
    drop(c2s_tx);
    let run = run_server_session(s2c_tx, c2s_rx, &ServerOptions::default(), Timeline::new(clock), Recorder::disabled(Actor::Server, Lane::Main))
        .unwrap();
    assert!(matches!(run.outcome, Outcome::Disconnected(_)));
    assert_eq!(run.records.len(), 2);
}

#[test]
fn parallel_encode_costs_one_eye() {
    let costs = CostModel { encode: StageCost::per_unit(0.01), ..CostModel::zero() };
    let session = SessionConfig { frames: 1, ..tiny() };
    let mut cfg = SimConfig::new(session, NetModel::ideal(), ClockMode::Virtual(costs));
    let seq = run_sim(&cfg, &mut NullSink).unwrap().server.records[0].encode_ms;
    cfg.server.parallel_encode = true;
    let par = run_sim(&cfg, &mut NullSink).unwrap();
    assert!((seq - 2.0 * 16.0 * 12.0 * 0.01).abs() < 1e-9);
    assert!((par.server.records[0].encode_ms * 2.0 - seq).abs() < 1e-9);
    assert_eq!(par.client.records.len(), 1);
}

#[test]
fn compare_reflects_draw_reduction() {
    // Same per-ray cost on both devices, nothing else costs anything: split
    // frame time is the periphery draw, native adds both foveae.
    let costs = CostModel {
        client_draw: StageCost::per_unit(1e-3),
        server_draw: StageCost::per_unit(1e-3),
        ..CostModel::zero()
    };
    let session = SessionConfig { spec: PartitionSpec::desk(), frames: 3, ..Default::default() };
    let arm = SplitArm::Sim { net: NetModel::ideal(), server: ServerOptions::default() };
    let run = run_compare(&session, &ClockMode::Virtual(costs), &arm, Upsample::Nearest).unwrap();
    let reduced = 360.0 * 162.0;
    let fovea = 2.0 * 128.0 * 90.0;
    assert!((run.report.improvement_pct - fovea / reduced * 100.0).abs() < 1e-6, "{}", run.report.improvement_pct);
    assert_eq!(run.report.split_client_rays, 360 * 162);
    assert_eq!(run.report.native_rays, 360 * 162 + 2 * 128 * 90);
    let text = run.report.render();
    assert!(text.contains("improvement: 39.51%"), "{text}");
}

#[test]
fn ppm_sink_writes_every_kth_frame() {
    let dir = tempfile::tempdir().unwrap();
    let mut sink = PpmSink::new(dir.path(), 2).unwrap();
    let session = SessionConfig { frames: 5, ..tiny() };
    run_native(&session, Upsample::Bilinear, Timeline::new(Clock::wall()), Recorder::disabled(Actor::Client, Lane::Main), &mut sink)
        .unwrap();
    let mut names: Vec<String> =
        std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["frame_00000.ppm", "frame_00002.ppm", "frame_00004.ppm"]);
    let img = splitfov_core::Image::read_ppm(&std::fs::read(dir.path().join("frame_00002.ppm")).unwrap()[..]).unwrap();
    assert_eq!(img.dims(), (64, 32));
}

#[test]
fn wall_clock_sim_respects_latency() {
    let session = SessionConfig { frames: 3, ..tiny() };
    let cfg = SimConfig::new(session, NetModel { latency_ms: 5.0, bandwidth_mbps: f64::INFINITY }, ClockMode::Wall);
    let start = Instant::now();
    let run = run_sim(&cfg, &mut NullSink).unwrap();
    // Each frame needs a pose one way and subframes back.
    assert!(run.client.records.iter().all(|r| r.total_ms >= 10.0), "{:?}", run.client.records);
    assert!(start.elapsed().as_millis() >= 40);
    assert!(check_lockstep(&run.trace, 3).is_empty(), "{:?}", check_lockstep(&run.trace, 3));
    assert!(check_merge_order(&run.trace).is_empty());
}

#[test]
fn report_from_reference_medians() {
    let frame = |total_ms| splitfov_core::ClientFrameRecord { total_ms, draw_ms: total_ms, ..Default::default() };
    let native = [frame(31.0), frame(32.2), frame(40.0)];
    let split = [frame(20.0), frame(26.17), frame(30.0)];
    let report = ComparisonReport::from_records(&native, &split, &[], &SessionConfig::default()).unwrap();
    let text = report.render();
    assert!(text.contains("improvement: 23.04%"), "{text}");
    assert!(text.contains("31 fps") && text.contains("38 fps"), "{text}");
    assert!(text.contains("IQR"), "{text}");
    assert!(text.contains("client rays per frame: native 1301760 split 933120"), "{text}");
}
