use omnicount_core::frame::OmniFrame;
use omnicount_core::geometry::{build_fragment_maps, FragmentMap, UnwarpConfig};
use omnicount_core::label::{
    fuse_to_omni, harvest_fragments, DetectionProvider, Harvest, LabelError, ProcessProvider, ProviderKind,
    ProviderSpec, DEFAULT_NMS_THRESHOLD,
};
use omnicount_core::synth::{Movement, OracleProvider, SyntheticRenderer, SyntheticScene};

fn scene(persons: usize, movement: Movement) -> SyntheticRenderer {
    SyntheticRenderer::new(SyntheticScene {
        persons,
        movement,
        size: 384,
        seed: 11,
        ..Default::default()
    })
    .unwrap()
}

fn maps_for(r: &SyntheticRenderer, k: usize) -> Vec<FragmentMap> {
    let cfg = UnwarpConfig {
        k,
        fragment_height: 128,
        ..Default::default()
    };
    build_fragment_maps(r.camera(), &cfg).unwrap()
}

#[test]
fn oracle_sees_every_person() {
    let r = scene(3, Movement::Moderate);
    let maps = maps_for(&r, 3);
    let mut p = OracleProvider::new("oracle", ProviderKind::BoxDetector);
    let dets = harvest_fragments(&r.render(0), &mut p, &maps).unwrap();
    let total: usize = dets.iter().map(|d| d.boxes.len()).sum();
    assert!(total >= 3, "{total} detections");
    for (i, d) in dets.iter().enumerate() {
        assert_eq!(d.fragment_index, i);
        assert!(d.boxes.iter().all(|b| b.fragment == Some(i)));
    }
}

#[test]
fn fused_count_tracks_rendered_people() {
    for (persons, movement, k) in [
        (3, Movement::Moderate, 3),
        (2, Movement::High, 2),
        (4, Movement::Limited, 4),
    ] {
        let r = scene(persons, movement);
        let maps = maps_for(&r, k);
        let mut boxes = OracleProvider::new("boxes", ProviderKind::BoxDetector);
        let mut poses = OracleProvider::new("pose", ProviderKind::PoseEstimator);
        let frames = 120;
        let mut exact = 0;
        for f in 0..frames {
            let frame = r.render(f);
            let b = harvest_fragments(&frame, &mut boxes, &maps).unwrap();
            let p = harvest_fragments(&frame, &mut poses, &maps).unwrap();
            let fused = fuse_to_omni(
                &[Harvest::new("boxes", &maps, &b), Harvest::new("pose", &maps, &p)],
                DEFAULT_NMS_THRESHOLD,
            );
            if fused.len() == persons {
                exact += 1;
            }
        }
        let rate = exact as f64 / frames as f64;
        assert!(
            rate >= 0.95,
            "{persons} people, k={k}: exact count on {rate:.3} of frames"
        );
    }
}

#[test]
fn empty_room_has_no_detections() {
    let r = scene(0, Movement::Moderate);
    let maps = maps_for(&r, 3);
    let mut p = OracleProvider::new("oracle", ProviderKind::BoxDetector);
    let dets = harvest_fragments(&r.render(3), &mut p, &maps).unwrap();
    assert!(fuse_to_omni(&[Harvest::new("oracle", &maps, &dets)], 0.4).is_empty());
}

fn shell(name: &str, script: &str, timeout: f64, workers: usize) -> ProviderSpec {
    ProviderSpec {
        name: name.into(),
        kind: ProviderKind::BoxDetector,
        command: vec!["sh".into(), "-c".into(), script.into()],
        k: 3,
        timeout,
        workers,
    }
}

fn rasters(n: usize) -> Vec<OmniFrame> {
    (0..n).map(|i| OmniFrame::filled(8, 6, 1, i as u8)).collect()
}

#[test]
fn echo_provider_passes_boxes_through() {
    let script = r#"while read line; do echo '{"v":1,"boxes":[[1.5,2,3,4,0.25]]}'; done"#;
    for workers in [1, 2] {
        let mut p = ProcessProvider::spawn(shell("echo", script, 5.0, workers)).unwrap();
        let out = p.detect_all(17, &rasters(3)).unwrap();
        assert_eq!(out.len(), 3);
        for (i, d) in out.iter().enumerate() {
            assert_eq!(d.fragment_index, i);
            let b = &d.boxes[0];
            assert_eq!((b.x, b.y, b.w, b.h, b.score), (1.5, 2.0, 3.0, 4.0, 0.25));
            assert_eq!((b.frame_index, b.fragment, b.source.as_str()), (17, Some(i), "echo"));
        }
    }
}

#[test]
fn provider_sees_the_raster_it_is_asked_about() {
    // Replies with the byte size of the image named in the request.
    let script = r#"while read line; do
        f=$(printf '%s' "$line" | sed 's/.*"image":"\([^"]*\)".*/\1/')
        n=$(wc -c < "$f" | tr -d ' ')
        echo "{\"v\":1,\"boxes\":[[0,0,$n,1,1]]}"
    done"#;
    let mut p = ProcessProvider::spawn(shell("size", script, 5.0, 1)).unwrap();
    let raster = OmniFrame::filled(8, 6, 3, 9);
    let d = p.detect(0, 0, &raster).unwrap();
    assert_eq!(d.boxes[0].w, raster.encode_pnm().len() as f64);
}

#[test]
fn malformed_reply_is_a_protocol_error() {
    let mut p = ProcessProvider::spawn(shell("bad", "while read l; do echo nope; done", 5.0, 1)).unwrap();
    let err = p.detect(0, 0, &rasters(1)[0]).unwrap_err();
    assert!(matches!(err, LabelError::Protocol { .. }), "{err}");
    assert!(err.is_per_frame());
}

#[test]
fn slow_provider_times_out_and_recovers() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("slept");
    let script = format!(
        r#"while read l; do
            if [ -e '{flag}' ]; then echo '{{"v":1,"boxes":[]}}'; else touch '{flag}'; sleep 5; fi
        done"#,
        flag = flag.display()
    );
    let mut p = ProcessProvider::spawn(shell("slow", &script, 0.5, 1)).unwrap();
    let err = p.detect(4, 1, &rasters(1)[0]).unwrap_err();
    assert!(
        matches!(
            err,
            LabelError::ProviderTimeout {
                frame: 4,
                fragment: 1,
                ..
            }
        ),
        "{err}"
    );
    // The stuck process was replaced; the next request gets an answer.
    assert!(p.detect(5, 1, &rasters(1)[0]).unwrap().boxes.is_empty());
}

#[test]
fn missing_program_fails_to_spawn() {
    let spec = ProviderSpec {
        command: vec!["/nonexistent/provider".into()],
        ..shell("ghost", "", 1.0, 1)
    };
    assert!(matches!(
        ProcessProvider::spawn(spec),
        Err(LabelError::ProviderIo { .. })
    ));
}
