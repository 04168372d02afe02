//! End-to-end flows through the public API.

use std::io::Cursor;
use std::path::Path;

use orbitframe::diagnose::{diagnose_weight, FrameClass};
use orbitframe::frames::{canonical_dual, frame_bounds, FrameSequence};
use orbitframe::kaczmarz::{auxiliary_sequence, Exponentials};
use orbitframe::measures::{space_of, Measure};
use orbitframe::scenario;
use orbitframe::weights::{weak_a2_constant, Weight};
use orbitframe::Error;

#[test]
fn measure_json_to_auxiliary_frame() {
    let nu = Measure::from_json(r#"{"kind":"atomic","atoms":[[0.0,0.25],[0.5,0.75]]}"#).unwrap();
    let s = space_of(&nu);
    let g = auxiliary_sequence(&Exponentials::new(&nu), 40, &s).unwrap();
    let fs = FrameSequence::from_auxiliary(&g).unwrap();
    let r = frame_bounds(&fs, 40).unwrap();
    // Auxiliary sequences of effective streams are Parseval.
    assert!((r.lower_bound - 1.0).abs() < 1e-9 && (r.upper_bound - 1.0).abs() < 1e-9, "{r:?}");
    let dual = canonical_dual(&fs, 40).unwrap();
    let dv = dual.vectors(40).unwrap();
    let gv = fs.vectors(40).unwrap();
    let gap = dv.iter().zip(&gv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(gap < 1e-9, "Parseval frames are self-dual: {gap}");
}

#[test]
fn csv_weight_round_trip() {
    let text = "1\n".repeat(32) + &"4\n".repeat(32);
    let w = Weight::from_csv(Cursor::new(text)).unwrap();
    assert_eq!(w.cells(), 64);
    let r = weak_a2_constant(&w, 5).unwrap();
    assert!(r.weak_a2_constant.is_finite());
    let d = diagnose_weight(&w, 5, 16).unwrap();
    assert_eq!(d.classification, FrameClass::Frame);
    assert!(w.resolved(256).is_err(), "custom weights keep their resolution");
}

#[test]
fn csv_weight_rejects_garbage() {
    assert!(matches!(Weight::from_csv(Cursor::new("1\nabc\n")), Err(Error::Parse(m)) if m.contains("line 2")));
    assert!(Weight::from_csv(Cursor::new("0\n0\n")).is_err());
    assert!(Weight::from_csv(Cursor::new("1\n-2\n")).is_err());
}

#[test]
fn scenario_files_parse_and_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let sc = scenario::load(&path).unwrap();
            let o = scenario::run(&sc, &dir, None).unwrap();
            let expect_pass = !sc.name.ends_with("_bounded");
            assert_eq!(o.passed, expect_pass, "{}", sc.name);
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

#[test]
fn reference_artifacts_are_stable() {
    let a = scenario::reference_artifacts().unwrap();
    let b = scenario::reference_artifacts().unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|(_, c)| c.ends_with('\n') && c.lines().count() >= 2));
}
