//! The checked-in fp8 output of `bfp gen` compiles and works, and the
//! generator still produces it byte for byte.

use bfp_cli::config::parse_config;
use bfp_cli::generate::{generate, Manifest, ENTRY_POINTS, MANIFEST_FILE, SOURCE_FILE};

mod fp8 {
    include!("golden/fp8/bfp_format.rs");
}

const FP8_CONFIG: &str = "exp_bits=4\nsig_bits=3\nrounding=RZ\nname=fp8\n";
const GOLDEN_SOURCE: &str = include_str!("golden/fp8/bfp_format.rs");
const GOLDEN_MANIFEST: &str = include_str!("golden/fp8/manifest.json");

#[test]
fn generated_entry_points_compute() {
    let x = fp8::pack(&[0x3c, 0x38, 0x3d, 0x38]).unwrap();
    let y = fp8::pack(&[0x42, 0x40, 0x3b, 0x44]).unwrap();
    assert_eq!(fp8::unpack(&fp8::add(&x, &y), 4).unwrap(), [0x48, 0x44, 0x44, 0x48]);
    assert_eq!(fp8::unpack(&fp8::mul(&x, &y), 4).unwrap()[..3], [0x47, 0x40, 0x40]);
    assert_eq!(fp8::unpack(&fp8::div(&x, &y), 4).unwrap()[3], 0x2a);
    assert_eq!(fp8::unpack(&fp8::sub(&y, &x), 1).unwrap(), [0x38]);
    assert_eq!(fp8::LANE_WIDTH, 256);
    assert_eq!(fp8::spec().bias(), fp8::BIAS);
}

#[test]
fn regenerating_matches_golden_files() {
    let cfg = parse_config(FP8_CONFIG).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = generate(&cfg.spec, 256, dir.path()).unwrap();
    assert_eq!(m.entry_points, ENTRY_POINTS);
    let source = std::fs::read_to_string(dir.path().join(SOURCE_FILE)).unwrap();
    let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(source, GOLDEN_SOURCE);
    assert_eq!(manifest, GOLDEN_MANIFEST);

    generate(&cfg.spec, 256, dir.path()).unwrap();
    let again = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(again, manifest);
}

#[test]
fn renaming_only_changes_the_name() {
    let a = parse_config(FP8_CONFIG).unwrap();
    let b = parse_config(&FP8_CONFIG.replace("name=fp8", "name=tiny")).unwrap();
    let ma: serde_json::Value = serde_json::from_str(&Manifest::new(&a.spec, 64).to_json()).unwrap();
    let mb: serde_json::Value = serde_json::from_str(&Manifest::new(&b.spec, 64).to_json()).unwrap();
    let (oa, ob) = (ma.as_object().unwrap(), mb.as_object().unwrap());
    let differing: Vec<&String> = oa.keys().filter(|k| oa[*k] != ob[*k]).collect();
    assert_eq!(differing, ["name"]);
}
