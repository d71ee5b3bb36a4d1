use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sporegen::dataset::{frame_file_name, MANIFEST_FILE};
use sporegen::Manifest;

fn sporegen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sporegen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_manifest(dir: &Path) -> Manifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn generate_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let gen = sporegen(&[
        "generate",
        "--seed",
        "7",
        "--frames",
        "10",
        "--spores",
        "40",
        "--width",
        "96",
        "--height",
        "64",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));

    for i in 0..10 {
        assert!(out.join(frame_file_name(i)).is_file(), "frame {i} missing");
    }
    assert!(!out.join(frame_file_name(10)).exists());
    let manifest = read_manifest(&out);
    assert_eq!(manifest.frames.len(), 10);
    assert_eq!(manifest.config.seed, 7);
    assert_eq!(manifest.config.render.width, 96);

    let manifest_path = out.join(MANIFEST_FILE);
    let ver = sporegen(&["verify", "--manifest", manifest_path.to_str().unwrap()]);
    assert_eq!(ver.status.code(), Some(0), "{}", stdout(&ver));
    assert!(stdout(&ver).contains("PASS image_hashes"));
}

#[test]
fn single_frame_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let gen = sporegen(&["generate", "--frames", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(1));
    assert!(stderr(&gen).contains("total_frames"), "{}", stderr(&gen));
    assert!(!out.exists());
}

#[test]
fn bad_config_file_reports_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, "{\n  \"seed\": 3,\n  \"total_frames\": }\n").unwrap();
    let gen = sporegen(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(1));
    assert!(stderr(&gen).contains(":3:"), "{}", stderr(&gen));

    fs::write(&cfg, r#"{"lifecycle": {"initial_spores": "many"}}"#).unwrap();
    let gen = sporegen(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(1));
    assert!(
        stderr(&gen).contains("lifecycle.initial_spores"),
        "{}",
        stderr(&gen)
    );
}

#[test]
fn usage_errors_and_help() {
    let bad = sporegen(&["generate", "--no-such-flag"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!stderr(&bad).is_empty());

    let none = sporegen(&[]);
    assert_eq!(none.status.code(), Some(1));

    let help = sporegen(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for cmd in ["generate", "verify", "selftest"] {
        assert!(stdout(&help).contains(cmd), "{}", stdout(&help));
    }

    let sub_help = sporegen(&["generate", "--help"]);
    assert_eq!(sub_help.status.code(), Some(0));
    assert!(stdout(&sub_help).contains("--workers"));
}

#[test]
fn verify_missing_manifest_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("nope.json");
    let ver = sporegen(&["verify", "--manifest", path.to_str().unwrap()]);
    assert_eq!(ver.status.code(), Some(1));
    assert!(stderr(&ver).contains("nope.json"));
}

#[test]
fn verify_detects_tampering_with_runtime_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let gen = sporegen(&[
        "generate",
        "--frames",
        "4",
        "--spores",
        "10",
        "--width",
        "32",
        "--height",
        "32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let img = out.join(frame_file_name(2));
    let mut bytes = fs::read(&img).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x01;
    fs::write(&img, bytes).unwrap();

    let ver = sporegen(&[
        "verify",
        "--manifest",
        out.join(MANIFEST_FILE).to_str().unwrap(),
    ]);
    assert_eq!(ver.status.code(), Some(2));
    assert!(stdout(&ver).contains("FAIL image_hashes"));
}

#[test]
fn flag_overrides_match_an_edited_config() {
    let tmp = tempfile::tempdir().unwrap();
    let via_flags = tmp.path().join("flags");
    let via_config = tmp.path().join("config");

    let gen = sporegen(&[
        "generate",
        "--seed",
        "11",
        "--frames",
        "6",
        "--spores",
        "25",
        "--width",
        "48",
        "--height",
        "40",
        "--out",
        via_flags.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));

    let cfg = tmp.path().join("cfg.json");
    let text = serde_json::json!({
        "seed": 11,
        "total_frames": 6,
        "output_dir": via_config,
        "lifecycle": { "initial_spores": 25 },
        "render": { "width": 48, "height": 40 },
    });
    fs::write(&cfg, text.to_string()).unwrap();
    let gen = sporegen(&["generate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));

    assert_eq!(listing(&via_flags), listing(&via_config));
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"seed": 1, "total_frames": 50, "render": {"width": 20, "height": 20}}"#,
    )
    .unwrap();
    let gen = sporegen(&[
        "generate",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--frames",
        "3",
        "--spores",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let m = read_manifest(&out);
    assert_eq!(m.config.seed, 2);
    assert_eq!(m.config.total_frames, 3);
    assert_eq!(m.config.render.width, 20);
    assert_eq!(m.frames.len(), 3);
}

#[test]
fn verbose_prints_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let gen = sporegen(&[
        "-v",
        "generate",
        "--frames",
        "2",
        "--spores",
        "3",
        "--width",
        "16",
        "--height",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0), "{}", stderr(&gen));
    let echoed: serde_json::Value = serde_json::from_str(&stderr(&gen)).unwrap();
    assert_eq!(echoed["total_frames"], 2);
    assert_eq!(echoed["lifecycle"]["initial_spores"], 3);
}

#[test]
fn selftest_subcommand_reports_every_law() {
    let run = sporegen(&["selftest"]);
    assert_eq!(run.status.code(), Some(0), "{}", stdout(&run));
    let text = stdout(&run);
    assert!(text.contains("branch_angle"));
    assert!(text.contains("poisson(3)"));
    assert!(text.contains("all 13 laws pass"));

    let bad = sporegen(&["selftest", "--alpha", "2"]);
    assert_eq!(bad.status.code(), Some(1));
}
