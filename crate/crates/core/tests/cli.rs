use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn primocr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_primocr"))
        .args(args)
        .output()
        .expect("spawn primocr")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn samples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../samples")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn one_line_error(out: &Output) {
    assert_eq!(out.status.code(), Some(2), "{}", stderr(out));
    let err = stderr(out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn version_and_help() {
    let v = primocr(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).contains(env!("CARGO_PKG_VERSION")));
    let h = primocr(&["--help"]);
    assert!(h.status.success());
    let text = String::from_utf8_lossy(&h.stdout).into_owned();
    for cmd in ["recognize", "render", "eval", "--print-config"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(primocr(&[]).status.code(), Some(2));
    assert_eq!(primocr(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(primocr(&["recognize"]).status.code(), Some(2));
    assert_eq!(primocr(&["--jobs", "0", "recognize", "x.pgm"]).status.code(), Some(2));
}

#[test]
fn missing_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.pgm");
    let out = primocr(&["recognize", s(&missing)]);
    one_line_error(&out);
    assert!(stderr(&out).contains("absent.pgm"));

    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P5\n3 3\n255\n\x00").unwrap();
    one_line_error(&primocr(&["recognize", s(&bad)]));
}

#[test]
fn missing_template_file_is_named() {
    let page = samples().join("pages/page01.pgm");
    let out = primocr(&["recognize", s(&page), "--civ", "/nonexistent/table.civ"]);
    one_line_error(&out);
    assert!(stderr(&out).contains("/nonexistent/table.civ"));
}

#[test]
fn blank_page_gives_empty_output() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pgm");
    let mut bytes = b"P5\n40 30\n255\n".to_vec();
    bytes.extend(std::iter::repeat_n(255u8, 40 * 30));
    std::fs::write(&blank, bytes).unwrap();
    let out = primocr(&["recognize", s(&blank)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn recognize_prints_rows() {
    let out = primocr(&["recognize", s(&samples().join("pages/page01.pgm"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
}

#[test]
fn dump_dir_receives_stage_images() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("stages");
    let out = primocr(&["recognize", s(&samples().join("pages/page01.pgm")), "--dump-dir", s(&dump)]);
    assert!(out.status.success(), "{}", stderr(&out));
    for name in ["binarized.pgm", "filtered.pgm", "normalized.pgm", "band_000.pgm", "skeleton_000.pgm"] {
        let bytes = std::fs::read(dump.join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        assert!(bytes.starts_with(b"P5"));
    }
}

#[test]
fn render_is_deterministic_and_matches_samples() {
    let dir = tempfile::tempdir().unwrap();
    let spec = samples().join("pages/page03.spec");
    for prefix in ["a", "b"] {
        let out = primocr(&["render", s(&spec), "-o", s(&dir.path().join(prefix))]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for ext in ["pgm", "truth"] {
        let a = std::fs::read(dir.path().join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("b.{ext}"))).unwrap();
        let committed = std::fs::read(samples().join(format!("pages/page03.{ext}"))).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, committed, "page03.{ext} differs from a fresh render");
    }
}

#[test]
fn render_rejects_unknown_letter_and_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("x.spec");
    std::fs::write(&spec, "row ب,Q\n").unwrap();
    one_line_error(&primocr(&["render", s(&spec), "-o", s(&dir.path().join("x"))]));
    assert!(!dir.path().join("x.pgm").exists());
    std::fs::write(&spec, "stroke_width = wide\nrow ب\n").unwrap();
    one_line_error(&primocr(&["render", s(&spec), "-o", s(&dir.path().join("x"))]));
}

#[test]
fn eval_matches_golden_report() {
    let out = primocr(&["eval", s(&samples().join("pages"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    let golden = std::fs::read(samples().join("golden_report.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&golden));
}

#[test]
fn eval_needs_pairs_and_skips_bad_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    one_line_error(&primocr(&["eval", s(dir.path())]));

    let src = samples().join("pages");
    for name in ["page01.pgm", "page01.truth", "page02.pgm"] {
        std::fs::copy(src.join(name), dir.path().join(name)).unwrap();
    }
    std::fs::write(dir.path().join("page02.truth"), "row 0 baseline x\n").unwrap();
    let out = primocr(&["eval", s(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("page02.truth"), "{}", stderr(&out));
    let single = primocr(&["eval", s(&{
        let d = dir.path().join("one");
        std::fs::create_dir(&d).unwrap();
        for name in ["page01.pgm", "page01.truth"] {
            std::fs::copy(src.join(name), d.join(name)).unwrap();
        }
        d
    })]);
    assert_eq!(out.stdout, single.stdout);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("primocr.conf");
    std::fs::write(&cfg, "spur_length = 3\ncolour = blue\n").unwrap();
    let out = primocr(&["--config", s(&cfg), "--print-config"]);
    one_line_error(&out);
    assert!(stderr(&out).contains("colour"));

    std::fs::write(&cfg, "spur_length = 3\nciv_db_path = /nonexistent/table.civ\n").unwrap();
    let page = samples().join("pages/page01.pgm");
    one_line_error(&primocr(&["--config", s(&cfg), "recognize", s(&page)]));
    let civ = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/civ.txt");
    let out = primocr(&["--config", s(&cfg), "--civ", s(&civ), "recognize", s(&page)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let printed = primocr(&["--config", s(&cfg), "--print-config"]);
    let text = String::from_utf8(printed.stdout).unwrap();
    assert!(text.contains("spur_length = 3\n"));
    std::fs::write(&cfg, &text).unwrap();
    let again = primocr(&["--config", s(&cfg), "--print-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn jobs_do_not_change_output() {
    let pages = samples().join("pages");
    let one = primocr(&["--jobs", "1", "eval", s(&pages)]);
    let eight = primocr(&["--jobs", "8", "eval", s(&pages)]);
    assert!(one.status.success() && eight.status.success());
    assert_eq!(one.stdout, eight.stdout);
}
