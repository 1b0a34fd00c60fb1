mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use wsi_anon::Vendor;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsi-anon"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn default_run_reports_l4() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Aperio, 1, tmp.path());
    let o = bin(&[s(&f.primary)], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.contains(" L4 "), "{line}");
}

#[test]
fn keep_macro_on_ndpi_is_refused_with_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Hamamatsu, 2, tmp.path());
    let before = snapshot(tmp.path());
    let o = bin(&[s(&f.primary), "--keep-macro"], tmp.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(!o.stderr.is_empty());
    assert_eq!(snapshot(tmp.path()), before);
}

#[test]
fn detect_prints_vendor_id() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Mirax, 3, tmp.path());
    let o = bin(&["--detect", s(&f.primary)], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "3dhistech-mirax");

    let g = fixture(Vendor::PhilipsISyntax, 3, &tmp.path().join("i"));
    let o = bin(&["--detect", s(&f.primary), s(&g.primary)], tmp.path());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].ends_with(": 3dhistech-mirax"));
    assert!(lines[1].ends_with(": philips-isyntax"));
}

#[test]
fn exit_codes_follow_error_classes() {
    let tmp = tempfile::tempdir().unwrap();
    let txt = tmp.path().join("notes.txt");
    std::fs::write(&txt, "just text").unwrap();
    assert_eq!(bin(&[s(&txt)], tmp.path()).status.code(), Some(1));
    let o = bin(&["--detect", s(&txt)], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).trim(), "unknown");

    let f = fixture(Vendor::Aperio, 4, &tmp.path().join("c"));
    let mut b = std::fs::read(&f.primary).unwrap();
    let past = (b.len() as u32 + 64).to_le_bytes();
    b[4..8].copy_from_slice(&past);
    std::fs::write(&f.primary, &b).unwrap();
    assert_eq!(bin(&[s(&f.primary)], tmp.path()).status.code(), Some(2));

    assert_eq!(bin(&["/nonexistent/x.svs"], tmp.path()).status.code(), Some(3));
    assert_eq!(bin(&["--no-such-flag", s(&txt)], tmp.path()).status.code(), Some(5));
    assert_eq!(bin(&[], tmp.path()).status.code(), Some(5));
    assert_eq!(bin(&["--help"], tmp.path()).status.code(), Some(0));
}

#[test]
fn dry_run_never_modifies_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["--dry-run".to_string(), "--random-name".to_string()];
    for v in VENDORS {
        let f = fixture(v, 5, &tmp.path().join(v.id()));
        args.push(s(&f.primary).to_string());
    }
    let before = snapshot(tmp.path());
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = bin(&argv, tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), VENDORS.len());
    assert_eq!(snapshot(tmp.path()), before);
}

#[test]
fn json_lines_are_ordered_and_parseable() {
    let tmp = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for v in VENDORS {
        paths.push(fixture(v, 6, &tmp.path().join(v.id())).primary);
    }
    let missing = tmp.path().join("gone.svs");
    let mut argv = vec!["--json", "--parallel", "3"];
    argv.extend(paths.iter().map(|p| s(p)));
    argv.push(s(&missing));
    let o = bin(&argv, tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    let recs: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), paths.len() + 1);
    for (r, p) in recs.iter().zip(&paths) {
        assert_eq!(r["input"].as_str().unwrap(), s(p));
        assert_eq!(r["achieved_level"], "L4");
    }
    assert_eq!(recs.last().unwrap()["exit_code"], 3);
}

#[test]
fn audit_with_sentinel_file() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Ventana, 7, &tmp.path().join("v"));
    let sent = tmp.path().join("sentinels.txt");
    std::fs::write(&sent, f.profile.strings().join("\n")).unwrap();
    let o = bin(&["--audit", "--sentinels", s(&sent), s(&f.primary)], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "L0");

    let o = bin(&["--rename", "clean", "--quiet", s(&f.primary)], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let out = tmp.path().join("v").join("clean.bif");
    let o = bin(&["--audit", "--sentinels", s(&sent), s(&out)], tmp.path());
    assert_eq!(stdout(&o).trim(), "L4");
}

#[test]
fn anonymize_with_sentinels_below_l4_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Aperio, 8, tmp.path());
    let sent = tmp.path().join("s.txt");
    std::fs::write(&sent, f.profile.strings().join("\n")).unwrap();
    let o = bin(&["--sentinels", s(&sent), s(&f.primary)], tmp.path());
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains(" L0 "));
}

#[test]
fn rename_with_exact_name_needs_single_input() {
    let tmp = tempfile::tempdir().unwrap();
    let a = fixture(Vendor::Aperio, 9, &tmp.path().join("a")).primary;
    let b = fixture(Vendor::Aperio, 10, &tmp.path().join("b")).primary;
    let before = snapshot(tmp.path());
    assert_eq!(bin(&["--rename", "x", s(&a), s(&b)], tmp.path()).status.code(), Some(5));
    assert_eq!(bin(&["--rename", "x", "--random-name", s(&a)], tmp.path()).status.code(), Some(5));
    assert_eq!(bin(&[s(&a), "--rename"], tmp.path()).status.code(), Some(5));
    assert_eq!(snapshot(tmp.path()), before);
    let o = bin(&["--random-name", s(&a), s(&b)], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!a.exists() && !b.exists());
}

#[test]
fn forge_mode_writes_fixture_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = bin(&["--forge", "roche-ventana", "--seed", "3", "--variant", "be-bigtiff", "--out-dir", s(&out)], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let listed = stdout(&o);
    assert_eq!(listed.lines().count(), 2);
    assert!(listed.contains(".manifest.txt"));
    let m = wsi_anon::forge::Manifest::read(Path::new(listed.lines().last().unwrap())).unwrap();
    assert_eq!(m.get("variant"), Some("be-bigtiff"));
    assert_eq!(bin(&["--forge", "nope", "--out-dir", s(&out)], tmp.path()).status.code(), Some(5));
    assert_eq!(bin(&["--forge", "leica-aperio", "--variant", "xx"], tmp.path()).status.code(), Some(5));
}
