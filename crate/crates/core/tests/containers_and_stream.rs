mod common;

use common::*;
use wsi_anon::forge::{forge_bytes, ForgeOptions, SentinelProfile};
use wsi_anon::stream::SessionState;
use wsi_anon::tiff::ImageKind;
use wsi_anon::vendors::{isyntax, mirax};
use wsi_anon::{anonymize, AnonymizationConfig, Error, MemBytes, NewName, PolicyLevel, StreamSession, Vendor};

#[test]
fn mirax_unlinks_and_renumbers_records() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Mirax, 31, tmp.path());
    let before = mirax::open_mirax(&f.primary).unwrap();
    let index_len = std::fs::metadata(before.index_path()).unwrap().len();
    let data_lens: Vec<u64> = (0..before.data_files.len())
        .map(|i| std::fs::metadata(before.data_path(i)).unwrap().len())
        .collect();

    let r = anonymize(&f.primary, &AnonymizationConfig::default()).unwrap();
    let after = mirax::open_mirax(&r.output).unwrap();
    assert_eq!(std::fs::metadata(after.index_path()).unwrap().len(), index_len);
    for (i, n) in data_lens.iter().enumerate() {
        assert_eq!(std::fs::metadata(after.data_path(i)).unwrap().len(), *n);
    }
    assert_eq!(after.index.len(), before.index.len());
    let unlinked = after.index.iter().filter(|r| !r.is_linked()).count();
    assert_eq!(unlinked, 2);
    assert!(after.layers.iter().all(|l| !matches!(l.kind, ImageKind::Label | ImageKind::Macro)));
    for r in after.index.iter().filter(|r| r.is_linked()) {
        assert!(after.layer_for(r).is_some(), "linked record without a layer: {r:?}");
    }
    let ini = String::from_utf8_lossy(&after.slidedat.text).into_owned();
    assert!(!ini.to_ascii_lowercase().contains("barcode"));
    assert!(ini.contains("\r\n"), "line endings kept");
}

#[test]
fn mirax_keep_macro_only_removes_label() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Mirax, 32, tmp.path());
    let cfg = AnonymizationConfig { keep_macro: true, ..Default::default() };
    let r = anonymize(&f.primary, &cfg).unwrap();
    let c = mirax::open_mirax(&r.output).unwrap();
    let macros = c.records_of_kind(ImageKind::Macro);
    assert_eq!(macros.len(), 1);
    assert!(c.records_of_kind(ImageKind::Label).is_empty());
    let data: Vec<_> = (0..c.data_files.len()).map(|i| wsi_anon::open_source(c.data_path(i)).unwrap()).collect();
    let views: Vec<&dyn wsi_anon::ByteSource> = data.iter().map(|d| d as &dyn wsi_anon::ByteSource).collect();
    assert!(mirax::read_blob(macros[0], &views).unwrap().iter().any(|&b| b != 0));
}

#[test]
fn mirax_with_missing_data_file_is_corrupt_and_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::Mirax, 33, tmp.path());
    let c = mirax::open_mirax(&f.primary).unwrap();
    std::fs::remove_file(c.data_path(1)).unwrap();
    let before = snapshot(tmp.path());
    let e = anonymize(&f.primary, &AnonymizationConfig::default()).unwrap_err();
    assert!(matches!(e, Error::CorruptContainer(_) | Error::Io { .. }), "{e}");
    assert_eq!(snapshot(tmp.path()), before);
}

#[test]
fn isyntax_body_is_preserved_and_images_blank() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::PhilipsISyntax, 34, tmp.path());
    let original = std::fs::read(&f.primary).unwrap();
    let end = f.truth.header_end.unwrap() as usize;
    let r = anonymize(&f.primary, &AnonymizationConfig::default()).unwrap();
    let out = std::fs::read(&r.output).unwrap();
    assert_eq!(out.len(), original.len());
    assert_eq!(&out[end..], &original[end..]);
    let h = isyntax::parse_header(&MemBytes::new(out)).unwrap();
    for img in h.images.iter().filter(|i| i.kind == ImageKind::Label || i.kind == ImageKind::Macro) {
        let bytes = isyntax::decode_payload(h.text(&img.payload)).unwrap();
        let (w, hh, px) = isyntax::parse_ppm(&bytes).unwrap();
        assert!(w >= 1 && hh >= 1);
        assert!(px.iter().all(|&b| b == 0));
        assert!(isyntax::is_blank_payload(h.text(&img.payload)));
    }
    let dt = h.attribute("DICOM_ACQUISITION_DATETIME").unwrap();
    assert!(h.text(dt).starts_with(b"19700101"));
    assert!(isyntax::attributes_blank(&h));
}

#[test]
fn isyntax_without_end_of_header_is_corrupt() {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(Vendor::PhilipsISyntax, 35, tmp.path());
    let mut b = std::fs::read(&f.primary).unwrap();
    let end = f.truth.header_end.unwrap() as usize;
    b.truncate(end - 1);
    std::fs::write(&f.primary, &b).unwrap();
    let e = anonymize(&f.primary, &AnonymizationConfig::default()).unwrap_err();
    assert!(matches!(e, Error::CorruptStructure(_)), "{e}");
    assert_eq!(std::fs::read(&f.primary).unwrap(), b);
}

fn file_run(v: Vendor, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let tmp = tempfile::tempdir().unwrap();
    let f = fixture(v, seed, tmp.path());
    let input = std::fs::read(&f.primary).unwrap();
    let r = anonymize(&f.primary, &AnonymizationConfig::default()).unwrap();
    (input, std::fs::read(r.output).unwrap())
}

#[test]
fn stream_matches_file_run_for_any_split() {
    for v in SINGLE_FILE {
        let (input, expected) = file_run(v, 36);
        for parts in [1usize, 2, 3, 7, 64] {
            let mut s = StreamSession::new(format!("slide.{}", v.extension()));
            let step = input.len().div_ceil(parts);
            for c in input.chunks(step) {
                s.feed(c).unwrap();
            }
            assert_eq!(s.bytes_received(), input.len() as u64);
            let out = s.finalize(&AnonymizationConfig::default()).unwrap();
            assert_eq!(out, expected, "{v} in {parts} parts");
            assert_eq!(s.outcome().unwrap().level, PolicyLevel::L4MetadataClean);
        }
    }
}

#[test]
fn stream_session_lifecycle() {
    let mut s = StreamSession::new("a.svs");
    assert_eq!(s.state(), SessionState::Accepting);
    assert!(matches!(s.finalize(&AnonymizationConfig::default()), Err(Error::UnsupportedFormat(_))));
    assert_eq!(s.state(), SessionState::Finalized);
    assert!(matches!(s.feed(b"x"), Err(Error::SessionFinalized)));
    assert!(matches!(s.finalize(&AnonymizationConfig::default()), Err(Error::SessionFinalized)));
}

#[test]
fn stream_ignores_rename_and_backup() {
    let p = SentinelProfile::generate(Vendor::Aperio, 37);
    let forged = forge_bytes(Vendor::Aperio, 37, &p, &ForgeOptions::default()).unwrap();
    let bytes = &forged.files[0].1;
    let mut a = StreamSession::new("a.svs");
    a.feed(bytes).unwrap();
    let plain = a.finalize(&AnonymizationConfig::default()).unwrap();
    let mut b = StreamSession::new("a.svs");
    b.feed(bytes).unwrap();
    let cfg = AnonymizationConfig {
        rename: Some(NewName::Random),
        backup_dir: Some("/nonexistent/backup".into()),
        ..Default::default()
    };
    assert_eq!(b.finalize(&cfg).unwrap(), plain);
}

#[test]
fn stream_keep_macro_refusal_and_dry_run() {
    let p = SentinelProfile::generate(Vendor::Ventana, 38);
    let forged = forge_bytes(Vendor::Ventana, 38, &p, &ForgeOptions::default()).unwrap();
    let bytes = forged.files[0].1.clone();
    let mut s = StreamSession::new("a.bif");
    s.feed(&bytes).unwrap();
    let cfg = AnonymizationConfig { keep_macro: true, ..Default::default() };
    assert!(matches!(s.finalize(&cfg), Err(Error::LabelNotSeparable(_))));

    let mut s = StreamSession::new("a.bif");
    s.feed(&bytes).unwrap();
    let out = s.finalize(&AnonymizationConfig { dry_run: true, ..Default::default() }).unwrap();
    assert_eq!(out, bytes);
    assert!(s.outcome().unwrap().patches_planned > 0);
    assert_eq!(s.outcome().unwrap().patches_applied, 0);
}
