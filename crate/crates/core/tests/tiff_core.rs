use std::io::Cursor;

use proptest::prelude::*;
use wsi_anon::forge::tiff_writer::{ImageSpec, TagValue, TiffWriter, Written};
use wsi_anon::io::Endian;
use wsi_anon::tiff::{self, tags};
use wsi_anon::{apply_plan, Error, MemBytes};

fn pixels(n: usize, seed: u8) -> Vec<u8> {
    (0..n).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed) | 1).collect()
}

fn sample(order: Endian, big: bool) -> Written {
    let tiles: Vec<Vec<u8>> = (0..4).map(|t| pixels(16 * 16 * 3, t)).collect();
    TiffWriter::new(order, big).write(&[
        ImageSpec::tiled(32, 32, 3, 16, tiles)
            .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii("tissue|User = someone".into())),
        ImageSpec::stripped(8, 8, 3, 4, &pixels(8 * 8 * 3, 7)),
        ImageSpec::stripped(6, 4, 1, 2, &pixels(24, 9)).with(tags::DATE_TIME, TagValue::Ascii("2020:01:01 10:00:00".into())),
        ImageSpec::stripped(5, 5, 1, 5, &pixels(25, 3)),
    ])
}

fn variants() -> Vec<(Endian, bool)> {
    vec![(Endian::Little, false), (Endian::Little, true), (Endian::Big, false), (Endian::Big, true)]
}

fn count_with_reference_reader(bytes: &[u8]) -> usize {
    let mut d = ::tiff::decoder::Decoder::new(Cursor::new(bytes)).expect("reference reader opens file");
    let mut n = 1;
    while d.more_images() {
        d.next_image().expect("reference reader follows chain");
        n += 1;
    }
    n
}

#[test]
fn parser_agrees_with_writer_layout() {
    for (order, big) in variants() {
        let w = sample(order, big);
        let src = MemBytes::new(w.bytes.clone());
        let m = tiff::parse(&src).unwrap();
        assert_eq!(m.header.big_tiff, big);
        assert_eq!(m.header.byte_order, order);
        assert_eq!(m.ifds.len(), w.dirs.len());
        for (i, d) in w.dirs.iter().enumerate() {
            assert_eq!(m.ifds[i].directory_offset, d.offset);
            assert_eq!(m.ifds[i].next_offset_field_location, d.next_field);
            let mut spans = m.payload_spans(&src, i).unwrap();
            spans.sort_unstable();
            let mut want = d.payload.clone();
            want.sort_unstable();
            assert_eq!(spans, want, "directory {i}");
        }
        assert_eq!(m.description(&src, 0).unwrap().as_deref(), Some("tissue|User = someone"));
        m.check_strict(&src).unwrap();
        assert_eq!(count_with_reference_reader(&w.bytes), 4);
    }
}

#[test]
fn reference_reader_decodes_stripped_images() {
    for (order, big) in variants() {
        let w = sample(order, big);
        let mut d = ::tiff::decoder::Decoder::new(Cursor::new(&w.bytes)).unwrap();
        d.next_image().unwrap();
        assert_eq!(d.dimensions().unwrap(), (8, 8));
        match d.read_image().unwrap() {
            ::tiff::decoder::DecodingResult::U8(v) => assert_eq!(v, pixels(8 * 8 * 3, 7)),
            other => panic!("unexpected sample type {:?}", std::mem::discriminant(&other)),
        }
    }
}

#[test]
fn unlink_middle_directories_keeps_chain_valid() {
    for (order, big) in variants() {
        let w = sample(order, big);
        let src = MemBytes::new(w.bytes.clone());
        let m = tiff::parse(&src).unwrap();
        let plan = tiff::plan_unlink_ifds(&m, &[1, 2]).unwrap();
        let mut out = MemBytes::new(w.bytes.clone());
        apply_plan(&mut out, &plan).unwrap();
        let after = tiff::parse(&out).unwrap();
        assert_eq!(after.ifds.len(), 2);
        assert_eq!(after.ifds[1].directory_offset, w.dirs[3].offset);
        assert_eq!(out.as_slice().len(), w.bytes.len());
        assert_eq!(count_with_reference_reader(out.as_slice()), 2);
    }
}

#[test]
fn unlink_first_directory_moves_header_pointer() {
    let w = sample(Endian::Big, false);
    let src = MemBytes::new(w.bytes.clone());
    let m = tiff::parse(&src).unwrap();
    let plan = tiff::plan_unlink_ifd(&m, 0).unwrap();
    let mut out = MemBytes::new(w.bytes);
    apply_plan(&mut out, &plan).unwrap();
    let after = tiff::parse(&out).unwrap();
    assert_eq!(after.header.first_ifd_offset, w.dirs[1].offset);
    assert_eq!(after.ifds.len(), 3);
}

#[test]
fn unlinking_everything_is_refused() {
    let w = sample(Endian::Little, false);
    let m = tiff::parse(&MemBytes::new(w.bytes)).unwrap();
    assert!(tiff::plan_unlink_ifds(&m, &[0, 1, 2, 3]).is_err());
    assert!(tiff::plan_unlink_ifd(&m, 9).is_err());
}

#[test]
fn wipe_touches_only_payload() {
    for (order, big) in variants() {
        let w = sample(order, big);
        let src = MemBytes::new(w.bytes.clone());
        let m = tiff::parse(&src).unwrap();
        let plan = tiff::plan_wipe_image(&m, &src, 2).unwrap();
        let mut out = MemBytes::new(w.bytes.clone());
        apply_plan(&mut out, &plan).unwrap();
        let o = out.as_slice();
        for (i, (a, b)) in w.bytes.iter().zip(o).enumerate() {
            let inside = w.dirs[2].payload.iter().any(|&(s, n)| (i as u64) >= s && (i as u64) < s + n);
            if inside {
                assert_eq!(*b, 0);
            } else {
                assert_eq!(a, b, "byte {i} changed outside payload");
            }
        }
        assert_eq!(tiff::parse(&out).unwrap().ifds.len(), 4);
    }
}

#[test]
fn blank_string_keeps_length_and_terminator() {
    let w = sample(Endian::Little, true);
    let src = MemBytes::new(w.bytes.clone());
    let m = tiff::parse(&src).unwrap();
    let (off, len) = w.dirs[2].values[&tags::DATE_TIME];
    let plan = tiff::plan_blank_string(&m, 2, tags::DATE_TIME, &[(0, len - 1)]).unwrap();
    let mut out = MemBytes::new(w.bytes.clone());
    apply_plan(&mut out, &plan).unwrap();
    assert!(tiff::plan_blank_string(&m, 2, tags::DATE_TIME, &[(0, len + 1)]).is_err());
    let v = &out.as_slice()[off as usize..(off + len) as usize];
    assert!(v[..v.len() - 1].iter().all(|&b| b == tiff::FILLER));
    assert_eq!(*v.last().unwrap(), 0);
    assert!(matches!(
        tiff::plan_blank_string(&m, 1, tags::DATE_TIME, &[(0, 1)]),
        Err(Error::TagAbsent(_))
    ));
}

#[test]
fn truncated_header_is_corrupt() {
    let w = sample(Endian::Little, false);
    for n in [0usize, 3, 7] {
        let err = tiff::parse(&MemBytes::new(w.bytes[..n].to_vec())).unwrap_err();
        assert!(matches!(err, Error::CorruptStructure(_) | Error::OutOfBounds { .. } | Error::UnsupportedFormat(_)), "{n}: {err}");
    }
}

#[test]
fn cyclic_chain_is_corrupt() {
    let w = sample(Endian::Little, false);
    let mut b = w.bytes.clone();
    let at = w.dirs[3].next_field as usize;
    b[at..at + 4].copy_from_slice(&(w.dirs[1].offset as u32).to_le_bytes());
    assert!(matches!(tiff::parse(&MemBytes::new(b)), Err(Error::CorruptStructure(_))));
}

#[test]
fn next_offset_past_end_is_corrupt() {
    let w = sample(Endian::Big, true);
    let mut b = w.bytes.clone();
    let at = w.dirs[0].next_field as usize;
    b[at..at + 8].copy_from_slice(&(w.bytes.len() as u64 + 100).to_be_bytes());
    assert!(tiff::parse(&MemBytes::new(b)).is_err());
}

#[test]
fn strip_past_end_fails_strict_check() {
    let w = sample(Endian::Little, false);
    let mut b = w.bytes.clone();
    b.truncate(w.dirs[3].payload[0].0 as usize + 2);
    let src = MemBytes::new(b);
    if let Ok(m) = tiff::parse(&src) { assert!(m.check_strict(&src).is_err()) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn any_unlink_subset_leaves_survivors_in_order(mask in 1u8..15, order in any::<bool>(), big in any::<bool>()) {
        let order = if order { Endian::Big } else { Endian::Little };
        let w = sample(order, big);
        let src = MemBytes::new(w.bytes.clone());
        let m = tiff::parse(&src).unwrap();
        let drop: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let plan = tiff::plan_unlink_ifds(&m, &drop).unwrap();
        let mut out = MemBytes::new(w.bytes.clone());
        apply_plan(&mut out, &plan).unwrap();
        let after = tiff::parse(&out).unwrap();
        let want: Vec<u64> = (0..4).filter(|i| !drop.contains(i)).map(|i| w.dirs[i].offset).collect();
        let got: Vec<u64> = after.ifds.iter().map(|d| d.directory_offset).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(out.as_slice().len(), w.bytes.len());
    }

    #[test]
    fn parser_never_panics_on_mutations(pos in 0usize..400, val in any::<u8>(), order in any::<bool>(), big in any::<bool>()) {
        let order = if order { Endian::Big } else { Endian::Little };
        let mut b = sample(order, big).bytes;
        let n = b.len();
        b[pos % n] = val;
        let src = MemBytes::new(b);
        if let Ok(m) = tiff::parse(&src) {
            let _ = m.check_strict(&src);
            for i in 0..m.ifds.len() {
                let _ = m.payload_spans(&src, i);
            }
        }
    }
}
