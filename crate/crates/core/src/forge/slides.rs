//! Per-vendor fixture builders.

use std::fmt::Write as _;
use std::path::PathBuf;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use super::tiff_writer::{ImageSpec, TagValue, TiffWriter, Written};
use super::{
    ForgeOptions, Forged, GroundTruth, SentinelProfile, ROLE_BARCODE, ROLE_CASE_ID,
    ROLE_LABEL_NOTE, ROLE_LABEL_TEXT,
};
use crate::format::find;
use crate::tiff::{tags, ImageKind};
use crate::vendors::isyntax::{self, END_OF_HEADER};
use crate::vendors::mirax::RECORD_LEN;

const TILE: u32 = 32;
const LABEL_W: u32 = 32;
const LABEL_H: u32 = 16;
const MACRO_W: u32 = 48;
const MACRO_H: u32 = 16;
const COMBINED_W: u32 = 64;
const COMBINED_H: u32 = 24;

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

/// Label pixels: the motif repeated, with the label texts written into rows.
fn label_pixels(p: &SentinelProfile, w: u32, h: u32) -> Vec<u8> {
    let motif = p.label_pixel_pattern();
    let n = (w * h * 3) as usize;
    let mut px: Vec<u8> = motif.iter().copied().cycle().take(n).collect();
    let row = (w * 3) as usize;
    let texts = [
        p.must(ROLE_CASE_ID),
        p.must(ROLE_LABEL_TEXT),
        p.must(ROLE_LABEL_NOTE),
        p.must(ROLE_BARCODE),
    ];
    for (i, t) in texts.iter().enumerate() {
        let at = row * (1 + 3 * i) + 6;
        if at + t.len() <= n {
            px[at..at + t.len()].copy_from_slice(t.as_bytes());
        }
    }
    px
}

/// Overview of the whole glass: label region on the left, tissue on the
/// right, optionally framed by red scan-region boxes.
fn combined_pixels(p: &SentinelProfile, rng: &mut ChaCha8Rng, boxes: bool) -> Vec<u8> {
    let (w, h) = (COMBINED_W as usize, COMBINED_H as usize);
    let label_w = LABEL_W as usize;
    let label = label_pixels(p, LABEL_W, COMBINED_H);
    let mut px = noise(rng, w * h * 3);
    for y in 0..h {
        let src = &label[y * label_w * 3..(y + 1) * label_w * 3];
        px[y * w * 3..y * w * 3 + label_w * 3].copy_from_slice(src);
    }
    if boxes {
        for (x0, y0, x1, y1) in [(36, 2, 50, 10), (40, 12, 60, 21)] {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if y == y0 || y == y1 || x == x0 || x == x1 {
                        let o = (y * w + x) * 3;
                        px[o..o + 3].copy_from_slice(&[0xFF, 0, 0]);
                    }
                }
            }
        }
    }
    px
}

fn tissue_tiles(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<u8>> {
    (0..n)
        .map(|_| noise(rng, (TILE * TILE * 3) as usize))
        .collect()
}

fn assoc(spec: ImageSpec, opts: &ForgeOptions) -> ImageSpec {
    if opts.compressed_associated {
        ImageSpec {
            compression: 7,
            ..spec
        }
    } else {
        spec
    }
}

/// Locates each catalog value inside a tag value and records its span.
fn attribute_spans(
    p: &SentinelProfile,
    keys: &[&str],
    written: &Written,
    dir: usize,
    tag: u16,
    text: &[u8],
    out: &mut Vec<(String, u64, u64)>,
) {
    let (base, _) = written.dirs[dir].values[&tag];
    for k in keys {
        let v = p.must(k);
        if let Some(at) = find(text, v.as_bytes()) {
            out.push((k.to_string(), base + at as u64, v.len() as u64));
        }
    }
}

fn tiff_truth(written: &Written, tissue: &[usize], associated: Vec<(usize, ImageKind)>) -> GroundTruth {
    GroundTruth {
        directories: written.dirs.len(),
        associated,
        tissue_spans: tissue
            .iter()
            .flat_map(|&i| written.dirs[i].payload.iter().copied())
            .collect(),
        ..Default::default()
    }
}

pub(super) fn aperio(p: &SentinelProfile, opts: &ForgeOptions, rng: &mut ChaCha8Rng) -> Forged {
    let head = "Aperio Image Library v12.0.15";
    // some keys unspaced on purpose
    let desc = format!(
        "{head} \r\n64x64 [0,0 64x64] (32x32) RAW Q=100|AppMag = 20|StripeWidth = 2040|ScanScope ID = {}|Filename = {}|Date = {}|Time={}|User={}|MPP = 0.4990",
        p.must("ScanScope ID"),
        p.must("Filename"),
        p.must("Date"),
        p.must("Time"),
        p.must("User"),
    );
    let tissue = ImageSpec::tiled(64, 64, 3, TILE, tissue_tiles(rng, 4))
        .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii(desc.clone()));
    let thumb = ImageSpec::stripped(16, 16, 3, 16, &noise(rng, 16 * 16 * 3))
        .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii(format!("{head} \r\n64x64 -> 16x16 - ")));
    let label = assoc(
        ImageSpec::stripped(LABEL_W, LABEL_H, 3, 8, &label_pixels(p, LABEL_W, LABEL_H))
            .with(tags::NEW_SUBFILE_TYPE, TagValue::Long(vec![1]))
            .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii(format!("{head}\r\nlabel {LABEL_W}x{LABEL_H}"))),
        opts,
    );
    let macro_ = assoc(
        ImageSpec::stripped(MACRO_W, MACRO_H, 3, 8, &noise(rng, (MACRO_W * MACRO_H * 3) as usize))
            .with(tags::NEW_SUBFILE_TYPE, TagValue::Long(vec![9]))
            .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii(format!("{head}\r\nmacro {MACRO_W}x{MACRO_H}"))),
        opts,
    );
    let written = TiffWriter::new(opts.order, opts.big_tiff).write(&[tissue, thumb, label, macro_]);
    let mut truth = tiff_truth(
        &written,
        &[0, 1],
        vec![(2, ImageKind::Label), (3, ImageKind::Macro)],
    );
    attribute_spans(
        p,
        &["ScanScope ID", "Date", "Time", "User", "Filename"],
        &written,
        0,
        tags::IMAGE_DESCRIPTION,
        desc.as_bytes(),
        &mut truth.attributes,
    );
    Forged {
        files: vec![(format!("{}.svs", p.must(ROLE_CASE_ID)).into(), written.bytes)],
        truth,
    }
}

pub(super) fn hamamatsu(p: &SentinelProfile, opts: &ForgeOptions, rng: &mut ChaCha8Rng) -> Forged {
    let props = format!(
        "NDP.Product=C13210\r\nMacro.S/N={}\r\nNDP.S/N={}\r\nCreated={}\r\nUpdated={}\r\nNDP.Version=2.9\r\n",
        p.must("Macro.S/N"),
        p.must("NDP.S/N"),
        p.must("Created"),
        p.must("Updated"),
    );
    let tissue = ImageSpec::tiled(64, 64, 3, TILE, tissue_tiles(rng, 4))
        .with(tags::NDPI_FORMAT_FLAG, TagValue::Long(vec![1]))
        .with(tags::NDPI_SOURCE_LENS, TagValue::Float(20.0))
        .with(tags::NDPI_PROPERTY_MAP, TagValue::Ascii(props.clone()));
    let low = ImageSpec::stripped(16, 16, 3, 16, &noise(rng, 16 * 16 * 3))
        .with(tags::NDPI_FORMAT_FLAG, TagValue::Long(vec![1]))
        .with(tags::NDPI_SOURCE_LENS, TagValue::Float(5.0));
    let macro_ = assoc(
        ImageSpec::stripped(COMBINED_W, COMBINED_H, 3, 8, &combined_pixels(p, rng, false))
            .with(tags::NDPI_FORMAT_FLAG, TagValue::Long(vec![1]))
            .with(tags::NDPI_SOURCE_LENS, TagValue::Float(-1.0)),
        opts,
    );
    let map = ImageSpec::stripped(8, 8, 1, 8, &noise(rng, 64))
        .with(tags::NDPI_FORMAT_FLAG, TagValue::Long(vec![1]))
        .with(tags::NDPI_SOURCE_LENS, TagValue::Float(-2.0));
    let written = TiffWriter::new(opts.order, opts.big_tiff).write(&[tissue, low, macro_, map]);
    let mut truth = tiff_truth(&written, &[0, 1, 3], vec![(2, ImageKind::LabelMacro)]);
    attribute_spans(
        p,
        &["Macro.S/N", "NDP.S/N", "Created", "Updated"],
        &written,
        0,
        tags::NDPI_PROPERTY_MAP,
        props.as_bytes(),
        &mut truth.attributes,
    );
    Forged {
        files: vec![(format!("{}.ndpi", p.must(ROLE_CASE_ID)).into(), written.bytes)],
        truth,
    }
}

pub(super) fn ventana(p: &SentinelProfile, opts: &ForgeOptions, rng: &mut ChaCha8Rng) -> Forged {
    let xmp = format!(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?><EncodeInfo Ver=\"2\"><SlideInfo><iScan Barcode1D=\"{}\" Barcode2D=\"{}\" UnitNumber=\"{}\" UserName=\"{}\" BuildDate=\"{}\" ScanRes=\"0.25\" Magnification=\"20\"/></SlideInfo><ImageInfo JP2FileName=\"{}\" BaseName=\"{}\" AOIScanned=\"1\"/></EncodeInfo>",
        p.must("Barcode1D"),
        p.must("Barcode2D"),
        p.must("UnitNumber"),
        p.must("UserName"),
        p.must("BuildDate"),
        p.must("JP2FileName"),
        p.must("BaseName"),
    );
    let tissue = ImageSpec::tiled(64, 64, 3, TILE, tissue_tiles(rng, 4))
        .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii("level=0 mag=20 quality=95".into()))
        .with(tags::XMP, TagValue::Undefined(xmp.clone().into_bytes()));
    let label = assoc(
        ImageSpec::stripped(COMBINED_W, COMBINED_H, 3, 8, &combined_pixels(p, rng, true))
            .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii("Label_Image".into())),
        opts,
    );
    let thumb = ImageSpec::stripped(16, 16, 3, 16, &noise(rng, 16 * 16 * 3))
        .with(tags::IMAGE_DESCRIPTION, TagValue::Ascii("Thumbnail".into()));
    let written = TiffWriter::new(opts.order, opts.big_tiff).write(&[tissue, label, thumb]);
    let mut truth = tiff_truth(&written, &[0, 2], vec![(1, ImageKind::LabelMacro)]);
    attribute_spans(
        p,
        &[
            "JP2FileName",
            "UnitNumber",
            "UserName",
            "Barcode1D",
            "Barcode2D",
            "BaseName",
            "BuildDate",
        ],
        &written,
        0,
        tags::XMP,
        xmp.as_bytes(),
        &mut truth.attributes,
    );
    Forged {
        files: vec![(format!("{}.bif", p.must(ROLE_CASE_ID)).into(), written.bytes)],
        truth,
    }
}

pub(super) fn generic(p: &SentinelProfile, opts: &ForgeOptions, rng: &mut ChaCha8Rng) -> Forged {
    let tissue = ImageSpec::tiled(64, 64, 3, TILE, tissue_tiles(rng, 4))
        .with(tags::DATE_TIME, TagValue::Ascii(p.must("DateTime").into()))
        .with(tags::ARTIST, TagValue::Ascii(p.must("Artist").into()))
        .with(tags::HOST_COMPUTER, TagValue::Ascii(p.must("HostComputer").into()));
    let low = ImageSpec::stripped(16, 16, 3, 16, &noise(rng, 16 * 16 * 3));
    let written = TiffWriter::new(opts.order, opts.big_tiff).write(&[tissue, low]);
    let mut truth = tiff_truth(&written, &[0, 1], Vec::new());
    for (tag, key) in [
        (tags::DATE_TIME, "DateTime"),
        (tags::ARTIST, "Artist"),
        (tags::HOST_COMPUTER, "HostComputer"),
    ] {
        let (o, _) = written.dirs[0].values[&tag];
        truth.attributes.push((key.into(), o, p.must(key).len() as u64));
    }
    Forged {
        files: vec![(format!("{}.tif", p.must(ROLE_CASE_ID)).into(), written.bytes)],
        truth,
    }
}

struct Record {
    hier: bool,
    value: u32,
    file: u32,
    offset: u32,
    len: u32,
}

pub(super) fn mirax(p: &SentinelProfile, opts: &ForgeOptions, rng: &mut ChaCha8Rng) -> Forged {
    let case = p.must(ROLE_CASE_ID);
    let mut data = [Vec::new(), Vec::new()];
    let mut records = Vec::new();
    let mut put = |data: &mut [Vec<u8>; 2], file: usize, hier: bool, value: u32, blob: Vec<u8>| {
        records.push(Record {
            hier,
            value,
            file: file as u32,
            offset: data[file].len() as u32,
            len: blob.len() as u32,
        });
        data[file].extend_from_slice(&blob);
    };
    for _ in 0..4 {
        let tile = noise(rng, 1024);
        put(&mut data, 0, true, 0, tile);
    }
    let tile = noise(rng, 1024);
    put(&mut data, 0, true, 1, tile);
    let preview = noise(rng, (MACRO_W * MACRO_H * 3) as usize);
    put(&mut data, 1, false, 0, preview);
    put(&mut data, 1, false, 1, label_pixels(p, LABEL_W, LABEL_H));
    let thumb = noise(rng, 16 * 16 * 3);
    put(&mut data, 1, false, 2, thumb);

    let mut index = opts.mirax_version.clone().into_bytes();
    index.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in &records {
        for v in [u32::from(r.hier), 0, r.value, r.file, r.offset, r.len] {
            index.extend_from_slice(&v.to_le_bytes());
        }
    }
    debug_assert_eq!(
        index.len() as u64,
        opts.mirax_version.len() as u64 + 4 + RECORD_LEN * records.len() as u64
    );

    let mut ini = String::from("\u{feff}");
    let mut line = |s: &str| {
        ini.push_str(s);
        ini.push_str("\r\n");
    };
    line("[GENERAL]");
    line(&format!("SLIDE_VERSION = {}", opts.mirax_version));
    line(&format!("SLIDE_NAME = {}", p.must("SLIDE_NAME")));
    line(&format!("PROJECT_NAME = {}", p.must("PROJECT_NAME")));
    line(&format!("SLIDE_ID = {}", p.must("SLIDE_ID")));
    line(&format!("SLIDE_CREATIONDATETIME = {}", p.must("SLIDE_CREATIONDATETIME")));
    line(&format!("SLIDE_UTC_CREATIONDATETIME = {}", p.must("SLIDE_UTC_CREATIONDATETIME")));
    line(&format!("SCANNER_HARDWARE_ID = {}", p.must("SCANNER_HARDWARE_ID")));
    line("OBJECTIVE_MAGNIFICATION = 20");
    line("");
    line("[HIERARCHICAL]");
    line("INDEXFILE = Index.dat");
    line("HIER_COUNT = 1");
    line("HIER_0_NAME = Slide zoom level");
    line("HIER_0_COUNT = 2");
    line("HIER_0_VAL_0 = ZoomLevel_0");
    line("HIER_0_VAL_0_SECTION = LAYER_0_LEVEL_0_SECTION");
    line("HIER_0_VAL_1 = ZoomLevel_1");
    line("HIER_0_VAL_1_SECTION = LAYER_0_LEVEL_1_SECTION");
    line("NONHIER_COUNT = 1");
    line("NONHIER_0_NAME = Scan data layer");
    line("NONHIER_0_COUNT = 3");
    line("NONHIER_0_VAL_0 = ScanDataLayer_SlidePreview");
    line("NONHIER_0_VAL_0_SECTION = SLIDE_PREVIEW_SECTION");
    line("NONHIER_0_VAL_1 = ScanDataLayer_SlideBarcode");
    line("NONHIER_0_VAL_1_SECTION = SLIDE_BARCODE_SECTION");
    line("NONHIER_0_VAL_2 = ScanDataLayer_SlideThumbnail");
    line("NONHIER_0_VAL_2_SECTION = SLIDE_THUMBNAIL_SECTION");
    line("");
    line("[DATAFILE]");
    line("FILE_COUNT = 2");
    line("FILE_0 = Data0000.dat");
    line("FILE_1 = Data0001.dat");
    line("");
    for (name, fmt) in [
        ("LAYER_0_LEVEL_0_SECTION", "JPEG"),
        ("LAYER_0_LEVEL_1_SECTION", "JPEG"),
        ("SLIDE_PREVIEW_SECTION", "BMP"),
        ("SLIDE_BARCODE_SECTION", "BMP"),
        ("SLIDE_THUMBNAIL_SECTION", "BMP"),
    ] {
        line(&format!("[{name}]"));
        line(&format!("IMAGE_FORMAT = {fmt}"));
        line("");
    }
    line("[SCANNER_SETTINGS]");
    line(&format!("ProfileName = {}", p.must("ProfileName")));
    let ini = ini.into_bytes();

    let mut truth = GroundTruth {
        associated: vec![(0, ImageKind::Macro), (1, ImageKind::Label)],
        index_records: records.len(),
        data_files: 2,
        ..Default::default()
    };
    for k in [
        "SLIDE_NAME",
        "PROJECT_NAME",
        "SLIDE_ID",
        "SLIDE_CREATIONDATETIME",
        "SCANNER_HARDWARE_ID",
        "SLIDE_UTC_CREATIONDATETIME",
        "ProfileName",
    ] {
        let v = p.must(k);
        if let Some(at) = find(&ini, v.as_bytes()) {
            truth.attributes.push((k.into(), at as u64, v.len() as u64));
        }
    }

    let dir = PathBuf::from(case);
    let [d0, d1] = data;
    Forged {
        files: vec![
            (
                format!("{case}.mrxs").into(),
                b"[Mirax slide stub]\r\n".to_vec(),
            ),
            (dir.join("Slidedat.ini"), ini),
            (dir.join("Index.dat"), index),
            (dir.join("Data0000.dat"), d0),
            (dir.join("Data0001.dat"), d1),
        ],
        truth,
    }
}

fn xml_attr(out: &mut String, name: &str, group: &str, element: &str, ty: &str, extra: &str, value: &str) {
    let _ = writeln!(
        out,
        "<Attribute Name=\"{name}\" Group=\"{group}\" Element=\"{element}\" PMSVR=\"{ty}\"{extra}>{value}</Attribute>"
    );
}

fn scanned_image(out: &mut String, kind: &str, w: u32, h: u32, pixels: &[u8]) {
    out.push_str("<DataObject ObjectType=\"DPScannedImage\">\n");
    xml_attr(out, "PIM_DP_IMAGE_TYPE", "0x301D", "0x1004", "IString", "", kind);
    xml_attr(out, "DICOM_ROWS", "0x0028", "0x0010", "IUInt16", "", &h.to_string());
    xml_attr(out, "DICOM_COLUMNS", "0x0028", "0x0011", "IUInt16", "", &w.to_string());
    let data = STANDARD.encode(isyntax::ppm(w, h, pixels));
    xml_attr(out, "PIM_DP_IMAGE_DATA", "0x301D", "0x1005", "IString", "", &data);
    out.push_str("</DataObject>\n");
}

pub(super) fn isyntax(p: &SentinelProfile, rng: &mut ChaCha8Rng) -> Forged {
    let mut x = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n");
    x.push_str("<DataObject ObjectType=\"DPUfsImport\">\n");
    xml_attr(&mut x, "DICOM_MANUFACTURER", "0x0008", "0x0070", "IString", "", "PHILIPS");
    xml_attr(&mut x, "DICOM_ACQUISITION_DATETIME", "0x0008", "0x002A", "IDateTime", "", p.must("DICOM_ACQUISITION_DATETIME"));
    xml_attr(&mut x, "DICOM_DEVICE_SERIAL_NUMBER", "0x0018", "0x1000", "IString", "", p.must("DICOM_DEVICE_SERIAL_NUMBER"));
    xml_attr(&mut x, "PIIM_DP_SCANNER_OPERATOR_ID", "0x101D", "0x1009", "IString", "", p.must("PIIM_DP_SCANNER_OPERATOR_ID"));
    xml_attr(&mut x, "PIM_DP_UFS_BARCODE", "0x301D", "0x1002", "IString", "", p.must("PIM_DP_UFS_BARCODE"));
    xml_attr(&mut x, "PIIM_DP_SCANNER_RACK_NUMBER", "0x101D", "0x1007", "IUInt32", " Min=\"0\" Max=\"999999\"", p.must("PIIM_DP_SCANNER_RACK_NUMBER"));
    xml_attr(&mut x, "PIIM_DP_SCANNER_SLOT_NUMBER", "0x101D", "0x1008", "IUInt32", " Min=\"0\" Max=\"999999\"", p.must("PIIM_DP_SCANNER_SLOT_NUMBER"));
    xml_attr(&mut x, "PIM_DP_UFS_INTERFACE_VERSION", "0x301D", "0x1001", "IString", "", "5.0");
    x.push_str("<Attribute Name=\"PIM_DP_SCANNED_IMAGES\" Group=\"0x301D\" Element=\"0x1003\" PMSVR=\"IDataObjectArray\">\n<Array>\n");
    x.push_str("<DataObject ObjectType=\"DPScannedImage\">\n");
    xml_attr(&mut x, "PIM_DP_IMAGE_TYPE", "0x301D", "0x1004", "IString", "", "WSI");
    x.push_str("</DataObject>\n");
    scanned_image(&mut x, "LABELIMAGE", LABEL_W, LABEL_H, &label_pixels(p, LABEL_W, LABEL_H));
    let macro_px = noise(rng, (MACRO_W * MACRO_H * 3) as usize);
    scanned_image(&mut x, "MACROIMAGE", MACRO_W, MACRO_H, &macro_px);
    x.push_str("</Array>\n</Attribute>\n</DataObject>\n");

    let mut bytes = x.into_bytes();
    let header_end = bytes.len() as u64;
    let mut truth = GroundTruth {
        header_end: Some(header_end),
        associated: vec![(0, ImageKind::Label), (1, ImageKind::Macro)],
        ..Default::default()
    };
    for k in [
        "DICOM_ACQUISITION_DATETIME",
        "DICOM_DEVICE_SERIAL_NUMBER",
        "PIIM_DP_SCANNER_OPERATOR_ID",
        "PIM_DP_UFS_BARCODE",
        "PIIM_DP_SCANNER_RACK_NUMBER",
        "PIIM_DP_SCANNER_SLOT_NUMBER",
    ] {
        let v = p.must(k);
        if let Some(at) = find(&bytes, format!(">{v}<").as_bytes()) {
            truth.attributes.push((k.into(), at as u64 + 1, v.len() as u64));
        }
    }
    bytes.push(END_OF_HEADER);
    let body_len = 4096 + rng.gen_range(0..512);
    let body = noise(rng, body_len);
    truth.tissue_spans.push((header_end + 1, body.len() as u64));
    bytes.extend_from_slice(&body);
    Forged {
        files: vec![(format!("{}.isyntax", p.must(ROLE_CASE_ID)).into(), bytes)],
        truth,
    }
}
