//! Vendor detection and the per-vendor catalog of sensitive attributes.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::ByteSource;
use crate::tiff::{self, tags, TiffModel};

/// Bytes inspected for magic numbers and XML prologs.
pub const SNIFF_WINDOW: u64 = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Vendor {
    #[serde(rename = "leica-aperio")]
    Aperio,
    #[serde(rename = "hamamatsu-ndpi")]
    Hamamatsu,
    #[serde(rename = "3dhistech-mirax")]
    Mirax,
    #[serde(rename = "roche-ventana")]
    Ventana,
    #[serde(rename = "philips-isyntax")]
    PhilipsISyntax,
    #[serde(rename = "generic-tiff")]
    GenericTiff,
    Unknown,
}

impl Vendor {
    pub const SUPPORTED: [Vendor; 6] = [
        Vendor::Aperio,
        Vendor::Hamamatsu,
        Vendor::Mirax,
        Vendor::Ventana,
        Vendor::PhilipsISyntax,
        Vendor::GenericTiff,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Vendor::Aperio => "leica-aperio",
            Vendor::Hamamatsu => "hamamatsu-ndpi",
            Vendor::Mirax => "3dhistech-mirax",
            Vendor::Ventana => "roche-ventana",
            Vendor::PhilipsISyntax => "philips-isyntax",
            Vendor::GenericTiff => "generic-tiff",
            Vendor::Unknown => "unknown",
        }
    }

    pub fn from_id(s: &str) -> Option<Vendor> {
        let s = s.to_ascii_lowercase();
        Vendor::SUPPORTED
            .into_iter()
            .chain([Vendor::Unknown])
            .find(|v| v.id() == s || v.short_name() == s)
    }

    fn short_name(self) -> &'static str {
        match self {
            Vendor::Aperio => "aperio",
            Vendor::Hamamatsu => "hamamatsu",
            Vendor::Mirax => "mirax",
            Vendor::Ventana => "ventana",
            Vendor::PhilipsISyntax => "isyntax",
            Vendor::GenericTiff => "tiff",
            Vendor::Unknown => "unknown",
        }
    }

    pub fn is_supported(self) -> bool {
        self != Vendor::Unknown
    }

    /// File extension used when naming files of this vendor.
    pub fn extension(self) -> &'static str {
        match self {
            Vendor::Aperio => "svs",
            Vendor::Hamamatsu => "ndpi",
            Vendor::Mirax => "mrxs",
            Vendor::Ventana => "bif",
            Vendor::PhilipsISyntax => "isyntax",
            Vendor::GenericTiff => "tif",
            Vendor::Unknown => "bin",
        }
    }

    pub fn is_tiff_family(self) -> bool {
        matches!(
            self,
            Vendor::Aperio | Vendor::Hamamatsu | Vendor::Ventana | Vendor::GenericTiff
        )
    }
}

impl fmt::Display for Vendor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Tiff,
    BigTiff,
    IniContainer,
    XmlHeader,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct VendorFormat {
    pub vendor: Vendor,
    pub family: Option<Family>,
}

impl VendorFormat {
    pub const UNKNOWN: VendorFormat = VendorFormat {
        vendor: Vendor::Unknown,
        family: None,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SubjectRelated,
    AcquisitionRelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensitiveKey {
    pub name: &'static str,
    pub category: Category,
}

const fn subj(name: &'static str) -> SensitiveKey {
    SensitiveKey {
        name,
        category: Category::SubjectRelated,
    }
}

const fn acq(name: &'static str) -> SensitiveKey {
    SensitiveKey {
        name,
        category: Category::AcquisitionRelated,
    }
}

const APERIO_KEYS: &[SensitiveKey] = &[
    acq("ScanScope ID"),
    acq("Date"),
    acq("Time"),
    acq("User"),
    subj("Filename"),
];

const HAMAMATSU_KEYS: &[SensitiveKey] = &[
    acq("Macro.S/N"),
    acq("NDP.S/N"),
    acq("Created"),
    acq("Updated"),
];

const MIRAX_KEYS: &[SensitiveKey] = &[
    subj("SLIDE_NAME"),
    subj("PROJECT_NAME"),
    subj("SLIDE_ID"),
    acq("SLIDE_CREATIONDATETIME"),
    acq("SCANNER_HARDWARE_ID"),
    acq("SLIDE_UTC_CREATIONDATETIME"),
    acq("ProfileName"),
];

const VENTANA_KEYS: &[SensitiveKey] = &[
    subj("JP2FileName"),
    acq("UnitNumber"),
    acq("UserName"),
    subj("Barcode1D"),
    subj("Barcode2D"),
    subj("BaseName"),
    acq("BuildDate"),
];

const ISYNTAX_KEYS: &[SensitiveKey] = &[
    acq("DICOM_ACQUISITION_DATETIME"),
    acq("DICOM_DEVICE_SERIAL_NUMBER"),
    acq("PIIM_DP_SCANNER_OPERATOR_ID"),
    subj("PIM_DP_UFS_BARCODE"),
    acq("PIIM_DP_SCANNER_RACK_NUMBER"),
    acq("PIIM_DP_SCANNER_SLOT_NUMBER"),
];

const GENERIC_KEYS: &[SensitiveKey] = &[acq("DateTime"), acq("Artist"), acq("HostComputer")];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatProfile {
    pub vendor: Vendor,
    pub sensitive_keys: &'static [SensitiveKey],
    pub label_separable_from_macro: bool,
}

impl FormatProfile {
    pub fn key(&self, name: &str) -> Option<&'static SensitiveKey> {
        self.sensitive_keys.iter().find(|k| k.name == name)
    }

    pub fn key_names(&self) -> impl Iterator<Item = &'static str> {
        self.sensitive_keys.iter().map(|k| k.name)
    }
}

/// Static sensitive-attribute catalog for a vendor.
pub fn profile(vendor: Vendor) -> Result<FormatProfile> {
    let (keys, separable) = match vendor {
        Vendor::Aperio => (APERIO_KEYS, true),
        Vendor::Hamamatsu => (HAMAMATSU_KEYS, false),
        Vendor::Mirax => (MIRAX_KEYS, true),
        Vendor::Ventana => (VENTANA_KEYS, false),
        Vendor::PhilipsISyntax => (ISYNTAX_KEYS, true),
        Vendor::GenericTiff => (GENERIC_KEYS, true),
        Vendor::Unknown => {
            return Err(Error::UnsupportedFormat("no catalog for unknown format".into()))
        }
    };
    Ok(FormatProfile {
        vendor,
        sensitive_keys: keys,
        label_separable_from_macro: separable,
    })
}

fn extension(name: &Path) -> String {
    name.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

/// Directory next to a `.mrxs` stub that holds the container files.
pub fn mirax_data_dir(path: &Path) -> Option<std::path::PathBuf> {
    let stem = path.file_stem()?;
    Some(path.with_file_name(stem))
}

/// Detects the format of the file at `path`, reading from `src`.
pub fn detect<S: ByteSource + ?Sized>(path: &Path, src: &S) -> Result<VendorFormat> {
    let has_slidedat = extension(path) == "mrxs"
        && mirax_data_dir(path)
            .map(|d| d.join("Slidedat.ini").is_file())
            .unwrap_or(false);
    detect_with(path, src, has_slidedat)
}

/// Detection given the filename, the content, and whether a Mirax data
/// directory with `Slidedat.ini` sits next to the file.
pub fn detect_with<S: ByteSource + ?Sized>(
    name: &Path,
    src: &S,
    has_slidedat: bool,
) -> Result<VendorFormat> {
    let ext = extension(name);
    let prefix = src.read_prefix(0, SNIFF_WINDOW)?;

    if tiff::has_tiff_magic(&prefix) {
        let big = tiff::sniff_order(&prefix)
            .map(|e| e.u16(&prefix[2..4]) == tiff::BIGTIFF_MAGIC)
            .unwrap_or(false);
        let family = Some(if big { Family::BigTiff } else { Family::Tiff });
        let vendor = match tiff::parse(src) {
            Ok(model) => tiff_vendor(&model, src, &ext),
            Err(_) if ext == "ndpi" => Vendor::Hamamatsu,
            Err(_) => Vendor::GenericTiff,
        };
        return Ok(VendorFormat { vendor, family });
    }

    if is_xml_prolog(&prefix) {
        let is_isyntax = find(&prefix, b"DPUfsImport").is_some() || ext == "isyntax";
        return Ok(if is_isyntax {
            VendorFormat {
                vendor: Vendor::PhilipsISyntax,
                family: Some(Family::XmlHeader),
            }
        } else {
            VendorFormat::UNKNOWN
        });
    }

    if ext == "mrxs" && has_slidedat {
        return Ok(VendorFormat {
            vendor: Vendor::Mirax,
            family: Some(Family::IniContainer),
        });
    }
    Ok(VendorFormat::UNKNOWN)
}

fn is_xml_prolog(prefix: &[u8]) -> bool {
    let body = prefix.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(prefix);
    body.starts_with(b"<?xml")
}

pub(crate) fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    hay.windows(needle.len()).position(|w| w == needle)
}

fn tiff_vendor<S: ByteSource + ?Sized>(model: &TiffModel, src: &S, ext: &str) -> Vendor {
    let mut texts = Vec::new();
    for i in 0..model.ifds.len() {
        if let Ok(Some(d)) = model.description(src, i) {
            if d.starts_with("Aperio") {
                return Vendor::Aperio;
            }
            texts.push(d);
        }
        if let Ok(Some(x)) = model.ascii(src, i, tags::XMP) {
            texts.push(x);
        }
    }
    if texts.iter().any(|t| is_ventana_text(t)) {
        return Vendor::Ventana;
    }
    let private_block = model
        .ifds
        .first()
        .map(|d| d.entries.iter().any(|e| e.tag_id >= tags::NDPI_FORMAT_FLAG))
        .unwrap_or(false);
    if private_block || ext == "ndpi" {
        return Vendor::Hamamatsu;
    }
    Vendor::GenericTiff
}

fn is_ventana_text(t: &str) -> bool {
    t.contains("<iScan") || t.contains("Ventana") || t.contains("VENTANA")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::MemBytes;

    #[test]
    fn catalogs_mirror_vendor_inventory() {
        let aperio = profile(Vendor::Aperio).unwrap();
        let names: Vec<_> = aperio.key_names().collect();
        assert_eq!(names, ["ScanScope ID", "Date", "Time", "User", "Filename"]);

        let philips = profile(Vendor::PhilipsISyntax).unwrap();
        assert!(philips.key("DICOM_DEVICE_SERIAL_NUMBER").is_some());
        assert!(philips.key("PIM_DP_UFS_BARCODE").is_some());
        assert_eq!(philips.sensitive_keys.len(), 6);

        assert_eq!(profile(Vendor::Mirax).unwrap().sensitive_keys.len(), 7);
        assert_eq!(profile(Vendor::Ventana).unwrap().sensitive_keys.len(), 7);
        assert_eq!(profile(Vendor::Hamamatsu).unwrap().sensitive_keys.len(), 4);
    }

    #[test]
    fn label_separability() {
        assert!(!profile(Vendor::Hamamatsu).unwrap().label_separable_from_macro);
        assert!(!profile(Vendor::Ventana).unwrap().label_separable_from_macro);
        assert!(profile(Vendor::Aperio).unwrap().label_separable_from_macro);
        assert!(profile(Vendor::Mirax).unwrap().label_separable_from_macro);
        assert!(profile(Vendor::PhilipsISyntax).unwrap().label_separable_from_macro);
    }

    #[test]
    fn unknown_has_no_profile() {
        assert!(matches!(profile(Vendor::Unknown), Err(Error::UnsupportedFormat(_))));
        assert_eq!(profile(Vendor::GenericTiff).unwrap().sensitive_keys.len(), 3);
    }

    #[test]
    fn text_named_svs_is_unknown() {
        let src = MemBytes::new(b"just some notes, not a slide\n".to_vec());
        let f = detect_with(Path::new("x.svs"), &src, false).unwrap();
        assert_eq!(f, VendorFormat::UNKNOWN);
    }

    #[test]
    fn xml_prolog_with_isyntax_extension() {
        let src = MemBytes::new(b"<?xml version=\"1.0\"?><DataObject/>\x04".to_vec());
        let f = detect_with(Path::new("a.isyntax"), &src, false).unwrap();
        assert_eq!(f.vendor, Vendor::PhilipsISyntax);
        assert_eq!(f.family, Some(Family::XmlHeader));
        let f = detect_with(Path::new("a.xml"), &src, false).unwrap();
        assert_eq!(f.vendor, Vendor::Unknown);
    }

    #[test]
    fn mrxs_needs_slidedat() {
        let src = MemBytes::new(vec![0u8; 16]);
        assert_eq!(
            detect_with(Path::new("s.mrxs"), &src, false).unwrap().vendor,
            Vendor::Unknown
        );
        assert_eq!(
            detect_with(Path::new("s.mrxs"), &src, true).unwrap().vendor,
            Vendor::Mirax
        );
    }

    #[test]
    fn vendor_ids_round_trip() {
        for v in Vendor::SUPPORTED {
            assert_eq!(Vendor::from_id(v.id()), Some(v));
        }
        assert_eq!(Vendor::from_id("aperio"), Some(Vendor::Aperio));
        assert_eq!(Vendor::Mirax.to_string(), "3dhistech-mirax");
    }
}
