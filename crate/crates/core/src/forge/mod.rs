//! Synthetic miniature slides with planted sensitive content, and the oracles
//! that look for that content afterwards.
//!
//! Everything is deterministic in `(vendor, seed, options)`. Associated images
//! are uncompressed unless [`ForgeOptions::compressed_associated`] is set.

pub mod scan;
mod slides;
pub mod tiff_writer;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::{profile, Vendor};
use crate::io::Endian;
use crate::tiff::ImageKind;

pub use scan::{sensitivity_scan, structural_check, Hit, StructureReport};

pub const ROLE_CASE_ID: &str = "case_id";
pub const ROLE_LABEL_TEXT: &str = "label_text";
pub const ROLE_LABEL_NOTE: &str = "label_note";
pub const ROLE_BARCODE: &str = "barcode";
pub const MOTIF_LEN: usize = 12;

const ALPHABET: &[u8] = b"0123456789ABCDEFGHJKMNPQRSTVWXYZ";

/// Planted strings keyed by role, plus the byte motif painted into labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentinelProfile {
    entries: Vec<(String, String)>,
    motif: Vec<u8>,
}

fn token(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

struct Stamp {
    y: u32,
    mo: u32,
    d: u32,
    h: u32,
    mi: u32,
    s: u32,
    us: u32,
}

impl Stamp {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Stamp {
            y: rng.gen_range(2012..2024),
            mo: rng.gen_range(1..13),
            d: rng.gen_range(1..29),
            h: rng.gen_range(0..24),
            mi: rng.gen_range(0..60),
            s: rng.gen_range(0..60),
            us: rng.gen_range(1..1_000_000),
        }
    }
}

/// Value planted for a catalog key, shaped like the vendor writes it.
fn value_for(vendor: Vendor, key: &str, rng: &mut ChaCha8Rng) -> String {
    let t = Stamp::random(rng);
    let Stamp { y, mo, d, h, mi, s, us } = t;
    match (vendor, key) {
        (Vendor::Aperio, "Date") => format!("{mo:02}/{d:02}/{:02}", y % 100),
        (Vendor::Aperio, "Time") => format!("{h:02}:{mi:02}:{s:02}"),
        (Vendor::Hamamatsu, "Created" | "Updated") => {
            format!("{y}/{mo:02}/{d:02} {h:02}:{mi:02}:{s:02}")
        }
        (Vendor::Mirax, "SLIDE_CREATIONDATETIME") => {
            format!("{y}.{mo:02}.{d:02} {h:02}:{mi:02}:{s:02}")
        }
        (Vendor::Mirax, "SLIDE_UTC_CREATIONDATETIME") => {
            format!("{y}-{mo:02}-{d:02}T{h:02}:{mi:02}:{s:02}Z")
        }
        (Vendor::Ventana, "BuildDate") => {
            format!("{mo:02}/{d:02}/{y} {h:02}:{mi:02}:{s:02}")
        }
        (Vendor::PhilipsISyntax, "DICOM_ACQUISITION_DATETIME") => {
            format!("{y}{mo:02}{d:02}{h:02}{mi:02}{s:02}.{us:06}")
        }
        (Vendor::PhilipsISyntax, "PIIM_DP_SCANNER_RACK_NUMBER" | "PIIM_DP_SCANNER_SLOT_NUMBER") => {
            rng.gen_range(100_000..1_000_000).to_string()
        }
        (Vendor::GenericTiff, "DateTime") => {
            format!("{y}:{mo:02}:{d:02} {h:02}:{mi:02}:{s:02}")
        }
        _ => {
            let prefix: String = key
                .chars()
                .filter(char::is_ascii_alphanumeric)
                .take(3)
                .collect::<String>()
                .to_ascii_uppercase();
            format!("{prefix}-{}", token(rng, 10))
        }
    }
}

impl SentinelProfile {
    pub fn new(entries: Vec<(String, String)>, motif: Vec<u8>) -> Result<Self> {
        let p = SentinelProfile { entries, motif };
        p.validate()?;
        Ok(p)
    }

    /// Profile for plain strings, as read from a sentinel file. No motif.
    pub fn from_strings(strings: Vec<String>) -> Result<Self> {
        let entries = strings
            .into_iter()
            .enumerate()
            .map(|(i, s)| (format!("sentinel_{i}"), s))
            .collect();
        Self::new(entries, Vec::new())
    }

    /// One string per line, UTF-8, blank lines ignored. Overlapping strings are allowed.
    pub fn from_sentinel_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let strings: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if strings.is_empty() {
            return Err(Error::InvalidArgument(format!("{}: no sentinels", path.display())));
        }
        Ok(SentinelProfile {
            entries: strings
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!("sentinel_{i}"), s))
                .collect(),
            motif: Vec::new(),
        })
    }

    /// Deterministic profile covering the vendor's whole catalog.
    pub fn generate(vendor: Vendor, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED_0000_0000);
        loop {
            let mut entries = vec![(ROLE_CASE_ID.to_string(), format!("CASE-{}", token(&mut rng, 8)))];
            if vendor != Vendor::GenericTiff {
                entries.push((ROLE_LABEL_TEXT.into(), format!("LBL-{}", token(&mut rng, 10))));
                entries.push((ROLE_LABEL_NOTE.into(), format!("PT-{}", token(&mut rng, 10))));
                entries.push((ROLE_BARCODE.into(), format!("BC{}", token(&mut rng, 12))));
            }
            if let Ok(cat) = profile(vendor) {
                for k in cat.key_names() {
                    entries.push((k.to_string(), value_for(vendor, k, &mut rng)));
                }
            }
            let motif = if vendor == Vendor::GenericTiff {
                Vec::new()
            } else {
                (0..MOTIF_LEN).map(|_| rng.gen_range(1..=254u8)).collect()
            };
            if let Ok(p) = Self::new(entries, motif) {
                return p;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values: Vec<&str> = self.entries.iter().map(|e| e.1.as_str()).collect();
        for (i, a) in values.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidArgument("empty sentinel".into()));
            }
            for (j, b) in values.iter().enumerate() {
                if i != j && b.contains(a) {
                    return Err(Error::InvalidArgument(format!(
                        "sentinel {a:?} is contained in {b:?}"
                    )));
                }
            }
        }
        if !self.motif.is_empty() && self.motif.iter().all(|&b| b == self.motif[0]) {
            return Err(Error::InvalidArgument("motif must not be uniform".into()));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn strings(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.1.clone()).collect()
    }

    pub fn get(&self, role: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.0 == role)
            .map(|e| e.1.as_str())
    }

    /// Value for a role that generated profiles always contain.
    pub(crate) fn must(&self, role: &str) -> &str {
        self.get(role).unwrap_or("MISSING-SENTINEL")
    }

    pub fn label_pixel_pattern(&self) -> &[u8] {
        &self.motif
    }

    /// Number of distinct planted markers, the motif included.
    pub fn sentinel_count(&self) -> usize {
        self.entries.len() + usize::from(!self.motif.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeOptions {
    pub order: Endian,
    pub big_tiff: bool,
    /// Mark associated images as JPEG-compressed (their bytes stay synthetic).
    pub compressed_associated: bool,
    pub mirax_version: String,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        ForgeOptions {
            order: Endian::Little,
            big_tiff: false,
            compressed_associated: false,
            mirax_version: "01.02".into(),
        }
    }
}

impl ForgeOptions {
    pub fn variant(&self) -> String {
        let mut v = format!(
            "{}-{}",
            match self.order {
                Endian::Little => "le",
                Endian::Big => "be",
            },
            if self.big_tiff { "bigtiff" } else { "classic" }
        );
        if self.compressed_associated {
            v.push_str("-compressed");
        }
        v
    }

    /// The TIFF variants every TIFF-family vendor is tested with.
    pub fn tiff_matrix() -> Vec<ForgeOptions> {
        let mut v = Vec::new();
        for order in [Endian::Little, Endian::Big] {
            for big_tiff in [false, true] {
                v.push(ForgeOptions {
                    order,
                    big_tiff,
                    ..Default::default()
                });
            }
        }
        v
    }
}

/// What the forge put where.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    /// TIFF directories in the chain.
    pub directories: usize,
    /// Directory (or layer) index and kind of every label/macro image.
    pub associated: Vec<(usize, ImageKind)>,
    /// Payload spans of tissue images in the primary file.
    pub tissue_spans: Vec<(u64, u64)>,
    /// Catalog attribute key, absolute offset and length. Offsets refer to
    /// the primary file, or to Slidedat.ini for Mirax.
    pub attributes: Vec<(String, u64, u64)>,
    pub header_end: Option<u64>,
    pub index_records: usize,
    pub data_files: usize,
}

/// In-memory result of forging: files relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forged {
    pub files: Vec<(PathBuf, Vec<u8>)>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub vendor: Vendor,
    pub seed: u64,
    pub variant: String,
    /// File passed to the engine (the `.mrxs` stub for Mirax).
    pub primary: PathBuf,
    /// Every emitted slide file, primary first. The manifest is not included.
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub profile: SentinelProfile,
    pub truth: GroundTruth,
}

pub fn forge_bytes(
    vendor: Vendor,
    seed: u64,
    profile: &SentinelProfile,
    opts: &ForgeOptions,
) -> Result<Forged> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match vendor {
        Vendor::Aperio => Ok(slides::aperio(profile, opts, &mut rng)),
        Vendor::Hamamatsu => Ok(slides::hamamatsu(profile, opts, &mut rng)),
        Vendor::Ventana => Ok(slides::ventana(profile, opts, &mut rng)),
        Vendor::GenericTiff => Ok(slides::generic(profile, opts, &mut rng)),
        Vendor::Mirax => Ok(slides::mirax(profile, opts, &mut rng)),
        Vendor::PhilipsISyntax => Ok(slides::isyntax(profile, &mut rng)),
        Vendor::Unknown => Err(Error::UnsupportedFormat("cannot forge an unknown format".into())),
    }
}

/// Forges the default variant into `out_dir`.
pub fn forge(vendor: Vendor, seed: u64, profile: &SentinelProfile, out_dir: &Path) -> Result<Fixture> {
    forge_with(vendor, seed, profile, &ForgeOptions::default(), out_dir)
}

pub fn forge_with(
    vendor: Vendor,
    seed: u64,
    profile: &SentinelProfile,
    opts: &ForgeOptions,
    out_dir: &Path,
) -> Result<Fixture> {
    let forged = forge_bytes(vendor, seed, profile, opts)?;
    let mut files = Vec::new();
    for (rel, bytes) in &forged.files {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        files.push(path);
    }
    let fixture = Fixture {
        vendor,
        seed,
        variant: opts.variant(),
        primary: files[0].clone(),
        manifest: out_dir.join(format!("{}.manifest.txt", profile.must(ROLE_CASE_ID))),
        files,
        profile: profile.clone(),
        truth: forged.truth,
    };
    let text = manifest_text(&fixture, out_dir);
    std::fs::write(&fixture.manifest, text).map_err(|e| Error::io(&fixture.manifest, e))?;
    Ok(fixture)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn unhex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).ok())
        .collect()
}

fn manifest_text(f: &Fixture, out_dir: &Path) -> String {
    let rel = |p: &Path| {
        p.strip_prefix(out_dir)
            .unwrap_or(p)
            .to_string_lossy()
            .into_owned()
    };
    let t = &f.truth;
    let mut s = String::new();
    let _ = writeln!(s, "vendor = {}", f.vendor.id());
    let _ = writeln!(s, "seed = {}", f.seed);
    let _ = writeln!(s, "variant = {}", f.variant);
    let _ = writeln!(s, "primary = {}", rel(&f.primary));
    for p in &f.files {
        let _ = writeln!(s, "file = {}", rel(p));
    }
    let _ = writeln!(s, "directories = {}", t.directories);
    for (i, k) in &t.associated {
        let _ = writeln!(s, "associated = {i}:{}", k.as_str());
    }
    for (o, n) in &t.tissue_spans {
        let _ = writeln!(s, "tissue_span = {o}+{n}");
    }
    for (k, o, n) in &t.attributes {
        let _ = writeln!(s, "attribute = {k}@{o}+{n}");
    }
    if let Some(h) = t.header_end {
        let _ = writeln!(s, "header_end = {h}");
    }
    let _ = writeln!(s, "index_records = {}", t.index_records);
    let _ = writeln!(s, "data_files = {}", t.data_files);
    let _ = writeln!(s, "expected_blanked = {}", t.attributes.len());
    let _ = writeln!(s, "expected_destroyed = {}", t.associated.len());
    for (role, value) in f.profile.entries() {
        let _ = writeln!(s, "sentinel.{role} = {value}");
    }
    let _ = writeln!(s, "motif = {}", hex(f.profile.label_pixel_pattern()));
    s
}

/// Ordered `key = value` lines of a fixture manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.trim().to_string(), v.to_string()))
            .collect();
        Manifest { entries }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.0 == key)
            .map(|e| e.1.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.0 == key)
            .map(|e| e.1.as_str())
            .collect()
    }

    pub fn profile(&self) -> Result<SentinelProfile> {
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("sentinel.").map(|r| (r.to_string(), v.clone())))
            .collect();
        let motif = unhex(self.get("motif").unwrap_or(""))
            .ok_or_else(|| Error::InvalidArgument("manifest motif is not hex".into()))?;
        SentinelProfile::new(entries, motif)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_cover_catalog_and_are_deterministic() {
        for v in [
            Vendor::Aperio,
            Vendor::Hamamatsu,
            Vendor::Mirax,
            Vendor::Ventana,
            Vendor::PhilipsISyntax,
        ] {
            let p = SentinelProfile::generate(v, 3);
            assert_eq!(p, SentinelProfile::generate(v, 3));
            assert!(p.sentinel_count() >= 8, "{v}: {}", p.sentinel_count());
            for k in profile(v).unwrap().key_names() {
                assert!(p.get(k).is_some(), "{v} lacks {k}");
            }
            assert_eq!(p.label_pixel_pattern().len(), MOTIF_LEN);
            p.validate().unwrap();
        }
        assert_ne!(
            SentinelProfile::generate(Vendor::Aperio, 1),
            SentinelProfile::generate(Vendor::Aperio, 2)
        );
    }

    #[test]
    fn numeric_and_datetime_shapes() {
        let p = SentinelProfile::generate(Vendor::PhilipsISyntax, 9);
        let rack = p.get("PIIM_DP_SCANNER_RACK_NUMBER").unwrap();
        assert_eq!(rack.len(), 6);
        assert!(rack.bytes().all(|b| b.is_ascii_digit()));
        let dt = p.get("DICOM_ACQUISITION_DATETIME").unwrap();
        assert_eq!(dt.len(), "20210501134512.000000".len());
        assert_eq!(&dt[14..15], ".");
    }

    #[test]
    fn substring_sentinels_are_rejected() {
        assert!(SentinelProfile::from_strings(vec!["ABC-123".into(), "ABC-1234".into()]).is_err());
        assert!(SentinelProfile::from_strings(vec!["ABC-123".into(), "XYZ-987".into()]).is_ok());
    }

    #[test]
    fn manifest_round_trips_profile() {
        let dir = tempfile::tempdir().unwrap();
        let p = SentinelProfile::generate(Vendor::Aperio, 5);
        let f = forge(Vendor::Aperio, 5, &p, dir.path()).unwrap();
        let m = Manifest::read(&f.manifest).unwrap();
        assert_eq!(m.profile().unwrap(), p);
        assert_eq!(m.get("vendor"), Some("leica-aperio"));
        assert_eq!(m.get_all("file").len(), f.files.len());
        assert_eq!(m.get("expected_blanked"), Some("5"));
    }

    #[test]
    fn forging_is_deterministic_and_small() {
        for v in Vendor::SUPPORTED {
            let p = SentinelProfile::generate(v, 1);
            let a = forge_bytes(v, 1, &p, &ForgeOptions::default()).unwrap();
            let b = forge_bytes(v, 1, &p, &ForgeOptions::default()).unwrap();
            assert_eq!(a, b);
            for (name, bytes) in &a.files {
                assert!(bytes.len() <= 256 * 1024, "{}", name.display());
            }
        }
    }
}
