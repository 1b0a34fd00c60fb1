//! 3DHistech Mirax containers.
//!
//! On disk a slide is a `<name>.mrxs` stub next to a `<name>/` directory with
//! `Slidedat.ini` (text metadata and the layer hierarchy), `Index.dat`
//! (binary table locating every blob) and `DataNNNN.dat` files holding the
//! blobs.
//!
//! `Index.dat` layout, little-endian:
//!
//! ```text
//! version   ASCII, same bytes as SLIDE_VERSION in Slidedat.ini
//! count     u32
//! records   count x { hier u32, layer u32, value u32, file u32, offset u32, length u32 }
//! ```
//!
//! `hier` is 1 for zoom-level tiles and 0 for non-hierarchical layers. A
//! record whose `value` is [`UNLINKED`] belongs to a layer that was removed
//! from `Slidedat.ini`.

use std::path::{Path, PathBuf};

use crate::engine::AnonymizationConfig;
use crate::error::{Error, Result};
use crate::format::{mirax_data_dir, profile, Vendor};
use crate::io::ByteSource;
use crate::patch::{Patch, PatchPlan};
use crate::tiff::{ImageKind, FILLER};

use super::{BlankedAttribute, PlanSummary};

pub const UNLINKED: u32 = u32::MAX;
pub const RECORD_LEN: u64 = 24;
pub const KNOWN_VERSIONS: &[&str] = &["01.02", "01.03"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IniEntry {
    pub section: String,
    pub key: String,
    /// Byte range of the trimmed value.
    pub value: (usize, usize),
    /// Byte range of the whole line including its terminator.
    pub line: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IniSection {
    pub name: String,
    /// From the header line to the next header (or end of text).
    pub span: (usize, usize),
}

/// `Slidedat.ini` with the byte position of every key and value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ini {
    pub text: Vec<u8>,
    pub sections: Vec<IniSection>,
    pub entries: Vec<IniEntry>,
}

impl Ini {
    pub fn parse(text: Vec<u8>) -> Self {
        let mut sections: Vec<IniSection> = Vec::new();
        let mut entries = Vec::new();
        let mut section = String::new();
        let mut pos = if text.starts_with(b"\xEF\xBB\xBF") { 3 } else { 0 };
        while pos < text.len() {
            let nl = text[pos..].iter().position(|&b| b == b'\n');
            let end = nl.map_or(text.len(), |n| pos + n + 1);
            let mut content_end = end;
            while content_end > pos && matches!(text[content_end - 1], b'\n' | b'\r') {
                content_end -= 1;
            }
            let line = &text[pos..content_end];
            let trimmed = String::from_utf8_lossy(line).trim().to_string();
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                if let Some(last) = sections.last_mut() {
                    last.span.1 = pos;
                }
                section = trimmed[1..trimmed.len() - 1].trim().to_string();
                sections.push(IniSection {
                    name: section.clone(),
                    span: (pos, text.len()),
                });
            } else if let Some(eq) = line.iter().position(|&b| b == b'=') {
                let key = String::from_utf8_lossy(&line[..eq]).trim().to_string();
                let mut vs = pos + eq + 1;
                let mut ve = content_end;
                while vs < ve && text[vs].is_ascii_whitespace() {
                    vs += 1;
                }
                while ve > vs && text[ve - 1].is_ascii_whitespace() {
                    ve -= 1;
                }
                if !key.is_empty() && !key.starts_with(';') {
                    entries.push(IniEntry {
                        section: section.clone(),
                        key,
                        value: (vs, ve),
                        line: (pos, end),
                    });
                }
            }
            pos = end;
        }
        Ini {
            text,
            sections,
            entries,
        }
    }

    pub fn value_of(&self, e: &IniEntry) -> String {
        String::from_utf8_lossy(&self.text[e.value.0..e.value.1]).into_owned()
    }

    pub fn get(&self, section: &str, key: &str) -> Option<String> {
        self.entries
            .iter()
            .find(|e| e.section == section && e.key == key)
            .map(|e| self.value_of(e))
    }

    fn get_u32(&self, section: &str, key: &str) -> Result<u32> {
        let v = self
            .get(section, key)
            .ok_or_else(|| Error::container(format!("Slidedat.ini lacks [{section}] {key}")))?;
        v.parse()
            .map_err(|_| Error::container(format!("[{section}] {key} = {v} is not a count")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    pub hier: bool,
    pub layer: u32,
    pub value: u32,
    pub layer_name: String,
    pub value_name: String,
    pub section: Option<String>,
    pub kind: ImageKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRecord {
    pub hier: bool,
    pub layer: u32,
    pub value: u32,
    pub data_file: u32,
    pub blob_offset: u64,
    pub blob_len: u64,
    /// Position of this record inside Index.dat.
    pub record_offset: u64,
}

impl IndexRecord {
    pub fn is_linked(&self) -> bool {
        self.value != UNLINKED
    }
}

#[derive(Debug, Clone)]
pub struct MiraxContainer {
    pub stub: PathBuf,
    pub dir: PathBuf,
    pub slidedat: Ini,
    pub version: String,
    pub index_file: String,
    pub index: Vec<IndexRecord>,
    pub data_files: Vec<String>,
    pub layers: Vec<Layer>,
    pub warnings: Vec<String>,
}

impl MiraxContainer {
    pub fn slidedat_path(&self) -> PathBuf {
        self.dir.join("Slidedat.ini")
    }

    pub fn index_path(&self) -> PathBuf {
        self.dir.join(&self.index_file)
    }

    pub fn data_path(&self, i: usize) -> PathBuf {
        self.dir.join(&self.data_files[i])
    }

    /// Every file of the container, stub first.
    pub fn files(&self) -> Vec<PathBuf> {
        let mut v = vec![self.stub.clone(), self.slidedat_path(), self.index_path()];
        v.extend((0..self.data_files.len()).map(|i| self.data_path(i)));
        v
    }

    pub fn layer_for(&self, r: &IndexRecord) -> Option<&Layer> {
        self.layers
            .iter()
            .find(|l| l.hier == r.hier && l.layer == r.layer && l.value == r.value)
    }

    /// Records for layers of one kind, linked or not.
    pub fn records_of_kind(&self, kind: ImageKind) -> Vec<&IndexRecord> {
        self.index
            .iter()
            .filter(|r| self.layer_for(r).map(|l| l.kind) == Some(kind))
            .collect()
    }
}

/// Layer role from its value name.
pub fn classify_layer(hier: bool, name: &str) -> ImageKind {
    let n = name.to_ascii_lowercase();
    if hier {
        ImageKind::Tissue
    } else if n.contains("barcode") || n.contains("label") {
        ImageKind::Label
    } else if n.contains("macro") || n.contains("preview") {
        ImageKind::Macro
    } else if n.contains("thumbnail") {
        ImageKind::Thumbnail
    } else {
        ImageKind::Unknown
    }
}

fn read_layers(ini: &Ini) -> Result<Vec<Layer>> {
    let mut layers = Vec::new();
    for (hier, prefix) in [(true, "HIER"), (false, "NONHIER")] {
        let count = ini.get_u32("HIERARCHICAL", &format!("{prefix}_COUNT"))?;
        for l in 0..count {
            let layer_name = ini
                .get("HIERARCHICAL", &format!("{prefix}_{l}_NAME"))
                .unwrap_or_default();
            let values = ini.get_u32("HIERARCHICAL", &format!("{prefix}_{l}_COUNT"))?;
            for v in 0..values {
                let key = format!("{prefix}_{l}_VAL_{v}");
                let value_name = ini
                    .get("HIERARCHICAL", &key)
                    .ok_or_else(|| Error::container(format!("Slidedat.ini lacks {key}")))?;
                layers.push(Layer {
                    hier,
                    layer: l,
                    value: v,
                    kind: classify_layer(hier, &value_name),
                    section: ini.get("HIERARCHICAL", &format!("{key}_SECTION")),
                    layer_name: layer_name.clone(),
                    value_name,
                });
            }
        }
    }
    Ok(layers)
}

/// Decodes Index.dat given the version string it must start with.
pub fn parse_index(bytes: &[u8], version: &str) -> Result<Vec<IndexRecord>> {
    let v = version.as_bytes();
    if !bytes.starts_with(v) {
        return Err(Error::container("Index.dat version does not match Slidedat.ini"));
    }
    let mut pos = v.len();
    let count = bytes
        .get(pos..pos + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::container("Index.dat truncated before record count"))?;
    pos += 4;
    let needed = count as u64 * RECORD_LEN;
    if (bytes.len() - pos) as u64 != needed {
        return Err(Error::container(format!(
            "Index.dat holds {} record bytes, expected {needed} for {count} records",
            bytes.len() - pos
        )));
    }
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let f: Vec<u32> = bytes[pos..pos + RECORD_LEN as usize]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push(IndexRecord {
            hier: f[0] == 1,
            layer: f[1],
            value: f[2],
            data_file: f[3],
            blob_offset: f[4] as u64,
            blob_len: f[5] as u64,
            record_offset: pos as u64,
        });
        pos += RECORD_LEN as usize;
    }
    Ok(out)
}

/// Builds a container from already-read parts. `data_lens` holds the length
/// of each data file named in Slidedat.ini.
pub fn from_parts(
    stub: PathBuf,
    dir: PathBuf,
    slidedat: Vec<u8>,
    index: &[u8],
    data_lens: &[u64],
) -> Result<MiraxContainer> {
    let ini = Ini::parse(slidedat);
    let version = ini
        .get("GENERAL", "SLIDE_VERSION")
        .ok_or_else(|| Error::container("Slidedat.ini lacks SLIDE_VERSION"))?;
    let mut warnings = Vec::new();
    if !KNOWN_VERSIONS.contains(&version.as_str()) {
        warnings.push(format!("unrecognized Mirax version {version}; sensitive keys may be missed"));
    }
    let index_file = ini
        .get("HIERARCHICAL", "INDEXFILE")
        .unwrap_or_else(|| "Index.dat".to_string());
    let file_count = ini.get_u32("DATAFILE", "FILE_COUNT")?;
    let data_files: Vec<String> = (0..file_count)
        .map(|i| {
            ini.get("DATAFILE", &format!("FILE_{i}"))
                .ok_or_else(|| Error::container(format!("Slidedat.ini lacks FILE_{i}")))
        })
        .collect::<Result<_>>()?;
    if data_lens.len() != data_files.len() {
        return Err(Error::container("data file count mismatch"));
    }
    let layers = read_layers(&ini)?;
    let records = parse_index(index, &version)?;

    for r in &records {
        let len = *data_lens.get(r.data_file as usize).ok_or_else(|| {
            Error::container(format!("index record names data file {}", r.data_file))
        })?;
        if r.blob_offset + r.blob_len > len {
            return Err(Error::container(format!(
                "index record [{}, +{}) lies outside data file {} of {len} bytes",
                r.blob_offset, r.blob_len, r.data_file
            )));
        }
    }
    let container = MiraxContainer {
        stub,
        dir,
        slidedat: ini,
        version,
        index_file,
        index: records,
        data_files,
        layers,
        warnings,
    };
    for r in container.index.iter().filter(|r| r.is_linked()) {
        if container.layer_for(r).is_none() {
            return Err(Error::container(format!(
                "index record refers to missing layer {}/{}/{}",
                if r.hier { "hier" } else { "nonhier" },
                r.layer,
                r.value
            )));
        }
    }
    for l in &container.layers {
        let linked = container
            .index
            .iter()
            .any(|r| r.is_linked() && r.hier == l.hier && r.layer == l.layer && r.value == l.value);
        if !linked {
            return Err(Error::container(format!(
                "layer {} has no index record",
                l.value_name
            )));
        }
    }
    Ok(container)
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::container(format!("missing container file {}", path.display()))
        }
        _ => Error::io(path, e),
    })
}

pub fn open_mirax(mrxs: &Path) -> Result<MiraxContainer> {
    if !mrxs.is_file() {
        return Err(Error::container(format!("missing stub {}", mrxs.display())));
    }
    let dir = mirax_data_dir(mrxs)
        .ok_or_else(|| Error::container("stub path has no file stem"))?;
    let slidedat = read_file(&dir.join("Slidedat.ini"))?;
    let ini = Ini::parse(slidedat.clone());
    let index_name = ini
        .get("HIERARCHICAL", "INDEXFILE")
        .unwrap_or_else(|| "Index.dat".to_string());
    let index = read_file(&dir.join(&index_name))?;
    let file_count = ini.get_u32("DATAFILE", "FILE_COUNT")?;
    let mut lens = Vec::new();
    for i in 0..file_count {
        let name = ini
            .get("DATAFILE", &format!("FILE_{i}"))
            .ok_or_else(|| Error::container(format!("Slidedat.ini lacks FILE_{i}")))?;
        let p = dir.join(name);
        let meta = std::fs::metadata(&p)
            .map_err(|_| Error::container(format!("missing data file {}", p.display())))?;
        lens.push(meta.len());
    }
    from_parts(mrxs.to_path_buf(), dir, slidedat, &index, &lens)
}

/// Planned changes to a whole container.
#[derive(Debug, Clone)]
pub struct MiraxPlan {
    /// One plan per data file, indexed like `MiraxContainer::data_files`.
    pub data: Vec<PatchPlan>,
    pub index: PatchPlan,
    pub slidedat: Vec<u8>,
    pub summary: PlanSummary,
}

impl MiraxPlan {
    pub fn patch_count(&self) -> usize {
        self.data.iter().map(PatchPlan::len).sum::<usize>() + self.index.len()
    }
}

pub fn plan_mirax(c: &MiraxContainer, config: &AnonymizationConfig) -> Result<MiraxPlan> {
    let catalog = profile(Vendor::Mirax)?;
    let mut summary = PlanSummary {
        warnings: c.warnings.clone(),
        ..Default::default()
    };

    let doomed = |kind: ImageKind| {
        kind == ImageKind::Label || (kind == ImageKind::Macro && !config.keep_macro)
    };

    let mut data: Vec<PatchPlan> = vec![PatchPlan::new(); c.data_files.len()];
    for r in &c.index {
        let kind = match c.layer_for(r) {
            Some(l) => l.kind,
            // already unlinked by an earlier run
            None if !r.is_linked() => ImageKind::Label,
            None => continue,
        };
        if doomed(kind) && r.blob_len > 0 {
            data[r.data_file as usize].push(Patch::zeros(
                r.blob_offset,
                r.blob_len,
                format!("wipe {} blob", kind.as_str()),
            ));
        }
    }
    for l in &c.layers {
        if doomed(l.kind) {
            summary.destroyed_images.push(l.kind);
        }
    }
    if !c.layers.iter().any(|l| l.kind == ImageKind::Label) {
        summary.warnings.push("no label layer found".into());
    }

    let removed: Vec<&Layer> = if config.overwrite_only {
        Vec::new()
    } else {
        c.layers.iter().filter(|l| doomed(l.kind)).collect()
    };

    let mut index = PatchPlan::new();
    for r in c.index.iter().filter(|r| r.is_linked() && !r.hier) {
        let gone = removed
            .iter()
            .any(|l| !l.hier && l.layer == r.layer && l.value == r.value);
        let new_value = if gone {
            UNLINKED
        } else {
            r.value
                - removed
                    .iter()
                    .filter(|l| !l.hier && l.layer == r.layer && l.value < r.value)
                    .count() as u32
        };
        if new_value != r.value {
            index.push(Patch::new(
                r.record_offset + 8,
                new_value.to_le_bytes().to_vec(),
                "renumber index record",
            ));
        }
    }

    let mut blanked = Vec::new();
    for e in &c.slidedat.entries {
        if let Some(k) = catalog.key(&e.key) {
            if e.value.1 > e.value.0 {
                blanked.push(e.value);
                summary.blanked_attributes.push(BlankedAttribute {
                    key: k.name.to_string(),
                    category: k.category,
                });
            }
        }
    }
    let slidedat = rewrite_slidedat(&c.slidedat, &removed, &blanked);

    for (i, p) in data.iter().enumerate() {
        let len = std::fs::metadata(c.data_path(i)).map(|m| m.len()).unwrap_or(u64::MAX);
        p.validate(len)?;
    }
    Ok(MiraxPlan {
        data,
        index,
        slidedat,
        summary,
    })
}

/// Splits `NONHIER_3_VAL_7_SECTION` into `(false, 3, 7, "_SECTION")`.
fn parse_value_key(key: &str) -> Option<(bool, u32, u32, &str)> {
    let (hier, rest) = if let Some(r) = key.strip_prefix("NONHIER_") {
        (false, r)
    } else {
        let r = key.strip_prefix("HIER_")?;
        (true, r)
    };
    let (layer, rest) = rest.split_once('_')?;
    let rest = rest.strip_prefix("VAL_")?;
    let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    Some((
        hier,
        layer.parse().ok()?,
        rest[..digits].parse().ok()?,
        &rest[digits..],
    ))
}

fn parse_count_key(key: &str) -> Option<(bool, u32)> {
    let (hier, rest) = if let Some(r) = key.strip_prefix("NONHIER_") {
        (false, r)
    } else {
        let r = key.strip_prefix("HIER_")?;
        (true, r)
    };
    let layer = rest.strip_suffix("_COUNT")?;
    Some((hier, layer.parse().ok()?))
}

/// Produces the new Slidedat.ini text: removed layer values and their
/// sections dropped, later values renumbered, counts adjusted, and the given
/// value spans blanked.
pub fn rewrite_slidedat(ini: &Ini, removed: &[&Layer], blank: &[(usize, usize)]) -> Vec<u8> {
    let text = &ini.text;
    let dropped_sections: Vec<(usize, usize)> = ini
        .sections
        .iter()
        .filter(|s| {
            removed
                .iter()
                .any(|l| l.section.as_deref() == Some(s.name.as_str()))
        })
        .map(|s| s.span)
        .collect();
    let in_dropped = |pos: usize| dropped_sections.iter().any(|&(a, b)| pos >= a && pos < b);

    let mut out = Vec::with_capacity(text.len());
    let mut pos = 0;
    let mut entries = ini.entries.iter().peekable();
    while pos < text.len() {
        let nl = text[pos..].iter().position(|&b| b == b'\n');
        let end = nl.map_or(text.len(), |n| pos + n + 1);
        while entries.peek().is_some_and(|e| e.line.0 < pos) {
            entries.next();
        }
        let entry = entries.peek().filter(|e| e.line.0 == pos).copied();
        if in_dropped(pos) {
            pos = end;
            continue;
        }
        let Some(e) = entry else {
            out.extend_from_slice(&text[pos..end]);
            pos = end;
            continue;
        };
        let mut line = text[pos..end].to_vec();
        let rel = |x: usize| x - pos;

        if e.section == "HIERARCHICAL" {
            if let Some((hier, layer, value, suffix)) = parse_value_key(&e.key) {
                let gone = removed
                    .iter()
                    .any(|l| l.hier == hier && l.layer == layer && l.value == value);
                if gone {
                    pos = end;
                    continue;
                }
                let shift = removed
                    .iter()
                    .filter(|l| l.hier == hier && l.layer == layer && l.value < value)
                    .count() as u32;
                if shift > 0 {
                    let prefix = if hier { "HIER" } else { "NONHIER" };
                    let new_key = format!("{prefix}_{layer}_VAL_{}{suffix}", value - shift);
                    let key_start = line.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(0);
                    let key_end = key_start + e.key.len();
                    line.splice(key_start..key_end, new_key.into_bytes());
                }
            } else if let Some((hier, layer)) = parse_count_key(&e.key) {
                let n = removed
                    .iter()
                    .filter(|l| l.hier == hier && l.layer == layer)
                    .count() as u32;
                if n > 0 {
                    let old: u32 = ini.value_of(e).parse().unwrap_or(0);
                    let new = old.saturating_sub(n).to_string();
                    line.splice(rel(e.value.0)..rel(e.value.1), new.into_bytes());
                }
            }
        }
        if blank.contains(&e.value) {
            for b in &mut line[rel(e.value.0)..rel(e.value.1)] {
                *b = FILLER;
            }
        }
        out.extend_from_slice(&line);
        pos = end;
    }
    out
}

/// Reads blob bytes of a record through `data`.
pub fn read_blob(r: &IndexRecord, data: &[&dyn ByteSource]) -> Result<Vec<u8>> {
    data.get(r.data_file as usize)
        .ok_or_else(|| Error::container("record names missing data file"))?
        .read_exact(r.blob_offset, r.blob_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    const INI: &str = "\u{feff}[GENERAL]\r\nSLIDE_VERSION = 01.02\r\nSLIDE_ID = 4711-AB\r\n\r\n[HIERARCHICAL]\r\nHIER_COUNT = 1\r\nHIER_0_NAME = Slide zoom level\r\nHIER_0_COUNT = 1\r\nHIER_0_VAL_0 = ZoomLevel_0\r\nHIER_0_VAL_0_SECTION = LAYER_0_LEVEL_0_SECTION\r\nNONHIER_COUNT = 1\r\nNONHIER_0_NAME = Scan data layer\r\nNONHIER_0_COUNT = 3\r\nNONHIER_0_VAL_0 = ScanDataLayer_SlidePreview\r\nNONHIER_0_VAL_0_SECTION = NONHIER_0_VAL_0_SECTION\r\nNONHIER_0_VAL_1 = ScanDataLayer_SlideBarcode\r\nNONHIER_0_VAL_1_SECTION = NONHIER_0_VAL_1_SECTION\r\nNONHIER_0_VAL_2 = ScanDataLayer_SlideThumbnail\r\nNONHIER_0_VAL_2_SECTION = NONHIER_0_VAL_2_SECTION\r\n\r\n[NONHIER_0_VAL_1_SECTION]\r\nIMAGE_FORMAT = BMP\r\n\r\n[NONHIER_0_VAL_2_SECTION]\r\nIMAGE_FORMAT = JPEG\r\n";

    #[test]
    fn ini_spans_point_at_values() {
        let ini = Ini::parse(INI.as_bytes().to_vec());
        let e = ini.entries.iter().find(|e| e.key == "SLIDE_ID").unwrap();
        assert_eq!(&ini.text[e.value.0..e.value.1], b"4711-AB");
        assert_eq!(e.section, "GENERAL");
        assert_eq!(ini.get("HIERARCHICAL", "NONHIER_0_COUNT").as_deref(), Some("3"));
        assert_eq!(ini.sections.len(), 4);
    }

    #[test]
    fn layers_are_classified_by_name() {
        let ini = Ini::parse(INI.as_bytes().to_vec());
        let kinds: Vec<ImageKind> = read_layers(&ini).unwrap().iter().map(|l| l.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ImageKind::Tissue,
                ImageKind::Macro,
                ImageKind::Label,
                ImageKind::Thumbnail
            ]
        );
    }

    #[test]
    fn slide_id_is_blanked_same_length() {
        let ini = Ini::parse(INI.as_bytes().to_vec());
        let e = ini.entries.iter().find(|e| e.key == "SLIDE_ID").unwrap();
        let out = rewrite_slidedat(&ini, &[], &[e.value]);
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("SLIDE_ID = XXXXXXX\r\n"));
        assert_eq!(s.len(), INI.len());
    }

    #[test]
    fn removing_label_renumbers_and_drops_section() {
        let ini = Ini::parse(INI.as_bytes().to_vec());
        let layers = read_layers(&ini).unwrap();
        let label: Vec<&Layer> = layers.iter().filter(|l| l.kind == ImageKind::Label).collect();
        let out = rewrite_slidedat(&ini, &label, &[]);
        let re = Ini::parse(out);
        assert_eq!(re.get("HIERARCHICAL", "NONHIER_0_COUNT").as_deref(), Some("2"));
        assert_eq!(
            re.get("HIERARCHICAL", "NONHIER_0_VAL_1").as_deref(),
            Some("ScanDataLayer_SlideThumbnail")
        );
        assert_eq!(
            re.get("HIERARCHICAL", "NONHIER_0_VAL_1_SECTION").as_deref(),
            Some("NONHIER_0_VAL_2_SECTION")
        );
        assert!(re.get("HIERARCHICAL", "NONHIER_0_VAL_2").is_none());
        assert!(!re.sections.iter().any(|s| s.name == "NONHIER_0_VAL_1_SECTION"));
        assert!(re.sections.iter().any(|s| s.name == "NONHIER_0_VAL_2_SECTION"));
        let relayers = read_layers(&re).unwrap();
        assert!(!relayers.iter().any(|l| l.kind == ImageKind::Label));
        assert!(re.text.starts_with(b"\xEF\xBB\xBF"));
    }

    #[test]
    fn value_key_parsing() {
        assert_eq!(
            parse_value_key("NONHIER_3_VAL_7_SECTION"),
            Some((false, 3, 7, "_SECTION"))
        );
        assert_eq!(parse_value_key("HIER_0_VAL_12"), Some((true, 0, 12, "")));
        assert_eq!(parse_value_key("NONHIER_0_NAME"), None);
        assert_eq!(parse_count_key("NONHIER_0_COUNT"), Some((false, 0)));
        assert_eq!(parse_count_key("HIER_COUNT"), None);
    }

    #[test]
    fn index_length_must_match_count() {
        let mut idx = b"01.02".to_vec();
        idx.extend_from_slice(&1u32.to_le_bytes());
        idx.extend_from_slice(&[0u8; 20]);
        assert!(matches!(parse_index(&idx, "01.02"), Err(Error::CorruptContainer(_))));
        idx.extend_from_slice(&[0u8; 4]);
        assert_eq!(parse_index(&idx, "01.02").unwrap().len(), 1);
        assert!(parse_index(&idx, "01.03").is_err());
    }
}
