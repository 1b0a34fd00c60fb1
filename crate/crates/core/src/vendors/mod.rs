//! Vendor handlers: locate associated images and sensitive attributes and
//! turn them into patch plans.

pub mod aperio;
pub mod hamamatsu;
pub mod isyntax;
pub mod mirax;
pub mod text;
pub mod ventana;

use serde::Serialize;

use crate::engine::AnonymizationConfig;
use crate::error::{Error, Result};
use crate::format::{profile, Category, Vendor};
use crate::io::ByteSource;
use crate::patch::PatchPlan;
use crate::tiff::{self, tags, ImageKind, TiffModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Container {
    DescriptionText,
    PrivateTag,
    XmlAttribute,
    /// Whole value of a standard ASCII tag.
    TagValue,
    IniValue,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensitiveAttribute {
    pub key: String,
    /// Absolute `(offset, len)` of the value bytes.
    pub value_span: (u64, u64),
    pub category: Category,
    pub container: Container,
    /// Directory and tag holding the value, for TIFF-family files.
    pub location: Option<(usize, u16)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociatedImageRef {
    pub ifd_index: usize,
    pub kind: ImageKind,
    pub pixel_payload_spans: Vec<(u64, u64)>,
    pub compressed: bool,
}

/// Everything a TIFF-family handler found in one file.
#[derive(Debug, Clone)]
pub struct TiffScan {
    pub vendor: Vendor,
    pub model: TiffModel,
    pub images: Vec<AssociatedImageRef>,
    pub attributes: Vec<SensitiveAttribute>,
    /// Payload spans of directories that must never be written.
    pub protected_spans: Vec<(u64, u64)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlankedAttribute {
    pub key: String,
    pub category: Category,
}

/// What a plan destroys, before it is applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanSummary {
    pub destroyed_images: Vec<ImageKind>,
    pub blanked_attributes: Vec<BlankedAttribute>,
    pub warnings: Vec<String>,
}

/// Classifies directory `index` with the cues used by `vendor`.
pub fn classify_ifd<S: ByteSource + ?Sized>(
    model: &TiffModel,
    src: &S,
    index: usize,
    vendor: Vendor,
) -> ImageKind {
    match vendor {
        Vendor::Aperio => aperio::classify(model, src, index),
        Vendor::Hamamatsu => hamamatsu::classify(model, src, index),
        Vendor::Ventana => ventana::classify(model, src, index),
        _ => generic_classify(model, index),
    }
}

fn generic_classify(model: &TiffModel, index: usize) -> ImageKind {
    if index == 0 || model.ifds[index].is_tiled() {
        ImageKind::Tissue
    } else {
        ImageKind::Unknown
    }
}

/// Parses, classifies and scans a TIFF-family file.
pub fn scan_tiff<S: ByteSource + ?Sized>(vendor: Vendor, src: &S) -> Result<TiffScan> {
    let mut model = tiff::parse(src)?;
    for i in 0..model.ifds.len() {
        model.ifds[i].kind = classify_ifd(&model, src, i, vendor);
    }
    let mut scan = TiffScan {
        vendor,
        warnings: model.warnings.clone(),
        model,
        images: Vec::new(),
        attributes: Vec::new(),
        protected_spans: Vec::new(),
    };
    for i in 0..scan.model.ifds.len() {
        let kind = scan.model.ifds[i].kind;
        if matches!(kind, ImageKind::Label | ImageKind::Macro | ImageKind::LabelMacro) {
            let spans = scan.model.payload_spans(src, i)?;
            let compressed = scan
                .model
                .ifds[i]
                .entry(tags::COMPRESSION)
                .map(|e| scan.model.value_u64(src, e).unwrap_or(1) != 1)
                .unwrap_or(false);
            scan.images.push(AssociatedImageRef {
                ifd_index: i,
                kind,
                pixel_payload_spans: spans,
                compressed,
            });
        } else if scan.model.ifds[i].has(tags::STRIP_OFFSETS) || scan.model.ifds[i].is_tiled() {
            match scan.model.payload_spans(src, i) {
                Ok(spans) => scan.protected_spans.extend(spans),
                Err(e) => scan
                    .warnings
                    .push(format!("directory {i} payload not checked: {e}")),
            }
        }
    }
    match vendor {
        Vendor::Aperio => aperio::scan_attributes(&mut scan, src)?,
        Vendor::Hamamatsu => hamamatsu::scan_attributes(&mut scan, src)?,
        Vendor::Ventana => ventana::scan_attributes(&mut scan, src)?,
        Vendor::GenericTiff => scan_standard_tags(&mut scan, src)?,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "{other} is not a TIFF-family format"
            )))
        }
    }
    if !scan.images.iter().any(|r| r.kind.shows_label()) && vendor != Vendor::GenericTiff {
        scan.warnings.push("no label image found".into());
    }
    Ok(scan)
}

/// Standard ASCII tags with acquisition details (date, artist, host).
fn scan_standard_tags<S: ByteSource + ?Sized>(scan: &mut TiffScan, src: &S) -> Result<()> {
    let cat = profile(Vendor::GenericTiff)?;
    let named = [
        (tags::DATE_TIME, "DateTime"),
        (tags::ARTIST, "Artist"),
        (tags::HOST_COMPUTER, "HostComputer"),
    ];
    for i in 0..scan.model.ifds.len() {
        for (tag, name) in named {
            let Some(e) = scan.model.ifds[i].entry(tag) else {
                continue;
            };
            let raw = scan.model.value_bytes(src, e)?;
            let len = raw.iter().position(|&b| b == 0).unwrap_or(raw.len());
            if len > 0 {
                scan.attributes.push(SensitiveAttribute {
                    key: name.to_string(),
                    value_span: (e.value_location, len as u64),
                    category: cat.key(name).map(|k| k.category).unwrap_or(Category::AcquisitionRelated),
                    container: Container::TagValue,
                    location: Some((i, tag)),
                });
            }
        }
    }
    Ok(())
}

/// Records text matches from a tag value as attributes.
pub(crate) fn push_found(
    scan: &mut TiffScan,
    index: usize,
    tag: u16,
    found: Vec<text::Found>,
    container: Container,
) {
    let Ok(cat) = profile(scan.vendor) else {
        return;
    };
    let Some(entry) = scan.model.ifds[index].entry(tag) else {
        return;
    };
    let base = entry.value_location;
    for f in found {
        let category = cat
            .key(&f.key)
            .map(|k| k.category)
            .unwrap_or(Category::AcquisitionRelated);
        scan.attributes.push(SensitiveAttribute {
            key: f.key,
            value_span: (base + f.start as u64, f.len as u64),
            category,
            container,
            location: Some((index, tag)),
        });
    }
}

/// Builds the patch plan for a scanned TIFF-family file.
pub fn plan_vendor_tiff<S: ByteSource + ?Sized>(
    scan: &TiffScan,
    src: &S,
    config: &AnonymizationConfig,
) -> Result<(PatchPlan, PlanSummary)> {
    if config.keep_macro && scan.images.iter().any(|r| r.kind == ImageKind::LabelMacro) {
        return Err(Error::LabelNotSeparable(scan.vendor));
    }
    let mut plan = PatchPlan::new();
    let mut summary = PlanSummary {
        warnings: scan.warnings.clone(),
        ..Default::default()
    };

    let targets: Vec<&AssociatedImageRef> = scan
        .images
        .iter()
        .filter(|r| r.kind != ImageKind::Macro || !config.keep_macro)
        .collect();
    for r in &targets {
        plan.extend(tiff::plan_wipe_image(&scan.model, src, r.ifd_index)?);
        summary.destroyed_images.push(r.kind);
        if r.compressed && config.overwrite_only {
            summary.warnings.push(format!(
                "compressed {} image zeroed but left linked; viewers may fail to decode it",
                r.kind.as_str()
            ));
        }
    }

    for a in &scan.attributes {
        let (index, tag) = a
            .location
            .ok_or_else(|| Error::corrupt(format!("attribute {} has no tag location", a.key)))?;
        let entry = scan.model.ifds[index]
            .entry(tag)
            .ok_or(Error::TagAbsent(tag))?;
        let rel = a.value_span.0 - entry.value_location;
        plan.extend(tiff::plan_blank_string(
            &scan.model,
            index,
            tag,
            &[(rel, a.value_span.1)],
        )?);
        summary.blanked_attributes.push(BlankedAttribute {
            key: a.key.clone(),
            category: a.category,
        });
    }

    if !config.overwrite_only && !targets.is_empty() {
        let indices: Vec<usize> = targets.iter().map(|r| r.ifd_index).collect();
        plan.extend(tiff::plan_unlink_ifds(&scan.model, &indices)?);
    }

    plan.validate(src.len())?;
    for &(o, n) in &scan.protected_spans {
        if n > 0 && plan.touches(o, n) {
            return Err(Error::corrupt(format!(
                "plan would modify protected image data at [{o}, +{n})"
            )));
        }
    }
    Ok((plan, summary))
}

/// True if every byte of the span equals the text filler.
pub(crate) fn is_blank_text(bytes: &[u8]) -> bool {
    bytes.iter().all(|&b| b == tiff::FILLER)
}
