//! Roche/Ventana BIF and Ventana TIFF.
//!
//! Label and macro share one directory (`Label_Image`). Metadata sits in XML
//! attributes inside the XMP packet or the image description.

use super::{push_found, text, Container, TiffScan};
use crate::error::Result;
use crate::format::{profile, Vendor};
use crate::io::ByteSource;
use crate::tiff::{tags, ImageKind, TiffModel};

pub fn classify<S: ByteSource + ?Sized>(model: &TiffModel, src: &S, index: usize) -> ImageKind {
    let desc = model
        .description(src, index)
        .ok()
        .flatten()
        .unwrap_or_default()
        .to_ascii_lowercase();
    if desc.contains("label") {
        ImageKind::LabelMacro
    } else if desc.contains("thumbnail") {
        ImageKind::Thumbnail
    } else if desc.contains("level=") || model.ifds[index].is_tiled() {
        ImageKind::Tissue
    } else {
        ImageKind::Unknown
    }
}

pub(super) fn scan_attributes<S: ByteSource + ?Sized>(scan: &mut TiffScan, src: &S) -> Result<()> {
    let keys: Vec<&str> = profile(Vendor::Ventana)?.key_names().collect();
    for i in 0..scan.model.ifds.len() {
        for tag in [tags::IMAGE_DESCRIPTION, tags::XMP] {
            let Some(entry) = scan.model.ifds[i].entry(tag) else {
                continue;
            };
            let raw = scan.model.value_bytes(src, entry)?;
            let end = raw.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
            let body = &raw[..end];
            if !body.contains(&b'<') {
                continue;
            }
            let found = match text::xml_attributes(body, &keys) {
                Ok(found) => found,
                Err(why) => {
                    scan.warnings.push(format!(
                        "directory {i}: tag {tag} XML unparseable ({why}); using raw key scan"
                    ));
                    text::raw_xml_attributes(body, &keys)
                }
            };
            push_found(scan, i, tag, found, Container::XmlAttribute);
        }
    }
    Ok(())
}
