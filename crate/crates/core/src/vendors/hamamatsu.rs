//! Hamamatsu NDPI.
//!
//! There is no separate label image: the macro overview shows the whole glass
//! slide including the label. The macro directory is recognized by its
//! source-lens tag, which holds -1 instead of a magnification.

use super::{push_found, text, Container, TiffScan};
use crate::error::Result;
use crate::format::{profile, Vendor};
use crate::io::ByteSource;
use crate::tiff::{tags, ImageKind, TiffModel};

const MACRO_LENS: f64 = -1.0;

pub fn classify<S: ByteSource + ?Sized>(model: &TiffModel, src: &S, index: usize) -> ImageKind {
    let Some(entry) = model.ifds[index].entry(tags::NDPI_SOURCE_LENS) else {
        return if index == 0 {
            ImageKind::Tissue
        } else {
            ImageKind::Unknown
        };
    };
    match model.value_f64(src, entry) {
        Ok(lens) if lens == MACRO_LENS => ImageKind::LabelMacro,
        Ok(lens) if lens > 0.0 => ImageKind::Tissue,
        // -2 marks the focus map
        _ => ImageKind::Unknown,
    }
}

fn is_text_type(data_type: u16) -> bool {
    matches!(data_type, 1 | 2 | 7)
}

pub(super) fn scan_attributes<S: ByteSource + ?Sized>(scan: &mut TiffScan, src: &S) -> Result<()> {
    let keys: Vec<&str> = profile(Vendor::Hamamatsu)?.key_names().collect();
    let mut private_tags = 0;
    for i in 0..scan.model.ifds.len() {
        let candidates: Vec<(u16, Container)> = scan.model.ifds[i]
            .entries
            .iter()
            .filter(|e| is_text_type(e.data_type))
            .filter_map(|e| {
                if e.tag_id >= tags::NDPI_FORMAT_FLAG {
                    Some((e.tag_id, Container::PrivateTag))
                } else if e.tag_id == tags::IMAGE_DESCRIPTION {
                    Some((e.tag_id, Container::DescriptionText))
                } else {
                    None
                }
            })
            .collect();
        private_tags += scan.model.ifds[i]
            .entries
            .iter()
            .filter(|e| e.tag_id >= tags::NDPI_FORMAT_FLAG)
            .count();
        for (tag, container) in candidates {
            let entry = scan.model.ifds[i].entry(tag).expect("listed above");
            let raw = scan.model.value_bytes(src, entry)?;
            let found = text::line_pairs(&raw, &keys);
            if !found.is_empty() && container == Container::PrivateTag {
                scan.warnings.push(format!(
                    "directory {i}: metadata found in private tag {tag}"
                ));
            }
            push_found(scan, i, tag, found, container);
        }
    }
    if private_tags == 0 {
        scan.warnings
            .push("no private NDPI tags present; metadata scan limited to descriptions".into());
    }
    Ok(())
}
