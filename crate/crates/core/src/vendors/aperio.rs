//! Leica/Aperio SVS (classic TIFF and BigTIFF).
//!
//! Associated images carry a description whose second line starts with
//! `label` or `macro`. Metadata lives in the `|key = value|` segments of the
//! image descriptions.

use super::{push_found, text, Container, TiffScan};
use crate::error::Result;
use crate::format::{profile, Vendor};
use crate::io::ByteSource;
use crate::tiff::{tags, ImageKind, TiffModel};

fn has_token(description: &str, token: &str) -> bool {
    description
        .split(|c: char| c.is_whitespace() || c == '|')
        .any(|t| t == token)
}

pub fn classify<S: ByteSource + ?Sized>(model: &TiffModel, src: &S, index: usize) -> ImageKind {
    let desc = model.description(src, index).ok().flatten().unwrap_or_default();
    if has_token(&desc, "label") {
        ImageKind::Label
    } else if has_token(&desc, "macro") {
        ImageKind::Macro
    } else if index == 0 || model.ifds[index].is_tiled() {
        ImageKind::Tissue
    } else if index == 1 {
        ImageKind::Thumbnail
    } else {
        ImageKind::Unknown
    }
}

pub(super) fn scan_attributes<S: ByteSource + ?Sized>(scan: &mut TiffScan, src: &S) -> Result<()> {
    let keys: Vec<&str> = profile(Vendor::Aperio)?.key_names().collect();
    for i in 0..scan.model.ifds.len() {
        let Some(entry) = scan.model.ifds[i].entry(tags::IMAGE_DESCRIPTION) else {
            continue;
        };
        let raw = scan.model.value_bytes(src, entry)?;
        let found = text::pipe_pairs(&raw, &keys);
        push_found(scan, i, tags::IMAGE_DESCRIPTION, found, Container::DescriptionText);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_matching_is_whole_word() {
        assert!(has_token("Aperio Image Library v12\r\nlabel 387x463", "label"));
        assert!(has_token("Aperio Image Library v12\nmacro 1280x431", "macro"));
        assert!(!has_token("Aperio|User = labeler|", "label"));
        assert!(!has_token("relabel", "label"));
    }
}
