use super::model::TiffModel;
use crate::error::{Error, Result};
use crate::io::ByteSource;
use crate::patch::{Patch, PatchPlan};

/// Replacement byte for blanked text values.
pub const FILLER: u8 = b'X';

/// Zero-fills every strip or tile of directory `index`.
pub fn plan_wipe_image<S: ByteSource + ?Sized>(
    model: &TiffModel,
    src: &S,
    index: usize,
) -> Result<PatchPlan> {
    check_index(model, index)?;
    let mut spans = model.payload_spans(src, index)?;
    spans.retain(|&(_, n)| n > 0);
    spans.sort_unstable();
    spans.dedup();
    let mut plan = PatchPlan::new();
    for (offset, len) in spans {
        plan.push(Patch::zeros(
            offset,
            len,
            format!("wipe payload of directory {index}"),
        ));
    }
    Ok(plan)
}

/// Splices directory `index` out of the chain.
pub fn plan_unlink_ifd(model: &TiffModel, index: usize) -> Result<PatchPlan> {
    plan_unlink_ifds(model, &[index])
}

/// Splices several directories out of the chain at once.
///
/// Each surviving predecessor (or the header) gets its next-directory field
/// rewritten to the next surviving directory, or 0 when none follows.
pub fn plan_unlink_ifds(model: &TiffModel, indices: &[usize]) -> Result<PatchPlan> {
    for &i in indices {
        check_index(model, i)?;
    }
    let header = &model.header;
    let mut plan = PatchPlan::new();
    if indices.is_empty() {
        return Ok(plan);
    }
    if model.ifds.len() == indices.iter().collect::<std::collections::HashSet<_>>().len() {
        return Err(Error::corrupt("refusing to unlink every directory"));
    }
    let mut field = header.first_ifd_offset_field_location;
    let mut current = header.first_ifd_offset;
    let mut field_owner = "header".to_string();
    for (i, ifd) in model.ifds.iter().enumerate() {
        if indices.contains(&i) {
            continue;
        }
        if current != ifd.directory_offset {
            plan.push(Patch::new(
                field,
                header.encode_offset(ifd.directory_offset),
                format!("relink {field_owner} to directory {i}"),
            ));
        }
        field = ifd.next_offset_field_location;
        current = ifd.next_offset;
        field_owner = format!("directory {i}");
    }
    if current != 0 {
        plan.push(Patch::new(
            field,
            header.encode_offset(0),
            format!("terminate chain at {field_owner}"),
        ));
    }
    Ok(plan)
}

/// Overwrites spans of a tag's value with [`FILLER`]. Spans are relative to
/// the start of the value.
pub fn plan_blank_string(
    model: &TiffModel,
    index: usize,
    tag_id: u16,
    spans: &[(u64, u64)],
) -> Result<PatchPlan> {
    check_index(model, index)?;
    let entry = model.ifds[index]
        .entry(tag_id)
        .ok_or(Error::TagAbsent(tag_id))?;
    let value_len = entry.value_len();
    let mut plan = PatchPlan::new();
    for &(start, len) in spans {
        if start.checked_add(len).is_none_or(|end| end > value_len) {
            return Err(Error::OutOfBounds {
                offset: start,
                len,
                total: value_len,
            });
        }
        plan.push(Patch::new(
            entry.value_location + start,
            vec![FILLER; len as usize],
            format!("blank tag {tag_id} of directory {index}"),
        ));
    }
    Ok(plan)
}

fn check_index(model: &TiffModel, index: usize) -> Result<()> {
    if index < model.ifds.len() {
        Ok(())
    } else {
        Err(Error::OutOfBounds {
            offset: index as u64,
            len: 1,
            total: model.ifds.len() as u64,
        })
    }
}
