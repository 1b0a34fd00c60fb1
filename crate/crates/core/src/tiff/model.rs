use std::collections::HashSet;

use serde::Serialize;

use super::header::{parse_header, TiffHeader};
use super::tags;
use crate::error::{Error, Result};
use crate::io::ByteSource;

/// Hard cap on the number of directories followed in one chain.
pub const MAX_DIRECTORIES: usize = 65_536;

/// Role of an image inside a slide file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageKind {
    Tissue,
    Label,
    Macro,
    /// A single image holding both the slide label and the macro overview.
    LabelMacro,
    Thumbnail,
    Unknown,
}

impl ImageKind {
    pub fn shows_label(self) -> bool {
        matches!(self, ImageKind::Label | ImageKind::LabelMacro)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::Tissue => "tissue",
            ImageKind::Label => "label",
            ImageKind::Macro => "macro",
            ImageKind::LabelMacro => "label+macro",
            ImageKind::Thumbnail => "thumbnail",
            ImageKind::Unknown => "unknown",
        }
    }
}

/// Size in bytes of one element of a TIFF field type. Unknown types count as 1.
pub fn type_size(data_type: u16) -> u64 {
    match data_type {
        1 | 2 | 6 | 7 => 1,
        3 | 8 => 2,
        4 | 9 | 11 | 13 => 4,
        5 | 10 | 12 | 16 | 17 | 18 => 8,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagEntry {
    pub tag_id: u16,
    pub data_type: u16,
    pub count: u64,
    /// Raw contents of the value field: either the value itself or an offset.
    pub inline_or_offset: u64,
    pub entry_location: u64,
    pub value_is_inline: bool,
    /// File offset where the value bytes start.
    pub value_location: u64,
}

impl TagEntry {
    pub fn value_len(&self) -> u64 {
        self.count.saturating_mul(type_size(self.data_type))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ifd {
    pub directory_offset: u64,
    pub entries: Vec<TagEntry>,
    pub next_offset: u64,
    pub next_offset_field_location: u64,
    pub kind: ImageKind,
}

impl Ifd {
    pub fn entry(&self, tag_id: u16) -> Option<&TagEntry> {
        self.entries.iter().find(|e| e.tag_id == tag_id)
    }

    pub fn has(&self, tag_id: u16) -> bool {
        self.entry(tag_id).is_some()
    }

    pub fn is_tiled(&self) -> bool {
        self.has(tags::TILE_OFFSETS)
    }

    /// Bytes occupied by the directory itself: count, entries and next field.
    pub fn byte_len(&self, header: &TiffHeader) -> u64 {
        header.count_width()
            + self.entries.len() as u64 * header.entry_len()
            + header.offset_width()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiffModel {
    pub header: TiffHeader,
    pub ifds: Vec<Ifd>,
    pub warnings: Vec<String>,
}

/// Parses header and directory chain.
pub fn parse<S: ByteSource + ?Sized>(src: &S) -> Result<TiffModel> {
    let header = parse_header(src)?;
    parse_chain(src, header)
}

pub fn parse_chain<S: ByteSource + ?Sized>(src: &S, header: TiffHeader) -> Result<TiffModel> {
    let mut ifds = Vec::new();
    let mut warnings = Vec::new();
    let mut visited = HashSet::new();
    let mut offset = header.first_ifd_offset;
    while offset != 0 {
        if !visited.insert(offset) {
            return Err(Error::corrupt(format!(
                "directory chain cycles back to offset {offset}"
            )));
        }
        if ifds.len() >= MAX_DIRECTORIES {
            return Err(Error::corrupt(format!(
                "more than {MAX_DIRECTORIES} directories"
            )));
        }
        let ifd = read_ifd(src, &header, offset, ifds.len(), &mut warnings)?;
        offset = ifd.next_offset;
        ifds.push(ifd);
    }
    Ok(TiffModel {
        header,
        ifds,
        warnings,
    })
}

fn read_ifd<S: ByteSource + ?Sized>(
    src: &S,
    header: &TiffHeader,
    offset: u64,
    index: usize,
    warnings: &mut Vec<String>,
) -> Result<Ifd> {
    let order = header.byte_order;
    let len = src.len();
    if offset < header.byte_len() || offset.saturating_add(header.count_width()) > len {
        return Err(Error::corrupt(format!(
            "directory {index} offset {offset} outside file of {len} bytes"
        )));
    }
    let count_bytes = src.read_exact(offset, header.count_width())?;
    let count = if header.big_tiff {
        order.u64(&count_bytes)
    } else {
        order.u16(&count_bytes) as u64
    };
    let body_len = count
        .checked_mul(header.entry_len())
        .and_then(|n| n.checked_add(header.offset_width()))
        .filter(|n| offset + header.count_width() + n <= len)
        .ok_or_else(|| {
            Error::corrupt(format!(
                "directory {index} at {offset} truncated ({count} entries)"
            ))
        })?;
    let body_start = offset + header.count_width();
    let body = src.read_exact(body_start, body_len)?;

    let entry_len = header.entry_len() as usize;
    let mut entries = Vec::with_capacity(count as usize);
    for i in 0..count as usize {
        let raw = &body[i * entry_len..(i + 1) * entry_len];
        let entry_location = body_start + (i * entry_len) as u64;
        let tag_id = order.u16(&raw[0..2]);
        let data_type = order.u16(&raw[2..4]);
        let (count, field, field_at) = if header.big_tiff {
            (order.u64(&raw[4..12]), &raw[12..20], 12)
        } else {
            (order.u32(&raw[4..8]) as u64, &raw[8..12], 8)
        };
        let mut entry = TagEntry {
            tag_id,
            data_type,
            count,
            inline_or_offset: header.decode_offset(field),
            entry_location,
            value_is_inline: false,
            value_location: 0,
        };
        entry.value_is_inline = entry.value_len() <= header.inline_capacity();
        entry.value_location = if entry.value_is_inline {
            entry_location + field_at
        } else {
            entry.inline_or_offset
        };
        entries.push(entry);
    }

    if entries.windows(2).any(|w| w[0].tag_id >= w[1].tag_id) {
        warnings.push(format!("directory {index}: tags are not in ascending order"));
    }
    if entries.iter().any(|e| e.tag_id == tags::SUB_IFDS) {
        warnings.push(format!(
            "directory {index}: SubIFD tree present and not traversed"
        ));
    }

    let next_field = body_start + count * header.entry_len();
    let next_offset = header.decode_offset(&body[body.len() - header.offset_width() as usize..]);
    if count == 0 && next_offset != 0 {
        warnings.push(format!("directory {index}: empty directory with a successor"));
    }
    if next_offset != 0 && (next_offset < header.byte_len() || next_offset >= len) {
        return Err(Error::corrupt(format!(
            "directory {index}: next offset {next_offset} outside file of {len} bytes"
        )));
    }
    Ok(Ifd {
        directory_offset: offset,
        entries,
        next_offset,
        next_offset_field_location: next_field,
        kind: ImageKind::Unknown,
    })
}

impl TiffModel {
    pub fn order(&self) -> crate::io::Endian {
        self.header.byte_order
    }

    /// Raw value bytes of a tag.
    pub fn value_bytes<S: ByteSource + ?Sized>(&self, src: &S, entry: &TagEntry) -> Result<Vec<u8>> {
        src.read_exact(entry.value_location, entry.value_len())
            .map_err(|_| {
                Error::corrupt(format!(
                    "tag {} value [{}, +{}) lies outside the file",
                    entry.tag_id,
                    entry.value_location,
                    entry.value_len()
                ))
            })
    }

    /// Integer array value (BYTE, SHORT, LONG, LONG8, IFD, IFD8).
    pub fn value_u64s<S: ByteSource + ?Sized>(&self, src: &S, entry: &TagEntry) -> Result<Vec<u64>> {
        let order = self.order();
        let raw = self.value_bytes(src, entry)?;
        let size = type_size(entry.data_type) as usize;
        let decode: fn(crate::io::Endian, &[u8]) -> u64 = match entry.data_type {
            1 | 7 => |_, b| b[0] as u64,
            3 => |e, b| e.u16(b) as u64,
            4 | 13 => |e, b| e.u32(b) as u64,
            16 | 18 => |e, b| e.u64(b),
            t => {
                return Err(Error::corrupt(format!(
                    "tag {} has non-integer type {t}",
                    entry.tag_id
                )))
            }
        };
        Ok(raw.chunks_exact(size).map(|c| decode(order, c)).collect())
    }

    pub fn value_u64<S: ByteSource + ?Sized>(&self, src: &S, entry: &TagEntry) -> Result<u64> {
        self.value_u64s(src, entry)?
            .first()
            .copied()
            .ok_or_else(|| Error::corrupt(format!("tag {} is empty", entry.tag_id)))
    }

    /// First value of a FLOAT/DOUBLE or integer tag as f64.
    pub fn value_f64<S: ByteSource + ?Sized>(&self, src: &S, entry: &TagEntry) -> Result<f64> {
        let order = self.order();
        let raw = self.value_bytes(src, entry)?;
        match entry.data_type {
            11 if raw.len() >= 4 => Ok(order.f32(&raw) as f64),
            12 if raw.len() >= 8 => Ok(order.f64(&raw)),
            8 if raw.len() >= 2 => Ok(order.u16(&raw) as i16 as f64),
            9 if raw.len() >= 4 => Ok(order.u32(&raw) as i32 as f64),
            _ => Ok(self.value_u64(src, entry)? as f64),
        }
    }

    /// ASCII value with trailing NULs trimmed, if the tag exists.
    pub fn ascii<S: ByteSource + ?Sized>(&self, src: &S, index: usize, tag_id: u16) -> Result<Option<String>> {
        match self.ifds[index].entry(tag_id) {
            Some(e) => {
                let raw = self.value_bytes(src, e)?;
                let end = raw.iter().rposition(|&b| b != 0).map_or(0, |p| p + 1);
                Ok(Some(String::from_utf8_lossy(&raw[..end]).into_owned()))
            }
            None => Ok(None),
        }
    }

    pub fn description<S: ByteSource + ?Sized>(&self, src: &S, index: usize) -> Result<Option<String>> {
        self.ascii(src, index, tags::IMAGE_DESCRIPTION)
    }

    /// Strip or tile payload spans `(offset, len)` of a directory, in file order
    /// of the offset array.
    pub fn payload_spans<S: ByteSource + ?Sized>(&self, src: &S, index: usize) -> Result<Vec<(u64, u64)>> {
        let ifd = &self.ifds[index];
        let (offs, counts) = match (
            ifd.entry(tags::TILE_OFFSETS),
            ifd.entry(tags::TILE_BYTE_COUNTS),
            ifd.entry(tags::STRIP_OFFSETS),
            ifd.entry(tags::STRIP_BYTE_COUNTS),
        ) {
            (Some(o), Some(c), _, _) | (None, None, Some(o), Some(c)) => (o, c),
            _ => {
                return Err(Error::corrupt(format!(
                    "directory {index} lacks matching offset/byte-count tags"
                )))
            }
        };
        let offsets = self.value_u64s(src, offs)?;
        let counts = self.value_u64s(src, counts)?;
        if offsets.len() != counts.len() {
            return Err(Error::corrupt(format!(
                "directory {index}: {} payload offsets but {} byte counts",
                offsets.len(),
                counts.len()
            )));
        }
        let total = src.len();
        let spans: Vec<(u64, u64)> = offsets.into_iter().zip(counts).collect();
        for &(o, n) in &spans {
            if o.checked_add(n).is_none_or(|end| end > total) {
                return Err(Error::corrupt(format!(
                    "directory {index}: payload [{o}, +{n}) outside file of {total} bytes"
                )));
            }
        }
        Ok(spans)
    }

    /// Encodes the directory structure (count, entries, next field) of `index`.
    pub fn encode_ifd(&self, index: usize) -> Vec<u8> {
        let h = &self.header;
        let e = h.byte_order;
        let ifd = &self.ifds[index];
        let mut out = Vec::with_capacity(ifd.byte_len(h) as usize);
        if h.big_tiff {
            out.extend_from_slice(&e.put_u64(ifd.entries.len() as u64));
        } else {
            out.extend_from_slice(&e.put_u16(ifd.entries.len() as u16));
        }
        for t in &ifd.entries {
            out.extend_from_slice(&e.put_u16(t.tag_id));
            out.extend_from_slice(&e.put_u16(t.data_type));
            if h.big_tiff {
                out.extend_from_slice(&e.put_u64(t.count));
            } else {
                out.extend_from_slice(&e.put_u32(t.count as u32));
            }
            out.extend_from_slice(&h.encode_offset(t.inline_or_offset));
        }
        out.extend_from_slice(&h.encode_offset(ifd.next_offset));
        out
    }

    /// Strict consistency checks beyond what [`parse_chain`] enforces:
    /// tag order, out-of-line value bounds, and payload bounds.
    pub fn check_strict<S: ByteSource + ?Sized>(&self, src: &S) -> Result<()> {
        for (i, ifd) in self.ifds.iter().enumerate() {
            if ifd.entries.windows(2).any(|w| w[0].tag_id >= w[1].tag_id) {
                return Err(Error::corrupt(format!("directory {i}: unsorted tags")));
            }
            for e in &ifd.entries {
                if !e.value_is_inline {
                    src.check_bounds(e.value_location, e.value_len()).map_err(|_| {
                        Error::corrupt(format!("directory {i}: tag {} value out of bounds", e.tag_id))
                    })?;
                }
            }
            if ifd.has(tags::STRIP_OFFSETS) || ifd.has(tags::TILE_OFFSETS) {
                self.payload_spans(src, i)?;
            }
        }
        Ok(())
    }
}
