//! Philips iSyntax XML header.
//!
//! The file starts with an XML document terminated by an EOT byte (0x04);
//! the binary tile stream follows and is never touched. Attributes look like
//!
//! ```text
//! <Attribute Name="DICOM_DEVICE_SERIAL_NUMBER" Group="0x0018" Element="0x1000" PMSVR="IString">FMT0296</Attribute>
//! ```
//!
//! `PMSVR` declares the value type; numeric attributes may carry `Min` and
//! `Max` bounds. Label and macro images are `DataObject`s holding
//! `PIM_DP_IMAGE_TYPE` (`LABELIMAGE` / `MACROIMAGE`), `PIM_DP_IMAGE_DATA`
//! (base64) and `DICOM_ROWS` / `DICOM_COLUMNS`.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use quick_xml::events::Event;
use quick_xml::Reader;

use crate::engine::AnonymizationConfig;
use crate::error::{Error, Result};
use crate::format::{profile, Vendor};
use crate::io::ByteSource;
use crate::patch::{Patch, PatchPlan};
use crate::tiff::{ImageKind, FILLER};

use super::{BlankedAttribute, PlanSummary};

pub const END_OF_HEADER: u8 = 0x04;
pub const MAX_HEADER: u64 = 64 << 20;
pub const EPOCH_DIGITS: &[u8] = b"19700101000000000000000000000000";

pub const IMAGE_TYPE: &str = "PIM_DP_IMAGE_TYPE";
pub const IMAGE_DATA: &str = "PIM_DP_IMAGE_DATA";
pub const ROWS: &str = "DICOM_ROWS";
pub const COLUMNS: &str = "DICOM_COLUMNS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    String,
    Unsigned,
    Signed,
    DateTime,
    Other,
}

impl ValueType {
    fn from_pmsvr(s: &str) -> Self {
        match s {
            "IString" | "IStringArray" => ValueType::String,
            "IUInt8" | "IUInt16" | "IUInt32" | "IUInt64" => ValueType::Unsigned,
            "IInt8" | "IInt16" | "IInt32" | "IInt64" => ValueType::Signed,
            "IDateTime" | "IDate" | "ITime" => ValueType::DateTime,
            _ => ValueType::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlValue {
    pub name: String,
    /// Byte range of the element text within the file.
    pub value_span: (usize, usize),
    pub declared_type: String,
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl XmlValue {
    pub fn value_type(&self) -> ValueType {
        ValueType::from_pmsvr(&self.declared_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageObject {
    pub kind: ImageKind,
    pub payload: XmlValue,
    pub rows: Option<XmlValue>,
    pub columns: Option<XmlValue>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ISyntaxHeader {
    pub header: Vec<u8>,
    /// Offset of the end-of-header byte.
    pub header_end: u64,
    pub attributes: Vec<XmlValue>,
    pub images: Vec<ImageObject>,
    pub warnings: Vec<String>,
}

impl ISyntaxHeader {
    pub fn text(&self, v: &XmlValue) -> &[u8] {
        &self.header[v.value_span.0..v.value_span.1]
    }

    pub fn attribute(&self, name: &str) -> Option<&XmlValue> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

/// Reads up to the end-of-header marker.
pub fn read_header<S: ByteSource + ?Sized>(src: &S) -> Result<(Vec<u8>, u64)> {
    let mut header = Vec::new();
    let mut pos = 0u64;
    let limit = src.len().min(MAX_HEADER);
    while pos < limit {
        let chunk = src.read_prefix(pos, (limit - pos).min(64 * 1024))?;
        if chunk.is_empty() {
            break;
        }
        if let Some(i) = chunk.iter().position(|&b| b == END_OF_HEADER) {
            header.extend_from_slice(&chunk[..i]);
            return Ok((header, pos + i as u64));
        }
        pos += chunk.len() as u64;
        header.extend_from_slice(&chunk);
    }
    Err(Error::corrupt("iSyntax header has no end-of-header marker"))
}

fn attr(e: &quick_xml::events::BytesStart, name: &[u8]) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a.map_err(|x| Error::corrupt(format!("iSyntax header: {x}")))?;
        if a.key.as_ref() == name {
            return Ok(Some(String::from_utf8_lossy(&a.value).into_owned()));
        }
    }
    Ok(None)
}

fn parse_bound(v: Option<String>, what: &str, name: &str) -> Result<Option<i64>> {
    v.map(|s| {
        s.trim().parse::<i64>().map_err(|_| {
            Error::corrupt(format!("attribute {name}: {what} bound {s:?} is not an integer"))
        })
    })
    .transpose()
}

struct Open {
    name: String,
    declared_type: String,
    min: Option<i64>,
    max: Option<i64>,
    content_start: usize,
    has_children: bool,
}

pub fn parse_header<S: ByteSource + ?Sized>(src: &S) -> Result<ISyntaxHeader> {
    let (header, header_end) = read_header(src)?;
    let mut reader = Reader::from_reader(header.as_slice());
    reader.config_mut().check_end_names = true;

    let mut attributes = Vec::new();
    let mut images = Vec::new();
    let mut open: Vec<Open> = Vec::new();
    let mut objects: Vec<Vec<XmlValue>> = Vec::new();
    let mut depth = 0usize;
    loop {
        let before = reader.buffer_position() as usize;
        let event = reader
            .read_event()
            .map_err(|e| Error::corrupt(format!("iSyntax header malformed at byte {before}: {e}")))?;
        match event {
            Event::Start(e) => {
                depth += 1;
                if let Some(parent) = open.last_mut() {
                    parent.has_children = true;
                }
                match e.name().as_ref() {
                    b"Attribute" => {
                        let name = attr(&e, b"Name")?
                            .ok_or_else(|| Error::corrupt("Attribute element without Name"))?;
                        open.push(Open {
                            declared_type: attr(&e, b"PMSVR")?.unwrap_or_default(),
                            min: parse_bound(attr(&e, b"Min")?, "Min", &name)?,
                            max: parse_bound(attr(&e, b"Max")?, "Max", &name)?,
                            name,
                            content_start: reader.buffer_position() as usize,
                            has_children: false,
                        });
                    }
                    b"DataObject" => objects.push(Vec::new()),
                    _ => {}
                }
            }
            Event::End(e) => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| Error::corrupt("unbalanced iSyntax header"))?;
                match e.name().as_ref() {
                    b"Attribute" => {
                        let o = open
                            .pop()
                            .ok_or_else(|| Error::corrupt("unbalanced Attribute element"))?;
                        if !o.has_children {
                            let v = XmlValue {
                                name: o.name,
                                value_span: (o.content_start, before),
                                declared_type: o.declared_type,
                                min: o.min,
                                max: o.max,
                            };
                            if let Some(obj) = objects.last_mut() {
                                obj.push(v.clone());
                            }
                            attributes.push(v);
                        }
                    }
                    b"DataObject" => {
                        let obj = objects
                            .pop()
                            .ok_or_else(|| Error::corrupt("unbalanced DataObject element"))?;
                        if let Some(img) = image_object(&header, obj) {
                            images.push(img);
                        }
                    }
                    _ => {}
                }
            }
            Event::Empty(e) if e.name().as_ref() == b"Attribute" => {
                if let Some(parent) = open.last_mut() {
                    parent.has_children = true;
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 || !open.is_empty() {
        return Err(Error::corrupt("iSyntax header ends inside an element"));
    }
    if attributes.is_empty() {
        return Err(Error::corrupt("iSyntax header has no attributes"));
    }
    let mut warnings = Vec::new();
    if !images.iter().any(|i| i.kind == ImageKind::Label) {
        warnings.push("no label image found".into());
    }
    Ok(ISyntaxHeader {
        header,
        header_end,
        attributes,
        images,
        warnings,
    })
}

fn image_object(header: &[u8], values: Vec<XmlValue>) -> Option<ImageObject> {
    let find = |n: &str| values.iter().find(|v| v.name == n).cloned();
    let kind_text = find(IMAGE_TYPE)?;
    let kind = match String::from_utf8_lossy(&header[kind_text.value_span.0..kind_text.value_span.1])
        .trim()
    {
        "LABELIMAGE" => ImageKind::Label,
        "MACROIMAGE" => ImageKind::Macro,
        _ => return None,
    };
    Some(ImageObject {
        kind,
        payload: find(IMAGE_DATA)?,
        rows: find(ROWS),
        columns: find(COLUMNS),
    })
}

/// Same-length filler that respects the declared type.
pub fn filler_for(v: &XmlValue, current: &[u8]) -> Result<Vec<u8>> {
    let n = current.len();
    match v.value_type() {
        ValueType::String | ValueType::Other => Ok(vec![FILLER; n]),
        ValueType::Unsigned | ValueType::Signed => {
            let low = v.min.unwrap_or(0);
            if let Some(max) = v.max {
                if low > max {
                    return Err(violation(v, format!("empty interval [{low}, {max}]")));
                }
            }
            let s = if low < 0 {
                format!("-{:0>width$}", -low, width = n.saturating_sub(1))
            } else {
                format!("{low:0>n$}")
            };
            if s.len() != n {
                return Err(violation(
                    v,
                    format!("lower bound {low} does not fit in {n} characters"),
                ));
            }
            Ok(s.into_bytes())
        }
        ValueType::DateTime => {
            let mut digits = EPOCH_DIGITS.iter().cycle();
            Ok(current
                .iter()
                .map(|&b| {
                    if b.is_ascii_digit() {
                        *digits.next().expect("cycle")
                    } else if b.is_ascii_alphabetic() && b != b'T' && b != b'Z' {
                        FILLER
                    } else {
                        b
                    }
                })
                .collect())
        }
    }
}

fn violation(v: &XmlValue, reason: String) -> Error {
    Error::ReplacementConstraintViolation {
        key: v.name.clone(),
        reason,
    }
}

pub fn ppm(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a binary PPM into `(width, height, pixels)`.
pub fn parse_ppm(bytes: &[u8]) -> Option<(u32, u32, &[u8])> {
    let mut fields = Vec::new();
    let mut pos = 2;
    if !bytes.starts_with(b"P6") {
        return None;
    }
    while fields.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).ok()?.parse::<u32>().ok()?);
    }
    pos += 1;
    let (w, h) = (fields[0], fields[1]);
    let pixels = bytes.get(pos..)?;
    (pixels.len() as u64 == w as u64 * h as u64 * 3).then_some((w, h, pixels))
}

/// Decodes a payload, ignoring whitespace.
pub fn decode_payload(text: &[u8]) -> Option<Vec<u8>> {
    let compact: Vec<u8> = text.iter().copied().filter(|b| !b.is_ascii_whitespace()).collect();
    STANDARD.decode(compact).ok()
}

/// True if the payload decodes to a single-colour image.
pub fn is_blank_payload(text: &[u8]) -> bool {
    let Some(bytes) = decode_payload(text) else {
        return false;
    };
    match parse_ppm(&bytes) {
        Some((_, _, px)) => px.iter().all(|&b| b == 0),
        None => bytes.iter().all(|&b| b == 0),
    }
}

fn numeric(header: &ISyntaxHeader, v: &Option<XmlValue>) -> Option<u32> {
    v.as_ref()
        .and_then(|v| std::str::from_utf8(header.text(v)).ok()?.trim().parse().ok())
}

/// Base64 text of a black image exactly `len` bytes long, plus its size.
fn blank_payload(len: usize, width: u32, height: u32) -> Option<(Vec<u8>, u32, u32)> {
    for (w, h) in [(width, height), (1, 1)] {
        if w == 0 || h == 0 {
            continue;
        }
        let img = ppm(w, h, &vec![0u8; w as usize * h as usize * 3]);
        let mut text = STANDARD.encode(img).into_bytes();
        if text.len() <= len {
            text.resize(len, b' ');
            return Some((text, w, h));
        }
    }
    None
}

fn patch_dimension(
    header: &ISyntaxHeader,
    plan: &mut PatchPlan,
    v: &Option<XmlValue>,
    value: u32,
) -> Result<()> {
    let Some(v) = v else {
        return Ok(());
    };
    let current = header.text(v);
    let n = current.len();
    let s = format!("{value:0>n$}");
    if s.len() != n {
        return Err(violation(v, format!("{value} does not fit in {n} characters")));
    }
    if s.as_bytes() != current {
        plan.push(Patch::new(
            v.value_span.0 as u64,
            s.into_bytes(),
            format!("rewrite {}", v.name),
        ));
    }
    Ok(())
}

pub fn plan_isyntax(
    header: &ISyntaxHeader,
    config: &AnonymizationConfig,
) -> Result<(PatchPlan, PlanSummary)> {
    let catalog = profile(Vendor::PhilipsISyntax)?;
    let mut plan = PatchPlan::new();
    let mut summary = PlanSummary {
        warnings: header.warnings.clone(),
        ..Default::default()
    };

    for img in &header.images {
        if img.kind == ImageKind::Macro && config.keep_macro {
            continue;
        }
        let len = img.payload.value_span.1 - img.payload.value_span.0;
        let (w, h) = (
            numeric(header, &img.columns).unwrap_or(1),
            numeric(header, &img.rows).unwrap_or(1),
        );
        let (text, bw, bh) = blank_payload(len, w, h).ok_or_else(|| {
            violation(&img.payload, format!("no blank image fits in {len} base64 characters"))
        })?;
        plan.push(Patch::new(
            img.payload.value_span.0 as u64,
            text,
            format!("blank {} image", img.kind.as_str()),
        ));
        patch_dimension(header, &mut plan, &img.columns, bw)?;
        patch_dimension(header, &mut plan, &img.rows, bh)?;
        summary.destroyed_images.push(img.kind);
    }

    for a in &header.attributes {
        let Some(key) = catalog.key(&a.name) else {
            continue;
        };
        let current = header.text(a);
        if current.is_empty() {
            continue;
        }
        let filler = filler_for(a, current)?;
        plan.push(Patch::new(
            a.value_span.0 as u64,
            filler,
            format!("blank {}", a.name),
        ));
        summary.blanked_attributes.push(BlankedAttribute {
            key: key.name.to_string(),
            category: key.category,
        });
    }
    plan.validate(header.header_end)?;
    Ok((plan, summary))
}

/// True if every catalog attribute already holds its filler.
pub fn attributes_blank(header: &ISyntaxHeader) -> bool {
    let Ok(catalog) = profile(Vendor::PhilipsISyntax) else {
        return false;
    };
    header
        .attributes
        .iter()
        .filter(|a| catalog.key(&a.name).is_some())
        .all(|a| {
            let cur = header.text(a);
            filler_for(a, cur).map(|f| f == cur).unwrap_or(false)
        })
}
