//! Blind oracles: byte-level sentinel search and structural re-parse.
//!
//! The search knows nothing about formats. Besides the raw bytes of every
//! sentinel it also looks for each sentinel as it would appear inside base64
//! text at any of the three possible byte alignments.

use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::Serialize;

use super::SentinelProfile;
use crate::error::{Error, Result};
use crate::format::{self, Vendor};
use crate::io::{open_source, ByteSource};
use crate::tiff::{self, tags};
use crate::vendors::{isyntax, mirax};

/// Shortest base64 fragment worth searching for.
const MIN_B64: usize = 8;
const WINDOW: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Raw,
    Base64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Needle {
    pub label: String,
    pub bytes: Vec<u8>,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hit {
    pub path: PathBuf,
    pub offset: u64,
    pub sentinel: String,
    pub encoding: Encoding,
}

/// Base64 text fully determined by `data` when it starts at byte alignment
/// 0, 1 or 2 inside an encoded stream.
pub fn base64_fragments(data: &[u8]) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for shift in 0..3usize {
        let mut buf = vec![0u8; shift];
        buf.extend_from_slice(data);
        let enc = STANDARD.encode(&buf).into_bytes();
        let skip = if shift == 0 { 0 } else { shift + 1 };
        let full = buf.len() * 8 / 6;
        if full > skip && full - skip >= MIN_B64 {
            out.push(enc[skip..full].to_vec());
        }
    }
    out
}

fn needles_for(label: &str, data: &[u8]) -> Vec<Needle> {
    let mut v = vec![Needle {
        label: label.to_string(),
        bytes: data.to_vec(),
        encoding: Encoding::Raw,
    }];
    v.extend(base64_fragments(data).into_iter().map(|b| Needle {
        label: label.to_string(),
        bytes: b,
        encoding: Encoding::Base64,
    }));
    v
}

pub fn string_needles(p: &SentinelProfile) -> Vec<Needle> {
    p.entries()
        .iter()
        .flat_map(|(role, value)| needles_for(role, value.as_bytes()))
        .collect()
}

/// The label motif, raw and as base64 of two consecutive repetitions.
pub fn motif_needles(p: &SentinelProfile) -> Vec<Needle> {
    let m = p.label_pixel_pattern();
    if m.is_empty() {
        return Vec::new();
    }
    let mut v = vec![Needle {
        label: "label_pixel_pattern".into(),
        bytes: m.to_vec(),
        encoding: Encoding::Raw,
    }];
    let twice = [m, m].concat();
    v.extend(base64_fragments(&twice).into_iter().map(|b| Needle {
        label: "label_pixel_pattern".into(),
        bytes: b,
        encoding: Encoding::Base64,
    }));
    v
}

fn find_all(hay: &[u8], needle: &[u8], mut f: impl FnMut(usize)) {
    if needle.is_empty() || needle.len() > hay.len() {
        return;
    }
    let first = needle[0];
    let last_start = hay.len() - needle.len();
    let mut i = 0;
    while i <= last_start {
        match hay[i..=last_start].iter().position(|&b| b == first) {
            Some(p) => {
                i += p;
                if &hay[i..i + needle.len()] == needle {
                    f(i);
                }
                i += 1;
            }
            None => break,
        }
    }
}

/// Offsets and needle indices of every occurrence in `src`.
pub fn find_in_source<S: ByteSource + ?Sized>(src: &S, needles: &[Needle]) -> Result<Vec<(u64, usize)>> {
    let longest = needles.iter().map(|n| n.bytes.len()).max().unwrap_or(0) as u64;
    if longest == 0 {
        return Ok(Vec::new());
    }
    let mut hits = Vec::new();
    let mut pos = 0u64;
    let total = src.len();
    while pos < total {
        let take = (total - pos).min(WINDOW + longest - 1);
        let buf = src.read_exact(pos, take)?;
        let fresh = (take).min(WINDOW);
        for (ni, n) in needles.iter().enumerate() {
            find_all(&buf, &n.bytes, |at| {
                // matches starting in the overlap are reported by the next window
                if (at as u64) < fresh || pos + take == total {
                    hits.push((pos + at as u64, ni));
                }
            });
        }
        if pos + take == total {
            break;
        }
        pos += fresh;
    }
    hits.sort_unstable();
    hits.dedup();
    Ok(hits)
}

/// Searches every byte of every file for every sentinel and the label motif.
pub fn sensitivity_scan<P: AsRef<Path>>(paths: &[P], profile: &SentinelProfile) -> Result<Vec<Hit>> {
    let mut needles = string_needles(profile);
    needles.extend(motif_needles(profile));
    let mut hits = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let src = open_source(p)?;
        for (offset, ni) in find_in_source(&src, &needles)? {
            hits.push(Hit {
                path: p.to_path_buf(),
                offset,
                sentinel: needles[ni].label.clone(),
                encoding: needles[ni].encoding,
            });
        }
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecodedImage {
    pub index: usize,
    pub width: u64,
    pub height: u64,
    pub payload_len: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub vendor: Vendor,
    /// Reachable TIFF directories, Mirax index records, or iSyntax images.
    pub directories: usize,
    pub decoded: Vec<DecodedImage>,
}

/// Independent strict re-parse of a slide.
pub fn structural_check(path: &Path) -> Result<StructureReport> {
    let src = open_source(path)?;
    let vendor = format::detect(path, &src)?.vendor;
    match vendor {
        Vendor::Mirax => {
            let c = mirax::open_mirax(path)?;
            Ok(StructureReport {
                vendor,
                directories: c.index.iter().filter(|r| r.is_linked()).count(),
                decoded: Vec::new(),
            })
        }
        Vendor::PhilipsISyntax => {
            let h = isyntax::parse_header(&src)?;
            let mut decoded = Vec::new();
            for (i, img) in h.images.iter().enumerate() {
                let bytes = isyntax::decode_payload(h.text(&img.payload))
                    .ok_or_else(|| Error::corrupt(format!("image {i}: payload is not base64")))?;
                if let Some((w, hgt, px)) = isyntax::parse_ppm(&bytes) {
                    decoded.push(DecodedImage {
                        index: i,
                        width: w as u64,
                        height: hgt as u64,
                        payload_len: px.len() as u64,
                    });
                }
            }
            Ok(StructureReport {
                vendor,
                directories: h.images.len(),
                decoded,
            })
        }
        Vendor::Unknown => Err(Error::UnsupportedFormat(path.display().to_string())),
        _ => {
            let model = tiff::parse(&src)?;
            model.check_strict(&src)?;
            let mut decoded = Vec::new();
            for (i, ifd) in model.ifds.iter().enumerate() {
                let get = |t| ifd.entry(t).and_then(|e| model.value_u64(&src, e).ok());
                let (Some(w), Some(h)) = (get(tags::IMAGE_WIDTH), get(tags::IMAGE_LENGTH)) else {
                    continue;
                };
                if get(tags::COMPRESSION).unwrap_or(1) != 1 || ifd.is_tiled() {
                    continue;
                }
                let spp = get(tags::SAMPLES_PER_PIXEL).unwrap_or(1);
                let spans = model.payload_spans(&src, i)?;
                let len: u64 = spans.iter().map(|s| s.1).sum();
                if len != w * h * spp {
                    return Err(Error::corrupt(format!(
                        "directory {i}: {len} payload bytes for a {w}x{h}x{spp} image"
                    )));
                }
                decoded.push(DecodedImage {
                    index: i,
                    width: w,
                    height: h,
                    payload_len: len,
                });
            }
            Ok(StructureReport {
                vendor,
                directories: model.ifds.len(),
                decoded,
            })
        }
    }
}
