//! Minimal TIFF/BigTIFF emitter for synthetic slides.
//!
//! Every image is stored uncompressed unless a compression code is set
//! explicitly, and the layout of everything written is returned so tests can
//! compare the parser against known offsets.

use std::collections::BTreeMap;

use crate::io::Endian;
use crate::tiff::tags;

#[derive(Debug, Clone, PartialEq)]
pub enum TagValue {
    Ascii(String),
    Short(Vec<u16>),
    Long(Vec<u32>),
    Float(f32),
    Undefined(Vec<u8>),
}

#[derive(Debug, Clone)]
pub enum Layout {
    Strips { rows_per_strip: u32 },
    Tiles { width: u32, height: u32 },
}

#[derive(Debug, Clone)]
pub struct ImageSpec {
    pub width: u32,
    pub height: u32,
    pub samples: u16,
    pub compression: u16,
    pub layout: Layout,
    /// One byte vector per strip or tile.
    pub chunks: Vec<Vec<u8>>,
    pub extra: Vec<(u16, TagValue)>,
}

impl ImageSpec {
    /// Uncompressed 8-bit image split into strips of `rows_per_strip` rows.
    pub fn stripped(width: u32, height: u32, samples: u16, rows_per_strip: u32, pixels: &[u8]) -> Self {
        let row = (width * samples as u32) as usize;
        let chunks = pixels
            .chunks(row * rows_per_strip as usize)
            .map(<[u8]>::to_vec)
            .collect();
        ImageSpec {
            width,
            height,
            samples,
            compression: 1,
            layout: Layout::Strips { rows_per_strip },
            chunks,
            extra: Vec::new(),
        }
    }

    /// Uncompressed 8-bit image made of `tiles` tiles of `tile` x `tile` pixels.
    pub fn tiled(width: u32, height: u32, samples: u16, tile: u32, tiles: Vec<Vec<u8>>) -> Self {
        ImageSpec {
            width,
            height,
            samples,
            compression: 1,
            layout: Layout::Tiles {
                width: tile,
                height: tile,
            },
            chunks: tiles,
            extra: Vec::new(),
        }
    }

    pub fn with(mut self, tag: u16, value: TagValue) -> Self {
        self.extra.push((tag, value));
        self
    }
}

/// Where each piece of a written directory landed.
#[derive(Debug, Clone, Default)]
pub struct DirLayout {
    pub offset: u64,
    pub next_field: u64,
    pub payload: Vec<(u64, u64)>,
    /// Tag id to `(value offset, value length)`.
    pub values: BTreeMap<u16, (u64, u64)>,
}

#[derive(Debug, Clone)]
pub struct Written {
    pub bytes: Vec<u8>,
    pub dirs: Vec<DirLayout>,
}

pub struct TiffWriter {
    order: Endian,
    big: bool,
    out: Vec<u8>,
}

impl TiffWriter {
    pub fn new(order: Endian, big: bool) -> Self {
        TiffWriter {
            order,
            big,
            out: Vec::new(),
        }
    }

    fn align(&mut self) {
        if self.out.len() % 2 == 1 {
            self.out.push(0);
        }
    }

    fn put_offset(&mut self, v: u64) {
        if self.big {
            self.out.extend_from_slice(&self.order.put_u64(v));
        } else {
            self.out.extend_from_slice(&self.order.put_u32(v as u32));
        }
    }

    fn offset_width(&self) -> usize {
        if self.big {
            8
        } else {
            4
        }
    }

    fn encode_value(&self, v: &TagValue) -> (u16, u64, Vec<u8>) {
        let e = self.order;
        match v {
            TagValue::Ascii(s) => {
                let mut b = s.as_bytes().to_vec();
                b.push(0);
                (2, b.len() as u64, b)
            }
            TagValue::Short(v) => (3, v.len() as u64, v.iter().flat_map(|x| e.put_u16(*x)).collect()),
            TagValue::Long(v) => (4, v.len() as u64, v.iter().flat_map(|x| e.put_u32(*x)).collect()),
            TagValue::Float(f) => (11, 1, e.put_u32(f.to_bits()).to_vec()),
            TagValue::Undefined(b) => (7, b.len() as u64, b.clone()),
        }
    }

    fn encode_offsets(&self, v: &[u64]) -> (u16, u64, Vec<u8>) {
        let e = self.order;
        if self.big {
            (16, v.len() as u64, v.iter().flat_map(|x| e.put_u64(*x)).collect())
        } else {
            (4, v.len() as u64, v.iter().flat_map(|x| e.put_u32(*x as u32)).collect())
        }
    }

    /// Writes a complete file holding `images` in chain order.
    pub fn write(mut self, images: &[ImageSpec]) -> Written {
        let e = self.order;
        self.out.extend_from_slice(match e {
            Endian::Little => b"II",
            Endian::Big => b"MM",
        });
        if self.big {
            self.out.extend_from_slice(&e.put_u16(43));
            self.out.extend_from_slice(&e.put_u16(8));
            self.out.extend_from_slice(&e.put_u16(0));
        } else {
            self.out.extend_from_slice(&e.put_u16(42));
        }
        let first_field = self.out.len();
        self.put_offset(0);

        let mut dirs = Vec::with_capacity(images.len());
        let mut prev_next_field = first_field;
        for img in images {
            let mut layout = DirLayout::default();
            for chunk in &img.chunks {
                self.align();
                layout.payload.push((self.out.len() as u64, chunk.len() as u64));
                self.out.extend_from_slice(chunk);
            }

            let mut fields: Vec<(u16, TagValue)> = vec![
                (tags::IMAGE_WIDTH, TagValue::Long(vec![img.width])),
                (tags::IMAGE_LENGTH, TagValue::Long(vec![img.height])),
                (tags::BITS_PER_SAMPLE, TagValue::Short(vec![8; img.samples as usize])),
                (tags::COMPRESSION, TagValue::Short(vec![img.compression])),
                (
                    tags::PHOTOMETRIC,
                    TagValue::Short(vec![if img.samples >= 3 { 2 } else { 1 }]),
                ),
                (tags::SAMPLES_PER_PIXEL, TagValue::Short(vec![img.samples])),
                (tags::PLANAR_CONFIG, TagValue::Short(vec![1])),
            ];
            match img.layout {
                Layout::Strips { rows_per_strip } => {
                    fields.push((tags::ROWS_PER_STRIP, TagValue::Long(vec![rows_per_strip])));
                }
                Layout::Tiles { width, height } => {
                    fields.push((tags::TILE_WIDTH, TagValue::Long(vec![width])));
                    fields.push((tags::TILE_LENGTH, TagValue::Long(vec![height])));
                }
            }
            fields.extend(img.extra.iter().cloned());

            let mut encoded: Vec<(u16, u16, u64, Vec<u8>)> = fields
                .iter()
                .map(|(tag, v)| {
                    let (ty, count, bytes) = self.encode_value(v);
                    (*tag, ty, count, bytes)
                })
                .collect();
            let offsets: Vec<u64> = layout.payload.iter().map(|p| p.0).collect();
            let counts: Vec<u64> = layout.payload.iter().map(|p| p.1).collect();
            let (off_tag, cnt_tag) = match img.layout {
                Layout::Strips { .. } => (tags::STRIP_OFFSETS, tags::STRIP_BYTE_COUNTS),
                Layout::Tiles { .. } => (tags::TILE_OFFSETS, tags::TILE_BYTE_COUNTS),
            };
            let (ty, n, b) = self.encode_offsets(&offsets);
            encoded.push((off_tag, ty, n, b));
            let (ty, n, b) = self.encode_offsets(&counts);
            encoded.push((cnt_tag, ty, n, b));
            encoded.sort_by_key(|t| t.0);

            // out-of-line values first, then the directory
            let mut placed: Vec<Option<u64>> = Vec::with_capacity(encoded.len());
            for (_, _, _, bytes) in &encoded {
                if bytes.len() > self.offset_width() {
                    self.align();
                    placed.push(Some(self.out.len() as u64));
                    self.out.extend_from_slice(bytes);
                } else {
                    placed.push(None);
                }
            }

            self.align();
            let dir_offset = self.out.len() as u64;
            layout.offset = dir_offset;
            if self.big {
                self.out.extend_from_slice(&e.put_u64(encoded.len() as u64));
            } else {
                self.out.extend_from_slice(&e.put_u16(encoded.len() as u16));
            }
            for ((tag, ty, count, bytes), at) in encoded.iter().zip(&placed) {
                self.out.extend_from_slice(&e.put_u16(*tag));
                self.out.extend_from_slice(&e.put_u16(*ty));
                if self.big {
                    self.out.extend_from_slice(&e.put_u64(*count));
                } else {
                    self.out.extend_from_slice(&e.put_u32(*count as u32));
                }
                match at {
                    Some(off) => {
                        layout.values.insert(*tag, (*off, bytes.len() as u64));
                        self.put_offset(*off);
                    }
                    None => {
                        let field = self.out.len() as u64;
                        layout.values.insert(*tag, (field, bytes.len() as u64));
                        let mut inline = bytes.clone();
                        inline.resize(self.offset_width(), 0);
                        self.out.extend_from_slice(&inline);
                    }
                }
            }
            layout.next_field = self.out.len() as u64;
            self.put_offset(0);

            let link = self.encode_link(dir_offset);
            self.out[prev_next_field..prev_next_field + link.len()].copy_from_slice(&link);
            prev_next_field = layout.next_field as usize;
            dirs.push(layout);
        }
        Written {
            bytes: self.out,
            dirs,
        }
    }

    fn encode_link(&self, v: u64) -> Vec<u8> {
        if self.big {
            self.order.put_u64(v).to_vec()
        } else {
            self.order.put_u32(v as u32).to_vec()
        }
    }
}
