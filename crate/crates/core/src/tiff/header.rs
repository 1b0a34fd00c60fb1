use crate::error::{Error, Result};
use crate::io::{ByteSource, Endian};

pub const CLASSIC_MAGIC: u16 = 42;
pub const BIGTIFF_MAGIC: u16 = 43;
pub const CLASSIC_HEADER_LEN: u64 = 8;
pub const BIGTIFF_HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TiffHeader {
    pub byte_order: Endian,
    pub big_tiff: bool,
    pub first_ifd_offset: u64,
    pub first_ifd_offset_field_location: u64,
}

impl TiffHeader {
    pub fn byte_len(&self) -> u64 {
        if self.big_tiff {
            BIGTIFF_HEADER_LEN
        } else {
            CLASSIC_HEADER_LEN
        }
    }

    /// Width in bytes of offsets and of the next-directory field.
    pub fn offset_width(&self) -> u64 {
        if self.big_tiff {
            8
        } else {
            4
        }
    }

    pub fn entry_len(&self) -> u64 {
        if self.big_tiff {
            20
        } else {
            12
        }
    }

    pub fn count_width(&self) -> u64 {
        if self.big_tiff {
            8
        } else {
            2
        }
    }

    pub fn inline_capacity(&self) -> u64 {
        self.offset_width()
    }

    pub fn encode_offset(&self, value: u64) -> Vec<u8> {
        if self.big_tiff {
            self.byte_order.put_u64(value).to_vec()
        } else {
            self.byte_order.put_u32(value as u32).to_vec()
        }
    }

    pub fn decode_offset(&self, bytes: &[u8]) -> u64 {
        if self.big_tiff {
            self.byte_order.u64(bytes)
        } else {
            self.byte_order.u32(bytes) as u64
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let e = self.byte_order;
        let mut out = match e {
            Endian::Little => b"II".to_vec(),
            Endian::Big => b"MM".to_vec(),
        };
        if self.big_tiff {
            out.extend_from_slice(&e.put_u16(BIGTIFF_MAGIC));
            out.extend_from_slice(&e.put_u16(8));
            out.extend_from_slice(&e.put_u16(0));
        } else {
            out.extend_from_slice(&e.put_u16(CLASSIC_MAGIC));
        }
        out.extend_from_slice(&self.encode_offset(self.first_ifd_offset));
        out
    }
}

/// Byte order from the first two bytes, if they are a TIFF order mark.
pub fn sniff_order(prefix: &[u8]) -> Option<Endian> {
    match prefix.get(..2)? {
        b"II" => Some(Endian::Little),
        b"MM" => Some(Endian::Big),
        _ => None,
    }
}

/// True if the prefix carries a classic or BigTIFF signature.
pub fn has_tiff_magic(prefix: &[u8]) -> bool {
    match (sniff_order(prefix), prefix.get(2..4)) {
        (Some(e), Some(m)) => matches!(e.u16(m), CLASSIC_MAGIC | BIGTIFF_MAGIC),
        _ => false,
    }
}

pub fn parse_header<S: ByteSource + ?Sized>(src: &S) -> Result<TiffHeader> {
    let prefix = src.read_prefix(0, BIGTIFF_HEADER_LEN)?;
    let byte_order = sniff_order(&prefix)
        .ok_or_else(|| Error::UnsupportedFormat("missing TIFF byte-order mark".into()))?;
    if prefix.len() < 4 {
        return Err(Error::UnsupportedFormat("file too short for a TIFF header".into()));
    }
    let header = match byte_order.u16(&prefix[2..4]) {
        CLASSIC_MAGIC => {
            if prefix.len() < CLASSIC_HEADER_LEN as usize {
                return Err(Error::corrupt("truncated classic TIFF header"));
            }
            TiffHeader {
                byte_order,
                big_tiff: false,
                first_ifd_offset: byte_order.u32(&prefix[4..8]) as u64,
                first_ifd_offset_field_location: 4,
            }
        }
        BIGTIFF_MAGIC => {
            if prefix.len() < BIGTIFF_HEADER_LEN as usize {
                return Err(Error::corrupt("truncated BigTIFF header"));
            }
            let offset_size = byte_order.u16(&prefix[4..6]);
            if offset_size != 8 || byte_order.u16(&prefix[6..8]) != 0 {
                return Err(Error::corrupt(format!(
                    "unsupported BigTIFF offset size {offset_size}"
                )));
            }
            TiffHeader {
                byte_order,
                big_tiff: true,
                first_ifd_offset: byte_order.u64(&prefix[8..16]),
                first_ifd_offset_field_location: 8,
            }
        }
        other => {
            return Err(Error::UnsupportedFormat(format!("bad TIFF magic {other}")));
        }
    };
    if header.first_ifd_offset < header.byte_len() || header.first_ifd_offset >= src.len() {
        return Err(Error::corrupt(format!(
            "first directory offset {} outside file of {} bytes",
            header.first_ifd_offset,
            src.len()
        )));
    }
    Ok(header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::MemBytes;

    fn padded(mut b: Vec<u8>, to: usize) -> MemBytes {
        b.resize(to, 0);
        MemBytes::new(b)
    }

    #[test]
    fn little_endian_classic() {
        let src = padded(vec![0x49, 0x49, 0x2A, 0x00, 0x08, 0x00, 0x00, 0x00], 64);
        let h = parse_header(&src).unwrap();
        assert_eq!(h.byte_order, Endian::Little);
        assert!(!h.big_tiff);
        assert_eq!(h.first_ifd_offset, 8);
        assert_eq!(h.first_ifd_offset_field_location, 4);
    }

    #[test]
    fn big_endian_bigtiff() {
        let mut b = vec![0x4D, 0x4D, 0x00, 0x2B, 0x00, 0x08, 0x00, 0x00];
        b.extend_from_slice(&16u64.to_be_bytes());
        let h = parse_header(&padded(b, 64)).unwrap();
        assert_eq!(h.byte_order, Endian::Big);
        assert!(h.big_tiff);
        assert_eq!(h.first_ifd_offset, 16);
        assert_eq!(h.first_ifd_offset_field_location, 8);
    }

    #[test]
    fn non_tiff_magic_is_unsupported() {
        let src = MemBytes::new(vec![0x00, 0x01, 0x02, 0x03]);
        assert!(matches!(parse_header(&src), Err(Error::UnsupportedFormat(_))));
        let src = padded(vec![b'I', b'I', 44, 0, 8, 0, 0, 0], 32);
        assert!(matches!(parse_header(&src), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn offset_beyond_file_is_corrupt() {
        let src = padded(vec![b'I', b'I', 42, 0, 0xff, 0, 0, 0], 64);
        assert!(matches!(parse_header(&src), Err(Error::CorruptStructure(_))));
    }

    #[test]
    fn truncated_header_is_corrupt() {
        let src = MemBytes::new(vec![b'I', b'I', 42, 0, 8]);
        assert!(matches!(parse_header(&src), Err(Error::CorruptStructure(_))));
    }

    #[test]
    fn encode_reproduces_header_bytes() {
        for bytes in [
            vec![0x49, 0x49, 0x2A, 0x00, 0x08, 0x00, 0x00, 0x00],
            vec![0x4D, 0x4D, 0x00, 0x2A, 0x00, 0x00, 0x00, 0x08],
        ] {
            let h = parse_header(&padded(bytes.clone(), 32)).unwrap();
            assert_eq!(h.encode(), bytes);
        }
    }
}
