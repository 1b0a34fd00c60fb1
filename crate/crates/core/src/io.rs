//! Random-access byte layer shared by every format handler.
//!
//! Files and in-memory buffers are read through [`ByteSource`] and patched
//! through [`ByteSink`]. A sink can only overwrite existing bytes; no
//! operation here ever grows or shrinks the underlying storage.

use std::fs::{File, OpenOptions};
use std::io;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Read-only view over a fixed-length byte store.
pub trait ByteSource {
    fn len(&self) -> u64;

    /// Fills `buf` from `offset`. Callers have already checked bounds.
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()>;

    /// Name used in error messages.
    fn origin(&self) -> PathBuf {
        PathBuf::from("<memory>")
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_bounds(&self, offset: u64, len: u64) -> Result<()> {
        let total = self.len();
        match offset.checked_add(len) {
            Some(end) if end <= total => Ok(()),
            _ => Err(Error::OutOfBounds { offset, len, total }),
        }
    }

    /// Returns exactly `len` bytes starting at `offset`.
    fn read_exact(&self, offset: u64, len: u64) -> Result<Vec<u8>> {
        self.check_bounds(offset, len)?;
        let mut buf = vec![0u8; len as usize];
        if len > 0 {
            self.read_at(offset, &mut buf)
                .map_err(|e| Error::io(self.origin(), e))?;
        }
        Ok(buf)
    }

    /// Reads up to `len` bytes from `offset`, stopping at the end of the store.
    fn read_prefix(&self, offset: u64, len: u64) -> Result<Vec<u8>> {
        let avail = self.len().saturating_sub(offset).min(len);
        self.read_exact(offset.min(self.len()), avail)
    }
}

/// A byte store that can be patched in place.
pub trait ByteSink: ByteSource {
    fn write_at(&mut self, offset: u64, payload: &[u8]) -> io::Result<()>;

    /// Overwrites `payload.len()` bytes at `offset`; the total length never changes.
    fn overwrite_exact(&mut self, offset: u64, payload: &[u8]) -> Result<()> {
        self.check_bounds(offset, payload.len() as u64)?;
        if payload.is_empty() {
            return Ok(());
        }
        self.write_at(offset, payload)
            .map_err(|e| Error::io(self.origin(), e))
    }

    fn flush(&mut self) -> Result<()> {
        Ok(())
    }
}

/// A regular file opened for positional reads, and optionally writes.
#[derive(Debug)]
pub struct FileBytes {
    file: File,
    path: PathBuf,
    len: u64,
}

impl FileBytes {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path.as_ref(), false)
    }

    pub fn open_rw(path: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(path.as_ref(), true)
    }

    fn open_with(path: &Path, write: bool) -> Result<Self> {
        let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
        if !meta.is_file() {
            return Err(Error::io(
                path,
                io::Error::new(io::ErrorKind::InvalidInput, "not a regular file"),
            ));
        }
        let file = OpenOptions::new()
            .read(true)
            .write(write)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(FileBytes {
            file,
            path: path.to_path_buf(),
            len: meta.len(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Opens `path` as a read-only [`ByteSource`].
pub fn open_source(path: impl AsRef<Path>) -> Result<FileBytes> {
    FileBytes::open(path)
}

#[cfg(unix)]
fn pread(file: &File, offset: u64, buf: &mut [u8]) -> io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(unix)]
fn pwrite(file: &File, offset: u64, buf: &[u8]) -> io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.write_all_at(buf, offset)
}

#[cfg(windows)]
fn pread(file: &File, mut offset: u64, mut buf: &mut [u8]) -> io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

#[cfg(windows)]
fn pwrite(file: &File, mut offset: u64, mut buf: &[u8]) -> io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_write(buf, offset)? {
            0 => return Err(io::ErrorKind::WriteZero.into()),
            n => {
                buf = &buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

impl ByteSource for FileBytes {
    fn len(&self) -> u64 {
        self.len
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        pread(&self.file, offset, buf)
    }

    fn origin(&self) -> PathBuf {
        self.path.clone()
    }
}

impl ByteSink for FileBytes {
    fn write_at(&mut self, offset: u64, payload: &[u8]) -> io::Result<()> {
        pwrite(&self.file, offset, payload)
    }

    fn flush(&mut self) -> Result<()> {
        self.file
            .sync_data()
            .map_err(|e| Error::io(self.path.clone(), e))
    }
}

/// In-memory byte store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemBytes {
    data: Vec<u8>,
}

impl MemBytes {
    pub fn new(data: Vec<u8>) -> Self {
        MemBytes { data }
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.data
    }
}

impl From<Vec<u8>> for MemBytes {
    fn from(data: Vec<u8>) -> Self {
        MemBytes { data }
    }
}

impl ByteSource for MemBytes {
    fn len(&self) -> u64 {
        self.data.len() as u64
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        let start = offset as usize;
        buf.copy_from_slice(&self.data[start..start + buf.len()]);
        Ok(())
    }
}

impl ByteSink for MemBytes {
    fn write_at(&mut self, offset: u64, payload: &[u8]) -> io::Result<()> {
        let start = offset as usize;
        self.data[start..start + payload.len()].copy_from_slice(payload);
        Ok(())
    }
}

impl<T: ByteSource + ?Sized> ByteSource for &T {
    fn len(&self) -> u64 {
        (**self).len()
    }
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        (**self).read_at(offset, buf)
    }
    fn origin(&self) -> PathBuf {
        (**self).origin()
    }
}

impl<T: ByteSource + ?Sized> ByteSource for &mut T {
    fn len(&self) -> u64 {
        (**self).len()
    }
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        (**self).read_at(offset, buf)
    }
    fn origin(&self) -> PathBuf {
        (**self).origin()
    }
}

/// Byte order of multi-byte integers in a structured file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Endian {
    Little,
    Big,
}

impl Endian {
    pub fn u16(self, b: &[u8]) -> u16 {
        let a = [b[0], b[1]];
        match self {
            Endian::Little => u16::from_le_bytes(a),
            Endian::Big => u16::from_be_bytes(a),
        }
    }

    pub fn u32(self, b: &[u8]) -> u32 {
        let a = [b[0], b[1], b[2], b[3]];
        match self {
            Endian::Little => u32::from_le_bytes(a),
            Endian::Big => u32::from_be_bytes(a),
        }
    }

    pub fn u64(self, b: &[u8]) -> u64 {
        let mut a = [0u8; 8];
        a.copy_from_slice(&b[..8]);
        match self {
            Endian::Little => u64::from_le_bytes(a),
            Endian::Big => u64::from_be_bytes(a),
        }
    }

    pub fn f32(self, b: &[u8]) -> f32 {
        f32::from_bits(self.u32(b))
    }

    pub fn f64(self, b: &[u8]) -> f64 {
        f64::from_bits(self.u64(b))
    }

    pub fn put_u16(self, v: u16) -> [u8; 2] {
        match self {
            Endian::Little => v.to_le_bytes(),
            Endian::Big => v.to_be_bytes(),
        }
    }

    pub fn put_u32(self, v: u32) -> [u8; 4] {
        match self {
            Endian::Little => v.to_le_bytes(),
            Endian::Big => v.to_be_bytes(),
        }
    }

    pub fn put_u64(self, v: u64) -> [u8; 8] {
        match self {
            Endian::Little => v.to_le_bytes(),
            Endian::Big => v.to_be_bytes(),
        }
    }
}
