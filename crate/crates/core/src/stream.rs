//! Anonymization over sequentially delivered chunks.
//!
//! TIFF directories may sit anywhere in a file, so the session spools the
//! whole input and runs the same planner as the file route on finalize.
//! Memory use is proportional to the input size.

use std::path::{Path, PathBuf};

use crate::engine::{anonymize_source, AnonymizationConfig, SourceOutcome};
use crate::error::{Error, Result};
use crate::io::MemBytes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Accepting,
    Finalized,
}

#[derive(Debug)]
pub struct StreamSession {
    name: PathBuf,
    spool: Vec<u8>,
    chunks: usize,
    state: SessionState,
    outcome: Option<SourceOutcome>,
}

impl StreamSession {
    /// `name` is the original filename; its extension takes part in detection.
    pub fn new(name: impl AsRef<Path>) -> Self {
        StreamSession {
            name: name.as_ref().to_path_buf(),
            spool: Vec::new(),
            chunks: 0,
            state: SessionState::Accepting,
            outcome: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn bytes_received(&self) -> u64 {
        self.spool.len() as u64
    }

    pub fn feed(&mut self, chunk: &[u8]) -> Result<()> {
        if self.state == SessionState::Finalized {
            return Err(Error::SessionFinalized);
        }
        self.spool.extend_from_slice(chunk);
        self.chunks += 1;
        Ok(())
    }

    /// Anonymizes the spooled bytes and returns the full output. Backup and
    /// rename settings do not apply to streams and are ignored.
    pub fn finalize(&mut self, config: &AnonymizationConfig) -> Result<Vec<u8>> {
        if self.state == SessionState::Finalized {
            return Err(Error::SessionFinalized);
        }
        self.state = SessionState::Finalized;
        if self.chunks == 0 || self.spool.is_empty() {
            return Err(Error::UnsupportedFormat("stream received no data".into()));
        }
        let mut sink = MemBytes::new(std::mem::take(&mut self.spool));
        let outcome = anonymize_source(&self.name, &mut sink, config)?;
        self.outcome = Some(outcome);
        Ok(sink.into_inner())
    }

    /// What the last successful finalize did.
    pub fn outcome(&self) -> Option<&SourceOutcome> {
        self.outcome.as_ref()
    }
}
