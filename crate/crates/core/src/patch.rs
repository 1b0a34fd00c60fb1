//! Ordered in-place overwrites and their application.

use std::io;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::io::{ByteSink, ByteSource};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub offset: u64,
    pub payload: Vec<u8>,
    pub reason: String,
}

impl Patch {
    pub fn new(offset: u64, payload: Vec<u8>, reason: impl Into<String>) -> Self {
        Patch {
            offset,
            payload,
            reason: reason.into(),
        }
    }

    pub fn zeros(offset: u64, len: u64, reason: impl Into<String>) -> Self {
        Patch::new(offset, vec![0u8; len as usize], reason)
    }

    pub fn end(&self) -> u64 {
        self.offset + self.payload.len() as u64
    }
}

/// A set of overwrites against one byte store.
///
/// Patches are kept in ascending offset order. [`PatchPlan::validate`]
/// rejects overlapping spans and spans outside the store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatchPlan {
    patches: Vec<Patch>,
}

impl PatchPlan {
    pub fn new() -> Self {
        PatchPlan::default()
    }

    pub fn push(&mut self, patch: Patch) {
        if patch.payload.is_empty() {
            return;
        }
        let at = self.patches.partition_point(|p| p.offset <= patch.offset);
        self.patches.insert(at, patch);
    }

    pub fn extend(&mut self, other: PatchPlan) {
        for p in other.patches {
            self.push(p);
        }
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.patches.iter().map(|p| p.payload.len() as u64).sum()
    }

    /// Checks ordering, pairwise disjointness, and bounds against `len`.
    pub fn validate(&self, len: u64) -> Result<()> {
        for pair in self.patches.windows(2) {
            if pair[1].offset < pair[0].end() {
                return Err(Error::corrupt(format!(
                    "patches overlap: [{}, {}) `{}` and [{}, {}) `{}`",
                    pair[0].offset,
                    pair[0].end(),
                    pair[0].reason,
                    pair[1].offset,
                    pair[1].end(),
                    pair[1].reason
                )));
            }
        }
        if let Some(last) = self.patches.last() {
            if last.end() > len {
                return Err(Error::OutOfBounds {
                    offset: last.offset,
                    len: last.payload.len() as u64,
                    total: len,
                });
            }
        }
        Ok(())
    }

    /// True if any patch intersects `[offset, offset + len)`.
    pub fn touches(&self, offset: u64, len: u64) -> bool {
        let end = offset + len;
        self.patches
            .iter()
            .any(|p| p.offset < end && offset < p.end())
    }
}

/// Applies every patch in order. On failure the error names the first
/// patch that was not applied.
pub fn apply_plan<S: ByteSink + ?Sized>(sink: &mut S, plan: &PatchPlan) -> Result<usize> {
    plan.validate(sink.len())?;
    let total = plan.len();
    for (index, p) in plan.patches().iter().enumerate() {
        sink.overwrite_exact(p.offset, &p.payload)
            .map_err(|e| Error::PatchFailed {
                index,
                total,
                source: Box::new(e),
            })?;
    }
    if total > 0 {
        sink.flush()?;
    }
    Ok(total)
}

/// Read view of a source as if `plan` had been applied, without writing.
pub struct Overlay<'a, S: ByteSource + ?Sized> {
    base: &'a S,
    plan: &'a PatchPlan,
}

impl<'a, S: ByteSource + ?Sized> Overlay<'a, S> {
    pub fn new(base: &'a S, plan: &'a PatchPlan) -> Self {
        Overlay { base, plan }
    }
}

impl<S: ByteSource + ?Sized> ByteSource for Overlay<'_, S> {
    fn len(&self) -> u64 {
        self.base.len()
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        self.base.read_at(offset, buf)?;
        let end = offset + buf.len() as u64;
        for p in self.plan.patches() {
            if p.offset >= end || p.end() <= offset {
                continue;
            }
            let lo = p.offset.max(offset);
            let hi = p.end().min(end);
            let dst = (lo - offset) as usize..(hi - offset) as usize;
            let src = (lo - p.offset) as usize..(hi - p.offset) as usize;
            buf[dst].copy_from_slice(&p.payload[src]);
        }
        Ok(())
    }

    fn origin(&self) -> PathBuf {
        self.base.origin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::MemBytes;
    use proptest::prelude::*;

    #[test]
    fn push_keeps_ascending_order() {
        let mut plan = PatchPlan::new();
        plan.push(Patch::zeros(50, 2, "b"));
        plan.push(Patch::zeros(10, 2, "a"));
        plan.push(Patch::zeros(90, 2, "c"));
        let offsets: Vec<u64> = plan.patches().iter().map(|p| p.offset).collect();
        assert_eq!(offsets, vec![10, 50, 90]);
    }

    #[test]
    fn overlap_is_rejected() {
        let mut plan = PatchPlan::new();
        plan.push(Patch::zeros(10, 5, "a"));
        plan.push(Patch::zeros(14, 2, "b"));
        assert!(matches!(plan.validate(100), Err(Error::CorruptStructure(_))));
    }

    #[test]
    fn adjacent_patches_are_fine() {
        let mut plan = PatchPlan::new();
        plan.push(Patch::zeros(10, 5, "a"));
        plan.push(Patch::zeros(15, 5, "b"));
        plan.validate(20).unwrap();
        assert!(plan.validate(19).is_err());
    }

    #[test]
    fn empty_plan_leaves_bytes_identical() {
        let mut sink = MemBytes::new(b"hello world".to_vec());
        assert_eq!(apply_plan(&mut sink, &PatchPlan::new()).unwrap(), 0);
        assert_eq!(sink.as_slice(), b"hello world");
    }

    #[test]
    fn overlay_matches_applied_bytes() {
        let base = MemBytes::new((0u8..64).collect());
        let mut plan = PatchPlan::new();
        plan.push(Patch::new(3, b"xyz".to_vec(), "t"));
        plan.push(Patch::zeros(40, 10, "z"));
        let overlay = Overlay::new(&base, &plan);
        let mut applied = base.clone();
        apply_plan(&mut applied, &plan).unwrap();
        assert_eq!(overlay.read_exact(0, 64).unwrap(), applied.as_slice());
        assert_eq!(overlay.read_exact(42, 3).unwrap(), vec![0, 0, 0]);
    }

    proptest! {
        #[test]
        fn apply_never_changes_length_and_is_idempotent(
            data in proptest::collection::vec(any::<u8>(), 1..512),
            spans in proptest::collection::vec((0usize..512, 0usize..32), 0..8),
        ) {
            let len = data.len();
            let mut plan = PatchPlan::new();
            let mut cursor = 0usize;
            let mut sorted = spans.clone();
            sorted.sort();
            for (start, n) in sorted {
                let start = start.max(cursor);
                if start + n > len { continue; }
                plan.push(Patch::zeros(start as u64, n as u64, "p"));
                cursor = start + n;
            }
            let mut once = MemBytes::new(data.clone());
            apply_plan(&mut once, &plan).unwrap();
            prop_assert_eq!(once.len() as usize, len);
            let mut twice = once.clone();
            apply_plan(&mut twice, &plan).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
