//! Detect, plan, back up, rename, apply and audit.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::forge::scan::{find_in_source, motif_needles, string_needles};
use crate::forge::SentinelProfile;
use crate::format::{self, profile, Family, Vendor, VendorFormat};
use crate::io::{open_source, ByteSink, ByteSource, FileBytes, MemBytes};
use crate::patch::{apply_plan, Overlay, PatchPlan};
use crate::tiff::ImageKind;
use crate::vendors::{self, isyntax, mirax, BlankedAttribute, PlanSummary};

/// Target name when renaming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NewName {
    /// `anon_` followed by 16 random lowercase hex digits.
    Random,
    /// Base name without extension.
    Exact(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnonymizationConfig {
    pub keep_macro: bool,
    /// Zero associated images but leave them linked.
    pub overwrite_only: bool,
    pub backup_dir: Option<PathBuf>,
    pub rename: Option<NewName>,
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyLevel {
    L0Identifiable,
    L1FilenameClean,
    L2Dereferenced,
    L3LabelDestroyed,
    L4MetadataClean,
    /// Spatial coherence destroyed. Never produced.
    L5SpatiallyIncoherent,
}

impl PolicyLevel {
    pub const ALL: [PolicyLevel; 6] = [
        PolicyLevel::L0Identifiable,
        PolicyLevel::L1FilenameClean,
        PolicyLevel::L2Dereferenced,
        PolicyLevel::L3LabelDestroyed,
        PolicyLevel::L4MetadataClean,
        PolicyLevel::L5SpatiallyIncoherent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyLevel::L0Identifiable => "L0",
            PolicyLevel::L1FilenameClean => "L1",
            PolicyLevel::L2Dereferenced => "L2",
            PolicyLevel::L3LabelDestroyed => "L3",
            PolicyLevel::L4MetadataClean => "L4",
            PolicyLevel::L5SpatiallyIncoherent => "L5",
        }
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    /// Highest level whose checks, together with all lower ones, pass.
    fn from_checks(checks: [bool; 4]) -> Self {
        let passed = checks.iter().take_while(|&&c| c).count();
        PolicyLevel::ALL[passed]
    }
}

impl fmt::Display for PolicyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for PolicyLevel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

fn as_secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

#[derive(Debug, Clone, Serialize)]
pub struct AnonymizationReport {
    pub input: PathBuf,
    pub output: PathBuf,
    pub vendor: Vendor,
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    pub destroyed_images: Vec<ImageKind>,
    pub blanked_attributes: Vec<BlankedAttribute>,
    pub patches_planned: usize,
    pub patches_applied: usize,
    pub warnings: Vec<String>,
    pub achieved_level: PolicyLevel,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backup: Option<PathBuf>,
    pub dry_run: bool,
    #[serde(rename = "elapsed_s", serialize_with = "as_secs")]
    pub elapsed: Duration,
}

/// Detects the format of the file at `path`.
pub fn detect_format(path: &Path) -> Result<VendorFormat> {
    let src = open_source(path)?;
    format::detect(path, &src)
}

pub fn is_supported(path: &Path) -> bool {
    detect_format(path)
        .map(|f| f.vendor.is_supported())
        .unwrap_or(false)
}

/// A complete plan for one single-file slide.
#[derive(Debug, Clone)]
pub struct SourcePlan {
    pub format: VendorFormat,
    pub plan: PatchPlan,
    pub summary: PlanSummary,
}

/// Plans anonymization of one single-file slide without writing anything.
pub fn plan_source<S: ByteSource + ?Sized>(
    name: &Path,
    src: &S,
    config: &AnonymizationConfig,
) -> Result<SourcePlan> {
    if src.is_empty() {
        return Err(Error::UnsupportedFormat("empty input".into()));
    }
    let format = format::detect_with(name, src, false)?;
    let (plan, summary) = match format.vendor {
        v if v.is_tiff_family() => {
            let scan = vendors::scan_tiff(v, src)?;
            vendors::plan_vendor_tiff(&scan, src, config)?
        }
        Vendor::PhilipsISyntax => {
            let header = isyntax::parse_header(src)?;
            isyntax::plan_isyntax(&header, config)?
        }
        Vendor::Mirax => {
            return Err(Error::UnsupportedFormat(
                "Mirax slides span several files; anonymize the .mrxs path".into(),
            ))
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "{} is not a recognized slide format",
                name.display()
            )))
        }
    };
    plan.validate(src.len())?;
    Ok(SourcePlan {
        format,
        plan,
        summary,
    })
}

/// Outcome of anonymizing one in-memory or already-open single-file slide.
#[derive(Debug, Clone)]
pub struct SourceOutcome {
    pub format: VendorFormat,
    pub summary: PlanSummary,
    pub patches_planned: usize,
    pub patches_applied: usize,
    pub level: PolicyLevel,
}

/// Plans and, unless `config.dry_run`, applies anonymization to `sink`.
/// Backup and rename are the caller's business.
pub fn anonymize_source<S: ByteSink + ?Sized>(
    name: &Path,
    sink: &mut S,
    config: &AnonymizationConfig,
) -> Result<SourceOutcome> {
    let planned = plan_source(name, &*sink, config)?;
    let predicted = audit_source(name, &Overlay::new(&*sink, &planned.plan), None)?;
    let applied = if config.dry_run {
        0
    } else {
        let n = apply_plan(sink, &planned.plan)?;
        sink.flush()?;
        n
    };
    Ok(SourceOutcome {
        format: planned.format,
        summary: planned.summary,
        patches_planned: planned.plan.len(),
        patches_applied: applied,
        level: predicted,
    })
}

fn random_name() -> String {
    let mut b = [0u8; 8];
    OsRng.fill_bytes(&mut b);
    let hex: String = b.iter().map(|x| format!("{x:02x}")).collect();
    format!("anon_{hex}")
}

fn target_path(path: &Path, rename: &Option<NewName>) -> Result<PathBuf> {
    let Some(r) = rename else {
        return Ok(path.to_path_buf());
    };
    let base = match r {
        NewName::Random => random_name(),
        NewName::Exact(s) => {
            if s.is_empty() || s.contains(['/', '\\']) || s == "." || s == ".." {
                return Err(Error::InvalidArgument(format!("invalid new name {s:?}")));
            }
            s.clone()
        }
    };
    let name = match path.extension() {
        Some(ext) => format!("{base}.{}", ext.to_string_lossy()),
        None => base,
    };
    Ok(path.with_file_name(name))
}

fn refuse_existing(target: &Path) -> Result<()> {
    if target.exists() {
        return Err(Error::io(
            target,
            std::io::Error::new(std::io::ErrorKind::AlreadyExists, "target already exists"),
        ));
    }
    Ok(())
}

fn copy_into(dir: &Path, item: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = item
        .file_name()
        .ok_or_else(|| Error::io(item, std::io::ErrorKind::InvalidInput.into()))?;
    let dest = dir.join(name);
    refuse_existing(&dest)?;
    if item.is_dir() {
        std::fs::create_dir(&dest).map_err(|e| Error::io(&dest, e))?;
        for entry in std::fs::read_dir(item).map_err(|e| Error::io(item, e))? {
            let entry = entry.map_err(|e| Error::io(item, e))?;
            copy_into(&dest, &entry.path())?;
        }
    } else {
        std::fs::copy(item, &dest).map_err(|e| Error::io(item, e))?;
    }
    Ok(dest)
}

fn rename(from: &Path, to: &Path) -> Result<()> {
    if from != to {
        refuse_existing(to)?;
        std::fs::rename(from, to).map_err(|e| Error::io(from, e))?;
    }
    Ok(())
}

/// Anonymizes the slide at `path` in place.
pub fn anonymize(path: &Path, config: &AnonymizationConfig) -> Result<AnonymizationReport> {
    let started = Instant::now();
    let format = detect_format(path)?;
    match format.vendor {
        Vendor::Unknown => Err(Error::UnsupportedFormat(format!(
            "{} is not a recognized slide format",
            path.display()
        ))),
        Vendor::Mirax => anonymize_mirax(path, config, started),
        _ => anonymize_file(path, config, started),
    }
}

fn anonymize_file(
    path: &Path,
    config: &AnonymizationConfig,
    started: Instant,
) -> Result<AnonymizationReport> {
    let src = FileBytes::open(path)?;
    let planned = plan_source(path, &src, config)?;
    let target = target_path(path, &config.rename)?;
    let predicted = audit_source(&target, &Overlay::new(&src, &planned.plan), None)?;
    drop(src);

    let mut report = AnonymizationReport {
        input: path.to_path_buf(),
        output: target.clone(),
        vendor: planned.format.vendor,
        family: planned.format.family,
        version: None,
        destroyed_images: planned.summary.destroyed_images,
        blanked_attributes: planned.summary.blanked_attributes,
        patches_planned: planned.plan.len(),
        patches_applied: 0,
        warnings: planned.summary.warnings,
        achieved_level: predicted,
        backup: None,
        dry_run: config.dry_run,
        elapsed: Duration::ZERO,
    };
    if config.dry_run {
        report.elapsed = started.elapsed();
        return Ok(report);
    }
    if let Some(dir) = &config.backup_dir {
        report.backup = Some(copy_into(dir, path)?);
    }
    rename(path, &target)?;
    let mut sink = FileBytes::open_rw(&target)?;
    report.patches_applied = apply_plan(&mut sink, &planned.plan)?;
    sink.flush()?;
    drop(sink);
    report.achieved_level = audit_level(&target, None)?;
    report.elapsed = started.elapsed();
    Ok(report)
}

/// Index.dat bytes after applying `plan`.
fn patched_bytes(bytes: Vec<u8>, plan: &PatchPlan) -> Result<Vec<u8>> {
    let mut m = MemBytes::new(bytes);
    apply_plan(&mut m, plan)?;
    Ok(m.into_inner())
}

fn anonymize_mirax(
    path: &Path,
    config: &AnonymizationConfig,
    started: Instant,
) -> Result<AnonymizationReport> {
    let c = mirax::open_mirax(path)?;
    let plan = mirax::plan_mirax(&c, config)?;
    let index_bytes = std::fs::read(c.index_path()).map_err(|e| Error::io(c.index_path(), e))?;
    plan.index.validate(index_bytes.len() as u64)?;

    let target = target_path(path, &config.rename)?;
    let predicted = {
        let data: Vec<FileBytes> = (0..c.data_files.len())
            .map(|i| FileBytes::open(c.data_path(i)))
            .collect::<Result<_>>()?;
        let overlays: Vec<Overlay<'_, FileBytes>> = data
            .iter()
            .zip(&plan.data)
            .map(|(d, p)| Overlay::new(d, p))
            .collect();
        let lens: Vec<u64> = data.iter().map(|d| d.len()).collect();
        let after = mirax::from_parts(
            target.clone(),
            c.dir.clone(),
            plan.slidedat.clone(),
            &patched_bytes(index_bytes, &plan.index)?,
            &lens,
        )?;
        let views: Vec<&dyn ByteSource> = overlays.iter().map(|o| o as &dyn ByteSource).collect();
        mirax_level(&after, &views, None)?
    };

    let mut report = AnonymizationReport {
        input: path.to_path_buf(),
        output: target.clone(),
        vendor: Vendor::Mirax,
        family: Some(Family::IniContainer),
        version: Some(c.version.clone()),
        destroyed_images: plan.summary.destroyed_images.clone(),
        blanked_attributes: plan.summary.blanked_attributes.clone(),
        patches_planned: plan.patch_count() + 1,
        patches_applied: 0,
        warnings: plan.summary.warnings.clone(),
        achieved_level: predicted,
        backup: None,
        dry_run: config.dry_run,
        elapsed: Duration::ZERO,
    };
    if config.dry_run {
        report.elapsed = started.elapsed();
        return Ok(report);
    }

    if let Some(dir) = &config.backup_dir {
        report.backup = Some(copy_into(dir, path)?);
        copy_into(dir, &c.dir)?;
    }
    let new_dir = format::mirax_data_dir(&target)
        .ok_or_else(|| Error::container("target has no file stem"))?;
    if target != path {
        refuse_existing(&new_dir)?;
    }
    rename(path, &target)?;
    rename(&c.dir, &new_dir)?;

    let mut applied = 0;
    for (i, p) in plan.data.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        let mut sink = FileBytes::open_rw(new_dir.join(&c.data_files[i]))?;
        applied += apply_plan(&mut sink, p)?;
        sink.flush()?;
    }
    if !plan.index.is_empty() {
        let mut sink = FileBytes::open_rw(new_dir.join(&c.index_file))?;
        applied += apply_plan(&mut sink, &plan.index)?;
        sink.flush()?;
    }
    let slidedat = new_dir.join("Slidedat.ini");
    let tmp = new_dir.join("Slidedat.ini.tmp");
    std::fs::write(&tmp, &plan.slidedat).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &slidedat).map_err(|e| Error::io(&slidedat, e))?;
    applied += 1;

    report.patches_applied = applied;
    report.achieved_level = audit_level(&target, None)?;
    report.elapsed = started.elapsed();
    Ok(report)
}

fn name_clean(name: &Path, sentinels: Option<&SentinelProfile>) -> bool {
    let Some(p) = sentinels else {
        return true;
    };
    let text = name
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    !p.strings().iter().any(|s| text.contains(s.as_str()))
}

fn all_zero<S: ByteSource + ?Sized>(src: &S, spans: &[(u64, u64)]) -> Result<bool> {
    for &(o, n) in spans {
        let mut pos = o;
        while pos < o + n {
            let take = (o + n - pos).min(1 << 20);
            if src.read_exact(pos, take)?.iter().any(|&b| b != 0) {
                return Ok(false);
            }
            pos += take;
        }
    }
    Ok(true)
}

fn content_clean(sources: &[&dyn ByteSource], sentinels: Option<&SentinelProfile>) -> Result<(bool, bool)> {
    let Some(p) = sentinels else {
        return Ok((true, true));
    };
    let motif = motif_needles(p);
    let strings = string_needles(p);
    let mut motif_free = true;
    let mut strings_free = true;
    for s in sources {
        motif_free &= find_in_source(*s, &motif)?.is_empty();
        strings_free &= find_in_source(*s, &strings)?.is_empty();
    }
    Ok((motif_free, strings_free))
}

/// Audits a single-file slide read through `src` and named `name`.
pub fn audit_source<S: ByteSource + ?Sized>(
    name: &Path,
    src: &S,
    sentinels: Option<&SentinelProfile>,
) -> Result<PolicyLevel> {
    let format = format::detect_with(name, src, false)?;
    let (labels_blank, attrs_blank) = match format.vendor {
        v if v.is_tiff_family() => {
            let scan = vendors::scan_tiff(v, src)?;
            let mut labels = true;
            for r in scan.images.iter().filter(|r| r.kind.shows_label()) {
                labels &= all_zero(src, &r.pixel_payload_spans)?;
            }
            let mut attrs = true;
            for a in &scan.attributes {
                let bytes = src.read_exact(a.value_span.0, a.value_span.1)?;
                attrs &= vendors::is_blank_text(&bytes);
            }
            (labels, attrs)
        }
        Vendor::PhilipsISyntax => {
            let h = isyntax::parse_header(src)?;
            let labels = h
                .images
                .iter()
                .filter(|i| i.kind == ImageKind::Label)
                .all(|i| isyntax::is_blank_payload(h.text(&i.payload)));
            (labels, isyntax::attributes_blank(&h))
        }
        _ => {
            return Err(Error::UnsupportedFormat(format!(
                "cannot audit {}",
                name.display()
            )))
        }
    };
    let view: &dyn ByteSource = &SourceRef(src);
    let (motif_free, strings_free) = content_clean(&[view], sentinels)?;
    Ok(PolicyLevel::from_checks([
        name_clean(name, sentinels),
        labels_blank,
        labels_blank && motif_free,
        attrs_blank && strings_free,
    ]))
}

/// Sized wrapper so an unsized source can be used as a trait object.
struct SourceRef<'a, S: ByteSource + ?Sized>(&'a S);

impl<S: ByteSource + ?Sized> ByteSource for SourceRef<'_, S> {
    fn len(&self) -> u64 {
        self.0.len()
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> std::io::Result<()> {
        self.0.read_at(offset, buf)
    }

    fn origin(&self) -> PathBuf {
        self.0.origin()
    }
}

fn mirax_level(
    c: &mirax::MiraxContainer,
    data: &[&dyn ByteSource],
    sentinels: Option<&SentinelProfile>,
) -> Result<PolicyLevel> {
    let mut labels_blank = true;
    for r in c.index.iter().filter(|r| r.is_linked()) {
        if c.layer_for(r).map(|l| l.kind) == Some(ImageKind::Label) {
            labels_blank &= all_zero(data[r.data_file as usize], &[(r.blob_offset, r.blob_len)])?;
        }
    }
    let catalog = profile(Vendor::Mirax)?;
    let attrs_blank = c
        .slidedat
        .entries
        .iter()
        .filter(|e| catalog.key(&e.key).is_some())
        .all(|e| vendors::is_blank_text(&c.slidedat.text[e.value.0..e.value.1]));

    let (motif_free, strings_free) = if sentinels.is_some() {
        let slidedat = MemBytes::new(c.slidedat.text.clone());
        let index = FileBytes::open(c.index_path());
        let stub = FileBytes::open(&c.stub);
        let mut views: Vec<&dyn ByteSource> = data.to_vec();
        views.push(&slidedat);
        if let Ok(i) = &index {
            views.push(i);
        }
        if let Ok(s) = &stub {
            views.push(s);
        }
        content_clean(&views, sentinels)?
    } else {
        (true, true)
    };
    let dir_clean = c
        .dir
        .file_name()
        .map(|d| name_clean(Path::new(d), sentinels))
        .unwrap_or(true);
    Ok(PolicyLevel::from_checks([
        name_clean(&c.stub, sentinels) && dir_clean,
        labels_blank,
        labels_blank && motif_free,
        attrs_blank && strings_free,
    ]))
}

/// Audits the slide at `path` against the policy ladder.
pub fn audit_level(path: &Path, sentinels: Option<&SentinelProfile>) -> Result<PolicyLevel> {
    let format = detect_format(path)?;
    match format.vendor {
        Vendor::Mirax => {
            let c = mirax::open_mirax(path)?;
            let data: Vec<FileBytes> = (0..c.data_files.len())
                .map(|i| FileBytes::open(c.data_path(i)))
                .collect::<Result<_>>()?;
            let views: Vec<&dyn ByteSource> = data.iter().map(|d| d as &dyn ByteSource).collect();
            mirax_level(&c, &views, sentinels)
        }
        Vendor::Unknown => Err(Error::UnsupportedFormat(format!(
            "{} is not a recognized slide format",
            path.display()
        ))),
        _ => {
            let src = FileBytes::open(path)?;
            audit_source(path, &src, sentinels)
        }
    }
}
