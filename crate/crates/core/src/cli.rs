//! Command-line front end. The binary only forwards to [`run`].

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::error::ErrorKind;
use clap::{ArgGroup, Parser};
use serde_json::json;

use crate::engine::{self, AnonymizationConfig, NewName, PolicyLevel};
use crate::error::Error;
use crate::forge::{self, ForgeOptions, SentinelProfile};
use crate::format::Vendor;
use crate::io::Endian;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "wsi-anon",
    version,
    about = "Anonymize whole-slide images in place: destroy label/macro images and blank sensitive metadata",
    group(ArgGroup::new("mode").args(["audit", "detect", "forge"]))
)]
pub struct Args {
    /// Slide files (.svs, .tif, .ndpi, .bif, .mrxs, .isyntax)
    #[arg(value_name = "INPUT", required_unless_present = "forge")]
    pub inputs: Vec<PathBuf>,

    /// Keep the macro image (refused where label and macro are one image)
    #[arg(long)]
    pub keep_macro: bool,

    /// Zero associated images but leave them linked
    #[arg(long)]
    pub overwrite_only: bool,

    /// Copy each input here before modifying it
    #[arg(long, value_name = "DIR")]
    pub backup: Option<PathBuf>,

    /// Rename to NAME; the extension is kept
    #[arg(long, value_name = "NAME")]
    pub rename: Option<String>,

    /// Rename to a random anon_ name
    #[arg(long, conflicts_with = "rename")]
    pub random_name: bool,

    /// Plan and report without touching any file
    #[arg(long)]
    pub dry_run: bool,

    /// Report the anonymization level instead of anonymizing
    #[arg(long)]
    pub audit: bool,

    /// Print the detected format instead of anonymizing
    #[arg(long)]
    pub detect: bool,

    /// Strings that must not survive, one per line; used by the audit
    #[arg(long, value_name = "FILE")]
    pub sentinels: Option<PathBuf>,

    /// Suppress per-file report lines
    #[arg(long)]
    pub quiet: bool,

    /// One JSON record per input on stdout
    #[arg(long)]
    pub json: bool,

    /// Process up to N files at once
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=256))]
    pub parallel: u32,

    /// Write a synthetic test slide of this vendor instead
    #[arg(long, value_name = "VENDOR", conflicts_with_all = ["inputs"])]
    pub forge: Option<String>,

    #[arg(long, default_value_t = 1, requires = "forge")]
    pub seed: u64,

    #[arg(long, value_name = "DIR", requires = "forge")]
    pub out_dir: Option<PathBuf>,

    /// le-classic, le-bigtiff, be-classic or be-bigtiff, optionally with -compressed
    #[arg(long, value_name = "VARIANT", requires = "forge")]
    pub variant: Option<String>,
}

struct Outcome {
    code: i32,
    line: Option<String>,
    diagnostic: Option<String>,
}

impl Outcome {
    fn failed(input: &Path, e: &Error, json: bool) -> Self {
        Outcome {
            code: e.exit_code(),
            line: json.then(|| {
                json!({"input": input, "error": e.to_string(), "exit_code": e.exit_code()}).to_string()
            }),
            diagnostic: Some(format!("wsi-anon: {}: {e}", input.display())),
        }
    }
}

fn parse_variant(v: &str) -> Option<ForgeOptions> {
    let mut o = ForgeOptions::default();
    let mut parts = v.split('-');
    o.order = match parts.next()? {
        "le" => Endian::Little,
        "be" => Endian::Big,
        _ => return None,
    };
    o.big_tiff = match parts.next()? {
        "classic" => false,
        "bigtiff" => true,
        _ => return None,
    };
    match parts.next() {
        None => {}
        Some("compressed") => o.compressed_associated = true,
        Some(_) => return None,
    }
    parts.next().is_none().then_some(o)
}

fn run_forge(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let name = args.forge.as_deref().unwrap_or_default();
    let Some(vendor) = Vendor::from_id(name).filter(|v| v.is_supported()) else {
        let _ = writeln!(err, "wsi-anon: unknown vendor {name:?}");
        return EXIT_USAGE;
    };
    let opts = match args.variant.as_deref().map(parse_variant) {
        None => ForgeOptions::default(),
        Some(Some(o)) => o,
        Some(None) => {
            let _ = writeln!(err, "wsi-anon: unknown variant");
            return EXIT_USAGE;
        }
    };
    let dir = args.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let profile = SentinelProfile::generate(vendor, args.seed);
    match forge::forge_with(vendor, args.seed, &profile, &opts, &dir) {
        Ok(f) => {
            if !args.quiet {
                for p in &f.files {
                    let _ = writeln!(out, "{}", p.display());
                }
                let _ = writeln!(out, "{}", f.manifest.display());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "wsi-anon: {e}");
            e.exit_code()
        }
    }
}

fn config_from(args: &Args) -> AnonymizationConfig {
    AnonymizationConfig {
        keep_macro: args.keep_macro,
        overwrite_only: args.overwrite_only,
        backup_dir: args.backup.clone(),
        rename: match (&args.rename, args.random_name) {
            (Some(n), _) => Some(NewName::Exact(n.clone())),
            (None, true) => Some(NewName::Random),
            (None, false) => None,
        },
        dry_run: args.dry_run,
    }
}

fn process(
    input: &Path,
    args: &Args,
    config: &AnonymizationConfig,
    sentinels: Option<&SentinelProfile>,
    prefix: bool,
) -> Outcome {
    let label = |s: String| {
        if prefix {
            format!("{}: {s}", input.display())
        } else {
            s
        }
    };
    if args.detect {
        return match engine::detect_format(input) {
            Ok(f) => Outcome {
                code: if f.vendor == Vendor::Unknown { 1 } else { EXIT_OK },
                line: Some(if args.json {
                    json!({"input": input, "vendor": f.vendor, "family": f.family}).to_string()
                } else {
                    label(f.vendor.id().to_string())
                }),
                diagnostic: None,
            },
            Err(e) => Outcome::failed(input, &e, args.json),
        };
    }
    if args.audit {
        return match engine::audit_level(input, sentinels) {
            Ok(level) => Outcome {
                code: EXIT_OK,
                line: Some(if args.json {
                    json!({"input": input, "level": level}).to_string()
                } else {
                    label(level.to_string())
                }),
                diagnostic: None,
            },
            Err(e) => Outcome::failed(input, &e, args.json),
        };
    }
    match engine::anonymize(input, config) {
        Ok(mut report) => {
            if let (Some(s), false) = (sentinels, config.dry_run) {
                match engine::audit_level(&report.output, Some(s)) {
                    Ok(level) => report.achieved_level = level,
                    Err(e) => return Outcome::failed(input, &e, args.json),
                }
            }
            let ok = report.achieved_level >= PolicyLevel::L4MetadataClean;
            let line = if args.json {
                serde_json::to_string(&report).unwrap_or_default()
            } else {
                let kinds: Vec<&str> = report.destroyed_images.iter().map(|k| k.as_str()).collect();
                format!(
                    "{}: {} {} destroyed=[{}] blanked={} patches={}/{}{}{} ({:.1} ms)",
                    input.display(),
                    report.vendor,
                    report.achieved_level,
                    kinds.join(","),
                    report.blanked_attributes.len(),
                    report.patches_applied,
                    report.patches_planned,
                    if report.dry_run { " dry-run" } else { "" },
                    if report.output != input {
                        format!(" -> {}", report.output.display())
                    } else {
                        String::new()
                    },
                    report.elapsed.as_secs_f64() * 1e3,
                )
            };
            let mut diagnostic = report
                .warnings
                .iter()
                .map(|w| format!("wsi-anon: {}: warning: {w}", input.display()))
                .collect::<Vec<_>>()
                .join("\n");
            if !ok {
                if !diagnostic.is_empty() {
                    diagnostic.push('\n');
                }
                diagnostic.push_str(&format!(
                    "wsi-anon: {}: only reached {}",
                    input.display(),
                    report.achieved_level
                ));
            }
            Outcome {
                code: if ok { EXIT_OK } else { 4 },
                line: Some(line),
                diagnostic: (!diagnostic.is_empty()).then_some(diagnostic),
            }
        }
        Err(e) => Outcome::failed(input, &e, args.json),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            }
        }
    };
    if args.forge.is_some() {
        return run_forge(&args, out, err);
    }
    if args.rename.is_some() && args.inputs.len() > 1 {
        let _ = writeln!(err, "wsi-anon: --rename NAME needs exactly one input");
        return EXIT_USAGE;
    }
    let sentinels = match &args.sentinels {
        None => None,
        Some(p) => match SentinelProfile::from_sentinel_file(p) {
            Ok(s) => Some(s),
            Err(e) => {
                let _ = writeln!(err, "wsi-anon: {}: {e}", p.display());
                return match e {
                    Error::Io { .. } => e.exit_code(),
                    _ => EXIT_USAGE,
                };
            }
        },
    };
    let config = config_from(&args);
    let prefix = args.inputs.len() > 1;

    let slots: Vec<Mutex<Option<Outcome>>> = args.inputs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = (args.parallel as usize).min(args.inputs.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(input) = args.inputs.get(i) else {
                    break;
                };
                let o = process(input, &args, &config, sentinels.as_ref(), prefix);
                *slots[i].lock().expect("slot") = Some(o);
            });
        }
    });

    let mut code = EXIT_OK;
    for slot in slots {
        let Some(o) = slot.into_inner().expect("slot") else {
            continue;
        };
        if let Some(d) = &o.diagnostic {
            let _ = writeln!(err, "{d}");
        }
        if let Some(l) = &o.line {
            if !args.quiet {
                let _ = writeln!(out, "{l}");
            }
        }
        if code == EXIT_OK {
            code = o.code;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("wsi-anon").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_str(&["--bogus", "x.svs"]).0, EXIT_USAGE);
        assert_eq!(run_str(&[]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--audit", "--detect", "x.svs"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_and_version_succeed() {
        let (code, out, _) = run_str(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("--keep-macro"));
        assert_eq!(run_str(&["--version"]).0, 0);
    }

    #[test]
    fn missing_input_is_io_failure() {
        let (code, _, err) = run_str(&["/nonexistent/slide.svs"]);
        assert_eq!(code, 3);
        assert!(err.contains("slide.svs"));
    }

    #[test]
    fn variants_parse() {
        assert!(parse_variant("be-bigtiff").unwrap().big_tiff);
        assert!(parse_variant("le-classic-compressed").unwrap().compressed_associated);
        assert!(parse_variant("le").is_none());
        assert!(parse_variant("xx-classic").is_none());
    }
}
