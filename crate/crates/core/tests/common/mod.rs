#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wsi_anon::forge::{self, Fixture, ForgeOptions, SentinelProfile};
use wsi_anon::Vendor;

pub const VENDORS: [Vendor; 6] = [
    Vendor::Aperio,
    Vendor::Hamamatsu,
    Vendor::Ventana,
    Vendor::Mirax,
    Vendor::PhilipsISyntax,
    Vendor::GenericTiff,
];

pub const SINGLE_FILE: [Vendor; 5] = [
    Vendor::Aperio,
    Vendor::Hamamatsu,
    Vendor::Ventana,
    Vendor::PhilipsISyntax,
    Vendor::GenericTiff,
];

pub fn fixture(vendor: Vendor, seed: u64, dir: &Path) -> Fixture {
    fixture_with(vendor, seed, &ForgeOptions::default(), dir)
}

pub fn fixture_with(vendor: Vendor, seed: u64, opts: &ForgeOptions, dir: &Path) -> Fixture {
    let profile = SentinelProfile::generate(vendor, seed);
    forge::forge_with(vendor, seed, &profile, opts, dir).expect("forge")
}

/// Every regular file below `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Slide files below `dir`, manifests excluded.
pub fn slide_files(dir: &Path) -> Vec<PathBuf> {
    snapshot(dir)
        .into_keys()
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.txt"))
        .map(|p| dir.join(p))
        .collect()
}

pub fn matrix(vendor: Vendor) -> Vec<ForgeOptions> {
    if vendor.is_tiff_family() {
        let mut v = ForgeOptions::tiff_matrix();
        v.push(ForgeOptions {
            compressed_associated: true,
            ..Default::default()
        });
        v
    } else if vendor == Vendor::Mirax {
        ["01.02", "01.03"]
            .iter()
            .map(|m| ForgeOptions {
                mirax_version: m.to_string(),
                ..Default::default()
            })
            .collect()
    } else {
        vec![ForgeOptions::default()]
    }
}
