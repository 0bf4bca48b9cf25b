//! Dataset discovery and the image manifest.

use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::IngestConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub path: PathBuf,
    pub label: u8,
}

#[derive(Debug, Default)]
pub struct Scan {
    pub entries: Vec<ManifestEntry>,
    /// Excluded files with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl Scan {
    pub fn counts(&self) -> (usize, usize) {
        let pos = self.entries.iter().filter(|e| e.label == 1).count();
        (self.entries.len() - pos, pos)
    }
}

fn image_files(dir: &Path, cfg: &IngestConfig) -> CliResult<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.extension()
                .and_then(|x| x.to_str())
                .is_some_and(|x| cfg.extensions.iter().any(|e| e.eq_ignore_ascii_case(x)))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn readable(p: &Path) -> Result<(), String> {
    let bytes = std::fs::read(p).map_err(|e| e.to_string())?;
    prism_core::imgproc::decode(&bytes).map(|_| ()).map_err(|e| e.to_string())
}

/// Labels files by stem regex in `root`, or by the configured class
/// subdirectories when no stem in `root` matches.
pub fn scan(root: &Path, cfg: &IngestConfig) -> CliResult<Scan> {
    if !root.is_dir() {
        return Err(CliError::Input(format!("dataset directory {} does not exist", root.display())));
    }
    let re = Regex::new(&cfg.label_regex).map_err(|e| CliError::Input(format!("label_regex: {e}")))?;
    let mut scan = Scan::default();
    let mut candidates: Vec<(PathBuf, String, Option<u8>)> = image_files(root, cfg)?
        .into_iter()
        .map(|p| {
            let s = stem(&p);
            let label = re
                .captures(&s)
                .and_then(|c| c.get(1))
                .and_then(|m| match m.as_str() {
                    "0" => Some(0),
                    "1" => Some(1),
                    _ => None,
                });
            (p, s, label)
        })
        .collect();
    if candidates.iter().all(|c| c.2.is_none()) {
        let mut by_dir = Vec::new();
        for (dir, label) in [(&cfg.negative_dir, 0u8), (&cfg.positive_dir, 1u8)] {
            let d = root.join(dir);
            if d.is_dir() {
                by_dir.extend(image_files(&d, cfg)?.into_iter().map(|p| {
                    let s = format!("{dir}_{}", stem(&p));
                    (p, s, Some(label))
                }));
            }
        }
        if !by_dir.is_empty() {
            for (p, _, _) in candidates.drain(..) {
                scan.skipped.push((p, "no label".into()));
            }
            candidates = by_dir;
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for (path, id, label) in candidates {
        let Some(label) = label else {
            log::warn!("{}: no label, excluded", path.display());
            scan.skipped.push((path, "no label".into()));
            continue;
        };
        if !seen.insert(id.clone()) {
            scan.skipped.push((path, format!("duplicate image id {id}")));
            continue;
        }
        if let Err(e) = readable(&path) {
            log::warn!("{}: unreadable ({e}), excluded", path.display());
            scan.skipped.push((path, format!("unreadable: {e}")));
            continue;
        }
        scan.entries.push(ManifestEntry { image_id: id, path, label });
    }
    if scan.entries.is_empty() {
        return Err(CliError::Input(format!("no labeled images under {}", root.display())));
    }
    let (neg, pos) = scan.counts();
    if neg == 0 || pos == 0 {
        return Err(CliError::Input(format!("class counts {neg}/{pos}: both classes are required")));
    }
    Ok(scan)
}

pub fn manifest_csv(entries: &[ManifestEntry]) -> CliResult<Vec<u8>> {
    crate::io::csv_bytes(
        &["image_id", "path", "label"],
        entries
            .iter()
            .map(|e| [e.image_id.clone(), e.path.to_string_lossy().into_owned(), e.label.to_string()]),
    )
}

pub fn read_manifest(path: &Path) -> CliResult<Vec<ManifestEntry>> {
    let bytes = crate::io::read(path)?;
    let mut r = csv::Reader::from_reader(bytes.as_slice());
    r.deserialize()
        .map(|rec| rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display()))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png(path: &Path) {
        image::RgbImage::from_pixel(4, 4, image::Rgb([1, 2, 3])).save(path).unwrap();
    }

    #[test]
    fn suffix_convention_with_exclusions() {
        let d = tempfile::tempdir().unwrap();
        for n in ["Im001_1.png", "Im002_0.png", "Im003_1.png", "notes.png"] {
            png(&d.path().join(n));
        }
        std::fs::write(d.path().join("Im004_0.png"), b"not an image").unwrap();
        let s = scan(d.path(), &IngestConfig::default()).unwrap();
        assert_eq!(s.counts(), (1, 2));
        assert_eq!(s.skipped.len(), 2);
        assert_eq!(s.entries[0].image_id, "Im001_1");
        let csv = manifest_csv(&s.entries).unwrap();
        let p = d.path().join("m.csv");
        std::fs::write(&p, csv).unwrap();
        assert_eq!(read_manifest(&p).unwrap(), s.entries);
    }

    #[test]
    fn class_subdirectories() {
        let d = tempfile::tempdir().unwrap();
        for (sub, n) in [("0", "a.png"), ("1", "a.png"), ("1", "b.png")] {
            std::fs::create_dir_all(d.path().join(sub)).unwrap();
            png(&d.path().join(sub).join(n));
        }
        let s = scan(d.path(), &IngestConfig::default()).unwrap();
        assert_eq!(s.counts(), (1, 2));
        assert_eq!(s.entries[0].image_id, "0_a");
    }

    #[test]
    fn empty_or_one_class_is_an_error() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(scan(d.path(), &IngestConfig::default()), Err(CliError::Input(_))));
        png(&d.path().join("x_1.png"));
        assert!(matches!(scan(d.path(), &IngestConfig::default()), Err(CliError::Input(_))));
    }

    #[test]
    fn custom_regex() {
        let d = tempfile::tempdir().unwrap();
        png(&d.path().join("blast-1-a.png"));
        png(&d.path().join("normal-0-b.png"));
        let cfg = IngestConfig {
            label_regex: r"-([01])-".into(),
            ..Default::default()
        };
        assert_eq!(scan(d.path(), &cfg).unwrap().counts(), (1, 1));
    }
}
