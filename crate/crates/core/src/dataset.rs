//! On-disk image dataset: one binary PGM per image plus `manifest.csv`
//! listing `path,label,snapshot_id,subsample_index`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::SignalImage;
use crate::pgm;

pub const MANIFEST_NAME: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "path,label,snapshot_id,subsample_index";

/// Writes images and the manifest into `dir` (created if missing).
/// Rows keep the input order, so output is deterministic.
pub fn save(dir: &Path, images: &[SignalImage]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::with_capacity(images.len() * 32);
    manifest.push_str(MANIFEST_HEADER);
    manifest.push('\n');
    for img in images {
        let name = format!("{}_{}.pgm", img.snapshot_id, img.subsample_index);
        pgm::write_file(&dir.join(&name), img.m, img.m, &img.pixels)?;
        writeln!(
            manifest,
            "{},{},{},{}",
            name, img.label, img.snapshot_id, img.subsample_index
        )
        .expect("write to string");
    }
    std::fs::write(dir.join(MANIFEST_NAME), manifest).map_err(|e| Error::io(dir, e))
}

/// Loads a dataset written by [`save`], in manifest order.
pub fn load(dir: &Path) -> Result<Vec<SignalImage>> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        other => {
            return Err(Error::Manifest(format!(
                "expected header {MANIFEST_HEADER:?}, found {other:?}"
            )))
        }
    }
    // Cache decoded files: balanced/split manifests may repeat paths.
    let mut cache: HashMap<String, (usize, Vec<u8>)> = HashMap::new();
    let mut images = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Manifest(format!(
                "line {}: expected 4 fields, found {}",
                lineno + 2,
                fields.len()
            )));
        }
        let label: usize = fields[1]
            .parse()
            .map_err(|_| Error::Manifest(format!("line {}: bad label {:?}", lineno + 2, fields[1])))?;
        let subsample_index: usize = fields[3].parse().map_err(|_| {
            Error::Manifest(format!("line {}: bad index {:?}", lineno + 2, fields[3]))
        })?;
        let (m, pixels) = match cache.get(fields[0]) {
            Some(hit) => hit.clone(),
            None => {
                let (w, h, pixels) = pgm::read_file(&dir.join(fields[0]))?;
                if w != h {
                    return Err(Error::Manifest(format!(
                        "{}: expected square image, got {w}x{h}",
                        fields[0]
                    )));
                }
                cache.insert(fields[0].to_string(), (w, pixels.clone()));
                (w, pixels)
            }
        };
        images.push(SignalImage {
            m,
            pixels,
            label,
            snapshot_id: fields[2].to_string(),
            subsample_index,
        });
    }
    if images.is_empty() {
        return Err(Error::Manifest("no image rows".into()));
    }
    Ok(images)
}
