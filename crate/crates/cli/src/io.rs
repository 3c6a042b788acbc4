//! File helpers whose errors always name the file involved.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use mono3d::eval::kitti::KittiLabel;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::format::fmt_g6;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to stdout when no path is given.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents.as_bytes()),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Files directly inside `dir` with the given extension, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// One KITTI label line, numbers rendered with [`fmt_g6`].
pub fn format_label(l: &KittiLabel) -> String {
    let mut fields = vec![l.class_name.clone(), fmt_g6(l.truncation), l.occlusion.to_string()];
    let b = l.box2d;
    let nums = [l.alpha, b.x1, b.y1, b.x2, b.y2];
    fields.extend(nums.iter().chain(&l.dimensions).chain(&l.location).chain([&l.rotation_y]).map(|v| fmt_g6(*v)));
    if let Some(s) = l.score {
        fields.push(fmt_g6(s));
    }
    fields.join(" ")
}
