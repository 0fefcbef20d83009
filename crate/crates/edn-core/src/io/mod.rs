//! File formats and directory plumbing: netpbm images, the binary weights
//! container, the textual run configuration and CSV reports.

pub mod config;
pub mod pnm;
pub mod report;
pub mod weights;

pub use config::{format_run_config, load_run_config, parse_run_config};
pub use pnm::{
    load_image_ppm, load_map_pgm, load_mask_pgm, read_pnm, save_map_pgm, write_pgm, write_ppm,
    PnmImage,
};
pub use report::{eval_csv, fmt6, partition_csv, PartitionRow, RegionColumns};
pub use weights::{load_weights, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION};

use crate::error::{EdnError, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Collect `stem -> path` for every `.pgm` file in a directory.
fn pgm_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Pair `.pgm` files across directories by exact stem, sorted. Any stem not
/// present in every directory aborts with all mismatches listed.
pub fn pair_pgm_directories(dirs: &[&Path]) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let maps: Vec<BTreeMap<String, PathBuf>> =
        dirs.iter().map(|d| pgm_stems(d)).collect::<Result<_>>()?;
    let mut all_stems: Vec<String> = maps
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    all_stems.sort();
    let mut missing = Vec::new();
    for stem in &all_stems {
        for (m, dir) in maps.iter().zip(dirs) {
            if !m.contains_key(stem) {
                missing.push(format!("`{stem}` missing from {}", dir.display()));
            }
        }
    }
    if !missing.is_empty() {
        return Err(EdnError::Validation(format!(
            "unmatched prediction/ground-truth files:\n  {}",
            missing.join("\n  ")
        )));
    }
    Ok(all_stems
        .into_iter()
        .map(|stem| {
            let paths = maps.iter().map(|m| m[&stem].clone()).collect();
            (stem, paths)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn pairing_by_stem_sorted_and_mismatch_listed() {
        let a = tempdir().unwrap();
        let b = tempdir().unwrap();
        for stem in ["x", "y"] {
            write_pgm(&a.path().join(format!("{stem}.pgm")), 1, 1, &[0]).unwrap();
            write_pgm(&b.path().join(format!("{stem}.pgm")), 1, 1, &[0]).unwrap();
        }
        let pairs = pair_pgm_directories(&[a.path(), b.path()]).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, "x");
        assert_eq!(pairs[1].0, "y");

        write_pgm(&a.path().join("z.pgm"), 1, 1, &[0]).unwrap();
        match pair_pgm_directories(&[a.path(), b.path()]) {
            Err(EdnError::Validation(msg)) => assert!(msg.contains("`z` missing")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_pgm_files_are_ignored() {
        let a = tempdir().unwrap();
        write_pgm(&a.path().join("k.pgm"), 1, 1, &[0]).unwrap();
        std::fs::write(a.path().join("notes.txt"), "hi").unwrap();
        let pairs = pair_pgm_directories(&[a.path()]).unwrap();
        assert_eq!(pairs.len(), 1);
    }
}
