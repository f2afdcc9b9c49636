//! Irreducible tables cached on disk as `ffqi_p{p}_d{max_deg}.bin`.

use std::fs;
use std::path::{Path, PathBuf};

use fqcorr::{FieldSpec, IrreducibleTable};

use crate::error::CliError;

pub const CACHE_ENV: &str = "FQCORR_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".fqcorr-cache";

/// Flag, then environment, then config file, then the default.
pub fn resolve_dir(flag: Option<&str>, file: Option<&str>) -> PathBuf {
    flag.map(PathBuf::from)
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .or_else(|| file.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR))
}

pub fn file_name(p: u32, max_deg: u32) -> String {
    format!("ffqi_p{p}_d{max_deg}.bin")
}

fn parse_name(name: &str) -> Option<(u32, u32)> {
    let rest = name.strip_prefix("ffqi_p")?.strip_suffix(".bin")?;
    let (p, d) = rest.split_once("_d")?;
    Some((p.parse().ok()?, d.parse().ok()?))
}

/// Cached tables for `p` covering degree `need`, smallest first.
fn candidates(dir: &Path, p: u32, need: u32) -> Vec<(u32, PathBuf)> {
    let mut found: Vec<(u32, PathBuf)> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|entry| {
            let (fp, d) = parse_name(entry.file_name().to_str()?)?;
            (fp == p && d >= need).then(|| (d, entry.path()))
        })
        .collect();
    found.sort();
    found
}

/// Loads the smallest verified cached table covering `need`, building and
/// caching a new one when none is usable.
pub fn load_table(field: FieldSpec, need: u32, dir: &Path) -> Result<IrreducibleTable, CliError> {
    let need = need.max(1);
    for (_, path) in candidates(dir, field.p(), need) {
        match IrreducibleTable::load_cache(&path) {
            Ok(table) if table.field() == field => return Ok(table),
            Ok(_) => {}
            Err(e) => eprintln!("warning: ignoring cache {}: {e}", path.display()),
        }
    }
    let table = IrreducibleTable::build(field, need)?;
    if let Err(e) = store(&table, dir) {
        eprintln!("warning: could not write cache in {}: {e}", dir.display());
    }
    Ok(table)
}

pub fn store(table: &IrreducibleTable, dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(file_name(table.field().p(), table.max_deg()));
    table.write_cache(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        assert_eq!(file_name(3, 12), "ffqi_p3_d12.bin");
        assert_eq!(parse_name("ffqi_p3_d12.bin"), Some((3, 12)));
        assert_eq!(parse_name("ffqi_p3_d12.tmp"), None);
        assert_eq!(parse_name("other.bin"), None);
    }

    #[test]
    fn reuses_and_repairs_cache() {
        let dir = tempfile::tempdir().unwrap();
        let f = FieldSpec::new(2).unwrap();
        let built = load_table(f, 6, dir.path()).unwrap();
        let path = dir.path().join("ffqi_p2_d6.bin");
        assert!(path.is_file());
        let smaller = load_table(f, 4, dir.path()).unwrap();
        assert_eq!(smaller.max_deg(), 6);
        fs::write(&path, b"FFQI garbage").unwrap();
        let rebuilt = load_table(f, 6, dir.path()).unwrap();
        assert_eq!(rebuilt.count(6), built.count(6));
        assert!(IrreducibleTable::load_cache(&path).is_ok());
    }
}
