//! Binary field files: raw little-endian `f64` values in node order plus a
//! JSON sidecar carrying the grid, the kind of values and a SHA-256 checksum
//! of the raw bytes.
//!
//! `write_field(dir, "u_0003", ..)` produces `dir/u_0003.f64` and
//! `dir/u_0003.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GridSpec;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMeta {
    pub format_version: u32,
    pub kind: String,
    pub grid: GridSpec,
    pub count: usize,
    /// Hex SHA-256 of the `.f64` file.
    pub checksum: String,
    /// Unreachable or undefined nodes are stored as NaN when this is set.
    #[serde(default)]
    pub nan_means_missing: bool,
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode(bytes: &[u8]) -> Option<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return None;
    }
    Some(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn data_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.f64"))
}

pub fn meta_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.json"))
}

/// Writes a field and its sidecar; returns the sidecar contents.
pub fn write_field(
    dir: &Path,
    stem: &str,
    grid: &GridSpec,
    values: &[f64],
    kind: &str,
    extra: serde_json::Value,
) -> Result<FieldMeta> {
    if values.len() != grid.len() {
        return Err(Error::GridMismatch("write_field"));
    }
    write_raw(dir, stem, grid, values, kind, extra)
}

/// Like [`write_field`] but without the node-count check, for stacked data
/// such as traces (`count` records the actual length).
pub fn write_raw(
    dir: &Path,
    stem: &str,
    grid: &GridSpec,
    values: &[f64],
    kind: &str,
    extra: serde_json::Value,
) -> Result<FieldMeta> {
    fs::create_dir_all(dir)?;
    let bytes = encode(values);
    let meta = FieldMeta {
        format_version: FORMAT_VERSION,
        kind: kind.to_owned(),
        grid: *grid,
        count: values.len(),
        checksum: sha256_hex(&bytes),
        nan_means_missing: values.iter().any(|v| v.is_nan()),
        extra,
    };
    fs::write(data_path(dir, stem), bytes)?;
    fs::write(meta_path(dir, stem), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(meta)
}

/// Reads a field, rejecting version or checksum mismatches.
pub fn read_field(dir: &Path, stem: &str) -> Result<(FieldMeta, Vec<f64>)> {
    let mpath = meta_path(dir, stem);
    let meta: FieldMeta = serde_json::from_slice(&fs::read(&mpath)?)
        .map_err(|e| Error::Format { path: mpath.clone(), detail: e.to_string() })?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format {
            path: mpath,
            detail: format!("format version {} (expected {FORMAT_VERSION})", meta.format_version),
        });
    }
    let dpath = data_path(dir, stem);
    let bytes = fs::read(&dpath)?;
    if sha256_hex(&bytes) != meta.checksum {
        return Err(Error::Format { path: dpath, detail: "checksum mismatch".into() });
    }
    let values =
        decode(&bytes).ok_or_else(|| Error::Format { path: dpath.clone(), detail: "truncated data".into() })?;
    if values.len() != meta.count {
        return Err(Error::Format {
            path: dpath,
            detail: format!("{} values, header says {}", values.len(), meta.count),
        });
    }
    meta.grid.validate()?;
    Ok((meta, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn encode_decode_round_trip(values in proptest::collection::vec(any::<f64>(), 0..64)) {
            let back = decode(&encode(&values)).unwrap();
            prop_assert_eq!(values.len(), back.len());
            for (a, b) in values.iter().zip(&back) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn corrupted_file_is_rejected() {
        let dir = std::env::temp_dir().join(format!("tat-io-{}", std::process::id()));
        let g = GridSpec::square(0.0, 1.0, 8).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|k| k as f64 * 0.5).collect();
        write_field(&dir, "phi", &g, &vals, "test", serde_json::json!({"note": 1})).unwrap();
        let (meta, back) = read_field(&dir, "phi").unwrap();
        assert_eq!(meta.grid, g);
        assert_eq!(back, vals);
        let mut bytes = fs::read(data_path(&dir, "phi")).unwrap();
        bytes[3] ^= 0x40;
        fs::write(data_path(&dir, "phi"), bytes).unwrap();
        assert!(matches!(read_field(&dir, "phi"), Err(Error::Format { .. })));
        fs::remove_dir_all(dir).ok();
    }
}
