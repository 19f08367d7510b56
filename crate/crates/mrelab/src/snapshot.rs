//! Binary field snapshots.
//!
//! Layout: the magic bytes `MRL1`, `n1` and `n2` as little-endian `u32`, the
//! component count as one `u8`, then `ncomp * n1 * n2` little-endian `f64`,
//! component by component, each row-major with `x2` fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use mrelab_core::ScalarField;

use crate::error::{io_err, HarnessError, Result};

pub const MAGIC: &[u8; 4] = b"MRL1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n1: usize,
    pub n2: usize,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn from_fields(fields: &[&ScalarField]) -> Self {
        let (n1, n2) = fields.first().map_or((0, 0), |f| (f.grid().n1(), f.grid().n2()));
        Snapshot { n1, n2, components: fields.iter().map(|f| f.values().to_vec()).collect() }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + 8 * self.n1 * self.n2 * self.components.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n1 as u32).to_le_bytes());
        out.extend_from_slice(&(self.n2 as u32).to_le_bytes());
        out.push(self.components.len() as u8);
        for c in &self.components {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 13 || &bytes[..4] != MAGIC {
            return Err("missing MRL1 header".into());
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let (n1, n2, ncomp) = (u32_at(4), u32_at(8), bytes[12] as usize);
        let want = ncomp.checked_mul(n1).and_then(|v| v.checked_mul(n2)).and_then(|v| v.checked_mul(8)).map(|v| v + 13);
        if want != Some(bytes.len()) {
            return Err(format!("header {n1}x{n2}x{ncomp} does not match {} bytes", bytes.len()));
        }
        let mut it = bytes[13..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let components = (0..ncomp).map(|_| it.by_ref().take(n1 * n2).collect()).collect();
        Ok(Snapshot { n1, n2, components })
    }
}

pub fn write_snapshot(path: &Path, fields: &[&ScalarField]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&Snapshot::from_fields(fields).encode()).map_err(io_err(path))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Snapshot::decode(&bytes).map_err(|msg| HarnessError::Snapshot { path: path.to_path_buf(), msg })
}

/// `<prefix>_t<stamp>.mrl` with the time fixed to six decimals, zero padded
/// so that names sort by time.
pub fn snapshot_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:013.6}.mrl")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let s = Snapshot { n1: 2, n2: 3, components: vec![vec![1.0; 6]] };
        let b = s.encode();
        assert_eq!(&b[..4], b"MRL1");
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..12], &[3, 0, 0, 0]);
        assert_eq!(b[12], 1);
        assert_eq!(b.len(), 13 + 48);
        assert_eq!(Snapshot::decode(&b).unwrap(), s);
        assert!(Snapshot::decode(&b[..20]).is_err());
    }

    #[test]
    fn file_round_trip() {
        use mrelab_core::rng::{band_limited_field, seeded};
        let dir = tempfile::tempdir().unwrap();
        let g = mrelab_core::Grid::channel(8, 9).unwrap();
        let mut rng = seeded(3, 0);
        let a = band_limited_field(g, &mut rng, 3, 3).unwrap();
        let b = band_limited_field(g, &mut rng, 3, 3).unwrap();
        let path = dir.path().join("x.mrl");
        write_snapshot(&path, &[&a, &b]).unwrap();
        let snap = read_snapshot(&path).unwrap();
        assert_eq!((snap.n1, snap.n2), (8, 9));
        assert_eq!(snap.components, vec![a.values().to_vec(), b.values().to_vec()]);

        // A header claiming a huge grid must not overflow.
        fs::write(&path, b"MRL1\xff\xff\xff\xff\xff\xff\xff\xff\xffrest").unwrap();
        assert!(matches!(read_snapshot(&path), Err(HarnessError::Snapshot { .. })));
        assert!(matches!(read_snapshot(&dir.path().join("missing.mrl")), Err(HarnessError::Io { .. })));
    }

    #[test]
    fn names_sort_by_time() {
        assert_eq!(snapshot_name("b", 2.5), "b_t000002.500000.mrl");
        assert!(snapshot_name("b", 9.0) < snapshot_name("b", 10.0));
    }
}
