use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{SpectralField, TorusGrid};

const MAGIC: &[u8; 8] = b"NSALPHSN";
const VERSION: u32 = 1;
/// Lexicographic half-spectrum coefficient order.
const ORDERING_LEX_HALF: u32 = 1;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a field snapshot (bad magic)")]
    BadMagic,
    #[error("snapshot format version {found} not supported (reader speaks {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("unknown coefficient ordering tag {0}")]
    UnknownOrdering(u32),
    #[error("snapshot payload truncated")]
    Truncated,
    #[error("snapshot header is inconsistent: {0}")]
    BadHeader(String),
    #[error(
        "snapshot grid (N = {found_n}, L = {found_l}) does not match the requested grid \
         (N = {want_n}, L = {want_l})"
    )]
    GridMismatch {
        found_n: usize,
        found_l: f64,
        want_n: usize,
        want_l: f64,
    },
}

/// Write `(field, t)`: header, then for every lexicographically positive
/// retained mode the 3 components as `(re, im)` little-endian f64 pairs. The
/// conjugate half is implied by reality.
pub fn write_snapshot(field: &SpectralField, t: f64, path: &Path) -> Result<(), SnapshotError> {
    let grid = field.grid();
    let half = grid.half_spectrum();
    let mut buf = Vec::with_capacity(64 + half.len() * 48);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.kmax().to_le_bytes());
    buf.extend_from_slice(&3u32.to_le_bytes());
    buf.extend_from_slice(&ORDERING_LEX_HALF.to_le_bytes());
    buf.extend_from_slice(&grid.l().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&(half.len() as u64).to_le_bytes());
    for z in half {
        let v = field.mode(z);
        for c in v {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SnapshotError> {
        if self.pos + N > self.data.len() {
            return Err(SnapshotError::Truncated);
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.data[self.pos..self.pos + N]);
        self.pos += N;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take::<4>()?))
    }

    fn i32(&mut self) -> Result<i32, SnapshotError> {
        Ok(i32::from_le_bytes(self.take::<4>()?))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take::<8>()?))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take::<8>()?))
    }
}

pub fn read_snapshot(path: &Path) -> Result<(SpectralField, f64), SnapshotError> {
    let mut data = Vec::new();
    fs::File::open(path)?.read_to_end(&mut data)?;
    let mut cur = Cursor { data: &data, pos: 0 };

    let magic = cur.take::<8>()?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion {
            found: version,
            supported: VERSION,
        });
    }
    let n = cur.u32()? as usize;
    let kmax = cur.i32()?;
    let components = cur.u32()?;
    let ordering = cur.u32()?;
    if components != 3 {
        return Err(SnapshotError::BadHeader(format!(
            "expected 3 components, found {components}"
        )));
    }
    if ordering != ORDERING_LEX_HALF {
        return Err(SnapshotError::UnknownOrdering(ordering));
    }
    let l = cur.f64()?;
    let t = cur.f64()?;
    let count = cur.u64()? as usize;

    let grid = reconstruct_grid(n, l, kmax)?;
    let half = grid.half_spectrum();
    if half.len() != count {
        return Err(SnapshotError::BadHeader(format!(
            "mode count {count} does not match grid (expected {})",
            half.len()
        )));
    }
    let mut field = SpectralField::zeros(grid);
    for z in half {
        let mut v = [Complex64::default(); 3];
        for comp in &mut v {
            let re = cur.f64()?;
            let im = cur.f64()?;
            *comp = Complex64::new(re, im);
        }
        field.set_mode_pair(z, v);
    }
    if cur.pos != data.len() {
        return Err(SnapshotError::BadHeader(format!(
            "{} trailing bytes after payload",
            data.len() - cur.pos
        )));
    }
    Ok((field, t))
}

/// Read a snapshot that must live on `grid`; cross-grid reads are rejected.
pub fn read_snapshot_on_grid(
    grid: &TorusGrid,
    path: &Path,
) -> Result<(SpectralField, f64), SnapshotError> {
    let (field, t) = read_snapshot(path)?;
    if field.grid() != grid {
        return Err(SnapshotError::GridMismatch {
            found_n: field.grid().n(),
            found_l: field.grid().l(),
            want_n: grid.n(),
            want_l: grid.l(),
        });
    }
    Ok((field, t))
}

/// Rebuild the grid from header data; the dealias cutoff is recovered from
/// the stored `kmax` directly.
fn reconstruct_grid(n: usize, l: f64, kmax: i32) -> Result<TorusGrid, SnapshotError> {
    if n < 4 || kmax < 0 {
        return Err(SnapshotError::BadHeader(format!(
            "invalid dimensions N = {n}, kmax = {kmax}"
        )));
    }
    // express kmax as the fraction kmax/(N/2)
    let grid = TorusGrid::with_dealias(n, l, kmax as u32, (n / 2) as u32)
        .map_err(|e| SnapshotError::BadHeader(e.to_string()))?;
    if grid.kmax() != kmax {
        return Err(SnapshotError::BadHeader(format!(
            "kmax {kmax} not representable on N = {n}"
        )));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SolenoidalField;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.snap");
        let grid = TorusGrid::new(8, 2.0 * PI).unwrap();
        let u = SolenoidalField::random(grid, 33, -1.0);
        write_snapshot(u.field(), 0.75, &path).unwrap();
        let (back, t) = read_snapshot(&path).unwrap();
        assert_eq!(t, 0.75);
        assert_eq!(&back, u.field());
    }

    #[test]
    fn corrupted_and_future_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.snap");
        let grid = TorusGrid::new(8, 1.0).unwrap();
        let u = SolenoidalField::random(grid, 1, 0.0);
        write_snapshot(u.field(), 0.0, &path).unwrap();

        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_snapshot(&path), Err(SnapshotError::BadMagic)));

        bytes[0] ^= 0xff; // restore magic, bump version
        bytes[8] = 99;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_snapshot(&path),
            Err(SnapshotError::UnsupportedVersion { found: 99, .. })
        ));

        bytes[8] = 1;
        let len = bytes.len();
        bytes.truncate(len - 8);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_snapshot(&path), Err(SnapshotError::Truncated)));
    }

    #[test]
    fn cross_grid_read_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.snap");
        let grid = TorusGrid::new(8, 1.0).unwrap();
        let u = SolenoidalField::random(grid, 1, 0.0);
        write_snapshot(u.field(), 0.0, &path).unwrap();
        let other = TorusGrid::new(16, 1.0).unwrap();
        assert!(matches!(
            read_snapshot_on_grid(&other, &path),
            Err(SnapshotError::GridMismatch { .. })
        ));
    }
}
