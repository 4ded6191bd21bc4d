//! Binary checkpoints for bit-exact resume.
//!
//! Layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `PFCKPT\0\0` |
//! | 4 | format version (u32, currently 1) |
//! | 8 + 8 | `nx`, `ny` (u64) |
//! | 1 | periodic-x flag |
//! | 8 + 8 | `dx`, `dy` (f64) |
//! | 8 | time (f64) |
//! | 8 | step (u64) |
//! | 64 | configuration digest, hex ASCII |
//! | … | `u`, `v`, `p`, `gamma` as f64 arrays in that order |
//! | nx·ny | mask codes, one byte each |

use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Field, Snapshot, SolverState};
use crate::geometry::{CellKind, CellMask, GridSpec};

pub const MAGIC: &[u8; 8] = b"PFCKPT\0\0";
pub const VERSION: u32 = 1;
const DIGEST_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub snapshot: Snapshot,
    /// Digest of the configuration that produced the state.
    pub config_digest: String,
}

pub fn checkpoint_bytes(snap: &Snapshot, config_digest: &str) -> Result<Vec<u8>> {
    if config_digest.len() != DIGEST_LEN {
        return Err(Error::format(
            "checkpoint",
            format!("configuration digest must be {DIGEST_LEN} hex characters"),
        ));
    }
    let s = &snap.state;
    let g = s.grid;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny as u64).to_le_bytes());
    out.push(u8::from(g.periodic_x));
    for x in [g.dx, g.dy, s.t] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out.extend_from_slice(&s.step.to_le_bytes());
    out.extend_from_slice(config_digest.as_bytes());
    for f in [&s.u, &s.v, &s.p, &s.gamma] {
        for x in &f.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.extend(snap.mask.cells().iter().map(|c| c.code() as u8));
    Ok(out)
}

pub fn write_checkpoint(path: &Path, snap: &Snapshot, config_digest: &str) -> Result<()> {
    let bytes = checkpoint_bytes(snap, config_digest)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let chunk = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::format("checkpoint", "file is truncated"))?;
        self.pos += n;
        Ok(chunk)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn field(&mut self, nx: usize, ny: usize) -> Result<Field> {
        let data = (0..nx * ny).map(|_| self.f64()).collect::<Result<_>>()?;
        Ok(Field { nx, ny, data })
    }
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::format("checkpoint", "bad magic header"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::format("checkpoint", format!("unsupported version {version}")));
    }
    let nx = r.u64()? as usize;
    let ny = r.u64()? as usize;
    if nx == 0 || ny == 0 || nx.saturating_mul(ny) > bytes.len() {
        return Err(Error::format("checkpoint", format!("implausible grid {nx}×{ny}")));
    }
    let periodic_x = r.take(1)?[0] != 0;
    let dx = r.f64()?;
    let dy = r.f64()?;
    let t = r.f64()?;
    let step = r.u64()?;
    let config_digest = String::from_utf8(r.take(DIGEST_LEN)?.to_vec())
        .map_err(|_| Error::format("checkpoint", "digest is not ASCII"))?;
    let grid = GridSpec {
        nx,
        ny,
        dx,
        dy,
        periodic_x,
    };
    let state = SolverState {
        grid,
        u: r.field(nx + 1, ny)?,
        v: r.field(nx, ny + 1)?,
        p: r.field(nx, ny)?,
        gamma: r.field(nx, ny)?,
        t,
        step,
    };
    let cells = r
        .take(nx * ny)?
        .iter()
        .map(|&b| {
            CellKind::from_code(b as i32).ok_or_else(|| Error::format("checkpoint", format!("unknown mask code {b}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::format("checkpoint", "trailing bytes after mask"));
    }
    Ok(Checkpoint {
        snapshot: Snapshot::new(state, CellMask::from_cells(nx, ny, cells)?),
        config_digest,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = GridSpec::new(3, 5, 3e-7, 5e-7).periodic();
        let mut snap = Snapshot::from_velocity_fn(g, |x, y| [x.sin(), y.cos() / 3.0]);
        snap.state.t = 0.1 + 0.2;
        snap.state.step = 99;
        snap.mask.set(1, 1, CellKind::Solid);
        let digest = "ab".repeat(32);
        let bytes = checkpoint_bytes(&snap, &digest).unwrap();
        let back = parse_checkpoint(&bytes).unwrap();
        assert_eq!(back.snapshot, snap);
        assert_eq!(back.config_digest, digest);
        assert!(parse_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(parse_checkpoint(&bad).is_err());
        assert!(checkpoint_bytes(&snap, "short").is_err());
    }
}
