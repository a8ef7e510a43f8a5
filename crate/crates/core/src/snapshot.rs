//! Binary snapshot files.
//!
//! Layout, little-endian throughout:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `BKHM` |
//! | 2 | format version (u16) |
//! | 24 | `L`, `a`, `b` (f64) |
//! | 8 | `N1`, `N2` (u32) |
//! | 32 | `nu`, `alpha`, `beta`, `f0` (f64) |
//! | 8 | `t` (f64) |
//! | 8 | `step_index` (u64) |
//! | 8 N1 N2 | physical vorticity, x2 rows outer, x1 inner (f64) |
//! | 8 | FNV-1a 64 hash of all preceding bytes (u64) |

use std::path::{Path, PathBuf};

use crate::dynamics::{FlowState, PhysicsParams};
use crate::error::{Error, Result};
use crate::field::PhysicalField;
use crate::grid::ChannelGrid;
use crate::io::write_atomic;
use crate::transform::Transformer;

pub const MAGIC: &[u8; 4] = b"BKHM";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 24 + 8 + 32 + 8 + 8;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Decoded snapshot file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: ChannelGrid,
    pub physics: PhysicsParams,
    pub t: f64,
    pub step_index: u64,
    /// Physical vorticity samples.
    pub vorticity: Vec<f64>,
}

impl Snapshot {
    pub fn of_state(state: &FlowState, physics: &PhysicsParams) -> Result<Self> {
        let grid = *state.omega.grid();
        let w = Transformer::new(&grid).inverse(&state.omega)?;
        Ok(Self { grid, physics: *physics, t: state.t, step_index: state.step_index, vorticity: w.into_values() })
    }

    /// Spectral state; exact up to the rounding of one forward transform.
    pub fn to_state(&self) -> Result<FlowState> {
        let w = PhysicalField::new(self.grid, self.vorticity.clone())?;
        let omega = Transformer::new(&self.grid).forward(&w)?;
        Ok(FlowState { omega, t: self.t, step_index: self.step_index })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let p = &self.physics;
        let mut b = Vec::with_capacity(HEADER_LEN + 8 * self.vorticity.len() + 8);
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        for v in [g.length(), g.a(), g.b()] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&(g.n1() as u32).to_le_bytes());
        b.extend_from_slice(&(g.n2() as u32).to_le_bytes());
        for v in [p.nu, p.alpha, p.beta, p.f0, self.t] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&self.step_index.to_le_bytes());
        for v in &self.vorticity {
            b.extend_from_slice(&v.to_le_bytes());
        }
        let h = fnv1a64(&b);
        b.extend_from_slice(&h.to_le_bytes());
        b
    }

    /// Decodes a file image; `path` only labels errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let p = || path.to_path_buf();
        if bytes.len() < 6 {
            if bytes.len() >= 4 && &bytes[..4] != MAGIC {
                return Err(Error::BadMagic { path: p() });
            }
            return Err(Error::Truncated { path: p(), len: bytes.len(), expected: HEADER_LEN + 8 });
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::BadMagic { path: p() });
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::Version { path: p(), found: version, expected: VERSION });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated { path: p(), len: bytes.len(), expected: HEADER_LEN + 8 });
        }
        let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let u = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let (n1, n2) = (u(30), u(34));
        let expected = n1
            .checked_mul(n2)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(HEADER_LEN + 8))
            .ok_or_else(|| Error::HeaderMismatch { path: p(), msg: format!("grid {n1}x{n2} is too large") })?;
        if bytes.len() < expected {
            return Err(Error::Truncated { path: p(), len: bytes.len(), expected });
        }
        if bytes.len() > expected {
            return Err(Error::HeaderMismatch {
                path: p(),
                msg: format!("{} trailing bytes after the checksum", bytes.len() - expected),
            });
        }
        let body = &bytes[..expected - 8];
        let stored = u64::from_le_bytes(bytes[expected - 8..].try_into().expect("8 bytes"));
        let computed = fnv1a64(body);
        if stored != computed {
            return Err(Error::Checksum { path: p(), stored, computed });
        }
        let grid = ChannelGrid::new(f(6), f(14), f(22), n1, n2)
            .map_err(|e| Error::HeaderMismatch { path: p(), msg: format!("invalid grid header: {e}") })?;
        let physics = PhysicsParams { nu: f(38), alpha: f(46), beta: f(54), f0: f(62) };
        let t = f(70);
        let step_index = u64::from_le_bytes(bytes[78..86].try_into().expect("8 bytes"));
        let vorticity = body[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self { grid, physics, t, step_index, vorticity })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading snapshot {}", path.display()), e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Refuses a snapshot whose grid differs from the analysis grid.
    pub fn check_grid(&self, grid: &ChannelGrid, path: &Path) -> Result<()> {
        if self.grid != *grid {
            return Err(Error::HeaderMismatch {
                path: path.to_path_buf(),
                msg: format!(
                    "snapshot grid {}x{} (L={}, [{}, {}]) differs from the configured {}x{} (L={}, [{}, {}])",
                    self.grid.n1(),
                    self.grid.n2(),
                    self.grid.length(),
                    self.grid.a(),
                    self.grid.b(),
                    grid.n1(),
                    grid.n2(),
                    grid.length(),
                    grid.a(),
                    grid.b()
                ),
            });
        }
        Ok(())
    }
}

pub fn write_snapshot(state: &FlowState, physics: &PhysicsParams, path: &Path) -> Result<()> {
    Snapshot::of_state(state, physics)?.write(path)
}

pub fn read_snapshot(path: &Path) -> Result<FlowState> {
    Snapshot::read(path)?.to_state()
}

/// File name of snapshot `i` in a run directory.
pub fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.bkhm")
}

/// Snapshot files of a directory in name order.
pub fn list_snapshots(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
    let mut v = Vec::new();
    for e in rd {
        let e = e.map_err(|e| Error::io(format!("listing {}", dir.display()), e))?;
        let p = e.path();
        if p.extension().is_some_and(|x| x == "bkhm") {
            v.push(p);
        }
    }
    v.sort();
    Ok(v)
}

/// Every snapshot of `dir`, checked against `grid`.
pub fn load_snapshots(dir: &Path, grid: &ChannelGrid) -> Result<Vec<(Snapshot, FlowState)>> {
    let paths = list_snapshots(dir)?;
    if paths.is_empty() {
        return Err(Error::NoSnapshots);
    }
    paths
        .iter()
        .map(|p| {
            let s = Snapshot::read(p)?;
            s.check_grid(grid, p)?;
            let st = s.to_state()?;
            Ok((s, st))
        })
        .collect()
}
