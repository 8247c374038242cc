//! Flat binary field snapshots with a JSON sidecar descriptor.
//!
//! Layout: 8-byte magic + version, header (topology, Lx, Ly, nx, ny, n,
//! field kind), then row-major little-endian f64 payload; complex spinor
//! entries are stored as (re, im) pairs. The sidecar `<path>.json`
//! mirrors the header for tooling.

use crate::clifford::Spinor;
use crate::error::{DhError, Result};
use crate::grid::{Grid, ScalarField, Topology};
use crate::sphere::{MapField, SpinorAlongMap};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DHLB";
const VERSION: u32 = 1;

/// What the payload holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// Map components only.
    Map,
    /// Map components followed by spinor components.
    Pair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub topology: Topology,
    pub kind: FieldKind,
    pub lx: f64,
    pub ly: f64,
    pub nx: u64,
    pub ny: u64,
    pub n: u64,
}

fn bad(msg: impl Into<String>) -> DhError {
    DhError::Snapshot(msg.into())
}

/// Save a configuration. `psi = None` writes a map-only snapshot.
pub fn save_state(
    path: impl AsRef<Path>,
    phi: &MapField,
    psi: Option<&SpinorAlongMap>,
) -> Result<()> {
    let grid = phi.grid();
    let header = SnapshotHeader {
        version: VERSION,
        topology: grid.topology(),
        kind: if psi.is_some() {
            FieldKind::Pair
        } else {
            FieldKind::Map
        },
        lx: grid.lx(),
        ly: grid.ly(),
        nx: grid.nx() as u64,
        ny: grid.ny() as u64,
        n: phi.n() as u64,
    };

    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match header.topology {
        Topology::Torus => 0,
        Topology::Rectangle => 1,
    });
    buf.push(match header.kind {
        FieldKind::Map => 0,
        FieldKind::Pair => 1,
    });
    buf.extend_from_slice(&[0u8; 2]);
    buf.extend_from_slice(&header.lx.to_le_bytes());
    buf.extend_from_slice(&header.ly.to_le_bytes());
    buf.extend_from_slice(&header.nx.to_le_bytes());
    buf.extend_from_slice(&header.ny.to_le_bytes());
    buf.extend_from_slice(&header.n.to_le_bytes());
    for comp in phi.comps() {
        for v in comp.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(psi) = psi {
        for comp in psi.comps() {
            for s in comp.data() {
                for v in [s.c0.re, s.c0.im, s.c1.re, s.c1.im] {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    let mut f = std::fs::File::create(path.as_ref())?;
    f.write_all(&buf)?;

    let sidecar = path.as_ref().with_extension(
        match path.as_ref().extension().and_then(|e| e.to_str()) {
            Some(ext) => format!("{ext}.json"),
            None => "json".to_string(),
        },
    );
    let mut f = std::fs::File::create(sidecar)?;
    f.write_all(serde_json::to_string_pretty(&header).map_err(|e| bad(e.to_string()))?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

fn take_f64(bytes: &[u8], cursor: &mut usize) -> Result<f64> {
    let end = *cursor + 8;
    if end > bytes.len() {
        return Err(bad("truncated payload"));
    }
    let v = f64::from_le_bytes(bytes[*cursor..end].try_into().unwrap());
    *cursor = end;
    Ok(v)
}

/// Load a snapshot; the spinor is zero for map-only files.
pub fn load_state(path: impl AsRef<Path>) -> Result<(MapField, SpinorAlongMap)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    if bytes.len() < 52 || &bytes[0..4] != MAGIC {
        return Err(bad("not a field snapshot (bad magic)"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(format!("unsupported snapshot version {version}")));
    }
    let topology = match bytes[8] {
        0 => Topology::Torus,
        1 => Topology::Rectangle,
        other => return Err(bad(format!("unknown topology tag {other}"))),
    };
    let kind = match bytes[9] {
        0 => FieldKind::Map,
        1 => FieldKind::Pair,
        other => return Err(bad(format!("unknown field kind {other}"))),
    };
    let mut cursor = 12usize;
    let lx = take_f64(&bytes, &mut cursor)?;
    let ly = take_f64(&bytes, &mut cursor)?;
    let nx = u64::from_le_bytes(bytes[cursor..cursor + 8].try_into().unwrap()) as usize;
    cursor += 8;
    let ny = u64::from_le_bytes(bytes[cursor..cursor + 8].try_into().unwrap()) as usize;
    cursor += 8;
    let n = u64::from_le_bytes(bytes[cursor..cursor + 8].try_into().unwrap()) as usize;
    cursor += 8;

    let grid = Grid::new(topology, lx, ly, nx, ny)?;
    let mut comps = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let mut f = ScalarField::zeros(&grid);
        for v in f.data_mut() {
            *v = take_f64(&bytes, &mut cursor)?;
        }
        comps.push(f);
    }
    let phi = MapField::from_unit_comps(comps)?;

    let mut psi = SpinorAlongMap::zeros(&grid, n);
    if kind == FieldKind::Pair {
        for comp in psi.comps_mut() {
            for s in comp.data_mut() {
                let re0 = take_f64(&bytes, &mut cursor)?;
                let im0 = take_f64(&bytes, &mut cursor)?;
                let re1 = take_f64(&bytes, &mut cursor)?;
                let im1 = take_f64(&bytes, &mut cursor)?;
                *s = Spinor::new(Complex64::new(re0, im0), Complex64::new(re1, im1));
            }
        }
    }
    if cursor != bytes.len() {
        return Err(bad("trailing bytes after payload"));
    }
    Ok((phi, psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpinorGrid;
    use crate::sphere::project_tangent;
    use std::f64::consts::PI;

    #[test]
    fn round_trip_pair() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.dhf");
        let grid = Grid::torus(1.0, 1.0, 16, 16).unwrap();
        let phi = MapField::from_fn(&grid, 2, |x, _| {
            vec![(2.0 * PI * x).cos(), (2.0 * PI * x).sin(), 0.0]
        })
        .unwrap();
        let raw = vec![
            SpinorGrid::from_fn(&grid, |x, y| Spinor::from_re(x, y)),
            SpinorGrid::zeros(&grid),
            SpinorGrid::zeros(&grid),
        ];
        let psi = project_tangent(&phi, &raw);
        save_state(&path, &phi, Some(&psi)).unwrap();
        assert!(path.with_extension("dhf.json").exists());

        let (phi2, psi2) = load_state(&path).unwrap();
        assert_eq!(phi.comps(), phi2.comps());
        assert_eq!(psi.comps(), psi2.comps());
    }

    #[test]
    fn map_only_round_trip_and_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.dhf");
        let grid = Grid::rectangle(2.0, 2.0, 8, 8).unwrap();
        let phi = MapField::constant(&grid, &[1.0, 0.0, 0.0]).unwrap();
        save_state(&path, &phi, None).unwrap();
        let (phi2, psi2) = load_state(&path).unwrap();
        assert_eq!(phi.comps(), phi2.comps());
        assert!(psi2.is_zero());

        let junk = dir.path().join("junk.dhf");
        std::fs::write(&junk, b"not a snapshot at all").unwrap();
        assert!(matches!(load_state(&junk), Err(DhError::Snapshot(_))));
    }
}
