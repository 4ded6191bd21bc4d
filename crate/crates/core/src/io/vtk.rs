//! Legacy VTK files: structured-points snapshots (binary, big-endian) and
//! ASCII polydata for streamlines.
//!
//! A snapshot file holds, as `CELL_DATA`, the scalars `p`, `gamma`, `mask`
//! (0 solid, 1 liquid, 2 gas) and the cell-centred vector `velocity`; as
//! `POINT_DATA`, the raw face velocities `u_face` and `v_face`. The face
//! arrays are smaller than the point lattice and are zero-padded at the end;
//! they exist so a snapshot reloads bit-exactly. Step, time and periodicity
//! are recorded in the title line.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{Field, Snapshot, SolverState};
use crate::geometry::{CellKind, CellMask, GridSpec};
use crate::trace::Streamline;

const TITLE_TAG: &str = "porefluid snapshot";

fn refuse_non_finite(snap: &Snapshot) -> Result<()> {
    snap.state.check_finite()
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.push(b'\n');
}

/// Serialises a snapshot. Identical snapshots give identical bytes.
pub fn vtk_bytes(snap: &Snapshot) -> Result<Vec<u8>> {
    refuse_non_finite(snap)?;
    let s = &snap.state;
    let g = s.grid;
    let (nx, ny) = (g.nx, g.ny);
    let cells = nx * ny;
    let points = (nx + 1) * (ny + 1);

    let mut out = Vec::with_capacity(8 * (6 * cells + 2 * points) + 512);
    let header = format!(
        "# vtk DataFile Version 3.0\n\
         {TITLE_TAG} step={} t={} periodic={}\n\
         BINARY\n\
         DATASET STRUCTURED_POINTS\n\
         DIMENSIONS {} {} 1\n\
         ORIGIN 0 0 0\n\
         SPACING {} {} 1\n\
         CELL_DATA {cells}\n",
        s.step,
        s.t,
        u8::from(g.periodic_x),
        nx + 1,
        ny + 1,
        g.dx,
        g.dy,
    );
    out.extend_from_slice(header.as_bytes());

    for (name, f) in [("p", &s.p), ("gamma", &s.gamma)] {
        out.extend_from_slice(format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n").as_bytes());
        put_f64s(&mut out, f.data.iter().copied());
    }
    out.extend_from_slice(b"SCALARS mask int 1\nLOOKUP_TABLE default\n");
    for c in snap.mask.cells() {
        out.extend_from_slice(&c.code().to_be_bytes());
    }
    out.push(b'\n');
    out.extend_from_slice(b"VECTORS velocity double\n");
    let mut vel = Vec::with_capacity(3 * cells);
    for j in 0..ny {
        for i in 0..nx {
            let [u, v] = s.cell_velocity(i, j);
            vel.extend([u, v, 0.0]);
        }
    }
    put_f64s(&mut out, vel);

    out.extend_from_slice(format!("POINT_DATA {points}\n").as_bytes());
    for (name, f) in [("u_face", &s.u), ("v_face", &s.v)] {
        out.extend_from_slice(format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n").as_bytes());
        let pad = points - f.data.len();
        put_f64s(&mut out, f.data.iter().copied().chain(std::iter::repeat(0.0).take(pad)));
    }
    Ok(out)
}

pub fn write_vtk(snap: &Snapshot, path: &Path) -> Result<()> {
    let bytes = vtk_bytes(snap)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_vtk(path: &Path) -> Result<Snapshot> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_vtk(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn bad(message: impl Into<String>) -> Error {
    Error::format("VTK", message)
}

impl<'a> Cursor<'a> {
    fn line(&mut self) -> Option<&'a str> {
        loop {
            if self.pos >= self.buf.len() {
                return None;
            }
            let rest = &self.buf[self.pos..];
            let end = rest.iter().position(|&b| b == b'\n').unwrap_or(rest.len());
            self.pos += (end + 1).min(rest.len());
            let text = std::str::from_utf8(&rest[..end]).ok()?.trim();
            if !text.is_empty() {
                return Some(text);
            }
        }
    }

    fn skip_space(&mut self) {
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Option<&'a str> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.buf.len() && !self.buf[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| std::str::from_utf8(&self.buf[start..self.pos]).ok())?
    }

    fn binary(&mut self, count: usize, kind: &str) -> Result<Vec<f64>> {
        let size = match kind {
            "double" => 8,
            "float" | "int" => 4,
            other => return Err(bad(format!("unsupported data type `{other}`"))),
        };
        let need = count * size;
        let chunk = self
            .buf
            .get(self.pos..self.pos + need)
            .ok_or_else(|| bad(format!("truncated binary block ({need} bytes expected)")))?;
        self.pos += need;
        Ok(chunk
            .chunks_exact(size)
            .map(|b| match kind {
                "double" => f64::from_be_bytes(b.try_into().unwrap()),
                "float" => f32::from_be_bytes(b.try_into().unwrap()) as f64,
                _ => i32::from_be_bytes(b.try_into().unwrap()) as f64,
            })
            .collect())
    }

    fn ascii(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count)
            .map(|_| {
                let t = self.token().ok_or_else(|| bad("truncated ASCII block"))?;
                t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}`")))
            })
            .collect()
    }
}

fn numbers<const N: usize>(line: &str, keyword: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = line.split_whitespace().skip(1).collect();
    if parts.len() != N {
        return Err(bad(format!("`{keyword}` needs {N} values")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad(format!("bad number `{p}` in `{keyword}`")))?;
    }
    Ok(out)
}

/// Parses a structured-points file. Arrays this crate does not write are
/// ignored; a missing `mask` means all liquid, a missing `gamma` means
/// liquid fraction 1, and without face arrays the face velocities are
/// averaged from the cell `velocity` vectors.
pub fn parse_vtk(bytes: &[u8]) -> Result<Snapshot> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    let first = c.line().ok_or_else(|| bad("empty file"))?;
    if !first.starts_with("# vtk DataFile") {
        return Err(bad("missing `# vtk DataFile` header"));
    }
    let title = c.line().ok_or_else(|| bad("missing title"))?;
    let binary = match c.line() {
        Some("BINARY") => true,
        Some("ASCII") => false,
        other => return Err(bad(format!("expected BINARY or ASCII, got {other:?}"))),
    };
    match c.line() {
        Some(l) if l.split_whitespace().eq(["DATASET", "STRUCTURED_POINTS"]) => {}
        other => return Err(bad(format!("only STRUCTURED_POINTS is supported, got {other:?}"))),
    }

    let mut dims = None;
    let mut spacing = None;
    let mut cell = HashMap::new();
    let mut point = HashMap::new();
    let mut in_points = None;
    while let Some(line) = c.line() {
        let key = line.split_whitespace().next().unwrap_or("");
        match key {
            "DIMENSIONS" => dims = Some(numbers::<3>(line, key)?),
            "SPACING" | "ASPECT_RATIO" => spacing = Some(numbers::<3>(line, key)?),
            "ORIGIN" => {
                let o = numbers::<3>(line, key)?;
                if o != [0.0; 3] {
                    log::warn!("VTK origin {o:?} ignored; coordinates are taken from 0");
                }
            }
            "CELL_DATA" => in_points = Some(false),
            "POINT_DATA" => in_points = Some(true),
            "SCALARS" | "VECTORS" => {
                let [nxp, nyp, _] = dims.ok_or_else(|| bad("data before DIMENSIONS"))?;
                let (nxp, nyp) = (nxp as usize, nyp as usize);
                let at_points = in_points.ok_or_else(|| bad("data before CELL_DATA/POINT_DATA"))?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let (name, kind) = match parts.as_slice() {
                    [_, n, t, ..] => (n.to_string(), *t),
                    _ => return Err(bad(format!("malformed `{line}`"))),
                };
                let comps = if key == "VECTORS" {
                    3
                } else {
                    parts.get(3).map_or(Ok(1), |s| s.parse::<usize>()).map_err(|_| bad("bad component count"))?
                };
                if key == "SCALARS" {
                    match c.line() {
                        Some(l) if l.starts_with("LOOKUP_TABLE") => {}
                        _ => return Err(bad(format!("`{name}` lacks LOOKUP_TABLE"))),
                    }
                }
                let n = comps
                    * if at_points {
                        nxp * nyp
                    } else {
                        nxp.saturating_sub(1) * nyp.saturating_sub(1)
                    };
                let data = if binary { c.binary(n, kind)? } else { c.ascii(n)? };
                if at_points { &mut point } else { &mut cell }.insert(name, data);
            }
            _ => log::debug!("skipping VTK line `{line}`"),
        }
    }

    let [nxp, nyp, nzp] = dims.ok_or_else(|| bad("missing DIMENSIONS"))?;
    if nzp != 1.0 || nxp < 2.0 || nyp < 2.0 {
        return Err(bad("expected a 2-D lattice with DIMENSIONS nx+1 ny+1 1"));
    }
    let (nx, ny) = (nxp as usize - 1, nyp as usize - 1);
    let [dx, dy, _] = spacing.ok_or_else(|| bad("missing SPACING"))?;
    let meta = title_fields(title);
    let grid = GridSpec {
        nx,
        ny,
        dx,
        dy,
        periodic_x: meta.get("periodic").is_some_and(|v| v == "1"),
    };

    let mask = match cell.remove("mask") {
        Some(codes) => {
            let kinds = codes
                .iter()
                .map(|&k| CellKind::from_code(k as i32).ok_or_else(|| bad(format!("unknown mask code {k}"))))
                .collect::<Result<Vec<_>>>()?;
            CellMask::from_cells(nx, ny, kinds)?
        }
        None => CellMask::uniform(nx, ny, CellKind::Liquid),
    };
    let mut state = SolverState::at_rest(grid);
    state.step = meta.get("step").and_then(|s| s.parse().ok()).unwrap_or(0);
    state.t = meta.get("t").and_then(|s| s.parse().ok()).unwrap_or(0.0);
    if let Some(p) = cell.remove("p") {
        state.p.data = p;
    }
    state.gamma = match cell.remove("gamma") {
        Some(g) => Field { nx, ny, data: g },
        None => Field::filled(nx, ny, 1.0),
    };
    match (point.remove("u_face"), point.remove("v_face")) {
        (Some(mut u), Some(mut v)) => {
            u.truncate((nx + 1) * ny);
            v.truncate(nx * (ny + 1));
            state.u.data = u;
            state.v.data = v;
        }
        _ => {
            let vel = cell
                .remove("velocity")
                .ok_or_else(|| bad("no face velocities and no cell `velocity` vectors"))?;
            faces_from_cells(&mut state, &mask, &vel);
        }
    }
    let snap = Snapshot::new(state, mask);
    refuse_non_finite(&snap)?;
    Ok(snap)
}

fn title_fields(title: &str) -> HashMap<String, String> {
    title
        .split_whitespace()
        .filter_map(|t| t.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

/// Face values as the mean of the adjacent fluid cells; faces touching a
/// solid cell or a closed outer boundary stay zero.
fn faces_from_cells(state: &mut SolverState, mask: &CellMask, vel: &[f64]) {
    let g = state.grid;
    let (nx, ny) = (g.nx, g.ny);
    let cu = |i: usize, j: usize| vel[3 * (j * nx + i)];
    let cv = |i: usize, j: usize| vel[3 * (j * nx + i) + 1];
    for j in 0..ny {
        for i in 0..=nx {
            let (l, r) = if i == 0 || i == nx {
                if !g.periodic_x {
                    continue;
                }
                (nx - 1, 0)
            } else {
                (i - 1, i)
            };
            if !mask.is_solid(l, j) && !mask.is_solid(r, j) {
                state.u.set(i, j, 0.5 * (cu(l, j) + cu(r, j)));
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !mask.is_solid(i, j - 1) && !mask.is_solid(i, j) {
                state.v.set(i, j, 0.5 * (cv(i, j - 1) + cv(i, j)));
            }
        }
    }
}

/// Streamlines as ASCII `POLYDATA` with one polyline each and the seed index
/// as a cell scalar.
pub fn write_streamlines_vtk(lines: &[Streamline], mut w: impl Write) -> std::io::Result<()> {
    let total: usize = lines.iter().map(|l| l.vertices.len()).sum();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "porefluid streamlines")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {total} double")?;
    for l in lines {
        for [x, y] in &l.vertices {
            writeln!(w, "{x} {y} 0")?;
        }
    }
    let size: usize = lines.iter().map(|l| l.vertices.len() + 1).sum();
    writeln!(w, "LINES {} {size}", lines.len())?;
    let mut next = 0;
    for l in lines {
        write!(w, "{}", l.vertices.len())?;
        for k in next..next + l.vertices.len() {
            write!(w, " {k}")?;
        }
        writeln!(w)?;
        next += l.vertices.len();
    }
    writeln!(w, "CELL_DATA {}", lines.len())?;
    writeln!(w, "SCALARS seed_index int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for k in 0..lines.len() {
        writeln!(w, "{k}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_snapshot() -> Snapshot {
        let g = GridSpec::new(5, 4, 5e-7, 4e-7);
        let mut snap = Snapshot::from_velocity_fn(g, |x, y| [x * 1e3 + y, -y * 7.0 + 1e-3 / 3.0]);
        snap.state.p = Field::from_fn(5, 4, |i, j| (i * j) as f64 / 7.0);
        snap.state.gamma = Field::from_fn(5, 4, |i, _| i as f64 / 4.0);
        snap.mask.set(2, 3, CellKind::Solid);
        snap.mask.set(0, 0, CellKind::Gas);
        snap.state.t = 1.0 / 3.0 * 1e-9;
        snap.state.step = 17;
        snap
    }

    #[test]
    fn zero_field_matches_golden_bytes() {
        let g = GridSpec::new(2, 2, 2.0, 2.0);
        let mut snap = Snapshot::from_velocity_fn(g, |_, _| [0.0, 0.0]);
        snap.state.gamma = Field::zeros(2, 2);
        let mut want = b"# vtk DataFile Version 3.0\nporefluid snapshot step=0 t=0 periodic=0\nBINARY\n\
DATASET STRUCTURED_POINTS\nDIMENSIONS 3 3 1\nORIGIN 0 0 0\nSPACING 1 1 1\nCELL_DATA 4\n"
            .to_vec();
        let zeros = |n: usize| vec![0u8; n];
        for name in ["p", "gamma"] {
            want.extend(format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n").bytes());
            want.extend(zeros(32));
            want.push(b'\n');
        }
        want.extend(b"SCALARS mask int 1\nLOOKUP_TABLE default\n");
        want.extend([0, 0, 0, 1].repeat(4));
        want.push(b'\n');
        want.extend(b"VECTORS velocity double\n");
        want.extend(zeros(96));
        want.push(b'\n');
        want.extend(b"POINT_DATA 9\n");
        for name in ["u_face", "v_face"] {
            want.extend(format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n").bytes());
            want.extend(zeros(72));
            want.push(b'\n');
        }
        assert_eq!(vtk_bytes(&snap).unwrap(), want);
    }

    #[test]
    fn round_trip_is_bitwise() {
        let snap = sample_snapshot();
        let back = parse_vtk(&vtk_bytes(&snap).unwrap()).unwrap();
        assert_eq!(back, snap);
        let mut periodic = snap.clone();
        periodic.state.grid.periodic_x = true;
        assert!(parse_vtk(&vtk_bytes(&periodic).unwrap()).unwrap().state.grid.periodic_x);
    }

    #[test]
    fn non_finite_is_refused_with_location() {
        let mut snap = sample_snapshot();
        snap.state.p.set(3, 1, f64::NAN);
        match vtk_bytes(&snap) {
            Err(Error::NonFinite { field: "p", i: 3, j: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ascii_cell_vectors_are_accepted() {
        let text = "# vtk DataFile Version 2.0\nexternal\nASCII\nDATASET STRUCTURED_POINTS\n\
                    DIMENSIONS 3 2 1\nORIGIN 0 0 0\nSPACING 0.5 1 1\nCELL_DATA 2\n\
                    VECTORS velocity float\n1 2 0\n3 4 0\n";
        let snap = parse_vtk(text.as_bytes()).unwrap();
        assert_eq!(snap.state.grid.nx, 2);
        assert_eq!(snap.state.u.data, vec![0.0, 2.0, 0.0]);
        assert_eq!(snap.state.v.data, vec![0.0; 4]);
        assert_eq!(snap.mask.count(CellKind::Liquid), 2);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse_vtk(b"").is_err());
        assert!(parse_vtk(b"# vtk DataFile Version 3.0\nx\nBINARY\nDATASET POLYDATA\n").is_err());
        let mut bytes = vtk_bytes(&sample_snapshot()).unwrap();
        bytes.truncate(bytes.len() - 100);
        assert!(parse_vtk(&bytes).is_err());
    }

    #[test]
    fn polydata_layout() {
        let lines = vec![
            Streamline {
                seed: [0.0, 0.0],
                vertices: vec![[0.0, 0.0], [1.0, 0.5]],
                terminal_reason: crate::trace::Termination::MaxLength,
            },
            Streamline {
                seed: [2.0, 0.0],
                vertices: vec![[2.0, 0.0], [2.0, 1.0], [2.0, 2.0]],
                terminal_reason: crate::trace::Termination::Stagnation,
            },
        ];
        let mut out = Vec::new();
        write_streamlines_vtk(&lines, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("POINTS 5 double\n"));
        assert!(text.contains("LINES 2 7\n2 0 1\n3 2 3 4\n"));
    }
}
