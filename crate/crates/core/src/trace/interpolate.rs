//! Point queries on staggered velocity fields.

use crate::error::{Error, Result};
use crate::field::{Field, Snapshot};
use crate::geometry::Region;

/// Anything that can be asked for a velocity at a point.
pub trait VelocityField {
    fn bounds(&self) -> Region;
    fn velocity(&self, x: f64, y: f64) -> Result<[f64; 2]>;
    fn is_solid(&self, _x: f64, _y: f64) -> bool {
        false
    }
}

/// An analytic field over a rectangle, mainly for tests and synthetic input.
#[derive(Debug, Clone)]
pub struct AnalyticField<F> {
    pub bounds: Region,
    pub f: F,
}

impl<F: Fn(f64, f64) -> [f64; 2]> VelocityField for AnalyticField<F> {
    fn bounds(&self) -> Region {
        self.bounds
    }

    fn velocity(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        check_inside(&self.bounds, x, y)?;
        Ok((self.f)(x, y))
    }
}

/// Relative slack on the domain edges, so probes placed on a boundary by
/// floating-point arithmetic still count as inside.
const EDGE_SLACK: f64 = 1e-12;

fn check_inside(b: &Region, x: f64, y: f64) -> Result<()> {
    let sx = EDGE_SLACK * b.width();
    let sy = EDGE_SLACK * b.height();
    let inside = x >= b.x0 - sx && x <= b.x1 + sx && y >= b.y0 - sy && y <= b.y1 + sy;
    if inside && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain { x, y })
    }
}

/// Bilinear interpolation on a lattice with nodes at `(x0 + i dx, y0 + j dy)`;
/// the outermost cells are extended linearly past the last node.
fn bilinear(f: &Field, x0: f64, y0: f64, dx: f64, dy: f64, x: f64, y: f64) -> f64 {
    let locate = |s: f64, n: usize| -> (usize, f64) {
        if n < 2 {
            return (0, 0.0);
        }
        let k = (s.floor().max(0.0) as usize).min(n - 2);
        (k, s - k as f64)
    };
    let (i, tx) = locate((x - x0) / dx, f.nx);
    let (j, ty) = locate((y - y0) / dy, f.ny);
    let at = |i: usize, j: usize| f.get(i.min(f.nx - 1), j.min(f.ny - 1));
    let (i1, j1) = ((i + 1).min(f.nx - 1), (j + 1).min(f.ny - 1));
    let lo = at(i, j) * (1.0 - tx) + at(i1, j) * tx;
    let hi = at(i, j1) * (1.0 - tx) + at(i1, j1) * tx;
    lo * (1.0 - ty) + hi * ty
}

/// Velocity at `(x, y)` interpolated from the face values.
///
/// Each component is interpolated bilinearly on its own staggered lattice,
/// which reproduces fields linear in `x` and `y` exactly. Points inside solid
/// cells return zero.
pub fn interpolate_velocity(snap: &Snapshot, x: f64, y: f64) -> Result<[f64; 2]> {
    snap.velocity(x, y)
}

impl VelocityField for Snapshot {
    fn bounds(&self) -> Region {
        let g = self.grid();
        Region {
            x0: 0.0,
            y0: 0.0,
            x1: g.nx as f64 * g.dx,
            y1: g.ny as f64 * g.dy,
        }
    }

    fn velocity(&self, x: f64, y: f64) -> Result<[f64; 2]> {
        check_inside(&self.bounds(), x, y)?;
        if self.is_solid(x, y) {
            return Ok([0.0, 0.0]);
        }
        let g = self.grid();
        let s = &self.state;
        Ok([
            bilinear(&s.u, 0.0, 0.5 * g.dy, g.dx, g.dy, x, y),
            bilinear(&s.v, 0.5 * g.dx, 0.0, g.dx, g.dy, x, y),
        ])
    }

    /// True inside a solid cell, including its faces.
    fn is_solid(&self, x: f64, y: f64) -> bool {
        let g = self.grid();
        let fi = x / g.dx;
        let fj = y / g.dy;
        let clamp = |v: f64, n: usize| (v.floor().max(0.0) as usize).min(n - 1);
        let (i, j) = (clamp(fi, g.nx), clamp(fj, g.ny));
        if self.mask.is_solid(i, j) {
            return true;
        }
        // a point exactly on a cell edge also touches the neighbour
        let on_x = fi == fi.floor() && fi > 0.0 && (fi as usize) < g.nx;
        let on_y = fj == fj.floor() && fj > 0.0 && (fj as usize) < g.ny;
        (on_x && self.mask.is_solid(fi as usize - 1, j)) || (on_y && self.mask.is_solid(i, fj as usize - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellKind, GridSpec};

    fn grid() -> GridSpec {
        GridSpec::new(20, 10, 2.0, 1.0)
    }

    #[test]
    fn uniform_field_is_reproduced() {
        let snap = Snapshot::from_velocity_fn(grid(), |_, _| [0.3, -1.7]);
        for (x, y) in [(0.0, 0.0), (1.234, 0.77), (2.0, 1.0), (0.01, 0.99)] {
            let v = interpolate_velocity(&snap, x, y).unwrap();
            assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 1.7).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_fields_are_exact_everywhere() {
        let f = |x: f64, y: f64| [2.0 * x - 3.0 * y + 0.5, -x + 4.0 * y];
        let snap = Snapshot::from_velocity_fn(grid(), f);
        for k in 0..50 {
            let (x, y) = (2.0 * k as f64 / 49.0, ((k * 7) % 50) as f64 / 49.0);
            let v = interpolate_velocity(&snap, x, y).unwrap();
            let e = f(x, y);
            assert!((v[0] - e[0]).abs() <= 1e-12 * e[0].abs().max(1.0));
            assert!((v[1] - e[1]).abs() <= 1e-12 * e[1].abs().max(1.0));
        }
    }

    #[test]
    fn u_equal_to_x_at_a_cell_centre() {
        let snap = Snapshot::from_velocity_fn(grid(), |x, _| [x, 0.0]);
        let v = interpolate_velocity(&snap, 0.55, 0.35).unwrap();
        assert!((v[0] - 0.55).abs() < 1e-15);
    }

    #[test]
    fn solid_faces_and_outside_points() {
        let mut snap = Snapshot::from_velocity_fn(grid(), |_, _| [1.0, 1.0]);
        snap.mask.set(5, 5, CellKind::Solid);
        // the west face of the solid cell
        assert_eq!(interpolate_velocity(&snap, 0.5, 0.55).unwrap(), [0.0, 0.0]);
        assert_eq!(interpolate_velocity(&snap, 0.55, 0.55).unwrap(), [0.0, 0.0]);
        assert!(matches!(interpolate_velocity(&snap, 2.5, 0.5), Err(Error::OutOfDomain { .. })));
        assert!(interpolate_velocity(&snap, -0.1, 0.5).is_err());
    }
}
