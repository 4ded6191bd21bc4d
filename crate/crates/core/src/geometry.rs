//! Physical domain, pore layout, grid, and the cell classification mask.
//!
//! Coordinates: `x` runs along the internal wall (the wall spans the full
//! width), `y` runs from the bottom of the liquid reservoir upward. The wall
//! slab occupies `[wall_y, wall_y + wall_thickness]`; pores are gaps in that
//! slab centred at `sigma` measured from the left edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of a cell used to break ties when a cell centre sits exactly on a
/// pore or wall edge. Keeps mask generation stable under mirroring.
const EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub width: f64,
    pub height: f64,
    pub wall_y: f64,
    pub wall_thickness: f64,
}

impl DomainSpec {
    pub fn liquid_height(&self) -> f64 {
        self.wall_y
    }

    pub fn wall_top(&self) -> f64 {
        self.wall_y + self.wall_thickness
    }

    pub fn gas_height(&self) -> f64 {
        self.height - self.wall_top()
    }

    /// Axis-aligned box of the liquid reservoir below the wall.
    pub fn liquid_region(&self) -> Region {
        Region {
            x0: 0.0,
            y0: 0.0,
            x1: self.width,
            y1: self.wall_y,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Region {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoreSpec {
    /// Centre position along the wall, measured from the left edge [m].
    pub sigma: f64,
    pub diameter: f64,
}

impl PoreSpec {
    pub fn new(sigma: f64, diameter: f64) -> Self {
        Self { sigma, diameter }
    }

    /// Throat cross-section in 2D: diameter times wall thickness [m²].
    pub fn area(&self, wall_thickness: f64) -> f64 {
        self.diameter * wall_thickness
    }

    pub fn left(&self) -> f64 {
        self.sigma - 0.5 * self.diameter
    }

    pub fn right(&self) -> f64 {
        self.sigma + 0.5 * self.diameter
    }

    fn contains_x(&self, x: f64, dx: f64) -> bool {
        0.5 * self.diameter - (x - self.sigma).abs() > EDGE_TOL * dx
    }

    pub fn overlaps(&self, other: &PoreSpec) -> bool {
        (self.sigma - other.sigma).abs() < 0.5 * (self.diameter + other.diameter)
    }
}

/// `n` pores of equal diameter spread evenly along a wall of width `width`.
pub fn equidistant_pores(width: f64, n: usize, diameter: f64) -> Vec<PoreSpec> {
    (1..=n)
        .map(|k| PoreSpec::new(width * k as f64 / (n + 1) as f64, diameter))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    /// Periodic in x instead of no-slip side walls. Used for channel and
    /// advection validation cases.
    pub periodic_x: bool,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, width: f64, height: f64) -> Self {
        Self {
            nx,
            ny,
            dx: width / nx as f64,
            dy: height / ny as f64,
            periodic_x: false,
        }
    }

    pub fn periodic(mut self) -> Self {
        self.periodic_x = true;
        self
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dy)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn h_min(&self) -> f64 {
        self.dx.min(self.dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Solid,
    Liquid,
    Gas,
}

impl CellKind {
    pub fn code(self) -> i32 {
        match self {
            CellKind::Solid => 0,
            CellKind::Liquid => 1,
            CellKind::Gas => 2,
        }
    }

    pub fn from_code(code: i32) -> Option<Self> {
        match code {
            0 => Some(CellKind::Solid),
            1 => Some(CellKind::Liquid),
            2 => Some(CellKind::Gas),
            _ => None,
        }
    }
}

/// Per-cell classification, row-major with `i` fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    pub nx: usize,
    pub ny: usize,
    cells: Vec<CellKind>,
}

impl CellMask {
    pub fn uniform(nx: usize, ny: usize, kind: CellKind) -> Self {
        Self {
            nx,
            ny,
            cells: vec![kind; nx * ny],
        }
    }

    pub fn from_cells(nx: usize, ny: usize, cells: Vec<CellKind>) -> Result<Self> {
        if cells.len() != nx * ny {
            return Err(Error::format(
                "mask",
                format!("expected {} cells, got {}", nx * ny, cells.len()),
            ));
        }
        Ok(Self { nx, ny, cells })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> CellKind {
        self.cells[j * self.nx + i]
    }

    pub fn set(&mut self, i: usize, j: usize, kind: CellKind) {
        self.cells[j * self.nx + i] = kind;
    }

    #[inline]
    pub fn is_solid(&self, i: usize, j: usize) -> bool {
        self.get(i, j) == CellKind::Solid
    }

    pub fn cells(&self) -> &[CellKind] {
        &self.cells
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    /// Mirror image about the vertical centre line.
    pub fn mirrored_x(&self) -> Self {
        let mut out = self.clone();
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.set(self.nx - 1 - i, j, self.get(i, j));
            }
        }
        out
    }
}

/// Classifies every cell as solid wall, liquid, or gas.
///
/// A cell is solid when its centre lies inside the wall slab and outside every
/// pore interval. Non-solid cells below `wall_y` start as liquid, the rest as
/// gas.
pub fn build_mask(domain: &DomainSpec, pores: &[PoreSpec], grid: &GridSpec) -> Result<CellMask> {
    for (index, pore) in pores.iter().enumerate() {
        let cells = (0..grid.nx)
            .filter(|&i| pore.contains_x(grid.cell_center(i, 0).0, grid.dx))
            .count();
        if cells < 3 {
            return Err(Error::Resolution { index, cells });
        }
    }

    let mut cells = Vec::with_capacity(grid.cell_count());
    for j in 0..grid.ny {
        let yc = (j as f64 + 0.5) * grid.dy;
        let tol = EDGE_TOL * grid.dy;
        let in_wall = yc - domain.wall_y >= -tol && domain.wall_top() - yc >= -tol;
        for i in 0..grid.nx {
            let xc = (i as f64 + 0.5) * grid.dx;
            let kind = if in_wall && !pores.iter().any(|p| p.contains_x(xc, grid.dx)) {
                CellKind::Solid
            } else if yc < domain.wall_y {
                CellKind::Liquid
            } else {
                CellKind::Gas
            };
            cells.push(kind);
        }
    }
    Ok(CellMask {
        nx: grid.nx,
        ny: grid.ny,
        cells,
    })
}

/// Rows of the grid whose cell centres fall inside the wall slab.
pub fn wall_rows(domain: &DomainSpec, grid: &GridSpec) -> Vec<usize> {
    let tol = EDGE_TOL * grid.dy;
    (0..grid.ny)
        .filter(|&j| {
            let yc = (j as f64 + 0.5) * grid.dy;
            yc - domain.wall_y >= -tol && domain.wall_top() - yc >= -tol
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain() -> DomainSpec {
        DomainSpec {
            width: 6e-6,
            height: 6.02e-6,
            wall_y: 3e-6,
            wall_thickness: 2e-8,
        }
    }

    fn grid() -> GridSpec {
        GridSpec::new(600, 602, 6e-6, 6.02e-6)
    }

    fn solid_in_row(mask: &CellMask, j: usize) -> usize {
        (0..mask.nx).filter(|&i| mask.is_solid(i, j)).count()
    }

    #[test]
    fn closed_wall_is_fully_solid() {
        let g = grid();
        let mask = build_mask(&domain(), &[], &g).unwrap();
        let rows = wall_rows(&domain(), &g);
        assert_eq!(rows, vec![300, 301]);
        for &j in &rows {
            assert_eq!(solid_in_row(&mask, j), g.nx);
        }
        assert_eq!(mask.count(CellKind::Solid), 2 * g.nx);
        assert_eq!(mask.get(0, 299), CellKind::Liquid);
        assert_eq!(mask.get(0, 302), CellKind::Gas);
    }

    #[test]
    fn pore_gap_matches_enumeration() {
        let g = grid();
        let pore = PoreSpec::new(2e-6, 100e-9);
        let mask = build_mask(&domain(), &[pore], &g).unwrap();
        // enumerate centres in the open interval directly
        let expected: Vec<usize> = (0..g.nx)
            .filter(|&i| {
                let xc = (i as f64 + 0.5) * 1e-8;
                xc > 1.95e-6 && xc < 2.05e-6
            })
            .collect();
        assert_eq!(expected.len(), 10);
        let open: Vec<usize> = (0..g.nx).filter(|&i| !mask.is_solid(i, 300)).collect();
        assert_eq!(open, expected);
        assert!(open.windows(2).all(|w| w[1] == w[0] + 1));
        assert_eq!(mask.get(open[0], 300), CellKind::Gas);
    }

    #[test]
    fn under_resolved_pore_is_rejected() {
        let g = GridSpec::new(300, 301, 6e-6, 6.02e-6);
        let err = build_mask(&domain(), &[PoreSpec::new(2e-6, 30e-9)], &g).unwrap_err();
        assert!(matches!(err, Error::Resolution { index: 0, cells: 2 }));
    }

    #[test]
    fn solid_count_is_wall_minus_gaps() {
        let g = grid();
        let pores = equidistant_pores(6e-6, 3, 70e-9);
        let mask = build_mask(&domain(), &pores, &g).unwrap();
        let rows = wall_rows(&domain(), &g);
        let gap: usize = pores
            .iter()
            .map(|p| {
                (0..g.nx)
                    .filter(|&i| {
                        let xc = (i as f64 + 0.5) * g.dx;
                        // centres on an edge count as wall
                        (xc - p.sigma).abs() < 0.5 * p.diameter - 1e-6 * g.dx
                    })
                    .count()
            })
            .sum();
        assert_eq!(mask.count(CellKind::Solid), rows.len() * (g.nx - gap));
    }

    #[test]
    fn mirrored_pores_give_mirrored_mask() {
        let g = GridSpec::new(640, 322, 6e-6, 6.0375e-6);
        let d = DomainSpec {
            width: 6e-6,
            height: 6.0375e-6,
            wall_y: 3e-6,
            wall_thickness: 3.75e-8,
        };
        let pores = [PoreSpec::new(1.3e-6, 30e-9), PoreSpec::new(3.7e-6, 70e-9)];
        let mirror: Vec<PoreSpec> = pores
            .iter()
            .map(|p| PoreSpec::new(6e-6 - p.sigma, p.diameter))
            .collect();
        let a = build_mask(&d, &pores, &g).unwrap();
        let b = build_mask(&d, &mirror, &g).unwrap();
        assert_eq!(a.mirrored_x(), b);
    }

    #[test]
    fn equidistant_two_pores_match_reference_layout() {
        let p = equidistant_pores(6e-6, 2, 30e-9);
        assert!((p[0].sigma - 2e-6).abs() < 1e-18);
        assert!((p[1].sigma - 4e-6).abs() < 1e-18);
    }
}
