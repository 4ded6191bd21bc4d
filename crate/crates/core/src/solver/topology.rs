//! Which faces carry flow, and how wall neighbours are treated.

use crate::geometry::{CellMask, GridSpec};

/// How a face looks from a tangential neighbour's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Both adjacent cells are fluid; the stored value is used.
    Open,
    /// Exactly one adjacent cell is fluid: the face lies on a wall and its
    /// velocity is zero.
    Wall,
    /// Inside a solid or outside the domain: a no-slip ghost `−u` is used.
    Buried,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub grid: GridSpec,
    pub mask: CellMask,
    fluid: Vec<bool>,
    u_kind: Vec<FaceKind>,
    v_kind: Vec<FaceKind>,
}

impl Topology {
    pub fn new(grid: GridSpec, mask: CellMask) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let fluid: Vec<bool> = (0..nx * ny)
            .map(|k| !mask.is_solid(k % nx, k / nx))
            .collect();
        let mut topo = Self {
            grid,
            mask,
            fluid,
            u_kind: Vec::with_capacity((nx + 1) * ny),
            v_kind: Vec::with_capacity(nx * (ny + 1)),
        };
        for j in 0..ny {
            for i in 0..=nx {
                let a = topo.fluid_at(i as isize - 1, j as isize);
                let b = topo.fluid_at(i as isize, j as isize);
                topo.u_kind.push(classify(a, b));
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let a = topo.fluid_at(i as isize, j as isize - 1);
                let b = topo.fluid_at(i as isize, j as isize);
                topo.v_kind.push(classify(a, b));
            }
        }
        topo
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.grid.ny
    }

    /// Wraps a cell column index for periodic grids; `None` outside the domain.
    #[inline]
    pub fn wrap_i(&self, i: isize) -> Option<usize> {
        let nx = self.grid.nx as isize;
        if (0..nx).contains(&i) {
            Some(i as usize)
        } else if self.grid.periodic_x {
            Some(i.rem_euclid(nx) as usize)
        } else {
            None
        }
    }

    /// Fluid flag of a cell; cells outside the domain count as solid.
    #[inline]
    pub fn fluid_at(&self, i: isize, j: isize) -> bool {
        if j < 0 || j >= self.grid.ny as isize {
            return false;
        }
        match self.wrap_i(i) {
            Some(i) => self.fluid[j as usize * self.grid.nx + i],
            None => false,
        }
    }

    #[inline]
    pub fn is_fluid(&self, i: usize, j: usize) -> bool {
        self.fluid[j * self.grid.nx + i]
    }

    #[inline]
    pub fn u_open(&self, i: usize, j: usize) -> bool {
        self.u_kind[j * (self.grid.nx + 1) + i] == FaceKind::Open
    }

    #[inline]
    pub fn v_open(&self, i: usize, j: usize) -> bool {
        self.v_kind[j * self.grid.nx + i] == FaceKind::Open
    }

    /// Kind of u-face `(i, j)`, with out-of-range rows reported as buried.
    #[inline]
    pub fn u_kind(&self, i: isize, j: isize) -> FaceKind {
        let nx = self.grid.nx as isize;
        if j < 0 || j >= self.grid.ny as isize {
            return FaceKind::Buried;
        }
        let i = if self.grid.periodic_x { i.rem_euclid(nx) } else { i };
        if !(0..=nx).contains(&i) {
            return FaceKind::Buried;
        }
        self.u_kind[j as usize * (self.grid.nx + 1) + i as usize]
    }

    /// Kind of v-face `(i, j)`, with out-of-range columns reported as buried.
    #[inline]
    pub fn v_kind(&self, i: isize, j: isize) -> FaceKind {
        if j < 0 || j > self.grid.ny as isize {
            return FaceKind::Buried;
        }
        match self.wrap_i(i) {
            Some(i) => self.v_kind[j as usize * self.grid.nx + i],
            None => FaceKind::Buried,
        }
    }

    pub fn fluid_cells(&self) -> usize {
        self.fluid.iter().filter(|&&f| f).count()
    }
}

fn classify(a: bool, b: bool) -> FaceKind {
    match (a, b) {
        (true, true) => FaceKind::Open,
        (false, false) => FaceKind::Buried,
        _ => FaceKind::Wall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CellKind;

    #[test]
    fn boundary_faces_are_walls() {
        let g = GridSpec::new(4, 4, 1.0, 1.0);
        let t = Topology::new(g, CellMask::uniform(4, 4, CellKind::Liquid));
        assert_eq!(t.u_kind(0, 0), FaceKind::Wall);
        assert_eq!(t.u_kind(4, 3), FaceKind::Wall);
        assert_eq!(t.u_kind(2, 4), FaceKind::Buried);
        assert!(t.u_open(2, 1));
        assert!(!t.v_open(1, 0));
    }

    #[test]
    fn periodic_seam_is_open() {
        let g = GridSpec::new(4, 4, 1.0, 1.0).periodic();
        let t = Topology::new(g, CellMask::uniform(4, 4, CellKind::Liquid));
        assert!(t.u_open(0, 2));
        assert!(t.u_open(4, 2));
        assert_eq!(t.v_kind(-1, 2), FaceKind::Open);
    }
}
