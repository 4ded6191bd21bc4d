//! Grid-aligned arrays and the solver state.
//!
//! Layout is the usual MAC arrangement: `u` lives on the `(nx+1) × ny`
//! vertical faces, `v` on the `nx × (ny+1)` horizontal faces, `p` and `gamma`
//! at the `nx × ny` cell centres. All arrays are row-major with `i` fastest.

use crate::geometry::{CellKind, CellMask, GridSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::filled(nx, ny, 0.0)
    }

    pub fn filled(nx: usize, ny: usize, value: f64) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                data.push(f(i, j));
            }
        }
        Self { nx, ny, data }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.nx + i] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// First non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|x| !x.is_finite())
            .map(|k| (k % self.nx, k / self.nx))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Velocity, pressure and liquid fraction on a MAC grid plus the clock.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub grid: GridSpec,
    pub u: Field,
    pub v: Field,
    pub p: Field,
    pub gamma: Field,
    pub t: f64,
    pub step: u64,
}

impl SolverState {
    pub fn at_rest(grid: GridSpec) -> Self {
        Self {
            grid,
            u: Field::zeros(grid.nx + 1, grid.ny),
            v: Field::zeros(grid.nx, grid.ny + 1),
            p: Field::zeros(grid.nx, grid.ny),
            gamma: Field::zeros(grid.nx, grid.ny),
            t: 0.0,
            step: 0,
        }
    }

    /// Largest speed over all faces (component-wise maximum).
    pub fn max_speed(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    /// Liquid volume per unit depth, `Σ gamma · dA`.
    pub fn liquid_volume(&self) -> f64 {
        self.gamma.sum() * self.grid.cell_area()
    }

    /// Velocity at the cell centre from the two adjacent faces of each component.
    pub fn cell_velocity(&self, i: usize, j: usize) -> [f64; 2] {
        [
            0.5 * (self.u.get(i, j) + self.u.get(i + 1, j)),
            0.5 * (self.v.get(i, j) + self.v.get(i, j + 1)),
        ]
    }

    pub fn check_finite(&self) -> crate::Result<()> {
        for (name, f) in [
            ("u", &self.u),
            ("v", &self.v),
            ("p", &self.p),
            ("gamma", &self.gamma),
        ] {
            if let Some((i, j)) = f.find_non_finite() {
                return Err(crate::Error::NonFinite {
                    field: name,
                    i,
                    j,
                    step: self.step,
                });
            }
        }
        Ok(())
    }
}

/// Immutable copy of the state together with the cell classification.
///
/// This is what analysis and output consume; it carries everything needed to
/// interpolate velocities and to tell fluid from wall.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: SolverState,
    pub mask: CellMask,
}

impl Snapshot {
    pub fn new(state: SolverState, mask: CellMask) -> Self {
        Self { state, mask }
    }

    /// All-fluid snapshot whose face velocities sample an analytic field.
    pub fn from_velocity_fn(grid: GridSpec, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut state = SolverState::at_rest(grid);
        state.u = Field::from_fn(grid.nx + 1, grid.ny, |i, j| {
            f(i as f64 * grid.dx, (j as f64 + 0.5) * grid.dy)[0]
        });
        state.v = Field::from_fn(grid.nx, grid.ny + 1, |i, j| {
            f((i as f64 + 0.5) * grid.dx, j as f64 * grid.dy)[1]
        });
        state.gamma = Field::filled(grid.nx, grid.ny, 1.0);
        Self {
            state,
            mask: CellMask::uniform(grid.nx, grid.ny, CellKind::Liquid),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.state.grid
    }

    /// Mirror image about `x = width/2`; `u` changes sign, scalars are reflected.
    pub fn mirrored_x(&self) -> Self {
        let s = &self.state;
        let (nx, ny) = (s.grid.nx, s.grid.ny);
        let mut out = self.clone();
        out.state.u = Field::from_fn(nx + 1, ny, |i, j| -s.u.get(nx - i, j));
        out.state.v = Field::from_fn(nx, ny + 1, |i, j| s.v.get(nx - 1 - i, j));
        out.state.p = Field::from_fn(nx, ny, |i, j| s.p.get(nx - 1 - i, j));
        out.state.gamma = Field::from_fn(nx, ny, |i, j| s.gamma.get(nx - 1 - i, j));
        out.mask = self.mask.mirrored_x();
        out
    }

    /// Largest relative deviation from mirror symmetry over `u`, `v`, `p`, `gamma`.
    ///
    /// Each field contributes `max |f − Mf| / max |f|`; all-zero fields contribute 0.
    pub fn mirror_asymmetry(&self) -> f64 {
        let m = self.mirrored_x();
        let rel = |a: &Field, b: &Field| {
            let scale = a.max_abs();
            if scale == 0.0 {
                return 0.0;
            }
            a.data
                .iter()
                .zip(&b.data)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
                / scale
        };
        rel(&self.state.u, &m.state.u)
            .max(rel(&self.state.v, &m.state.v))
            .max(rel(&self.state.p, &m.state.p))
            .max(rel(&self.state.gamma, &m.state.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_is_row_major() {
        let f = Field::from_fn(3, 2, |i, j| (10 * j + i) as f64);
        assert_eq!(f.data, vec![0.0, 1.0, 2.0, 10.0, 11.0, 12.0]);
        assert_eq!(f.get(2, 1), 12.0);
    }

    #[test]
    fn non_finite_is_located() {
        let mut f = Field::zeros(4, 4);
        f.set(3, 2, f64::NAN);
        assert_eq!(f.find_non_finite(), Some((3, 2)));
    }

    #[test]
    fn mirrored_velocity_field_is_symmetric() {
        let g = GridSpec::new(16, 16, 1.0, 1.0);
        // u odd and v even about x = 1/2
        let snap = Snapshot::from_velocity_fn(g, |x, y| [(x - 0.5) * y, (x - 0.5).powi(2)]);
        assert!(snap.mirror_asymmetry() < 1e-14);
        let skew = Snapshot::from_velocity_fn(g, |x, _| [1.0, x]);
        assert!(skew.mirror_asymmetry() > 0.5);
    }
}
