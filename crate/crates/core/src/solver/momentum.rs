//! Momentum terms on the MAC grid: upwind advection, variable-viscosity
//! diffusion, surface tension and body forces.
//!
//! No-slip is imposed through the tangential stencil: a neighbouring face
//! that lies inside a wall or outside the domain is replaced by the ghost
//! value `−u`, which puts a zero velocity on the wall half a cell away; a
//! neighbouring face that sits on a wall-normal surface contributes its zero
//! value directly.

use super::linalg::{self, CgStatus, SpdOperator};
use super::topology::{FaceKind, Topology};
use crate::config::{FluidProps, ViscousScheme};
use crate::error::{Error, Result};
use crate::field::{Field, SolverState};

/// Face-centred velocity components.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub u: Field,
    pub v: Field,
}

impl Velocity {
    pub fn of(state: &SolverState) -> Self {
        Self {
            u: state.u.clone(),
            v: state.v.clone(),
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }
}

/// Cell and face material properties derived from `gamma`.
#[derive(Debug, Clone)]
pub struct Materials {
    pub rho_cell: Vec<f64>,
    pub eta_cell: Vec<f64>,
    /// Harmonic mean of the fluid cells around each grid node, `(nx+1) × (ny+1)`.
    pub eta_node: Vec<f64>,
    /// Face densities; 1 on closed faces so that divisions stay finite.
    pub rho_u: Vec<f64>,
    pub rho_v: Vec<f64>,
}

impl Materials {
    pub fn new(gamma: &Field, props: &FluidProps, topo: &Topology) -> Self {
        let (nx, ny) = (topo.nx(), topo.ny());
        let mut rho_cell = vec![0.0; nx * ny];
        let mut eta_cell = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                if topo.is_fluid(i, j) {
                    let g = gamma.get(i, j);
                    rho_cell[j * nx + i] = props.density(g);
                    eta_cell[j * nx + i] = props.viscosity(g);
                }
            }
        }
        let mut eta_node = vec![0.0; (nx + 1) * (ny + 1)];
        for cj in 0..=ny {
            for ci in 0..=nx {
                let mut inv = 0.0;
                let mut n = 0;
                for (di, dj) in [(-1, -1), (0, -1), (-1, 0), (0, 0)] {
                    let (i, j) = (ci as isize + di, cj as isize + dj);
                    if topo.fluid_at(i, j) {
                        let i = topo.wrap_i(i).unwrap();
                        inv += 1.0 / eta_cell[j as usize * nx + i];
                        n += 1;
                    }
                }
                if n > 0 {
                    eta_node[cj * (nx + 1) + ci] = n as f64 / inv;
                }
            }
        }
        let mut rho_u = vec![1.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                if topo.u_open(i, j) {
                    let l = topo.wrap_i(i as isize - 1).unwrap();
                    let r = topo.wrap_i(i as isize).unwrap();
                    rho_u[j * (nx + 1) + i] = 0.5 * (rho_cell[j * nx + l] + rho_cell[j * nx + r]);
                }
            }
        }
        let mut rho_v = vec![1.0; nx * (ny + 1)];
        for j in 1..ny {
            for i in 0..nx {
                if topo.v_open(i, j) {
                    rho_v[j * nx + i] =
                        0.5 * (rho_cell[(j - 1) * nx + i] + rho_cell[j * nx + i]);
                }
            }
        }
        Self {
            rho_cell,
            eta_cell,
            eta_node,
            rho_u,
            rho_v,
        }
    }
}

/// External forcing applied to the provisional velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    /// Force density [N/m³].
    pub body: [f64; 2],
    /// Acceleration [m/s²].
    pub gravity: [f64; 2],
    /// Extra force density on individual v-faces [N/m³], `nx × (ny+1)`.
    pub pump_v: Vec<f64>,
}

impl Forcing {
    pub fn none(topo: &Topology) -> Self {
        Self {
            body: [0.0; 2],
            gravity: [0.0; 2],
            pump_v: vec![0.0; topo.nx() * (topo.ny() + 1)],
        }
    }
}

/// Viscous stencil of one face: `visc = Σ c_k u_k − diag · u_c`.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    diag: f64,
    nb: [(usize, f64); 4],
    len: usize,
}

impl Stencil {
    fn new() -> Self {
        Self {
            diag: 0.0,
            nb: [(0, 0.0); 4],
            len: 0,
        }
    }

    #[inline]
    fn add(&mut self, kind: FaceKind, index: usize, c: f64) {
        match kind {
            FaceKind::Open => {
                self.nb[self.len] = (index, c);
                self.len += 1;
                self.diag += c;
            }
            FaceKind::Wall => self.diag += c,
            FaceKind::Buried => self.diag += 2.0 * c,
        }
    }

    #[inline]
    fn apply(&self, x: &[f64], center: f64) -> f64 {
        let mut s = 0.0;
        for &(k, c) in &self.nb[..self.len] {
            s += c * x[k];
        }
        s - self.diag * center
    }
}

/// Index helpers that fold the periodic seam onto face 0.
struct Faces<'a> {
    topo: &'a Topology,
    nx: usize,
}

impl<'a> Faces<'a> {
    fn new(topo: &'a Topology) -> Self {
        Self { topo, nx: topo.nx() }
    }

    /// Column of a u-face, folding the seam for periodic grids.
    #[inline]
    fn ui(&self, i: isize) -> usize {
        if self.topo.grid.periodic_x {
            i.rem_euclid(self.nx as isize) as usize
        } else {
            i as usize
        }
    }

    #[inline]
    fn u_index(&self, i: isize, j: usize) -> usize {
        j * (self.nx + 1) + self.ui(i)
    }

    #[inline]
    fn v_index(&self, i: isize, j: usize) -> usize {
        j * self.nx + self.topo.wrap_i(i).unwrap_or(0)
    }

    /// Normal-direction neighbour: open faces are used, anything else is a wall.
    #[inline]
    fn normal_kind(open: bool) -> FaceKind {
        if open {
            FaceKind::Open
        } else {
            FaceKind::Wall
        }
    }

    fn u_stencil(&self, m: &Materials, i: usize, j: usize) -> Stencil {
        let topo = self.topo;
        let g = &topo.grid;
        let (nx, ny) = (self.nx, topo.ny());
        let (kx, ky) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
        let ii = i as isize;
        let mut s = Stencil::new();
        let left = topo.wrap_i(ii - 1).unwrap();
        let right = topo.wrap_i(ii).unwrap();
        // normal direction: cell-centred viscosity
        let east = self.ui(ii + 1);
        let west = self.ui(ii - 1);
        s.add(
            Self::normal_kind(topo.u_open(east, j) && east != self.ui(ii)),
            j * (nx + 1) + east,
            m.eta_cell[j * nx + right] * kx,
        );
        s.add(
            Self::normal_kind(topo.u_open(west, j) && west != self.ui(ii)),
            j * (nx + 1) + west,
            m.eta_cell[j * nx + left] * kx,
        );
        // tangential direction: node viscosity
        let ci = self.ui(ii);
        let top = topo.u_kind(ii, j as isize + 1);
        let bottom = topo.u_kind(ii, j as isize - 1);
        s.add(
            top,
            if j + 1 < ny { self.u_index(ii, j + 1) } else { 0 },
            m.eta_node[(j + 1) * (nx + 1) + ci] * ky,
        );
        s.add(
            bottom,
            if j > 0 { self.u_index(ii, j - 1) } else { 0 },
            m.eta_node[j * (nx + 1) + ci] * ky,
        );
        s
    }

    fn v_stencil(&self, m: &Materials, i: usize, j: usize) -> Stencil {
        let topo = self.topo;
        let g = &topo.grid;
        let (nx, ny) = (self.nx, topo.ny());
        let (kx, ky) = (1.0 / (g.dx * g.dx), 1.0 / (g.dy * g.dy));
        let ii = i as isize;
        let mut s = Stencil::new();
        s.add(
            Self::normal_kind(j < ny && topo.v_open(i, j + 1)),
            (j + 1) * nx + i,
            m.eta_cell[j * nx + i] * ky,
        );
        s.add(
            Self::normal_kind(j > 0 && topo.v_open(i, j - 1)),
            (j - 1) * nx + i,
            m.eta_cell[(j - 1) * nx + i] * ky,
        );
        let east = topo.v_kind(ii + 1, j as isize);
        let west = topo.v_kind(ii - 1, j as isize);
        let node_e = self.ui(ii + 1);
        let node_w = self.ui(ii);
        s.add(east, self.v_index(ii + 1, j), m.eta_node[j * (nx + 1) + node_e] * kx);
        s.add(west, self.v_index(ii - 1, j), m.eta_node[j * (nx + 1) + node_w] * kx);
        s
    }

    /// Tangential neighbour value for advection, using the same wall rules.
    #[inline]
    fn tangential(kind: FaceKind, value: impl FnOnce() -> f64, center: f64) -> f64 {
        match kind {
            FaceKind::Open => value(),
            FaceKind::Wall => 0.0,
            FaceKind::Buried => -center,
        }
    }
}

/// First-order upwind advection of both components in advective form.
pub fn advect_momentum(vel: &Velocity, dt: f64, topo: &Topology) -> Velocity {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let f = Faces::new(topo);
    let (u, v) = (&vel.u, &vel.v);
    let mut out = vel.clone();

    for j in 0..ny {
        for i in 0..=nx {
            if !topo.u_open(i, j) || (g.periodic_x && i == nx) {
                continue;
            }
            let ii = i as isize;
            let uc = u.get(i, j);
            let dudx = if uc > 0.0 {
                (uc - u.data[f.u_index(ii - 1, j)]) / g.dx
            } else {
                (u.data[f.u_index(ii + 1, j)] - uc) / g.dx
            };
            let l = topo.wrap_i(ii - 1).unwrap();
            let vbar = 0.25 * ((v.get(l, j) + v.get(i % nx, j)) + (v.get(l, j + 1) + v.get(i % nx, j + 1)));
            let dudy = if vbar > 0.0 {
                let ub = Faces::tangential(topo.u_kind(ii, j as isize - 1), || u.data[f.u_index(ii, j - 1)], uc);
                (uc - ub) / g.dy
            } else {
                let ut = Faces::tangential(topo.u_kind(ii, j as isize + 1), || u.data[f.u_index(ii, j + 1)], uc);
                (ut - uc) / g.dy
            };
            out.u.set(i, j, uc - dt * (uc * dudx + vbar * dudy));
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !topo.v_open(i, j) {
                continue;
            }
            let ii = i as isize;
            let vc = v.get(i, j);
            let dvdy = if vc > 0.0 {
                (vc - v.get(i, j - 1)) / g.dy
            } else {
                (v.get(i, j + 1) - vc) / g.dy
            };
            let e = f.ui(ii + 1);
            let ubar = 0.25 * ((u.get(i, j - 1) + u.get(e, j - 1)) + (u.get(i, j) + u.get(e, j)));
            let dvdx = if ubar > 0.0 {
                let vw = Faces::tangential(topo.v_kind(ii - 1, j as isize), || v.data[f.v_index(ii - 1, j)], vc);
                (vc - vw) / g.dx
            } else {
                let ve = Faces::tangential(topo.v_kind(ii + 1, j as isize), || v.data[f.v_index(ii + 1, j)], vc);
                (ve - vc) / g.dx
            };
            out.v.set(i, j, vc - dt * (ubar * dvdx + vc * dvdy));
        }
    }
    sync_seam(&mut out.u, topo);
    out
}

/// Viscous term `∇·(η∇u)` for each component, zero on closed faces.
pub fn viscous_term(vel: &Velocity, m: &Materials, topo: &Topology) -> Velocity {
    let (nx, ny) = (topo.nx(), topo.ny());
    let f = Faces::new(topo);
    let mut out = Velocity {
        u: Field::zeros(nx + 1, ny),
        v: Field::zeros(nx, ny + 1),
    };
    for j in 0..ny {
        for i in 0..=nx {
            if topo.u_open(i, j) && !(topo.grid.periodic_x && i == nx) {
                let s = f.u_stencil(m, i, j);
                out.u.set(i, j, s.apply(&vel.u.data, vel.u.get(i, j)));
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if topo.v_open(i, j) {
                let s = f.v_stencil(m, i, j);
                out.v.set(i, j, s.apply(&vel.v.data, vel.v.get(i, j)));
            }
        }
    }
    sync_seam(&mut out.u, topo);
    out
}

/// Mean curvature `−∇·n` at cell centres from the twice-smoothed fraction.
pub fn curvature(gamma: &Field, topo: &Topology) -> Field {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let smooth = smooth121(&smooth121(gamma, topo), topo);

    let cell = |i: isize, j: isize| -> Option<f64> {
        if topo.fluid_at(i, j) {
            Some(smooth.get(topo.wrap_i(i).unwrap(), j as usize))
        } else {
            None
        }
    };
    let delta = 1e-6 / g.h_min();
    let mut nxn = vec![0.0; (nx + 1) * (ny + 1)];
    let mut nyn = vec![0.0; (nx + 1) * (ny + 1)];
    for cj in 0..=ny {
        for ci in 0..=nx {
            let (i, j) = (ci as isize, cj as isize);
            let corner = neutral_corner([cell(i - 1, j - 1), cell(i, j - 1), cell(i - 1, j), cell(i, j)]);
            let Some([a, b, c, d]) = corner else { continue };
            let gx = ((b + d) - (a + c)) / (2.0 * g.dx);
            let gy = ((c + d) - (a + b)) / (2.0 * g.dy);
            let norm = (gx * gx + gy * gy).sqrt() + delta;
            nxn[cj * (nx + 1) + ci] = gx / norm;
            nyn[cj * (nx + 1) + ci] = gy / norm;
        }
    }
    Field::from_fn(nx, ny, |i, j| {
        if !topo.is_fluid(i, j) {
            return 0.0;
        }
        let k = |ci: usize, cj: usize| cj * (nx + 1) + ci;
        let dnx = ((nxn[k(i + 1, j)] + nxn[k(i + 1, j + 1)]) - (nxn[k(i, j)] + nxn[k(i, j + 1)])) / (2.0 * g.dx);
        let dny = ((nyn[k(i, j + 1)] + nyn[k(i + 1, j + 1)]) - (nyn[k(i, j)] + nyn[k(i + 1, j)])) / (2.0 * g.dy);
        -(dnx + dny)
    })
}

/// Fills missing (wall) cells of a node's 2×2 neighbourhood so that the
/// gradient has no wall-normal component (neutral wetting).
///
/// Order of the four values: lower-left, lower-right, upper-left, upper-right.
fn neutral_corner(c: [Option<f64>; 4]) -> Option<[f64; 4]> {
    let [a, b, cc, d] = c;
    let present = c.iter().filter(|x| x.is_some()).count();
    match present {
        4 => Some([a?, b?, cc?, d?]),
        0 => None,
        1 => {
            let v = c.iter().flatten().next().copied()?;
            Some([v; 4])
        }
        _ => {
            // reflect across a wall row or column first, then across the diagonal
            let fill = |own: Option<f64>, vert: Option<f64>, horiz: Option<f64>| -> f64 {
                match (own, vert, horiz) {
                    (Some(x), _, _) => x,
                    (None, Some(v), Some(h)) => 0.5 * (v + h),
                    (None, Some(v), None) => v,
                    (None, None, Some(h)) => h,
                    (None, None, None) => f64::NAN,
                }
            };
            let mut out = [
                fill(a, cc, b),
                fill(b, d, a),
                fill(cc, a, d),
                fill(d, b, cc),
            ];
            // a diagonal pair missing leaves NaN only if both partners are absent
            let known: Vec<f64> = out.iter().copied().filter(|x| !x.is_nan()).collect();
            let mean = known.iter().sum::<f64>() / known.len() as f64;
            for x in &mut out {
                if x.is_nan() {
                    *x = mean;
                }
            }
            Some(out)
        }
    }
}

/// One pass of the separable 1-2-1 filter; walls and outer boundaries are
/// treated as mirrors of the centre cell.
fn smooth121(f: &Field, topo: &Topology) -> Field {
    let (nx, ny) = (f.nx, f.ny);
    let val = |i: isize, j: isize, center: f64| -> f64 {
        if topo.fluid_at(i, j) {
            f.get(topo.wrap_i(i).unwrap(), j as usize)
        } else {
            center
        }
    };
    let tmp = Field::from_fn(nx, ny, |i, j| {
        if !topo.is_fluid(i, j) {
            return f.get(i, j);
        }
        let c = f.get(i, j);
        let (ii, jj) = (i as isize, j as isize);
        0.25 * ((val(ii - 1, jj, c) + val(ii + 1, jj, c)) + 2.0 * c)
    });
    let val2 = |i: isize, j: isize, center: f64| -> f64 {
        if topo.fluid_at(i, j) {
            tmp.get(topo.wrap_i(i).unwrap(), j as usize)
        } else {
            center
        }
    };
    Field::from_fn(nx, ny, |i, j| {
        if !topo.is_fluid(i, j) {
            return tmp.get(i, j);
        }
        let c = tmp.get(i, j);
        let (ii, jj) = (i as isize, j as isize);
        0.25 * ((val2(ii, jj - 1, c) + val2(ii, jj + 1, c)) + 2.0 * c)
    })
}

/// Surface tension force density `σ κ ∇γ` on open faces [N/m³].
pub fn surface_tension_force(gamma: &Field, sigma: f64, topo: &Topology) -> Velocity {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let mut out = Velocity {
        u: Field::zeros(nx + 1, ny),
        v: Field::zeros(nx, ny + 1),
    };
    if sigma == 0.0 {
        return out;
    }
    let kappa = curvature(gamma, topo);
    for j in 0..ny {
        for i in 0..=nx {
            if !topo.u_open(i, j) {
                continue;
            }
            let l = topo.wrap_i(i as isize - 1).unwrap();
            let r = topo.wrap_i(i as isize).unwrap();
            let jump = gamma.get(r, j) - gamma.get(l, j);
            if jump != 0.0 {
                let k = 0.5 * (kappa.get(l, j) + kappa.get(r, j));
                out.u.set(i, j, sigma * k * jump / g.dx);
            }
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !topo.v_open(i, j) {
                continue;
            }
            let jump = gamma.get(i, j) - gamma.get(i, j - 1);
            if jump != 0.0 {
                let k = 0.5 * (kappa.get(i, j - 1) + kappa.get(i, j));
                out.v.set(i, j, sigma * k * jump / g.dy);
            }
        }
    }
    out
}

/// Provisional velocity `u*` from the advected velocity: diffusion, surface
/// tension, forcing and the current pressure gradient.
///
/// `vel` is the advected velocity and `state` supplies `gamma` (already
/// advanced) and `p`. Closed faces stay exactly zero.
pub fn apply_forces_and_diffusion(
    vel: &Velocity,
    state: &SolverState,
    dt: f64,
    props: &FluidProps,
    topo: &Topology,
    forcing: &Forcing,
    scheme: ViscousScheme,
) -> Result<Velocity> {
    let g = &topo.grid;
    let (nx, ny) = (g.nx, g.ny);
    let m = Materials::new(&state.gamma, props, topo);
    let st = surface_tension_force(&state.gamma, props.surface_tension, topo);
    let p = &state.p;

    // explicit part: forces and pressure gradient per unit density
    let mut rhs = Velocity {
        u: Field::zeros(nx + 1, ny),
        v: Field::zeros(nx, ny + 1),
    };
    for j in 0..ny {
        for i in 0..=nx {
            if !topo.u_open(i, j) {
                continue;
            }
            let l = topo.wrap_i(i as isize - 1).unwrap();
            let r = topo.wrap_i(i as isize).unwrap();
            let k = j * (nx + 1) + i;
            let rho = m.rho_u[k];
            let grad_p = (p.get(r, j) - p.get(l, j)) / g.dx;
            let force = st.u.data[k] + forcing.body[0] - grad_p;
            rhs.u.data[k] = force / rho + forcing.gravity[0];
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            if !topo.v_open(i, j) {
                continue;
            }
            let k = j * nx + i;
            let rho = m.rho_v[k];
            let grad_p = (p.get(i, j) - p.get(i, j - 1)) / g.dy;
            let force = st.v.data[k] + forcing.body[1] + forcing.pump_v[k] - grad_p;
            rhs.v.data[k] = force / rho + forcing.gravity[1];
        }
    }

    let out = match scheme {
        ViscousScheme::Explicit => {
            let visc = viscous_term(vel, &m, topo);
            let mut out = vel.clone();
            for (k, x) in out.u.data.iter_mut().enumerate() {
                *x += dt * (visc.u.data[k] / m.rho_u[k] + rhs.u.data[k]);
            }
            for (k, x) in out.v.data.iter_mut().enumerate() {
                *x += dt * (visc.v.data[k] / m.rho_v[k] + rhs.v.data[k]);
            }
            out
        }
        ViscousScheme::Implicit => implicit_diffusion(vel, &rhs, dt, &m, topo)?,
    };
    let mut out = out;
    zero_closed(&mut out, topo);
    sync_seam(&mut out.u, topo);
    if let Some((i, j)) = out.u.find_non_finite() {
        return Err(Error::NonFinite { field: "u*", i, j, step: state.step });
    }
    if let Some((i, j)) = out.v.find_non_finite() {
        return Err(Error::NonFinite { field: "v*", i, j, step: state.step });
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Component {
    U,
    V,
}

/// `(ρ/dt) x − ∇·(η∇x)` on the open faces of one component, identity elsewhere.
struct ViscousOperator<'a> {
    m: &'a Materials,
    comp: Component,
    dt: f64,
    stencils: Vec<Option<Stencil>>,
}

impl<'a> ViscousOperator<'a> {
    fn new(topo: &'a Topology, m: &'a Materials, comp: Component, dt: f64) -> Self {
        let faces = Faces::new(topo);
        let (nx, ny) = (topo.nx(), topo.ny());
        let stencils = match comp {
            Component::U => (0..(nx + 1) * ny)
                .map(|k| {
                    let (i, j) = (k % (nx + 1), k / (nx + 1));
                    (topo.u_open(i, j) && !(topo.grid.periodic_x && i == nx))
                        .then(|| faces.u_stencil(m, i, j))
                })
                .collect(),
            Component::V => (0..nx * (ny + 1))
                .map(|k| {
                    let (i, j) = (k % nx, k / nx);
                    topo.v_open(i, j).then(|| faces.v_stencil(m, i, j))
                })
                .collect(),
        };
        Self {
            m,
            comp,
            dt,
            stencils,
        }
    }

    fn rho(&self, k: usize) -> f64 {
        match self.comp {
            Component::U => self.m.rho_u[k],
            Component::V => self.m.rho_v[k],
        }
    }
}

impl SpdOperator for ViscousOperator<'_> {
    fn len(&self) -> usize {
        self.stencils.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, s) in self.stencils.iter().enumerate() {
            y[k] = match s {
                Some(s) => self.rho(k) / self.dt * x[k] - s.apply(x, x[k]),
                None => x[k],
            };
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        for (k, s) in self.stencils.iter().enumerate() {
            z[k] = match s {
                Some(s) => r[k] / (self.rho(k) / self.dt + s.diag),
                None => r[k],
            };
        }
    }
}

fn implicit_diffusion(
    vel: &Velocity,
    rhs: &Velocity,
    dt: f64,
    m: &Materials,
    topo: &Topology,
) -> Result<Velocity> {
    let mut out = vel.clone();
    for comp in [Component::U, Component::V] {
        let op = ViscousOperator::new(topo, m, comp, dt);
        let (x0, extra, rho) = match comp {
            Component::U => (&vel.u, &rhs.u, &m.rho_u),
            Component::V => (&vel.v, &rhs.v, &m.rho_v),
        };
        let b: Vec<f64> = (0..op.len())
            .map(|k| match op.stencils[k] {
                Some(_) => rho[k] / dt * x0.data[k] + rho[k] * extra.data[k],
                None => 0.0,
            })
            .collect();
        let target = match comp {
            Component::U => &mut out.u,
            Component::V => &mut out.v,
        };
        for (k, s) in op.stencils.iter().enumerate() {
            if s.is_none() {
                target.data[k] = 0.0;
            }
        }
        let b_norm = linalg::norm2(&b);
        if b_norm == 0.0 {
            target.data.iter_mut().for_each(|x| *x = 0.0);
            continue;
        }
        let mut iterations = 0;
        let mut history = Vec::new();
        let status = linalg::pcg(&op, &b, &mut target.data, 1e-13, b_norm, 20_000, &mut iterations, &mut history);
        if status == CgStatus::IterationCap {
            return Err(Error::Convergence {
                iterations,
                residual_history: history,
            });
        }
    }
    Ok(out)
}

/// Sets every non-open face to exactly zero.
pub fn zero_closed(vel: &mut Velocity, topo: &Topology) {
    let (nx, ny) = (topo.nx(), topo.ny());
    for j in 0..ny {
        for i in 0..=nx {
            if !topo.u_open(i, j) {
                vel.u.set(i, j, 0.0);
            }
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            if !topo.v_open(i, j) {
                vel.v.set(i, j, 0.0);
            }
        }
    }
}

/// On periodic grids face `nx` duplicates face 0.
pub fn sync_seam(u: &mut Field, topo: &Topology) {
    if topo.grid.periodic_x {
        let nx = topo.nx();
        for j in 0..topo.ny() {
            let x = u.get(0, j);
            u.set(nx, j, x);
        }
    }
}
