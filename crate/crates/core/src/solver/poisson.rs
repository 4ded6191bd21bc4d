//! Variable-coefficient pressure Poisson problem on the fluid cells.
//!
//! The operator is `(A p)_c = Σ_faces w_f (p_c − p_nb)` with
//! `w_f = 1 / (ρ_f h²)` on open faces. Each connected fluid region is a pure
//! Neumann problem, so `A` is singular with one constant mode per region; the
//! right-hand side is made compatible by removing its per-region mean and the
//! solution is returned with zero mean per region.
//!
//! The preconditioner is a symmetric V-cycle over piecewise-constant
//! aggregates (Galerkin coarse operators) with damped Jacobi smoothing. The
//! aggregation pattern is mirror-symmetric in `x`, so a mirror-symmetric
//! problem yields iterates that stay mirror-symmetric up to roundoff.

use std::cell::RefCell;

use super::linalg::{self, CgStatus, SpdOperator};
use super::topology::Topology;
use crate::error::{Error, Result};

const SMOOTHING_SWEEPS: usize = 2;
const JACOBI_DAMPING: f64 = 0.8;
const COARSEST_CELLS: usize = 64;
const INACTIVE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Level {
    nx: usize,
    ny: usize,
    periodic: bool,
    /// Weight of the face to the east / north of each cell.
    we: Vec<f64>,
    wn: Vec<f64>,
    diag: Vec<f64>,
    /// Aggregation into the next coarser level: coarse index per fine column
    /// and row, and the fine children of each coarse column and row.
    cx: Vec<usize>,
    cy: Vec<usize>,
    kids_x: Vec<Vec<usize>>,
    kids_y: Vec<Vec<usize>>,
}

impl Level {
    fn new(nx: usize, ny: usize, periodic: bool) -> Self {
        Self {
            nx,
            ny,
            periodic,
            we: vec![0.0; nx * ny],
            wn: vec![0.0; nx * ny],
            diag: vec![0.0; nx * ny],
            cx: Vec::new(),
            cy: Vec::new(),
            kids_x: Vec::new(),
            kids_y: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    fn west(&self, i: usize) -> Option<usize> {
        if i > 0 {
            Some(i - 1)
        } else if self.periodic {
            Some(self.nx - 1)
        } else {
            None
        }
    }

    #[inline]
    fn east(&self, i: usize) -> Option<usize> {
        if i + 1 < self.nx {
            Some(i + 1)
        } else if self.periodic {
            Some(0)
        } else {
            None
        }
    }

    fn finish_diag(&mut self) {
        let nx = self.nx;
        for j in 0..self.ny {
            for i in 0..nx {
                let c = j * nx + i;
                let ww = self.west(i).map_or(0.0, |w| self.we[j * nx + w]);
                let ws = if j > 0 { self.wn[c - nx] } else { 0.0 };
                self.diag[c] = (self.we[c] + ww) + (self.wn[c] + ws);
            }
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let nx = self.nx;
        for j in 0..self.ny {
            for i in 0..nx {
                let c = j * nx + i;
                if self.diag[c] == 0.0 {
                    y[c] = 0.0;
                    continue;
                }
                let e = self.east(i).map_or(0.0, |e| self.we[c] * x[j * nx + e]);
                let w = self.west(i).map_or(0.0, |w| self.we[j * nx + w] * x[j * nx + w]);
                let n = if j + 1 < self.ny { self.wn[c] * x[c + nx] } else { 0.0 };
                let s = if j > 0 { self.wn[c - nx] * x[c - nx] } else { 0.0 };
                y[c] = self.diag[c] * x[c] - ((e + w) + (n + s));
            }
        }
    }

    /// `z += ω D⁻¹ (r − A z)`, one damped Jacobi sweep.
    fn smooth(&self, r: &[f64], z: &mut [f64], tmp: &mut [f64]) {
        self.apply(z, tmp);
        for c in 0..self.len() {
            if self.diag[c] > 0.0 {
                z[c] += JACOBI_DAMPING * (r[c] - tmp[c]) / self.diag[c];
            }
        }
    }

    fn coarsen(&mut self) -> Level {
        let (mx, kx) = if self.nx >= 8 {
            mirror_aggregates(self.nx)
        } else {
            identity_aggregates(self.nx)
        };
        let (my, ky) = if self.ny >= 8 {
            pair_aggregates(self.ny)
        } else {
            identity_aggregates(self.ny)
        };
        let coarse = Level::new(kx.len(), ky.len(), self.periodic);
        self.cx = mx;
        self.cy = my;
        self.kids_x = kx;
        self.kids_y = ky;
        coarse
    }

    /// Galerkin coarse weights: every fine face crossing between two
    /// aggregates contributes its weight to the coarse face between them.
    fn restrict_weights(&self, coarse: &mut Level) {
        let (nx, cnx) = (self.nx, coarse.nx);
        for jc in 0..coarse.ny {
            for ic in 0..cnx {
                let c = jc * cnx + ic;
                let last_i = *self.kids_x[ic].last().unwrap();
                let last_j = *self.kids_y[jc].last().unwrap();
                let mut we = 0.0;
                if coarse.east(ic).is_some() {
                    for &j in &self.kids_y[jc] {
                        we += self.we[j * nx + last_i];
                    }
                }
                let mut wn = 0.0;
                if jc + 1 < coarse.ny {
                    for &i in &self.kids_x[ic] {
                        wn += self.wn[last_j * nx + i];
                    }
                }
                coarse.we[c] = we;
                coarse.wn[c] = wn;
            }
        }
        coarse.finish_diag();
    }

    fn restrict(&self, r: &[f64], coarse_nx: usize, rc: &mut [f64]) {
        for (jc, kids_y) in self.kids_y.iter().enumerate() {
            for (ic, kids_x) in self.kids_x.iter().enumerate() {
                let mut s = 0.0;
                for &j in kids_y {
                    let row: f64 = match kids_x.as_slice() {
                        [a] => r[j * self.nx + a],
                        [a, b] => r[j * self.nx + a] + r[j * self.nx + b],
                        _ => unreachable!(),
                    };
                    s += row;
                }
                rc[jc * coarse_nx + ic] = s;
            }
        }
    }

    fn prolong_add(&self, zc: &[f64], coarse_nx: usize, z: &mut [f64]) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                z[j * self.nx + i] += zc[self.cy[j] * coarse_nx + self.cx[i]];
            }
        }
    }
}

/// Pairs columns from both ends toward the middle; an odd middle column
/// forms its own aggregate. Mirror-equivariant by construction.
fn mirror_aggregates(n: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let half = n / 2;
    let nl = half.div_ceil(2);
    let nc = 2 * nl + n % 2;
    let mut map = vec![0; n];
    for i in 0..half {
        map[i] = i / 2;
        map[n - 1 - i] = nc - 1 - i / 2;
    }
    if n % 2 == 1 {
        map[half] = nl;
    }
    (map.clone(), children(&map, nc))
}

fn pair_aggregates(n: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let map: Vec<usize> = (0..n).map(|j| j / 2).collect();
    let nc = n.div_ceil(2);
    (map.clone(), children(&map, nc))
}

fn identity_aggregates(n: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let map: Vec<usize> = (0..n).collect();
    (map.clone(), children(&map, n))
}

fn children(map: &[usize], nc: usize) -> Vec<Vec<usize>> {
    let mut kids = vec![Vec::new(); nc];
    for (i, &c) in map.iter().enumerate() {
        kids[c].push(i);
    }
    kids
}

/// Dense solve on the coarsest level with one pinned cell per component.
#[derive(Debug, Clone, Default)]
struct CoarseSolver {
    /// Active cells of the level, in scan order.
    cells: Vec<usize>,
    comp: Vec<usize>,
    comp_size: Vec<usize>,
    pinned: Vec<bool>,
    /// Lower-triangular Cholesky factor, row-major `n × n`.
    chol: Vec<f64>,
}

impl CoarseSolver {
    fn factor(level: &Level) -> Self {
        let active: Vec<usize> = (0..level.len()).filter(|&c| level.diag[c] > 0.0).collect();
        let n = active.len();
        let mut pos = vec![usize::MAX; level.len()];
        for (k, &c) in active.iter().enumerate() {
            pos[c] = k;
        }
        let mut a = vec![0.0; n * n];
        let nx = level.nx;
        for (k, &c) in active.iter().enumerate() {
            let (i, j) = (c % nx, c / nx);
            a[k * n + k] = level.diag[c];
            let mut couple = |other: usize, w: f64| {
                if w != 0.0 && pos[other] != usize::MAX {
                    a[k * n + pos[other]] -= w;
                }
            };
            if let Some(e) = level.east(i) {
                couple(j * nx + e, level.we[c]);
            }
            if let Some(w) = level.west(i) {
                couple(j * nx + w, level.we[j * nx + w]);
            }
            if j + 1 < level.ny {
                couple(c + nx, level.wn[c]);
            }
            if j > 0 {
                couple(c - nx, level.wn[c - nx]);
            }
        }

        let (comp, comp_size) = components_dense(&a, n);
        let mut pinned = vec![false; n];
        let mut seen = vec![false; comp_size.len()];
        for k in 0..n {
            if !seen[comp[k]] {
                seen[comp[k]] = true;
                pinned[k] = true;
            }
        }
        for k in 0..n {
            if pinned[k] {
                for m in 0..n {
                    a[k * n + m] = 0.0;
                    a[m * n + k] = 0.0;
                }
                a[k * n + k] = 1.0;
            }
        }
        // in-place Cholesky
        for col in 0..n {
            let mut d = a[col * n + col];
            for m in 0..col {
                d -= a[col * n + m] * a[col * n + m];
            }
            let d = d.max(f64::MIN_POSITIVE).sqrt();
            a[col * n + col] = d;
            for row in col + 1..n {
                let mut s = a[row * n + col];
                for m in 0..col {
                    s -= a[row * n + m] * a[col * n + m];
                }
                a[row * n + col] = s / d;
            }
        }
        Self {
            cells: active,
            comp,
            comp_size,
            pinned,
            chol: a,
        }
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.cells.len();
        let mut mean = vec![0.0; self.comp_size.len()];
        for k in 0..n {
            mean[self.comp[k]] += r[self.cells[k]];
        }
        for (m, &s) in mean.iter_mut().zip(&self.comp_size) {
            *m /= s as f64;
        }
        let mut y: Vec<f64> = (0..n)
            .map(|k| {
                if self.pinned[k] {
                    0.0
                } else {
                    r[self.cells[k]] - mean[self.comp[k]]
                }
            })
            .collect();
        let l = &self.chol;
        for row in 0..n {
            let mut s = y[row];
            for m in 0..row {
                s -= l[row * n + m] * y[m];
            }
            y[row] = s / l[row * n + row];
        }
        for row in (0..n).rev() {
            let mut s = y[row];
            for m in row + 1..n {
                s -= l[m * n + row] * y[m];
            }
            y[row] = s / l[row * n + row];
        }
        let mut mean = vec![0.0; self.comp_size.len()];
        for k in 0..n {
            mean[self.comp[k]] += y[k];
        }
        for (m, &s) in mean.iter_mut().zip(&self.comp_size) {
            *m /= s as f64;
        }
        z.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            z[self.cells[k]] = y[k] - mean[self.comp[k]];
        }
    }
}

fn components_dense(a: &[f64], n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut comp = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![start];
        comp[start] = id;
        let mut size = 0;
        while let Some(k) = stack.pop() {
            size += 1;
            for m in 0..n {
                if m != k && a[k * n + m] != 0.0 && comp[m] == usize::MAX {
                    comp[m] = id;
                    stack.push(m);
                }
            }
        }
        sizes.push(size);
    }
    (comp, sizes)
}

#[derive(Debug, Default)]
struct Scratch {
    r: Vec<f64>,
    z: Vec<f64>,
    tmp: Vec<f64>,
}

/// The assembled operator plus its preconditioner hierarchy.
#[derive(Debug)]
pub struct PressureOperator {
    levels: Vec<Level>,
    coarse: CoarseSolver,
    /// Connected-region id per fine cell (`INACTIVE` for solid cells).
    region: Vec<u32>,
    region_size: Vec<usize>,
    scratch: RefCell<Vec<Scratch>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// The requested accuracy could not be reached before roundoff stalled
    /// the iteration; the best available solution was returned.
    pub hit_roundoff_floor: bool,
}

impl PressureOperator {
    pub fn new(topo: &Topology) -> Self {
        let g = &topo.grid;
        let mut levels = vec![Level::new(g.nx, g.ny, g.periodic_x)];
        loop {
            let last = levels.last_mut().unwrap();
            if last.len() <= COARSEST_CELLS || (last.nx < 8 && last.ny < 8) {
                break;
            }
            let coarse = last.coarsen();
            levels.push(coarse);
        }
        let (region, region_size) = regions(topo);
        let scratch = levels
            .iter()
            .map(|l| Scratch {
                r: vec![0.0; l.len()],
                z: vec![0.0; l.len()],
                tmp: vec![0.0; l.len()],
            })
            .collect();
        Self {
            levels,
            coarse: CoarseSolver::default(),
            region,
            region_size,
            scratch: RefCell::new(scratch),
        }
    }

    pub fn region_count(&self) -> usize {
        self.region_size.len()
    }

    /// Sets `w_f = 1/(ρ_f h²)` from inverse face densities (zero on closed faces).
    ///
    /// `inv_rho_u` is `(nx+1) × ny`, `inv_rho_v` is `nx × (ny+1)`.
    pub fn set_coefficients(&mut self, inv_rho_u: &[f64], inv_rho_v: &[f64], dx: f64, dy: f64) {
        let fine = &mut self.levels[0];
        let (nx, ny) = (fine.nx, fine.ny);
        let (kx, ky) = (1.0 / (dx * dx), 1.0 / (dy * dy));
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                // east face of cell i is u-face i+1; the periodic seam is face 0
                let f = if i + 1 < nx {
                    i + 1
                } else if fine.periodic {
                    0
                } else {
                    nx
                };
                fine.we[c] = inv_rho_u[j * (nx + 1) + f] * kx;
                fine.wn[c] = if j + 1 < ny {
                    inv_rho_v[(j + 1) * nx + i] * ky
                } else {
                    0.0
                };
            }
        }
        fine.finish_diag();
        for l in 0..self.levels.len() - 1 {
            let (head, tail) = self.levels.split_at_mut(l + 1);
            head[l].restrict_weights(&mut tail[0]);
        }
        self.coarse = CoarseSolver::factor(self.levels.last().unwrap());
    }

    fn vcycle(&self, l: usize, scratch: &mut [Scratch]) {
        let level = &self.levels[l];
        if l + 1 == self.levels.len() {
            let s = &mut scratch[l];
            self.coarse.solve(&s.r, &mut s.z);
            return;
        }
        {
            let s = &mut scratch[l];
            s.z.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..SMOOTHING_SWEEPS {
                level.smooth(&s.r, &mut s.z, &mut s.tmp);
            }
            level.apply(&s.z, &mut s.tmp);
            for c in 0..level.len() {
                s.tmp[c] = s.r[c] - s.tmp[c];
            }
        }
        let cnx = self.levels[l + 1].nx;
        {
            let (head, tail) = scratch.split_at_mut(l + 1);
            level.restrict(&head[l].tmp, cnx, &mut tail[0].r);
        }
        self.vcycle(l + 1, scratch);
        let (head, tail) = scratch.split_at_mut(l + 1);
        let s = &mut head[l];
        level.prolong_add(&tail[0].z, cnx, &mut s.z);
        for _ in 0..SMOOTHING_SWEEPS {
            level.smooth(&s.r, &mut s.z, &mut s.tmp);
        }
    }

    /// Subtracts the mean of each connected region.
    pub fn remove_region_means(&self, v: &mut [f64]) {
        let mut sums = vec![0.0; self.region_size.len()];
        for (c, &r) in self.region.iter().enumerate() {
            if r != INACTIVE {
                sums[r as usize] += v[c];
            }
        }
        for (s, &n) in sums.iter_mut().zip(&self.region_size) {
            *s /= n as f64;
        }
        for (c, &r) in self.region.iter().enumerate() {
            if r == INACTIVE {
                v[c] = 0.0;
            } else {
                v[c] -= sums[r as usize];
            }
        }
    }

    /// Solves `A x = b` starting from `x`.
    ///
    /// Iterates until the relative residual is at most `tol`, then asks
    /// `accept` whether the solution is good enough; if not, the tolerance is
    /// tightened a hundredfold and the iteration continues from the current
    /// solution. `b` is made compatible in place.
    pub fn solve(
        &self,
        b: &mut [f64],
        x: &mut [f64],
        tol: f64,
        max_iter: usize,
        mut accept: impl FnMut(&[f64]) -> bool,
    ) -> Result<SolveStats> {
        self.remove_region_means(b);
        let b_norm = linalg::norm2(b);
        let mut stats = SolveStats::default();
        if b_norm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(stats);
        }
        // a warm start that is worse than zero is discarded
        let mut q = vec![0.0; b.len()];
        self.apply(x, &mut q);
        let r0: Vec<f64> = b.iter().zip(&q).map(|(b, q)| b - q).collect();
        if linalg::norm2(&r0) > b_norm {
            x.iter_mut().for_each(|v| *v = 0.0);
        }

        let mut tol_k = tol;
        loop {
            let status = linalg::pcg(
                self,
                b,
                x,
                tol_k,
                b_norm,
                max_iter,
                &mut stats.iterations,
                &mut stats.residual_history,
            );
            if status == CgStatus::IterationCap {
                return Err(Error::Convergence {
                    iterations: stats.iterations,
                    residual_history: stats.residual_history,
                });
            }
            self.remove_region_means(x);
            if accept(x) {
                return Ok(stats);
            }
            tol_k *= 1e-2;
            if tol_k < 1e-16 {
                stats.hit_roundoff_floor = true;
                return Ok(stats);
            }
        }
    }
}

impl SpdOperator for PressureOperator {
    fn len(&self) -> usize {
        self.levels[0].len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.levels[0].apply(x, y);
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let mut scratch = self.scratch.borrow_mut();
        scratch[0].r.copy_from_slice(r);
        self.vcycle(0, &mut scratch);
        z.copy_from_slice(&scratch[0].z);
    }

    fn project(&self, v: &mut [f64]) {
        self.remove_region_means(v);
    }
}

/// Connected fluid regions through open faces, labelled in scan order.
fn regions(topo: &Topology) -> (Vec<u32>, Vec<usize>) {
    let (nx, ny) = (topo.nx(), topo.ny());
    let mut label = vec![INACTIVE; nx * ny];
    let mut sizes = Vec::new();
    for start in 0..nx * ny {
        let (i0, j0) = (start % nx, start / nx);
        if label[start] != INACTIVE || !topo.is_fluid(i0, j0) {
            continue;
        }
        let id = sizes.len() as u32;
        let mut size = 0;
        let mut stack = vec![start];
        label[start] = id;
        while let Some(c) = stack.pop() {
            size += 1;
            let (i, j) = (c % nx, c / nx);
            let mut visit = |ni: usize, nj: usize, open: bool| {
                let n = nj * nx + ni;
                if open && label[n] == INACTIVE {
                    label[n] = id;
                    stack.push(n);
                }
            };
            if let Some(e) = topo.wrap_i(i as isize + 1) {
                visit(e, j, topo.u_open(i + 1, j));
            }
            if let Some(w) = topo.wrap_i(i as isize - 1) {
                visit(w, j, topo.u_open(i, j));
            }
            if j + 1 < ny {
                visit(i, j + 1, topo.v_open(i, j + 1));
            }
            if j > 0 {
                visit(i, j - 1, topo.v_open(i, j));
            }
        }
        sizes.push(size);
    }
    (label, sizes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CellKind, CellMask, GridSpec};

    fn uniform_operator(nx: usize, ny: usize, periodic: bool) -> (Topology, PressureOperator) {
        let mut g = GridSpec::new(nx, ny, 1.0, 1.0);
        g.periodic_x = periodic;
        let topo = Topology::new(g, CellMask::uniform(nx, ny, CellKind::Liquid));
        let mut op = PressureOperator::new(&topo);
        let inv_u: Vec<f64> = (0..(nx + 1) * ny)
            .map(|k| {
                let (i, j) = (k % (nx + 1), k / (nx + 1));
                if topo.u_open(i, j) { 1.0 } else { 0.0 }
            })
            .collect();
        let inv_v: Vec<f64> = (0..nx * (ny + 1))
            .map(|k| if topo.v_open(k % nx, k / nx) { 1.0 } else { 0.0 })
            .collect();
        op.set_coefficients(&inv_u, &inv_v, g.dx, g.dy);
        (topo, op)
    }

    #[test]
    fn mirror_aggregation_is_equivariant() {
        for n in 8..40 {
            let (map, kids) = mirror_aggregates(n);
            let nc = kids.len();
            for i in 0..n {
                assert_eq!(map[n - 1 - i], nc - 1 - map[i], "n={n} i={i}");
            }
            assert!(kids.iter().all(|k| !k.is_empty() && k.len() <= 2));
        }
    }

    #[test]
    fn recovers_manufactured_solution() {
        for periodic in [false, true] {
            let (_, op) = uniform_operator(48, 40, periodic);
            let n = 48 * 40;
            let mut x_true: Vec<f64> = (0..n)
                .map(|c| ((c % 48) as f64 * 0.37).sin() + ((c / 48) as f64 * 0.21).cos())
                .collect();
            op.remove_region_means(&mut x_true);
            let mut b = vec![0.0; n];
            op.apply(&x_true, &mut b);
            let mut x = vec![0.0; n];
            let stats = op.solve(&mut b, &mut x, 1e-12, 500, |_| true).unwrap();
            assert!(stats.iterations < 60, "{} iterations", stats.iterations);
            let err = x.iter().zip(&x_true).fold(0.0f64, |m, (a, e)| m.max((a - e).abs()));
            assert!(err < 1e-8, "err {err:e}");
        }
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let (_, op) = uniform_operator(16, 16, false);
        let mut b = vec![0.0; 256];
        let mut x = vec![1.0; 256];
        let stats = op.solve(&mut b, &mut x, 1e-10, 10, |_| true).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disconnected_regions_are_separate() {
        let g = GridSpec::new(16, 18, 1.0, 1.0);
        let mut mask = CellMask::uniform(16, 18, CellKind::Liquid);
        for i in 0..16 {
            mask.set(i, 8, CellKind::Solid);
            mask.set(i, 9, CellKind::Solid);
        }
        let topo = Topology::new(g, mask);
        let op = PressureOperator::new(&topo);
        assert_eq!(op.region_count(), 2);
    }
}
