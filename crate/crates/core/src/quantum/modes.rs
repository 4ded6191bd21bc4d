//! Plane-wave modes of a periodic square box and their Bose–Einstein filling.

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};

/// Relative accuracy of the particle-number match in the chemical-potential
/// solve (stricter than the 1e-9 the callers rely on).
pub const NUMBER_TOL: f64 = 1e-12;
pub const MAX_BISECTIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    /// Integer wave-vector indices: `k = 2π (nx, ny) / L`.
    pub nx: i32,
    pub ny: i32,
    pub kx: f64,
    pub ky: f64,
    /// `ħ² |k|² / 2m` [J].
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid2D {
    pub length: f64,
    pub n_max: u32,
    pub mass: f64,
    /// Sorted by energy, then by `(nx, ny)`.
    pub modes: Vec<Mode>,
}

/// All `(2 n_max + 1)²` modes with components in `{0, ±2π/L, …, ±2π n_max/L}`.
pub fn build_mode_grid(length: f64, n_max: u32, mass: f64) -> Result<ModeGrid2D> {
    if !(length > 0.0) || n_max < 1 || !(mass > 0.0) {
        return Err(Error::Domain(format!(
            "mode grid needs L > 0, n_max >= 1, m > 0 (got {length:e}, {n_max}, {mass:e})"
        )));
    }
    // ħ²(2π/L)²/2m = h²/(2 m L²)
    let unit = PLANCK * PLANCK / (2.0 * mass * length * length);
    let n = n_max as i32;
    let mut modes = Vec::with_capacity(((2 * n + 1) * (2 * n + 1)) as usize);
    for ny in -n..=n {
        for nx in -n..=n {
            let k = 2.0 * std::f64::consts::PI / length;
            modes.push(Mode {
                nx,
                ny,
                kx: k * nx as f64,
                ky: k * ny as f64,
                energy: unit * (nx * nx + ny * ny) as f64,
            });
        }
    }
    modes.sort_by(|a, b| a.energy.total_cmp(&b.energy).then((a.nx, a.ny).cmp(&(b.nx, b.ny))));
    Ok(ModeGrid2D {
        length,
        n_max,
        mass,
        modes,
    })
}

impl ModeGrid2D {
    /// A grid from explicit energies, e.g. a hand-made spectrum. The lowest
    /// energy plays the role of the ground state.
    pub fn from_energies(mut energies: Vec<f64>) -> Self {
        energies.sort_by(f64::total_cmp);
        Self {
            length: f64::NAN,
            n_max: 0,
            mass: f64::NAN,
            modes: energies
                .into_iter()
                .map(|energy| Mode {
                    nx: 0,
                    ny: 0,
                    kx: f64::NAN,
                    ky: f64::NAN,
                    energy,
                })
                .collect(),
        }
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.energy)
    }

    pub fn ground_energy(&self) -> f64 {
        self.modes.first().map_or(0.0, |m| m.energy)
    }

    /// `(energy, multiplicity)` for each distinct energy.
    pub fn degeneracies(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for e in self.energies() {
            match out.last_mut() {
                Some((last, n)) if *last == e => *n += 1,
                _ => out.push((e, 1)),
            }
        }
        out
    }
}

/// `1 / (e^x − 1)` for `x = β(ε − Q) > 0`.
pub fn occupation_reduced(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "occupation needs the chemical potential strictly below the level (β(ε−Q) = {x:e})"
        )));
    }
    Ok(1.0 / x.exp_m1())
}

/// Mean occupation `1 / (exp((ε − Q)/k_B T) − 1)`.
pub fn be_occupation(energy: f64, chemical_potential: f64, temperature: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!("temperature must be > 0, got {temperature}")));
    }
    occupation_reduced((energy - chemical_potential) / (BOLTZMANN * temperature))
}

/// Total occupation with the chemical potential `gap` below the ground level.
fn total(grid: &ModeGrid2D, gap: f64, kt: f64) -> f64 {
    let e0 = grid.ground_energy();
    grid.energies().map(|e| 1.0 / (((e - e0) + gap) / kt).exp_m1()).sum()
}

/// Solved chemical potential, kept as its distance below the ground level
/// so the ground occupation stays accurate when that distance is tiny.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChemicalPotential {
    /// Q [J].
    pub value: f64,
    /// `ε_min − Q` [J].
    pub gap: f64,
    pub bisections: usize,
}

/// Finds `Q < ε_min` with `Σ n_i = N` by bisection on `log(ε_min − Q)`.
pub fn solve_chemical_potential(grid: &ModeGrid2D, n_target: f64, temperature: f64) -> Result<ChemicalPotential> {
    if !(n_target > 0.0) || !(temperature > 0.0) || grid.modes.is_empty() {
        return Err(Error::Domain(format!(
            "need N > 0, T > 0 and at least one mode (got {n_target}, {temperature})"
        )));
    }
    let kt = BOLTZMANN * temperature;
    // bracket: total(gap) decreases from +∞ at gap → 0 to 0 at gap → ∞
    let mut hi = kt;
    let mut lo = kt;
    let mut steps = 0;
    while total(grid, hi, kt) > n_target {
        hi *= 2.0;
        steps += 1;
        if steps > MAX_BISECTIONS {
            return Err(Error::NoChemicalPotential(steps));
        }
    }
    while total(grid, lo, kt) < n_target {
        lo *= 0.5;
        steps += 1;
        if steps > MAX_BISECTIONS {
            return Err(Error::NoChemicalPotential(steps));
        }
    }
    for k in 0..MAX_BISECTIONS {
        let mid = (lo * hi).sqrt();
        let n = total(grid, mid, kt);
        if (n - n_target).abs() <= NUMBER_TOL * n_target || mid == lo || mid == hi {
            return Ok(ChemicalPotential {
                value: grid.ground_energy() - mid,
                gap: mid,
                bisections: k + 1,
            });
        }
        if n > n_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoChemicalPotential(MAX_BISECTIONS))
}

/// Occupations of every mode at the solved chemical potential.
pub fn occupations(grid: &ModeGrid2D, mu: &ChemicalPotential, temperature: f64) -> Vec<f64> {
    let kt = BOLTZMANN * temperature;
    let e0 = grid.ground_energy();
    grid.energies().map(|e| 1.0 / (((e - e0) + mu.gap) / kt).exp_m1()).collect()
}

/// Ground-mode share `n₀ / Σ n_i` at the solved chemical potential.
pub fn condensate_fraction(grid: &ModeGrid2D, n_target: f64, temperature: f64) -> Result<f64> {
    let mu = solve_chemical_potential(grid, n_target, temperature)?;
    let n = occupations(grid, &mu, temperature);
    let sum: f64 = n.iter().sum();
    Ok(n[0] / sum)
}
