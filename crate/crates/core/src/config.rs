//! Declarative run configuration.
//!
//! A configuration file is TOML with the sections `[domain]`, `[grid]`,
//! `[fluids]`, `[[pores]]`, `[run]`, and the optional analysis sections
//! `[landau]`, `[analysis]`, `[quantum]`. All lengths are meters, all other
//! quantities SI. Missing keys take the defaults below; unknown keys are
//! rejected. See the README for the full key list.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{equidistant_pores, DomainSpec, GridSpec, PoreSpec};
use crate::landau::{InteractionForm, InteractionModel, LandauParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    pub width: f64,
    /// Height of the liquid reservoir; this is also the y of the wall's lower face.
    pub liquid_height: f64,
    /// Defaults to `liquid_height` (mirrored reservoirs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_height: Option<f64>,
    /// Defaults to two grid rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_thickness: Option<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            width: 6e-6,
            liquid_height: 3e-6,
            gas_height: None,
            wall_thickness: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub periodic_x: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: 640,
            ny: 322,
            periodic_x: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidProps {
    pub rho_liquid: f64,
    pub rho_gas: f64,
    pub eta_liquid: f64,
    pub eta_gas: f64,
    pub surface_tension: f64,
    /// Reference velocity used to normalise reported speeds and to scale any
    /// initial perturbation field.
    pub v_ref: f64,
    /// Liquid mass loss per unit interface length and time [kg/(m²·s)].
    pub evaporation_rate: f64,
}

impl Default for FluidProps {
    fn default() -> Self {
        // water and air at 20 °C
        Self {
            rho_liquid: 998.2,
            rho_gas: 1.204,
            eta_liquid: 1.002e-3,
            eta_gas: 1.825e-5,
            surface_tension: 0.0728,
            v_ref: 4.2e-9,
            evaporation_rate: 0.0,
        }
    }
}

impl FluidProps {
    /// Single-phase fluid: both phases share density and viscosity.
    pub fn single_phase(rho: f64, eta: f64) -> Self {
        Self {
            rho_liquid: rho,
            rho_gas: rho,
            eta_liquid: eta,
            eta_gas: eta,
            surface_tension: 0.0,
            ..Self::default()
        }
    }

    pub fn density(&self, gamma: f64) -> f64 {
        gamma * self.rho_liquid + (1.0 - gamma) * self.rho_gas
    }

    pub fn viscosity(&self, gamma: f64) -> f64 {
        gamma * self.eta_liquid + (1.0 - gamma) * self.eta_gas
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ViscousScheme {
    #[default]
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Maximum number of time steps.
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    /// Write a snapshot every N steps (0: initial and final only).
    pub snapshot_every: u64,
    /// Write a checkpoint every N steps (0: final only).
    pub checkpoint_every: u64,
    /// Stop once the relative change of the fields per step falls below this.
    pub steady_tol: f64,
    pub projection_tol: f64,
    pub projection_max_iter: usize,
    pub viscous_scheme: ViscousScheme,
    /// Body force density [N/m³].
    pub body_force: [f64; 2],
    pub gravity: [f64; 2],
    /// Pressure drop driven across every pore throat [Pa].
    pub pressure_offset: f64,
    /// Initial meniscus apex height inside each pore, as a fraction of the
    /// pore diameter (positive: liquid bulges up into the throat).
    pub meniscus_bulge: f64,
    /// Amplitude of an initial divergence-free swirl in the liquid, in units
    /// of `v_ref`.
    pub initial_swirl: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            end_time: None,
            dt_max: None,
            snapshot_every: 0,
            checkpoint_every: 0,
            steady_tol: 1e-12,
            projection_tol: 1e-10,
            projection_max_iter: 10_000,
            viscous_scheme: ViscousScheme::Explicit,
            body_force: [0.0, 0.0],
            gravity: [0.0, 0.0],
            pressure_offset: 0.0,
            meniscus_bulge: 0.25,
            initial_swirl: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandauConfig {
    /// Particle mass [kg]; default is one water molecule.
    pub mass: f64,
    /// Number density [1/m³]; default is liquid water.
    pub number_density: f64,
    pub form: InteractionForm,
    /// Interaction strength g [J·m³].
    pub strength: f64,
    /// Interaction range b [m].
    pub range: f64,
    pub tau: u32,
    pub sweep_g_max: f64,
    pub sweep_points: usize,
}

impl Default for LandauConfig {
    fn default() -> Self {
        Self {
            mass: 2.99e-26,
            number_density: 3.34e28,
            form: InteractionForm::Gaussian,
            strength: 1e-52,
            range: 1e-10,
            tau: 1,
            sweep_g_max: 1e-50,
            sweep_points: 101,
        }
    }
}

impl LandauConfig {
    pub fn model(&self) -> InteractionModel {
        InteractionModel {
            form: self.form,
            strength: self.strength,
            range: self.range,
        }
    }

    pub fn params(&self, p_c: f64) -> LandauParams {
        LandauParams {
            mass: self.mass,
            number_density: self.number_density,
            p_c,
            tau: self.tau,
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        let n = self.sweep_points.max(1);
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|k| self.sweep_g_max * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub vortex_threshold: f64,
    /// Maximum separation of a counter-rotating pair [m]; defaults to a
    /// quarter of the liquid reservoir width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_distance: Option<f64>,
    pub streamline_seeds: usize,
    /// Arc-length step [m]; defaults to half the smaller cell size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub streamline_step: Option<f64>,
    /// Defaults to the liquid reservoir perimeter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub streamline_max_length: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            vortex_threshold: 1.0,
            pair_distance: None,
            streamline_seeds: 10,
            streamline_step: None,
            streamline_max_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    /// Box side for the mode grid; defaults to the liquid reservoir width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_length: Option<f64>,
    pub n_max: usize,
    pub particles: f64,
    pub temperature: f64,
    pub fock_levels: usize,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            box_length: None,
            n_max: 8,
            particles: 1000.0,
            temperature: 300.0,
            fock_levels: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub domain: DomainConfig,
    pub grid: GridConfig,
    pub fluids: FluidProps,
    pub pores: Vec<PoreSpec>,
    pub run: RunConfig,
    pub landau: LandauConfig,
    pub analysis: AnalysisConfig,
    pub quantum: QuantumConfig,
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("domain", &["width", "liquid_height", "gas_height", "wall_thickness"]),
    ("grid", &["nx", "ny", "periodic_x"]),
    (
        "fluids",
        &[
            "rho_liquid",
            "rho_gas",
            "eta_liquid",
            "eta_gas",
            "surface_tension",
            "v_ref",
            "evaporation_rate",
        ],
    ),
    ("pores", &["sigma", "diameter"]),
    (
        "run",
        &[
            "steps",
            "end_time",
            "dt_max",
            "snapshot_every",
            "checkpoint_every",
            "steady_tol",
            "projection_tol",
            "projection_max_iter",
            "viscous_scheme",
            "body_force",
            "gravity",
            "pressure_offset",
            "meniscus_bulge",
            "initial_swirl",
        ],
    ),
    (
        "landau",
        &[
            "mass",
            "number_density",
            "form",
            "strength",
            "range",
            "tau",
            "sweep_g_max",
            "sweep_points",
        ],
    ),
    (
        "analysis",
        &[
            "vortex_threshold",
            "pair_distance",
            "streamline_seeds",
            "streamline_step",
            "streamline_max_length",
        ],
    ),
    (
        "quantum",
        &["box_length", "n_max", "particles", "temperature", "fock_levels"],
    ),
];

/// Ordered list of configuration problems; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: impl Into<String>) {
        self.violations.push(msg.into());
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }
}

impl SimulationConfig {
    /// The reference layout: `n` equidistant pores of diameter `d` on the default domain.
    pub fn with_pores(n: usize, d: f64) -> Self {
        let mut cfg = Self::default();
        cfg.pores = equidistant_pores(cfg.domain.width, n, d);
        cfg
    }

    pub fn gas_height(&self) -> f64 {
        self.domain.gas_height.unwrap_or(self.domain.liquid_height)
    }

    /// Wall thickness and total height, resolving the two-row default.
    fn vertical_layout(&self) -> (f64, f64) {
        let reservoirs = self.domain.liquid_height + self.gas_height();
        match self.domain.wall_thickness {
            Some(t) => (t, reservoirs + t),
            None => {
                let dy = reservoirs / (self.grid.ny.max(3) as f64 - 2.0);
                (2.0 * dy, reservoirs + 2.0 * dy)
            }
        }
    }

    pub fn domain_spec(&self) -> DomainSpec {
        let (wall_thickness, height) = self.vertical_layout();
        DomainSpec {
            width: self.domain.width,
            height,
            wall_y: self.domain.liquid_height,
            wall_thickness,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        let d = self.domain_spec();
        let mut g = GridSpec::new(self.grid.nx, self.grid.ny, d.width, d.height);
        g.periodic_x = self.grid.periodic_x;
        g
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML serialisation.
    pub fn digest(&self) -> String {
        crate::io::manifest::sha256_hex(self.to_toml().as_bytes())
    }

    /// Digest of everything that determines the evolution of the fields,
    /// i.e. the configuration without stopping rules and output cadence.
    /// Checkpoints carry this so a run can be extended on resume.
    pub fn evolution_digest(&self) -> String {
        let mut c = self.clone();
        let d = RunConfig::default();
        c.run.steps = d.steps;
        c.run.end_time = None;
        c.run.snapshot_every = d.snapshot_every;
        c.run.checkpoint_every = d.checkpoint_every;
        c.run.steady_tol = d.steady_tol;
        c.landau = LandauConfig::default();
        c.analysis = AnalysisConfig::default();
        c.quantum = QuantumConfig::default();
        c.digest()
    }
}

/// Parses configuration text, applies defaults, and validates.
pub fn parse_config_str(text: &str) -> Result<SimulationConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let unknown = unknown_keys(&table);
    if !unknown.is_empty() {
        return Err(Error::Validation(unknown));
    }
    let cfg: SimulationConfig = toml::from_str(text).map_err(|e| parse_error(text, &e))?;
    let report = validate_config(&cfg);
    if report.is_valid() {
        Ok(cfg)
    } else {
        Err(Error::Validation(report.violations))
    }
}

pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

fn parse_error(text: &str, err: &toml::de::Error) -> Error {
    let offset = err.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |p| offset - p - 1) + 1;
    Error::Parse {
        line,
        column,
        message: err.message().to_string(),
    }
}

fn unknown_keys(table: &toml::Table) -> Vec<String> {
    let mut out = Vec::new();
    for (section, value) in table {
        let Some((_, keys)) = KNOWN_KEYS.iter().find(|(name, _)| name == section) else {
            out.push(format!("unknown section `{section}`"));
            continue;
        };
        let tables: Vec<(String, &toml::Table)> = match value {
            toml::Value::Table(t) => vec![(section.clone(), t)],
            toml::Value::Array(items) => items
                .iter()
                .enumerate()
                .filter_map(|(k, v)| v.as_table().map(|t| (format!("{section}[{k}]"), t)))
                .collect(),
            _ => {
                out.push(format!("`{section}` must be a table"));
                continue;
            }
        };
        for (prefix, t) in tables {
            for key in t.keys() {
                if !keys.contains(&key.as_str()) {
                    out.push(format!("unknown key `{prefix}.{key}`"));
                }
            }
        }
    }
    out
}

/// Checks every invariant of the configuration without modifying it.
pub fn validate_config(cfg: &SimulationConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    let d = &cfg.domain;
    let positive = |x: f64| x.is_finite() && x > 0.0;

    r.require(positive(d.width), || format!("domain.width must be > 0 (got {})", d.width));
    r.require(positive(d.liquid_height), || {
        format!("domain.liquid_height must be > 0 (got {})", d.liquid_height)
    });
    if let Some(h) = d.gas_height {
        r.require(positive(h), || format!("domain.gas_height must be > 0 (got {h})"));
    }
    if let Some(t) = d.wall_thickness {
        r.require(positive(t), || format!("domain.wall_thickness must be > 0 (got {t})"));
    }
    r.require(cfg.grid.nx >= 16, || format!("grid.nx must be >= 16 (got {})", cfg.grid.nx));
    r.require(cfg.grid.ny >= 16, || format!("grid.ny must be >= 16 (got {})", cfg.grid.ny));
    if !r.is_valid() {
        return r;
    }

    let domain = cfg.domain_spec();
    let grid = cfg.grid_spec();
    r.require(domain.wall_y < domain.height, || "wall lies outside the domain".into());
    r.require(crate::geometry::wall_rows(&domain, &grid).len() >= 1, || {
        format!(
            "wall of thickness {:e} m contains no grid row (dy = {:e} m)",
            domain.wall_thickness, grid.dy
        )
    });

    for (k, p) in cfg.pores.iter().enumerate() {
        if !positive(p.diameter) {
            r.push(format!("pore {k}: diameter must be > 0 (got {})", p.diameter));
            continue;
        }
        r.require(p.left() >= 0.0 && p.right() <= domain.width, || {
            format!("pore {k}: extends beyond the wall [0, {}]", domain.width)
        });
        r.require(p.diameter >= 3.0 * grid.dx, || {
            format!(
                "pore {k}: diameter {:e} m is below 3 cells (dx = {:e} m)",
                p.diameter, grid.dx
            )
        });
    }
    for a in 0..cfg.pores.len() {
        for b in a + 1..cfg.pores.len() {
            if cfg.pores[a].overlaps(&cfg.pores[b]) {
                r.push(format!("pores overlap: pore {a} and pore {b}"));
            }
        }
    }

    let f = &cfg.fluids;
    for (name, v) in [
        ("rho_liquid", f.rho_liquid),
        ("rho_gas", f.rho_gas),
        ("eta_liquid", f.eta_liquid),
        ("eta_gas", f.eta_gas),
        ("v_ref", f.v_ref),
    ] {
        r.require(positive(v), || format!("fluids.{name} must be > 0 (got {v})"));
    }
    r.require(f.surface_tension >= 0.0, || {
        format!("fluids.surface_tension must be >= 0 (got {})", f.surface_tension)
    });
    r.require(f.evaporation_rate >= 0.0, || {
        format!("fluids.evaporation_rate must be >= 0 (got {})", f.evaporation_rate)
    });

    let run = &cfg.run;
    if let Some(t) = run.end_time {
        r.require(t >= 0.0, || format!("run.end_time must be >= 0 (got {t})"));
    }
    if let Some(t) = run.dt_max {
        r.require(positive(t), || format!("run.dt_max must be > 0 (got {t})"));
    }
    r.require(positive(run.projection_tol) && run.projection_tol < 1.0, || {
        format!("run.projection_tol must lie in (0, 1) (got {})", run.projection_tol)
    });
    r.require(run.projection_max_iter >= 1, || "run.projection_max_iter must be >= 1".into());
    r.require(run.steady_tol >= 0.0, || "run.steady_tol must be >= 0".into());
    r.require(run.meniscus_bulge.abs() < 0.5 || cfg.pores.is_empty(), || {
        format!("run.meniscus_bulge must lie in (-0.5, 0.5) (got {})", run.meniscus_bulge)
    });
    for (name, v) in [
        ("body_force", run.body_force),
        ("gravity", run.gravity),
    ] {
        r.require(v.iter().all(|x| x.is_finite()), || format!("run.{name} must be finite"));
    }

    let l = &cfg.landau;
    r.require(positive(l.mass), || format!("landau.mass must be > 0 (got {})", l.mass));
    r.require(positive(l.number_density), || {
        format!("landau.number_density must be > 0 (got {})", l.number_density)
    });
    r.require(l.strength >= 0.0, || format!("landau.strength must be >= 0 (got {})", l.strength));
    r.require(positive(l.range), || format!("landau.range must be > 0 (got {})", l.range));
    r.require(l.tau >= 1, || "landau.tau must be >= 1".into());
    r.require(l.sweep_g_max >= 0.0, || "landau.sweep_g_max must be >= 0".into());

    let a = &cfg.analysis;
    r.require(a.vortex_threshold >= 0.0, || "analysis.vortex_threshold must be >= 0".into());
    r.require(a.streamline_seeds >= 1, || "analysis.streamline_seeds must be >= 1".into());

    let q = &cfg.quantum;
    r.require(q.n_max >= 1, || "quantum.n_max must be >= 1".into());
    r.require(positive(q.particles), || "quantum.particles must be > 0".into());
    r.require(positive(q.temperature), || "quantum.temperature must be > 0".into());
    r.require(q.fock_levels >= 1, || "quantum.fock_levels must be >= 1".into());
    if let Some(lb) = q.box_length {
        r.require(positive(lb), || "quantum.box_length must be > 0".into());
    }
    r
}
