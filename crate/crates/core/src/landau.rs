//! Critical velocity with a finite-range interaction and the condensate
//! momentum criterion.
//!
//! Units: `number_density` is a number density [1/m³] and the interaction
//! strength carries J·m³, so `ρ ζ / m` is a squared velocity.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::trace::{estimate_critical_velocity, SampleTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InteractionForm {
    /// `g · exp(−s²)`.
    #[default]
    Gaussian,
    /// `g · 3 (sin s − s cos s) / s³`, the transform of a uniform ball.
    /// Changes sign at `s ≈ 4.493`.
    TopHat,
}

impl InteractionForm {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionForm::Gaussian => "GAUSSIAN",
            InteractionForm::TopHat => "TOP_HAT",
        }
    }
}

impl std::str::FromStr for InteractionForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GAUSSIAN" => Ok(InteractionForm::Gaussian),
            "TOP_HAT" | "TOPHAT" => Ok(InteractionForm::TopHat),
            _ => Err(Error::Domain(format!("unknown interaction form `{s}`"))),
        }
    }
}

/// Momentum-space interaction `ζ(p) = g · shape(p b / ħ)` with `shape(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub form: InteractionForm,
    /// g [J·m³].
    pub strength: f64,
    /// b [m].
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandauParams {
    /// Particle mass [kg].
    pub mass: f64,
    /// Number density [1/m³].
    pub number_density: f64,
    /// Critical momentum [kg·m/s].
    pub p_c: f64,
    /// The interaction is evaluated at `tau · p_c`.
    pub tau: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    /// Condensate momentum [kg·m/s].
    pub q: f64,
    /// `p_c²/4 + m ρ ζ(p_c)` [kg²·m²/s²].
    pub threshold: f64,
    pub satisfied: bool,
    /// `q² − threshold`.
    pub margin: f64,
}

/// `3 (sin s − s cos s) / s³`, by its Taylor series below `s = 1`.
fn ball_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 3.0 * (s.sin() - s * s.cos()) / (s * s * s);
    }
    // Σ (−1)^k 3 (2k+2) s^{2k} / (2k+3)!; consecutive terms differ by −s²/(2k(2k+3))
    let s2 = s * s;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=30 {
        let k = k as f64;
        term *= -s2 / (2.0 * k * (2.0 * k + 3.0));
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// The interaction in momentum space [J·m³].
pub fn zeta_momentum(model: &InteractionModel, p: f64) -> f64 {
    let s = p * model.range / HBAR;
    let shape = match model.form {
        InteractionForm::Gaussian => (-s * s).exp(),
        InteractionForm::TopHat => ball_shape(s),
    };
    model.strength * shape
}

/// `v_c = sqrt((p_c / 2m)² + ρ ζ(τ p_c) / m)`.
pub fn critical_velocity(params: &LandauParams, model: &InteractionModel) -> Result<f64> {
    let kinetic = params.p_c / (2.0 * params.mass);
    let zeta = zeta_momentum(model, params.tau as f64 * params.p_c);
    let radicand = kinetic * kinetic + params.number_density * zeta / params.mass;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand(radicand));
    }
    Ok(radicand.sqrt())
}

/// Evaluates `q² > p_c²/4 + m ρ ζ(p_c)` (strict).
pub fn condensate_criterion(q: f64, params: &LandauParams, model: &InteractionModel) -> CriterionResult {
    let zeta_1 = zeta_momentum(model, params.p_c);
    let threshold = params.p_c * params.p_c / 4.0 + params.mass * params.number_density * zeta_1;
    let q2 = q * q;
    CriterionResult {
        q,
        threshold,
        satisfied: q2 > threshold,
        margin: q2 - threshold,
    }
}

/// `v_c` at each interaction strength in `g_values` (ascending, non-negative).
pub fn sweep_critical_velocity(
    params: &LandauParams,
    model: &InteractionModel,
    g_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if let Some(bad) = g_values.iter().find(|g| !(**g >= 0.0)) {
        return Err(Error::Domain(format!("interaction strengths must be >= 0, got {bad}")));
    }
    if g_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("interaction strengths must be sorted ascending".into()));
    }
    g_values
        .iter()
        .map(|&g| {
            let m = InteractionModel { strength: g, ..*model };
            critical_velocity(params, &m).map(|v| (g, v))
        })
        .collect()
}

/// Criterion inputs and outcome derived from sampled simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCriterion {
    /// Mean probe speed over the central lines [m/s].
    pub condensate_speed: f64,
    /// Histogram-mode speed of all probes [m/s].
    pub critical_speed: f64,
    /// Both speeds in units of the reference velocity.
    pub condensate_speed_ref: f64,
    pub critical_speed_ref: f64,
    pub p_c: f64,
    pub result: CriterionResult,
    /// The estimator saw only identical speeds.
    pub degenerate: bool,
}

/// Bridges sample tables to the criterion: `q = m · mean(central speeds)`,
/// `p_c = m · histogram mode`. `params.p_c` is replaced.
pub fn criterion_from_simulation(
    tables: &[SampleTable],
    params: &LandauParams,
    model: &InteractionModel,
    v_ref: f64,
) -> Result<SimulationCriterion> {
    let estimate = estimate_critical_velocity(tables)?;
    let central: Vec<f64> = tables
        .iter()
        .flat_map(|t| t.central_lines())
        .flat_map(|l| l.probes.iter())
        .filter(|p| !p.in_solid)
        .map(|p| p.speed)
        .collect();
    if central.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let condensate_speed = central.iter().sum::<f64>() / central.len() as f64;
    let p = LandauParams {
        p_c: params.mass * estimate.speed,
        ..*params
    };
    let result = condensate_criterion(params.mass * condensate_speed, &p, model);
    Ok(SimulationCriterion {
        condensate_speed,
        critical_speed: estimate.speed,
        condensate_speed_ref: condensate_speed / v_ref,
        critical_speed_ref: estimate.speed / v_ref,
        p_c: p.p_c,
        result,
        degenerate: estimate.degenerate,
    })
}
