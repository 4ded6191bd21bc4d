//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run everything with `cargo test --release --test acceptance`; pass
//! criterion numbers after `--` to run a subset, e.g. `-- 1 13`.

use std::f64::consts::{LN_2, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use porefluid::config::{RunConfig, ViscousScheme};
use porefluid::constants::{BOLTZMANN, ELECTRON_VOLT};
use porefluid::geometry::{equidistant_pores, CellKind};
use porefluid::io;
use porefluid::landau::{
    condensate_criterion, critical_velocity, sweep_critical_velocity, InteractionForm, InteractionModel, LandauParams,
};
use porefluid::pipeline::{analyse_field, run_batch, BatchEntry};
use porefluid::quantum::dispersion::{group_velocity_from_k, group_velocity_from_lambda};
use porefluid::quantum::fock::ladder_operators;
use porefluid::quantum::modes::{
    build_mode_grid, occupation_reduced, occupations, solve_chemical_potential, ModeGrid2D,
};
use porefluid::quantum::waves::{de_broglie_nonrelativistic, de_broglie_via_momentum, de_broglie_wavelength};
use porefluid::solver::run::{RunSummary, SUMMARY_FILE};
use porefluid::solver::{run_simulation, Simulation, StepDiagnostics, Topology};
use porefluid::trace::{trace_streamline, AnalyticField, Termination};
use porefluid::{CellMask, Field, FluidProps, GridSpec, SimulationConfig, SolverState};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Steps checked against the divergence bound, shared by every run below.
#[derive(Default)]
struct Divergence {
    steps: u64,
    violations: u64,
    worst_ratio: f64,
}

impl Divergence {
    fn add(&mut self, diags: &[StepDiagnostics]) {
        for d in diags {
            self.steps += 1;
            if !d.divergence_ok() {
                self.violations += 1;
            }
            if d.divergence_bound > 0.0 {
                self.worst_ratio = self.worst_ratio.max(d.max_divergence / d.divergence_bound);
            }
        }
    }

    fn add_summary(&mut self, s: &RunSummary) {
        self.steps += s.steps_taken;
        self.violations += s.divergence_violations;
        self.worst_ratio = self.worst_ratio.max(s.worst_divergence_ratio);
    }
}

fn fixture(name: &str) -> csv::Reader<std::fs::File> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    csv::Reader::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn poiseuille(div: &mut Divergence) -> Outcome {
    let start = Instant::now();
    let (nx, ny) = (4, 128);
    let h = 1.28e-6;
    let g = GridSpec::new(nx, ny, h * nx as f64 / ny as f64, h).periodic();
    let topo = Topology::new(g, CellMask::uniform(nx, ny, CellKind::Liquid));
    let (eta, force) = (1e-3, 1e5);
    let run = RunConfig {
        viscous_scheme: ViscousScheme::Implicit,
        body_force: [force, 0.0],
        dt_max: Some(1e-6),
        ..RunConfig::default()
    };
    let mut state = SolverState::at_rest(g);
    state.gamma = Field::filled(nx, ny, 1.0);
    let mut sim = Simulation::from_parts(topo, FluidProps::single_phase(1e3, eta), run, state);
    let mut diags = Vec::new();
    let mut steady = false;
    for _ in 0..5000 {
        let d = sim.step().expect("channel step");
        let done = d.relative_change < 1e-12;
        diags.push(d);
        if done {
            steady = true;
            break;
        }
    }
    div.add(&diags);
    let s = sim.state();
    let peak = force * h * h / (8.0 * eta);
    let worst = (0..ny)
        .map(|j| {
            let y = (j as f64 + 0.5) * g.dy;
            let exact = force * (h - y) * y / (2.0 * eta);
            (0..=nx).map(|i| (s.u.get(i, j) - exact).abs() / peak).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        steady && worst <= 0.02 && elapsed < Duration::from_secs(60),
        format!(
            "{ny} cells across, steady after {} steps, max error {:.2e} of peak, {:.1} s",
            diags.len(),
            worst,
            elapsed.as_secs_f64()
        ),
    )
}

/// Two 100 nm pores in a 1.5 μm box with walls on every side.
fn closed_box() -> SimulationConfig {
    let mut cfg = SimulationConfig::default();
    cfg.domain.width = 1.5e-6;
    cfg.domain.liquid_height = 0.75e-6;
    cfg.grid.nx = 96;
    cfg.grid.ny = 50;
    cfg.pores = equidistant_pores(cfg.domain.width, 2, 100e-9);
    cfg.fluids.evaporation_rate = 0.0;
    cfg.run.viscous_scheme = ViscousScheme::Implicit;
    cfg.run.steady_tol = 0.0;
    cfg
}

fn vof_conservation(div: &mut Divergence) -> Outcome {
    let mut cfg = closed_box();
    cfg.run.steps = 1000;
    let out = run_simulation(&cfg, None).expect("closed-box run");
    div.add(&out.diagnostics);
    let s = &out.summary;
    let drift = rel(s.final_liquid_volume, s.initial_liquid_volume);
    outcome(
        out.diagnostics.len() == 1000 && drift <= 1e-3,
        format!("{} steps, relative volume drift {drift:.2e}", out.diagnostics.len()),
    )
}

fn symmetry(div: &mut Divergence) -> Outcome {
    let mut cfg = closed_box();
    cfg.run.steps = 500;
    let out = run_simulation(&cfg, None).expect("symmetric run");
    div.add(&out.diagnostics);
    let a = out.final_snapshot.mirror_asymmetry();
    outcome(
        out.diagnostics.len() == 500 && a <= 1e-10,
        format!("{} steps, asymmetry {a:.2e}", out.diagnostics.len()),
    )
}

fn flow_structure(div: &mut Divergence) -> Outcome {
    let mut cfg = SimulationConfig::with_pores(2, 100e-9);
    cfg.grid.nx = 320;
    cfg.grid.ny = 162;
    cfg.run.viscous_scheme = ViscousScheme::Implicit;
    cfg.run.steps = 200;
    cfg.run.steady_tol = 0.0;
    let out = run_simulation(&cfg, None).expect("two-pore run");
    div.add(&out.diagnostics);
    let a = analyse_field(&cfg, &out.final_snapshot, "final", false).expect("analysis");
    let s = &a.summary;
    let (b, c) = (s.boundary_mean_speed.unwrap_or(0.0), s.central_mean_speed.unwrap_or(0.0));
    let faster_near_boundary = b > c;
    let pairs = s.vortex_pairs >= 1;
    outcome(
        faster_near_boundary && pairs,
        format!(
            "{} steps: boundary-line mean {b:.3e} m/s vs central {c:.3e} m/s ({}); {} cores, {} pairs ({})",
            out.diagnostics.len(),
            if faster_near_boundary { "ok" } else { "not greater" },
            s.vortex_cores.len(),
            s.vortex_pairs,
            if pairs { "ok" } else { "no pair" }
        ),
    )
}

fn form(s: &str) -> InteractionForm {
    s.parse().expect("interaction form")
}

fn critical_velocity_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for rec in fixture("critical_velocity.csv").records() {
        let r = rec.unwrap();
        let f = |k: usize| r[k].parse::<f64>().unwrap();
        let model = InteractionModel {
            form: form(&r[0]),
            strength: f(3),
            range: f(4),
        };
        let params = LandauParams {
            mass: f(1),
            number_density: f(2),
            p_c: f(5),
            tau: r[6].parse().unwrap(),
        };
        worst = worst.max(rel(critical_velocity(&params, &model).unwrap(), f(7)));
        rows += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_free: f64 = 0.0;
    for _ in 0..1000 {
        let params = LandauParams {
            mass: 10f64.powf(rng.gen_range(-30.0..-24.0)),
            number_density: 10f64.powf(rng.gen_range(20.0..30.0)),
            p_c: 10f64.powf(rng.gen_range(-34.0..-24.0)),
            tau: rng.gen_range(1..5),
        };
        let model = InteractionModel {
            form: if rng.gen() { InteractionForm::Gaussian } else { InteractionForm::TopHat },
            strength: 0.0,
            range: 10f64.powf(rng.gen_range(-11.0..-8.0)),
        };
        let v = critical_velocity(&params, &model).unwrap();
        worst_free = worst_free.max(rel(v, params.p_c / (2.0 * params.mass)));
    }
    outcome(
        rows == 1000 && worst <= 1e-12 && worst_free <= 1e-15,
        format!("{rows} reference draws, worst relative error {worst:.2e}; g = 0 worst {worst_free:.2e}"),
    )
}

fn condensate_oracle() -> Outcome {
    let (mut rows, mut mismatches, mut near) = (0, 0, 0);
    for rec in fixture("criterion.csv").records() {
        let r = rec.unwrap();
        let f = |k: usize| r[k].parse::<f64>().unwrap();
        let model = InteractionModel {
            form: form(&r[0]),
            strength: f(3),
            range: f(4),
        };
        let params = LandauParams {
            mass: f(1),
            number_density: f(2),
            p_c: f(5),
            tau: 1,
        };
        let expected: bool = r[8].parse().unwrap();
        let res = condensate_criterion(f(6), &params, &model);
        if res.satisfied != expected {
            mismatches += 1;
        }
        if rel(f(6) * f(6), f(7)) <= 1e-12 {
            near += 1;
        }
        rows += 1;
    }
    outcome(
        rows == 1000 && mismatches == 0 && near > 0,
        format!("{rows} reference draws ({near} within 1e-12 of the threshold), {mismatches} flag mismatches"),
    )
}

fn sweep_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut decreasing, mut asymptote_checks) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let mass = 10f64.powf(rng.gen_range(-27.0..-25.0));
        let rho = 10f64.powf(rng.gen_range(24.0..28.0));
        let p_c = 10f64.powf(rng.gen_range(-30.0..-27.0));
        let tau = rng.gen_range(1..4u32);
        // keep τ p_c b / ħ ≤ 0.05 so the interaction is flat at the probed momentum
        let s_max: f64 = 0.05;
        let range = s_max * porefluid::constants::HBAR / (tau as f64 * p_c) * rng.gen_range(0.01..1.0);
        let params = LandauParams {
            mass,
            number_density: rho,
            p_c,
            tau,
        };
        let model = InteractionModel {
            form: InteractionForm::Gaussian,
            strength: 0.0,
            range,
        };
        let kinetic = p_c / (2.0 * mass);
        let g_top = 1e6 * kinetic * kinetic * mass / rho;
        let mut gs: Vec<f64> = (0..64).map(|_| g_top * rng.gen::<f64>().powi(3)).collect();
        gs.push(0.0);
        gs.sort_by(f64::total_cmp);
        let curve = sweep_critical_velocity(&params, &model, &gs).unwrap();
        if curve.windows(2).any(|w| w[1].1 < w[0].1) {
            decreasing += 1;
        }
        for &(g, v) in &curve {
            if rho * g / mass >= 1e4 * kinetic * kinetic {
                asymptote_checks += 1;
                worst = worst.max(rel(v, (rho * g / mass).sqrt()));
            }
        }
    }
    outcome(
        decreasing == 0 && asymptote_checks > 0 && worst <= 0.01,
        format!(
            "200 sweeps, {decreasing} non-monotone; {asymptote_checks} strong-coupling points, worst asymptote deviation {worst:.2e}"
        ),
    )
}

fn dispersion_duality() -> Outcome {
    let tables: [(&str, fn(f64) -> f64); 3] = [
        ("capillary-gravity", |k| (9.81 / k + 0.072 / 1000.0 * k).sqrt()),
        ("Bogoliubov", |k| (1.0 + 0.25 * k * k).sqrt()),
        ("power law", |k| 0.3 / k.sqrt() + 0.1 * k),
    ];
    let mut worst: f64 = 0.0;
    for (_, vp) in tables {
        let k: Vec<(f64, f64)> = (0..1000)
            .map(|i| {
                let k = 1.0 + 0.5 * i as f64 / 999.0;
                (k, vp(k))
            })
            .collect();
        let from_k = group_velocity_from_k(&k).unwrap();
        let l: Vec<(f64, f64)> = k.iter().rev().map(|&(k, v)| (2.0 * PI / k, v)).collect();
        let from_l = group_velocity_from_lambda(&l).unwrap();
        for (a, b) in from_k.iter().zip(from_l.iter().rev()) {
            worst = worst.max(rel(b.1, a.1));
        }
    }
    let constant: Vec<(f64, f64)> = (0..1000).map(|i| (1.0 + i as f64 * 1e-3, 3.7)).collect();
    let flat_k = group_velocity_from_k(&constant).unwrap().iter().all(|p| p.1 == 3.7);
    let flat_l = group_velocity_from_lambda(&constant).unwrap().iter().all(|p| p.1 == 3.7);
    outcome(
        worst <= 1e-6 && flat_k && flat_l,
        format!(
            "3 tables of 1000 points, worst disagreement {worst:.2e}; constant phase velocity exact: {}",
            flat_k && flat_l
        ),
    )
}

fn de_broglie() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let e0 = 10f64.powf(rng.gen_range(-16.0..-8.0));
        let ke = e0 * 10f64.powf(rng.gen_range(-12.0..6.0));
        worst = worst.max(rel(de_broglie_via_momentum(ke, e0).unwrap(), de_broglie_wavelength(ke, e0).unwrap()));
    }
    let mut worst_nr: f64 = 0.0;
    for _ in 0..1000 {
        let e0 = 10f64.powf(rng.gen_range(-16.0..-8.0));
        let ke = e0 * 10f64.powf(rng.gen_range(-10.0..-4.0));
        let exact = de_broglie_wavelength(ke, e0).unwrap();
        worst_nr = worst_nr.max(rel(de_broglie_nonrelativistic(ke, e0), exact));
    }
    // 1 eV electron
    let electron = de_broglie_wavelength(ELECTRON_VOLT, 510_998.95 * ELECTRON_VOLT).unwrap();
    outcome(
        worst <= 1e-12 && worst_nr <= 1e-3,
        format!(
            "1000 draws, routes differ by {worst:.2e}; nonrelativistic limit off by {worst_nr:.2e}; 1 eV electron {electron:.5e} m"
        ),
    )
}

fn bose_statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_n: f64 = 0.0;
    for _ in 0..50 {
        let grid = build_mode_grid(10f64.powf(rng.gen_range(-7.0..-5.0)), rng.gen_range(2..12), 2.99e-26).unwrap();
        let t = 10f64.powf(rng.gen_range(-9.0..-5.0));
        let n = 10f64.powf(rng.gen_range(0.0..6.0));
        let mu = solve_chemical_potential(&grid, n, t).unwrap();
        let sum: f64 = occupations(&grid, &mu, t).iter().sum();
        worst_n = worst_n.max(rel(sum, n));
    }
    let single = ModeGrid2D::from_energies(vec![0.0]);
    let mut worst_q: f64 = 0.0;
    for _ in 0..200 {
        let t = 10f64.powf(rng.gen_range(-3.0..3.0));
        let n = 10f64.powf(rng.gen_range(-3.0..8.0));
        let mu = solve_chemical_potential(&single, n, t).unwrap();
        worst_q = worst_q.max(rel(mu.value, -BOLTZMANN * t * (1.0 / n).ln_1p()));
    }
    let one = occupation_reduced(LN_2).unwrap();
    outcome(
        worst_n <= 1e-9 && worst_q <= 1e-9 && one == 1.0,
        format!("particle number off by {worst_n:.2e}; single-mode potential off by {worst_q:.2e}; occupation at ln 2 = {one}"),
    )
}

fn fock() -> Outcome {
    let mut bad = Vec::new();
    for n_max in 1..=40 {
        let f = ladder_operators(n_max).unwrap();
        let number: Vec<Option<i64>> = f.number_operator().diagonal().iter().map(|s| s.as_integer()).collect();
        let expected: Vec<Option<i64>> = (0..=n_max as i64).map(Some).collect();
        let comm: Vec<Option<i64>> = f.commutator().diagonal().iter().map(|s| s.as_integer()).collect();
        let mut expected_comm: Vec<Option<i64>> = vec![Some(1); n_max];
        expected_comm.push(Some(-(n_max as i64)));
        if number != expected || comm != expected_comm {
            bad.push(n_max);
        }
    }
    outcome(
        bad.is_empty(),
        format!("truncations 1..=40, exact mismatches at {bad:?}"),
    )
}

fn closure(r: f64, step: f64) -> f64 {
    let field = AnalyticField {
        bounds: porefluid::geometry::Region {
            x0: -2.0 * r,
            y0: -2.0 * r,
            x1: 2.0 * r,
            y1: 2.0 * r,
        },
        f: |x: f64, y: f64| [-y, x],
    };
    let s = trace_streamline(&field, [r, 0.0], step, 2.0 * PI * r, 0.0).unwrap();
    assert_eq!(s.terminal_reason, Termination::MaxLength);
    let end = s.vertices.last().unwrap();
    (end[0] - r).hypot(end[1])
}

fn streamline_order() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    for r in [1e-7, 1.0, 1e3] {
        worst = worst.max(closure(r, r / 100.0) / r);
        // halvings above the roundoff plateau
        for n in [5.0, 10.0, 20.0] {
            min_ratio = min_ratio.min(closure(r, r / n) / closure(r, r / (2.0 * n)));
        }
    }
    outcome(
        worst <= 1e-6 && min_ratio >= 8.0,
        format!("closure error at step r/100 {worst:.2e}·r; smallest reduction per halving {min_ratio:.1}x"),
    )
}

fn pipeline_layouts(div: &mut Divergence) -> Outcome {
    let start = Instant::now();
    let mut entries = Vec::new();
    for d in [30e-9, 70e-9] {
        for n in [2, 3, 4] {
            let mut cfg = SimulationConfig::default();
            cfg.domain.width = 3e-6;
            cfg.domain.liquid_height = 1.5e-6;
            cfg.grid.nx = 320;
            cfg.grid.ny = 162;
            cfg.pores = equidistant_pores(cfg.domain.width, n, d);
            cfg.run.viscous_scheme = ViscousScheme::Implicit;
            cfg.run.steps = 60;
            cfg.run.steady_tol = 0.0;
            entries.push(BatchEntry {
                id: format!("p{n}_d{}nm", (d * 1e9).round()),
                config: cfg,
            });
        }
    }
    assert!(entries.iter().all(|e| e.config.grid.nx <= 1024 && e.config.grid.ny <= 512));
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut reports = Vec::new();
    let mut failures = 0;
    for dir in &dirs {
        let b = run_batch(&entries, dir.path(), 1, false).expect("batch");
        failures += b.runs.iter().filter(|r| r.1.is_err()).count();
        let csv = std::fs::read(dir.path().join("report.csv")).unwrap();
        reports.push((b.report, csv));
    }
    for e in &entries {
        let s: RunSummary = io::read_json(&dirs[0].path().join(&e.id).join(SUMMARY_FILE)).unwrap();
        div.add_summary(&s);
    }
    let elapsed = start.elapsed();
    let rows = &reports[0].0.rows;
    let complete = rows.len() == entries.len() && rows.iter().all(|r| r.satisfied.is_some() && r.note.is_none());
    let identical = reports[0].0.rows == reports[1].0.rows && reports[0].1 == reports[1].1;
    outcome(
        failures == 0 && complete && identical && elapsed <= Duration::from_secs(30 * 60),
        format!(
            "{} rows, complete: {complete}, rerun bit-identical: {identical}, {:.0} s for both passes",
            rows.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut div = Divergence::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} [{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    if run(1) {
        report(1, "Poiseuille channel", poiseuille(&mut div));
    }
    if run(3) {
        report(3, "liquid volume conservation", vof_conservation(&mut div));
    }
    if run(4) {
        report(4, "mirror symmetry", symmetry(&mut div));
    }
    if run(5) {
        report(5, "two-pore flow structure", flow_structure(&mut div));
    }
    if run(6) {
        report(6, "critical velocity", critical_velocity_oracle());
    }
    if run(7) {
        report(7, "condensate momentum criterion", condensate_oracle());
    }
    if run(8) {
        report(8, "interaction-strength sweep", sweep_property());
    }
    if run(9) {
        report(9, "group velocity from k and from wavelength", dispersion_duality());
    }
    if run(10) {
        report(10, "matter wavelength routes", de_broglie());
    }
    if run(11) {
        report(11, "Bose occupation", bose_statistics());
    }
    if run(12) {
        report(12, "ladder operators", fock());
    }
    if run(13) {
        report(13, "streamline integrator order", streamline_order());
    }
    if run(14) {
        report(14, "pipeline over pore layouts", pipeline_layouts(&mut div));
    }
    if run(2) {
        if div.steps == 0 {
            let mut cfg = closed_box();
            cfg.run.steps = 100;
            div.add(&run_simulation(&cfg, None).expect("closed-box run").diagnostics);
        }
        let d = &div;
        report(
            2,
            "projection divergence",
            outcome(
                d.steps > 0 && d.violations == 0,
                format!(
                    "{} steps checked, {} above bound, worst divergence/bound {:.2e}",
                    d.steps, d.violations, d.worst_ratio
                ),
            ),
        );
    }

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
