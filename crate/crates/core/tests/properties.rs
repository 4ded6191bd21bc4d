use std::f64::consts::PI;

use proptest::prelude::*;

use porefluid::geometry::{equidistant_pores, CellKind, Region};
use porefluid::io::{self, RunManifest};
use porefluid::landau::{
    condensate_criterion, critical_velocity, sweep_critical_velocity, InteractionForm, InteractionModel, LandauParams,
};
use porefluid::quantum::dispersion::{group_velocity_from_k, group_velocity_from_lambda};
use porefluid::quantum::modes::{build_mode_grid, occupations, solve_chemical_potential};
use porefluid::quantum::waves::{de_broglie_via_momentum, de_broglie_wavelength};
use porefluid::trace::{detect_vortices, histogram_mode, trace_streamline, AnalyticField, VelocityField};
use porefluid::{parse_config_str, CellMask, Field, GridSpec, SimulationConfig, Snapshot, SolverState};

fn config() -> impl Strategy<Value = SimulationConfig> {
    (
        1e-6..2e-5f64,
        0.3..0.7f64,
        16usize..700,
        18usize..400,
        1usize..5,
        0.01..0.2f64,
        (-0.45..0.45f64, 0.0..3.0f64, 0u64..10_000, any::<bool>()),
        (1e-27..1e-25f64, 1e-60..1e-50f64, 1u32..4),
    )
        .prop_map(|(w, frac, nx, ny, n, d_frac, run, landau)| {
            let mut cfg = SimulationConfig::default();
            cfg.domain.width = w;
            cfg.domain.liquid_height = w * frac;
            cfg.grid.nx = nx;
            cfg.grid.ny = ny;
            cfg.pores = equidistant_pores(w, n, w * d_frac / n as f64);
            cfg.run.meniscus_bulge = run.0;
            cfg.run.initial_swirl = run.1;
            cfg.run.steps = run.2;
            cfg.grid.periodic_x = run.3;
            cfg.landau.mass = landau.0;
            cfg.landau.strength = landau.1;
            cfg.landau.tau = landau.2;
            cfg
        })
}

fn state(nx: usize, ny: usize, values: &[f64]) -> Snapshot {
    let g = GridSpec::new(nx, ny, 1e-6, 0.5e-6);
    let mut s = SolverState::at_rest(g);
    let mut k = 0;
    let mut next = || {
        k += 1;
        values[k % values.len()] * (k as f64).sin()
    };
    s.u = Field::from_fn(nx + 1, ny, |_, _| next());
    s.v = Field::from_fn(nx, ny + 1, |_, _| next());
    s.p = Field::from_fn(nx, ny, |_, _| next());
    s.gamma = Field::from_fn(nx, ny, |_, _| next().abs().min(1.0));
    s.step = values.len() as u64;
    s.t = values[0].abs();
    let cells = (0..nx * ny)
        .map(|k| match k % 7 {
            0 => CellKind::Solid,
            1 | 2 => CellKind::Gas,
            _ => CellKind::Liquid,
        })
        .collect();
    Snapshot::new(s, CellMask::from_cells(nx, ny, cells).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(cfg in config()) {
        let text = cfg.to_toml();
        let once = parse_config_str(&text);
        // layouts the validator rejects still serialise; only valid ones must round-trip
        if let Ok(back) = once {
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn vtk_round_trip_is_bitwise(nx in 2usize..12, ny in 2usize..12, values in prop::collection::vec(-1e3..1e3f64, 1..20)) {
        let snap = state(nx, ny, &values);
        let bytes = io::vtk_bytes(&snap).unwrap();
        let back = io::parse_vtk(&bytes).unwrap();
        prop_assert_eq!(&back, &snap);
        prop_assert_eq!(io::vtk_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn manifest_digests_verify(contents in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..64), 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("cfg");
        for (k, c) in contents.iter().enumerate() {
            let name = format!("f{k}.bin");
            std::fs::write(dir.path().join(&name), c).unwrap();
            m.record(dir.path(), &name, "sample").unwrap();
        }
        prop_assert!(m.verify(dir.path()).is_empty());
        std::fs::write(dir.path().join("f0.bin"), [contents[0].as_slice(), b"x"].concat()).unwrap();
        prop_assert_eq!(m.verify(dir.path()).len(), 1);
    }

    #[test]
    fn critical_velocity_grows_with_strength(
        log_m in -27.0..-25.0f64,
        log_rho in 20.0..28.0f64,
        log_p in -33.0..-26.0f64,
        log_b in -11.0..-8.0f64,
        tau in 1u32..4,
        mut gs in prop::collection::vec(0.0..1e-48f64, 2..30),
    ) {
        gs.sort_by(f64::total_cmp);
        let params = LandauParams { mass: 10f64.powf(log_m), number_density: 10f64.powf(log_rho), p_c: 10f64.powf(log_p), tau };
        let model = InteractionModel { form: InteractionForm::Gaussian, strength: 0.0, range: 10f64.powf(log_b) };
        let curve = sweep_critical_velocity(&params, &model, &gs).unwrap();
        prop_assert!(curve.windows(2).all(|w| w[1].1 >= w[0].1));
        prop_assert!(curve[0].1 >= params.p_c / (2.0 * params.mass) * (1.0 - 1e-15));
    }

    #[test]
    fn criterion_is_strict(log_m in -27.0..-25.0f64, log_p in -33.0..-26.0f64, top_hat in any::<bool>()) {
        let params = LandauParams { mass: 10f64.powf(log_m), number_density: 1e25, p_c: 10f64.powf(log_p), tau: 1 };
        let model = InteractionModel {
            form: if top_hat { InteractionForm::TopHat } else { InteractionForm::Gaussian },
            strength: 1e-55,
            range: 1e-10,
        };
        let threshold = condensate_criterion(0.0, &params, &model).threshold;
        let q = threshold.sqrt();
        let r = condensate_criterion(q, &params, &model);
        prop_assert_eq!(r.satisfied, q * q > r.threshold);
        prop_assert_eq!(r.satisfied, r.margin > 0.0);
        let above = condensate_criterion(q * (1.0 + 1e-9), &params, &model);
        prop_assert!(above.satisfied);
        let below = condensate_criterion(q * (1.0 - 1e-9), &params, &model);
        prop_assert!(!below.satisfied);
    }

    #[test]
    fn negative_radicand_is_refused_not_rounded(log_p in -33.0..-30.0f64) {
        // top-hat interaction past its first zero is negative
        let params = LandauParams { mass: 3e-26, number_density: 1e28, p_c: 10f64.powf(log_p), tau: 1 };
        let s = 6.0;
        let model = InteractionModel {
            form: InteractionForm::TopHat,
            strength: 1e-45,
            range: s * porefluid::constants::HBAR / params.p_c,
        };
        prop_assert!(critical_velocity(&params, &model).is_err());
    }

    #[test]
    fn wavelength_routes_agree(log_e0 in -16.0..-8.0f64, log_ratio in -14.0..8.0f64) {
        let e0 = 10f64.powf(log_e0);
        let ke = e0 * 10f64.powf(log_ratio);
        let a = de_broglie_wavelength(ke, e0).unwrap();
        let b = de_broglie_via_momentum(ke, e0).unwrap();
        prop_assert!(((a - b) / a).abs() <= 1e-12);
    }

    #[test]
    fn constant_phase_velocity_is_its_own_group_velocity(v in 1e-3..1e3f64, k0 in 0.1..10.0f64, n in 3usize..200) {
        let t: Vec<(f64, f64)> = (0..n).map(|i| (k0 * (1.0 + 0.01 * i as f64), v)).collect();
        prop_assert!(group_velocity_from_k(&t).unwrap().iter().all(|p| p.1 == v));
        let l: Vec<(f64, f64)> = t.iter().rev().map(|&(k, v)| (2.0 * PI / k, v)).collect();
        prop_assert!(group_velocity_from_lambda(&l).unwrap().iter().all(|p| p.1 == v));
    }

    #[test]
    fn chemical_potential_recovers_the_particle_number(
        log_l in -7.0..-5.0f64,
        n_max in 1u32..10,
        log_t in -9.0..-4.0f64,
        log_n in -1.0..7.0f64,
    ) {
        let grid = build_mode_grid(10f64.powf(log_l), n_max, 2.99e-26).unwrap();
        let t = 10f64.powf(log_t);
        let n = 10f64.powf(log_n);
        let mu = solve_chemical_potential(&grid, n, t).unwrap();
        prop_assert!(mu.value < grid.ground_energy());
        let occ = occupations(&grid, &mu, t);
        prop_assert!(occ.iter().all(|&o| o >= 0.0));
        prop_assert!(occ.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!((occ.iter().sum::<f64>() / n - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn streamline_vertices_stay_close(x0 in -0.9..0.9f64, y0 in -0.9..0.9f64, step in 0.001..0.1f64, a in -2.0..2.0f64) {
        let field = AnalyticField {
            bounds: Region { x0: -1.0, y0: -1.0, x1: 1.0, y1: 1.0 },
            f: move |x: f64, y: f64| [1.0 + a * y, (PI * x).sin()],
        };
        let s = trace_streamline(&field, [x0, y0], step, 3.0, 0.0).unwrap();
        prop_assert!(s.vertices.windows(2).all(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]) <= step * (1.0 + 1e-12)));
        let b = field.bounds();
        prop_assert!(s.vertices.iter().all(|p| p[0] >= b.x0 && p[0] <= b.x1 && p[1] >= b.y0 && p[1] <= b.y1));
        prop_assert!(s.arc_length() <= 3.0 + 1e-9);
    }

    #[test]
    fn histogram_mode_lies_in_the_data_range(speeds in prop::collection::vec(0.0..1e-6f64, 1..400)) {
        let e = histogram_mode(&speeds).unwrap();
        let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = speeds.iter().copied().fold(0.0, f64::max);
        let w = e.bin_width;
        prop_assert!(e.speed >= lo - w && e.speed <= hi + w, "{} not in [{lo}, {hi}]", e.speed);
    }

    #[test]
    fn vortex_senses_follow_rotation(cw in any::<bool>(), omega in 0.1..10.0f64) {
        let sign = if cw { -1.0 } else { 1.0 };
        let g = GridSpec::new(41, 41, 1.0, 1.0);
        let snap = Snapshot::from_velocity_fn(g, |x, y| {
            let (dx, dy) = (x - 0.5, y - 0.5);
            let r2 = dx * dx + dy * dy;
            let f = sign * omega * (-r2 / 0.02).exp();
            [-f * dy, f * dx]
        });
        let cores = detect_vortices(&snap, 1.0, 0.2);
        prop_assert_eq!(cores.len(), 1);
        prop_assert_eq!(cores[0].peak_vorticity > 0.0, !cw);
    }
}
