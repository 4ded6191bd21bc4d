use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use porefluid::constants::ELECTRON_VOLT;
use porefluid::geometry::equidistant_pores;
use porefluid::io::{self, CriterionRow};
use porefluid::pipeline::{self, BatchEntry, PipelineOptions, Stage};
use porefluid::quantum;
use porefluid::{parse_config, validate_config, Error, SimulationConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Two-phase nanopore flow simulation, flow sampling and criterion analysis.
#[derive(Debug, Parser)]
#[command(name = "porefluid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file (TOML). `sweep` and `report` accept several.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "porefluid-out")]
    out: PathBuf,

    /// Configurations processed concurrently by `sweep` and `report`.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,

    /// Skip stages that already completed; continue interrupted runs.
    #[arg(long, global = true)]
    resume: bool,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a configuration and list every violation.
    Validate,
    /// Run the solver, writing VTK snapshots, a checkpoint and a run summary.
    Simulate,
    /// Sample the final field on the probe lines, trace streamlines, find vortices.
    Sample {
        /// External VTK velocity field to analyse instead of the solver output.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Evaluate the critical velocity and condensate criterion.
    Landau {
        /// Sample table CSVs to evaluate directly; without them the sample
        /// stage output in the output directory is used.
        #[arg(long)]
        samples: Vec<PathBuf>,
    },
    /// Standalone calculators; without a verb, the configured quantum stage.
    Quantum {
        #[command(subcommand)]
        verb: Option<QuantumVerb>,
    },
    /// Full pipeline over pore counts and diameters derived from one base configuration.
    Sweep {
        /// Pore counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        pores: Vec<usize>,
        /// Pore diameters [m], comma separated.
        #[arg(long, value_delimiter = ',')]
        diameters: Vec<f64>,
    },
    /// Full pipeline for each configuration and the merged report.
    Report,
}

#[derive(Debug, Subcommand)]
enum QuantumVerb {
    /// Relativistic de Broglie wavelength.
    Debroglie {
        /// Kinetic energy, in joules or with an `eV` suffix.
        #[arg(long)]
        ke: String,
        /// Rest energy, in joules or with an `eV` suffix.
        #[arg(long)]
        e0: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Group velocity from a phase-velocity table with header `k,v_p` or `lambda,v_p`.
    Dispersion {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Box modes, chemical potential and occupations.
    Modes {
        /// Box side [m].
        #[arg(long = "L")]
        length: f64,
        #[arg(long)]
        nmax: u32,
        /// Particle mass [kg].
        #[arg(long)]
        mass: f64,
        /// Particle count.
        #[arg(long = "N")]
        particles: f64,
        /// Temperature [K].
        #[arg(long = "T")]
        temperature: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Truncated ladder operators.
    Fock {
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let validation = e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(Error::Validation(_) | Error::Parse { .. } | Error::Resolution { .. })
        )
    });
    if validation {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Configuration id: the file stem.
fn config_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "config".to_string())
}

fn one_config(c: &Common) -> Result<(String, SimulationConfig)> {
    match c.config.as_slice() {
        [path] => Ok((config_id(path), parse_config(path)?)),
        [] => bail!("--config is required"),
        _ => bail!("this command takes exactly one --config"),
    }
}

fn stage(c: &Common, stages: &[Stage], field: Option<PathBuf>) -> Result<()> {
    let (id, cfg) = one_config(c)?;
    let mut opts = PipelineOptions::new(&c.out, stages);
    opts.resume = c.resume;
    opts.field = field;
    opts.config_id = id;
    let outcome = pipeline::run_pipeline(&cfg, &opts)?;
    for s in &outcome.skipped {
        eprintln!("{s}: already complete");
    }
    if let Some(report) = outcome.report {
        print_json(&report, None)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match cli.command {
        Command::Validate => validate(c),
        Command::Simulate => stage(c, &[Stage::Simulate], None),
        Command::Sample { field } => stage(c, &[Stage::Sample], field),
        Command::Landau { samples } if samples.is_empty() => stage(c, &[Stage::Landau], None),
        Command::Landau { samples } => landau_tables(c, &samples),
        Command::Quantum { verb: None } => stage(c, &[Stage::Quantum], None),
        Command::Quantum { verb: Some(v) } => quantum_verb(v),
        Command::Sweep { pores, diameters } => sweep(c, &pores, &diameters),
        Command::Report => report(c),
    }
}

fn validate(c: &Common) -> Result<()> {
    if c.config.is_empty() {
        bail!("--config is required");
    }
    let mut invalid = false;
    for path in &c.config {
        match parse_config(path) {
            Ok(cfg) => {
                let r = validate_config(&cfg);
                debug_assert!(r.is_valid());
                println!("{}: valid ({} pores, {}×{} grid)", path.display(), cfg.pores.len(), cfg.grid.nx, cfg.grid.ny);
            }
            Err(Error::Validation(violations)) => {
                invalid = true;
                println!("{}: invalid", path.display());
                for v in violations {
                    println!("  - {v}");
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    if invalid {
        return Err(Error::Validation(vec!["configuration is invalid".into()]).into());
    }
    Ok(())
}

fn landau_tables(c: &Common, samples: &[PathBuf]) -> Result<()> {
    let (_, cfg) = one_config(c)?;
    std::fs::create_dir_all(&c.out).with_context(|| format!("creating {}", c.out.display()))?;
    let mut rows = Vec::new();
    for path in samples {
        let id = config_id(path);
        let tables = io::read_samples(io::open(path)?)?;
        let summary = pipeline::evaluate_landau(&cfg, &tables).with_context(|| format!("evaluating {}", path.display()))?;
        rows.push(CriterionRow::new(id.clone(), &summary.criterion.result));
        let name = if samples.len() == 1 {
            pipeline::SWEEP_FILE.to_string()
        } else {
            format!("sweep_{id}.csv")
        };
        io::write_file(&c.out.join(name), |w| io::write_sweep(&summary.sweep, w))?;
    }
    io::write_file(&c.out.join(pipeline::CRITERION_FILE), |w| io::write_criterion_rows(&rows, w))?;
    io::write_criterion_rows(&rows, std::io::stdout().lock())?;
    Ok(())
}

fn sweep(c: &Common, pores: &[usize], diameters: &[f64]) -> Result<()> {
    let (base_id, base) = one_config(c)?;
    let counts = if pores.is_empty() { vec![base.pores.len()] } else { pores.to_vec() };
    let mut entries = Vec::new();
    for &n in &counts {
        let ds: Vec<Option<f64>> = if diameters.is_empty() {
            vec![None]
        } else {
            diameters.iter().copied().map(Some).collect()
        };
        for d in ds {
            let mut cfg = base.clone();
            let d = match d.or_else(|| base.pores.first().map(|p| p.diameter)) {
                Some(d) => d,
                None => bail!("no pore diameter given and the base configuration has no pores"),
            };
            cfg.pores = equidistant_pores(cfg.domain.width, n, d);
            let report = validate_config(&cfg);
            if !report.is_valid() {
                return Err(Error::Validation(report.violations)).with_context(|| format!("{n} pores of {d:e} m"));
            }
            entries.push(BatchEntry {
                id: format!("{base_id}_p{n}_d{}nm", (d * 1e9).round()),
                config: cfg,
            });
        }
    }
    batch(c, &entries)
}

fn report(c: &Common) -> Result<()> {
    if c.config.is_empty() {
        bail!("--config is required");
    }
    let entries = c
        .config
        .iter()
        .map(|p| {
            Ok(BatchEntry {
                id: config_id(p),
                config: parse_config(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    batch(c, &entries)
}

fn batch(c: &Common, entries: &[BatchEntry]) -> Result<()> {
    let outcome = pipeline::run_batch(entries, &c.out, c.workers, c.resume)?;
    print_json(&outcome.report, None)?;
    let failed: Vec<String> = outcome
        .runs
        .iter()
        .filter_map(|(id, r)| r.as_ref().err().map(|e| format!("{id}: {e}")))
        .collect();
    if !failed.is_empty() {
        bail!("{} configuration(s) failed:\n  {}", failed.len(), failed.join("\n  "));
    }
    Ok(())
}

/// `1.5eV`, `2e-19`, `2e-19J`.
fn parse_energy(s: &str) -> Result<f64> {
    let t = s.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("eV") {
        (n, ELECTRON_VOLT)
    } else if let Some(n) = t.strip_suffix('J') {
        (n, 1.0)
    } else {
        (t, 1.0)
    };
    let v: f64 = num.trim().parse().map_err(|_| anyhow!("cannot read energy `{s}`"))?;
    Ok(v * scale)
}

fn sink(output: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match output {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn print_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let mut w = sink(output)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn quantum_verb(v: QuantumVerb) -> Result<()> {
    match v {
        QuantumVerb::Debroglie { ke, e0, output } => {
            let (k, e0) = (parse_energy(&ke)?, parse_energy(&e0)?);
            let value = serde_json::json!({
                "kinetic_energy_j": k,
                "rest_energy_j": e0,
                "wavelength_m": quantum::de_broglie_wavelength(k, e0)?,
                "wavelength_via_momentum_m": quantum::de_broglie_via_momentum(k, e0)?,
                "nonrelativistic_wavelength_m": quantum::de_broglie_nonrelativistic(k, e0),
            });
            print_json(&value, output.as_deref())
        }
        QuantumVerb::Dispersion { input, output } => {
            let (names, rows) = io::read_pairs(io::open(&input)?)?;
            let first = names[0].to_ascii_lowercase();
            let (label, curve) = match first.as_str() {
                "k" => ("k", quantum::group_velocity_from_k(&rows)?),
                "lambda" | "λ" => ("lambda", quantum::group_velocity_from_lambda(&rows)?),
                other => bail!("first column must be `k` or `lambda`, found `{other}`"),
            };
            #[derive(serde::Serialize)]
            struct Row {
                x: f64,
                v_p: f64,
                v_g: f64,
            }
            let out: Vec<Row> = rows
                .iter()
                .zip(&curve)
                .map(|(&(x, v_p), &(_, v_g))| Row { x, v_p, v_g })
                .collect();
            let mut w = sink(output.as_deref())?;
            writeln!(w, "{label},v_p,v_g")?;
            let mut buf = Vec::new();
            io::tables::write_rows(&out, &mut buf)?;
            // replace the generic header with the input's abscissa name
            let body = buf.splitn(2, |&b| b == b'\n').nth(1).unwrap_or_default();
            w.write_all(body)?;
            w.flush()?;
            Ok(())
        }
        QuantumVerb::Modes {
            length,
            nmax,
            mass,
            particles,
            temperature,
            output,
        } => {
            let grid = quantum::build_mode_grid(length, nmax, mass)?;
            let mu = quantum::solve_chemical_potential(&grid, particles, temperature)?;
            let n = quantum::occupations(&grid, &mu, temperature);
            let modes: Vec<_> = grid
                .modes
                .iter()
                .zip(&n)
                .map(|(m, occ)| serde_json::json!({"nx": m.nx, "ny": m.ny, "energy_j": m.energy, "occupation": occ}))
                .collect();
            let value = serde_json::json!({
                "box_length_m": length,
                "mass_kg": mass,
                "particles": particles,
                "temperature_k": temperature,
                "chemical_potential_j": mu.value,
                "ground_gap_j": mu.gap,
                "bisections": mu.bisections,
                "total_occupation": n.iter().sum::<f64>(),
                "condensate_fraction": n[0] / n.iter().sum::<f64>(),
                "modes": modes,
            });
            print_json(&value, output.as_deref())
        }
        QuantumVerb::Fock { nmax, output } => {
            let f = quantum::ladder_operators(nmax)?;
            let render = |m: &quantum::SurdMatrix| -> Vec<Vec<String>> {
                m.rows().map(|r| r.iter().map(ToString::to_string).collect()).collect()
            };
            let value = serde_json::json!({
                "n_max": nmax,
                "annihilation": render(f.annihilation()),
                "creation": render(f.creation()),
                "number_diagonal": f.number_operator().diagonal().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "commutator_diagonal": f.commutator().diagonal().iter().map(ToString::to_string).collect::<Vec<_>>(),
            });
            print_json(&value, output.as_deref())
        }
    }
}
