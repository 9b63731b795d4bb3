use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ripplewave::analysis::{compare_profiles, measure_wave_speed, reproduce_figure, wave_for_measurement, Field, FigureId};
use ripplewave::linstab::{dispersion_table, isotropic_transport_stability};
use ripplewave::ode::{find_steady_states, hopf_sweep, SteadyKind, SweepOptions};
use ripplewave::output::{read_snapshots_csv, write_json, write_rows, write_run, write_spacetime_csv};
use ripplewave::sim::{initial_conditions, simulate_window, InitKind, RunConfig, System};
use ripplewave::waves::{construct_admissible_wave, find_stable_tuples, WaveRequest};
use ripplewave::{DerivedCurves, Error, ModelParams, Result};

#[derive(Parser)]
#[command(name = "ripplewave", version, about = "Traveling waves in an age-structured reversal model")]
struct Cli {
    /// Model JSON (`lambda`, `gamma`, optional `dimensional`).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for noise initial conditions.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the finite-difference simulator.
    Simulate(SimulateArgs),
    /// Space-independent steady states with their stability.
    SteadyStates,
    /// Transport stability of the isotropic state and the dispersion table.
    Stability {
        #[arg(long, default_value_t = 64)]
        n_max: usize,
    },
    /// Bifurcation data over a range of constant aging rates.
    HopfSweep {
        #[arg(long)]
        gamma_from: f64,
        #[arg(long)]
        gamma_to: f64,
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[arg(long, default_value_t = 150.0)]
        t_end: f64,
    },
    /// Stable piecewise-constant wave tuples of the memory-free system.
    Tuples {
        #[arg(long, default_value_t = 0.01)]
        rho_min: f64,
        #[arg(long, default_value_t = 5.0)]
        rho_max: f64,
    },
    /// Admissible traveling wave of the full system.
    ConstructWave {
        #[arg(long)]
        mass: f64,
        #[arg(long, requires = "xi2")]
        xi1: Option<f64>,
        #[arg(long, requires = "xi1")]
        xi2: Option<f64>,
        /// Use the numerical path even when the closed form applies.
        #[arg(long)]
        numeric: bool,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Wave speed and comoving profile from saved snapshots.
    Measure {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, default_value = "u")]
        field: String,
        /// Ignore snapshots before this time.
        #[arg(long, default_value_t = 0.0)]
        from: f64,
    },
    /// Constructed wave against the measured `u` profile of saved snapshots.
    Compare {
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        /// Cells excluded on each side of a jump.
        #[arg(long, default_value_t = 3)]
        exclude: usize,
        #[arg(long)]
        numeric: bool,
    },
    /// Data files behind a figure (fig1, fig2, fig4, fig5).
    Reproduce {
        figure: String,
        /// Directory holding `<figure>.json` to use instead of the bundled config.
        #[arg(long)]
        config_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Run JSON: grid, `t_end`, optional `dt`, scheme, snapshots.
    #[arg(long)]
    sim: PathBuf,
    /// `sine:A[:N]`, `cosine:A[:N]`, `noise:A[:SEED]` or `csv:PATH`.
    #[arg(long, default_value = "sine:0.05")]
    init: String,
    /// Also write `spacetime.csv` with u, u1/u, v, v1/v.
    #[arg(long)]
    spacetime: bool,
    #[arg(long)]
    allow_large_steps: bool,
}

fn model(cli: &Cli) -> Result<ModelParams> {
    let path = cli.model.as_ref().ok_or_else(|| Error::Config("--model is required".into()))?;
    ModelParams::load(path)
}

fn emit_json<T: Serialize + ?Sized>(out: Option<&Path>, name: &str, value: &T) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_json(&dir.join(name), value)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

fn emit_rows<T: Serialize>(out: Option<&Path>, name: &str, rows: &[T]) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write_rows(&dir.join(name), rows)
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SweepCsv {
    gamma: f64,
    d_fixed_points: String,
    stability: String,
    cycle_min_d: Option<f64>,
    cycle_max_d: Option<f64>,
}

#[derive(Serialize)]
struct DispersionCsv {
    k: f64,
    re1: f64,
    re2: f64,
    re3: f64,
    re4: f64,
    im1: f64,
    im2: f64,
    im3: f64,
    im4: f64,
}

#[derive(Serialize)]
struct WaveCsv {
    xi: f64,
    p: f64,
    b: f64,
}

#[derive(Serialize)]
struct ProfileCsv {
    x: f64,
    value: f64,
}

fn snapshots_from(path: &Path, from: f64) -> Result<Vec<ripplewave::sim::FieldState>> {
    let all = read_snapshots_csv(path)?;
    Ok(all.into_iter().filter(|s| s.t >= from).collect())
}

fn run(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.cmd {
        Command::Simulate(args) => {
            let m = model(cli)?;
            let mut rc = RunConfig::load(&args.sim)?;
            rc.allow_large_steps |= args.allow_large_steps;
            let mut kind: InitKind = args.init.parse()?;
            if let (InitKind::Noise { seed, .. }, Some(s)) = (&mut kind, cli.seed) {
                *seed = s;
            }
            let grid = rc.grid()?;
            let init = initial_conditions(&kind, &grid, &m, rc.system)?;
            let cfg = rc.sim_config(&grid);
            let result = simulate_window(&init, &cfg, &m, rc.snapshots_from)?;
            for w in &result.meta.warnings {
                eprintln!("warning: {w}");
            }
            let dir = out.unwrap_or(Path::new("run"));
            write_run(dir, &result)?;
            if args.spacetime {
                let fields: &[Field] = match rc.system {
                    System::Full => &[Field::U, Field::U1OverU, Field::V, Field::V1OverV],
                    System::MemoryFree => &[Field::U, Field::V],
                };
                write_spacetime_csv(&dir.join("spacetime.csv"), &result.snapshots, fields)?;
            }
            eprintln!(
                "{} steps, mass drift {:.3e}, output in {}",
                result.meta.steps,
                result.meta.mass_drift,
                dir.display()
            );
            Ok(())
        }
        Command::SteadyStates => emit_json(out, "steady_states.json", &find_steady_states(&model(cli)?)),
        Command::Stability { n_max } => {
            let m = model(cli)?;
            let report = isotropic_transport_stability(&m, *n_max)?;
            let iso = find_steady_states(&m)
                .into_iter()
                .find(|s| s.kind == SteadyKind::Isotropic)
                .ok_or_else(|| Error::NoResult("no isotropic steady state".into()))?;
            let table: Vec<DispersionCsv> = dispersion_table(&m, &iso, *n_max)?
                .into_iter()
                .map(|p| {
                    let z = |i: usize| p.eigenvalues.get(i).copied().unwrap_or_default();
                    DispersionCsv {
                        k: p.k,
                        re1: z(0).re,
                        re2: z(1).re,
                        re3: z(2).re,
                        re4: z(3).re,
                        im1: z(0).im,
                        im2: z(1).im,
                        im3: z(2).im,
                        im4: z(3).im,
                    }
                })
                .collect();
            match out {
                Some(_) => {
                    emit_json(out, "stability.json", &report)?;
                    emit_rows(out, "dispersion.csv", &table)
                }
                None => emit_json(None, "", &report),
            }
        }
        Command::HopfSweep {
            gamma_from,
            gamma_to,
            steps,
            t_end,
        } => {
            let mut opts = SweepOptions::new(*gamma_from, *gamma_to, *steps);
            opts.t_end = *t_end;
            let rows: Vec<SweepCsv> = hopf_sweep(&model(cli)?, &opts)?
                .into_iter()
                .map(|r| SweepCsv {
                    gamma: r.gamma,
                    d_fixed_points: r.d_fixed_points.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"),
                    stability: r.stability.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(";"),
                    cycle_min_d: r.cycle_min_d,
                    cycle_max_d: r.cycle_max_d,
                })
                .collect();
            emit_rows(out, "hopf_sweep.csv", &rows)
        }
        Command::Tuples { rho_min, rho_max } => {
            let tuples = find_stable_tuples(&model(cli)?, (*rho_min, *rho_max))?;
            if tuples.is_empty() {
                return Err(Error::NoResult("no tuple satisfies the pairing conditions".into()));
            }
            emit_json(out, "tuples.json", &tuples)
        }
        Command::ConstructWave {
            mass,
            xi1,
            xi2,
            numeric,
            samples,
        } => {
            let m = model(cli)?;
            let req = WaveRequest {
                target_mass: *mass,
                switch_points: xi1.zip(*xi2),
                force_numeric: *numeric,
            };
            let wave = construct_admissible_wave(&m, &req)?;
            let curves = DerivedCurves::new(&m);
            let rows: Vec<WaveCsv> = wave
                .sample(*samples)
                .into_iter()
                .enumerate()
                .map(|(i, p)| WaveCsv {
                    xi: wave.period * i as f64 / *samples as f64,
                    p,
                    b: curves.ratio_at(p) / wave.r,
                })
                .collect();
            match out {
                Some(_) => {
                    emit_json(out, "wave.json", &wave)?;
                    emit_rows(out, "wave.csv", &rows)
                }
                None => emit_json(None, "", &wave),
            }
        }
        Command::Measure { snapshots, field, from } => {
            let field: Field = field.parse()?;
            let meas = measure_wave_speed(&snapshots_from(snapshots, *from)?, field)?;
            if out.is_some() {
                let rows: Vec<ProfileCsv> = meas
                    .profile
                    .iter()
                    .enumerate()
                    .map(|(i, &value)| ProfileCsv {
                        x: (i as f64 + 0.5) * meas.dx,
                        value,
                    })
                    .collect();
                emit_rows(out, "profile.csv", &rows)?;
            }
            emit_json(out, "measurement.json", &meas)
        }
        Command::Compare {
            snapshots,
            from,
            exclude,
            numeric,
        } => {
            let m = model(cli)?;
            let meas = measure_wave_speed(&snapshots_from(snapshots, *from)?, Field::U)?;
            if !meas.is_traveling {
                return Err(Error::NoResult("measured u profile is not a traveling wave".into()));
            }
            let wave = wave_for_measurement(&m, &meas, *numeric)?;
            let report = compare_profiles(&wave, &meas, *exclude)?;
            emit_json(out, "comparison.json", &report)
        }
        Command::Reproduce { figure, config_dir } => {
            let id: FigureId = figure.parse()?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(id.name()));
            let res = reproduce_figure(id, &dir, config_dir.as_deref())?;
            let mut stdout = std::io::stdout().lock();
            for f in &res.files {
                writeln!(stdout, "{}", f.display())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
