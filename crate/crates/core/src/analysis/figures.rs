use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Value};

use super::compare::{compare_profiles, wave_for_measurement};
use super::speed::{measure_wave_speed, Field};
use crate::error::{Error, Result};
use crate::model::{DerivedCurves, ModelParams};
use crate::ode::{hopf_sweep, hopf_thresholds, SweepOptions};
use crate::output::{write_json, write_rows, write_spacetime_csv};
use crate::sim::{initial_conditions, simulate, simulate_window, Grid, InitKind, SimConfig, System};
use crate::waves::{find_stable_tuples, heteroclinic_check};

const FIG1: &str = include_str!("../../configs/fig1.json");
const FIG2: &str = include_str!("../../configs/fig2.json");
const FIG4: &str = include_str!("../../configs/fig4.json");
const FIG5: &str = include_str!("../../configs/fig5.json");

/// Figures with bundled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig4,
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig1, FigureId::Fig2, FigureId::Fig4, FigureId::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }

    pub fn bundled_config(self) -> &'static str {
        match self {
            FigureId::Fig1 => FIG1,
            FigureId::Fig2 => FIG2,
            FigureId::Fig4 => FIG4,
            FigureId::Fig5 => FIG5,
        }
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure '{s}', expected fig1, fig2, fig4 or fig5")))
    }
}

/// Files written for one figure and the headline numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigureOutput {
    pub id: FigureId,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

#[derive(Deserialize)]
struct Fig1Config {
    model: ModelParams,
    sweep: SweepOptions,
}

#[derive(Deserialize)]
struct Fig2Config {
    model: ModelParams,
    second_model: ModelParams,
    search_box: (f64, f64),
    dx: f64,
    t_end: f64,
    inits: Vec<String>,
}

#[derive(Deserialize)]
struct Fig4Config {
    model: ModelParams,
    n_cells: usize,
    t_end: f64,
    window_from: f64,
    snapshot_every: usize,
    init: String,
}

#[derive(Deserialize)]
struct Fig5Case {
    name: String,
    model: ModelParams,
    n_cells: usize,
    t_end: f64,
    window_from: f64,
    init: String,
}

#[derive(Deserialize)]
struct Fig5Config {
    cases: Vec<Fig5Case>,
}

fn parse<T: DeserializeOwned>(id: FigureId, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", id.name())))
}

/// Config text for `id`: `<dir>/<id>.json` when a directory is given,
/// the bundled copy otherwise.
pub fn figure_config(id: FigureId, config_dir: Option<&Path>) -> Result<String> {
    match config_dir {
        None => Ok(id.bundled_config().to_string()),
        Some(dir) => {
            let path = dir.join(format!("{}.json", id.name()));
            fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

/// Regenerates the data behind figure `id` in `out_dir`.
pub fn reproduce_figure(id: FigureId, out_dir: &Path, config_dir: Option<&Path>) -> Result<FigureOutput> {
    let text = figure_config(id, config_dir)?;
    fs::create_dir_all(out_dir)?;
    let (files, summary) = match id {
        FigureId::Fig1 => fig1(parse(id, &text)?, out_dir)?,
        FigureId::Fig2 => fig2(parse(id, &text)?, out_dir)?,
        FigureId::Fig4 => fig4(parse(id, &text)?, out_dir)?,
        FigureId::Fig5 => fig5(parse(id, &text)?, out_dir)?,
    };
    let summary_path = out_dir.join(format!("{}_summary.json", id.name()));
    write_json(&summary_path, &summary)?;
    let mut files = files;
    files.push(summary_path);
    Ok(FigureOutput { id, files, summary })
}

#[derive(Serialize)]
struct SweepCsvRow {
    gamma: f64,
    fixed_points: String,
    stability: String,
    cycle_min_d: Option<f64>,
    cycle_max_d: Option<f64>,
    cycle_amplitude: Option<f64>,
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn fig1(cfg: Fig1Config, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let thresholds = hopf_thresholds(&cfg.model)?;
    let rows = hopf_sweep(&cfg.model, &cfg.sweep)?;
    let csv_rows: Vec<SweepCsvRow> = rows
        .iter()
        .map(|r| SweepCsvRow {
            gamma: r.gamma,
            fixed_points: join(&r.d_fixed_points),
            stability: join(r.stability.iter().map(|s| s.as_str())),
            cycle_min_d: r.cycle_min_d,
            cycle_max_d: r.cycle_max_d,
            cycle_amplitude: r.cycle_min_d.zip(r.cycle_max_d).map(|(lo, hi)| hi - lo),
        })
        .collect();
    let sweep = out.join("fig1_sweep.csv");
    let th = out.join("fig1_thresholds.json");
    write_rows(&sweep, &csv_rows)?;
    write_json(&th, &thresholds)?;
    let cycles = rows.iter().filter(|r| r.cycle_min_d.is_some()).count();
    Ok((vec![sweep, th], json!({ "thresholds": thresholds, "gammas": rows.len(), "gammas_with_cycle": cycles })))
}

#[derive(Serialize)]
struct OrbitRow {
    q: f64,
    dq: f64,
}

fn orbit_file(m: &ModelParams, w1: f64, w2: f64, path: &Path) -> Result<Value> {
    let orbit = heteroclinic_check(m, w1, w2)?;
    let rows: Vec<OrbitRow> = orbit.samples.iter().map(|&(q, dq)| OrbitRow { q, dq }).collect();
    write_rows(path, &rows)?;
    Ok(json!({ "w1": w1, "w2": w2, "heteroclinic": orbit.is_heteroclinic, "outcome": orbit.outcome }))
}

fn final_profiles(m: &ModelParams, grid: &Grid, t_end: f64, inits: &[String]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let kinds: Vec<InitKind> = inits.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    kinds
        .par_iter()
        .map(|k| {
            let s = initial_conditions(k, grid, m, System::MemoryFree)?;
            let mut cfg = SimConfig::for_grid(grid, t_end);
            cfg.snapshot_every = usize::MAX;
            let run = simulate(&s, &cfg, m)?;
            Ok((run.final_state.u, run.final_state.v))
        })
        .collect()
}

fn fig2(cfg: Fig2Config, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let mut files = Vec::new();
    let tuples = find_stable_tuples(&cfg.model, cfg.search_box)?;
    let second = find_stable_tuples(&cfg.second_model, cfg.search_box)?;
    let t1 = out.join("fig2_tuples.json");
    let t2 = out.join("fig2_second_model_tuples.json");
    write_json(&t1, &tuples)?;
    write_json(&t2, &second)?;
    files.extend([t1, t2]);

    let mut orbits = Vec::new();
    for (tag, m, list) in [("first", &cfg.model, &tuples), ("second", &cfg.second_model, &second)] {
        for (i, t) in list.iter().enumerate() {
            let path = out.join(format!("fig2_{tag}_orbit_{i}.csv"));
            orbits.push(orbit_file(m, t.values[0], t.values[1], &path)?);
            files.push(path);
        }
    }

    let grid = Grid::with_spacing(cfg.dx)?;
    let profiles = final_profiles(&cfg.model, &grid, cfg.t_end, &cfg.inits)?;
    let selected = tuples
        .iter()
        .find(|t| t.selected)
        .ok_or_else(|| Error::NoResult("no selected tuple for the first model".into()))?;
    let (a, b) = (selected.values[0], selected.values[1]);
    let mut header = vec!["x".to_string()];
    for i in 0..profiles.len() {
        header.push(format!("u_{i}"));
        header.push(format!("v_{i}"));
    }
    header.extend(["w1".to_string(), "w2".to_string()]);
    let profile_path = out.join("fig2_profiles.csv");
    let mut w = csv::Writer::from_path(&profile_path)?;
    w.write_record(&header)?;
    for (i, x) in grid.centers().into_iter().enumerate() {
        let mut row = vec![x.to_string()];
        for (u, v) in &profiles {
            row.push(u[i].to_string());
            row.push(v[i].to_string());
        }
        row.push(a.to_string());
        row.push(b.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    files.push(profile_path);

    let plateaus: Vec<Value> = profiles
        .iter()
        .zip(&cfg.inits)
        .map(|((u, _), init)| {
            let (lo, hi) = u
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            json!({ "init": init, "u_min": lo, "u_max": hi })
        })
        .collect();
    Ok((files, json!({ "tuples": tuples, "second_model_tuples": second, "orbits": orbits, "runs": plateaus })))
}

fn fig4(cfg: Fig4Config, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let grid = Grid::new(cfg.n_cells)?;
    let kind: InitKind = cfg.init.parse()?;
    let s = initial_conditions(&kind, &grid, &cfg.model, System::Full)?;
    let sim_cfg = SimConfig::for_grid(&grid, cfg.t_end).snapshots_every(cfg.snapshot_every);
    let run = simulate_window(&s, &sim_cfg, &cfg.model, cfg.window_from)?;
    let fields = [Field::U, Field::U1OverU, Field::V, Field::V1OverV];
    let path = out.join("fig4_spacetime.csv");
    write_spacetime_csv(&path, &run.snapshots, &fields)?;
    let speeds: Vec<Value> = fields
        .iter()
        .map(|&f| {
            measure_wave_speed(&run.snapshots, f).map(|w| {
                json!({ "field": f.name(), "speed": w.speed, "comoving_variance": w.comoving_variance, "range": w.range })
            })
        })
        .collect::<Result<_>>()?;
    Ok((vec![path], json!({ "speeds": speeds, "mass_drift": run.meta.mass_drift })))
}

#[derive(Serialize)]
struct CurveRow {
    rho: f64,
    lambda: f64,
    gamma: f64,
    ratio: f64,
    fraction: f64,
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    simulated: f64,
    constructed: Option<f64>,
}

fn fig5_case(case: &Fig5Case, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let m = &case.model;
    let curves = DerivedCurves::new(m);
    let rows: Vec<CurveRow> = (1..=400)
        .map(|i| {
            let rho = 0.01 * i as f64;
            CurveRow {
                rho,
                lambda: m.lambda.value(rho),
                gamma: m.gamma.value(rho),
                ratio: curves.ratio_at(rho),
                fraction: curves.fraction(rho),
            }
        })
        .collect();
    let curve_path = out.join(format!("fig5_{}_curves.csv", case.name));
    write_rows(&curve_path, &rows)?;

    let grid = Grid::new(case.n_cells)?;
    let kind: InitKind = case.init.parse()?;
    let s = initial_conditions(&kind, &grid, m, System::Full)?;
    let cfg = SimConfig::for_grid(&grid, case.t_end).snapshots_every(20);
    let run = simulate_window(&s, &cfg, m, case.window_from)?;
    let meas = measure_wave_speed(&run.snapshots, Field::U)?;
    let constructed = wave_for_measurement(m, &meas, false);
    let (report, wave_path, error) = match &constructed {
        Ok(w) => match compare_profiles(w, &meas, 3) {
            Ok(r) => (Some(r), Some(w.path), None),
            Err(e) => (None, Some(w.path), Some(e.to_string())),
        },
        Err(e) => (None, None, Some(e.to_string())),
    };
    let shift = report.as_ref().map(|r| r.optimal_shift).unwrap_or(0.0);
    let profile: Vec<ProfileRow> = grid
        .centers()
        .into_iter()
        .zip(&meas.profile)
        .map(|(x, &p)| ProfileRow {
            x,
            simulated: p,
            constructed: constructed.as_ref().ok().map(|w| w.eval(x - shift)),
        })
        .collect();
    let profile_path = out.join(format!("fig5_{}_profile.csv", case.name));
    write_rows(&profile_path, &profile)?;
    Ok((
        vec![curve_path, profile_path],
        json!({
            "name": case.name,
            "speed": meas.speed,
            "construction": wave_path,
            "comparison": report,
            "relative_l1": report.as_ref().map(|r| r.relative_l1()),
            "error": error,
        }),
    ))
}

fn fig5(cfg: Fig5Config, out: &Path) -> Result<(Vec<PathBuf>, Value)> {
    let results: Vec<(Vec<PathBuf>, Value)> = cfg.cases.par_iter().map(|c| fig5_case(c, out)).collect::<Result<_>>()?;
    let mut files = Vec::new();
    let mut cases = Vec::new();
    for (f, v) in results {
        files.extend(f);
        cases.push(v);
    }
    Ok((files, json!({ "cases": cases })))
}
