//! CSV and JSON export of logs, plans, batches and sweeps.
//!
//! Every exporter writes into an output directory and returns the paths it
//! created. File layouts:
//!
//! | artifact | csv | json |
//! |---|---|---|
//! | simulation | `trajectory.csv`, `summary.txt` | `log.json` |
//! | plan | `plan.csv` | `plan.json` |
//! | batch | `samples.csv`, `cells.csv`, `histogram.csv`, `table.txt` | `batch.json` |
//! | sweep | `sweep.csv`, `sweep_paths.csv` | `sweep.json` |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BatchResult, CellSummary, SampleRecord, SweepPoint};
use crate::error::{Error, Result};
use crate::ilq::OperatingPoint;
use crate::racing::{ControlInput, RacingGame};
use crate::sim::{PlannerKind, SimLog};

/// Bin width of overtaking-time histograms (s).
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub ratio: f64,
    pub ego: PlannerKind,
    pub opponent: PlannerKind,
    pub bin_start: f64,
    pub bin_end: f64,
    pub count: usize,
}

/// Overtaking-time histogram per cell over completed overtakes. Each cell
/// gets the contiguous run of bins between its fastest and slowest overtake.
pub fn histogram(result: &BatchResult) -> Vec<HistogramBin> {
    let mut out = Vec::new();
    for cell in &result.cells {
        let bins: Vec<i64> = result
            .records
            .iter()
            .filter(|r| r.ratio == cell.ratio && r.ego == cell.ego && r.opponent == cell.opponent)
            .filter_map(|r| r.overtake_time)
            .map(|t| (t / HISTOGRAM_BIN_WIDTH).floor() as i64)
            .collect();
        let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else {
            continue;
        };
        for b in lo..=hi {
            out.push(HistogramBin {
                ratio: cell.ratio,
                ego: cell.ego,
                opponent: cell.opponent,
                bin_start: b as f64 * HISTOGRAM_BIN_WIDTH,
                bin_end: (b + 1) as f64 * HISTOGRAM_BIN_WIDTH,
                count: bins.iter().filter(|&&x| x == b).count(),
            });
        }
    }
    out
}

/// Text rendering of the ego-by-opponent matrix per ratio. Each cell reads
/// `mean overtaking time / collision probability (completed/samples)`.
pub fn render_table(result: &BatchResult) -> String {
    let mut ratios: Vec<f64> = Vec::new();
    for c in &result.cells {
        if !ratios.contains(&c.ratio) {
            ratios.push(c.ratio);
        }
    }
    let kinds = PlannerKind::ALL;
    let mut out = String::new();
    for ratio in ratios {
        let _ = writeln!(out, "c_c2 / c_c1 = {ratio}");
        let _ = write!(out, "{:<16}", "ego \\ opponent");
        for k in kinds {
            let _ = write!(out, " | {:<26}", k.label());
        }
        out.push('\n');
        for ego in kinds {
            let _ = write!(out, "{:<16}", ego.label());
            for opp in kinds {
                let text = match result.cell(ratio, ego, opp) {
                    Some(c) => format!(
                        "{} / {:.0}% ({}/{})",
                        c.mean_overtake_time
                            .map_or_else(|| "--".to_string(), |t| format!("{t:.2} s")),
                        100.0 * c.collision_probability,
                        c.completed,
                        c.samples
                    ),
                    None => "n/a".to_string(),
                };
                let _ = write!(out, " | {text:<26}");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

fn prepare(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize + ?Sized>(path: PathBuf, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

/// Writes serializable rows; an empty slice still produces the header.
fn write_rows<T: Serialize>(path: PathBuf, header: &[&str], rows: &[T]) -> Result<PathBuf> {
    let csv_err = |source| Error::Csv {
        path: path.clone(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub const SAMPLE_COLUMNS: [&str; 15] = [
    "ratio",
    "ego",
    "opponent",
    "sample",
    "ego_n0",
    "opponent_n0",
    "outcome",
    "overtake_time",
    "collision",
    "replans",
    "converged_replans",
    "failed_replans",
    "opponent_min_speed",
    "ego_max_lateral",
    "error",
];

pub const CELL_COLUMNS: [&str; 10] = [
    "ratio",
    "ego",
    "opponent",
    "samples",
    "completed",
    "mean_overtake_time",
    "collisions",
    "collision_probability",
    "replans",
    "converged_replans",
];

pub const HISTOGRAM_COLUMNS: [&str; 6] = ["ratio", "ego", "opponent", "bin_start", "bin_end", "count"];

pub fn write_records_csv(path: &Path, records: &[SampleRecord]) -> Result<PathBuf> {
    write_rows(path.to_path_buf(), &SAMPLE_COLUMNS, records)
}

pub fn read_records_csv(path: &Path) -> Result<Vec<SampleRecord>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)
}

pub fn export_batch(result: &BatchResult, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare(dir)?;
    let hist = histogram(result);
    match format {
        ExportFormat::Csv => Ok(vec![
            write_records_csv(&dir.join("samples.csv"), &result.records)?,
            write_rows::<CellSummary>(dir.join("cells.csv"), &CELL_COLUMNS, &result.cells)?,
            write_rows(dir.join("histogram.csv"), &HISTOGRAM_COLUMNS, &hist)?,
            write_text(dir.join("table.txt"), &render_table(result))?,
        ]),
        ExportFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                cells: &'a [CellSummary],
                histogram: &'a [HistogramBin],
                records: &'a [SampleRecord],
            }
            Ok(vec![write_json(
                dir.join("batch.json"),
                &Doc {
                    cells: &result.cells,
                    histogram: &hist,
                    records: &result.records,
                },
            )?])
        }
    }
}

pub fn export_log(log: &SimLog, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare(dir)?;
    match format {
        ExportFormat::Csv => {
            let path = dir.join("trajectory.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            log.write_csv(std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
                path: path.clone(),
                source,
            })?;
            Ok(vec![path, write_text(dir.join("summary.txt"), &log.summary_text())?])
        }
        ExportFormat::Json => Ok(vec![write_json(dir.join("log.json"), log)?]),
    }
}

/// Exports a planned trajectory in the simulation-log layout (one row per
/// stage, inputs of the final row zero).
pub fn export_plan(plan: &OperatingPoint, time_step: f64, format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare(dir)?;
    let players = plan.inputs.first().map_or(0, Vec::len);
    let mut log = SimLog::new(players, time_step, 0);
    for (k, x) in plan.states.iter().enumerate() {
        let inputs = match plan.inputs.get(k) {
            Some(u) => u.iter().map(|u| ControlInput { jx: u[0], jy: u[1] }).collect(),
            None => vec![ControlInput::default(); players],
        };
        log.times.push(k as f64 * time_step);
        log.states.push(RacingGame::vehicle_states(x));
        log.inputs.push(inputs);
    }
    match format {
        ExportFormat::Csv => {
            let path = dir.join("plan.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            log.write_csv(std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
                path: path.clone(),
                source,
            })?;
            Ok(vec![path])
        }
        ExportFormat::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                time_step: f64,
                times: &'a [f64],
                states: &'a [Vec<crate::racing::VehicleState>],
                inputs: &'a [Vec<ControlInput>],
            }
            Ok(vec![write_json(
                dir.join("plan.json"),
                &Doc {
                    time_step,
                    times: &log.times,
                    states: &log.states,
                    inputs: &log.inputs,
                },
            )?])
        }
    }
}

pub fn export_sweep(points: &[SweepPoint], format: ExportFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    prepare(dir)?;
    match format {
        ExportFormat::Csv => {
            let summary: Vec<(f64, f64)> = points.iter().map(|p| (p.ratio, p.max_lateral_deviation)).collect();
            let paths: Vec<(f64, usize, f64, f64)> = points
                .iter()
                .flat_map(|p| p.path.iter().enumerate().map(move |(k, [s, n])| (p.ratio, k, *s, *n)))
                .collect();
            Ok(vec![
                write_rows(dir.join("sweep.csv"), &["ratio", "max_lateral_deviation"], &summary)?,
                write_rows(dir.join("sweep_paths.csv"), &["ratio", "stage", "s", "n"], &paths)?,
            ])
        }
        ExportFormat::Json => Ok(vec![write_json(dir.join("sweep.json"), points)?]),
    }
}
