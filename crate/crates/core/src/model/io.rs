use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MachineSet, ReducedNetwork, RotorSnapshot, SymmetricMatrix, Trajectory};
use crate::error::{Error, Result};
use crate::indices::IntegrityIndices;
use crate::model::ASYMMETRY_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectoryFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for TrajectoryFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::invalid(format!(
                "unknown trajectory format {other:?}"
            ))),
        }
    }
}

impl TrajectoryFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

impl MatrixFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// Shortest decimal text that parses back to the identical `f64`; `inf`/`-inf`/`NaN` for
/// non-finite values.
pub fn write_float(v: f64) -> String {
    format!("{v:?}")
}

fn parse_float(path: &Path, row: usize, col: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, row, format!("column {col}: cannot parse {text:?}")))?;
    Ok(v)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, row: usize, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, row, format!("{other:?}")),
    }
}

/// Path of the optional speed companion: `run.csv` -> `run.speed.csv`.
pub(crate) fn speed_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.speed.csv"))
}

struct CsvTable {
    ids: Vec<String>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

fn read_time_table(path: &Path) -> Result<CsvTable> {
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    let mut cols = header.iter();
    match cols.next() {
        Some("t") => {}
        _ => return Err(Error::parse(path, 0, "header must start with column `t`")),
    }
    let ids: Vec<String> = cols.map(str::to_string).collect();
    if ids.is_empty() || ids.iter().any(String::is_empty) {
        return Err(Error::parse(
            path,
            0,
            "header must name every generator column",
        ));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| csv_err(path, row, e))?;
        if rec.len() != ids.len() + 1 {
            return Err(Error::parse(
                path,
                row,
                format!(
                    "ragged row: {} fields, header has {}",
                    rec.len(),
                    ids.len() + 1
                ),
            ));
        }
        let t = parse_float(path, row, "t", &rec[0])?;
        let mut vals = Vec::with_capacity(ids.len());
        for (id, text) in ids.iter().zip(rec.iter().skip(1)) {
            let v = parse_float(path, row, id, text)?;
            if v.is_nan() {
                return Err(Error::parse(path, row, format!("NaN value in column {id}")));
            }
            vals.push(v);
        }
        if t.is_nan() {
            return Err(Error::parse(path, row, "NaN time"));
        }
        times.push(t);
        values.push(vals);
    }
    Ok(CsvTable { ids, times, values })
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    ids: Vec<String>,
    samples: Vec<SnapshotJson>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotJson {
    t: f64,
    delta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    speed: Option<Vec<f64>>,
}

/// Reads a trajectory. For CSV, a sibling `<stem>.speed.csv` of identical shape is attached
/// as speed deviations when present.
pub fn load_trajectory(path: impl AsRef<Path>, format: TrajectoryFormat) -> Result<Trajectory> {
    let path = path.as_ref();
    let (ids, samples) = match format {
        TrajectoryFormat::Csv => {
            let table = read_time_table(path)?;
            let mut samples: Vec<RotorSnapshot> = table
                .times
                .iter()
                .zip(table.values)
                .map(|(&t, delta)| RotorSnapshot::new(t, delta))
                .collect();
            let sp = speed_path(path);
            if sp.exists() {
                let speed = read_time_table(&sp)?;
                if speed.ids != table.ids || speed.times.len() != samples.len() {
                    return Err(Error::invalid(format!(
                        "{}: shape differs from {}",
                        sp.display(),
                        path.display()
                    )));
                }
                for (s, w) in samples.iter_mut().zip(speed.values) {
                    s.speed = Some(w);
                }
            }
            (table.ids, samples)
        }
        TrajectoryFormat::Json => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let raw: TrajectoryJson = serde_json::from_reader(std::io::BufReader::new(file))
                .map_err(|e| Error::json(path, e))?;
            let samples = raw
                .samples
                .into_iter()
                .map(|s| RotorSnapshot {
                    t: s.t,
                    delta: s.delta,
                    speed: s.speed,
                    emf: None,
                })
                .collect();
            (raw.ids, samples)
        }
    };
    Trajectory::new(ids, samples).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

fn write_time_table<'a>(
    path: &Path,
    ids: &[String],
    rows: impl Iterator<Item = (f64, &'a [f64])>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| csv_err(path, 0, e);
    let mut header = vec!["t".to_string()];
    header.extend(ids.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (t, vals) in rows {
        let mut rec = Vec::with_capacity(vals.len() + 1);
        rec.push(write_float(t));
        rec.extend(vals.iter().map(|&v| write_float(v)));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a trajectory; for CSV the speed companion is written when every sample carries speed.
pub fn save_trajectory(
    traj: &Trajectory,
    path: impl AsRef<Path>,
    format: TrajectoryFormat,
) -> Result<()> {
    let path = path.as_ref();
    match format {
        TrajectoryFormat::Csv => {
            write_time_table(
                path,
                traj.ids(),
                traj.samples().iter().map(|s| (s.t, s.delta.as_slice())),
            )?;
            if traj.samples().iter().all(|s| s.speed.is_some()) {
                write_time_table(
                    &speed_path(path),
                    traj.ids(),
                    traj.samples()
                        .iter()
                        .map(|s| (s.t, s.speed.as_deref().unwrap_or_default())),
                )?;
            }
            Ok(())
        }
        TrajectoryFormat::Json => {
            let raw = TrajectoryJson {
                ids: traj.ids().to_vec(),
                samples: traj
                    .samples()
                    .iter()
                    .map(|s| SnapshotJson {
                        t: s.t,
                        delta: s.delta.clone(),
                        speed: s.speed.clone(),
                    })
                    .collect(),
            };
            let mut w = create(path)?;
            serde_json::to_writer(&mut w, &raw).map_err(|e| Error::json(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct NetworkJson {
    pub ids: Vec<String>,
    pub inertia: Vec<f64>,
    #[serde(default)]
    pub damping: Option<Vec<f64>>,
    #[serde(default)]
    pub mech_power: Option<Vec<f64>>,
    pub emf: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl NetworkJson {
    pub(crate) fn build(self) -> Result<(MachineSet, ReducedNetwork)> {
        let n = self.ids.len();
        let machines = MachineSet::new(
            self.ids,
            self.inertia,
            self.damping.unwrap_or_else(|| vec![0.0; n]),
            self.mech_power.unwrap_or_else(|| vec![0.0; n]),
            self.emf,
        )?;
        let net = ReducedNetwork::from_rows(&self.g, &self.b)?;
        crate::error::check_dim("network vs ids", n, net.dim())?;
        Ok((machines, net))
    }

    pub(crate) fn from_parts(machines: &MachineSet, net: &ReducedNetwork) -> Self {
        Self {
            ids: machines.ids().to_vec(),
            inertia: machines.inertia().to_vec(),
            damping: Some(machines.damping().to_vec()),
            mech_power: Some(machines.mech_power().to_vec()),
            emf: machines.emf().to_vec(),
            g: net.g().to_rows(),
            b: net.b().to_rows(),
        }
    }
}

/// Reads the network JSON schema; `damping` and `mech_power` default to zeros when absent.
pub fn load_network(path: impl AsRef<Path>) -> Result<(MachineSet, ReducedNetwork)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: NetworkJson = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    raw.build()
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn save_network(
    machines: &MachineSet,
    net: &ReducedNetwork,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &NetworkJson::from_parts(machines, net))
        .map_err(|e| Error::json(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

pub fn save_matrix(
    m: &SymmetricMatrix,
    labels: &[String],
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<()> {
    let path = path.as_ref();
    crate::error::check_dim("matrix labels", m.dim(), labels.len())?;
    match format {
        MatrixFormat::Csv => {
            let mut w = csv::Writer::from_writer(create(path)?);
            let io = |e: csv::Error| csv_err(path, 0, e);
            let mut header = vec![String::new()];
            header.extend(labels.iter().cloned());
            w.write_record(&header).map_err(io)?;
            for (i, label) in labels.iter().enumerate() {
                let mut rec = vec![label.clone()];
                rec.extend(m.row(i).map(write_float));
                w.write_record(&rec).map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(path, e))
        }
        MatrixFormat::Json => {
            let raw = MatrixJson {
                labels: labels.to_vec(),
                values: m.to_rows(),
            };
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, &raw).map_err(|e| Error::json(path, e))?;
            w.flush().map_err(|e| Error::io(path, e))
        }
    }
}

/// Reads a labeled square matrix. Row labels must repeat the header labels in order.
pub fn load_matrix(
    path: impl AsRef<Path>,
    format: MatrixFormat,
) -> Result<(Vec<String>, SymmetricMatrix)> {
    let path = path.as_ref();
    let (labels, rows) = match format {
        MatrixFormat::Csv => {
            let mut rdr = csv_reader(path)?;
            let header = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
            let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
            let mut rows = Vec::with_capacity(labels.len());
            for (k, rec) in rdr.records().enumerate() {
                let row = k + 1;
                let rec = rec.map_err(|e| csv_err(path, row, e))?;
                if rec.len() != labels.len() + 1 {
                    return Err(Error::parse(path, row, "ragged row"));
                }
                if labels.get(k).map(String::as_str) != Some(&rec[0]) {
                    return Err(Error::parse(
                        path,
                        row,
                        format!("row label {:?} does not match header order", &rec[0]),
                    ));
                }
                let vals = labels
                    .iter()
                    .zip(rec.iter().skip(1))
                    .map(|(l, text)| parse_float(path, row, l, text))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(vals);
            }
            (labels, rows)
        }
        MatrixFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let raw: MatrixJson = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
            (raw.labels, raw.values)
        }
    };
    if rows.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{}: {} rows for {} labels",
            path.display(),
            rows.len(),
            labels.len()
        )));
    }
    let m = SymmetricMatrix::from_rows(&rows, ASYMMETRY_TOLERANCE, "matrix")
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok((labels, m))
}

const INDICES_HEADER: [&str; 5] = ["t", "GCI", "GSI", "SI", "n_groups"];

/// Writes `t,GCI,GSI,SI,n_groups`; infinite SI is written as `inf`.
pub fn save_indices_series(rows: &[IntegrityIndices], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let io = |e: csv::Error| csv_err(path, 0, e);
    w.write_record(INDICES_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            write_float(r.t),
            write_float(r.gci),
            write_float(r.gsi),
            write_float(r.si),
            r.n_groups.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_indices_series(path: impl AsRef<Path>) -> Result<Vec<IntegrityIndices>> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, 0, e))?.clone();
    if header.iter().ne(INDICES_HEADER) {
        return Err(Error::parse(
            path,
            0,
            "expected header t,GCI,GSI,SI,n_groups",
        ));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| csv_err(path, row, e))?;
        if rec.len() != INDICES_HEADER.len() {
            return Err(Error::parse(path, row, "ragged row"));
        }
        let n_groups = rec[4]
            .parse()
            .map_err(|_| Error::parse(path, row, "n_groups is not an integer"))?;
        out.push(IntegrityIndices {
            t: parse_float(path, row, "t", &rec[0])?,
            gci: parse_float(path, row, "GCI", &rec[1])?,
            gsi: parse_float(path, row, "GSI", &rec[2])?,
            si: parse_float(path, row, "SI", &rec[3])?,
            n_groups,
        });
    }
    Ok(out)
}
