use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{MachineSet, ReducedNetwork};
use crate::error::{check_dim, Error, Result};

/// Absolute slack when matching sample times to segment starts, seconds.
const SEGMENT_TIME_SLACK: f64 = 1e-9;

/// A network that is active from `t_start` until the next segment begins.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub name: String,
    pub net: Arc<ReducedNetwork>,
}

/// Time-ordered list of network segments covering a trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkSchedule {
    segments: Vec<NetworkSegment>,
}

impl NetworkSchedule {
    /// One network for all time.
    pub fn constant(name: impl Into<String>, net: ReducedNetwork) -> Self {
        Self {
            segments: vec![NetworkSegment {
                t_start: f64::NEG_INFINITY,
                t_end: f64::INFINITY,
                name: name.into(),
                net: Arc::new(net),
            }],
        }
    }

    pub fn new(segments: Vec<NetworkSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("network schedule has no segments"));
        }
        let dim = segments[0].net.dim();
        for (k, s) in segments.iter().enumerate() {
            check_dim("scheduled network", dim, s.net.dim())?;
            if s.t_end < s.t_start || s.t_start.is_nan() || s.t_end.is_nan() {
                return Err(Error::invalid(format!(
                    "segment {k} has an empty time range"
                )));
            }
            if k > 0 && s.t_start <= segments[k - 1].t_start {
                return Err(Error::invalid(format!("segment {k} starts out of order")));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[NetworkSegment] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments.first().map_or(0, |s| s.net.dim())
    }

    /// Segment active at time `t`: the last one whose start is not after `t`.
    pub fn at(&self, t: f64) -> Result<&NetworkSegment> {
        let k = self
            .segments
            .partition_point(|s| s.t_start <= t + SEGMENT_TIME_SLACK);
        if k == 0 {
            return Err(Error::invalid(format!("no network segment covers t = {t}")));
        }
        let seg = &self.segments[k - 1];
        if t > seg.t_end + SEGMENT_TIME_SLACK {
            return Err(Error::invalid(format!("no network segment covers t = {t}")));
        }
        Ok(seg)
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct MatricesJson {
    pub g: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl MatricesJson {
    pub(crate) fn build(&self) -> Result<ReducedNetwork> {
        ReducedNetwork::from_rows(&self.g, &self.b)
    }

    pub(crate) fn from_network(net: &ReducedNetwork) -> Self {
        Self {
            g: net.g().to_rows(),
            b: net.b().to_rows(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SegmentJson {
    t_start: f64,
    t_end: f64,
    network: String,
}

/// Self-contained description of which network was active when, written next to a simulated
/// trajectory so that analysis needs no other input.
#[derive(Serialize, Deserialize)]
struct SegmentManifestJson {
    machines: MachineSet,
    networks: BTreeMap<String, MatricesJson>,
    segments: Vec<SegmentJson>,
}

pub fn save_segment_manifest(
    machines: &MachineSet,
    schedule: &NetworkSchedule,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut networks = BTreeMap::new();
    for s in schedule.segments() {
        networks
            .entry(s.name.clone())
            .or_insert_with(|| MatricesJson::from_network(&s.net));
    }
    let raw = SegmentManifestJson {
        machines: machines.clone(),
        networks,
        segments: schedule
            .segments()
            .iter()
            .map(|s| SegmentJson {
                t_start: s.t_start,
                t_end: s.t_end,
                network: s.name.clone(),
            })
            .collect(),
    };
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &raw).map_err(|e| Error::json(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads either a segment manifest or a plain network file (treated as a single segment
/// covering all time).
pub fn load_network_schedule(path: impl AsRef<Path>) -> Result<(MachineSet, NetworkSchedule)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let ctx = |e: Error| Error::invalid(format!("{}: {e}", path.display()));
    if value.get("segments").is_some() {
        let raw: SegmentManifestJson =
            serde_json::from_value(value).map_err(|e| Error::json(path, e))?;
        let mut built = BTreeMap::new();
        for (name, m) in &raw.networks {
            built.insert(name.clone(), Arc::new(m.build().map_err(ctx)?));
        }
        let segments = raw
            .segments
            .into_iter()
            .map(|s| {
                let net = built.get(&s.network).cloned().ok_or_else(|| {
                    Error::invalid(format!(
                        "{}: segment refers to unknown network {:?}",
                        path.display(),
                        s.network
                    ))
                })?;
                Ok(NetworkSegment {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    name: s.network,
                    net,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = NetworkSchedule::new(segments).map_err(ctx)?;
        check_dim("manifest machines", raw.machines.len(), schedule.dim()).map_err(ctx)?;
        Ok((raw.machines, schedule))
    } else {
        let raw: super::io::NetworkJson =
            serde_json::from_value(value).map_err(|e| Error::json(path, e))?;
        let (machines, net) = raw.build().map_err(ctx)?;
        let name = path.file_stem().map_or_else(
            || "network".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        Ok((machines, NetworkSchedule::constant(name, net)))
    }
}
