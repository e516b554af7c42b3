//! Per-segment training labels from stop-level lateness.
//!
//! Smart cards only observe lateness at stops. For each trip run, the lateness
//! gained between two consecutive observed stops is spread over the edges
//! between them in proportion to edge length.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GtfsBundle, LatenessSample};
use crate::network::{EdgeId, RoadNetwork, SegmentAttributes, TimePeriod};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub edge_id: EdgeId,
    pub period: TimePeriod,
    pub label_s: f64,
    pub date: NaiveDate,
    /// Arrival time (service seconds) at the downstream stop of the pair.
    pub secs: u32,
}

/// How one stop-pair increment was split across edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAttribution {
    pub trip_id: String,
    pub date: NaiveDate,
    pub from_stop: String,
    pub to_stop: String,
    pub increment_s: f64,
    pub period: TimePeriod,
    pub contributions: Vec<(EdgeId, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelSet {
    /// Sorted by `(edge_id, period, date, secs)`.
    pub labels: Vec<EdgeLabel>,
    pub pairs: Vec<PairAttribution>,
    /// Samples on trip runs whose path through the graph could not be rebuilt.
    pub skipped_samples: usize,
    /// Consecutive observed stops that map to the same node.
    pub empty_pairs: usize,
}

struct StopObs {
    stop_id: String,
    lateness: f64,
    secs: u32,
}

pub fn segment_labels(graph: &RoadNetwork, samples: &[LatenessSample], gtfs: &GtfsBundle) -> LabelSet {
    // (trip, date) -> stop_sequence -> samples
    let mut runs: BTreeMap<(&str, NaiveDate), BTreeMap<u32, Vec<&LatenessSample>>> = BTreeMap::new();
    for s in samples {
        runs.entry((s.trip_id.as_str(), s.date))
            .or_default()
            .entry(s.stop_sequence)
            .or_default()
            .push(s);
    }

    let mut out = LabelSet::default();
    for ((trip_id, date), by_stop) in runs {
        let n_samples: usize = by_stop.values().map(Vec::len).sum();
        let obs: Vec<StopObs> = by_stop
            .into_values()
            .map(|v| {
                let n = v.len() as f64;
                StopObs {
                    stop_id: v[0].stop_id.clone(),
                    lateness: v.iter().map(|s| f64::from(s.lateness_s)).sum::<f64>() / n,
                    secs: (v.iter().map(|s| f64::from(s.actual_s)).sum::<f64>() / n).round() as u32,
                }
            })
            .collect();
        if obs.len() < 2 {
            continue;
        }
        let path = gtfs.trips.get(trip_id).and_then(|t| graph.shape_paths.get(&t.shape_id));
        let nodes: Option<Vec<_>> = obs.iter().map(|o| graph.stop_node(&o.stop_id)).collect();
        let located = path.zip(nodes).and_then(|(p, n)| Some((p, p.locate(&n)?)));
        let Some((path, pos)) = located else {
            out.skipped_samples += n_samples;
            continue;
        };

        for (k, w) in obs.windows(2).enumerate() {
            let (a, b) = (&w[0], &w[1]);
            let edges = path.edges_between(pos[k], pos[k + 1]);
            if edges.is_empty() {
                out.empty_pairs += 1;
                continue;
            }
            let increment = (b.lateness - a.lateness).max(0.0);
            let period = TimePeriod::of_secs(b.secs);
            let lengths: Vec<f64> = edges.iter().map(|e| graph.attrs(*e).length_m).collect();
            let total: f64 = lengths.iter().sum();
            let contributions: Vec<(EdgeId, f64)> = edges
                .iter()
                .zip(&lengths)
                .map(|(e, len)| {
                    let share = if total > 0.0 {
                        len / total
                    } else {
                        1.0 / edges.len() as f64
                    };
                    (*e, increment * share)
                })
                .collect();
            out.labels
                .extend(contributions.iter().map(|&(edge_id, label_s)| EdgeLabel {
                    edge_id,
                    period,
                    label_s,
                    date,
                    secs: b.secs,
                }));
            out.pairs.push(PairAttribution {
                trip_id: trip_id.to_owned(),
                date,
                from_stop: a.stop_id.clone(),
                to_stop: b.stop_id.clone(),
                increment_s: increment,
                period,
                contributions,
            });
        }
    }
    out.labels.sort_by_key(|x| (x.edge_id, x.period, x.date, x.secs));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 80/10/10 assignment keyed on `(edge, period)`.
pub fn split_of(edge: EdgeId, period: TimePeriod, seed: u64) -> Split {
    let key = (u64::from(edge.0) << 8) | period.index() as u64;
    match splitmix64(splitmix64(seed) ^ key) % 1000 {
        0..800 => Split::Train,
        800..900 => Split::Val,
        _ => Split::Test,
    }
}

/// Z-score statistics for the six numeric features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: [f64; 6],
    pub std: [f64; 6],
    /// Columns with zero variance; they are divided by 1.
    pub flagged: [bool; 6],
}

impl Default for Normalizer {
    fn default() -> Self {
        Self {
            mean: [0.0; 6],
            std: [1.0; 6],
            flagged: [false; 6],
        }
    }
}

impl Normalizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64; 6]>) -> Self {
        let rows: Vec<&[f64; 6]> = rows.into_iter().collect();
        let n = rows.len().max(1) as f64;
        let mut out = Self::default();
        for j in 0..6 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            out.mean[j] = mean;
            if std > 1e-12 {
                out.std[j] = std;
            } else {
                out.std[j] = 1.0;
                out.flagged[j] = true;
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64; 6]) -> [f64; 6] {
        std::array::from_fn(|j| (x[j] - self.mean[j]) / self.std[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub edge_id: EdgeId,
    pub period: TimePeriod,
    /// Raw segment attributes, in [`SegmentAttributes::NAMES`] order.
    pub features: [f64; 6],
    pub label_s: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    /// Fitted on the training split (all rows when it is empty).
    pub normalizer: Normalizer,
    pub seed: u64,
}

pub fn build_dataset(labels: &[EdgeLabel], graph: &RoadNetwork, seed: u64) -> Result<Dataset> {
    if labels.is_empty() {
        return Err(Error::Invalid("no edge labels to build a dataset from".into()));
    }
    let rows = labels
        .iter()
        .map(|l| DatasetRow {
            edge_id: l.edge_id,
            period: l.period,
            features: graph.attrs(l.edge_id).to_array(),
            label_s: l.label_s,
            split: split_of(l.edge_id, l.period, seed),
        })
        .collect();
    Ok(Dataset::from_rows(rows, seed))
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    edge_id: u32,
    period: TimePeriod,
    length_m: f64,
    n_traffic_lights: f64,
    n_pt_stops: f64,
    n_petrol_stations: f64,
    n_public_parking: f64,
    n_private_parking: f64,
    label_s: f64,
    split: Split,
}

impl Dataset {
    pub fn from_rows(rows: Vec<DatasetRow>, seed: u64) -> Self {
        let train: Vec<&[f64; 6]> = rows
            .iter()
            .filter(|r| r.split == Split::Train)
            .map(|r| &r.features)
            .collect();
        let normalizer = if train.is_empty() {
            Normalizer::fit(rows.iter().map(|r| &r.features))
        } else {
            Normalizer::fit(train)
        };
        for (j, flagged) in normalizer.flagged.iter().enumerate() {
            if *flagged {
                log::info!(
                    "feature {} has zero variance; left unscaled",
                    SegmentAttributes::NAMES[j]
                );
            }
        }
        Self { rows, normalizer, seed }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn split(&self, which: Split) -> impl Iterator<Item = &DatasetRow> {
        self.rows.iter().filter(move |r| r.split == which)
    }

    pub fn count(&self, which: Split) -> usize {
        self.split(which).count()
    }

    pub fn normalized(&self, row: &DatasetRow) -> [f64; 6] {
        self.normalizer.apply(&row.features)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            let f = r.features;
            w.serialize(CsvRow {
                edge_id: r.edge_id.0,
                period: r.period,
                length_m: f[0],
                n_traffic_lights: f[1],
                n_pt_stops: f[2],
                n_petrol_stations: f[3],
                n_public_parking: f[4],
                n_private_parking: f[5],
                label_s: r.label_s,
                split: r.split,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path, seed: u64) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let r: CsvRow = rec?;
            rows.push(DatasetRow {
                edge_id: EdgeId(r.edge_id),
                period: r.period,
                features: [
                    r.length_m,
                    r.n_traffic_lights,
                    r.n_pt_stops,
                    r.n_petrol_stations,
                    r.n_public_parking,
                    r.n_private_parking,
                ],
                label_s: r.label_s,
                split: r.split,
            });
        }
        Ok(Self::from_rows(rows, seed))
    }
}
