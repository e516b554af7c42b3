//! Directed road-segment graph built from GTFS shapes.
//!
//! Shape points are snapped to a planar grid. A snapped cell becomes a node
//! when it is a shape endpoint, a projected stop, a cell visited by two or more
//! distinct shapes, or a cell a single shape passes through twice. Edges are
//! the stretches of shape between consecutive nodes, directed with travel, and
//! deduplicated on `(from, to, snapped cells)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{point_polyline_dist, point_segment, polyline_length_m, GridIndex, LatLon, Projection, Xy};
use crate::ingest::{GtfsBundle, PoiKind, PoiSet};
use crate::time::{Timestamp, SECS_PER_DAY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub pos: LatLon,
    pub intersection: bool,
    pub stop: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub polyline: Vec<LatLon>,
}

/// Per-segment attribute vector fed to the lateness model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentAttributes {
    pub length_m: f64,
    pub n_traffic_lights: u32,
    pub n_pt_stops: u32,
    pub n_petrol_stations: u32,
    pub n_public_parking: u32,
    pub n_private_parking: u32,
}

impl SegmentAttributes {
    pub const COUNT: usize = 6;
    pub const NAMES: [&'static str; 6] = [
        "length_m",
        "n_traffic_lights",
        "n_pt_stops",
        "n_petrol_stations",
        "n_public_parking",
        "n_private_parking",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.length_m,
            f64::from(self.n_traffic_lights),
            f64::from(self.n_pt_stops),
            f64::from(self.n_petrol_stations),
            f64::from(self.n_public_parking),
            f64::from(self.n_private_parking),
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            length_m: a[0],
            n_traffic_lights: a[1] as u32,
            n_pt_stops: a[2] as u32,
            n_petrol_stations: a[3] as u32,
            n_public_parking: a[4] as u32,
            n_private_parking: a[5] as u32,
        }
    }

    fn count_mut(&mut self, kind: PoiKind) -> &mut u32 {
        match kind {
            PoiKind::TrafficLight => &mut self.n_traffic_lights,
            PoiKind::PtStop => &mut self.n_pt_stops,
            PoiKind::PetrolStation => &mut self.n_petrol_stations,
            PoiKind::PublicParking => &mut self.n_public_parking,
            PoiKind::PrivateParking => &mut self.n_private_parking,
        }
    }
}

impl std::ops::Add for SegmentAttributes {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            length_m: self.length_m + o.length_m,
            n_traffic_lights: self.n_traffic_lights + o.n_traffic_lights,
            n_pt_stops: self.n_pt_stops + o.n_pt_stops,
            n_petrol_stations: self.n_petrol_stations + o.n_petrol_stations,
            n_public_parking: self.n_public_parking + o.n_public_parking,
            n_private_parking: self.n_private_parking + o.n_private_parking,
        }
    }
}

impl std::iter::Sum for SegmentAttributes {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Part of the day; each has its own weighted graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimePeriod {
    Morning,
    Noon,
    Afternoon,
    Evening,
    Night,
}

impl TimePeriod {
    pub const ALL: [TimePeriod; 5] = [
        TimePeriod::Morning,
        TimePeriod::Noon,
        TimePeriod::Afternoon,
        TimePeriod::Evening,
        TimePeriod::Night,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimePeriod::Morning => "morning",
            TimePeriod::Noon => "noon",
            TimePeriod::Afternoon => "afternoon",
            TimePeriod::Evening => "evening",
            TimePeriod::Night => "night",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TimePeriod::Morning => "Morning",
            TimePeriod::Noon => "Noon",
            TimePeriod::Afternoon => "Afternoon",
            TimePeriod::Evening => "Evening",
            TimePeriod::Night => "Night",
        }
    }

    /// Period of a time of day given in seconds (overflow times wrap).
    pub fn of_secs(secs: u32) -> Self {
        let h = (secs % SECS_PER_DAY) / 3600;
        match h {
            6..=9 => TimePeriod::Morning,
            10..=13 => TimePeriod::Noon,
            14..=17 => TimePeriod::Afternoon,
            18..=22 => TimePeriod::Evening,
            _ => TimePeriod::Night,
        }
    }
}

impl fmt::Display for TimePeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TimePeriod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "period",
                id: s.to_owned(),
            })
    }
}

/// Morning [06,10), Noon [10,14), Afternoon [14,18), Evening [18,23), Night [23,06).
pub fn period_of(ts: Timestamp) -> TimePeriod {
    TimePeriod::of_secs(ts.secs)
}

/// Node and edge sequence a shape traces through the graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShapePath {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl ShapePath {
    /// Earliest monotone positions of `stops` along the node sequence.
    /// Consecutive stops may share a position.
    pub fn locate(&self, stops: &[NodeId]) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(stops.len());
        let mut from = 0;
        for s in stops {
            let i = from + self.nodes[from..].iter().position(|n| n == s)?;
            out.push(i);
            from = i;
        }
        Some(out)
    }

    /// Edges between two node positions returned by [`ShapePath::locate`].
    pub fn edges_between(&self, from: usize, to: usize) -> &[EdgeId] {
        &self.edges[from..to]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkParams {
    pub snap_m: f64,
    pub poi_buffer_m: f64,
    pub stop_radius_m: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            snap_m: 5.0,
            poi_buffer_m: 25.0,
            stop_radius_m: 50.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub shapes_used: usize,
    pub shapes_skipped: Vec<String>,
    /// Stops farther than the stop radius from any node, with that distance.
    pub unmapped_stops: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkDoc {
    projection: Projection,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    attrs: Vec<SegmentAttributes>,
    stop_index: BTreeMap<String, NodeId>,
    shape_paths: BTreeMap<String, ShapePath>,
}

/// Directed road graph with per-edge attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NetworkDoc", into = "NetworkDoc")]
pub struct RoadNetwork {
    pub projection: Projection,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub attrs: Vec<SegmentAttributes>,
    pub stop_index: BTreeMap<String, NodeId>,
    pub shape_paths: BTreeMap<String, ShapePath>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

impl From<NetworkDoc> for RoadNetwork {
    fn from(d: NetworkDoc) -> Self {
        let mut g = RoadNetwork {
            projection: d.projection,
            nodes: d.nodes,
            edges: d.edges,
            attrs: d.attrs,
            stop_index: d.stop_index,
            shape_paths: d.shape_paths,
            out_adj: Vec::new(),
            in_adj: Vec::new(),
        };
        g.rebuild_adjacency();
        g
    }
}

impl From<RoadNetwork> for NetworkDoc {
    fn from(g: RoadNetwork) -> Self {
        NetworkDoc {
            projection: g.projection,
            nodes: g.nodes,
            edges: g.edges,
            attrs: g.attrs,
            stop_index: g.stop_index,
            shape_paths: g.shape_paths,
        }
    }
}

impl RoadNetwork {
    fn rebuild_adjacency(&mut self) {
        self.out_adj = vec![Vec::new(); self.nodes.len()];
        self.in_adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            self.out_adj[e.from.idx()].push(e.id);
            self.in_adj[e.to.idx()].push(e.id);
        }
    }

    /// Graph from explicit node positions and `(from, to)` pairs, with straight
    /// polylines and length-only attributes. Edge ids follow the input order.
    pub fn from_edges(positions: &[LatLon], pairs: &[(usize, usize)]) -> Self {
        let nodes = positions
            .iter()
            .enumerate()
            .map(|(i, p)| Node {
                id: NodeId(i as u32),
                pos: *p,
                intersection: false,
                stop: false,
            })
            .collect();
        let edges: Vec<Edge> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| Edge {
                id: EdgeId(i as u32),
                from: NodeId(a as u32),
                to: NodeId(b as u32),
                polyline: vec![positions[a], positions[b]],
            })
            .collect();
        let attrs = edges
            .iter()
            .map(|e| SegmentAttributes {
                length_m: polyline_length_m(&e.polyline),
                ..Default::default()
            })
            .collect();
        NetworkDoc {
            projection: Projection::centered_on(positions),
            nodes,
            edges,
            attrs,
            stop_index: BTreeMap::new(),
            shape_paths: BTreeMap::new(),
        }
        .into()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.idx()]
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.idx()]
    }

    pub fn attrs(&self, id: EdgeId) -> &SegmentAttributes {
        &self.attrs[id.idx()]
    }

    /// Outgoing edges of `n`, ascending by id.
    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out_adj[n.idx()]
    }

    /// Incoming edges of `n`, ascending by id.
    pub fn in_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.in_adj[n.idx()]
    }

    pub fn stop_node(&self, stop_id: &str) -> Option<NodeId> {
        self.stop_index.get(stop_id).copied()
    }

    /// True when `edges` is a connected directed walk.
    pub fn is_walk(&self, edges: &[EdgeId]) -> bool {
        edges.windows(2).all(|w| self.edge(w[0]).to == self.edge(w[1]).from)
    }

    pub fn path_attributes(&self, edges: &[EdgeId]) -> SegmentAttributes {
        edges.iter().map(|e| *self.attrs(*e)).sum()
    }

    /// Joined polyline of an edge path.
    pub fn path_coordinates(&self, edges: &[EdgeId]) -> Vec<LatLon> {
        let mut pts: Vec<LatLon> = Vec::new();
        for e in edges {
            let line = &self.edge(*e).polyline;
            let skip = usize::from(!pts.is_empty());
            pts.extend_from_slice(&line[skip..]);
        }
        pts
    }

    /// GeoJSON LineString feature for an edge path.
    pub fn path_geojson(&self, edges: &[EdgeId], properties: serde_json::Value) -> serde_json::Value {
        let coords: Vec<[f64; 2]> = self.path_coordinates(edges).iter().map(|p| [p.lon, p.lat]).collect();
        serde_json::json!({
            "type": "Feature",
            "properties": properties,
            "geometry": { "type": "LineString", "coordinates": coords },
        })
    }
}

type Cell = (i64, i64);

struct Tagged {
    pos: LatLon,
    cell: Cell,
    stop: bool,
}

/// Decompose every shape into directed edges between decision points.
pub fn build_graph(gtfs: &GtfsBundle, params: &NetworkParams) -> Result<(RoadNetwork, BuildReport)> {
    if gtfs.shapes.is_empty() {
        return Err(Error::Invalid("GTFS bundle has no shapes".into()));
    }
    let projection = Projection::centered_on(gtfs.shapes.values().flat_map(|s| s.points.iter().map(|p| &p.pos)));
    let snap = |q: Xy| -> Cell {
        (
            (q.x / params.snap_m).round() as i64,
            (q.y / params.snap_m).round() as i64,
        )
    };

    // Stops served by each shape.
    let mut shape_stops: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for trip in gtfs.trips.values() {
        let entry = shape_stops.entry(trip.shape_id.as_str()).or_default();
        for st in gtfs.trip_stop_times(&trip.trip_id) {
            entry.insert(st.stop_id.as_str());
        }
    }

    let mut report = BuildReport::default();
    let mut sequences: Vec<(String, Vec<Tagged>)> = Vec::new();
    for (shape_id, shape) in &gtfs.shapes {
        let pts = shape.positions();
        let xy: Vec<Xy> = pts.iter().map(|p| projection.project(*p)).collect();
        // (segment, parameter) insertions for stops projected onto this shape
        let mut inserts: Vec<(usize, f64, LatLon)> = Vec::new();
        for stop_id in shape_stops.get(shape_id.as_str()).into_iter().flatten() {
            let Some(stop) = gtfs.stops.get(*stop_id) else { continue };
            let sp = projection.project(stop.pos);
            let best = xy
                .windows(2)
                .enumerate()
                .map(|(i, w)| {
                    let (d, t) = point_segment(sp, w[0], w[1]);
                    (d, i, t)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((d, i, t)) = best {
                if d <= params.stop_radius_m {
                    let (a, b) = (xy[i], xy[i + 1]);
                    let q = Xy {
                        x: a.x + t * (b.x - a.x),
                        y: a.y + t * (b.y - a.y),
                    };
                    inserts.push((i, t, projection.unproject(q)));
                }
            }
        }
        inserts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));

        let mut seq: Vec<Tagged> = Vec::new();
        let mut push = |pos: LatLon, stop: bool| {
            let cell = snap(projection.project(pos));
            match seq.last_mut() {
                Some(last) if last.cell == cell => last.stop |= stop,
                _ => seq.push(Tagged { pos, cell, stop }),
            }
        };
        let mut ins = inserts.iter().peekable();
        for (i, p) in pts.iter().enumerate() {
            push(*p, false);
            while let Some((_, _, q)) = ins.next_if(|(seg, _, _)| *seg == i) {
                push(*q, true);
            }
        }
        if seq.len() < 2 {
            log::warn!("shape {shape_id} collapses to a single point after snapping; skipped");
            report.shapes_skipped.push(shape_id.clone());
            continue;
        }
        sequences.push((shape_id.clone(), seq));
    }
    report.shapes_used = sequences.len();

    // Decide which cells are nodes.
    let mut visits: HashMap<Cell, (usize, Option<usize>, bool)> = HashMap::new(); // (#shapes, last shape, revisited)
    let mut node_cells: BTreeMap<Cell, (LatLon, bool, bool)> = BTreeMap::new(); // pos, intersection, stop
    for (k, (_, seq)) in sequences.iter().enumerate() {
        for t in seq {
            let v = visits.entry(t.cell).or_insert((0, None, false));
            if v.1 == Some(k) {
                v.2 = true;
            } else {
                v.0 += 1;
                v.1 = Some(k);
            }
        }
    }
    for (_, seq) in &sequences {
        let last = seq.len() - 1;
        for (i, t) in seq.iter().enumerate() {
            let (shapes, _, revisit) = visits[&t.cell];
            let shared = shapes >= 2 || revisit;
            if i == 0 || i == last || t.stop || shared {
                let e = node_cells.entry(t.cell).or_insert((t.pos, false, false));
                e.1 |= shared;
                e.2 |= t.stop;
            }
        }
    }
    let node_of: HashMap<Cell, NodeId> = node_cells
        .keys()
        .enumerate()
        .map(|(i, c)| (*c, NodeId(i as u32)))
        .collect();
    let nodes: Vec<Node> = node_cells
        .iter()
        .map(|(c, (pos, intersection, stop))| Node {
            id: node_of[c],
            pos: *pos,
            intersection: *intersection,
            stop: *stop,
        })
        .collect();

    // Split into edges.
    type Key = (NodeId, NodeId, Vec<Cell>);
    let mut edge_lines: BTreeMap<Key, Vec<LatLon>> = BTreeMap::new();
    let mut shape_keys: Vec<(String, Vec<NodeId>, Vec<Key>)> = Vec::new();
    for (shape_id, seq) in &sequences {
        let mut keys = Vec::new();
        let mut path_nodes = Vec::new();
        let mut start = 0;
        path_nodes.push(node_of[&seq[0].cell]);
        for i in 1..seq.len() {
            if let Some(&to) = node_of.get(&seq[i].cell) {
                let from = node_of[&seq[start].cell];
                let run = &seq[start..=i];
                let key = (from, to, run.iter().map(|t| t.cell).collect::<Vec<_>>());
                edge_lines
                    .entry(key.clone())
                    .or_insert_with(|| run.iter().map(|t| t.pos).collect());
                keys.push(key);
                path_nodes.push(to);
                start = i;
            }
        }
        shape_keys.push((shape_id.clone(), path_nodes, keys));
    }
    let mut edge_of: HashMap<Key, EdgeId> = HashMap::new();
    let mut edges = Vec::with_capacity(edge_lines.len());
    for (i, (key, polyline)) in edge_lines.into_iter().enumerate() {
        let id = EdgeId(i as u32);
        edges.push(Edge {
            id,
            from: key.0,
            to: key.1,
            polyline,
        });
        edge_of.insert(key, id);
    }
    let shape_paths = shape_keys
        .into_iter()
        .map(|(sid, nodes, keys)| {
            let edges = keys.iter().map(|k| edge_of[k]).collect();
            (sid, ShapePath { nodes, edges })
        })
        .collect();

    let attrs = edges
        .iter()
        .map(|e| SegmentAttributes {
            length_m: polyline_length_m(&e.polyline),
            ..Default::default()
        })
        .collect();
    let mut graph: RoadNetwork = NetworkDoc {
        projection,
        nodes,
        edges,
        attrs,
        stop_index: BTreeMap::new(),
        shape_paths,
    }
    .into();

    let proj = project_stops(&graph, gtfs, params.stop_radius_m);
    graph.stop_index = proj.mapped;
    report.unmapped_stops = proj.unmapped;
    Ok((graph, report))
}

/// Distances closer than this count as equal when picking a stop's node.
const TIE_EPS_M: f64 = 1e-6;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopProjection {
    pub mapped: BTreeMap<String, NodeId>,
    pub unmapped: BTreeMap<String, f64>,
}

/// Map every stop used by a trip to its nearest node within `radius_m`;
/// equidistant nodes resolve to the lower id.
pub fn project_stops(graph: &RoadNetwork, gtfs: &GtfsBundle, radius_m: f64) -> StopProjection {
    let proj = graph.projection;
    let node_xy: Vec<Xy> = graph.nodes.iter().map(|n| proj.project(n.pos)).collect();
    let index = GridIndex::new(radius_m.max(1.0), node_xy.iter().copied());
    let used: BTreeSet<&str> = gtfs
        .stop_times
        .values()
        .flatten()
        .map(|st| st.stop_id.as_str())
        .collect();
    let mut out = StopProjection::default();
    for stop_id in used {
        let Some(stop) = gtfs.stops.get(stop_id) else { continue };
        let p = proj.project(stop.pos);
        let mut best: Option<(f64, usize)> = None;
        for i in index.around(p, radius_m) {
            let d = p.dist(node_xy[i]);
            if best.is_none_or(|(bd, _)| d < bd - TIE_EPS_M) {
                best = Some((d, i));
            }
        }
        match best {
            Some((d, i)) if d <= radius_m => {
                out.mapped.insert(stop_id.to_owned(), NodeId(i as u32));
            }
            other => {
                let d = other.map_or(f64::INFINITY, |(d, _)| d);
                log::warn!("stop {stop_id} is {d:.1} m from the nearest node; unmapped");
                out.unmapped.insert(stop_id.to_owned(), d);
            }
        }
    }
    out
}

/// Recompute every edge's length and POI counts. Topology is untouched.
pub fn assign_attributes(mut graph: RoadNetwork, pois: &PoiSet, buffer_m: f64) -> RoadNetwork {
    let proj = graph.projection;
    let per_kind: Vec<(PoiKind, Vec<Xy>, GridIndex)> = PoiKind::ALL
        .iter()
        .map(|k| {
            let pts: Vec<Xy> = pois.of_kind(*k).iter().map(|p| proj.project(*p)).collect();
            let idx = GridIndex::new(100.0, pts.iter().copied());
            (*k, pts, idx)
        })
        .collect();
    // Closed buffer; the slack absorbs projection round-off.
    let limit = buffer_m + 1e-6;
    for (e, attrs) in graph.edges.iter().zip(graph.attrs.iter_mut()) {
        let line: Vec<Xy> = e.polyline.iter().map(|p| proj.project(*p)).collect();
        let (mut lo, mut hi) = (line[0], line[0]);
        for q in &line {
            lo = Xy {
                x: lo.x.min(q.x),
                y: lo.y.min(q.y),
            };
            hi = Xy {
                x: hi.x.max(q.x),
                y: hi.y.max(q.y),
            };
        }
        lo = Xy {
            x: lo.x - limit,
            y: lo.y - limit,
        };
        hi = Xy {
            x: hi.x + limit,
            y: hi.y + limit,
        };
        let mut a = SegmentAttributes {
            length_m: polyline_length_m(&e.polyline),
            ..Default::default()
        };
        for (kind, pts, idx) in &per_kind {
            let n = idx
                .candidates(lo, hi)
                .into_iter()
                .filter(|&i| point_polyline_dist(pts[i], &line) <= limit)
                .count();
            *a.count_mut(*kind) = n as u32;
        }
        *attrs = a;
    }
    graph
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Route, Shape, ShapePoint, Stop, StopTime, Trip};
    use approx::assert_relative_eq;

    const ORIGIN: LatLon = LatLon::new(32.08, 34.78);

    fn at(x: f64, y: f64) -> LatLon {
        Projection::new(ORIGIN).unproject(Xy { x, y })
    }

    fn add_shape(b: &mut GtfsBundle, id: &str, pts: &[LatLon]) {
        b.shapes.insert(
            id.into(),
            Shape {
                shape_id: id.into(),
                points: pts
                    .iter()
                    .enumerate()
                    .map(|(i, p)| ShapePoint {
                        sequence: i as u32 + 1,
                        pos: *p,
                    })
                    .collect(),
            },
        );
    }

    fn add_trip(b: &mut GtfsBundle, trip: &str, shape: &str, stops: &[(&str, LatLon)]) {
        b.routes.entry("r".into()).or_insert(Route {
            route_id: "r".into(),
            short_name: String::new(),
        });
        b.trips.insert(
            trip.into(),
            Trip {
                trip_id: trip.into(),
                route_id: "r".into(),
                shape_id: shape.into(),
                service_id: "s".into(),
                service_period: None,
            },
        );
        let mut times = Vec::new();
        for (i, (sid, pos)) in stops.iter().enumerate() {
            b.stops.insert(
                (*sid).into(),
                Stop {
                    stop_id: (*sid).into(),
                    name: String::new(),
                    pos: *pos,
                },
            );
            times.push(StopTime {
                trip_id: trip.into(),
                stop_id: (*sid).into(),
                stop_sequence: i as u32 + 1,
                scheduled_arrival: 3600 * 8 + 60 * i as u32,
            });
        }
        b.stop_times.insert(trip.into(), times);
    }

    #[test]
    fn single_shape_is_one_edge() {
        let mut b = GtfsBundle::default();
        add_shape(&mut b, "s1", &[at(0.0, 0.0), at(300.0, 0.0), at(600.0, 40.0)]);
        let (g, rep) = build_graph(&b, &NetworkParams::default()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(rep.shapes_used, 1);
        assert_eq!(g.edges[0].polyline.len(), 3);
    }

    #[test]
    fn crossing_shapes_share_an_intersection() {
        let mut b = GtfsBundle::default();
        add_shape(&mut b, "h", &[at(-500.0, 0.0), at(0.0, 0.0), at(500.0, 0.0)]);
        add_shape(&mut b, "v", &[at(0.0, -500.0), at(1.0, 1.0), at(0.0, 500.0)]);
        let (g, _) = build_graph(&b, &NetworkParams::default()).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 4));
        let center = g.nodes.iter().find(|n| n.intersection).unwrap();
        assert_eq!(g.in_edges(center.id).len() + g.out_edges(center.id).len(), 4);
        assert_eq!(g.in_edges(center.id).len(), 2);
    }

    #[test]
    fn shared_shape_dedups_edges() {
        let line = [at(0.0, 0.0), at(250.0, 0.0), at(500.0, 0.0)];
        let stops = [("A", at(0.0, 3.0)), ("B", at(250.0, 2.0)), ("C", at(500.0, 0.0))];
        let mut one = GtfsBundle::default();
        add_shape(&mut one, "s", &line);
        add_trip(&mut one, "t1", "s", &stops);
        let mut three = one.clone();
        add_trip(&mut three, "t2", "s", &stops);
        add_trip(&mut three, "t3", "s", &stops);
        let (g1, _) = build_graph(&one, &NetworkParams::default()).unwrap();
        let (g3, _) = build_graph(&three, &NetworkParams::default()).unwrap();
        assert_eq!(g1.edges, g3.edges);
        assert_eq!(g1.edge_count(), 2);
        let path = &g1.shape_paths["s"];
        let stops: Vec<NodeId> = ["A", "B", "C"].iter().map(|s| g1.stop_node(s).unwrap()).collect();
        assert_eq!(path.locate(&stops), Some(vec![0, 1, 2]));
    }

    #[test]
    fn stop_inserted_mid_segment() {
        let mut b = GtfsBundle::default();
        add_shape(&mut b, "s", &[at(0.0, 0.0), at(1000.0, 0.0)]);
        add_trip(
            &mut b,
            "t",
            "s",
            &[("A", at(0.0, 0.0)), ("M", at(400.0, 12.0)), ("Z", at(1000.0, 0.0))],
        );
        let (g, _) = build_graph(&b, &NetworkParams::default()).unwrap();
        assert_eq!(g.edge_count(), 2);
        let total: f64 = g.attrs.iter().map(|a| a.length_m).sum();
        assert_relative_eq!(total, 1000.0, max_relative = 1e-3);
        let m = g.stop_node("M").unwrap();
        assert!(g.node(m).stop);
    }

    #[test]
    fn stop_projection_rules() {
        let mut b = GtfsBundle::default();
        add_shape(&mut b, "s", &[at(0.0, 0.0), at(100.0, 0.0)]);
        add_trip(
            &mut b,
            "t",
            "s",
            &[("near", at(3.0, 0.0)), ("tie", at(50.0, 0.0)), ("far", at(50.0, 80.0))],
        );
        // Project against a graph without the stops inserted.
        let mut bare = b.clone();
        bare.stop_times.clear();
        let (g, _) = build_graph(&bare, &NetworkParams::default()).unwrap();
        let p = project_stops(&g, &b, 50.0);
        assert_eq!(p.mapped["near"], NodeId(0));
        assert_eq!(p.mapped["tie"], NodeId(0));
        assert!(p.unmapped.contains_key("far"));
    }

    #[test]
    fn poi_counts_and_length() {
        let g = RoadNetwork::from_edges(&[at(0.0, 0.0), at(1000.0, 0.0)], &[(0, 1)]);
        let mut pois = PoiSet::default();
        pois.traffic_lights.push(at(200.0, 5.0));
        pois.traffic_lights.push(at(700.0, -5.0));
        pois.traffic_lights.push(at(500.0, 40.0));
        pois.petrol_stations.push(at(300.0, 25.0));
        pois.petrol_stations.push(at(1025.0, 0.0));
        pois.public_parking.push(at(300.0, 25.01));
        let g = assign_attributes(g, &pois, 25.0);
        let a = g.attrs[0];
        assert_relative_eq!(a.length_m, 1000.0, max_relative = 5e-3);
        assert_eq!(a.n_traffic_lights, 2);
        assert_eq!(a.n_petrol_stations, 2);
        assert_eq!(a.n_public_parking, 0);

        let g = assign_attributes(g, &PoiSet::default(), 25.0);
        assert_eq!(g.attrs[0].to_array()[1..], [0.0; 5]);
    }

    #[test]
    fn periods() {
        let h = |h: u32, m: u32| TimePeriod::of_secs(h * 3600 + m * 60);
        assert_eq!(h(8, 30), TimePeriod::Morning);
        assert_eq!(h(10, 0), TimePeriod::Noon);
        assert_eq!(h(9, 59), TimePeriod::Morning);
        assert_eq!(h(2, 15), TimePeriod::Night);
        assert_eq!(h(23, 0), TimePeriod::Night);
        assert_eq!(h(22, 59), TimePeriod::Evening);
        assert_eq!(h(25, 0), TimePeriod::Night);
        assert_eq!(h(30, 0), TimePeriod::Morning);
        assert_eq!("NOON".parse::<TimePeriod>().unwrap(), TimePeriod::Noon);
    }

    #[test]
    fn json_round_trip_rebuilds_adjacency() {
        let g = RoadNetwork::from_edges(&[at(0.0, 0.0), at(10.0, 0.0), at(20.0, 0.0)], &[(0, 1), (1, 2), (0, 2)]);
        let back: RoadNetwork = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.out_edges(NodeId(0)), &[EdgeId(0), EdgeId(2)]);
    }
}
