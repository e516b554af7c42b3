//! Synthetic grid city with planted congestion, and a brute-force routing oracle.
//!
//! Streets form a `rows x cols` grid; bus lines run along every other row and
//! column in both directions. Boardings follow the timetable plus the delay
//! accumulated on slow corridor blocks plus bounded uniform noise, so which
//! routes should change is known in advance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{LatLon, Projection, Xy};
use crate::network::{EdgeId, NodeId, RoadNetwork, TimePeriod};
use crate::optimizer::WeightedGraph;
use crate::scalar::Weight;
use crate::time::{format_service_time, Timestamp};

/// Grid intersection as `(row, col)`; rows grow northwards, columns eastwards.
pub type Cell = (u32, u32);

/// A street path that is slow during some periods. Driving the whole path
/// costs `extra_delay_s`, spread evenly over its blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corridor {
    pub path: Vec<Cell>,
    pub both_directions: bool,
    pub extra_delay_s: f64,
    pub periods: Vec<TimePeriod>,
}

impl Corridor {
    /// Row `row` from column `c0` to `c1`, slow in both directions.
    pub fn along_row(row: u32, c0: u32, c1: u32, extra_delay_s: f64, periods: &[TimePeriod]) -> Self {
        Self {
            path: (c0..=c1).map(|c| (row, c)).collect(),
            both_directions: true,
            extra_delay_s,
            periods: periods.to_vec(),
        }
    }

    /// Directed blocks with their share of the delay.
    pub fn blocks(&self) -> Vec<([Cell; 2], f64)> {
        let n = self.path.len().saturating_sub(1).max(1) as f64;
        let share = self.extra_delay_s / n;
        let mut out: Vec<([Cell; 2], f64)> = self.path.windows(2).map(|w| ([w[0], w[1]], share)).collect();
        if self.both_directions {
            out.extend(self.path.windows(2).map(|w| ([w[1], w[0]], share)));
        }
        out
    }

    fn active(&self, period: TimePeriod) -> bool {
        self.periods.contains(&period)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub rows: u32,
    pub cols: u32,
    pub spacing_m: f64,
    pub n_routes: usize,
    pub slow_corridors: Vec<Corridor>,
    pub boardings_per_stop_per_day: usize,
    pub n_days: u32,
    pub seed: u64,
    pub start_date: NaiveDate,
    /// South-west corner of the grid.
    pub origin: LatLon,
    /// Blocks between consecutive stops.
    pub stop_every: u32,
    pub block_secs: u32,
    pub first_departure_s: u32,
    pub last_departure_s: u32,
    pub headway_s: u32,
    pub noise_s: f64,
    pub corridor_lights: u32,
    pub n_petrol_stations: usize,
    pub n_public_parking: usize,
    pub n_private_parking: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 10,
            cols: 10,
            spacing_m: 200.0,
            n_routes: 20,
            slow_corridors: vec![Corridor::along_row(4, 2, 4, 120.0, &[TimePeriod::Morning])],
            boardings_per_stop_per_day: 48,
            n_days: 5,
            seed: 7,
            start_date: NaiveDate::from_ymd_opt(2024, 3, 4).expect("valid date"),
            origin: LatLon::new(32.05, 34.76),
            stop_every: 2,
            block_secs: 60,
            first_departure_s: 1800,
            last_departure_s: 84_600,
            headway_s: 3600,
            noise_s: 15.0,
            corridor_lights: 5,
            n_petrol_stations: 12,
            n_public_parking: 12,
            n_private_parking: 12,
        }
    }
}

impl SynthSpec {
    /// Default city whose corridor is equally slow in the Morning and at Noon,
    /// with a smaller Evening delay and nothing at Night.
    pub fn embedding_variant(seed: u64) -> Self {
        Self {
            seed,
            slow_corridors: vec![
                Corridor::along_row(4, 2, 4, 120.0, &[TimePeriod::Morning, TimePeriod::Noon]),
                Corridor::along_row(4, 2, 4, 60.0, &[TimePeriod::Evening]),
            ],
            ..Self::default()
        }
    }

    pub fn cell_pos(&self, (r, c): Cell) -> LatLon {
        Projection::new(self.origin).unproject(Xy {
            x: f64::from(c) * self.spacing_m,
            y: f64::from(r) * self.spacing_m,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.rows < 3 || self.cols < 3 {
            return Err(Error::Invalid(
                "synthetic grid needs at least 3 rows and 3 columns".into(),
            ));
        }
        if self.spacing_m.is_nan()
            || self.spacing_m <= 0.0
            || self.stop_every == 0
            || self.headway_s == 0
            || self.block_secs == 0
        {
            return Err(Error::Invalid(
                "spacing, stop spacing, headway and block time must be positive".into(),
            ));
        }
        if self.first_departure_s > self.last_departure_s {
            return Err(Error::Invalid("first departure is after the last".into()));
        }
        if self.noise_s.is_nan() || self.noise_s < 0.0 {
            return Err(Error::Invalid("noise must be non-negative".into()));
        }
        if let Some(c) = self
            .slow_corridors
            .iter()
            .find(|c| c.extra_delay_s.is_nan() || c.extra_delay_s < 0.0)
        {
            return Err(Error::Invalid(format!(
                "corridor delay {} is negative",
                c.extra_delay_s
            )));
        }
        Ok(())
    }

    fn departures(&self) -> Vec<u32> {
        (self.first_departure_s..=self.last_departure_s)
            .step_by(self.headway_s as usize)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRoute {
    pub route_id: String,
    pub cells: Vec<Cell>,
    /// Positions into `cells` where the route stops.
    pub stop_at: Vec<usize>,
}

impl SynthRoute {
    fn stop_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.stop_at.iter().map(|&i| self.cells[i])
    }
}

pub fn stop_id((r, c): Cell) -> String {
    format!("S{r:02}_{c:02}")
}

/// Lines along even rows (east then west) followed by even columns (north
/// then south); the first `n_routes` are used.
fn layout(spec: &SynthSpec) -> Vec<SynthRoute> {
    let last = |n: u32| (n - 1) / 2 * 2;
    let (max_r, max_c) = (last(spec.rows), last(spec.cols));
    let mut lines: Vec<(String, Vec<Cell>)> = Vec::new();
    for r in (0..spec.rows).step_by(2) {
        let east: Vec<Cell> = (0..=max_c).map(|c| (r, c)).collect();
        let west = east.iter().rev().copied().collect();
        lines.push((format!("H{r:02}E"), east));
        lines.push((format!("H{r:02}W"), west));
    }
    for c in (0..spec.cols).step_by(2) {
        let north: Vec<Cell> = (0..=max_r).map(|r| (r, c)).collect();
        let south = north.iter().rev().copied().collect();
        lines.push((format!("V{c:02}N"), north));
        lines.push((format!("V{c:02}S"), south));
    }
    lines
        .into_iter()
        .take(spec.n_routes)
        .map(|(route_id, cells)| {
            let stop_at = (0..cells.len())
                .filter(|i| (*i as u32).is_multiple_of(spec.stop_every))
                .collect();
            SynthRoute {
                route_id,
                cells,
                stop_at,
            }
        })
        .collect()
}

/// Extra delay of each slow directed block, per period.
fn slow_blocks(spec: &SynthSpec, streets: &BTreeSet<[Cell; 2]>) -> Result<BTreeMap<[Cell; 2], [f64; 5]>> {
    let mut out: BTreeMap<[Cell; 2], [f64; 5]> = BTreeMap::new();
    for corridor in &spec.slow_corridors {
        if corridor.path.len() < 2 {
            return Err(Error::Invalid("corridor path needs at least two cells".into()));
        }
        for (b, share) in corridor.blocks() {
            if !streets.contains(&b) {
                return Err(Error::Invalid(format!(
                    "corridor block {:?} -> {:?} is not a street of the generated network",
                    b[0], b[1]
                )));
            }
            let delays = out.entry(b).or_insert([0.0; 5]);
            for p in TimePeriod::ALL.into_iter().filter(|p| corridor.active(*p)) {
                delays[p.index()] += share;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub cells: Vec<Cell>,
    pub length_m: f64,
    /// Planted delay along the detour in this period.
    pub delay_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegTruth {
    pub period: TimePeriod,
    pub leg_index: usize,
    pub from_stop: String,
    pub to_stop: String,
    pub original_cells: Vec<Cell>,
    pub original_delay_s: f64,
    /// Fewest-block path between the two stops avoiding every block slow in this period.
    pub detour: Option<Detour>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteTruth {
    pub route_id: String,
    pub crosses_corridor: bool,
    /// Periods in which the route runs over a slow block.
    pub slow_periods: Vec<TimePeriod>,
    pub legs: Vec<LegTruth>,
    /// A detour exists for every slow leg in every slow period.
    pub has_detour: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub spec: SynthSpec,
    pub routes: Vec<RouteTruth>,
    pub crossing_routes: Vec<String>,
}

impl GroundTruth {
    pub fn route(&self, id: &str) -> Option<&RouteTruth> {
        self.routes.iter().find(|r| r.route_id == id)
    }
}

/// Generated inputs keyed by path relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCity {
    pub files: BTreeMap<String, String>,
    pub ground_truth: GroundTruth,
    pub routes: Vec<SynthRoute>,
}

pub const GTFS_DIR: &str = "gtfs";
pub const SMARTCARD_FILE: &str = "smartcard.csv";
pub const POI_FILE: &str = "pois.geojson";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

impl SynthCity {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn deg(x: f64) -> String {
    format!("{x:.7}")
}

fn bfs_detour(
    streets: &BTreeMap<Cell, BTreeSet<Cell>>,
    from: Cell,
    to: Cell,
    avoid: &BTreeSet<[Cell; 2]>,
) -> Option<Vec<Cell>> {
    let mut parent: BTreeMap<Cell, Cell> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            while let Some(p) = parent.get(path.last().expect("non-empty")) {
                path.push(*p);
            }
            path.reverse();
            return Some(path);
        }
        for &v in streets.get(&u).into_iter().flatten() {
            if !avoid.contains(&[u, v]) && seen.insert(v) {
                parent.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    None
}

fn ground_truth(
    spec: &SynthSpec,
    routes: &[SynthRoute],
    streets: &BTreeMap<Cell, BTreeSet<Cell>>,
    slow: &BTreeMap<[Cell; 2], [f64; 5]>,
) -> GroundTruth {
    let delay = |cells: &[Cell], p: TimePeriod| -> f64 {
        cells
            .windows(2)
            .map(|w| slow.get(&[w[0], w[1]]).map_or(0.0, |d| d[p.index()]))
            .sum()
    };
    let mut out = Vec::new();
    for r in routes {
        let mut legs = Vec::new();
        let mut slow_periods = BTreeSet::new();
        for p in TimePeriod::ALL {
            let avoid: BTreeSet<[Cell; 2]> = slow
                .iter()
                .filter(|(_, d)| d[p.index()] > 0.0)
                .map(|(b, _)| *b)
                .collect();
            for (k, w) in r.stop_at.windows(2).enumerate() {
                let cells = &r.cells[w[0]..=w[1]];
                let original_delay_s = delay(cells, p);
                if original_delay_s <= 0.0 {
                    continue;
                }
                slow_periods.insert(p);
                let detour = bfs_detour(streets, cells[0], cells[cells.len() - 1], &avoid).map(|d| Detour {
                    length_m: (d.len() - 1) as f64 * spec.spacing_m,
                    delay_s: delay(&d, p),
                    cells: d,
                });
                legs.push(LegTruth {
                    period: p,
                    leg_index: k,
                    from_stop: stop_id(cells[0]),
                    to_stop: stop_id(cells[cells.len() - 1]),
                    original_cells: cells.to_vec(),
                    original_delay_s,
                    detour,
                });
            }
        }
        out.push(RouteTruth {
            route_id: r.route_id.clone(),
            crosses_corridor: !legs.is_empty(),
            slow_periods: slow_periods.into_iter().collect(),
            has_detour: !legs.is_empty() && legs.iter().all(|l| l.detour.is_some()),
            legs,
        });
    }
    GroundTruth {
        seed: spec.seed,
        spec: spec.clone(),
        crossing_routes: out
            .iter()
            .filter(|r| r.crosses_corridor)
            .map(|r| r.route_id.clone())
            .collect(),
        routes: out,
    }
}

/// Build the GTFS feed, smart-card taps, POIs and ground truth for `spec`.
/// Output depends only on `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCity> {
    spec.validate()?;
    let routes = layout(spec);
    let mut streets: BTreeMap<Cell, BTreeSet<Cell>> = BTreeMap::new();
    let mut blocks: BTreeSet<[Cell; 2]> = BTreeSet::new();
    for r in &routes {
        for w in r.cells.windows(2) {
            streets.entry(w[0]).or_default().insert(w[1]);
            blocks.insert([w[0], w[1]]);
        }
    }
    let slow = slow_blocks(spec, &blocks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let departures = spec.departures();
    let mut files = BTreeMap::new();

    // GTFS
    let stop_cells: BTreeSet<Cell> = routes.iter().flat_map(SynthRoute::stop_cells).collect();
    let mut stops = String::from("stop_id,stop_name,stop_lat,stop_lon\n");
    for c in &stop_cells {
        let p = spec.cell_pos(*c);
        writeln!(
            stops,
            "{},Row {} Col {},{},{}",
            stop_id(*c),
            c.0,
            c.1,
            deg(p.lat),
            deg(p.lon)
        )
        .unwrap();
    }
    let mut routes_txt = String::from("route_id,route_short_name,route_type\n");
    let mut shapes = String::from("shape_id,shape_pt_lat,shape_pt_lon,shape_pt_sequence\n");
    let mut trips = String::from("route_id,service_id,trip_id,shape_id\n");
    let mut stop_times = String::from("trip_id,arrival_time,departure_time,stop_id,stop_sequence\n");
    for r in &routes {
        writeln!(routes_txt, "{0},{0},3", r.route_id).unwrap();
        for (i, c) in r.cells.iter().enumerate() {
            let p = spec.cell_pos(*c);
            writeln!(shapes, "shp_{},{},{},{}", r.route_id, deg(p.lat), deg(p.lon), i + 1).unwrap();
        }
        for dep in &departures {
            let trip_id = trip_id(&r.route_id, *dep);
            writeln!(trips, "{},daily,{},shp_{}", r.route_id, trip_id, r.route_id).unwrap();
            for (seq, &i) in r.stop_at.iter().enumerate() {
                let t = format_service_time(dep + i as u32 * spec.block_secs);
                writeln!(stop_times, "{trip_id},{t},{t},{},{}", stop_id(r.cells[i]), seq + 1).unwrap();
            }
        }
    }
    let end = spec.start_date + Duration::days(i64::from(spec.n_days.max(1)) - 1);
    let calendar = format!(
        "service_id,monday,tuesday,wednesday,thursday,friday,saturday,sunday,start_date,end_date\ndaily,1,1,1,1,1,1,1,{},{}\n",
        spec.start_date.format("%Y%m%d"),
        end.format("%Y%m%d")
    );
    for (name, text) in [
        ("stops.txt", stops),
        ("routes.txt", routes_txt),
        ("trips.txt", trips),
        ("stop_times.txt", stop_times),
        ("shapes.txt", shapes),
        ("calendar.txt", calendar),
    ] {
        files.insert(format!("{GTFS_DIR}/{name}"), text);
    }

    // smart-card taps
    let mut taps = String::from("card_id,trip_id,boarding_stop_id,boarding_time\n");
    let mut card = 0u64;
    for day in 0..spec.n_days {
        let date = spec.start_date + Duration::days(i64::from(day));
        for r in &routes {
            for &i in &r.stop_at {
                for k in 0..spec.boardings_per_stop_per_day {
                    let dep = departures[k % departures.len()];
                    let sched = dep + i as u32 * spec.block_secs;
                    let delay: f64 = (0..i)
                        .map(|j| {
                            let at = dep + j as u32 * spec.block_secs;
                            let p = TimePeriod::of_secs(at);
                            slow.get(&[r.cells[j], r.cells[j + 1]]).map_or(0.0, |d| d[p.index()])
                        })
                        .sum();
                    let noise = if spec.noise_s > 0.0 {
                        rng.gen_range(-spec.noise_s..=spec.noise_s)
                    } else {
                        0.0
                    };
                    let secs = (f64::from(sched) + delay + noise).round().max(0.0) as u32;
                    let ts = Timestamp { date, secs };
                    writeln!(
                        taps,
                        "card{card:08},{},{},{ts}",
                        trip_id(&r.route_id, dep),
                        stop_id(r.cells[i])
                    )
                    .unwrap();
                    card += 1;
                }
            }
        }
    }
    files.insert(SMARTCARD_FILE.to_string(), taps);

    files.insert(POI_FILE.to_string(), pois(spec, &blocks, &slow, &stop_cells, &mut rng));

    let truth = ground_truth(spec, &routes, &streets, &slow);
    files.insert(
        GROUND_TRUTH_FILE.to_string(),
        serde_json::to_string_pretty(&truth)? + "\n",
    );
    Ok(SynthCity {
        files,
        ground_truth: truth,
        routes,
    })
}

fn trip_id(route_id: &str, dep: u32) -> String {
    format!("{route_id}_{:02}{:02}", dep / 3600, (dep / 60) % 60)
}

/// Point `t` of the way along a block, shifted `offset` metres to its left.
fn along(spec: &SynthSpec, [a, b]: [Cell; 2], t: f64, offset: f64) -> LatLon {
    let (ay, ax) = (f64::from(a.0), f64::from(a.1));
    let (by, bx) = (f64::from(b.0), f64::from(b.1));
    let (dx, dy) = (bx - ax, by - ay);
    let x = (ax + t * dx) * spec.spacing_m - dy * offset;
    let y = (ay + t * dy) * spec.spacing_m + dx * offset;
    Projection::new(spec.origin).unproject(Xy { x, y })
}

fn pois(
    spec: &SynthSpec,
    blocks: &BTreeSet<[Cell; 2]>,
    slow: &BTreeMap<[Cell; 2], [f64; 5]>,
    stop_cells: &BTreeSet<Cell>,
    rng: &mut ChaCha8Rng,
) -> String {
    // one entry per undirected street block
    let streets: Vec<[Cell; 2]> = blocks.iter().filter(|[a, b]| a < b).copied().collect();
    let mut features: Vec<(&str, LatLon)> = Vec::new();
    for &blk in &streets {
        let is_slow = slow.contains_key(&blk) || slow.contains_key(&[blk[1], blk[0]]);
        if is_slow {
            let n = spec.corridor_lights;
            for k in 0..n {
                let t = f64::from(k + 1) / f64::from(n + 1);
                features.push(("traffic_light", along(spec, blk, t, 5.0)));
            }
        } else if rng.gen_bool(0.5) {
            features.push(("traffic_light", along(spec, blk, 0.5, 5.0)));
        }
    }
    for c in stop_cells {
        features.push(("pt_stop", spec.cell_pos(*c)));
    }
    for (kind, n) in [
        ("petrol_station", spec.n_petrol_stations),
        ("public_parking", spec.n_public_parking),
        ("private_parking", spec.n_private_parking),
    ] {
        for _ in 0..n {
            let blk = streets[rng.gen_range(0..streets.len())];
            let t = rng.gen_range(0.25..0.75);
            features.push((kind, along(spec, blk, t, 10.0)));
        }
    }
    let features: Vec<serde_json::Value> = features
        .into_iter()
        .map(|(kind, p)| {
            serde_json::json!({
                "type": "Feature",
                "properties": { "kind": kind },
                "geometry": { "type": "Point", "coordinates": [round7(p.lon), round7(p.lat)] },
            })
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "type": "FeatureCollection", "features": features }))
        .expect("valid json")
        + "\n"
}

fn round7(x: f64) -> f64 {
    (x * 1e7).round() / 1e7
}

/// Follow a sequence of grid cells through the graph, returning the edges
/// whose polylines trace it.
pub fn cells_to_edges(graph: &RoadNetwork, spec: &SynthSpec, cells: &[Cell]) -> Option<Vec<EdgeId>> {
    const TOL_M: f64 = 1.0;
    let pts: Vec<Xy> = cells
        .iter()
        .map(|c| graph.projection.project(spec.cell_pos(*c)))
        .collect();
    let near = |a: LatLon, b: Xy| graph.projection.project(a).dist(b) <= TOL_M;
    let mut at = graph.nodes.iter().find(|n| near(n.pos, pts[0]))?.id;
    let mut i = 0;
    let mut out = Vec::new();
    while i + 1 < pts.len() {
        let e = graph.out_edges(at).iter().copied().find(|&e| {
            let line = &graph.edge(e).polyline;
            line.len() <= pts.len() - i && line.iter().zip(&pts[i..]).all(|(p, q)| near(*p, *q))
        })?;
        let edge = graph.edge(e);
        i += edge.polyline.len() - 1;
        at = edge.to;
        out.push(e);
    }
    Some(out)
}

/// Graph nodes of the generated stops, or `None` if one is missing.
pub fn stop_nodes(graph: &RoadNetwork, cells: &[Cell]) -> Option<Vec<NodeId>> {
    cells.iter().map(|c| graph.stop_node(&stop_id(*c))).collect()
}

pub const MAX_BRUTE_FORCE_NODES: usize = 12;

/// Cheapest simple path by exhaustive enumeration, ties to the
/// lexicographically smallest edge sequence. `Ok(None)` when unreachable;
/// rejects legs whose relevant subgraph exceeds [`MAX_BRUTE_FORCE_NODES`].
pub fn brute_force_leg<W: Weight>(wg: &WeightedGraph<W>, from: NodeId, to: NodeId) -> Result<Option<(W, Vec<EdgeId>)>> {
    let g = wg.base();
    let reach = |start: NodeId, forward: bool| -> Vec<bool> {
        let mut seen = vec![false; g.node_count()];
        seen[start.idx()] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let next: Vec<NodeId> = if forward {
                g.out_edges(v).iter().map(|e| g.edge(*e).to).collect()
            } else {
                g.in_edges(v).iter().map(|e| g.edge(*e).from).collect()
            };
            for u in next {
                if !seen[u.idx()] {
                    seen[u.idx()] = true;
                    stack.push(u);
                }
            }
        }
        seen
    };
    let fwd = reach(from, true);
    if !fwd[to.idx()] {
        return Ok(None);
    }
    let bwd = reach(to, false);
    let keep: Vec<bool> = fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect();
    let nodes = keep.iter().filter(|k| **k).count();
    if nodes > MAX_BRUTE_FORCE_NODES {
        return Err(Error::TooLarge {
            nodes,
            max: MAX_BRUTE_FORCE_NODES,
        });
    }

    struct Search<'a, W> {
        wg: &'a WeightedGraph<W>,
        keep: Vec<bool>,
        on_path: Vec<bool>,
        edges: Vec<EdgeId>,
        best: Option<(W, Vec<EdgeId>)>,
        to: NodeId,
    }
    impl<W: Weight> Search<'_, W> {
        fn dfs(&mut self, v: NodeId) {
            if v == self.to {
                let cost = self.wg.path_cost(&self.edges);
                let better = match &self.best {
                    None => true,
                    Some((c, e)) => cost < *c || (cost == *c && self.edges < *e),
                };
                if better {
                    self.best = Some((cost, self.edges.clone()));
                }
                return;
            }
            let g = self.wg.base();
            for &e in g.out_edges(v) {
                let u = g.edge(e).to;
                if self.keep[u.idx()] && !self.on_path[u.idx()] {
                    self.on_path[u.idx()] = true;
                    self.edges.push(e);
                    self.dfs(u);
                    self.edges.pop();
                    self.on_path[u.idx()] = false;
                }
            }
        }
    }
    let mut s = Search {
        wg,
        on_path: vec![false; g.node_count()],
        keep,
        edges: Vec::new(),
        best: None,
        to,
    };
    s.on_path[from.idx()] = true;
    s.dfs(from);
    Ok(s.best)
}

/// Sum of brute-force leg costs; `Ok(None)` if any leg is unreachable.
pub fn brute_force_route<W: Weight>(wg: &WeightedGraph<W>, stops: &[NodeId]) -> Result<Option<W>> {
    let mut total = W::zero();
    for w in stops.windows(2) {
        match brute_force_leg(wg, w[0], w[1])? {
            Some((c, _)) => total = total + c,
            None => return Ok(None),
        }
    }
    Ok(Some(total))
}
