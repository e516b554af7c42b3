//! GTFS, smart-card and POI ingestion, and the boarding-to-schedule join that
//! produces lateness samples.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use csv::StringRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::LatLon;
use crate::time::{parse_service_time, Timestamp, SECS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub stop_id: String,
    pub name: String,
    pub pos: LatLon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub route_id: String,
    #[serde(default)]
    pub short_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServicePeriod {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub route_id: String,
    pub shape_id: String,
    pub service_id: String,
    /// From `calendar.txt` when the feed has one.
    pub service_period: Option<ServicePeriod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTime {
    pub trip_id: String,
    pub stop_id: String,
    pub stop_sequence: u32,
    /// Seconds since midnight of the service date.
    pub scheduled_arrival: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapePoint {
    pub sequence: u32,
    pub pos: LatLon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub shape_id: String,
    /// Sorted by strictly increasing `sequence`; at least two points.
    pub points: Vec<ShapePoint>,
}

impl Shape {
    pub fn positions(&self) -> Vec<LatLon> {
        self.points.iter().map(|p| p.pos).collect()
    }
}

/// A parsed GTFS feed restricted to the tables the pipeline uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GtfsBundle {
    pub stops: BTreeMap<String, Stop>,
    pub routes: BTreeMap<String, Route>,
    pub trips: BTreeMap<String, Trip>,
    /// Per trip, sorted by strictly increasing `stop_sequence`.
    pub stop_times: BTreeMap<String, Vec<StopTime>>,
    pub shapes: BTreeMap<String, Shape>,
}

impl GtfsBundle {
    pub fn stop_time_count(&self) -> usize {
        self.stop_times.values().map(Vec::len).sum()
    }

    /// Trips with at least two timed stops.
    pub fn usable_trip_count(&self) -> usize {
        self.trips
            .keys()
            .filter(|t| self.stop_times.get(*t).is_some_and(|st| st.len() >= 2))
            .count()
    }

    pub fn trip_stop_times(&self, trip_id: &str) -> &[StopTime] {
        self.stop_times.get(trip_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Per-file parse outcome, serialized as `{file, rows_read, rows_dropped, reasons}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileReport {
    pub file: String,
    pub rows_read: usize,
    pub rows_dropped: usize,
    pub reasons: BTreeMap<String, usize>,
}

impl FileReport {
    pub fn new(file: impl Into<String>) -> Self {
        Self {
            file: file.into(),
            ..Default::default()
        }
    }

    pub fn drop_row(&mut self, reason: &str) {
        self.rows_dropped += 1;
        *self.reasons.entry(reason.to_owned()).or_default() += 1;
    }

    pub fn reason(&self, reason: &str) -> usize {
        self.reasons.get(reason).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParseReport {
    pub files: Vec<FileReport>,
}

impl ParseReport {
    pub fn file(&self, name: &str) -> Option<&FileReport> {
        self.files.iter().find(|f| f.file == name)
    }
}

struct Table {
    columns: HashMap<String, usize>,
    rows: Vec<StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    fn from_reader(rdr: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(rdr);
        let columns = rdr
            .headers()?
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim_start_matches('\u{feff}').to_owned(), i))
            .collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec?);
        }
        Ok(Self { columns, rows })
    }

    fn require(&self, file: &str, names: &[&'static str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.columns
                    .get(*n)
                    .copied()
                    .ok_or_else(|| Error::Invalid(format!("{file}: missing column `{n}`")))
            })
            .collect()
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }
}

fn field(rec: &StringRecord, idx: usize) -> Option<&str> {
    rec.get(idx).filter(|s| !s.is_empty())
}

fn open_required(dir: &Path, name: &str) -> Result<Table> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingFile(path));
    }
    Table::read(&path)
}

/// Parse a GTFS directory. Rows that are malformed or break referential
/// integrity are dropped and tallied in the returned report.
pub fn parse_gtfs(dir: &Path) -> Result<(GtfsBundle, ParseReport)> {
    // Open everything first so a missing file fails before any work.
    let stops_t = open_required(dir, "stops.txt")?;
    let routes_t = open_required(dir, "routes.txt")?;
    let trips_t = open_required(dir, "trips.txt")?;
    let stop_times_t = open_required(dir, "stop_times.txt")?;
    let shapes_t = open_required(dir, "shapes.txt")?;
    let calendar_path = dir.join("calendar.txt");
    let calendar_t = if calendar_path.is_file() {
        Some(Table::read(&calendar_path)?)
    } else {
        None
    };

    let mut bundle = GtfsBundle::default();
    let mut report = ParseReport::default();

    // stops
    let mut rep = FileReport::new("stops.txt");
    let [id, lat, lon]: [usize; 3] = stops_t
        .require("stops.txt", &["stop_id", "stop_lat", "stop_lon"])?
        .try_into()
        .unwrap();
    let name = stops_t.optional("stop_name");
    for rec in &stops_t.rows {
        rep.rows_read += 1;
        let parsed = (|| {
            let stop_id = field(rec, id)?.to_owned();
            let pos = LatLon::new(field(rec, lat)?.parse().ok()?, field(rec, lon)?.parse().ok()?);
            pos.is_valid().then_some(())?;
            let name = name.and_then(|i| rec.get(i)).unwrap_or_default().to_owned();
            Some(Stop { stop_id, name, pos })
        })();
        match parsed {
            Some(s) if bundle.stops.contains_key(&s.stop_id) => rep.drop_row("duplicate_id"),
            Some(s) => {
                bundle.stops.insert(s.stop_id.clone(), s);
            }
            None => rep.drop_row("malformed"),
        }
    }
    report.files.push(rep);

    // routes
    let mut rep = FileReport::new("routes.txt");
    let [id]: [usize; 1] = routes_t.require("routes.txt", &["route_id"])?.try_into().unwrap();
    let short = routes_t.optional("route_short_name");
    for rec in &routes_t.rows {
        rep.rows_read += 1;
        match field(rec, id) {
            Some(rid) if bundle.routes.contains_key(rid) => rep.drop_row("duplicate_id"),
            Some(rid) => {
                let short_name = short.and_then(|i| rec.get(i)).unwrap_or_default().to_owned();
                bundle.routes.insert(
                    rid.to_owned(),
                    Route {
                        route_id: rid.to_owned(),
                        short_name,
                    },
                );
            }
            None => rep.drop_row("malformed"),
        }
    }
    report.files.push(rep);

    // shapes
    let mut rep = FileReport::new("shapes.txt");
    let [id, lat, lon, seq]: [usize; 4] = shapes_t
        .require(
            "shapes.txt",
            &["shape_id", "shape_pt_lat", "shape_pt_lon", "shape_pt_sequence"],
        )?
        .try_into()
        .unwrap();
    let mut raw_shapes: BTreeMap<String, Vec<ShapePoint>> = BTreeMap::new();
    for rec in &shapes_t.rows {
        rep.rows_read += 1;
        let parsed = (|| {
            let sid = field(rec, id)?;
            let pos = LatLon::new(field(rec, lat)?.parse().ok()?, field(rec, lon)?.parse().ok()?);
            pos.is_valid().then_some(())?;
            let sequence = field(rec, seq)?.parse().ok()?;
            Some((sid.to_owned(), ShapePoint { sequence, pos }))
        })();
        match parsed {
            Some((sid, pt)) => raw_shapes.entry(sid).or_default().push(pt),
            None => rep.drop_row("malformed"),
        }
    }
    for (shape_id, mut points) in raw_shapes {
        points.sort_by_key(|p| p.sequence);
        let before = points.len();
        points.dedup_by_key(|p| p.sequence);
        for _ in points.len()..before {
            rep.drop_row("duplicate_sequence");
        }
        if points.len() < 2 {
            for _ in 0..points.len() {
                rep.drop_row("shape_too_short");
            }
            log::warn!("shape {shape_id} has fewer than 2 points; dropped");
            continue;
        }
        bundle.shapes.insert(shape_id.clone(), Shape { shape_id, points });
    }
    report.files.push(rep);

    // calendar (optional)
    let mut periods: HashMap<String, ServicePeriod> = HashMap::new();
    if let Some(cal) = &calendar_t {
        let mut rep = FileReport::new("calendar.txt");
        let [sid, start, end]: [usize; 3] = cal
            .require("calendar.txt", &["service_id", "start_date", "end_date"])?
            .try_into()
            .unwrap();
        for rec in &cal.rows {
            rep.rows_read += 1;
            let parsed = (|| {
                let start = NaiveDate::parse_from_str(field(rec, start)?, "%Y%m%d").ok()?;
                let end = NaiveDate::parse_from_str(field(rec, end)?, "%Y%m%d").ok()?;
                Some((field(rec, sid)?.to_owned(), ServicePeriod { start, end }))
            })();
            match parsed {
                Some((k, v)) => {
                    periods.insert(k, v);
                }
                None => rep.drop_row("malformed"),
            }
        }
        report.files.push(rep);
    }

    // trips
    let mut rep = FileReport::new("trips.txt");
    let [tid, rid, shid, svc]: [usize; 4] = trips_t
        .require("trips.txt", &["trip_id", "route_id", "shape_id", "service_id"])?
        .try_into()
        .unwrap();
    for rec in &trips_t.rows {
        rep.rows_read += 1;
        let Some((trip_id, route_id, shape_id, service_id)) =
            (|| Some((field(rec, tid)?, field(rec, rid)?, field(rec, shid)?, field(rec, svc)?)))()
        else {
            rep.drop_row("malformed");
            continue;
        };
        if !bundle.routes.contains_key(route_id) {
            rep.drop_row("unknown_route");
        } else if !bundle.shapes.contains_key(shape_id) {
            rep.drop_row("unknown_shape");
        } else if bundle.trips.contains_key(trip_id) {
            rep.drop_row("duplicate_id");
        } else {
            bundle.trips.insert(
                trip_id.to_owned(),
                Trip {
                    trip_id: trip_id.to_owned(),
                    route_id: route_id.to_owned(),
                    shape_id: shape_id.to_owned(),
                    service_id: service_id.to_owned(),
                    service_period: periods.get(service_id).copied(),
                },
            );
        }
    }
    report.files.push(rep);

    // stop_times
    let mut rep = FileReport::new("stop_times.txt");
    let [tid, sid, seq]: [usize; 3] = stop_times_t
        .require("stop_times.txt", &["trip_id", "stop_id", "stop_sequence"])?
        .try_into()
        .unwrap();
    let arr = stop_times_t.optional("arrival_time");
    let dep = stop_times_t.optional("departure_time");
    for rec in &stop_times_t.rows {
        rep.rows_read += 1;
        let parsed = (|| {
            let trip_id = field(rec, tid)?;
            let stop_id = field(rec, sid)?;
            let stop_sequence: u32 = field(rec, seq)?.parse().ok()?;
            Some((trip_id, stop_id, stop_sequence))
        })();
        let Some((trip_id, stop_id, stop_sequence)) = parsed else {
            rep.drop_row("malformed");
            continue;
        };
        let time = arr
            .and_then(|i| field(rec, i))
            .or_else(|| dep.and_then(|i| field(rec, i)));
        let Some(time) = time else {
            rep.drop_row("untimed");
            continue;
        };
        let Some(scheduled_arrival) = parse_service_time(time) else {
            rep.drop_row("bad_time");
            continue;
        };
        if !bundle.trips.contains_key(trip_id) {
            rep.drop_row("unknown_trip");
            continue;
        }
        if !bundle.stops.contains_key(stop_id) {
            rep.drop_row("unknown_stop");
            continue;
        }
        bundle.stop_times.entry(trip_id.to_owned()).or_default().push(StopTime {
            trip_id: trip_id.to_owned(),
            stop_id: stop_id.to_owned(),
            stop_sequence,
            scheduled_arrival,
        });
    }
    for times in bundle.stop_times.values_mut() {
        times.sort_by_key(|st| st.stop_sequence);
        let before = times.len();
        times.dedup_by_key(|st| st.stop_sequence);
        for _ in times.len()..before {
            rep.drop_row("duplicate_sequence");
        }
    }
    report.files.push(rep);

    Ok((bundle, report))
}

/// One smart-card tap.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoardingRecord {
    pub card_id: String,
    pub trip_id: Option<String>,
    pub boarding_stop_id: Option<String>,
    pub boarding_time: Timestamp,
}

pub fn parse_smartcard(path: &Path) -> Result<(Vec<BoardingRecord>, FileReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_smartcard_reader(file, &path.file_name().unwrap_or_default().to_string_lossy())
}

pub fn parse_smartcard_reader(rdr: impl Read, name: &str) -> Result<(Vec<BoardingRecord>, FileReport)> {
    let table = Table::from_reader(rdr)?;
    let [card, trip, stop, time]: [usize; 4] = table
        .require(name, &["card_id", "trip_id", "boarding_stop_id", "boarding_time"])?
        .try_into()
        .unwrap();
    let mut rep = FileReport::new(name);
    let mut out = Vec::with_capacity(table.rows.len());
    for rec in &table.rows {
        rep.rows_read += 1;
        let Some(card_id) = rec.get(card) else {
            rep.drop_row("malformed");
            continue;
        };
        let Some(boarding_time) = rec.get(time).and_then(Timestamp::parse) else {
            rep.drop_row("bad_timestamp");
            continue;
        };
        out.push(BoardingRecord {
            card_id: card_id.to_owned(),
            trip_id: field(rec, trip).map(str::to_owned),
            boarding_stop_id: field(rec, stop).map(str::to_owned),
            boarding_time,
        });
    }
    Ok((out, rep))
}

/// Keep only records that carry both a trip id and a boarding stop.
pub fn clean_boardings(records: &[BoardingRecord]) -> Vec<BoardingRecord> {
    records
        .iter()
        .filter(|r| r.trip_id.is_some() && r.boarding_stop_id.is_some())
        .cloned()
        .collect()
}

/// Drop repeated taps (same card, trip, stop and timestamp), keeping the first.
pub fn dedup_taps(records: &[BoardingRecord]) -> Vec<BoardingRecord> {
    let mut seen = HashSet::new();
    records.iter().filter(|r| seen.insert(*r)).cloned().collect()
}

/// Lateness of one boarding against its scheduled arrival.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatenessSample {
    pub line_id: String,
    pub trip_id: String,
    pub stop_id: String,
    pub stop_sequence: u32,
    /// Service date of the trip.
    pub date: NaiveDate,
    pub scheduled_s: u32,
    pub actual_s: u32,
    pub lateness_s: u32,
}

impl LatenessSample {
    pub fn timestamp(&self) -> Timestamp {
        Timestamp::new(self.date, self.actual_s)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinOutcome {
    pub samples: Vec<LatenessSample>,
    /// No stop_time for the record's (trip, stop).
    pub unmatched: usize,
    /// Boarded before the scheduled arrival.
    pub early: usize,
}

/// Join cleaned boardings to their scheduled stop times.
///
/// Taps recorded on the calendar day after the service date of an
/// after-midnight trip are moved back onto the service date. When a trip
/// visits the stop more than once the closest scheduled time wins.
pub fn join_lateness(records: &[BoardingRecord], gtfs: &GtfsBundle) -> JoinOutcome {
    let mut out = JoinOutcome::default();
    for rec in records {
        let (Some(trip_id), Some(stop_id)) = (&rec.trip_id, &rec.boarding_stop_id) else {
            out.unmatched += 1;
            continue;
        };
        let (Some(trip), Some(times)) = (gtfs.trips.get(trip_id), gtfs.stop_times.get(trip_id)) else {
            out.unmatched += 1;
            continue;
        };
        let ts = rec.boarding_time;
        let best = times
            .iter()
            .filter(|st| &st.stop_id == stop_id)
            .map(|st| {
                let (date, at) = if st.scheduled_arrival >= SECS_PER_DAY && ts.secs < SECS_PER_DAY {
                    (ts.date - Duration::days(1), ts.secs + SECS_PER_DAY)
                } else {
                    (ts.date, ts.secs)
                };
                (st, date, at)
            })
            .min_by_key(|(st, _, at)| (i64::from(*at) - i64::from(st.scheduled_arrival)).abs());
        let Some((st, date, at)) = best else {
            out.unmatched += 1;
            continue;
        };
        if at < st.scheduled_arrival {
            out.early += 1;
            continue;
        }
        out.samples.push(LatenessSample {
            line_id: trip.route_id.clone(),
            trip_id: trip_id.clone(),
            stop_id: stop_id.clone(),
            stop_sequence: st.stop_sequence,
            date,
            scheduled_s: st.scheduled_arrival,
            actual_s: at,
            lateness_s: at - st.scheduled_arrival,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiKind {
    TrafficLight,
    PtStop,
    PetrolStation,
    PublicParking,
    PrivateParking,
}

impl PoiKind {
    pub const ALL: [PoiKind; 5] = [
        PoiKind::TrafficLight,
        PoiKind::PtStop,
        PoiKind::PetrolStation,
        PoiKind::PublicParking,
        PoiKind::PrivateParking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoiKind::TrafficLight => "traffic_light",
            PoiKind::PtStop => "pt_stop",
            PoiKind::PetrolStation => "petrol_station",
            PoiKind::PublicParking => "public_parking",
            PoiKind::PrivateParking => "private_parking",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PoiSet {
    pub traffic_lights: Vec<LatLon>,
    pub pt_stops: Vec<LatLon>,
    pub petrol_stations: Vec<LatLon>,
    pub public_parking: Vec<LatLon>,
    pub private_parking: Vec<LatLon>,
}

impl PoiSet {
    pub fn of_kind(&self, kind: PoiKind) -> &[LatLon] {
        match kind {
            PoiKind::TrafficLight => &self.traffic_lights,
            PoiKind::PtStop => &self.pt_stops,
            PoiKind::PetrolStation => &self.petrol_stations,
            PoiKind::PublicParking => &self.public_parking,
            PoiKind::PrivateParking => &self.private_parking,
        }
    }

    pub fn push(&mut self, kind: PoiKind, p: LatLon) {
        match kind {
            PoiKind::TrafficLight => self.traffic_lights.push(p),
            PoiKind::PtStop => self.pt_stops.push(p),
            PoiKind::PetrolStation => self.petrol_stations.push(p),
            PoiKind::PublicParking => self.public_parking.push(p),
            PoiKind::PrivateParking => self.private_parking.push(p),
        }
    }

    pub fn len(&self) -> usize {
        PoiKind::ALL.iter().map(|k| self.of_kind(*k).len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// GeoJSON FeatureCollection in the format [`parse_pois`] reads.
    pub fn to_geojson(&self) -> serde_json::Value {
        let features: Vec<_> = PoiKind::ALL
            .iter()
            .flat_map(|k| {
                self.of_kind(*k).iter().map(move |p| {
                    serde_json::json!({
                        "type": "Feature",
                        "properties": { "kind": k.as_str() },
                        "geometry": { "type": "Point", "coordinates": [p.lon, p.lat] },
                    })
                })
            })
            .collect();
        serde_json::json!({ "type": "FeatureCollection", "features": features })
    }
}

/// Read a GeoJSON FeatureCollection of typed points.
pub fn parse_pois(path: &Path) -> Result<(PoiSet, FileReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text)?;
    parse_pois_value(&doc, &path.file_name().unwrap_or_default().to_string_lossy())
}

pub fn parse_pois_value(doc: &serde_json::Value, name: &str) -> Result<(PoiSet, FileReport)> {
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| Error::Invalid(format!("{name}: not a FeatureCollection")))?;
    let mut rep = FileReport::new(name);
    let mut pois = PoiSet::default();
    for feat in features {
        rep.rows_read += 1;
        let geom = &feat["geometry"];
        if geom["type"].as_str() != Some("Point") {
            rep.drop_row("non_point");
            continue;
        }
        let Some(kind) = feat["properties"]["kind"].as_str() else {
            rep.drop_row("unknown_kind");
            continue;
        };
        let Some(kind) = PoiKind::parse(kind) else {
            rep.drop_row("unknown_kind");
            continue;
        };
        let coords = geom["coordinates"].as_array();
        let pos = coords.and_then(|c| Some(LatLon::new(c.get(1)?.as_f64()?, c.first()?.as_f64()?)));
        match pos {
            Some(p) if p.is_valid() => pois.push(kind, p),
            _ => rep.drop_row("invalid_coordinates"),
        }
    }
    Ok((pois, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trip: Option<&str>, stop: Option<&str>, t: &str) -> BoardingRecord {
        BoardingRecord {
            card_id: "c".into(),
            trip_id: trip.map(Into::into),
            boarding_stop_id: stop.map(Into::into),
            boarding_time: Timestamp::parse(t).unwrap(),
        }
    }

    fn tiny_bundle(sched: u32) -> GtfsBundle {
        let mut b = GtfsBundle::default();
        b.trips.insert(
            "t1".into(),
            Trip {
                trip_id: "t1".into(),
                route_id: "r1".into(),
                shape_id: "s".into(),
                service_id: "wk".into(),
                service_period: None,
            },
        );
        b.stop_times.insert(
            "t1".into(),
            vec![StopTime {
                trip_id: "t1".into(),
                stop_id: "A".into(),
                stop_sequence: 1,
                scheduled_arrival: sched,
            }],
        );
        b
    }

    #[test]
    fn clean_keeps_complete_records() {
        let a = rec(Some("t"), Some("s"), "2019-01-01 08:00:00");
        assert_eq!(clean_boardings(std::slice::from_ref(&a)), vec![a]);
        let missing = [
            rec(None, Some("s"), "2019-01-01 08:00:00"),
            rec(Some("t"), None, "2019-01-01 08:00:00"),
        ];
        assert!(clean_boardings(&missing).is_empty());
    }

    #[test]
    fn late_and_early_arrivals() {
        let b = tiny_bundle(8 * 3600);
        let out = join_lateness(&[rec(Some("t1"), Some("A"), "2019-01-01 08:05:00")], &b);
        assert_eq!(out.samples.len(), 1);
        assert_eq!(out.samples[0].lateness_s, 300);

        let out = join_lateness(&[rec(Some("t1"), Some("A"), "2019-01-01 07:58:00")], &b);
        assert!(out.samples.is_empty());
        assert_eq!(out.early, 1);

        let out = join_lateness(&[rec(Some("t1"), Some("A"), "2019-01-01 08:00:00")], &b);
        assert_eq!(out.samples[0].lateness_s, 0);

        let out = join_lateness(&[rec(Some("t1"), Some("B"), "2019-01-01 08:00:00")], &b);
        assert_eq!(out.unmatched, 1);
    }

    #[test]
    fn after_midnight_tap_moves_to_service_date() {
        let b = tiny_bundle(25 * 3600 + 600);
        let out = join_lateness(&[rec(Some("t1"), Some("A"), "2019-01-02 01:12:00")], &b);
        let s = &out.samples[0];
        assert_eq!(s.date, NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        assert_eq!(s.lateness_s, 120);
        assert_eq!(s.actual_s, 25 * 3600 + 720);
    }

    #[test]
    fn dedup_drops_double_taps_only() {
        let a = rec(Some("t"), Some("s"), "2019-01-01 08:00:00");
        let b = rec(Some("t"), Some("s"), "2019-01-01 08:00:01");
        let out = dedup_taps(&[a.clone(), a.clone(), b.clone()]);
        assert_eq!(out, vec![a, b]);
    }

    #[test]
    fn smartcard_rows() {
        let csv = "card_id,trip_id,boarding_stop_id,boarding_time\n\
                   c1,t1,A,2019-01-01 08:00:00\n\
                   c2,,A,2019-01-01 08:01:00\n\
                   c3,t1,A,2019-01-01 25:99:99\n\
                   c4,t1,A,2019-01-01 48:00:00\n";
        let (recs, rep) = parse_smartcard_reader(csv.as_bytes(), "cards.csv").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].trip_id, None);
        assert_eq!(rep.reason("bad_timestamp"), 2);
    }

    #[test]
    fn pois_bucketed() {
        let doc = serde_json::json!({
            "type": "FeatureCollection",
            "features": [
                {"type": "Feature", "properties": {"kind": "traffic_light"}, "geometry": {"type": "Point", "coordinates": [34.0, 32.0]}},
                {"type": "Feature", "properties": {"kind": "fountain"}, "geometry": {"type": "Point", "coordinates": [34.0, 32.0]}},
                {"type": "Feature", "properties": {"kind": "pt_stop"}, "geometry": {"type": "LineString", "coordinates": [[34.0, 32.0], [34.1, 32.0]]}},
                {"type": "Feature", "properties": {"kind": "pt_stop"}, "geometry": {"type": "Point", "coordinates": [34.0, 95.0]}},
            ]
        });
        let (pois, rep) = parse_pois_value(&doc, "pois.geojson").unwrap();
        assert_eq!(pois.traffic_lights, vec![LatLon::new(32.0, 34.0)]);
        assert_eq!(pois.len(), 1);
        assert_eq!(rep.reason("unknown_kind"), 1);
        assert_eq!(rep.reason("non_point"), 1);
        assert_eq!(rep.reason("invalid_coordinates"), 1);
    }
}
