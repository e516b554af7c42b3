//! Fixed-stop-order route suggestions, stop-removal what-ifs and stop reordering.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WeightedGraph;
use crate::error::{Error, Result};
use crate::ingest::GtfsBundle;
use crate::network::{EdgeId, NodeId, RoadNetwork, SegmentAttributes, TimePeriod};
use crate::scalar::Weight;

/// Largest stop count accepted by [`optimal_stop_order`].
pub const MAX_REORDER_STOPS: usize = 8;

/// A route's stop sequence and its scheduled road path, split into legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePattern {
    pub route_id: String,
    /// Representative trip the pattern was taken from.
    pub trip_id: String,
    pub shape_id: String,
    pub stop_ids: Vec<String>,
    pub stops: Vec<NodeId>,
    /// `legs[i]` runs from `stops[i]` to `stops[i + 1]`.
    pub legs: Vec<Vec<EdgeId>>,
}

impl RoutePattern {
    pub fn path(&self) -> Vec<EdgeId> {
        self.legs.concat()
    }

    /// The same route with stop `index` deleted and its two legs merged.
    pub fn without_stop(&self, index: usize) -> Result<Self> {
        let len = self.stops.len();
        if index == 0 || index + 1 >= len {
            return Err(Error::EndpointRemoval { index, len });
        }
        let mut out = self.clone();
        out.stops.remove(index);
        out.stop_ids.remove(index);
        let tail = out.legs.remove(index);
        out.legs[index - 1].extend(tail);
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    /// Route id to the reason it has no usable pattern.
    pub excluded: BTreeMap<String, String>,
}

/// One pattern per route: the most frequent (shape, stop sequence) among its
/// trips, ties to the smallest trip id.
pub fn route_patterns(gtfs: &GtfsBundle, graph: &RoadNetwork) -> (Vec<RoutePattern>, PatternReport) {
    let mut report = PatternReport::default();
    let mut out = Vec::new();
    for route_id in gtfs.routes.keys() {
        let mut groups: BTreeMap<(String, Vec<String>), (usize, String)> = BTreeMap::new();
        for trip in gtfs.trips.values().filter(|t| &t.route_id == route_id) {
            let st = gtfs.trip_stop_times(&trip.trip_id);
            if st.len() < 2 {
                continue;
            }
            let key = (trip.shape_id.clone(), st.iter().map(|s| s.stop_id.clone()).collect());
            let entry = groups.entry(key).or_insert((0, trip.trip_id.clone()));
            entry.0 += 1;
            if trip.trip_id < entry.1 {
                entry.1 = trip.trip_id.clone();
            }
        }
        let best = groups
            .into_iter()
            .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then_with(|| b.1 .1.cmp(&a.1 .1)));
        let Some(((shape_id, stop_ids), (_, trip_id))) = best else {
            report
                .excluded
                .insert(route_id.clone(), "no trip with two or more timed stops".into());
            continue;
        };
        match pattern_of(graph, route_id, trip_id, shape_id, stop_ids) {
            Ok(p) => out.push(p),
            Err(reason) => {
                report.excluded.insert(route_id.clone(), reason);
            }
        }
    }
    (out, report)
}

fn pattern_of(
    graph: &RoadNetwork,
    route_id: &str,
    trip_id: String,
    shape_id: String,
    stop_ids: Vec<String>,
) -> std::result::Result<RoutePattern, String> {
    let shape = graph
        .shape_paths
        .get(&shape_id)
        .ok_or_else(|| format!("shape {shape_id} is not part of the graph"))?;
    let stops = stop_ids
        .iter()
        .map(|s| {
            graph
                .stop_node(s)
                .ok_or_else(|| format!("stop {s} is not mapped to a node"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let at = shape
        .locate(&stops)
        .ok_or_else(|| format!("stops of trip {trip_id} do not follow shape {shape_id}"))?;
    let legs = at
        .windows(2)
        .map(|w| shape.edges_between(w[0], w[1]).to_vec())
        .collect();
    Ok(RoutePattern {
        route_id: route_id.to_string(),
        trip_id,
        shape_id,
        stop_ids,
        stops,
        legs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeComparison {
    pub original: SegmentAttributes,
    pub proposed: SegmentAttributes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSuggestion {
    pub route_id: String,
    pub period: TimePeriod,
    pub stop_ids: Vec<String>,
    pub stop_sequence: Vec<NodeId>,
    pub original_path: Vec<EdgeId>,
    pub proposed_path: Vec<EdgeId>,
    pub original_cost: f64,
    pub proposed_cost: f64,
    pub improvement_pct: f64,
    pub changed: bool,
    pub attribute_comparison: AttributeComparison,
    pub original_geometry: serde_json::Value,
    pub proposed_geometry: serde_json::Value,
}

fn to_f64<W: Weight>(w: W) -> f64 {
    w.to_f64().unwrap_or(f64::NAN)
}

/// Replace each leg by its shortest path unless the scheduled leg is already
/// no more expensive. Both costs are sums of per-leg sums on `wg`.
pub fn suggest_route<W: Weight>(wg: &WeightedGraph<W>, pattern: &RoutePattern) -> Result<RouteSuggestion> {
    let g = wg.base();
    let (mut orig_cost, mut prop_cost) = (W::zero(), W::zero());
    let mut proposed = Vec::new();
    for (i, leg) in pattern.legs.iter().enumerate() {
        let (a, b) = (pattern.stops[i], pattern.stops[i + 1]);
        let leg_cost = wg.path_cost(leg);
        let best = wg.shortest_path(a, b).ok_or(Error::Unreachable {
            from: a.idx(),
            to: b.idx(),
        })?;
        orig_cost = orig_cost + leg_cost;
        if leg_cost <= best.cost {
            prop_cost = prop_cost + leg_cost;
            proposed.extend_from_slice(leg);
        } else {
            prop_cost = prop_cost + best.cost;
            proposed.extend(best.edges);
        }
    }
    let original = pattern.path();
    let (oc, pc) = (to_f64(orig_cost), to_f64(prop_cost));
    let improvement_pct = if oc > 0.0 {
        (100.0 * (oc - pc) / oc).max(0.0)
    } else {
        0.0
    };
    let geometry = |kind: &str, edges: &[EdgeId]| {
        g.path_geojson(
            edges,
            serde_json::json!({ "route_id": pattern.route_id, "period": wg.period(), "kind": kind }),
        )
    };
    Ok(RouteSuggestion {
        route_id: pattern.route_id.clone(),
        period: wg.period(),
        stop_ids: pattern.stop_ids.clone(),
        stop_sequence: pattern.stops.clone(),
        changed: proposed != original,
        attribute_comparison: AttributeComparison {
            original: g.path_attributes(&original),
            proposed: g.path_attributes(&proposed),
        },
        original_geometry: geometry("original", &original),
        proposed_geometry: geometry("proposed", &proposed),
        original_path: original,
        proposed_path: proposed,
        original_cost: oc,
        proposed_cost: pc,
        improvement_pct,
    })
}

/// A route left out of the suggestions and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestDiagnostic {
    pub route_id: String,
    pub period: TimePeriod,
    pub reason: String,
}

/// Suggestions for every pattern in input order; `parallel` only changes
/// scheduling, never the result.
pub fn suggest_all<W: Weight>(
    wg: &WeightedGraph<W>,
    patterns: &[RoutePattern],
    parallel: bool,
) -> (Vec<RouteSuggestion>, Vec<SuggestDiagnostic>) {
    let results: Vec<Result<RouteSuggestion>> = if parallel {
        patterns.par_iter().map(|p| suggest_route(wg, p)).collect()
    } else {
        patterns.iter().map(|p| suggest_route(wg, p)).collect()
    };
    let mut ok = Vec::new();
    let mut diag = Vec::new();
    for (p, r) in patterns.iter().zip(results) {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => diag.push(SuggestDiagnostic {
                route_id: p.route_id.clone(),
                period: wg.period(),
                reason: e.to_string(),
            }),
        }
    }
    (ok, diag)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub removed_stop_index: usize,
    pub removed_stop_id: String,
    /// Proposed cost with every stop kept.
    pub baseline_cost: f64,
    /// `baseline_cost - suggestion.proposed_cost`: time saved by skipping the stop.
    pub cost_delta: f64,
    pub suggestion: RouteSuggestion,
}

pub fn whatif_remove_stop<W: Weight>(
    wg: &WeightedGraph<W>,
    pattern: &RoutePattern,
    stop_index: usize,
) -> Result<WhatIf> {
    let reduced = pattern.without_stop(stop_index)?;
    let full = suggest_route(wg, pattern)?;
    let suggestion = suggest_route(wg, &reduced)?;
    Ok(WhatIf {
        removed_stop_index: stop_index,
        removed_stop_id: pattern.stop_ids[stop_index].clone(),
        baseline_cost: full.proposed_cost,
        cost_delta: full.proposed_cost - suggestion.proposed_cost,
        suggestion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopOrder {
    /// Positions into the input stop list, first and last fixed.
    pub order: Vec<usize>,
    pub stops: Vec<NodeId>,
    pub cost: f64,
    /// Cost of visiting the stops in the given order, when reachable.
    pub input_cost: Option<f64>,
    pub path: Vec<EdgeId>,
}

/// Exhaustive open-path ordering of the interior stops; ties go to the
/// lexicographically smallest order.
pub fn optimal_stop_order<W: Weight>(wg: &WeightedGraph<W>, stops: &[NodeId]) -> Result<StopOrder> {
    let k = stops.len();
    if k > MAX_REORDER_STOPS {
        return Err(Error::TooManyStops(k));
    }
    if k < 3 {
        return Err(Error::Invalid(format!("reordering needs at least 3 stops, got {k}")));
    }
    // dist[j][v]: distance from node v to stop j
    let dist: Vec<Vec<Option<W>>> = stops.iter().map(|s| wg.distances_to(*s)).collect();
    let leg = |a: usize, b: usize| dist[b][stops[a].idx()];
    let cost_of = |order: &[usize]| -> Option<W> {
        order
            .windows(2)
            .try_fold(W::zero(), |acc, w| leg(w[0], w[1]).map(|c| acc + c))
    };
    let identity: Vec<usize> = (0..k).collect();
    let mut best: Option<(W, Vec<usize>)> = None;
    for interior in (1..k - 1).permutations(k - 2) {
        let order: Vec<usize> = std::iter::once(0)
            .chain(interior)
            .chain(std::iter::once(k - 1))
            .collect();
        if let Some(c) = cost_of(&order) {
            if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
                best = Some((c, order));
            }
        }
    }
    let (cost, order) = best.ok_or(Error::Unreachable {
        from: stops[0].idx(),
        to: stops[k - 1].idx(),
    })?;
    let ordered: Vec<NodeId> = order.iter().map(|&i| stops[i]).collect();
    let mut path = Vec::new();
    for w in ordered.windows(2) {
        path.extend(wg.shortest_path(w[0], w[1]).expect("leg reachable").edges);
    }
    Ok(StopOrder {
        order,
        stops: ordered,
        cost: to_f64(cost),
        input_cost: cost_of(&identity).map(to_f64),
        path,
    })
}
