//! Per-period weighted graphs, shortest paths and route suggestions.

mod rank;
mod suggest;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LatenessModel;
use crate::network::{EdgeId, NodeId, RoadNetwork, TimePeriod};
use crate::scalar::{Real, Weight};

pub use rank::{
    nearest_rank, rank_routes, HistogramBin, ImprovementDistribution, Percentiles, PeriodDistribution, RankEntry,
};
pub use suggest::{
    optimal_stop_order, route_patterns, suggest_all, suggest_route, whatif_remove_stop, AttributeComparison,
    PatternReport, RoutePattern, RouteSuggestion, StopOrder, SuggestDiagnostic, WhatIf, MAX_REORDER_STOPS,
};

/// Road network with one positive weight per edge.
#[derive(Debug, Clone)]
pub struct WeightedGraph<W> {
    base: Arc<RoadNetwork>,
    period: TimePeriod,
    weights: Vec<W>,
}

/// A directed path and its forward-summed cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Path<W> {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
    pub cost: W,
}

struct Queued<W>(W, NodeId);

impl<W: PartialOrd> PartialEq for Queued<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<W: PartialOrd> Eq for Queued<W> {}

impl<W: PartialOrd> PartialOrd for Queued<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: PartialOrd> Ord for Queued<W> {
    // reversed so the max-heap pops the smallest distance
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl<W: Weight> WeightedGraph<W> {
    pub fn new(base: Arc<RoadNetwork>, period: TimePeriod, weights: Vec<W>) -> Result<Self> {
        if weights.len() != base.edge_count() {
            return Err(Error::Invalid(format!(
                "{} weights for {} edges",
                weights.len(),
                base.edge_count()
            )));
        }
        if let Some(i) = weights
            .iter()
            .position(|w| w.partial_cmp(&W::zero()) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::Invalid(format!(
                "edge {i} has a non-positive weight {:?}",
                weights[i]
            )));
        }
        Ok(Self { base, period, weights })
    }

    pub fn uniform(base: Arc<RoadNetwork>, period: TimePeriod, w: W) -> Result<Self> {
        let n = base.edge_count();
        Self::new(base, period, vec![w; n])
    }

    pub fn base(&self) -> &RoadNetwork {
        &self.base
    }

    pub fn base_arc(&self) -> &Arc<RoadNetwork> {
        &self.base
    }

    pub fn period(&self) -> TimePeriod {
        self.period
    }

    pub fn weight(&self, e: EdgeId) -> W {
        self.weights[e.idx()]
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    /// Sum of edge weights, left to right.
    pub fn path_cost(&self, edges: &[EdgeId]) -> W {
        edges.iter().fold(W::zero(), |acc, e| acc + self.weight(*e))
    }

    /// Distance from every node to `target`; `None` where unreachable.
    pub fn distances_to(&self, target: NodeId) -> Vec<Option<W>> {
        let g = &*self.base;
        let mut dist: Vec<Option<W>> = vec![None; g.node_count()];
        let mut done = vec![false; g.node_count()];
        let mut heap = BinaryHeap::new();
        dist[target.idx()] = Some(W::zero());
        heap.push(Queued(W::zero(), target));
        while let Some(Queued(d, v)) = heap.pop() {
            if done[v.idx()] {
                continue;
            }
            done[v.idx()] = true;
            for &e in g.in_edges(v) {
                let u = g.edge(e).from;
                let cand = self.weight(e) + d;
                if dist[u.idx()].is_none_or(|cur| cand < cur) {
                    dist[u.idx()] = Some(cand);
                    heap.push(Queued(cand, u));
                }
            }
        }
        dist
    }

    /// Minimum-weight path; among equal-cost paths the one with the
    /// lexicographically smallest edge-id sequence. `None` when unreachable.
    pub fn shortest_path(&self, from: NodeId, to: NodeId) -> Option<Path<W>> {
        let dist = self.distances_to(to);
        self.walk_tight(from, to, &dist)
    }

    /// Greedy walk along the smallest-id edge that stays on some optimal path.
    fn walk_tight(&self, from: NodeId, to: NodeId, dist: &[Option<W>]) -> Option<Path<W>> {
        dist[from.idx()]?;
        let g = &*self.base;
        let mut nodes = vec![from];
        let mut edges = Vec::new();
        let mut at = from;
        while at != to {
            let here = dist[at.idx()].expect("on a reachable node");
            let next = g.out_edges(at).iter().copied().find(|&e| {
                let x = g.edge(e).to;
                dist[x.idx()].is_some_and(|dx| self.weight(e) + dx == here)
            })?;
            edges.push(next);
            at = g.edge(next).to;
            nodes.push(at);
        }
        let cost = self.path_cost(&edges);
        Some(Path { nodes, edges, cost })
    }

    /// Weights converted to `f64` for export.
    pub fn to_table(&self) -> WeightTable {
        WeightTable {
            period: self.period,
            weights: self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect(),
        }
    }
}

impl WeightedGraph<f64> {
    pub fn from_table(base: Arc<RoadNetwork>, table: &WeightTable) -> Result<Self> {
        Self::new(base, table.period, table.weights.clone())
    }
}

/// Serialized weights of one period, indexed by edge id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTable {
    pub period: TimePeriod,
    pub weights: Vec<f64>,
}

/// Weight every edge with the model's clamped prediction for `period`.
pub fn weigh_graph<F: Real>(
    base: Arc<RoadNetwork>,
    model: &LatenessModel<F>,
    period: TimePeriod,
) -> Result<WeightedGraph<F>> {
    let weights = base
        .attrs
        .iter()
        .map(|a| model.predict(a, period))
        .collect::<Result<Vec<F>>>()?;
    WeightedGraph::new(base, period, weights)
}
