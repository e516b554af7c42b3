//! Per-period ranking of route improvements.

use serde::{Deserialize, Serialize};

use super::RouteSuggestion;
use crate::network::TimePeriod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub route_id: String,
    pub improvement_pct: f64,
    pub changed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p75: f64,
    pub p90: f64,
    pub p95: f64,
}

/// `[lo, hi)` in percent; the last bin also holds 100.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDistribution {
    pub period: TimePeriod,
    pub n_routes: usize,
    pub n_changed: usize,
    pub changed_fraction: f64,
    pub percentiles: Percentiles,
    /// Descending improvement, ties by route id.
    pub ranking: Vec<RankEntry>,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementDistribution {
    pub periods: Vec<PeriodDistribution>,
}

impl ImprovementDistribution {
    pub fn period(&self, p: TimePeriod) -> Option<&PeriodDistribution> {
        self.periods.iter().find(|d| d.period == p)
    }
}

/// Nearest-rank percentile of ascending `sorted`; 0 for an empty slice.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn histogram(values: &[f64]) -> Vec<HistogramBin> {
    let mut bins: Vec<HistogramBin> = (0..100)
        .map(|k| HistogramBin {
            lo: k as f64,
            hi: (k + 1) as f64,
            count: 0,
        })
        .collect();
    for v in values {
        let k = (v.floor().max(0.0) as usize).min(99);
        bins[k].count += 1;
    }
    bins
}

/// Group suggestions by period, in period order; periods without any
/// suggestion are omitted.
pub fn rank_routes(suggestions: &[RouteSuggestion]) -> ImprovementDistribution {
    let periods = TimePeriod::ALL
        .iter()
        .filter_map(|&period| {
            let mut ranking: Vec<RankEntry> = suggestions
                .iter()
                .filter(|s| s.period == period)
                .map(|s| RankEntry {
                    route_id: s.route_id.clone(),
                    improvement_pct: s.improvement_pct,
                    changed: s.changed,
                })
                .collect();
            if ranking.is_empty() {
                return None;
            }
            ranking.sort_by(|a, b| {
                b.improvement_pct
                    .total_cmp(&a.improvement_pct)
                    .then_with(|| a.route_id.cmp(&b.route_id))
            });
            let mut values: Vec<f64> = ranking.iter().map(|r| r.improvement_pct).collect();
            values.sort_by(f64::total_cmp);
            let n_changed = ranking.iter().filter(|r| r.changed).count();
            Some(PeriodDistribution {
                period,
                n_routes: ranking.len(),
                n_changed,
                changed_fraction: n_changed as f64 / ranking.len() as f64,
                percentiles: Percentiles {
                    p50: nearest_rank(&values, 50.0),
                    p75: nearest_rank(&values, 75.0),
                    p90: nearest_rank(&values, 90.0),
                    p95: nearest_rank(&values, 95.0),
                },
                histogram: histogram(&values),
                ranking,
            })
        })
        .collect();
    ImprovementDistribution { periods }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::AttributeComparison;

    fn suggestion(id: &str, period: TimePeriod, pct: f64) -> RouteSuggestion {
        RouteSuggestion {
            route_id: id.into(),
            period,
            stop_ids: vec![],
            stop_sequence: vec![],
            original_path: vec![],
            proposed_path: vec![],
            original_cost: 100.0,
            proposed_cost: 100.0 - pct,
            improvement_pct: pct,
            changed: pct > 0.0,
            attribute_comparison: AttributeComparison {
                original: Default::default(),
                proposed: Default::default(),
            },
            original_geometry: serde_json::Value::Null,
            proposed_geometry: serde_json::Value::Null,
        }
    }

    #[test]
    fn all_unchanged() {
        let s: Vec<_> = (0..10)
            .map(|i| suggestion(&format!("r{i}"), TimePeriod::Noon, 0.0))
            .collect();
        let d = rank_routes(&s);
        let noon = d.period(TimePeriod::Noon).unwrap();
        assert_eq!(noon.changed_fraction, 0.0);
        assert_eq!(
            noon.percentiles,
            Percentiles {
                p50: 0.0,
                p75: 0.0,
                p90: 0.0,
                p95: 0.0
            }
        );
        assert_eq!(noon.histogram[0].count, 10);
        assert!(d.period(TimePeriod::Night).is_none());
    }

    #[test]
    fn nearest_rank_by_hand() {
        // 20 values: eighteen zeros, then 10 and 20
        let mut v = vec![0.0; 18];
        v.extend([10.0, 20.0]);
        assert_eq!(nearest_rank(&v, 50.0), 0.0); // rank 10
        assert_eq!(nearest_rank(&v, 90.0), 0.0); // rank 18
        assert_eq!(nearest_rank(&v, 95.0), 10.0); // rank 19
        assert_eq!(nearest_rank(&v, 100.0), 20.0);
        let w = [0.0, 0.0, 10.0, 20.0];
        assert_eq!(nearest_rank(&w, 50.0), 0.0); // rank 2
        assert_eq!(nearest_rank(&w, 75.0), 10.0); // rank 3
        assert_eq!(nearest_rank(&w, 90.0), 20.0); // rank 4
        assert_eq!(nearest_rank(&[], 50.0), 0.0);
    }

    #[test]
    fn ranking_order_and_bins() {
        let s = vec![
            suggestion("b", TimePeriod::Morning, 12.5),
            suggestion("a", TimePeriod::Morning, 12.5),
            suggestion("c", TimePeriod::Morning, 0.0),
            suggestion("d", TimePeriod::Morning, 99.9),
        ];
        let d = rank_routes(&s);
        let m = d.period(TimePeriod::Morning).unwrap();
        let ids: Vec<&str> = m.ranking.iter().map(|r| r.route_id.as_str()).collect();
        assert_eq!(ids, ["d", "a", "b", "c"]);
        assert_eq!(m.histogram.len(), 100);
        assert_eq!(m.histogram[12].count, 2);
        assert_eq!(m.histogram[99].count, 1);
        assert_eq!(m.n_changed, 3);
        assert_eq!(m.changed_fraction, 0.75);
    }
}
