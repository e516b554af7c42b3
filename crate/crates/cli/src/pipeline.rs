//! Batch stages over a [`Workspace`]. Each stage's config hash chains the
//! hashes of the artifacts it reads, so a changed input or parameter marks
//! everything downstream stale.

use std::path::Path;
use std::sync::Arc;

use log::info;
use reroute_core::ingest::{
    clean_boardings, dedup_taps, join_lateness, parse_gtfs, parse_pois, parse_smartcard, FileReport, GtfsBundle,
    LatenessSample, ParseReport, PoiSet,
};
use reroute_core::labeling::{build_dataset, segment_labels, Dataset};
use reroute_core::model::{compare_pretraining, embedding_coords, Checkpoint, EmbeddingPoint, LatenessModel};
use reroute_core::network::{assign_attributes, build_graph, BuildReport, RoadNetwork, TimePeriod};
use reroute_core::optimizer::{
    rank_routes, route_patterns, suggest_all, weigh_graph, ImprovementDistribution, PatternReport, RouteSuggestion,
    SuggestDiagnostic, WeightTable, WeightedGraph,
};
use reroute_core::synth;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::workspace::{hash_json, sha256_hex, Workspace};

pub const BUNDLE: &str = "bundle.json";
pub const POIS: &str = "pois.json";
pub const SAMPLES: &str = "samples.json";
pub const PARSE_REPORT: &str = "parse_report.json";
pub const GRAPH: &str = "graph.json";
pub const GRAPH_REPORT: &str = "graph_report.json";
pub const PATTERNS: &str = "patterns.json";
pub const DATASET: &str = "labels/dataset.csv";
pub const PAIRS: &str = "labels/pairs.json";
pub const LABEL_REPORT: &str = "labels/report.json";
pub const MODEL: &str = "model.json";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const EMBEDDING: &str = "embedding.json";
pub const SUGGESTIONS: &str = "suggestions.json";
pub const SUGGEST_DIAGNOSTICS: &str = "suggest_diagnostics.json";
pub const DISTRIBUTION: &str = "distribution.json";

pub fn weights_artifact(period: TimePeriod) -> String {
    format!("weights/{}.json", period.as_str())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Synth,
    Ingest,
    BuildGraph,
    Label,
    Train,
    Weigh,
    Suggest,
    Rank,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Synth,
        Stage::Ingest,
        Stage::BuildGraph,
        Stage::Label,
        Stage::Train,
        Stage::Weigh,
        Stage::Suggest,
        Stage::Rank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::BuildGraph => "build-graph",
            Stage::Label => "label",
            Stage::Train => "train",
            Stage::Weigh => "weigh",
            Stage::Suggest => "suggest",
            Stage::Rank => "rank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoardingStats {
    pub parsed: usize,
    pub cleaned: usize,
    pub deduplicated: usize,
    pub joined: usize,
    pub unmatched: usize,
    pub early: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub gtfs: ParseReport,
    pub smartcard: FileReport,
    pub pois: FileReport,
    pub boardings: BoardingStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub build: BuildReport,
    pub patterns: usize,
    pub pattern_report: PatternReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub labels: usize,
    pub pairs: usize,
    pub skipped_samples: usize,
    pub empty_pairs: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDoc {
    pub points: Vec<EmbeddingPoint>,
    /// Raw embedding rows in period order.
    pub table: Vec<Vec<f64>>,
}

/// One line of `rank` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRoute {
    pub period: TimePeriod,
    pub route_id: String,
    pub improvement_pct: f64,
    pub changed: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Single-threaded suggestion search.
    pub deterministic: bool,
    /// Rerun stages of `all` even when their artifacts are fresh.
    pub force: bool,
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub workspace: Workspace,
    pub options: RunOptions,
}

/// `None` for "all".
pub fn parse_period_filter(s: &str) -> Result<Option<TimePeriod>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    Ok(Some(s.parse()?))
}

/// Ranked routes for one period or all, keeping improvement ≥ `cutoff_pct`.
pub fn filter_ranking(dist: &ImprovementDistribution, period: Option<TimePeriod>, cutoff_pct: f64) -> Vec<RankedRoute> {
    dist.periods
        .iter()
        .filter(|d| period.is_none_or(|p| p == d.period))
        .flat_map(|d| {
            d.ranking
                .iter()
                .filter(|r| r.improvement_pct >= cutoff_pct)
                .map(|r| RankedRoute {
                    period: d.period,
                    route_id: r.route_id.clone(),
                    improvement_pct: r.improvement_pct,
                    changed: r.changed,
                })
        })
        .collect()
}

fn hash_inputs(paths: &[&Path]) -> Result<String> {
    let mut parts = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(p)
                .map_err(|e| PipelineError::io(*p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file())
                .collect();
            entries.sort();
            for e in entries {
                let bytes = std::fs::read(&e).map_err(|err| PipelineError::io(&e, err))?;
                let name = e
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                parts.push((name, sha256_hex(&bytes)));
            }
        } else if p.is_file() {
            let bytes = std::fs::read(p).map_err(|e| PipelineError::io(*p, e))?;
            parts.push((String::new(), sha256_hex(&bytes)));
        } else {
            return Err(PipelineError::MissingInput(p.to_path_buf()));
        }
    }
    Ok(hash_json(&parts))
}

impl Pipeline {
    pub fn open(config: PipelineConfig, options: RunOptions) -> Result<Self> {
        let workspace = Workspace::open(&config.output_dir)?;
        Ok(Self {
            config,
            workspace,
            options,
        })
    }

    /// Hash an artifact was produced under, after checking it exists unmodified.
    fn upstream(&self, name: &str, stage: Stage) -> Result<String> {
        self.workspace.require(name, stage.name(), None)?;
        let rec = self
            .workspace
            .record(name)
            .ok_or_else(|| PipelineError::StaleArtifact {
                name: name.into(),
                stage: stage.name(),
            })?;
        let hash = rec.config_hash.clone();
        self.workspace.require(name, stage.name(), Some(&hash))?;
        Ok(hash)
    }

    fn read<T: serde::de::DeserializeOwned>(&self, name: &str, stage: Stage) -> Result<T> {
        self.workspace.read_json(name, stage.name(), None)
    }

    fn begin(&mut self, stage: Stage, hash: &str, skip_fresh: bool) -> bool {
        if skip_fresh && !self.options.force && self.workspace.stage_fresh(stage.name(), hash) {
            info!("{}: up to date", stage.name());
            return false;
        }
        info!("{}: running", stage.name());
        self.workspace.forget_stage(stage.name());
        true
    }

    fn synth_hash(&self) -> Result<String> {
        let spec = self
            .config
            .synth
            .as_ref()
            .ok_or_else(|| PipelineError::Config("`synth` needs a synth section in the config".into()))?;
        Ok(hash_json(&("synth", spec)))
    }

    pub fn synth(&mut self) -> Result<()> {
        self.run_synth(false)
    }

    fn run_synth(&mut self, skip_fresh: bool) -> Result<()> {
        let hash = self.synth_hash()?;
        if !self.begin(Stage::Synth, &hash, skip_fresh) {
            return Ok(());
        }
        let city = synth::generate(self.config.synth.as_ref().expect("checked by synth_hash"))?;
        for (rel, text) in &city.files {
            let name = format!("{}/{rel}", crate::config::SYNTH_DIR);
            self.workspace
                .write_bytes(&name, Stage::Synth.name(), &hash, text.as_bytes())?;
        }
        Ok(())
    }

    pub fn ingest(&mut self) -> Result<()> {
        self.run_ingest(false)
    }

    fn run_ingest(&mut self, skip_fresh: bool) -> Result<()> {
        let inputs = self.config.inputs();
        let input_hash = hash_inputs(&[&inputs.gtfs_dir, &inputs.smartcard_csv, &inputs.poi_geojson])?;
        let hash = hash_json(&("ingest", input_hash));
        if !self.begin(Stage::Ingest, &hash, skip_fresh) {
            return Ok(());
        }
        let (bundle, gtfs_report) = parse_gtfs(&inputs.gtfs_dir)?;
        let (records, smartcard) = parse_smartcard(&inputs.smartcard_csv)?;
        let (pois, poi_report) = parse_pois(&inputs.poi_geojson)?;
        let cleaned = clean_boardings(&records);
        let deduped = dedup_taps(&cleaned);
        let join = join_lateness(&deduped, &bundle);
        let report = IngestReport {
            gtfs: gtfs_report,
            smartcard,
            pois: poi_report,
            boardings: BoardingStats {
                parsed: records.len(),
                cleaned: cleaned.len(),
                deduplicated: deduped.len(),
                joined: join.samples.len(),
                unmatched: join.unmatched,
                early: join.early,
            },
        };
        let stage = Stage::Ingest.name();
        self.workspace.write_json(BUNDLE, stage, &hash, &bundle)?;
        self.workspace.write_json(POIS, stage, &hash, &pois)?;
        self.workspace.write_json(SAMPLES, stage, &hash, &join.samples)?;
        self.workspace.write_json(PARSE_REPORT, stage, &hash, &report)?;
        Ok(())
    }

    pub fn build_graph(&mut self) -> Result<()> {
        self.run_build_graph(false)
    }

    fn run_build_graph(&mut self, skip_fresh: bool) -> Result<()> {
        let up = self.upstream(BUNDLE, Stage::Ingest)?;
        self.upstream(POIS, Stage::Ingest)?;
        let hash = hash_json(&("build-graph", up, self.config.network));
        if !self.begin(Stage::BuildGraph, &hash, skip_fresh) {
            return Ok(());
        }
        let bundle: GtfsBundle = self.read(BUNDLE, Stage::Ingest)?;
        let pois: PoiSet = self.read(POIS, Stage::Ingest)?;
        let params = self.config.network;
        let (graph, build) = build_graph(&bundle, &params)?;
        let graph = assign_attributes(graph, &pois, params.poi_buffer_m);
        let (patterns, pattern_report) = route_patterns(&bundle, &graph);
        let report = GraphReport {
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            build,
            patterns: patterns.len(),
            pattern_report,
        };
        let stage = Stage::BuildGraph.name();
        self.workspace.write_json(GRAPH, stage, &hash, &graph)?;
        self.workspace.write_json(PATTERNS, stage, &hash, &patterns)?;
        self.workspace.write_json(GRAPH_REPORT, stage, &hash, &report)?;
        Ok(())
    }

    pub fn label(&mut self) -> Result<()> {
        self.run_label(false)
    }

    fn run_label(&mut self, skip_fresh: bool) -> Result<()> {
        let up_graph = self.upstream(GRAPH, Stage::BuildGraph)?;
        let up_samples = self.upstream(SAMPLES, Stage::Ingest)?;
        let hash = hash_json(&("label", up_graph, up_samples, self.config.seed));
        if !self.begin(Stage::Label, &hash, skip_fresh) {
            return Ok(());
        }
        let graph: RoadNetwork = self.read(GRAPH, Stage::BuildGraph)?;
        let samples: Vec<LatenessSample> = self.read(SAMPLES, Stage::Ingest)?;
        let bundle: GtfsBundle = self.read(BUNDLE, Stage::Ingest)?;
        let labels = segment_labels(&graph, &samples, &bundle);
        let ds = build_dataset(&labels.labels, &graph, self.config.seed)?;
        let report = LabelReport {
            labels: labels.labels.len(),
            pairs: labels.pairs.len(),
            skipped_samples: labels.skipped_samples,
            empty_pairs: labels.empty_pairs,
            train_rows: ds.count(reroute_core::labeling::Split::Train),
            validation_rows: ds.count(reroute_core::labeling::Split::Val),
            test_rows: ds.count(reroute_core::labeling::Split::Test),
        };
        let stage = Stage::Label.name();
        let path = self.workspace.path(DATASET);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        ds.write_csv(&path)?;
        self.workspace.adopt(DATASET, stage, &hash)?;
        self.workspace.write_json(PAIRS, stage, &hash, &labels.pairs)?;
        self.workspace.write_json(LABEL_REPORT, stage, &hash, &report)?;
        Ok(())
    }

    pub fn train(&mut self) -> Result<()> {
        self.run_train(false)
    }

    fn run_train(&mut self, skip_fresh: bool) -> Result<()> {
        let up = self.upstream(DATASET, Stage::Label)?;
        let hash = hash_json(&("train", up, &self.config.model, self.config.seed));
        if !self.begin(Stage::Train, &hash, skip_fresh) {
            return Ok(());
        }
        let ds = self.dataset()?;
        let (model, report) = compare_pretraining::<f64>(&ds, &self.config.model, self.config.seed)?;
        let embedding = EmbeddingDoc {
            points: embedding_coords(&model),
            table: model.embedding_table(),
        };
        let stage = Stage::Train.name();
        self.workspace.write_json(MODEL, stage, &hash, &model.to_checkpoint())?;
        self.workspace.write_json(TRAIN_REPORT, stage, &hash, &report)?;
        self.workspace.write_json(EMBEDDING, stage, &hash, &embedding)?;
        Ok(())
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let path = self.workspace.require(DATASET, Stage::Label.name(), None)?;
        Ok(Dataset::read_csv(&path, self.config.seed)?)
    }

    pub fn weigh(&mut self) -> Result<()> {
        self.run_weigh(false)
    }

    fn run_weigh(&mut self, skip_fresh: bool) -> Result<()> {
        let up_model = self.upstream(MODEL, Stage::Train)?;
        let up_graph = self.upstream(GRAPH, Stage::BuildGraph)?;
        let hash = hash_json(&("weigh", up_model, up_graph));
        if !self.begin(Stage::Weigh, &hash, skip_fresh) {
            return Ok(());
        }
        let checkpoint: Checkpoint = self.read(MODEL, Stage::Train)?;
        let model = LatenessModel::<f64>::from_checkpoint(&checkpoint)?;
        let graph = Arc::new(self.read::<RoadNetwork>(GRAPH, Stage::BuildGraph)?);
        for period in TimePeriod::ALL {
            let wg = weigh_graph(graph.clone(), &model, period)?;
            self.workspace
                .write_json(&weights_artifact(period), Stage::Weigh.name(), &hash, &wg.to_table())?;
        }
        Ok(())
    }

    pub fn suggest(&mut self) -> Result<()> {
        self.run_suggest(false)
    }

    fn run_suggest(&mut self, skip_fresh: bool) -> Result<()> {
        let mut ups = Vec::new();
        for period in TimePeriod::ALL {
            ups.push(self.upstream(&weights_artifact(period), Stage::Weigh)?);
        }
        ups.push(self.upstream(PATTERNS, Stage::BuildGraph)?);
        let hash = hash_json(&("suggest", ups));
        if !self.begin(Stage::Suggest, &hash, skip_fresh) {
            return Ok(());
        }
        let graph = Arc::new(self.read::<RoadNetwork>(GRAPH, Stage::BuildGraph)?);
        let patterns: Vec<reroute_core::optimizer::RoutePattern> = self.read(PATTERNS, Stage::BuildGraph)?;
        let mut suggestions: Vec<RouteSuggestion> = Vec::new();
        let mut diagnostics: Vec<SuggestDiagnostic> = Vec::new();
        for period in TimePeriod::ALL {
            let table: WeightTable = self.read(&weights_artifact(period), Stage::Weigh)?;
            let wg = WeightedGraph::from_table(graph.clone(), &table)?;
            let (s, d) = suggest_all(&wg, &patterns, !self.options.deterministic);
            suggestions.extend(s);
            diagnostics.extend(d);
        }
        suggestions.sort_by(|a, b| (&a.route_id, a.period).cmp(&(&b.route_id, b.period)));
        diagnostics.sort_by(|a, b| (&a.route_id, a.period).cmp(&(&b.route_id, b.period)));
        let stage = Stage::Suggest.name();
        self.workspace.write_json(SUGGESTIONS, stage, &hash, &suggestions)?;
        self.workspace
            .write_json(SUGGEST_DIAGNOSTICS, stage, &hash, &diagnostics)?;
        Ok(())
    }

    /// Build the distribution and return routes at or above `cutoff_pct`.
    pub fn rank(&mut self, period: Option<TimePeriod>, cutoff_pct: f64) -> Result<Vec<RankedRoute>> {
        self.run_rank(true)?;
        let dist: ImprovementDistribution = self.read(DISTRIBUTION, Stage::Rank)?;
        Ok(filter_ranking(&dist, period, cutoff_pct))
    }

    fn run_rank(&mut self, skip_fresh: bool) -> Result<()> {
        let up = self.upstream(SUGGESTIONS, Stage::Suggest)?;
        let hash = hash_json(&("rank", up));
        if !self.begin(Stage::Rank, &hash, skip_fresh) {
            return Ok(());
        }
        let suggestions: Vec<RouteSuggestion> = self.read(SUGGESTIONS, Stage::Suggest)?;
        self.workspace
            .write_json(DISTRIBUTION, Stage::Rank.name(), &hash, &rank_routes(&suggestions))
    }

    /// Every stage in order, skipping those whose artifacts are fresh.
    /// `synth` runs only when the config has a synth section.
    pub fn all(&mut self) -> Result<()> {
        if self.config.synth.is_some() {
            self.run_synth(true)?;
        }
        self.run_ingest(true)?;
        self.run_build_graph(true)?;
        self.run_label(true)?;
        self.run_train(true)?;
        self.run_weigh(true)?;
        self.run_suggest(true)?;
        self.run_rank(true)
    }

    pub fn run(&mut self, stage: Stage) -> Result<()> {
        match stage {
            Stage::Synth => self.synth(),
            Stage::Ingest => self.ingest(),
            Stage::BuildGraph => self.build_graph(),
            Stage::Label => self.label(),
            Stage::Train => self.train(),
            Stage::Weigh => self.weigh(),
            Stage::Suggest => self.suggest(),
            Stage::Rank => self.run_rank(false),
        }
    }
}
