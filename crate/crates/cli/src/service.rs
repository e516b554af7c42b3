//! Read-only HTTP API over a finished workspace.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use reroute_core::network::{RoadNetwork, TimePeriod};
use reroute_core::optimizer::{
    optimal_stop_order, rank_routes, whatif_remove_stop, ImprovementDistribution, RoutePattern, RouteSuggestion,
    WeightTable, WeightedGraph, WhatIf, MAX_REORDER_STOPS,
};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pipeline::{weights_artifact, EmbeddingDoc, Stage, DISTRIBUTION, EMBEDDING, GRAPH, PATTERNS, SUGGESTIONS};
use crate::workspace::Workspace;

/// Immutable after load; shared by every request.
pub struct AppState {
    graphs: Vec<WeightedGraph<f64>>,
    patterns: BTreeMap<String, RoutePattern>,
    suggestions: BTreeMap<(String, TimePeriod), RouteSuggestion>,
    distribution: ImprovementDistribution,
    embedding: EmbeddingDoc,
    suggestions_sha: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period: TimePeriod,
    pub improvement_pct: f64,
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub route_id: String,
    pub stop_ids: Vec<String>,
    pub periods: Vec<PeriodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteList {
    pub routes: Vec<RouteSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub period: TimePeriod,
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub points: Vec<LabeledPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub routes: usize,
    pub edges: usize,
    pub periods: Vec<TimePeriod>,
    /// SHA-256 of the suggestions artifact being served.
    pub suggestions_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub route_id: String,
    pub period: TimePeriod,
    pub remove_stop_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReorderRequest {
    pub route_id: String,
    pub period: TimePeriod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReorderResponse {
    pub route_id: String,
    pub period: TimePeriod,
    /// Positions into the route's stop list, endpoints fixed.
    pub order: Vec<usize>,
    pub stop_ids: Vec<String>,
    pub cost: f64,
    pub input_cost: Option<f64>,
    pub path: Vec<u32>,
    pub geometry: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub code: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message,
        }
    }

    fn unprocessable(code: &'static str, message: String) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code,
            message,
        }
    }
}

impl From<reroute_core::Error> for ApiError {
    fn from(e: reroute_core::Error) -> Self {
        use reroute_core::Error as E;
        let message = e.to_string();
        match e {
            E::Unknown { .. } => Self::not_found(message),
            E::EndpointRemoval { .. } => Self::unprocessable("invalid_stop_index", message),
            E::TooManyStops(_) => Self::unprocessable("too_many_stops", message),
            E::Unreachable { .. } => Self::unprocessable("unreachable", message),
            E::Invalid(_) => Self::unprocessable("invalid_request", message),
            _ => Self {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                code: "internal",
                message,
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::unprocessable("invalid_request", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::unprocessable("invalid_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            code: self.code.into(),
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

impl AppState {
    pub fn load(ws: &Workspace) -> Result<Self> {
        let stage = |s: Stage| s.name();
        let graph = Arc::new(ws.read_json::<RoadNetwork>(GRAPH, stage(Stage::BuildGraph), None)?);
        let patterns: Vec<RoutePattern> = ws.read_json(PATTERNS, stage(Stage::BuildGraph), None)?;
        let mut graphs = Vec::new();
        for period in TimePeriod::ALL {
            let table: WeightTable = ws.read_json(&weights_artifact(period), stage(Stage::Weigh), None)?;
            graphs.push(WeightedGraph::from_table(graph.clone(), &table)?);
        }
        let suggestions: Vec<RouteSuggestion> = ws.read_json(SUGGESTIONS, stage(Stage::Suggest), None)?;
        let distribution = if ws.path(DISTRIBUTION).is_file() {
            ws.read_json(DISTRIBUTION, stage(Stage::Rank), None)?
        } else {
            rank_routes(&suggestions)
        };
        let embedding: EmbeddingDoc = ws.read_json(EMBEDDING, stage(Stage::Train), None)?;
        let suggestions_sha = ws.record(SUGGESTIONS).map(|r| r.sha256.clone()).unwrap_or_default();
        Ok(Self {
            graphs,
            patterns: patterns.into_iter().map(|p| (p.route_id.clone(), p)).collect(),
            suggestions: suggestions
                .into_iter()
                .map(|s| ((s.route_id.clone(), s.period), s))
                .collect(),
            distribution,
            embedding,
            suggestions_sha,
        })
    }

    fn graph(&self, period: TimePeriod) -> &WeightedGraph<f64> {
        &self.graphs[period.index()]
    }

    fn pattern(&self, route_id: &str) -> std::result::Result<&RoutePattern, ApiError> {
        self.patterns
            .get(route_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown route `{route_id}`")))
    }

    pub fn routes(&self) -> RouteList {
        let mut by_route: BTreeMap<&str, RouteSummary> = BTreeMap::new();
        for ((route_id, period), s) in &self.suggestions {
            by_route
                .entry(route_id)
                .or_insert_with(|| RouteSummary {
                    route_id: route_id.clone(),
                    stop_ids: s.stop_ids.clone(),
                    periods: Vec::new(),
                })
                .periods
                .push(PeriodSummary {
                    period: *period,
                    improvement_pct: s.improvement_pct,
                    changed: s.changed,
                });
        }
        RouteList {
            routes: by_route.into_values().collect(),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct PeriodQuery {
    period: Option<String>,
}

fn parse_period(raw: Option<&str>) -> std::result::Result<Option<TimePeriod>, ApiError> {
    match raw {
        None => Ok(None),
        Some(s) if s.eq_ignore_ascii_case("all") => Ok(None),
        Some(s) => s
            .parse()
            .map(Some)
            .map_err(|e: reroute_core::Error| ApiError::unprocessable("invalid_request", e.to_string())),
    }
}

async fn health(State(st): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        routes: st.patterns.len(),
        edges: st.graphs[0].base().edge_count(),
        periods: TimePeriod::ALL.to_vec(),
        suggestions_sha256: st.suggestions_sha.clone(),
    })
}

async fn routes(State(st): State<Arc<AppState>>) -> Json<RouteList> {
    Json(st.routes())
}

async fn route(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: std::result::Result<Query<PeriodQuery>, QueryRejection>,
) -> ApiResult<RouteSuggestion> {
    let Query(q) = query?;
    st.pattern(&id)?;
    let period = parse_period(q.period.as_deref())?.ok_or_else(|| {
        ApiError::unprocessable(
            "invalid_request",
            "query parameter `period` must name one period".into(),
        )
    })?;
    st.suggestions
        .get(&(id.clone(), period))
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no suggestion for route `{id}` in {}", period.as_str())))
}

async fn distribution(
    State(st): State<Arc<AppState>>,
    query: std::result::Result<Query<PeriodQuery>, QueryRejection>,
) -> ApiResult<ImprovementDistribution> {
    let Query(q) = query?;
    let period = parse_period(q.period.as_deref())?;
    Ok(Json(ImprovementDistribution {
        periods: st
            .distribution
            .periods
            .iter()
            .filter(|d| period.is_none_or(|p| p == d.period))
            .cloned()
            .collect(),
    }))
}

async fn embedding(State(st): State<Arc<AppState>>) -> Json<EmbeddingResponse> {
    Json(EmbeddingResponse {
        points: st
            .embedding
            .points
            .iter()
            .map(|p| LabeledPoint {
                period: p.period,
                label: p.period.label().into(),
                x: p.x,
                y: p.y,
            })
            .collect(),
    })
}

async fn whatif(
    State(st): State<Arc<AppState>>,
    body: std::result::Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<WhatIf> {
    let Json(req) = body?;
    let pattern = st.pattern(&req.route_id)?;
    if req.remove_stop_index >= pattern.stops.len() {
        return Err(ApiError::unprocessable(
            "invalid_stop_index",
            format!(
                "stop index {} is out of range for {} stops",
                req.remove_stop_index,
                pattern.stops.len()
            ),
        ));
    }
    Ok(Json(whatif_remove_stop(
        st.graph(req.period),
        pattern,
        req.remove_stop_index,
    )?))
}

async fn reorder(
    State(st): State<Arc<AppState>>,
    body: std::result::Result<Json<ReorderRequest>, JsonRejection>,
) -> ApiResult<ReorderResponse> {
    let Json(req) = body?;
    let pattern = st.pattern(&req.route_id)?;
    if pattern.stops.len() > MAX_REORDER_STOPS {
        return Err(reroute_core::Error::TooManyStops(pattern.stops.len()).into());
    }
    let wg = st.graph(req.period);
    let order = optimal_stop_order(wg, &pattern.stops)?;
    let geometry = wg.base().path_geojson(
        &order.path,
        serde_json::json!({"route_id": req.route_id, "period": req.period}),
    );
    Ok(Json(ReorderResponse {
        stop_ids: order.order.iter().map(|&i| pattern.stop_ids[i].clone()).collect(),
        route_id: req.route_id,
        period: req.period,
        order: order.order,
        cost: order.cost,
        input_cost: order.input_cost,
        path: order.path.iter().map(|e| e.0).collect(),
        geometry,
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/routes", get(routes))
        .route("/api/routes/{id}", get(route))
        .route("/api/distribution", get(distribution))
        .route("/api/embedding", get(embedding))
        .route("/api/whatif", post(whatif))
        .route("/api/reorder", post(reorder))
        .with_state(state)
}

pub async fn serve(state: AppState, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}
