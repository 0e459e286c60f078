//! Read-only HTTP JSON API over one loaded FINEX index.
//!
//! Routes: `GET /api/meta`, `/api/reachability`, `/api/clustering` and
//! `/api/compare`. Every route answers 503 until [`AppState::set`] has been
//! called; after that the index never changes.

use std::sync::{Arc, OnceLock};

use axum::extract::{Query, State};
use axum::http::{Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use finex_core::baseline::{dbscan_exact, optics_build};
use finex_core::{
    border_recall, epsilon_star_query, minpts_star_query, query_clustering, ClusterOrdering, Error,
    FinexIndex, Labeling, NeighborProvider, SeedOrder,
};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

/// The immutable payload behind the API.
pub struct Loaded {
    index: FinexIndex,
    provider: NeighborProvider,
    optics: Option<ClusterOrdering>,
}

impl Loaded {
    /// `provider` must serve the dataset the index was built from, at a
    /// radius of at least the generating epsilon. With `with_baselines` the
    /// OPTICS ordering is built up front for `/api/compare`.
    pub fn new(
        index: FinexIndex,
        provider: NeighborProvider,
        with_baselines: bool,
    ) -> finex_core::Result<Self> {
        index.check_dataset(provider.data())?;
        let params = index.params();
        if provider.epsilon() < params.epsilon {
            return Err(Error::RadiusExceedsEpsilon {
                radius: params.epsilon,
                epsilon: provider.epsilon(),
            });
        }
        let optics = if with_baselines {
            Some(optics_build(
                &provider,
                params.epsilon,
                params.min_pts,
                &SeedOrder::Ascending,
            )?)
        } else {
            None
        };
        Ok(Loaded {
            index,
            provider,
            optics,
        })
    }

    pub fn index(&self) -> &FinexIndex {
        &self.index
    }
}

#[derive(Clone, Default)]
pub struct AppState(Arc<OnceLock<Arc<Loaded>>>);

impl AppState {
    /// A state that answers 503 until loaded.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn ready(loaded: Loaded) -> Self {
        let s = Self::empty();
        s.set(loaded);
        s
    }

    /// Installs the index; later calls are ignored.
    pub fn set(&self, loaded: Loaded) {
        let _ = self.0.set(Arc::new(loaded));
    }

    fn get(&self) -> Result<Arc<Loaded>, ApiError> {
        self.0.get().cloned().ok_or(ApiError {
            status: StatusCode::SERVICE_UNAVAILABLE,
            message: "index is still loading".into(),
            epsilon: None,
            min_pts: None,
        })
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    #[serde(rename = "error")]
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_pts: Option<u64>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>, loaded: &Loaded) -> Self {
        let params = loaded.index.params();
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
            epsilon: Some(params.epsilon),
            min_pts: Some(params.min_pts),
        }
    }

    fn from_core(e: Error, loaded: &Loaded) -> Self {
        match e {
            Error::EpsilonOutOfRange { .. } | Error::MinPtsOutOfRange { .. } | Error::InvalidParameter(_) => {
                Self::bad_request(e.to_string(), loaded)
            }
            other => ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                message: other.to_string(),
                epsilon: None,
                min_pts: None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub n: usize,
    pub epsilon: f64,
    pub min_pts: u64,
    pub metric: &'static str,
    pub fingerprint: String,
    pub core_count: usize,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

async fn meta(State(state): State<AppState>) -> Result<Json<Meta>, ApiError> {
    let l = state.get()?;
    let params = l.index.params();
    Ok(Json(Meta {
        n: l.index.len(),
        epsilon: params.epsilon,
        min_pts: params.min_pts,
        metric: l.index.metric().name(),
        fingerprint: hex::encode(l.index.fingerprint()),
        core_count: l.index.core_count(),
    }))
}

#[derive(Debug, Serialize)]
pub struct PlotEntry {
    pub pos: u64,
    pub object_id: u32,
    /// `None` (JSON null) for infinity.
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub n: u64,
}

async fn reachability(State(state): State<AppState>) -> Result<Json<Vec<PlotEntry>>, ApiError> {
    let l = state.get()?;
    Ok(Json(
        l.index
            .ordering()
            .entries()
            .iter()
            .map(|e| PlotEntry {
                pos: e.position,
                object_id: e.object.0,
                r: finite(e.reachability),
                c: finite(e.core_distance),
                n: e.neighborhood_size,
            })
            .collect(),
    ))
}

#[derive(Debug, Deserialize)]
pub struct ClusteringParams {
    pub epsilon_star: Option<f64>,
    pub minpts_star: Option<u64>,
    pub mode: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Stats {
    pub distance_computations: u64,
    pub candidates: u64,
    pub millis: f64,
}

#[derive(Debug, Serialize)]
pub struct ClusteringBody {
    /// Cluster id per object id; -1 for noise.
    pub labels: Vec<i64>,
    pub num_clusters: usize,
    pub noise_count: usize,
    pub stats: Stats,
}

fn body(labeling: &Labeling, stats: Stats) -> ClusteringBody {
    ClusteringBody {
        labels: labeling
            .labels()
            .iter()
            .map(|l| l.map_or(-1, i64::from))
            .collect(),
        num_clusters: labeling.num_clusters(),
        noise_count: labeling.noise_count(),
        stats,
    }
}

fn run_clustering(l: &Loaded, p: &ClusteringParams) -> Result<ClusteringBody, ApiError> {
    let started = std::time::Instant::now();
    let approx = match p.mode.as_deref() {
        None | Some("exact") => false,
        Some("approx") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown mode {other:?}"), l)),
    };
    match (p.epsilon_star, p.minpts_star) {
        (Some(_), Some(_)) => Err(ApiError::bad_request(
            "give epsilon_star or minpts_star, not both",
            l,
        )),
        (None, None) => Err(ApiError::bad_request("missing epsilon_star or minpts_star", l)),
        (Some(es), None) if approx => {
            let labeling = query_clustering(l.index.ordering(), es).map_err(|e| ApiError::from_core(e, l))?;
            let stats = Stats {
                distance_computations: 0,
                candidates: 0,
                millis: started.elapsed().as_secs_f64() * 1e3,
            };
            Ok(body(&labeling, stats))
        }
        (Some(es), None) => {
            let q = epsilon_star_query(&l.index, &l.provider, es).map_err(|e| ApiError::from_core(e, l))?;
            let stats = Stats {
                distance_computations: q.stats.distance_computations,
                candidates: q.stats.candidates,
                millis: q.stats.millis,
            };
            Ok(body(&q.labeling, stats))
        }
        (None, Some(_)) if approx => Err(ApiError::bad_request(
            "mode=approx applies to epsilon_star only",
            l,
        )),
        (None, Some(ms)) => {
            let q = minpts_star_query(&l.index, &l.provider, ms).map_err(|e| ApiError::from_core(e, l))?;
            let stats = Stats {
                distance_computations: q.stats.distance_computations,
                candidates: q.stats.candidates,
                millis: q.stats.millis,
            };
            Ok(body(&q.labeling, stats))
        }
    }
}

async fn clustering(
    State(state): State<AppState>,
    Query(params): Query<ClusteringParams>,
) -> Result<Json<ClusteringBody>, ApiError> {
    let l = state.get()?;
    blocking(move || run_clustering(&l, &params)).await.map(Json)
}

#[derive(Debug, Deserialize)]
pub struct CompareParams {
    pub epsilon_star: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareBody {
    pub finex_recall: f64,
    pub optics_recall: f64,
    pub exact_cluster_count: usize,
}

fn run_compare(l: &Loaded, es: f64) -> Result<CompareBody, ApiError> {
    let Some(optics) = &l.optics else {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            message: "server was started without baselines".into(),
            epsilon: None,
            min_pts: None,
        });
    };
    let params = l.index.params();
    let finex = query_clustering(l.index.ordering(), es).map_err(|e| ApiError::from_core(e, l))?;
    let optics = query_clustering(optics, es).map_err(|e| ApiError::from_core(e, l))?;
    let exact = dbscan_exact(&l.provider, es, params.min_pts, &SeedOrder::Ascending)
        .map_err(|e| ApiError::from_core(e, l))?;
    let recall = |approx: &Labeling| border_recall(approx, &exact).map_err(|e| ApiError::from_core(e, l));
    Ok(CompareBody {
        finex_recall: recall(&finex)?,
        optics_recall: recall(&optics)?,
        exact_cluster_count: exact.num_clusters(),
    })
}

async fn compare(
    State(state): State<AppState>,
    Query(params): Query<CompareParams>,
) -> Result<Json<CompareBody>, ApiError> {
    let l = state.get()?;
    blocking(move || run_compare(&l, params.epsilon_star))
        .await
        .map(Json)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.unwrap_or_else(|e| {
        Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: format!("query task failed: {e}"),
            epsilon: None,
            min_pts: None,
        })
    })
}

pub fn router(state: AppState) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET]);
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/reachability", get(reachability))
        .route("/api/clustering", get(clustering))
        .route("/api/compare", get(compare))
        .layer(cors)
        .with_state(state)
}

/// Serves `state` on `listener` until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
