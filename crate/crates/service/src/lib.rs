//! JSON-over-HTTP facade for the planner.
//!
//! | method | path               | body / query      |
//! |--------|--------------------|-------------------|
//! | POST   | `/plan`            | [`PlanRequest`]   |
//! | POST   | `/whatif`          | [`WhatIfRequest`] |
//! | GET    | `/library/features`| [`FeatureQuery`]  |
//! | GET    | `/model/info`      |                   |
//!
//! State is loaded once and shared read-only; solves run on the blocking
//! pool.

pub mod api;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bigmovie_core::library::{parse_library, ConfigVector, KnowledgeLibrary, Role};
use bigmovie_core::planner::{evaluate_objective, solve, Method, PlanProblem, PlanReport};
use bigmovie_core::store::ModelSet;
use bigmovie_core::tensor::AcquaintanceTensor;
use bigmovie_core::Error;

pub use api::*;

pub const DEFAULT_CANDIDATE_CAP: usize = 2000;
const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 1000;
const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: &'static str,
    pub detail: String,
}

impl ApiError {
    fn bad_request(error: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            error,
            detail: detail.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, error) = match &e {
            Error::UnknownFeature { .. } | Error::InvalidFeatureKey(_) => {
                (StatusCode::BAD_REQUEST, "unknown_feature")
            }
            Error::TooManyCandidates { .. } => (StatusCode::BAD_REQUEST, "too_many_candidates"),
            Error::InvalidArgument(_) | Error::InvalidConfig { .. } | Error::NonFinite(_) => {
                (StatusCode::BAD_REQUEST, "invalid_request")
            }
            Error::LockedExceedsBudget => (StatusCode::UNPROCESSABLE_ENTITY, "budget_infeasible"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self {
            status,
            error,
            detail: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::bad_request("invalid_json", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        Self::bad_request("invalid_query", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.error.into(),
            detail: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

/// Immutable server state.
pub struct AppState {
    pub models: ModelSet,
    pub tensor: AcquaintanceTensor,
    /// Credit counts per position, when a library was supplied.
    movie_counts: Option<Vec<usize>>,
    library_movies: Option<usize>,
    pub candidate_cap: usize,
}

/// A resolved request.
struct Resolved {
    method: Method,
    candidates: BTreeSet<usize>,
    locked: Vec<usize>,
    excluded: Vec<usize>,
}

impl AppState {
    pub fn new(
        models: ModelSet,
        tensor: AcquaintanceTensor,
        library: Option<&KnowledgeLibrary>,
        candidate_cap: usize,
    ) -> Result<Self, Error> {
        if tensor.crew_len() != models.index.crew_len()
            || tensor.genre_len() != models.index.genre_len()
        {
            return Err(Error::DimensionMismatch {
                expected: models.index.len(),
                actual: tensor.dim(),
            });
        }
        if candidate_cap == 0 {
            return Err(Error::InvalidArgument(
                "candidate cap must be positive".into(),
            ));
        }
        let movie_counts = library.map(|lib| {
            let mut counts = vec![0usize; models.index.len()];
            for m in lib.records() {
                for f in m.features() {
                    if let Some(p) = models.index.position_of(&f) {
                        counts[p] += 1;
                    }
                }
            }
            counts
        });
        Ok(Self {
            library_movies: library.map(KnowledgeLibrary::len),
            models,
            tensor,
            movie_counts,
            candidate_cap,
        })
    }

    /// Loads a models directory, a tensor file and optionally a library.
    pub fn load(
        models_dir: &Path,
        tensor_path: &Path,
        library_path: Option<&Path>,
        candidate_cap: usize,
    ) -> Result<Self, Error> {
        let models = ModelSet::load(models_dir)?;
        let tensor = AcquaintanceTensor::read_for_index(
            BufReader::new(File::open(tensor_path)?),
            &models.index,
        )?;
        let library = match library_path {
            Some(p) => Some(parse_library(BufReader::new(File::open(p)?))?.0),
            None => None,
        };
        Self::new(models, tensor, library.as_ref(), candidate_cap)
    }

    fn resolve_all(&self, keys: &[String]) -> Result<Vec<usize>, Error> {
        keys.iter().map(|k| self.models.index.resolve(k)).collect()
    }

    fn resolve(&self, req: &PlanRequest) -> Result<Resolved, ApiError> {
        let method: Method = req
            .method
            .parse()
            .map_err(|e: Error| ApiError::bad_request("invalid_method", e.to_string()))?;
        if method == Method::Exact {
            return Err(ApiError::bad_request(
                "invalid_method",
                "exact enumeration is not served; use the command line",
            ));
        }
        let locked = self.resolve_all(&req.locked)?;
        let excluded = self.resolve_all(&req.excluded)?;
        let candidates: BTreeSet<usize> = match &req.candidate_pool {
            Some(keys) => {
                let pool: BTreeSet<usize> = self.resolve_all(keys)?.into_iter().collect();
                if pool.len() > self.candidate_cap {
                    return Err(Error::TooManyCandidates {
                        size: pool.len(),
                        max: self.candidate_cap,
                    }
                    .into());
                }
                pool
            }
            None => self.default_pool(&locked),
        };
        Ok(Resolved {
            method,
            candidates,
            locked,
            excluded,
        })
    }

    /// Every feature when within the cap. Otherwise the locked features, all
    /// genres, and crew by descending gross weight (lower position first on
    /// ties) up to the cap.
    fn default_pool(&self, locked: &[usize]) -> BTreeSet<usize> {
        let index = &self.models.index;
        if index.len() <= self.candidate_cap {
            return (0..index.len()).collect();
        }
        let mut pool: BTreeSet<usize> = locked.iter().copied().chain(index.genre_range()).collect();
        let gw = self.models.gross.feature_weights();
        let mut crew: Vec<usize> = index.crew_range().filter(|p| !pool.contains(p)).collect();
        crew.sort_by(|&a, &b| gw[b].total_cmp(&gw[a]).then(a.cmp(&b)));
        let room = self.candidate_cap.saturating_sub(pool.len());
        pool.extend(crew.into_iter().take(room));
        pool
    }

    fn problem<'a>(&'a self, req: &PlanRequest, r: &Resolved) -> PlanProblem<'a> {
        let (alpha, beta) = match r.method {
            Method::MaxG => (1.0, 0.0),
            Method::MaxA => (0.0, 1.0),
            _ => (req.alpha, req.beta),
        };
        PlanProblem::new(
            &self.models.gross,
            &self.models.budget,
            &self.tensor,
            req.budget_cap,
        )
        .with_weights(alpha, beta)
        .with_theta(req.theta)
        .with_team_cap(req.team_cap)
        .with_candidates(r.candidates.iter().copied())
        .with_locked(r.locked.iter().copied())
        .with_excluded(r.excluded.iter().copied())
    }

    pub fn plan(&self, req: &PlanRequest) -> Result<PlanResponse, ApiError> {
        let r = self.resolve(req)?;
        let p = self.problem(req, &r);
        let result = solve(&p, r.method)?;
        Ok(PlanResponse {
            report: PlanReport::new(&result, &p, &self.models.index),
            n_candidates: r.candidates.len(),
        })
    }

    /// Plans `req.base`, then flips the toggled coordinates of the result and
    /// re-evaluates the objective terms without solving again.
    pub fn whatif(&self, req: &WhatIfRequest) -> Result<WhatIfResponse, ApiError> {
        let mut toggles = Vec::with_capacity(req.toggles.len());
        for t in &req.toggles {
            let (key, value) = t.parts();
            if value > 1 {
                return Err(ApiError::bad_request(
                    "invalid_toggle",
                    format!("toggle {key} must be 0 or 1, got {value}"),
                ));
            }
            toggles.push((self.models.index.resolve(key)?, value));
        }
        let r = self.resolve(&req.base)?;
        let p = self.problem(&req.base, &r);
        let result = solve(&p, r.method)?;
        let mut x = result.config.values().to_vec();
        for (pos, value) in toggles {
            x[pos] = f64::from(value);
        }
        let x = ConfigVector::binary(x)?;
        let base = terms(evaluate_objective(&p, &result.config)?);
        let toggled = terms(evaluate_objective(&p, &x)?);
        Ok(WhatIfResponse {
            base,
            toggled,
            delta: Terms {
                est_gross: toggled.est_gross - base.est_gross,
                est_budget: toggled.est_budget - base.est_budget,
                acquaintance: toggled.acquaintance - base.acquaintance,
                objective: toggled.objective - base.objective,
            },
            feasible: toggled.est_budget <= req.base.budget_cap + BUDGET_SLACK,
            selected: x
                .selected()
                .into_iter()
                .map(|p| self.models.index.feature(p).to_string())
                .collect(),
        })
    }

    pub fn features(&self, q: &FeatureQuery) -> Result<FeaturePage, ApiError> {
        let roles: Vec<Role> = match q.role.as_deref().filter(|r| !r.is_empty()) {
            Some(r) => vec![r.parse()?],
            None => {
                let mut all = Role::ALL.to_vec();
                all.sort_by_key(|r| r.as_str());
                all
            }
        };
        let prefix = q.prefix.as_deref().unwrap_or("");
        let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
        let offset = q.offset.unwrap_or(0);
        let index = &self.models.index;
        let matches: Vec<usize> = roles
            .iter()
            .flat_map(|&r| index.block_range(r))
            .filter(|&p| index.feature(p).name.starts_with(prefix))
            .collect();
        let gw = self.models.gross.feature_weights();
        let bw = &self.models.budget.weights;
        let features: Vec<FeatureEntry> = matches
            .iter()
            .skip(offset)
            .take(limit)
            .map(|&p| {
                let f = index.feature(p);
                FeatureEntry {
                    key: f.to_string(),
                    role: f.role,
                    name: f.name.clone(),
                    position: p,
                    gross_weight: gw[p],
                    budget_weight: bw[p],
                    movies: self.movie_counts.as_ref().map(|c| c[p]),
                }
            })
            .collect();
        let end = offset.saturating_add(features.len());
        Ok(FeaturePage {
            total: matches.len(),
            offset,
            next_offset: (end < matches.len()).then_some(end),
            features,
        })
    }

    pub fn info(&self) -> ModelInfo {
        let m = &self.models;
        ModelInfo {
            n_features: m.index.len(),
            block_sizes: Role::ALL.into_iter().zip(m.index.block_sizes()).collect(),
            budget_lambda: m.budget.lambda,
            gross_lambda: m.gross.lambda,
            budget_intercept: m.budget.intercept,
            gross_intercept: m.gross.intercept,
            gross_budget_coefficient: m.gross.budget_coefficient(),
            training: m.metrics.clone(),
            tensor_entries: self.tensor.nnz(),
            tensor_mass: self.tensor.total_mass(),
            library_movies: self.library_movies,
            candidate_cap: self.candidate_cap,
        }
    }
}

fn terms(t: bigmovie_core::planner::ObjectiveTerms) -> Terms {
    Terms {
        est_gross: t.est_gross,
        est_budget: t.est_budget,
        acquaintance: t.acquaintance,
        objective: t.objective,
    }
}

async fn blocking<T, F>(state: Arc<AppState>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&AppState) -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            error: "internal",
            detail: e.to_string(),
        })?
        .map(Json)
}

async fn plan_handler(
    State(state): State<Arc<AppState>>,
    body: Result<Json<PlanRequest>, JsonRejection>,
) -> ApiResult<PlanResponse> {
    let Json(req) = body?;
    blocking(state, move |s| s.plan(&req)).await
}

async fn whatif_handler(
    State(state): State<Arc<AppState>>,
    body: Result<Json<WhatIfRequest>, JsonRejection>,
) -> ApiResult<WhatIfResponse> {
    let Json(req) = body?;
    blocking(state, move |s| s.whatif(&req)).await
}

async fn features_handler(
    State(state): State<Arc<AppState>>,
    query: Result<Query<FeatureQuery>, QueryRejection>,
) -> ApiResult<FeaturePage> {
    let Query(q) = query?;
    state.features(&q).map(Json)
}

async fn info_handler(State(state): State<Arc<AppState>>) -> Json<ModelInfo> {
    Json(state.info())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/plan", post(plan_handler))
        .route("/whatif", post(whatif_handler))
        .route("/library/features", get(features_handler))
        .route("/model/info", get(info_handler))
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state))).await
}
