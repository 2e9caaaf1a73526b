//! Wire types. Features travel as `role:name` keys.

use std::collections::BTreeMap;

use bigmovie_core::library::Role;
use bigmovie_core::planner::{PlanReport, DEFAULT_BETA, DEFAULT_THETA};
use bigmovie_core::store::TrainingMetrics;
use serde::{Deserialize, Serialize};

fn one() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_method() -> String {
    "bigmovie".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub budget_cap: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub team_cap: Option<usize>,
    #[serde(default)]
    pub locked: Vec<String>,
    #[serde(default)]
    pub excluded: Vec<String>,
    /// Omitted: every feature, or a gross-ranked pool when that exceeds
    /// the candidate cap.
    #[serde(default)]
    pub candidate_pool: Option<Vec<String>>,
    #[serde(default = "default_method")]
    pub method: String,
}

impl PlanRequest {
    pub fn new(budget_cap: f64) -> Self {
        Self {
            budget_cap,
            alpha: 1.0,
            beta: DEFAULT_BETA,
            theta: DEFAULT_THETA,
            team_cap: None,
            locked: Vec::new(),
            excluded: Vec::new(),
            candidate_pool: None,
            method: default_method(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResponse {
    #[serde(flatten)]
    pub report: PlanReport,
    /// Size of the candidate pool actually planned over.
    pub n_candidates: usize,
}

/// `["role:name", 0|1]` or `{"feature": "role:name", "value": 0|1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Toggle {
    Pair(String, u8),
    Named { feature: String, value: u8 },
}

impl Toggle {
    pub fn parts(&self) -> (&str, u8) {
        match self {
            Toggle::Pair(f, v)
            | Toggle::Named {
                feature: f,
                value: v,
            } => (f, *v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIfRequest {
    pub base: PlanRequest,
    #[serde(default)]
    pub toggles: Vec<Toggle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub est_gross: f64,
    pub est_budget: f64,
    pub acquaintance: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResponse {
    pub base: Terms,
    pub toggled: Terms,
    /// `toggled - base`, term by term.
    pub delta: Terms,
    pub feasible: bool,
    /// Keys selected after the toggles, in position order.
    pub selected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEntry {
    pub key: String,
    pub role: Role,
    pub name: String,
    pub position: usize,
    pub gross_weight: f64,
    pub budget_weight: f64,
    /// Movies crediting the feature; present when a library was loaded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub movies: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePage {
    /// Matches before paging.
    pub total: usize,
    pub offset: usize,
    pub features: Vec<FeatureEntry>,
    pub next_offset: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureQuery {
    pub role: Option<String>,
    pub prefix: Option<String>,
    pub limit: Option<usize>,
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub n_features: usize,
    pub block_sizes: BTreeMap<Role, usize>,
    pub budget_lambda: f64,
    pub gross_lambda: f64,
    pub budget_intercept: f64,
    pub gross_intercept: f64,
    pub gross_budget_coefficient: f64,
    pub training: TrainingMetrics,
    /// Nonzero entries of the full symmetric tensor.
    pub tensor_entries: usize,
    pub tensor_mass: u64,
    pub library_movies: Option<usize>,
    pub candidate_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}
