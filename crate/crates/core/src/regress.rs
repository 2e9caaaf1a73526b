//! Non-negative Lasso budget and gross estimators.
//!
//! Both models minimize `||y - (Xw + b)||^2 + lambda * ||w||_1` subject to
//! `w >= 0` with an unpenalized intercept. The budget model regresses the
//! recorded budget on the binary configuration; the gross model regresses
//! the recorded gross on `[budget, configuration]`, so its weight vector is
//! one longer and position 0 holds the budget coefficient.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{FeatureIndex, KnowledgeLibrary, MovieRecord, Role};

/// Column-compressed design matrix.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    n_rows: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl DesignMatrix {
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::new(); n_cols];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    columns[j].push((i, v));
                }
            }
        }
        Ok(Self {
            n_rows: rows.len(),
            columns,
        })
    }

    /// Builds from sparse rows of `(column, value)` pairs.
    pub fn from_sparse_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut columns = vec![Vec::new(); n_cols];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if j >= n_cols {
                    return Err(Error::DimensionMismatch {
                        expected: n_cols,
                        actual: j + 1,
                    });
                }
                if v != 0.0 {
                    columns[j].push((i, v));
                }
            }
        }
        Ok(Self {
            n_rows: rows.len(),
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// `Xw` without intercept.
    pub fn mul(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (col, &wj) in self.columns.iter().zip(w) {
            if wj != 0.0 {
                for &(i, v) in col {
                    out[i] += v * wj;
                }
            }
        }
        out
    }

    fn all_finite(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.iter().all(|(_, v)| v.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// When false the intercept is pinned to zero.
    pub fit_intercept: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            max_iters: 1000,
            tol: 1e-7,
            fit_intercept: true,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tol must be > 0, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Output of the coordinate-descent solver.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after initialization followed by the value after each sweep.
    pub objective_trace: Vec<f64>,
}

/// `||y - (Xw + b)||^2 + lambda * ||w||_1`.
pub fn lasso_objective(x: &DesignMatrix, y: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let pred = x.mul(w);
    let rss: f64 = y
        .iter()
        .zip(&pred)
        .map(|(yi, pi)| (yi - pi - b).powi(2))
        .sum();
    rss + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

fn objective_from_residual(r: &[f64], w: &[f64], lambda: f64) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() + lambda * w.iter().sum::<f64>()
}

/// Cyclic coordinate descent with non-negative soft-thresholding.
///
/// With `rho_j = 2 x_j . (r + x_j w_j)` and `z_j = 2 ||x_j||^2` the exact
/// coordinate minimizer under `w_j >= 0` is `max(0, (rho_j - lambda) / z_j)`.
/// The intercept is refit to the mean residual at the start of every sweep.
pub fn fit_nn_lasso(x: &DesignMatrix, y: &[f64], cfg: &FitConfig) -> Result<LassoFit> {
    cfg.validate()?;
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    if !x.all_finite() {
        return Err(Error::NonFinite("design matrix".into()));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("targets".into()));
    }

    let m = x.n_cols();
    let z: Vec<f64> = x
        .columns
        .iter()
        .map(|c| 2.0 * c.iter().map(|(_, v)| v * v).sum::<f64>())
        .collect();

    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let mut r = y.to_vec();
    let mut trace = vec![objective_from_residual(&r, &w, cfg.lambda)];
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < cfg.max_iters {
        sweeps += 1;
        let mut max_change = 0.0f64;

        if cfg.fit_intercept {
            let shift = r.iter().sum::<f64>() / n as f64;
            if shift != 0.0 {
                b += shift;
                r.iter_mut().for_each(|ri| *ri -= shift);
                max_change = max_change.max(shift.abs());
            }
        }

        for j in 0..m {
            if z[j] == 0.0 {
                continue;
            }
            let col = &x.columns[j];
            let old = w[j];
            let rho = 2.0 * col.iter().map(|&(i, v)| v * (r[i] + v * old)).sum::<f64>();
            let new = ((rho - cfg.lambda) / z[j]).max(0.0);
            let delta = new - old;
            if delta != 0.0 {
                for &(i, v) in col {
                    r[i] -= v * delta;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }

        trace.push(objective_from_residual(&r, &w, cfg.lambda));
        if max_change < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(LassoFit {
        weights: w,
        intercept: b,
        sweeps,
        converged,
        objective_trace: trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Budget,
    Gross,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Budget => "budget",
            ModelKind::Gross => "gross",
        })
    }
}

/// A fitted budget or gross model. Serializes to the model file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub feature_block_sizes: [usize; 5],
}

impl LinearModel {
    /// Number of configuration features N.
    pub fn n_features(&self) -> usize {
        self.feature_block_sizes.iter().sum()
    }

    /// Weights over the configuration features, skipping the budget
    /// coefficient of a gross model.
    pub fn feature_weights(&self) -> &[f64] {
        match self.kind {
            ModelKind::Budget => &self.weights,
            ModelKind::Gross => &self.weights[1..],
        }
    }

    /// Coefficient on the budget input; zero for a budget model.
    pub fn budget_coefficient(&self) -> f64 {
        match self.kind {
            ModelKind::Budget => 0.0,
            ModelKind::Gross => self.weights[0],
        }
    }

    /// Checks the structural invariants: weight count and non-negativity.
    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            ModelKind::Budget => self.n_features(),
            ModelKind::Gross => self.n_features() + 1,
        };
        if self.weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.weights.len(),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "{} model has invalid weight {w}",
                self.kind
            )));
        }
        if !self.intercept.is_finite() {
            return Err(Error::NonFinite(format!("{} intercept", self.kind)));
        }
        Ok(())
    }

    /// Linear part over a dense configuration plus intercept. For a gross
    /// model `budget` feeds the leading coefficient.
    pub fn predict(&self, x: &[f64], budget: f64) -> Result<f64> {
        let fw = self.feature_weights();
        if x.len() != fw.len() {
            return Err(Error::DimensionMismatch {
                expected: fw.len(),
                actual: x.len(),
            });
        }
        let dot: f64 = fw.iter().zip(x).map(|(w, v)| w * v).sum();
        Ok(dot + self.intercept + self.budget_coefficient() * budget)
    }

    /// Same as [`predict`](Self::predict) for a binary configuration given by
    /// its selected positions.
    pub fn predict_positions(&self, positions: &[usize], budget: f64) -> f64 {
        let fw = self.feature_weights();
        positions.iter().map(|&p| fw[p]).sum::<f64>()
            + self.intercept
            + self.budget_coefficient() * budget
    }
}

/// Feature subsets used for ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureGroup {
    #[serde(rename = "ALL")]
    All,
    Genre,
    Actor,
    Actress,
    Writer,
    Director,
}

impl FeatureGroup {
    pub const ALL_GROUPS: [FeatureGroup; 6] = [
        FeatureGroup::All,
        FeatureGroup::Genre,
        FeatureGroup::Actor,
        FeatureGroup::Actress,
        FeatureGroup::Writer,
        FeatureGroup::Director,
    ];

    pub fn includes(self, role: Role) -> bool {
        match self {
            FeatureGroup::All => true,
            FeatureGroup::Genre => role == Role::Genre,
            FeatureGroup::Actor => role == Role::Actor,
            FeatureGroup::Actress => role == Role::Actress,
            FeatureGroup::Writer => role == Role::Writer,
            FeatureGroup::Director => role == Role::Director,
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureGroup::All => "ALL",
            FeatureGroup::Genre => "Genre",
            FeatureGroup::Actor => "Actor",
            FeatureGroup::Actress => "Actress",
            FeatureGroup::Writer => "Writer",
            FeatureGroup::Director => "Director",
        })
    }
}

fn design_for(
    records: &[&MovieRecord],
    index: &FeatureIndex,
    kind: ModelKind,
    group: FeatureGroup,
) -> Result<(DesignMatrix, Vec<f64>)> {
    let offset = usize::from(kind == ModelKind::Gross);
    let mut rows = Vec::with_capacity(records.len());
    let mut y = Vec::with_capacity(records.len());
    for r in records {
        let (budget, gross) = match (r.budget, r.gross) {
            (Some(b), Some(g)) => (b, g),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "record {} is not trainable",
                    r.id
                )))
            }
        };
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(r.feature_count() + offset);
        if kind == ModelKind::Gross {
            row.push((0, budget));
        }
        for p in index.positions_of(r)? {
            if group.includes(index.role_of(p)) {
                row.push((p + offset, 1.0));
            }
        }
        rows.push(row);
        y.push(match kind {
            ModelKind::Budget => budget,
            ModelKind::Gross => gross,
        });
    }
    Ok((
        DesignMatrix::from_sparse_rows(index.len() + offset, &rows)?,
        y,
    ))
}

fn train_on(
    records: &[&MovieRecord],
    index: &FeatureIndex,
    cfg: &FitConfig,
    kind: ModelKind,
    group: FeatureGroup,
) -> Result<LinearModel> {
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 trainable records, got {}",
            records.len()
        )));
    }
    let (x, y) = design_for(records, index, kind, group)?;
    let fit = fit_nn_lasso(&x, &y, cfg)?;
    Ok(LinearModel {
        kind,
        intercept: fit.intercept,
        weights: fit.weights,
        lambda: cfg.lambda,
        feature_block_sizes: index.block_sizes(),
    })
}

/// Trains `Budget(x)` on all trainable records of `lib`.
pub fn train_budget_model(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    cfg: &FitConfig,
) -> Result<LinearModel> {
    let records: Vec<&MovieRecord> = lib.trainable().collect();
    train_on(&records, index, cfg, ModelKind::Budget, FeatureGroup::All)
}

/// Trains `Gross(B, x)` on all trainable records of `lib`.
pub fn train_gross_model(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    cfg: &FitConfig,
) -> Result<LinearModel> {
    let records: Vec<&MovieRecord> = lib.trainable().collect();
    train_on(&records, index, cfg, ModelKind::Gross, FeatureGroup::All)
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], estimated: &[f64]) -> Result<f64> {
    if actual.len() != estimated.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: estimated.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InsufficientData("MAPE of an empty sample".into()));
    }
    let mut total = 0.0;
    for (i, (a, e)) in actual.iter().zip(estimated).enumerate() {
        if *a == 0.0 {
            return Err(Error::UndefinedMape(i));
        }
        total += ((a - e) / a).abs();
    }
    Ok(100.0 * total / actual.len() as f64)
}

fn model_mape(model: &LinearModel, records: &[&MovieRecord], index: &FeatureIndex) -> Result<f64> {
    let mut actual = Vec::with_capacity(records.len());
    let mut estimated = Vec::with_capacity(records.len());
    for r in records {
        let budget = r.budget.unwrap_or(0.0);
        let positions = index.positions_of(r)?;
        estimated.push(model.predict_positions(&positions, budget));
        actual.push(match model.kind {
            ModelKind::Budget => budget,
            ModelKind::Gross => r.gross.unwrap_or(0.0),
        });
    }
    mape(&actual, &estimated)
}

/// In-sample MAPE of `model` over the trainable records of `lib` whose target
/// is nonzero. `None` when no such record exists.
pub fn training_mape(
    model: &LinearModel,
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
) -> Result<Option<f64>> {
    let records: Vec<&MovieRecord> = lib
        .trainable()
        .filter(|r| match model.kind {
            ModelKind::Budget => r.budget != Some(0.0),
            ModelKind::Gross => r.gross != Some(0.0),
        })
        .collect();
    if records.is_empty() {
        return Ok(None);
    }
    model_mape(model, &records, index).map(Some)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// MAPE of the all-features model.
    pub mape: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_group: Option<BTreeMap<FeatureGroup, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "split", content = "fold")]
pub enum Split {
    Fold(usize),
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub split: Split,
    pub n_train: usize,
    pub budget: EvalReport,
    pub gross: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Records used: trainable with strictly positive budget and gross.
    pub n_used: usize,
    /// Trainable records dropped for a zero budget or gross.
    pub n_zero_target: usize,
    /// Shuffled record ids of the held-out test split.
    pub test_ids: Vec<String>,
    pub folds: Vec<SplitReport>,
    pub test: SplitReport,
}

impl CrossValidation {
    pub fn reports(&self) -> impl Iterator<Item = &SplitReport> {
        self.folds.iter().chain(std::iter::once(&self.test))
    }
}

fn evaluate_split(
    split: Split,
    train: &[&MovieRecord],
    eval: &[&MovieRecord],
    index: &FeatureIndex,
    cfg: &FitConfig,
) -> Result<SplitReport> {
    let mut out: BTreeMap<(ModelKind, FeatureGroup), f64> = BTreeMap::new();
    for kind in [ModelKind::Budget, ModelKind::Gross] {
        for group in FeatureGroup::ALL_GROUPS {
            let model = train_on(train, index, cfg, kind, group)?;
            out.insert((kind, group), model_mape(&model, eval, index)?);
        }
    }
    let report = |kind: ModelKind| {
        let per_group: BTreeMap<FeatureGroup, f64> = FeatureGroup::ALL_GROUPS
            .iter()
            .map(|&g| (g, out[&(kind, g)]))
            .collect();
        EvalReport {
            mape: per_group[&FeatureGroup::All],
            n: eval.len(),
            per_group: Some(per_group),
        }
    };
    Ok(SplitReport {
        split,
        n_train: train.len(),
        budget: report(ModelKind::Budget),
        gross: report(ModelKind::Gross),
    })
}

/// Seeded 80/20 outer split followed by k-fold cross validation on the 80%
/// portion, with per-feature-group ablations for every split.
pub fn cross_validate(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    cfg: &FitConfig,
    k: usize,
    seed: u64,
) -> Result<CrossValidation> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need k >= 2 folds, got {k}"
        )));
    }
    let trainable: Vec<&MovieRecord> = lib.trainable().collect();
    let mut usable: Vec<&MovieRecord> = trainable
        .iter()
        .copied()
        .filter(|r| r.budget.is_some_and(|b| b > 0.0) && r.gross.is_some_and(|g| g > 0.0))
        .collect();
    let n_zero_target = trainable.len() - usable.len();

    let n = usable.len();
    let n_test = ((n as f64) * 0.2).round().max(1.0) as usize;
    if n < k || n - n_test < k.max(3) {
        return Err(Error::InsufficientData(format!(
            "{n} usable records is too few for {k}-fold cross validation"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    usable.shuffle(&mut rng);
    let (test, train) = usable.split_at(n_test);

    let mut folds = Vec::with_capacity(k);
    for f in 0..k {
        let (held, rest): (Vec<_>, Vec<_>) =
            train.iter().enumerate().partition(|(i, _)| i % k == f);
        let held: Vec<&MovieRecord> = held.into_iter().map(|(_, r)| *r).collect();
        let rest: Vec<&MovieRecord> = rest.into_iter().map(|(_, r)| *r).collect();
        folds.push(evaluate_split(Split::Fold(f), &rest, &held, index, cfg)?);
    }
    let test_report = evaluate_split(Split::Test, train, test, index, cfg)?;

    Ok(CrossValidation {
        n_used: n,
        n_zero_target,
        test_ids: test.iter().map(|r| r.id.clone()).collect(),
        folds,
        test: test_report,
    })
}

/// Train on `train`, report all-feature MAPE on `test` for both models.
pub fn holdout_mape(
    train: &[&MovieRecord],
    test: &[&MovieRecord],
    index: &FeatureIndex,
    cfg: &FitConfig,
) -> Result<(f64, f64)> {
    let budget = train_on(train, index, cfg, ModelKind::Budget, FeatureGroup::All)?;
    let gross = train_on(train, index, cfg, ModelKind::Gross, FeatureGroup::All)?;
    Ok((
        model_mape(&budget, test, index)?,
        model_mape(&gross, test, index)?,
    ))
}
