//! Budget-constrained configuration planning.
//!
//! The planner maximizes
//!
//! ```text
//! alpha * (w_g[1..] . x + b_g + w_g[0] * B) + beta * acquaintance(x)
//! s.t.   w_b . x + b_b <= B,  x binary
//! ```
//!
//! by relaxing `x` to `[0, 1]^N`, running projected gradient ascent with a
//! backtracking line search, thresholding at `theta` and repairing the
//! rounded point. The objective is cubic and not concave, so the relaxed
//! solve finds a stationary point only; [`exact_plan`] enumerates small
//! instances for reference.
//!
//! Only candidate and locked features are variables. Locked features are
//! pinned to 1; excluded features and anything outside the candidate set are
//! pinned to 0.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{ConfigVector, FeatureIndex, Role};
use crate::regress::{LinearModel, ModelKind};
use crate::tensor::{AcquaintanceTensor, CubicForm};

/// Largest free-candidate count accepted by [`exact_plan`].
pub const EXACT_MAX_CANDIDATES: usize = 20;

pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_BETA: f64 = 1e-4;

const MAX_RELAXED_ITERS: usize = 500;
const STEP_TOL: f64 = 1e-6;
const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    BigMovie,
    MaxG,
    MaxA,
    Greedy,
    Exact,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::BigMovie => "bigmovie",
            Method::MaxG => "maxg",
            Method::MaxA => "maxa",
            Method::Greedy => "greedy",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bigmovie" => Ok(Method::BigMovie),
            "maxg" => Ok(Method::MaxG),
            "maxa" => Ok(Method::MaxA),
            "greedy" => Ok(Method::Greedy),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

/// One planning instance over shared, immutable models and tensor.
#[derive(Debug, Clone)]
pub struct PlanProblem<'a> {
    pub budget_cap: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub gross_model: &'a LinearModel,
    pub budget_model: &'a LinearModel,
    pub tensor: &'a AcquaintanceTensor,
    /// Features eligible for selection; `None` means every feature.
    pub candidates: Option<BTreeSet<usize>>,
    pub locked: BTreeSet<usize>,
    pub excluded: BTreeSet<usize>,
    /// Maximum number of selected non-locked crew features.
    pub team_cap: Option<usize>,
}

impl<'a> PlanProblem<'a> {
    pub fn new(
        gross_model: &'a LinearModel,
        budget_model: &'a LinearModel,
        tensor: &'a AcquaintanceTensor,
        budget_cap: f64,
    ) -> Self {
        Self {
            budget_cap,
            alpha: 1.0,
            beta: DEFAULT_BETA,
            theta: DEFAULT_THETA,
            gross_model,
            budget_model,
            tensor,
            candidates: None,
            locked: BTreeSet::new(),
            excluded: BTreeSet::new(),
            team_cap: None,
        }
    }

    pub fn with_weights(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_candidates(mut self, candidates: impl IntoIterator<Item = usize>) -> Self {
        self.candidates = Some(candidates.into_iter().collect());
        self
    }

    pub fn with_locked(mut self, locked: impl IntoIterator<Item = usize>) -> Self {
        self.locked = locked.into_iter().collect();
        self
    }

    pub fn with_excluded(mut self, excluded: impl IntoIterator<Item = usize>) -> Self {
        self.excluded = excluded.into_iter().collect();
        self
    }

    pub fn with_team_cap(mut self, team_cap: Option<usize>) -> Self {
        self.team_cap = team_cap;
        self
    }

    /// Configuration dimension N.
    pub fn dim(&self) -> usize {
        self.budget_model.weights.len()
    }

    pub fn is_crew(&self, pos: usize) -> bool {
        pos < self.tensor.crew_len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_model.kind != ModelKind::Budget || self.gross_model.kind != ModelKind::Gross
        {
            return Err(Error::InvalidArgument(
                "expected a budget model and a gross model".into(),
            ));
        }
        self.budget_model.validate()?;
        self.gross_model.validate()?;
        let n = self.dim();
        if self.gross_model.feature_weights().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.gross_model.feature_weights().len(),
            });
        }
        if self.tensor.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.tensor.dim(),
            });
        }
        for (label, v) in [
            ("budget_cap", self.budget_cap),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{label} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [0, 1], got {}",
                self.theta
            )));
        }
        if self.team_cap == Some(0) {
            return Err(Error::InvalidArgument("team_cap must be positive".into()));
        }
        if let Some(p) = self.locked.intersection(&self.excluded).next() {
            return Err(Error::InvalidArgument(format!(
                "feature {p} is both locked and excluded"
            )));
        }
        let out_of_range = self
            .locked
            .iter()
            .chain(&self.excluded)
            .chain(self.candidates.iter().flatten())
            .find(|&&p| p >= n);
        if let Some(&p) = out_of_range {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p + 1,
            });
        }
        Ok(())
    }

    /// Positions free to vary: candidates minus locked and excluded.
    pub fn free_positions(&self) -> Vec<usize> {
        let keep = |p: &usize| !self.locked.contains(p) && !self.excluded.contains(p);
        match &self.candidates {
            Some(c) => c.iter().copied().filter(keep).collect(),
            None => (0..self.dim()).filter(keep).collect(),
        }
    }

    /// Estimated budget of the configuration selecting only locked features.
    pub fn locked_budget(&self) -> f64 {
        let w = &self.budget_model.weights;
        self.budget_model.intercept + self.locked.iter().map(|&p| w[p]).sum::<f64>()
    }

    /// Euclidean projection of a full-length point onto the feasible box:
    /// locked pinned to 1, non-free pinned to 0, free coordinates projected
    /// onto `{x in [0,1] : w_b . x <= remaining budget}`.
    pub fn project(&self, y: &[f64]) -> Result<ConfigVector> {
        self.validate()?;
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: y.len(),
            });
        }
        let reduced = Reduced::new(self)?;
        let local: Vec<f64> = reduced.free.iter().map(|&p| y[p]).collect();
        let xf = project_feasible(&local, &reduced.free_cost, reduced.capacity)?;
        ConfigVector::relaxed(reduced.expand(&reduced.with_locked(&xf)))
    }
}

/// Gross, budget and acquaintance terms of a configuration under a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub objective: f64,
    pub est_gross: f64,
    pub est_budget: f64,
    pub acquaintance: f64,
}

/// Objective value and its terms, computed from the full models and tensor.
pub fn evaluate_objective(p: &PlanProblem<'_>, x: &ConfigVector) -> Result<ObjectiveTerms> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: x.len(),
        });
    }
    let est_gross = p.gross_model.predict(x.values(), p.budget_cap)?;
    let est_budget = p.budget_model.predict(x.values(), 0.0)?;
    let acquaintance = p.tensor.acquaintance(x.values())?;
    Ok(ObjectiveTerms {
        objective: p.alpha * est_gross + p.beta * acquaintance,
        est_gross,
        est_budget,
        acquaintance,
    })
}

/// Euclidean projection of `y` onto `{x in [0,1]^n : w . x <= c}` with
/// `w >= 0`.
///
/// The solution is `x(mu) = clip(y - mu * w, 0, 1)` for the smallest
/// `mu >= 0` with `w . x(mu) <= c`. The load `mu -> w . x(mu)` is monotone
/// non-increasing, so `mu` is found by bisection and the feasible end of the
/// final bracket is returned.
pub fn project_feasible(y: &[f64], w: &[f64], c: f64) -> Result<Vec<f64>> {
    if y.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: w.len(),
        });
    }
    if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "projection weights must be finite and >= 0, got {v}"
        )));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("projection point".into()));
    }
    if c < 0.0 {
        return Err(Error::LockedExceedsBudget);
    }

    let at = |mu: f64| -> Vec<f64> {
        y.iter()
            .zip(w)
            .map(|(yi, wi)| (yi - mu * wi).clamp(0.0, 1.0))
            .collect()
    };
    let load = |x: &[f64]| -> f64 { x.iter().zip(w).map(|(xi, wi)| xi * wi).sum() };

    let x0 = at(0.0);
    if load(&x0) <= c {
        return Ok(x0);
    }

    // Every coordinate with positive weight is clipped to 0 at `hi`.
    let mut hi = y
        .iter()
        .zip(w)
        .filter(|(_, wi)| **wi > 0.0)
        .map(|(yi, wi)| yi / wi)
        .fold(0.0f64, f64::max);
    let mut lo = 0.0f64;
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if load(&at(mid)) <= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(at(hi))
}

/// The problem restricted to its active variables (locked then free).
struct Reduced<'p, 'a> {
    problem: &'p PlanProblem<'a>,
    locked: Vec<usize>,
    free: Vec<usize>,
    free_cost: Vec<f64>,
    /// Gross weight per active variable.
    gain: Vec<f64>,
    cost: Vec<f64>,
    cubic: CubicForm,
    /// Budget left for free variables after intercept and locked features.
    capacity: f64,
    /// `b_g + w_g[0] * B`.
    gross_constant: f64,
}

impl<'p, 'a> Reduced<'p, 'a> {
    fn new(problem: &'p PlanProblem<'a>) -> Result<Self> {
        let locked: Vec<usize> = problem.locked.iter().copied().collect();
        let free = problem.free_positions();
        let active: Vec<usize> = locked.iter().chain(&free).copied().collect();
        let gw = problem.gross_model.feature_weights();
        let bw = &problem.budget_model.weights;
        let gain = active.iter().map(|&p| gw[p]).collect();
        let cost: Vec<f64> = active.iter().map(|&p| bw[p]).collect();
        let free_cost = cost[locked.len()..].to_vec();
        let capacity = problem.budget_cap - problem.locked_budget();
        if capacity < -BUDGET_SLACK {
            return Err(Error::LockedExceedsBudget);
        }
        Ok(Self {
            problem,
            cubic: problem.tensor.restrict(&active),
            locked,
            free,
            free_cost,
            gain,
            cost,
            capacity: capacity.max(0.0),
            gross_constant: problem.gross_model.intercept
                + problem.gross_model.budget_coefficient() * problem.budget_cap,
        })
    }

    fn n_locked(&self) -> usize {
        self.locked.len()
    }

    /// Active-variable vector from free values.
    fn with_locked(&self, free_values: &[f64]) -> Vec<f64> {
        let mut x = vec![1.0; self.n_locked()];
        x.extend_from_slice(free_values);
        x
    }

    fn expand(&self, active_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.dim()];
        for (&p, &v) in self.locked.iter().chain(&self.free).zip(active_values) {
            out[p] = v;
        }
        out
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let p = self.problem;
        let linear: f64 = self.gain.iter().zip(x).map(|(g, v)| g * v).sum();
        let mut value = p.alpha * (linear + self.gross_constant);
        if p.beta != 0.0 {
            value += p.beta * self.cubic.value(x);
        }
        value
    }

    /// Gradient over the free variables.
    fn free_gradient(&self, x: &[f64]) -> Vec<f64> {
        let p = self.problem;
        let mut g: Vec<f64> = self.gain.iter().map(|v| p.alpha * v).collect();
        if p.beta != 0.0 {
            self.cubic.add_gradient(x, p.beta, &mut g);
        }
        g.split_off(self.n_locked())
    }

    fn budget_of(&self, x: &[f64]) -> f64 {
        self.problem.budget_model.intercept
            + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Relaxed solution with its iteration trace.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub x: ConfigVector,
    pub iterations: usize,
    /// Objective at the start point and after every iteration.
    pub objective_trace: Vec<f64>,
    /// Estimated budget at the start point and after every iteration.
    pub budget_trace: Vec<f64>,
}

/// Projected gradient ascent on the relaxed objective.
///
/// Starts from the projection of the all-0.5 point. Each iteration tries a
/// step four times the last accepted one and halves it until the objective
/// does not decrease. Stops when the accepted step moves no coordinate by
/// more than `1e-6`, or after 500 iterations.
pub fn solve_relaxed(p: &PlanProblem<'_>) -> Result<RelaxedSolution> {
    p.validate()?;
    let r = Reduced::new(p)?;
    let project = |y: &[f64]| project_feasible(y, &r.free_cost, r.capacity);

    let mut free = project(&vec![0.5; r.free.len()])?;
    let mut x = r.with_locked(&free);
    let mut f = r.objective(&x);
    let mut objective_trace = vec![f];
    let mut budget_trace = vec![r.budget_of(&x)];
    let mut iterations = 0;
    let mut eta: Option<f64> = None;

    while iterations < MAX_RELAXED_ITERS && !r.free.is_empty() {
        let g = r.free_gradient(&x);
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            break;
        }
        iterations += 1;

        let mut step = eta.map_or(1.0 / gmax, |e| (4.0 * e).min(1e12));
        let mut accepted: Option<(Vec<f64>, Vec<f64>, f64)> = None;
        while step * gmax > 1e-15 {
            let trial: Vec<f64> = free.iter().zip(&g).map(|(v, gi)| v + step * gi).collect();
            let next_free = project(&trial)?;
            let next_x = r.with_locked(&next_free);
            let next_f = r.objective(&next_x);
            if next_f >= f {
                accepted = Some((next_free, next_x, next_f));
                break;
            }
            step *= 0.5;
        }
        let Some((next_free, next_x, next_f)) = accepted else {
            break;
        };
        eta = Some(step);

        let moved = free
            .iter()
            .zip(&next_free)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        free = next_free;
        x = next_x;
        f = next_f;
        objective_trace.push(f);
        budget_trace.push(r.budget_of(&x));
        if moved < STEP_TOL {
            break;
        }
    }

    Ok(RelaxedSolution {
        x: ConfigVector::relaxed(r.expand(&x))?,
        iterations,
        objective_trace,
        budget_trace,
    })
}

/// Thresholds a relaxed point at `theta` (strictly greater selects), then
/// repairs the budget by dropping the lowest-scored non-locked selections and
/// trims non-locked crew to `team_cap` by score.
pub fn binarize(relaxed: &ConfigVector, p: &PlanProblem<'_>) -> Result<ConfigVector> {
    p.validate()?;
    let n = p.dim();
    if relaxed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: relaxed.len(),
        });
    }
    if p.locked_budget() > p.budget_cap + BUDGET_SLACK {
        return Err(Error::LockedExceedsBudget);
    }
    let score = relaxed.values();
    let mut chosen: Vec<usize> = p
        .free_positions()
        .into_iter()
        .filter(|&i| score[i] > p.theta)
        .collect();

    // Ascending score; among equal scores the higher position goes first.
    let by_score = |a: &usize, b: &usize| {
        score[*a]
            .partial_cmp(&score[*b])
            .unwrap_or(Ordering::Equal)
            .then(b.cmp(a))
    };
    chosen.sort_by(by_score);

    let bw = &p.budget_model.weights;
    let mut budget = p.locked_budget() + chosen.iter().map(|&i| bw[i]).sum::<f64>();
    let mut drop = 0;
    while budget > p.budget_cap && drop < chosen.len() {
        budget -= bw[chosen[drop]];
        drop += 1;
    }
    let mut kept: Vec<usize> = chosen.split_off(drop);

    if let Some(cap) = p.team_cap {
        let crew = kept.iter().filter(|&&i| p.is_crew(i)).count();
        if crew > cap {
            let mut excess = crew - cap;
            kept.retain(|&i| {
                if excess > 0 && p.is_crew(i) {
                    excess -= 1;
                    false
                } else {
                    true
                }
            });
        }
    }

    ConfigVector::from_positions(n, p.locked.iter().copied().chain(kept))
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanResult {
    pub config: ConfigVector,
    pub relaxed: ConfigVector,
    pub est_gross: f64,
    pub est_budget: f64,
    pub acquaintance_score: f64,
    pub objective: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub method: Method,
}

impl PlanResult {
    fn assemble(
        p: &PlanProblem<'_>,
        config: ConfigVector,
        relaxed: ConfigVector,
        iterations: usize,
        method: Method,
    ) -> Result<Self> {
        let terms = evaluate_objective(p, &config)?;
        Ok(Self {
            feasible: terms.est_budget <= p.budget_cap + BUDGET_SLACK,
            config,
            relaxed,
            est_gross: terms.est_gross,
            est_budget: terms.est_budget,
            acquaintance_score: terms.acquaintance,
            objective: terms.objective,
            iterations,
            method,
        })
    }

    pub fn selected(&self) -> Vec<usize> {
        self.config.selected()
    }
}

/// Greedy completion of a feasible binary configuration: repeatedly adds the
/// affordable free feature with the largest strictly positive marginal
/// objective gain, within `team_cap`. Ties go to the lower position.
pub fn complete(config: &ConfigVector, p: &PlanProblem<'_>) -> Result<ConfigVector> {
    p.validate()?;
    let r = Reduced::new(p)?;
    let nl = r.n_locked();
    let n_active = nl + r.free.len();
    let x = config.values();
    let mut on: Vec<bool> = (0..n_active)
        .map(|i| i < nl || x[r.free[i - nl]] == 1.0)
        .collect();

    let mut touching: Vec<Vec<usize>> = vec![Vec::new(); n_active];
    for (t, term) in r.cubic.terms.iter().enumerate() {
        touching[term.a].push(t);
        touching[term.b].push(t);
        touching[term.g].push(t);
    }
    let marginal = |j: usize, on: &[bool]| {
        let mut cubic = 0.0;
        if p.beta != 0.0 {
            for &t in &touching[j] {
                let term = &r.cubic.terms[t];
                let others = [term.a, term.b, term.g];
                if others.iter().all(|&v| v == j || on[v]) {
                    cubic += term.weight;
                }
            }
        }
        p.alpha * r.gain[j] + p.beta * cubic
    };

    let mut spend: f64 = (nl..n_active).filter(|&i| on[i]).map(|i| r.cost[i]).sum();
    let mut crew = (nl..n_active)
        .filter(|&i| on[i] && p.is_crew(r.free[i - nl]))
        .count();
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in nl..n_active {
            if on[j] || spend + r.cost[j] > r.capacity {
                continue;
            }
            let is_crew = p.is_crew(r.free[j - nl]);
            if is_crew && p.team_cap.is_some_and(|cap| crew >= cap) {
                continue;
            }
            let gain = marginal(j, &on);
            if gain > 0.0 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, j));
            }
        }
        let Some((_, j)) = best else { break };
        on[j] = true;
        spend += r.cost[j];
        crew += usize::from(p.is_crew(r.free[j - nl]));
    }

    ConfigVector::from_positions(
        p.dim(),
        (0..n_active)
            .filter(|&i| on[i])
            .map(|i| if i < nl { r.locked[i] } else { r.free[i - nl] }),
    )
}

/// Relax, threshold, repair, then complete with any budget left over.
pub fn plan(p: &PlanProblem<'_>) -> Result<PlanResult> {
    let relaxed = solve_relaxed(p)?;
    let config = complete(&binarize(&relaxed.x, p)?, p)?;
    PlanResult::assemble(p, config, relaxed.x, relaxed.iterations, Method::BigMovie)
}

/// Ratio greedy on `w_g / w_b`: zero-cost positive-gain features first,
/// zero-gain features never, unaffordable ones skipped.
pub fn greedy_plan(p: &PlanProblem<'_>) -> Result<PlanResult> {
    p.validate()?;
    if p.locked_budget() > p.budget_cap + BUDGET_SLACK {
        return Err(Error::LockedExceedsBudget);
    }
    let gw = p.gross_model.feature_weights();
    let bw = &p.budget_model.weights;
    let ratio = |i: usize| {
        if bw[i] == 0.0 {
            f64::INFINITY
        } else {
            gw[i] / bw[i]
        }
    };
    let mut order: Vec<usize> = p
        .free_positions()
        .into_iter()
        .filter(|&i| gw[i] > 0.0)
        .collect();
    order.sort_by(|&a, &b| {
        ratio(b)
            .partial_cmp(&ratio(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut budget = p.locked_budget();
    let mut crew = 0;
    let mut chosen = Vec::new();
    for i in order {
        if p.is_crew(i) && p.team_cap.is_some_and(|cap| crew >= cap) {
            continue;
        }
        if budget + bw[i] <= p.budget_cap {
            budget += bw[i];
            crew += usize::from(p.is_crew(i));
            chosen.push(i);
        }
    }
    let config = ConfigVector::from_positions(p.dim(), p.locked.iter().copied().chain(chosen))?;
    let relaxed = ConfigVector::relaxed(config.values().to_vec())?;
    PlanResult::assemble(p, config, relaxed, 0, Method::Greedy)
}

/// Exhaustive search over all subsets of the free candidates. Ties on the
/// objective go to the smaller estimated budget, then to the
/// lexicographically smaller selection.
pub fn exact_plan(p: &PlanProblem<'_>) -> Result<PlanResult> {
    p.validate()?;
    let r = Reduced::new(p)?;
    let k = r.free.len();
    if k > EXACT_MAX_CANDIDATES {
        return Err(Error::TooManyCandidates {
            size: k,
            max: EXACT_MAX_CANDIDATES,
        });
    }
    let nl = r.n_locked();
    let crew_flags: Vec<bool> = r.free.iter().map(|&i| p.is_crew(i)).collect();

    let mut on = vec![false; nl + k];
    on[..nl].iter_mut().for_each(|v| *v = true);
    let mut x = vec![0.0; nl + k];
    x[..nl].iter_mut().for_each(|v| *v = 1.0);

    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << k) {
        let mut spend = 0.0;
        let mut crew = 0;
        let mut picked = Vec::new();
        for j in 0..k {
            let bit = mask >> j & 1 == 1;
            on[nl + j] = bit;
            x[nl + j] = if bit { 1.0 } else { 0.0 };
            if bit {
                spend += r.free_cost[j];
                crew += usize::from(crew_flags[j]);
                picked.push(j);
            }
        }
        if spend > r.capacity || p.team_cap.is_some_and(|cap| crew > cap) {
            continue;
        }
        let linear: f64 = r.gain.iter().zip(&x).map(|(g, v)| g * v).sum();
        let value = p.alpha * (linear + r.gross_constant) + p.beta * r.cubic.value_mask(&on);
        let better = match &best {
            None => true,
            Some((bv, bs, bp)) => {
                let eps = 1e-9 * bv.abs().max(1.0);
                if value > bv + eps {
                    true
                } else if value < bv - eps {
                    false
                } else if spend < bs - 1e-12 {
                    true
                } else if spend > bs + 1e-12 {
                    false
                } else {
                    picked < *bp
                }
            }
        };
        if better {
            best = Some((value, spend, picked));
        }
    }

    // The empty selection is always within capacity, so `best` is set.
    let (_, _, picked) = best.expect("empty selection is feasible");
    let config = ConfigVector::from_positions(
        p.dim(),
        p.locked
            .iter()
            .copied()
            .chain(picked.into_iter().map(|j| r.free[j])),
    )?;
    let relaxed = ConfigVector::relaxed(config.values().to_vec())?;
    PlanResult::assemble(p, config, relaxed, 1usize << k, Method::Exact)
}

/// Runs `method` on `p`. MaxG and MaxA override the weights with
/// `(alpha, beta) = (1, 0)` and `(0, 1)`.
pub fn solve(p: &PlanProblem<'_>, method: Method) -> Result<PlanResult> {
    match method {
        Method::BigMovie => plan(p),
        Method::MaxG => {
            let q = p.clone().with_weights(1.0, 0.0);
            Ok(PlanResult {
                method: Method::MaxG,
                ..plan(&q)?
            })
        }
        Method::MaxA => {
            let q = p.clone().with_weights(0.0, 1.0);
            Ok(PlanResult {
                method: Method::MaxA,
                ..plan(&q)?
            })
        }
        Method::Greedy => greedy_plan(p),
        Method::Exact => exact_plan(p),
    }
}

/// One selected feature in a plan report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeature {
    pub name: String,
    pub position: usize,
    /// Relaxed value before rounding; 1 for locked and baseline selections.
    pub score: f64,
    pub gross_weight: f64,
    pub budget_weight: f64,
    pub locked: bool,
}

/// Plan file and `/plan` response body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub method: Method,
    pub feasible: bool,
    pub iterations: usize,
    pub budget_cap: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub est_gross: f64,
    pub est_budget: f64,
    pub acquaintance: f64,
    pub objective: f64,
    pub selected: BTreeMap<Role, Vec<SelectedFeature>>,
}

impl PlanReport {
    pub fn new(result: &PlanResult, p: &PlanProblem<'_>, index: &FeatureIndex) -> Self {
        let (alpha, beta) = match result.method {
            Method::MaxG => (1.0, 0.0),
            Method::MaxA => (0.0, 1.0),
            _ => (p.alpha, p.beta),
        };
        let gw = p.gross_model.feature_weights();
        let bw = &p.budget_model.weights;
        let mut selected: BTreeMap<Role, Vec<SelectedFeature>> =
            Role::ALL.into_iter().map(|r| (r, Vec::new())).collect();
        for pos in result.selected() {
            let f = index.feature(pos);
            selected.entry(f.role).or_default().push(SelectedFeature {
                name: f.name.clone(),
                position: pos,
                score: result.relaxed.values()[pos],
                gross_weight: gw[pos],
                budget_weight: bw[pos],
                locked: p.locked.contains(&pos),
            });
        }
        Self {
            method: result.method,
            feasible: result.feasible,
            iterations: result.iterations,
            budget_cap: p.budget_cap,
            alpha,
            beta,
            theta: p.theta,
            est_gross: result.est_gross,
            est_budget: result.est_budget,
            acquaintance: result.acquaintance_score,
            objective: result.objective,
            selected,
        }
    }
}
