//! Synthetic corpora with planted ground truth and the planning evaluation
//! protocols: mask-and-recover accuracy/F1, the beta sweep and the
//! single-movie case study.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{FeatureIndex, KnowledgeLibrary, MovieRecord, Role};
use crate::planner::{self, Method, PlanProblem, PlanReport, PlanResult};
use crate::regress::{self, FitConfig, LinearModel, ModelKind};
use crate::tensor::AcquaintanceTensor;

const GENRE_NAMES: [&str; 24] = [
    "Action",
    "Adventure",
    "Animation",
    "Biography",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Family",
    "Fantasy",
    "History",
    "Horror",
    "Music",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Sport",
    "Thriller",
    "War",
    "Western",
    "Film-Noir",
    "News",
    "Short",
];

/// Expected number of features per movie, by role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleSparsity {
    pub actors: f64,
    pub actresses: f64,
    pub directors: f64,
    pub writers: f64,
    pub genres: f64,
}

impl RoleSparsity {
    fn get(&self, role: Role) -> f64 {
        match role {
            Role::Actor => self.actors,
            Role::Actress => self.actresses,
            Role::Director => self.directors,
            Role::Writer => self.writers,
            Role::Genre => self.genres,
        }
    }
}

/// Recurring crews that work together on movies of fixed genres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub n_teams: usize,
    /// Crew members per team.
    pub team_size: usize,
    /// Probability that a movie is made by one of the teams.
    pub team_movie_prob: f64,
    /// Probability that each team member appears in one of its movies.
    pub member_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_movies: usize,
    pub n_actors: usize,
    pub n_actresses: usize,
    pub n_directors: usize,
    pub n_writers: usize,
    pub n_genres: usize,
    pub sparsity: RoleSparsity,
    /// Standard deviation of additive Gaussian noise on budget and gross.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Fraction of features with a nonzero planted gross weight.
    pub weight_density: f64,
    /// Fraction of features with a nonzero planted budget weight.
    pub cost_density: f64,

    /// Roles allowed to carry planted weights.
    pub signal_roles: Vec<Role>,
    pub teams: Option<TeamSpec>,
    /// Fraction of movies whose gross is withheld.
    pub missing_fraction: f64,
    /// Place every pool member in at least one movie so the index holds
    /// exactly the pool sizes.
    pub ensure_coverage: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_movies: 500,
            n_actors: 200,
            n_actresses: 120,
            n_directors: 60,
            n_writers: 80,
            n_genres: 12,
            sparsity: RoleSparsity {
                actors: 4.0,
                actresses: 3.0,
                directors: 1.2,
                writers: 1.5,
                genres: 2.0,
            },
            noise_sigma: 1.0,
            seed: 7,
            weight_density: 0.3,
            cost_density: 1.0,
            signal_roles: Role::ALL.to_vec(),
            teams: None,
            missing_fraction: 0.0,
            ensure_coverage: true,
        }
    }
}

impl SyntheticSpec {
    /// Corpus dimensions of the original crawl: 3,156 movies with budget and
    /// gross, 24 genres, 72,786 actors, 38,951 actresses, 4,576 writers and
    /// 1,682 directors.
    pub fn full_corpus(seed: u64) -> Self {
        Self {
            n_movies: 3156,
            n_actors: 72786,
            n_actresses: 38951,
            n_directors: 1682,
            n_writers: 4576,
            n_genres: 24,
            sparsity: RoleSparsity {
                actors: 4.0,
                actresses: 3.0,
                directors: 1.2,
                writers: 1.5,
                genres: 2.5,
            },
            seed,
            ..Self::default()
        }
    }

    pub fn pool_size(&self, role: Role) -> usize {
        match role {
            Role::Actor => self.n_actors,
            Role::Actress => self.n_actresses,
            Role::Director => self.n_directors,
            Role::Writer => self.n_writers,
            Role::Genre => self.n_genres,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_movies == 0 || Role::ALL.iter().any(|&r| self.pool_size(r) == 0) {
            return Err(Error::InvalidArgument(
                "all synthetic counts must be >= 1".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise_sigma must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.weight_density)
            || !(0.0..=1.0).contains(&self.cost_density)
            || !(0.0..1.0).contains(&self.missing_fraction)
        {
            return Err(Error::InvalidArgument(
                "densities and missing_fraction must be probabilities".into(),
            ));
        }
        if let Some(t) = &self.teams {
            if t.team_size < 2
                || t.team_size
                    > self.n_actors + self.n_actresses + self.n_directors + self.n_writers
            {
                return Err(Error::InvalidArgument("team_size out of range".into()));
            }
        }
        Ok(())
    }
}

fn pool_name(role: Role, i: usize, width: usize, n_genres: usize) -> String {
    if role == Role::Genre && n_genres <= GENRE_NAMES.len() {
        return GENRE_NAMES[i].to_string();
    }
    format!("{}_{:0width$}", role.as_str(), i, width = width)
}

/// A planted recurring crew.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTeam {
    /// Crew as `(role, pool index)`.
    pub members: Vec<(Role, usize)>,
    pub genres: Vec<usize>,
}

/// Generated corpus with the true models that produced its targets.
#[derive(Debug, Clone)]
pub struct SyntheticLibrary {
    pub library: KnowledgeLibrary,
    pub index: FeatureIndex,
    pub true_budget: LinearModel,
    pub true_gross: LinearModel,
    pub teams: Vec<PlantedTeam>,
}

pub fn generate_synthetic_library(spec: &SyntheticSpec) -> Result<SyntheticLibrary> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let names: BTreeMap<Role, Vec<String>> = Role::ALL
        .into_iter()
        .map(|role| {
            let n = spec.pool_size(role);
            let width = n.saturating_sub(1).to_string().len();
            let names = (0..n)
                .map(|i| pool_name(role, i, width, spec.n_genres))
                .collect();
            (role, names)
        })
        .collect();

    let crew_pool: Vec<(Role, usize)> = Role::CREW
        .into_iter()
        .flat_map(|r| (0..spec.pool_size(r)).map(move |i| (r, i)))
        .collect();
    let teams: Vec<PlantedTeam> = match &spec.teams {
        Some(t) => (0..t.n_teams)
            .map(|_| {
                let members = crew_pool
                    .choose_multiple(&mut rng, t.team_size)
                    .copied()
                    .collect();
                let n_genres = rng.random_range(1..=3.min(spec.n_genres));
                let genres = index::sample(&mut rng, spec.n_genres, n_genres).into_vec();
                PlantedTeam { members, genres }
            })
            .collect(),
        None => Vec::new(),
    };

    // Planted weights over pool members.
    let mut true_b: BTreeMap<(Role, usize), f64> = BTreeMap::new();
    let mut true_g: BTreeMap<(Role, usize), f64> = BTreeMap::new();
    for role in Role::ALL {
        let carries = spec.signal_roles.contains(&role);
        for i in 0..spec.pool_size(role) {
            if carries && rng.random_bool(spec.cost_density) {
                true_b.insert((role, i), rng.random_range(1.0..10.0));
            }
            if carries && rng.random_bool(spec.weight_density) {
                true_g.insert((role, i), rng.random_range(2.0..30.0));
            }
        }
    }
    let budget_intercept = 5.0;
    let gross_intercept = 10.0;
    let budget_coef = 1.2;

    // Feature sets per movie, as pool indices per role.
    let mut casts: Vec<BTreeMap<Role, BTreeSet<usize>>> = Vec::with_capacity(spec.n_movies);
    for _ in 0..spec.n_movies {
        let mut cast: BTreeMap<Role, BTreeSet<usize>> = Role::ALL
            .into_iter()
            .map(|r| (r, BTreeSet::new()))
            .collect();
        let team = spec
            .teams
            .filter(|t| !teams.is_empty() && rng.random_bool(t.team_movie_prob))
            .map(|t| (t, &teams[rng.random_range(0..teams.len())]));
        if let Some((t, team)) = team {
            for &(role, i) in &team.members {
                if rng.random_bool(t.member_prob) {
                    cast.get_mut(&role).unwrap().insert(i);
                }
            }
            cast.get_mut(&Role::Genre).unwrap().extend(&team.genres);
        } else {
            for role in Role::ALL {
                let pool = spec.pool_size(role);
                let mean = spec.sparsity.get(role);
                let mut k = if mean > 0.0 {
                    Poisson::new(mean).map_or(0, |d| d.sample(&mut rng) as usize)
                } else {
                    0
                };
                if role == Role::Genre {
                    k = k.max(1);
                }
                let k = k.min(pool);
                cast.get_mut(&role)
                    .unwrap()
                    .extend(index::sample(&mut rng, pool, k));
            }
        }
        if Role::CREW.iter().all(|r| cast[r].is_empty()) {
            let (role, i) = crew_pool[rng.random_range(0..crew_pool.len())];
            cast.get_mut(&role).unwrap().insert(i);
        }
        casts.push(cast);
    }

    if spec.ensure_coverage {
        let mut used: HashSet<(Role, usize)> = HashSet::new();
        for cast in &casts {
            for (&role, set) in cast {
                used.extend(set.iter().map(|&i| (role, i)));
            }
        }
        for role in Role::ALL {
            for i in 0..spec.pool_size(role) {
                if !used.contains(&(role, i)) {
                    let m = rng.random_range(0..casts.len());
                    casts[m].get_mut(&role).unwrap().insert(i);
                }
            }
        }
    }

    let noise = Normal::new(0.0, spec.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let draw_noise = |rng: &mut ChaCha8Rng| {
        if spec.noise_sigma > 0.0 {
            noise.sample(rng)
        } else {
            0.0
        }
    };

    let width = spec.n_movies.saturating_sub(1).to_string().len().max(5);
    let mut records = Vec::with_capacity(spec.n_movies);
    for (m, cast) in casts.iter().enumerate() {
        let mut budget = budget_intercept;
        let mut gross_lin = gross_intercept;
        for (&role, set) in cast {
            for &i in set {
                budget += true_b.get(&(role, i)).copied().unwrap_or(0.0);
                gross_lin += true_g.get(&(role, i)).copied().unwrap_or(0.0);
            }
        }
        let budget = (budget + draw_noise(&mut rng)).max(0.0);
        let gross = (gross_lin + budget_coef * budget + draw_noise(&mut rng)).max(0.0);
        let withheld = spec.missing_fraction > 0.0 && rng.random_bool(spec.missing_fraction);
        let mut record = MovieRecord {
            id: format!("m{:0width$}", m, width = width),
            title: format!("Synthetic Movie {m}"),
            year: 1980 + (m % 40) as i32,
            genres: BTreeSet::new(),
            actors: BTreeSet::new(),
            actresses: BTreeSet::new(),
            writers: BTreeSet::new(),
            directors: BTreeSet::new(),
            budget: Some(budget),
            gross: (!withheld).then_some(gross),
        };
        for (&role, set) in cast {
            record
                .names_mut(role)
                .extend(set.iter().map(|&i| names[&role][i].clone()));
        }
        records.push(record);
    }

    let library = KnowledgeLibrary::from_records(records)?;
    let feature_index = FeatureIndex::build(&library)?;
    let mut wb = vec![0.0; feature_index.len()];
    let mut wg = vec![0.0; feature_index.len() + 1];
    wg[0] = budget_coef;
    for (&(role, i), &w) in &true_b {
        if let Some(p) = feature_index.position(role, &names[&role][i]) {
            wb[p] = w;
        }
    }
    for (&(role, i), &w) in &true_g {
        if let Some(p) = feature_index.position(role, &names[&role][i]) {
            wg[p + 1] = w;
        }
    }
    let blocks = feature_index.block_sizes();
    Ok(SyntheticLibrary {
        library,
        index: feature_index,
        true_budget: LinearModel {
            kind: ModelKind::Budget,
            intercept: budget_intercept,
            weights: wb,
            lambda: 0.0,
            feature_block_sizes: blocks,
        },
        true_gross: LinearModel {
            kind: ModelKind::Gross,
            intercept: gross_intercept,
            weights: wg,
            lambda: 0.0,
            feature_block_sizes: blocks,
        },
        teams,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Team,
    Genre,
}

impl Target {
    fn covers(self, role: Role) -> bool {
        match self {
            Target::Team => role.is_crew(),
            Target::Genre => role == Role::Genre,
        }
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "team" => Ok(Target::Team),
            "genre" => Ok(Target::Genre),
            other => Err(Error::InvalidArgument(format!("unknown target {other:?}"))),
        }
    }
}

/// Confusion counts over candidate pools and the derived scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningMetrics {
    pub accuracy: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ratio: f64,
    pub beta: f64,
    pub target: Target,
    pub method: Method,
    /// Movies planned.
    pub movies: usize,
    /// Movies skipped because their locked features alone exceed the budget.
    pub skipped: usize,
}

/// `(accuracy, f1)` from confusion counts; F1 is 0 when precision and recall
/// are both 0 or undefined.
pub fn confusion_scores(tp: usize, fp: usize, tn: usize, fn_: usize) -> (f64, f64) {
    let total = tp + fp + tn + fn_;
    let accuracy = if total == 0 {
        0.0
    } else {
        (tp + tn) as f64 / total as f64
    };
    // 2PR/(P+R) reduces to 2tp/(2tp+fp+fn); one division keeps it exact.
    let f1 = if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    };
    (accuracy, f1)
}

/// Trained or planted models the protocols plan with.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a> {
    pub budget: &'a LinearModel,
    pub gross: &'a LinearModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningConfig {
    pub target: Target,
    /// Negatives per positive in each candidate pool.
    pub ratio: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub method: Method,
    pub seed: u64,
    /// Evaluate a seeded sample of this many movies instead of all.
    pub max_movies: Option<usize>,
    pub team_cap: Option<usize>,
    /// Plan each movie against the tensor minus its own co-credits.
    pub leave_one_out: bool,
}

impl Default for PlanningConfig {
    fn default() -> Self {
        Self {
            target: Target::Team,
            ratio: 1.0,
            alpha: 1.0,
            beta: planner::DEFAULT_BETA,
            theta: planner::DEFAULT_THETA,
            method: Method::BigMovie,
            seed: 7,
            max_movies: None,
            team_cap: None,
            leave_one_out: true,
        }
    }
}

/// Mask-and-recover evaluation with the configured planning method.
pub fn evaluate_planning(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    models: Models<'_>,
    tensor: &AcquaintanceTensor,
    cfg: &PlanningConfig,
) -> Result<PlanningMetrics> {
    let method = cfg.method;
    evaluate_planning_with(lib, index, models, tensor, cfg, |p| {
        planner::solve(p, method)
    })
}

/// [`evaluate_planning`] with a caller-supplied planner.
///
/// For every movie with a recorded budget and at least one target feature:
/// non-target features are locked to their true values, the candidate pool
/// is the true target features plus `ratio` sampled same-role negatives per
/// positive, and the planner runs with the movie's budget as the cap. With
/// `leave_one_out` the movie's own co-credits are taken out of the tensor
/// first, so acquaintance reflects only other movies.
/// Confusion counts are taken over the candidate pools.
pub fn evaluate_planning_with<F>(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    models: Models<'_>,
    tensor: &AcquaintanceTensor,
    cfg: &PlanningConfig,
    mut run: F,
) -> Result<PlanningMetrics>
where
    F: FnMut(&PlanProblem<'_>) -> Result<PlanResult>,
{
    if !(cfg.ratio > 0.0 && cfg.ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ratio must be positive, got {}",
            cfg.ratio
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut movies: Vec<&MovieRecord> = lib
        .records()
        .iter()
        .filter(|r| r.budget.is_some())
        .collect();
    if let Some(k) = cfg.max_movies {
        movies.shuffle(&mut rng);
        movies.truncate(k);
    }

    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    let (mut planned, mut skipped) = (0, 0);
    for movie in movies {
        let positions = index.positions_of(movie)?;
        let (positives, locked): (Vec<usize>, Vec<usize>) = positions
            .iter()
            .partition(|&&p| cfg.target.covers(index.role_of(p)));
        if positives.is_empty() {
            continue;
        }
        let truth: HashSet<usize> = positions.iter().copied().collect();

        let mut negatives = Vec::new();
        for role in Role::ALL.into_iter().filter(|&r| cfg.target.covers(r)) {
            let n_pos = positives
                .iter()
                .filter(|&&p| index.role_of(p) == role)
                .count();
            let want = (cfg.ratio * n_pos as f64).round() as usize;
            if want == 0 {
                continue;
            }
            let pool: Vec<usize> = index
                .block_range(role)
                .filter(|p| !truth.contains(p))
                .collect();
            negatives.extend(
                pool.choose_multiple(&mut rng, want.min(pool.len()))
                    .copied(),
            );
        }

        // Only entries among the movie's features and negatives can matter.
        let keep: Vec<usize> = positions.iter().chain(&negatives).copied().collect();
        let mut local = tensor.restricted(&keep);
        if cfg.leave_one_out {
            local = local.without_movie(&positions)?;
        }

        let budget_cap = movie.budget.unwrap_or(0.0);
        let problem = PlanProblem::new(models.gross, models.budget, &local, budget_cap)
            .with_weights(cfg.alpha, cfg.beta)
            .with_theta(cfg.theta)
            .with_team_cap(cfg.team_cap)
            .with_locked(locked.iter().copied())
            .with_candidates(positives.iter().chain(&negatives).copied());
        if problem.locked_budget() > budget_cap {
            skipped += 1;
            continue;
        }
        let result = run(&problem)?;
        let selected: HashSet<usize> = result.selected().into_iter().collect();
        for p in &positives {
            if selected.contains(p) {
                tp += 1;
            } else {
                fn_ += 1;
            }
        }
        for p in &negatives {
            if selected.contains(p) {
                fp += 1;
            } else {
                tn += 1;
            }
        }
        planned += 1;
    }

    let (accuracy, f1) = confusion_scores(tp, fp, tn, fn_);
    Ok(PlanningMetrics {
        accuracy,
        f1,
        tp,
        fp,
        tn,
        fn_,
        ratio: cfg.ratio,
        beta: match cfg.method {
            Method::MaxG => 0.0,
            Method::MaxA => 1.0,
            _ => cfg.beta,
        },
        target: cfg.target,
        method: cfg.method,
        movies: planned,
        skipped,
    })
}

pub const DEFAULT_BETAS: [f64; 7] = [0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

/// Evaluates BigMovie at every beta (alpha = 1), then MaxG, MaxA and Greedy
/// once each. Rows come back in that order.
pub fn beta_sweep(
    lib: &KnowledgeLibrary,
    index: &FeatureIndex,
    models: Models<'_>,
    tensor: &AcquaintanceTensor,
    betas: &[f64],
    base: &PlanningConfig,
) -> Result<Vec<PlanningMetrics>> {
    if betas.is_empty() {
        return Err(Error::InvalidArgument("empty beta list".into()));
    }
    let mut rows = Vec::with_capacity(betas.len() + 3);
    for &beta in betas {
        let cfg = PlanningConfig {
            alpha: 1.0,
            beta,
            method: Method::BigMovie,
            ..base.clone()
        };
        rows.push(evaluate_planning(lib, index, models, tensor, &cfg)?);
    }
    for method in [Method::MaxG, Method::MaxA, Method::Greedy] {
        let cfg = PlanningConfig {
            method,
            ..base.clone()
        };
        rows.push(evaluate_planning(lib, index, models, tensor, &cfg)?);
    }
    Ok(rows)
}

/// Aligned-column text table of metrics rows.
pub fn metrics_table(rows: &[PlanningMetrics]) -> String {
    let header = [
        "method", "target", "beta", "ratio", "accuracy", "f1", "tp", "fp", "tn", "fn", "movies",
    ];
    let body: Vec<[String; 11]> = rows
        .iter()
        .map(|r| {
            [
                r.method.to_string(),
                format!("{:?}", r.target).to_lowercase(),
                format!("{:e}", r.beta),
                format!("{}", r.ratio),
                format!("{:.4}", r.accuracy),
                format!("{:.4}", r.f1),
                r.tp.to_string(),
                r.fp.to_string(),
                r.tn.to_string(),
                r.fn_.to_string(),
                r.movies.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in &body {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyConfig {
    pub movie_id: String,
    /// Other movies removed alongside the target, e.g. sequels.
    pub sequels: Vec<String>,
    /// Genres to lock; defaults to the movie's own genres.
    pub locked_genres: Option<Vec<String>>,
    /// `role:name` keys forced out of the plan.
    pub excluded: Vec<String>,
    pub n_candidates: usize,
    pub team_cap: Option<usize>,
    /// Defaults to the movie's recorded budget.
    pub budget: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub method: Method,
    pub seed: u64,
    pub fit: FitConfig,
}

impl CaseStudyConfig {
    pub fn new(movie_id: impl Into<String>) -> Self {
        Self {
            movie_id: movie_id.into(),
            sequels: Vec::new(),
            locked_genres: None,
            excluded: Vec::new(),
            n_candidates: 250,
            team_cap: Some(20),
            budget: None,
            alpha: 1.0,
            beta: planner::DEFAULT_BETA,
            theta: planner::DEFAULT_THETA,
            method: Method::BigMovie,
            seed: 7,
            fit: FitConfig::default(),
        }
    }
}

/// Evidence that the held-out movies contributed nothing to the models or
/// the tensor used for planning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageCheck {
    pub removed_ids: Vec<String>,
    pub training_rows: usize,
    pub full_training_rows: usize,
    pub removed_training_rows: usize,
    pub tensor_mass_full: u64,
    pub tensor_mass_planning: u64,
    /// Tensor mass the removed movies would add.
    pub removed_mass: u64,
}

impl LeakageCheck {
    pub fn is_clean(&self) -> bool {
        self.training_rows + self.removed_training_rows == self.full_training_rows
            && self.tensor_mass_planning + self.removed_mass == self.tensor_mass_full
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collaboration {
    pub partner: String,
    pub genre: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub feature: String,
    pub gross_weight: f64,
    pub budget_weight: f64,
    pub in_actual: bool,
    /// Strongest co-credits with other selected crew in selected genres.
    pub top_collaborations: Vec<Collaboration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub movie_id: String,
    pub title: String,
    pub actual_gross: Option<f64>,
    pub actual_budget: Option<f64>,
    pub plan: PlanReport,
    pub n_candidates: usize,
    /// Actual crew that the plan selected.
    pub overlap: Vec<String>,
    /// Actual crew the plan left out.
    pub missed: Vec<String>,
    /// Selected crew not in the actual movie.
    pub extra: Vec<String>,
    pub explanations: Vec<Explanation>,
    pub leakage: LeakageCheck,
}

fn pair_mass(movie: &MovieRecord) -> u64 {
    let c = movie.crew_len() as u64;
    c * c.saturating_sub(1) / 2 * movie.genres.len() as u64 * 2
}

/// Re-plans one movie from a library that no longer contains it.
pub fn run_case_study(lib: &KnowledgeLibrary, cfg: &CaseStudyConfig) -> Result<CaseReport> {
    let target = lib
        .get(&cfg.movie_id)
        .ok_or_else(|| Error::UnknownMovie(cfg.movie_id.clone()))?;
    let mut removed: Vec<&str> = vec![target.id.as_str()];
    for s in &cfg.sequels {
        if lib.get(s).is_none() {
            return Err(Error::UnknownMovie(s.clone()));
        }
        if !removed.contains(&s.as_str()) {
            removed.push(s);
        }
    }
    let removed_set: HashSet<&str> = removed.iter().copied().collect();

    let index = FeatureIndex::build(lib)?;
    let planning_lib = lib.without(&removed_set);
    if planning_lib.trainable().count() < 2 {
        return Err(Error::InsufficientData(
            "fewer than 2 trainable movies remain after removal".into(),
        ));
    }
    let budget_model = regress::train_budget_model(&planning_lib, &index, &cfg.fit)?;
    let gross_model = regress::train_gross_model(&planning_lib, &index, &cfg.fit)?;
    let tensor = AcquaintanceTensor::build(&planning_lib, &index)?;
    let full_tensor_mass = AcquaintanceTensor::build(lib, &index)?.total_mass();

    let removed_records: Vec<&MovieRecord> = removed.iter().filter_map(|id| lib.get(id)).collect();
    let leakage = LeakageCheck {
        removed_ids: removed.iter().map(|s| s.to_string()).collect(),
        training_rows: planning_lib.trainable().count(),
        full_training_rows: lib.trainable().count(),
        removed_training_rows: removed_records.iter().filter(|r| r.is_trainable()).count(),
        tensor_mass_full: full_tensor_mass,
        tensor_mass_planning: tensor.total_mass(),
        removed_mass: removed_records.iter().map(|r| pair_mass(r)).sum(),
    };

    let true_positions = index.positions_of(target)?;
    let true_crew: Vec<usize> = true_positions
        .iter()
        .copied()
        .filter(|&p| p < index.crew_len())
        .collect();
    if cfg.n_candidates > index.crew_len() {
        return Err(Error::InvalidArgument(format!(
            "{} candidates requested but only {} crew features exist",
            cfg.n_candidates,
            index.crew_len()
        )));
    }

    let excluded: BTreeSet<usize> = cfg
        .excluded
        .iter()
        .map(|k| index.resolve(k))
        .collect::<Result<_>>()?;
    let genre_names: Vec<String> = match &cfg.locked_genres {
        Some(g) => g.clone(),
        None => target.genres.iter().cloned().collect(),
    };
    let locked: BTreeSet<usize> = genre_names
        .iter()
        .map(|g| {
            index
                .position(Role::Genre, g)
                .ok_or_else(|| Error::UnknownFeature {
                    role: Role::Genre,
                    name: g.clone(),
                })
        })
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let true_set: HashSet<usize> = true_crew.iter().copied().collect();
    let others: Vec<usize> = index
        .crew_range()
        .filter(|p| !true_set.contains(p))
        .collect();
    let extra_needed = cfg.n_candidates.saturating_sub(true_crew.len());
    let mut candidates: BTreeSet<usize> = true_crew.iter().copied().collect();
    candidates.extend(others.choose_multiple(&mut rng, extra_needed.min(others.len())));

    let budget_cap = match cfg.budget.or(target.budget) {
        Some(b) => b,
        None => {
            return Err(Error::InvalidArgument(format!(
                "movie {} has no recorded budget; pass one explicitly",
                target.id
            )))
        }
    };
    let problem = PlanProblem::new(&gross_model, &budget_model, &tensor, budget_cap)
        .with_weights(cfg.alpha, cfg.beta)
        .with_theta(cfg.theta)
        .with_team_cap(cfg.team_cap)
        .with_locked(locked.iter().copied())
        .with_excluded(excluded.iter().copied())
        .with_candidates(candidates.iter().copied());
    let result = planner::solve(&problem, cfg.method)?;
    let report = PlanReport::new(&result, &problem, &index);

    let selected = result.selected();
    let selected_set: HashSet<usize> = selected.iter().copied().collect();
    let key = |p: usize| index.feature(p).to_string();
    let overlap = true_crew
        .iter()
        .filter(|p| selected_set.contains(p))
        .map(|&p| key(p))
        .collect();
    let missed = true_crew
        .iter()
        .filter(|p| !selected_set.contains(p))
        .map(|&p| key(p))
        .collect();
    let selected_crew: Vec<usize> = selected
        .iter()
        .copied()
        .filter(|&p| p < index.crew_len())
        .collect();
    let extra = selected_crew
        .iter()
        .filter(|p| !true_set.contains(p))
        .map(|&p| key(p))
        .collect();

    let genre_start = index.genre_range().start;
    let gw = gross_model.feature_weights();
    let explanations = selected_crew
        .iter()
        .map(|&p| {
            let mut collabs: Vec<Collaboration> = tensor
                .partners(p)
                .filter(|&(q, l, _)| {
                    selected_set.contains(&q) && selected_set.contains(&(genre_start + l))
                })
                .map(|(q, l, count)| Collaboration {
                    partner: key(q),
                    genre: index.feature(genre_start + l).name.clone(),
                    count,
                })
                .collect();
            collabs.sort_by(|a, b| {
                b.count
                    .cmp(&a.count)
                    .then_with(|| a.partner.cmp(&b.partner))
            });
            collabs.truncate(3);
            Explanation {
                feature: key(p),
                gross_weight: gw[p],
                budget_weight: budget_model.weights[p],
                in_actual: true_set.contains(&p),
                top_collaborations: collabs,
            }
        })
        .collect();

    Ok(CaseReport {
        movie_id: target.id.clone(),
        title: target.title.clone(),
        actual_gross: target.gross,
        actual_budget: target.budget,
        plan: report,
        n_candidates: candidates.len(),
        overlap,
        missed,
        extra,
        explanations,
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_movies: 60,
            n_actors: 20,
            n_actresses: 10,
            n_directors: 6,
            n_writers: 8,
            n_genres: 5,
            seed,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic_library(&small_spec(3)).unwrap();
        let b = generate_synthetic_library(&small_spec(3)).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.library.write_jsonl(&mut ba).unwrap();
        b.library.write_jsonl(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let c = generate_synthetic_library(&small_spec(4)).unwrap();
        let mut bc = Vec::new();
        c.library.write_jsonl(&mut bc).unwrap();
        assert_ne!(ba, bc);
    }

    #[test]
    fn coverage_fills_every_block() {
        let s = generate_synthetic_library(&small_spec(1)).unwrap();
        assert_eq!(s.index.block_sizes(), [20, 10, 6, 8, 5]);
        s.true_budget.validate().unwrap();
        s.true_gross.validate().unwrap();
    }

    #[test]
    fn noiseless_targets_follow_planted_models() {
        let spec = SyntheticSpec {
            noise_sigma: 0.0,
            ..small_spec(2)
        };
        let s = generate_synthetic_library(&spec).unwrap();
        for r in s.library.records() {
            let pos = s.index.positions_of(r).unwrap();
            let b = r.budget.unwrap();
            assert!((s.true_budget.predict_positions(&pos, 0.0) - b).abs() < 1e-9);
            assert!((s.true_gross.predict_positions(&pos, b) - r.gross.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_specs() {
        let mut s = small_spec(1);
        s.n_genres = 0;
        assert!(generate_synthetic_library(&s).is_err());
        let mut s = small_spec(1);
        s.noise_sigma = -1.0;
        assert!(generate_synthetic_library(&s).is_err());
    }

    #[test]
    fn confusion_arithmetic() {
        let (acc, f1) = confusion_scores(3, 1, 5, 1);
        assert!((acc - 0.8).abs() < 1e-15);
        assert!((f1 - 0.75).abs() < 1e-15);
        assert_eq!(confusion_scores(0, 0, 4, 4), (0.5, 0.0));
        assert_eq!(confusion_scores(4, 0, 4, 0), (1.0, 1.0));
        assert_eq!(confusion_scores(0, 0, 0, 0), (0.0, 0.0));
    }

    #[test]
    fn metrics_table_is_aligned() {
        let row = PlanningMetrics {
            accuracy: 0.8,
            f1: 0.75,
            tp: 3,
            fp: 1,
            tn: 5,
            fn_: 1,
            ratio: 1.0,
            beta: 1e-4,
            target: Target::Team,
            method: Method::BigMovie,
            movies: 1,
            skipped: 0,
        };
        let table = metrics_table(&[
            row.clone(),
            PlanningMetrics {
                method: Method::MaxG,
                ..row
            },
        ]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("  method") || lines[0].starts_with("method"));
        assert_eq!(lines[1].len(), lines[2].len());
    }

    #[test]
    fn pair_mass_matches_tensor() {
        let s = generate_synthetic_library(&small_spec(5)).unwrap();
        let t = AcquaintanceTensor::build(&s.library, &s.index).unwrap();
        let expected: u64 = s.library.records().iter().map(pair_mass).sum();
        assert_eq!(t.total_mass(), expected);
    }
}
