use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bigmovie_core::harness::{
    beta_sweep, evaluate_planning, generate_synthetic_library, metrics_table, run_case_study,
    CaseStudyConfig, Models, PlanningConfig, SyntheticSpec, Target, TeamSpec, DEFAULT_BETAS,
};
use bigmovie_core::library::{parse_library, FeatureIndex, KnowledgeLibrary};
use bigmovie_core::planner::{solve, Method, PlanProblem, PlanReport, DEFAULT_BETA, DEFAULT_THETA};
use bigmovie_core::regress::{cross_validate, CrossValidation, FeatureGroup, FitConfig, Split};
use bigmovie_core::store::ModelSet;
use bigmovie_core::tensor::AcquaintanceTensor;
use bigmovie_service::{AppState, DEFAULT_CANDIDATE_CAP};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bigmovie", version, about = "Movie configuration planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL library and report rejected lines.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Parse report (JSON); printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the accepted records, normalized, to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the budget and gross models into a models directory.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// 80/20 split plus k-fold cross validation with per-role ablations.
    EvaluateRegression {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count crew co-credits per genre.
    BuildTensor {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan one movie configuration.
    Plan(PlanArgs),
    /// Mask-and-recover accuracy and F1 for one planner setting.
    EvaluatePlanning {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value = "bigmovie")]
        method: Method,
    },
    /// Evaluate a list of beta values plus the MaxG, MaxA and greedy baselines.
    BetaSweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated; defaults to 0,1e-5,...,1.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
    },
    /// Re-plan a movie from a library that no longer contains it.
    CaseStudy(CaseArgs),
    /// Generate a synthetic library with planted models.
    Synth(SynthArgs),
    /// Serve the JSON API.
    Serve {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        lib: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
        candidate_cap: usize,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    budget: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    /// `role:name`, repeatable.
    #[arg(long)]
    lock: Vec<String>,
    /// `role:name`, repeatable.
    #[arg(long)]
    exclude: Vec<String>,
    /// JSON array of `role:name` keys; every feature when omitted.
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    team_cap: Option<usize>,
    #[arg(long, default_value = "bigmovie")]
    method: Method,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    lib: PathBuf,
    #[arg(long)]
    models: PathBuf,
    #[arg(long)]
    tensor: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, default_value = "team")]
    target: Target,
    #[arg(long, default_value_t = 1.0)]
    ratio: f64,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    max_movies: Option<usize>,
    #[arg(long)]
    team_cap: Option<usize>,
    /// Keep each movie's own co-credits in the tensor while planning it.
    #[arg(long)]
    no_leave_one_out: bool,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long)]
    lib: PathBuf,
    #[arg(long)]
    movie: String,
    /// Other movie ids to hold out, repeatable.
    #[arg(long)]
    sequel: Vec<String>,
    /// Genre names to lock, repeatable; defaults to the movie's genres.
    #[arg(long)]
    genre: Vec<String>,
    #[arg(long)]
    exclude: Vec<String>,
    #[arg(long, default_value_t = 250)]
    candidates: usize,
    #[arg(long, default_value_t = 20)]
    team_cap: usize,
    /// Defaults to the movie's recorded budget.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    #[arg(long, default_value_t = DEFAULT_THETA)]
    theta: f64,
    #[arg(long, default_value = "bigmovie")]
    method: Method,
    #[arg(long, default_value_t = 0.1)]
    lambda: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    movies: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Start from the full-corpus pool sizes instead of the small defaults.
    #[arg(long)]
    full_corpus: bool,
    #[arg(long)]
    actors: Option<usize>,
    #[arg(long)]
    actresses: Option<usize>,
    #[arg(long)]
    directors: Option<usize>,
    #[arg(long)]
    writers: Option<usize>,
    #[arg(long)]
    genres: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Plant this many recurring crews.
    #[arg(long)]
    teams: Option<usize>,
    #[arg(long, default_value_t = 8)]
    team_size: usize,
    /// Share of movies made by a planted crew.
    #[arg(long, default_value_t = 0.6)]
    team_movie_prob: f64,
    /// Chance each crew member appears in one of the crew's movies.
    #[arg(long, default_value_t = 0.85)]
    member_prob: f64,
    /// Directory for the planted budget and gross models.
    #[arg(long)]
    truth: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { input, report, out } => ingest(&input, report.as_deref(), out.as_deref()),
        Command::Train {
            input,
            out,
            lambda,
            seed,
        } => train(&input, &out, lambda, seed),
        Command::EvaluateRegression {
            input,
            folds,
            lambda,
            seed,
            out,
        } => evaluate_regression(&input, folds, lambda, seed, out.as_deref()),
        Command::BuildTensor { input, out } => build_tensor(&input, &out),
        Command::Plan(args) => plan(&args),
        Command::EvaluatePlanning {
            data,
            eval,
            beta,
            method,
        } => {
            let (lib, models, tensor) = load_data(&data)?;
            let cfg = PlanningConfig {
                beta,
                method,
                ..planning_config(&eval)
            };
            let m = evaluate_planning(&lib, &models.index, models_of(&models), &tensor, &cfg)?;
            print!("{}", metrics_table(std::slice::from_ref(&m)));
            write_optional(eval.out.as_deref(), &m)
        }
        Command::BetaSweep { data, eval, betas } => {
            let (lib, models, tensor) = load_data(&data)?;
            let betas = betas.unwrap_or_else(|| DEFAULT_BETAS.to_vec());
            let rows = beta_sweep(
                &lib,
                &models.index,
                models_of(&models),
                &tensor,
                &betas,
                &planning_config(&eval),
            )?;
            print!("{}", metrics_table(&rows));
            write_optional(eval.out.as_deref(), &rows)
        }
        Command::CaseStudy(args) => case_study(&args),
        Command::Synth(args) => synth(&args),
        Command::Serve {
            models,
            tensor,
            lib,
            host,
            port,
            candidate_cap,
        } => {
            let state = AppState::load(&models, &tensor, lib.as_deref(), candidate_cap)?;
            let addr = SocketAddr::new(host, port);
            eprintln!("listening on http://{addr}");
            tokio::runtime::Runtime::new()?.block_on(bigmovie_service::serve(state, addr))?;
            Ok(())
        }
    }
}

fn read_library(path: &Path) -> Result<KnowledgeLibrary> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (lib, report) = parse_library(BufReader::new(file))?;
    if !report.rejected.is_empty() {
        eprintln!(
            "{}: skipped {} malformed line(s); run `bigmovie ingest` for details",
            path.display(),
            report.rejected.len()
        );
    }
    Ok(lib)
}

fn read_tensor(path: &Path, index: &FeatureIndex) -> Result<AcquaintanceTensor> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(AcquaintanceTensor::read_for_index(
        BufReader::new(file),
        index,
    )?)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_optional<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => Ok(()),
    }
}

fn models_of(m: &ModelSet) -> Models<'_> {
    Models {
        budget: &m.budget,
        gross: &m.gross,
    }
}

fn load_data(d: &DataArgs) -> Result<(KnowledgeLibrary, ModelSet, AcquaintanceTensor)> {
    let lib = read_library(&d.lib)?;
    let models = ModelSet::load(&d.models)?;
    let tensor = read_tensor(&d.tensor, &models.index)?;
    Ok((lib, models, tensor))
}

fn planning_config(e: &EvalArgs) -> PlanningConfig {
    PlanningConfig {
        target: e.target,
        ratio: e.ratio,
        theta: e.theta,
        seed: e.seed,
        max_movies: e.max_movies,
        team_cap: e.team_cap,
        leave_one_out: !e.no_leave_one_out,
        ..PlanningConfig::default()
    }
}

fn ingest(input: &Path, report_path: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let (lib, report) = parse_library(BufReader::new(file))?;
    eprintln!(
        "accepted {} ({} trainable, {} without budget or gross), rejected {}",
        report.accepted,
        report.trainable(),
        report.flagged,
        report.rejected.len()
    );
    match report_path {
        Some(p) => write_json(p, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    if let Some(p) = out {
        lib.write_jsonl(BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}

fn train(input: &Path, out: &Path, lambda: f64, seed: u64) -> Result<()> {
    let lib = read_library(input)?;
    let set = ModelSet::train(&lib, &FitConfig::with_lambda(lambda), seed)?;
    set.save(out)?;
    let fmt = |m: Option<f64>| m.map_or("n/a".into(), |v| format!("{v:.2}%"));
    eprintln!(
        "trained on {} movies, {} features; training MAPE budget {} gross {}",
        set.metrics.n_trainable,
        set.metrics.n_features,
        fmt(set.metrics.budget_mape),
        fmt(set.metrics.gross_mape)
    );
    Ok(())
}

fn regression_table(cv: &CrossValidation) -> String {
    let mut header = vec!["split".to_string(), "model".to_string()];
    header.extend(FeatureGroup::ALL_GROUPS.iter().map(|g| g.to_string()));
    let mut rows = vec![header];
    for r in cv.reports() {
        let split = match r.split {
            Split::Fold(f) => format!("fold{f}"),
            Split::Test => "test".into(),
        };
        for (name, rep) in [("budget", &r.budget), ("gross", &r.gross)] {
            let mut row = vec![split.clone(), name.to_string()];
            let groups = rep.per_group.as_ref();
            row.extend(FeatureGroup::ALL_GROUPS.iter().map(|g| {
                groups
                    .and_then(|m| m.get(g))
                    .map_or("-".into(), |v| format!("{v:.2}"))
            }));
            rows.push(row);
        }
    }
    align(&rows)
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn evaluate_regression(
    input: &Path,
    folds: usize,
    lambda: f64,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let lib = read_library(input)?;
    let index = FeatureIndex::build(&lib)?;
    let cv = cross_validate(&lib, &index, &FitConfig::with_lambda(lambda), folds, seed)?;
    eprintln!(
        "{} movies used, {} dropped for a zero target; MAPE in percent",
        cv.n_used, cv.n_zero_target
    );
    print!("{}", regression_table(&cv));
    write_optional(out, &cv)
}

fn build_tensor(input: &Path, out: &Path) -> Result<()> {
    let lib = read_library(input)?;
    let index = FeatureIndex::build(&lib)?;
    let tensor = AcquaintanceTensor::build(&lib, &index)?;
    let mut w =
        BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    tensor.write_jsonl(&mut w)?;
    w.flush()?;
    eprintln!(
        "{} stored entries, total mass {}",
        tensor.entries().len(),
        tensor.total_mass()
    );
    Ok(())
}

fn plan(a: &PlanArgs) -> Result<()> {
    let models = ModelSet::load(&a.models)?;
    let tensor = read_tensor(&a.tensor, &models.index)?;
    let resolve = |keys: &[String]| -> Result<Vec<usize>> {
        keys.iter()
            .map(|k| models.index.resolve(k).map_err(Into::into))
            .collect()
    };
    let locked = resolve(&a.lock)?;
    let excluded = resolve(&a.exclude)?;
    let mut p = PlanProblem::new(&models.gross, &models.budget, &tensor, a.budget)
        .with_weights(a.alpha, a.beta)
        .with_theta(a.theta)
        .with_team_cap(a.team_cap)
        .with_locked(locked)
        .with_excluded(excluded);
    if let Some(path) = &a.candidates {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let keys: Vec<String> = serde_json::from_str(&text).with_context(|| {
            format!(
                "{}: expected a JSON array of role:name keys",
                path.display()
            )
        })?;
        p = p.with_candidates(resolve(&keys)?);
    }
    let result = solve(&p, a.method)?;
    let report = PlanReport::new(&result, &p, &models.index);
    eprintln!(
        "{}: est_gross {:.3} est_budget {:.3} acquaintance {} objective {:.6}",
        result.method, report.est_gross, report.est_budget, report.acquaintance, report.objective
    );
    match &a.out {
        Some(path) => write_json(path, &report),
        None => {
            serde_json::to_writer_pretty(io::stdout().lock(), &report)?;
            println!();
            Ok(())
        }
    }
}

fn case_study(a: &CaseArgs) -> Result<()> {
    let lib = read_library(&a.lib)?;
    let cfg = CaseStudyConfig {
        sequels: a.sequel.clone(),
        locked_genres: (!a.genre.is_empty()).then(|| a.genre.clone()),
        excluded: a.exclude.clone(),
        n_candidates: a.candidates,
        team_cap: Some(a.team_cap),
        budget: a.budget,
        alpha: a.alpha,
        beta: a.beta,
        theta: a.theta,
        method: a.method,
        seed: a.seed,
        fit: FitConfig::with_lambda(a.lambda),
        ..CaseStudyConfig::new(a.movie.clone())
    };
    let report = run_case_study(&lib, &cfg)?;
    let mut rows = vec![vec![
        "feature".into(),
        "gross_w".into(),
        "budget_w".into(),
        "actual".into(),
    ]];
    for e in &report.explanations {
        rows.push(vec![
            e.feature.clone(),
            format!("{:.3}", e.gross_weight),
            format!("{:.3}", e.budget_weight),
            if e.in_actual { "yes" } else { "" }.into(),
        ]);
    }
    println!(
        "{} ({}): est_gross {:.3} vs actual {}, overlap {} / {}",
        report.movie_id,
        report.title,
        report.plan.est_gross,
        report
            .actual_gross
            .map_or("n/a".into(), |g| format!("{g:.3}")),
        report.overlap.len(),
        report.overlap.len() + report.missed.len()
    );
    print!("{}", align(&rows));
    if !report.leakage.is_clean() {
        bail!(
            "held-out movies leaked into training data: {:?}",
            report.leakage
        );
    }
    write_optional(a.out.as_deref(), &report)
}

fn synth(a: &SynthArgs) -> Result<()> {
    let mut spec = if a.full_corpus {
        SyntheticSpec::full_corpus(a.seed)
    } else {
        SyntheticSpec {
            seed: a.seed,
            ..SyntheticSpec::default()
        }
    };
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut spec.n_movies, a.movies);
    set(&mut spec.n_actors, a.actors);
    set(&mut spec.n_actresses, a.actresses);
    set(&mut spec.n_directors, a.directors);
    set(&mut spec.n_writers, a.writers);
    set(&mut spec.n_genres, a.genres);
    if let Some(n) = a.noise {
        spec.noise_sigma = n;
    }
    if let Some(n) = a.teams {
        spec.teams = Some(TeamSpec {
            n_teams: n,
            team_size: a.team_size,
            team_movie_prob: a.team_movie_prob,
            member_prob: a.member_prob,
        });
    }
    let s = generate_synthetic_library(&spec)?;
    let mut w = BufWriter::new(
        File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?,
    );
    s.library.write_jsonl(&mut w)?;
    w.flush()?;
    if let Some(dir) = &a.truth {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("budget.json"), &s.true_budget)?;
        write_json(&dir.join("gross.json"), &s.true_gross)?;
        write_json(&dir.join("spec.json"), &spec)?;
    }
    eprintln!("{} movies, {} features", s.library.len(), s.index.len());
    Ok(())
}
