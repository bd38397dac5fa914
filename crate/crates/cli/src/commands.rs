use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use sportrank::calibration::{
    empirical_curve_with_width, fit_full, fit_shape, fit_simplified, select_model, DEFAULT_BIN_WIDTH,
    DEFAULT_MIN_GAMES_PER_BIN,
};
use sportrank::dataio::{
    fitness_sidecar_path, load_fitness_csv, load_results_csv, load_seasons_with_report, sniff_results_csv,
    write_fitness_csv, write_results_csv, InputFormat, SeasonData,
};
use sportrank::experiments::{
    run_perturbation_study, run_real_eval, run_sweep, write_real_eval_csv, RealEvalOptions, SweepSpec,
    DEFAULT_LAST_K_SEASONS,
};
use sportrank::metrics::DEFAULT_TOP_K;
use sportrank::rankers::{score, DEFAULT_TELEPORT_ALPHA};
use sportrank::{simulate_season, Error, GroundTruth, LeagueConfig, Method, Metric, PerturbMode, ResultSet, ScoreVector};

#[derive(Debug, Parser)]
#[command(name = "sportrank", version, about = "Rank sports teams and benchmark ranking algorithms on model data")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one season and write its results plus a fitness sidecar.
    Generate(GenerateArgs),
    /// Score teams from a result file.
    Rank(RankArgs),
    /// Compare scores with a ground truth.
    Evaluate(EvaluateArgs),
    /// Fit the outcome model to each season of a result file.
    Calibrate(CalibrateArgs),
    /// Run a Monte Carlo sweep described by a TOML file.
    Sweep(SweepArgs),
    /// Run a sweep that removes or reverts a fraction of upsets.
    Perturb(PerturbArgs),
    /// Rank truncated real seasons against their final win ratios.
    RealEval(RealEvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

pub enum Failure {
    /// Bad flag values; exit status 2.
    Usage(String),
    /// IO, parse or computation failure; exit status 1.
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 30)]
    teams: usize,
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    home_adv: f64,
    /// Fraction of all pairings played.
    #[arg(long, default_value_t = 1.0)]
    frac: f64,
    #[arg(long, default_value_t = 1.0)]
    shape_alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    shape_beta: f64,
    #[arg(long)]
    seed: u64,
    /// Result CSV; the fitness is written to `<stem>.fitness.csv` beside it.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Result CSV (`order,home,away,home_won`).
    #[arg(long, short)]
    input: PathBuf,
    /// Ranking methods, comma separated.
    #[arg(long = "method", value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    methods: Vec<Method>,
    /// Number of teams, if some never played.
    #[arg(long)]
    teams: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TELEPORT_ALPHA)]
    teleport_alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Score CSV written by `rank` (`team,<method>...`).
    #[arg(long, conflicts_with = "results", required_unless_present = "results")]
    scores: Option<PathBuf>,
    /// Result CSV to rank before evaluating.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Ground-truth CSV (`team,fitness`); defaults to the sidecar of `--results`.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long = "method", value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    methods: Vec<Method>,
    #[arg(long = "metric", value_delimiter = ',', default_values_t = Metric::ALL.to_vec())]
    metrics: Vec<Metric>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = DEFAULT_TELEPORT_ALPHA)]
    teleport_alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Season file (CSV or JSON lines) or a generated result CSV.
    #[arg(long, short)]
    input: PathBuf,
    /// Also fit the full model and select by AIC.
    #[arg(long)]
    full: bool,
    /// Also fit the power-law fitness shape to the final win ratios.
    #[arg(long)]
    shape: bool,
    /// Write the empirical home-win curve to this CSV.
    #[arg(long)]
    curve_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_GAMES_PER_BIN)]
    min_games: usize,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    /// JSON output; stdout if omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// TOML sweep description.
    #[arg(long)]
    spec: PathBuf,
    /// Base seed; overrides `base_seed` in the file.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `realizations` in the file.
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerturbArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Overrides the perturbation mode in the file.
    #[arg(long)]
    mode: Option<PerturbMode>,
}

#[derive(Debug, Args)]
struct RealEvalArgs {
    /// Season files; each file is one league named after its stem.
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    /// Truncation levels, comma separated (default 0.05, 0.10, ..., 1.00).
    #[arg(long = "p", value_delimiter = ',')]
    p_values: Vec<f64>,
    #[arg(long = "method", value_delimiter = ',', default_values_t = vec![Method::WinRatio, Method::BiPageRank])]
    methods: Vec<Method>,
    #[arg(long, default_value_t = DEFAULT_LAST_K_SEASONS)]
    last_k: usize,
    #[arg(long, default_value_t = DEFAULT_TELEPORT_ALPHA)]
    teleport_alpha: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

pub fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Rank(a) => rank(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Sweep(a) => sweep(a, None, false),
        Command::Perturb(a) => sweep(a.sweep, a.mode, true),
        Command::RealEval(a) => real_eval(a),
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn check_teleport(alpha: f64) -> CliResult {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--teleport-alpha must lie in (0, 1), got {alpha}")))
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io { path: path.to_path_buf(), source: e }.into())
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: impl Write, path: Option<&Path>) -> CliResult {
    w.flush().map_err(|e| {
        let path = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
        Failure::from(Error::Io { path, source: e })
    })
}

fn write_json(value: &impl serde::Serialize, path: Option<&Path>) -> CliResult {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w).map_err(|e| Failure::Run(e.to_string()))?;
    finish(w, path)
}

fn generate(a: GenerateArgs) -> CliResult {
    let config = LeagueConfig {
        n_teams: a.teams,
        delta: a.delta,
        home_adv: a.home_adv,
        frac_played: a.frac,
        shape_alpha: a.shape_alpha,
        shape_beta: a.shape_beta,
        seed: a.seed,
    };
    config.validate().map_err(usage)?;
    let (fitness, results) = simulate_season(&config)?;
    let out = create(&a.out)?;
    write_results_csv(&results, out)?;
    let sidecar = fitness_sidecar_path(&a.out);
    write_fitness_csv(&fitness, create(&sidecar)?)?;
    info!("wrote {} games to {} and fitness to {}", results.len(), a.out.display(), sidecar.display());
    Ok(())
}

/// Team count from the flag, else from the fitness sidecar when present.
fn load_results(path: &Path, teams: Option<usize>) -> CliResult<ResultSet> {
    let teams = match teams {
        Some(n) => Some(n),
        None => {
            let sidecar = fitness_sidecar_path(path);
            if sidecar.exists() {
                Some(load_fitness_csv(&sidecar)?.len())
            } else {
                None
            }
        }
    };
    Ok(load_results_csv(path, teams)?)
}

fn rank_all(results: &ResultSet, methods: &[Method], alpha: f64) -> CliResult<Vec<ScoreVector>> {
    methods.iter().map(|&m| score(results, m, alpha).map_err(Failure::from)).collect()
}

fn write_scores(scores: &[ScoreVector], format: Format, path: Option<&Path>) -> CliResult {
    match format {
        Format::Json => write_json(&scores, path),
        Format::Csv => {
            let mut w = output(path)?;
            let mut header = vec!["team".to_string()];
            header.extend(scores.iter().map(|s| s.method.as_str().to_string()));
            writeln!(w, "{}", header.join(",")).map_err(|e| Failure::Run(e.to_string()))?;
            let n = scores.first().map_or(0, ScoreVector::len);
            for team in 0..n {
                let mut row = vec![team.to_string()];
                row.extend(scores.iter().map(|s| s.scores[team].to_string()));
                writeln!(w, "{}", row.join(",")).map_err(|e| Failure::Run(e.to_string()))?;
            }
            finish(w, path)
        }
    }
}

fn rank(a: RankArgs) -> CliResult {
    check_teleport(a.teleport_alpha)?;
    let results = load_results(&a.input, a.teams)?;
    let scores = rank_all(&results, &a.methods, a.teleport_alpha)?;
    write_scores(&scores, a.format, a.out.as_deref())
}

fn read_scores(path: &Path) -> CliResult<Vec<ScoreVector>> {
    let file = File::open(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let parse_err = |line: u64, message: String| Failure::from(Error::Parse { path: path.to_path_buf(), line, message });
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.get(0) != Some("team") || headers.len() < 2 {
        return Err(parse_err(1, "expected header `team,<method>...`".into()));
    }
    let methods: Vec<Method> = headers
        .iter()
        .skip(1)
        .map(|h| h.parse().map_err(|e: Error| parse_err(1, e.to_string())))
        .collect::<CliResult<_>>()?;
    let mut columns = vec![Vec::new(); methods.len()];
    for (i, record) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let team: usize = record.get(0).unwrap_or("").parse().map_err(|_| parse_err(line, "bad team id".into()))?;
        if team != i {
            return Err(parse_err(line, format!("expected team {i}, found {team}")));
        }
        for (c, col) in columns.iter_mut().enumerate() {
            let v: f64 = record
                .get(c + 1)
                .unwrap_or("")
                .parse()
                .map_err(|_| parse_err(line, format!("bad score in column {}", c + 2)))?;
            col.push(v);
        }
    }
    Ok(methods.into_iter().zip(columns).map(|(m, s)| ScoreVector::new(m, s)).collect())
}

fn evaluate(a: EvaluateArgs) -> CliResult {
    check_teleport(a.teleport_alpha)?;
    let truth_path = match (&a.truth, &a.results) {
        (Some(t), _) => t.clone(),
        (None, Some(r)) => fitness_sidecar_path(r),
        (None, None) => return Err(Failure::Usage("--truth is required with --scores".into())),
    };
    let fitness = load_fitness_csv(&truth_path)?;
    let scores = match (&a.scores, &a.results) {
        (Some(s), _) => read_scores(s)?.into_iter().filter(|s| a.methods.contains(&s.method)).collect(),
        (None, Some(r)) => {
            let results = load_results_csv(r, Some(fitness.len()))?;
            rank_all(&results, &a.methods, a.teleport_alpha)?
        }
        (None, None) => unreachable!("clap requires one of --scores and --results"),
    };
    let truth = GroundTruth::from_fitness(&fitness, a.top_k).map_err(usage)?;
    let mut rows = Vec::new();
    for s in &scores {
        for metric in &a.metrics {
            rows.push((s.method, *metric, metric.evaluate(s, &truth)?));
        }
    }
    match a.format {
        Format::Json => {
            let v: Vec<_> =
                rows.iter().map(|(m, k, v)| json!({"algorithm": m, "metric": k, "value": v})).collect();
            write_json(&v, a.out.as_deref())
        }
        Format::Csv => {
            let mut w = output(a.out.as_deref())?;
            let io_err = |e: io::Error| Failure::Run(e.to_string());
            writeln!(w, "algorithm,metric,value").map_err(io_err)?;
            for (m, k, v) in rows {
                writeln!(w, "{m},{k},{v}").map_err(io_err)?;
            }
            finish(w, a.out.as_deref())
        }
    }
}

fn load_any_seasons(path: &Path) -> CliResult<Vec<SeasonData>> {
    if sniff_results_csv(path)? {
        let results = load_results(path, None)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
        return Ok(vec![SeasonData::from_results(name, results)]);
    }
    let (seasons, report) = load_seasons_with_report(path, InputFormat::from_path(path))?;
    if report.draws > 0 {
        info!("{}: dropped {} draws ({:.1}% of rows)", path.display(), report.draws, 100.0 * report.draw_fraction());
    }
    for s in &report.skipped_seasons {
        warn!("{}: season {s} has no decisive games and was skipped", path.display());
    }
    Ok(seasons)
}

fn calibrate(a: CalibrateArgs) -> CliResult {
    if !(a.bin_width > 0.0 && a.bin_width.is_finite()) {
        return Err(Failure::Usage(format!("--bin-width must be positive, got {}", a.bin_width)));
    }
    let seasons = load_any_seasons(&a.input)?;
    let mut entries = Vec::with_capacity(seasons.len());
    let mut curve_rows = Vec::new();
    for s in &seasons {
        let mut entry = json!({"season": s.season, "n_teams": s.results.n_teams(), "n_games": s.results.len()});
        match calibrate_season(s, &a) {
            Ok(fields) => {
                for (k, v) in fields {
                    entry[k] = v;
                }
            }
            Err(e) => {
                warn!("season {}: {e}", s.season);
                entry["error"] = json!(e.to_string());
            }
        }
        entries.push(entry);
        if a.curve_out.is_some() {
            match empirical_curve_with_width(&s.results, a.min_games, a.bin_width) {
                Ok(points) => curve_rows.extend(points.into_iter().map(|p| (s.season.clone(), p))),
                Err(e) => warn!("season {}: no empirical curve: {e}", s.season),
            }
        }
    }
    if let Some(path) = &a.curve_out {
        let mut w = create(path)?;
        let io_err = |e: io::Error| Failure::Run(e.to_string());
        writeln!(w, "season,center,rate,sem,count").map_err(io_err)?;
        for (season, p) in curve_rows {
            writeln!(w, "{},{},{},{},{}", csv_field(&season), p.center, p.rate, p.sem, p.count).map_err(io_err)?;
        }
        finish(w, Some(path))?;
    }
    write_json(&entries, a.out.as_deref())
}

fn calibrate_season(s: &SeasonData, a: &CalibrateArgs) -> Result<Vec<(&'static str, serde_json::Value)>, Error> {
    let simplified = fit_simplified(&s.results)?;
    let mut fields = vec![("simplified", serde_json::to_value(&simplified)?)];
    if a.full {
        let full = fit_full(&s.results)?;
        let selected = select_model(&simplified, &full)?;
        fields.push(("full", serde_json::to_value(&full)?));
        fields.push(("selected", serde_json::to_value(selected)?));
    }
    if a.shape {
        fields.push(("shape", serde_json::to_value(fit_shape(&s.results)?)?));
    }
    Ok(fields)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn sweep(a: SweepArgs, mode: Option<PerturbMode>, perturb: bool) -> CliResult {
    let text = std::fs::read_to_string(&a.spec).map_err(|e| Error::Io { path: a.spec.clone(), source: e })?;
    let mut spec =
        SweepSpec::parse_toml(&text).map_err(|e| Failure::Run(format!("{}: {e}", a.spec.display())))?;
    spec.base_seed = a.seed;
    if let Some(t) = a.threads {
        spec.threads = Some(t);
    }
    if let Some(r) = a.realizations {
        spec.realizations = r;
    }
    if let Some(m) = mode {
        spec.mode = Some(m);
    }
    spec.validate().map_err(usage)?;
    let result = if perturb { run_perturbation_study(&spec)? } else { run_sweep(&spec)? };
    match a.format {
        Format::Json => write_json(&result, a.out.as_deref()),
        Format::Csv => {
            let w = output(a.out.as_deref())?;
            result.write_csv(w)?;
            Ok(())
        }
    }
}

fn real_eval(a: RealEvalArgs) -> CliResult {
    check_teleport(a.teleport_alpha)?;
    let mut options = RealEvalOptions {
        algorithms: a.methods.clone(),
        last_k_seasons: a.last_k,
        teleport_alpha: a.teleport_alpha,
        ..Default::default()
    };
    if !a.p_values.is_empty() {
        options.p_axis = a.p_values.clone();
    }
    if let Some(&p) = options.p_axis.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Failure::Usage(format!("--p values must lie in (0, 1], got {p}")));
    }
    if a.last_k == 0 {
        return Err(Failure::Usage("--last-k must be at least 1".into()));
    }
    let mut results = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let league = path.file_stem().and_then(|s| s.to_str()).unwrap_or("league").to_string();
        let seasons = load_any_seasons(path)?;
        let r = run_real_eval(&league, &seasons, &options).map_err(|e| Failure::Run(format!("{league}: {e}")))?;
        let p_star = r.p_star.map_or_else(|| "none".to_string(), |p| p.to_string());
        eprintln!(
            "{league}: {} seasons, P* = {p_star}, {} skipped cells, {} seasons with tied final win ratios",
            r.seasons_used.len(),
            r.skipped_cells,
            r.tied_seasons.len()
        );
        results.push(r);
    }
    match a.format {
        Format::Json => write_json(&results, a.out.as_deref()),
        Format::Csv => {
            let w = output(a.out.as_deref())?;
            write_real_eval_csv(&results, w)?;
            Ok(())
        }
    }
}
