use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use glba::baselines::{dawid_skene_fit, duration_rank, CategoricalTable, DawidSkeneModel};
use glba::glba::{fit, FitConfig, GammaSetting, ModelParams};
use glba::ingest::{
    build_multigraph, variance_ratio, write_responses, Dimension, ResponseTable, Schema,
    DEFAULT_DELTA, DEFAULT_MIN_RATERS,
};
use glba::io::{self as text, SubjectRow};
use glba::scoring::{
    default_thresholds, extreme_subset, flag_confidently_unreliable, image_scores, overhead_curve,
    precision_recall, rank_subjects, Direction, FilterBasis,
};
use glba::simulate::{
    inject_spammers, sample_multigraph, sample_ratings, spread_indices, GenerativeSpec,
    InjectionSpec, RatingSpec,
};

/// Reliability and regularity estimation for crowdsourced affective ratings
#[derive(Parser, Debug)]
#[command(name = "glba", version, about, long_about = None)]
#[command(after_help = "EXAMPLES:\n  \
    glba --out run build-graph --responses ratings.csv\n  \
    glba --out run fit --graph run/graph.tsv\n  \
    glba --out run rank --fits run/fit_gamma_*.tsv\n  \
    glba --out run pr --ranking run/ranking.tsv --annotated spammers.txt")]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// `key = value` file; explicit flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for simulation and injection (recorded in every manifest)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// valence, arousal, dominance or likeness [default: valence]
    #[arg(long, global = true)]
    dimension: Option<String>,

    /// Percentile-gap threshold for agreement [default: 0.2]
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Fit at a single chance-agreement rate
    #[arg(long, global = true, conflicts_with = "gamma_grid")]
    gamma: Option<f64>,

    /// Fit over `lo:hi:count` evenly spaced rates [default: 0.3:0.48:10]
    #[arg(long, global = true)]
    gamma_grid: Option<String>,

    /// Tasks with fewer raters are dropped [default: 4]
    #[arg(long, global = true)]
    min_raters: Option<usize>,

    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the agreement multigraph of one dimension
    BuildGraph {
        #[arg(long)]
        responses: PathBuf,
    },
    /// Fit the model once per gamma
    Fit {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Average tau over fits and rank subjects
    Rank {
        #[arg(long, num_args = 1.., required = true)]
        fits: Vec<PathBuf>,
    },
    /// Confidence-weighted stimulus scores
    Images {
        #[arg(long)]
        responses: PathBuf,
        /// Ranking table whose score column holds tau
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long, default_value = "high")]
        direction: String,
        /// Also write tasks at or beyond this scale value with confidence above --conf-min
        #[arg(long)]
        score_min: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        conf_min: f64,
    },
    /// Labels removed as a filtering threshold rises
    #[command(group(ArgGroup::new("basis").required(true).args(["ranking", "images"])))]
    Overhead {
        #[arg(long)]
        responses: PathBuf,
        /// Filter subjects by tau
        #[arg(long)]
        ranking: Option<PathBuf>,
        /// Filter tasks by confidence
        #[arg(long)]
        images: Option<PathBuf>,
        /// Comma-separated thresholds [default: 0 to 1 by 0.05]
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
    },
    /// Precision and recall of a ranking against annotated spammers
    Pr {
        #[arg(long)]
        ranking: PathBuf,
        /// One subject id per line
        #[arg(long)]
        annotated: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "20,40,60")]
        top: Vec<usize>,
    },
    /// Subjects with tightly estimated regularity and low tau
    Flag {
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        var_max: f64,
        /// Percentile of tau_mean, 0 to 100
        #[arg(long)]
        tau_pct: f64,
    },
    /// Dawid-Skene ranking on thresholded labels
    BaselineDs {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long, default_value_t = glba::baselines::DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Ranking by mean response time
    BaselineTime {
        #[arg(long)]
        responses: PathBuf,
    },
    /// Generate synthetic data
    Simulate {
        #[command(subcommand)]
        kind: Simulate,
    },
    /// Add population-mimicking spammers to a response table
    Inject {
        #[arg(long)]
        responses: PathBuf,
        #[arg(long, default_value_t = 10)]
        spammers: usize,
        #[arg(long, default_value_t = 50)]
        tasks_per_spammer: usize,
    },
    /// Within-task to pooled rating variance ratio
    Variance {
        #[arg(long)]
        responses: PathBuf,
    },
    /// Check the input digests recorded in a run manifest
    VerifyManifest { manifest: PathBuf },
}

#[derive(Args, Debug)]
struct Population {
    #[arg(long, default_value_t = 200)]
    subjects: usize,
    #[arg(long, default_value_t = 2000)]
    tasks: usize,
    /// `k` or `lo:hi`
    #[arg(long, default_value = "5")]
    raters: String,
    /// Planted subjects with tau = 0, spread evenly over the ids
    #[arg(long, default_value_t = 20)]
    spammers: usize,
    /// Reliability of everyone else
    #[arg(long, default_value_t = 0.9)]
    tau: f64,
}

#[derive(Subcommand, Debug)]
enum Simulate {
    /// Multigraph from the generative model, plus the ground truth
    Graph {
        #[command(flatten)]
        population: Population,
        #[arg(long, default_value_t = 7.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3.0)]
        beta: f64,
        #[arg(long, default_value_t = 0.37)]
        true_gamma: f64,
    },
    /// Integer rating table with planted random raters
    Ratings {
        #[command(flatten)]
        population: Population,
        #[arg(long, default_value_t = 2.0)]
        latent_sd: f64,
        #[arg(long, default_value_t = 0.7)]
        noise_sd: f64,
    },
}

/// Flags merged with the config file and defaults.
struct Settings {
    seed: u64,
    dimension: Dimension,
    delta: f64,
    min_raters: usize,
    fit: FitConfig<f64>,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    glba::Error::Invalid(msg.into()).into()
}

fn resolve(global: &Global) -> Result<Settings> {
    let mut fit = FitConfig::<f64>::default();
    let mut pairs = BTreeMap::new();
    if let Some(path) = &global.config {
        let body =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        pairs = text::parse_key_values(&body).with_context(|| format!("in {}", path.display()))?;
        text::apply_fit_config(&mut fit, &mut pairs)
            .with_context(|| format!("in {}", path.display()))?;
    }
    let mut take = |key: &str| pairs.remove(key).map(|(_, v)| v);
    let dimension = match global.dimension.clone().or_else(|| take("dimension")) {
        Some(d) => d.parse()?,
        None => Dimension::Valence,
    };
    let delta = match (global.delta, take("delta")) {
        (Some(d), _) => d,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| invalid(format!("delta `{s}` is not a number")))?,
        (None, None) => DEFAULT_DELTA,
    };
    let min_raters = match (global.min_raters, take("min_raters")) {
        (Some(m), _) => m,
        (None, Some(s)) => s
            .parse()
            .map_err(|_| invalid(format!("min_raters `{s}` is not a count")))?,
        (None, None) => DEFAULT_MIN_RATERS,
    };
    if let Some(key) = pairs.keys().next() {
        return Err(invalid(format!("unknown config key `{key}`")));
    }
    if let Some(g) = global.gamma {
        fit.gamma = GammaSetting::Fixed(g);
    }
    if let Some(grid) = &global.gamma_grid {
        fit.gamma = GammaSetting::Grid(text::parse_gamma_grid(grid)?);
    }
    if let Some(seed) = global.seed {
        fit.seed = seed;
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("--delta must lie in (0, 1), got {delta}")));
    }
    if min_raters < 2 {
        return Err(invalid("--min-raters must be at least 2"));
    }
    fit.validate()?;
    Ok(Settings {
        seed: fit.seed,
        dimension,
        delta,
        min_raters,
        fit,
    })
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects inputs and outputs of one command and writes its manifest.
struct Run<'a> {
    out: &'a Path,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(String, String)>,
}

impl<'a> Run<'a> {
    fn new(out: &'a Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let body =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs
            .push((path.to_path_buf(), digest(body.as_bytes())));
        Ok(body)
    }

    fn responses(&mut self, path: &Path) -> Result<ResponseTable> {
        let body = self.read(path)?;
        glba::ingest::read_responses(body.as_bytes(), &Schema::default())
            .with_context(|| format!("loading {}", path.display()))
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.outputs
            .push((name.to_string(), digest(body.as_bytes())));
        Ok(())
    }

    fn finish(self, command: &str, settings: &Settings) -> Result<()> {
        let mut m = String::from("# glba run manifest\n");
        m += &format!(
            "command = {command}\nversion = {}\n",
            env!("CARGO_PKG_VERSION")
        );
        m += &format!(
            "dimension = {}\ndelta = {}\nmin_raters = {}\n",
            settings.dimension, settings.delta, settings.min_raters
        );
        m += &text::format_fit_config(&settings.fit);
        for (path, sha) in &self.inputs {
            m += &format!("input {sha} {}\n", path.display());
        }
        for (name, sha) in &self.outputs {
            m += &format!("output {sha} {name}\n");
        }
        let path = self.out.join(format!("manifest_{command}.txt"));
        fs::write(&path, m).with_context(|| format!("writing {}", path.display()))
    }
}

fn gamma_tag(g: f64) -> String {
    format!("{g:.4}")
}

fn read_ranking(run: &mut Run, path: &Path) -> Result<Vec<SubjectRow>> {
    let body = run.read(path)?;
    let mut rows =
        text::parse_subject_table(&body).with_context(|| format!("in {}", path.display()))?;
    rows.sort_by_key(|r| r.rank);
    Ok(rows)
}

fn parse_raters(spec: &str) -> Result<(usize, usize)> {
    let bad = || invalid(format!("--raters `{spec}` is not `k` or `lo:hi`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match nums[..] {
        [k] => Ok((k, k)),
        [lo, hi] => Ok((lo, hi)),
        _ => Err(bad()),
    }
}

fn planted_tau(p: &Population) -> Vec<f64> {
    let mut tau = vec![p.tau; p.subjects];
    for i in spread_indices(p.subjects, p.spammers) {
        tau[i] = 0.0;
    }
    tau
}

fn csv_text(table: &ResponseTable) -> Result<String> {
    let mut buf = Vec::new();
    write_responses(table, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn ds_rows(model: &DawidSkeneModel<f64>) -> Vec<SubjectRow> {
    SubjectRow::from_scores("dawid-skene", &model.spammer_ranking())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::VerifyManifest { manifest } = &cli.command {
        return verify_manifest(manifest);
    }
    let settings = resolve(&cli.global)?;
    let dim = settings.dimension;
    let mut run = Run::new(&cli.global.out)?;
    let name = match cli.command {
        Command::BuildGraph { responses } => {
            let table = run.responses(&responses)?;
            let graph = build_multigraph(&table, dim, settings.delta, settings.min_raters)?;
            run.write("graph.tsv", &text::format_multigraph(&graph)?)?;
            println!(
                "{} tasks, {} subjects, {} edges ({} tasks dropped with fewer than {} raters)",
                graph.n(),
                graph.m(),
                graph.edge_count(),
                graph.dropped_tasks(),
                settings.min_raters
            );
            "build-graph"
        }
        Command::Fit { graph } => {
            let body = run.read(&graph)?;
            let g =
                text::parse_multigraph(&body).with_context(|| format!("in {}", graph.display()))?;
            for report in fit(&g, &settings.fit)? {
                let tag = gamma_tag(report.params.gamma);
                run.write(
                    &format!("fit_gamma_{tag}.tsv"),
                    &text::format_fit_report(&report)?,
                )?;
                run.write(
                    &format!("trace_gamma_{tag}.tsv"),
                    &text::format_trace(&report),
                )?;
                println!(
                    "gamma {tag}: {} iterations over {} rounds, converged {}",
                    report.iterations,
                    report.round_starts.len(),
                    report.converged
                );
                if !report.fallback_subjects.is_empty() {
                    eprintln!(
                        "warning: gamma {tag}: {} subjects needed the bisection fallback",
                        report.fallback_subjects.len()
                    );
                }
            }
            "fit"
        }
        Command::Rank { fits } => {
            let mut reports = Vec::with_capacity(fits.len());
            for path in &fits {
                let body = run.read(path)?;
                reports.push(
                    text::parse_fit_report::<f64>(&body)
                        .with_context(|| format!("in {}", path.display()))?,
                );
            }
            let ranked = rank_subjects(&reports)?;
            let rows: Vec<SubjectRow> = ranked
                .iter()
                .map(|r| SubjectRow::from_report("glba", r))
                .collect();
            run.write("ranking.tsv", &text::format_subject_table(&rows)?)?;
            println!("ranked {} subjects over {} fits", rows.len(), reports.len());
            "rank"
        }
        Command::Images {
            responses,
            ranking,
            direction,
            score_min,
            conf_min,
        } => {
            let direction: Direction = direction.parse()?;
            let table = run.responses(&responses)?;
            let tau: HashMap<String, f64> = read_ranking(&mut run, &ranking)?
                .into_iter()
                .map(|r| (r.subject_id, r.score))
                .collect();
            let reports = image_scores(&table, dim, &tau, direction, settings.min_raters)?;
            run.write(
                &format!("images_{direction}.tsv"),
                &text::format_image_table(&reports)?,
            )?;
            println!("scored {} tasks", reports.len());
            if let Some(min) = score_min {
                let subset = extreme_subset(&reports, min, conf_min);
                let mut body = String::new();
                for id in &subset {
                    body += id;
                    body.push('\n');
                }
                run.write(&format!("extreme_{direction}.txt"), &body)?;
                println!(
                    "{} tasks pass score {min} with confidence above {conf_min}",
                    subset.len()
                );
            }
            "images"
        }
        Command::Overhead {
            responses,
            ranking,
            images,
            thresholds,
        } => {
            let table = run.responses(&responses)?;
            let grid = thresholds.unwrap_or_else(default_thresholds);
            let (curve, file) = if let Some(path) = ranking {
                let reports: Vec<_> = read_ranking(&mut run, &path)?
                    .iter()
                    .map(|r| {
                        let mut rep =
                            r.to_report()
                                .unwrap_or_else(|| glba::scoring::SubjectReport {
                                    subject_id: r.subject_id.clone(),
                                    tau_mean: r.score,
                                    tau_by_gamma: Vec::new(),
                                    alpha: f64::NAN,
                                    beta: f64::NAN,
                                    beta_variance: f64::NAN,
                                    rank: r.rank,
                                });
                        rep.tau_mean = r.score;
                        rep
                    })
                    .collect();
                (
                    overhead_curve(&table, dim, FilterBasis::Subjects(&reports), &grid),
                    "overhead_subject.tsv",
                )
            } else {
                let path = images.expect("clap enforces one basis");
                let body = run.read(&path)?;
                let reports = text::parse_image_table::<f64>(&body)
                    .with_context(|| format!("in {}", path.display()))?;
                (
                    overhead_curve(&table, dim, FilterBasis::Images(&reports), &grid),
                    "overhead_image.tsv",
                )
            };
            run.write(file, &text::format_overhead(&curve))?;
            "overhead"
        }
        Command::Pr {
            ranking,
            annotated,
            top,
        } => {
            let ids: Vec<String> = read_ranking(&mut run, &ranking)?
                .into_iter()
                .map(|r| r.subject_id)
                .collect();
            let spammers = text::parse_id_list(&run.read(&annotated)?);
            let curve = precision_recall(&ids, &spammers, &top)?;
            run.write("pr.tsv", &text::format_pr_curve(&curve))?;
            for (k, p) in &curve.top_k {
                println!("top-{k} precision {p:.4}");
            }
            "pr"
        }
        Command::Flag {
            ranking,
            var_max,
            tau_pct,
        } => {
            let rows = read_ranking(&mut run, &ranking)?;
            let reports: Vec<_> = rows
                .iter()
                .map(|r| {
                    r.to_report().ok_or_else(|| {
                        invalid(format!(
                            "ranking row for `{}` has no regularity",
                            r.subject_id
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            let flagged = flag_confidently_unreliable(&reports, var_max, tau_pct);
            run.write(
                "flagged.txt",
                &flagged.iter().map(|s| format!("{s}\n")).collect::<String>(),
            )?;
            println!("{} subjects flagged", flagged.len());
            "flag"
        }
        Command::BaselineDs {
            responses,
            margin,
            max_iter,
            tol,
        } => {
            let table = run.responses(&responses)?;
            let labels = CategoricalTable::from_responses(&table, dim, margin)?;
            let model = dawid_skene_fit(&labels, max_iter, tol)?;
            run.write(
                "ranking_ds.tsv",
                &text::format_subject_table(&ds_rows(&model))?,
            )?;
            println!(
                "dawid-skene: {} iterations, converged {}",
                model.iterations, model.converged
            );
            "baseline-ds"
        }
        Command::BaselineTime { responses } => {
            let table = run.responses(&responses)?;
            let ranking = duration_rank(&table);
            run.write(
                "ranking_time.tsv",
                &text::format_duration_ranking(&ranking)?,
            )?;
            println!(
                "{} subjects ranked, {} without timing",
                ranking.ranked.len(),
                ranking.excluded.len()
            );
            "baseline-time"
        }
        Command::Simulate { kind } => match kind {
            Simulate::Graph {
                population,
                alpha,
                beta,
                true_gamma,
            } => {
                let m = population.subjects;
                let truth = ModelParams {
                    tau: planted_tau(&population),
                    alpha: vec![alpha; m],
                    beta: vec![beta; m],
                    gamma: true_gamma,
                };
                let spec = GenerativeSpec {
                    m,
                    n: population.tasks,
                    raters_per_task: parse_raters(&population.raters)?,
                    truth,
                    seed: settings.seed,
                };
                let (graph, truth) = sample_multigraph(&spec)?;
                run.write("graph.tsv", &text::format_multigraph(&graph)?)?;
                run.write(
                    "truth.tsv",
                    &text::format_truth(graph.subject_ids(), &truth)?,
                )?;
                println!(
                    "{} tasks, {} subjects, {} edges",
                    graph.n(),
                    graph.m(),
                    graph.edge_count()
                );
                "simulate-graph"
            }
            Simulate::Ratings {
                population,
                latent_sd,
                noise_sd,
            } => {
                let spec = RatingSpec {
                    dimension: dim,
                    n: population.tasks,
                    raters_per_task: parse_raters(&population.raters)?,
                    tau: planted_tau(&population),
                    latent_sd,
                    noise_sd,
                    seed: settings.seed,
                };
                let table = sample_ratings(&spec)?;
                run.write("responses.csv", &csv_text(&table)?)?;
                let planted: String = spread_indices(population.subjects, population.spammers)
                    .into_iter()
                    .map(|i| glba::simulate::padded_id("s", i, population.subjects) + "\n")
                    .collect();
                run.write("planted.txt", &planted)?;
                println!("{} responses", table.len());
                "simulate-ratings"
            }
        },
        Command::Inject {
            responses,
            spammers,
            tasks_per_spammer,
        } => {
            let table = run.responses(&responses)?;
            let spec = InjectionSpec {
                spammer_count: spammers,
                tasks_per_spammer,
                seed: settings.seed,
            };
            let injected = inject_spammers(&table, dim, &spec)?;
            run.write("responses.csv", &csv_text(&injected.table)?)?;
            run.write(
                "spammers.txt",
                &injected
                    .spammers
                    .iter()
                    .map(|s| format!("{s}\n"))
                    .collect::<String>(),
            )?;
            println!("{} spammers added", injected.spammers.len());
            "inject"
        }
        Command::Variance { responses } => {
            let table = run.responses(&responses)?;
            let ratio = variance_ratio(&table, dim)?;
            run.write("variance.txt", &format!("{dim}\t{ratio}\n"))?;
            println!("{dim}: within-task / pooled variance = {ratio:.4}");
            "variance"
        }
        Command::VerifyManifest { .. } => unreachable!("handled above"),
    };
    run.finish(name, &settings)
}

fn verify_manifest(path: &Path) -> Result<()> {
    let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut checked = 0;
    for line in body.lines() {
        let Some(rest) = line.strip_prefix("input ") else {
            continue;
        };
        let (sha, input) = rest
            .split_once(' ')
            .ok_or_else(|| anyhow!("malformed input line `{line}`"))?;
        let bytes = fs::read(input).with_context(|| format!("reading {input}"))?;
        if digest(&bytes) != sha {
            bail!("{input} does not match its recorded digest");
        }
        checked += 1;
    }
    println!("{checked} inputs verified");
    Ok(())
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("GLBA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| invalid(format!("GLBA_THREADS `{v}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e.chain().any(|c| {
                c.downcast_ref::<glba::Error>()
                    .is_some_and(glba::Error::is_validation)
            });
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
