use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use profilerank_core::corpus::{load_documents, load_pools, pools_to_jsonl, sample_pool, CandidatePool};
use profilerank_core::embeddings::load_embeddings;
use profilerank_core::eval::{
    evaluate_run, load_qrels, macro_average, paired_t_test, parse_metrics, run_ablation,
    run_experiment, Cell, ExperimentInputs, ExperimentReport, Metric,
};
use profilerank_core::io::write_file;
use profilerank_core::profiles::load_profiles_with_entities;
use profilerank_core::rankers::rerank;
use profilerank_core::run::{format_run, load_run, RunList};
use profilerank_core::synthetic::{generate, SyntheticConfig};
use profilerank_core::text::build_background;
use profilerank_core::{BackgroundLM, Corpus, Engine, RankerKind, RunVariant, UserProfile};

use crate::config::{ConfigFile, DEFAULT_SEED};
use crate::{service, CliError, Command};

type CmdResult = Result<(), CliError>;

/// Files shared by the ranking commands.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Index JSON written by `profilerank index`.
    #[arg(long)]
    pub index: PathBuf,
    /// Candidate pools JSONL (query_id, query_text, doc_ids).
    #[arg(long)]
    pub pools: PathBuf,
    /// Profiles JSONL.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Entity descriptions JSONL linked to profile mentions.
    #[arg(long)]
    pub entities: Option<PathBuf>,
    /// Word vectors, one `word v1 v2 ...` per line; needed by lm-wv.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Background JSON from `profilerank background` [default: estimated
    /// from the index].
    #[arg(long)]
    pub background: Option<PathBuf>,
}

pub struct Loaded {
    pub engine: Engine,
    pub pools: Vec<CandidatePool>,
    pub profiles: BTreeMap<String, UserProfile>,
}

impl InputArgs {
    pub fn load(&self) -> Result<Loaded, CliError> {
        let corpus = Corpus::load_index(&self.index)?;
        let mut engine = match &self.background {
            Some(path) => {
                let text = profilerank_core::io::read_to_string(path)?;
                let bg: BackgroundLM = serde_json::from_str(&text)
                    .map_err(|e| profilerank_core::Error::parse(path, e.line(), e))?;
                Engine::new(corpus, bg)
            }
            None => Engine::with_corpus_background(corpus)?,
        };
        if let Some(path) = &self.embeddings {
            engine = engine.with_embeddings(load_embeddings(path)?);
        }
        let pools = load_pools(&self.pools)?;
        for pool in &pools {
            if let Some(missing) = pool.doc_ids.iter().find(|d| engine.corpus.get(d).is_none()) {
                return Err(profilerank_core::Error::UnknownDocument(missing.clone()).into());
            }
        }
        let profiles = match &self.profiles {
            Some(path) => load_profiles_with_entities(path, self.entities.as_deref())?
                .into_iter()
                .map(|p| (p.user_id.clone(), p))
                .collect(),
            None if self.entities.is_some() => {
                return Err(CliError::Usage("--entities requires --profiles".into()))
            }
            None => BTreeMap::new(),
        };
        Ok(Loaded { engine, pools, profiles })
    }
}

pub fn dispatch(command: Command) -> CmdResult {
    match command {
        Command::Index { docs, out, text } => {
            let corpus = load_documents(&docs, &text.resolve()?)?;
            corpus.save_index(&out)?;
            eprintln!(
                "indexed {} documents, {} tokens, {} terms",
                corpus.len(),
                corpus.stats().total_tokens,
                corpus.stats().doc_freq.len()
            );
            Ok(())
        }
        Command::Background { docs, out, text } => {
            let corpus = load_documents(&docs, &text.resolve()?)?;
            let bg = build_background(corpus.token_streams())?;
            let json = serde_json::to_string(&bg).map_err(profilerank_core::Error::from)? + "\n";
            write_file(&out, json.as_bytes())?;
            Ok(())
        }
        Command::Rerank { inputs, qrels, out, tag, tuning } => {
            let cfg = tuning.resolve()?;
            let loaded = inputs.load()?;
            let pairs = rerank_pairs(&loaded, qrels.as_deref(), cfg.variant)?;
            let mut runs = Vec::with_capacity(pairs.len());
            for (user, query) in &pairs {
                let pool = loaded
                    .pools
                    .iter()
                    .find(|p| &p.query_id == query)
                    .ok_or_else(|| profilerank_core::Error::UnknownQuery(query.clone()))?;
                runs.push(rerank(
                    &loaded.engine,
                    pool,
                    user,
                    loaded.profiles.get(user),
                    &cfg.ranker,
                    cfg.variant,
                )?);
            }
            let tag = tag.unwrap_or_else(|| Cell::new(cfg.ranker, cfg.variant).tag());
            emit(out.as_deref(), &format_run(&runs, &tag))
        }
        Command::Eval { run, qrels, metrics, out } => {
            let metrics = parse_metrics(&metrics)?;
            let runs = load_run(&run)?;
            let judgments = load_qrels(&qrels)?;
            let report = eval_report(&runs, &judgments, &metrics);
            print!("{}", report.to_tsv());
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&report).map_err(profilerank_core::Error::from)? + "\n";
                write_file(&out, json.as_bytes())?;
            }
            Ok(())
        }
        Command::Compare { run_a, run_b, qrels, metric } => {
            let metric: Metric = metric.parse()?;
            let judgments = load_qrels(&qrels)?;
            let a = per_topic(&load_run(&run_a)?, &judgments, metric);
            let b = per_topic(&load_run(&run_b)?, &judgments, metric);
            let (xs, ys): (Vec<f64>, Vec<f64>) = a
                .iter()
                .filter_map(|(topic, x)| Some((*x, *b.get(topic)?)))
                .unzip();
            let test = paired_t_test(&xs, &ys)?;
            println!("metric\tn\tmean_a\tmean_b\tt\tp_one_sided\tdegenerate");
            println!(
                "{metric}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}",
                test.n,
                xs.iter().sum::<f64>() / xs.len() as f64,
                ys.iter().sum::<f64>() / ys.len() as f64,
                test.t,
                test.p_one_sided,
                test.degenerate
            );
            Ok(())
        }
        Command::Sample { pools, n, seed, out, config } => {
            let file = match &config {
                Some(p) => ConfigFile::load(p)?,
                None => ConfigFile::default(),
            };
            let seed = seed.or(file.seed).unwrap_or(DEFAULT_SEED);
            let sampled = load_pools(&pools)?
                .iter()
                .map(|p| sample_pool(p, n, pool_seed(seed, &p.query_id)))
                .collect::<Result<Vec<_>, _>>()?;
            write_file(&out, pools_to_jsonl(&sampled)?.as_bytes())?;
            Ok(())
        }
        Command::Ablate { inputs, qrels, out, tuning } => {
            let cfg = tuning.resolve()?;
            let loaded = inputs.load()?;
            let judgments = load_qrels(&qrels)?;
            let report = run_ablation(&experiment_inputs(&loaded, &judgments), cfg.ranker, &Metric::DEFAULTS)?;
            finish_report(&report, out.as_deref(), None)
        }
        Command::Experiment {
            inputs,
            qrels,
            rankers,
            variants,
            metrics,
            runs_dir,
            out,
            tuning,
        } => {
            let metrics = parse_metrics(&metrics)?;
            let file = tuning.file()?;
            let loaded = inputs.load()?;
            let rankers = if rankers.is_empty() {
                let mut r = vec![RankerKind::Lm];
                if loaded.engine.embeddings.is_some() {
                    r.push(RankerKind::LmWv);
                }
                r.push(RankerKind::Bm25);
                r
            } else {
                rankers
            };
            let mut cells = Vec::new();
            for kind in rankers {
                let cfg = tuning.resolve_with(&file, Some(kind))?;
                cells.extend(variants.iter().map(|v| Cell::new(cfg.ranker, *v)));
            }
            let judgments = load_qrels(&qrels)?;
            let report = run_experiment(&experiment_inputs(&loaded, &judgments), &cells, &metrics)?;
            finish_report(&report, out.as_deref(), runs_dir.as_deref())
        }
        Command::Serve {
            inputs,
            port,
            host,
            static_dir,
            tuning,
        } => {
            let cfg = tuning.resolve()?;
            let profiles_path = inputs
                .profiles
                .clone()
                .ok_or_else(|| CliError::Usage("serve requires --profiles".into()))?;
            let loaded = inputs.load()?;
            let state = service::AppState::new(loaded.engine, loaded.pools, loaded.profiles, Some(profiles_path), cfg.ranker);
            service::serve(state, &host, port, static_dir)
        }
        Command::Synth { out_dir, seed } => {
            let config = SyntheticConfig {
                seed: seed.unwrap_or(DEFAULT_SEED),
                ..Default::default()
            };
            let data = generate(&config)?;
            data.write_dir(&out_dir)?;
            eprintln!(
                "wrote {} documents, {} users, {} pools, {} judgments to {}",
                data.corpus.len(),
                data.profiles.len(),
                data.pools.len(),
                data.judgments.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

/// Per-pool sampling seed: the run seed mixed with an FNV-1a hash of the
/// query id, so a pool's sample does not depend on its position in the file.
pub fn pool_seed(seed: u64, query_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in query_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

fn rerank_pairs(
    loaded: &Loaded,
    qrels: Option<&Path>,
    variant: RunVariant,
) -> Result<Vec<(String, String)>, CliError> {
    if let Some(path) = qrels {
        let judgments = load_qrels(path)?;
        return Ok(judgments.pairs().map(|(u, q)| (u.to_string(), q.to_string())).collect());
    }
    if loaded.profiles.is_empty() {
        let what = if variant == RunVariant::QueryOnly { "users" } else { "profiles" };
        return Err(CliError::Usage(format!(
            "rerank needs --profiles or --qrels to know which {what} to rank for"
        )));
    }
    let mut pairs = Vec::new();
    for user in loaded.profiles.keys() {
        for pool in &loaded.pools {
            pairs.push((user.clone(), pool.query_id.clone()));
        }
    }
    Ok(pairs)
}

fn experiment_inputs<'a>(
    loaded: &'a Loaded,
    judgments: &'a profilerank_core::JudgmentSet,
) -> ExperimentInputs<'a> {
    ExperimentInputs {
        engine: &loaded.engine,
        pools: &loaded.pools,
        profiles: &loaded.profiles,
        judgments,
    }
}

fn finish_report(report: &ExperimentReport, out: Option<&Path>, runs_dir: Option<&Path>) -> CmdResult {
    print!("{}", report.to_tsv());
    if report.skipped_pairs > 0 {
        eprintln!("skipped {} judged pairs (missing pool, profile or judged pool docs)", report.skipped_pairs);
    }
    if let Some(dir) = runs_dir {
        std::fs::create_dir_all(dir).map_err(|e| profilerank_core::Error::io(dir, e))?;
        for c in &report.cells {
            write_file(&dir.join(format!("{}.run", c.tag)), format_run(&c.runs, &c.tag).as_bytes())?;
        }
    }
    if let Some(out) = out {
        write_file(out, report.to_json()?.as_bytes())?;
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => Ok(write_file(path, text.as_bytes())?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EvalTopic {
    pub user_id: String,
    pub query_id: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub metrics: Vec<Metric>,
    pub topics: Vec<EvalTopic>,
    pub averages: Vec<Option<f64>>,
}

impl EvalReport {
    pub fn to_tsv(&self) -> String {
        let fmt = |v: &Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
        let mut out = String::from("topic");
        for m in &self.metrics {
            write!(out, "\t{m}").unwrap();
        }
        out.push('\n');
        for t in &self.topics {
            write!(out, "{}:{}", t.user_id, t.query_id).unwrap();
            for v in &t.values {
                write!(out, "\t{}", fmt(v)).unwrap();
            }
            out.push('\n');
        }
        out.push_str("all");
        for v in &self.averages {
            write!(out, "\t{}", fmt(v)).unwrap();
        }
        out.push('\n');
        out
    }
}

pub fn eval_report(runs: &[RunList], judgments: &profilerank_core::JudgmentSet, metrics: &[Metric]) -> EvalReport {
    let topics: Vec<EvalTopic> = runs
        .iter()
        .map(|r| EvalTopic {
            user_id: r.user_id.clone(),
            query_id: r.query_id.clone(),
            values: evaluate_run(r, judgments, metrics),
        })
        .collect();
    let averages = (0..metrics.len())
        .map(|i| macro_average(topics.iter().map(|t| t.values[i])))
        .collect();
    EvalReport {
        metrics: metrics.to_vec(),
        topics,
        averages,
    }
}

fn per_topic(runs: &[RunList], judgments: &profilerank_core::JudgmentSet, metric: Metric) -> BTreeMap<String, f64> {
    runs.iter()
        .filter_map(|r| Some((r.topic(), evaluate_run(r, judgments, &[metric])[0]?)))
        .collect()
}
