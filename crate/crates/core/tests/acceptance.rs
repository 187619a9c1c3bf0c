//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Lines go straight to stderr so they show up without `--nocapture`.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use profilerank_core::corpus::{Corpus, CorpusStats, EntityDocument};
use profilerank_core::embeddings::{EmbeddingTable, SimilarityConfig};
use profilerank_core::eval::{
    ndcg_of_grades, paired_t_test, run_ablation, run_experiment, Cell, ExperimentInputs, Metric,
};
use profilerank_core::profiles::ProfileVariant;
use profilerank_core::rankers::{
    bm25_contributions, lm_score, rerank, smoothed_doc_prob, Bm25Config, Engine, Mu, RankerConfig,
    RankerKind, RunVariant, Translation,
};
use profilerank_core::run::format_run;
use profilerank_core::synthetic::{generate, SyntheticConfig};
use profilerank_core::text::{build_lm, BackgroundLM, TermSeq, TextConfig};

type Outcome = Result<String, String>;

const RAW: TextConfig = TextConfig {
    remove_stopwords: false,
    include_comments: true,
};

fn seq(s: &str) -> TermSeq {
    s.split_whitespace().map(str::to_owned).collect()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(elapsed < limit, || format!("{what} took {elapsed:.2?}, limit {limit:?}"))
}

struct RandomCorpus {
    docs: Vec<(String, Vec<String>)>,
    query: Vec<String>,
    user: Vec<String>,
    vocab: Vec<String>,
    mu: f64,
}

fn random_corpus(rng: &mut StdRng) -> RandomCorpus {
    let v = rng.random_range(4..14);
    let vocab: Vec<String> = (0..v).map(|i| format!("t{i}")).collect();
    let n_docs = rng.random_range(3..12);
    let docs = (0..n_docs)
        .map(|i| {
            let len = rng.random_range(1..10);
            let words = (0..len).map(|_| vocab[rng.random_range(0..v)].clone()).collect();
            (format!("d{i:02}"), words)
        })
        .collect();
    let draw = |n: usize, rng: &mut StdRng| -> Vec<String> {
        (0..n)
            .map(|_| {
                if rng.random_bool(0.15) {
                    "unseen".to_string()
                } else {
                    vocab[rng.random_range(0..v)].clone()
                }
            })
            .collect()
    };
    let nq = rng.random_range(1..4);
    let query = draw(nq, rng);
    let nu = rng.random_range(1..8);
    let user = draw(nu, rng);
    let mu = rng.random_range(0.5..50.0);
    RandomCorpus { docs, query, user, vocab, mu }
}

/// Laplace background, Dirichlet document model and query log-likelihood,
/// written out from the formulas without the library.
fn query_likelihood(c: &RandomCorpus) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (_, words) in &c.docs {
        for w in words {
            *counts.entry(w).or_default() += 1.0;
            total += 1.0;
        }
    }
    let denom = total + counts.len() as f64 + 1.0;
    let p_c = |w: &str| counts.get(w).map_or(1.0, |c| c + 1.0) / denom;
    let mut q_counts: BTreeMap<&str, f64> = BTreeMap::new();
    for w in &c.query {
        *q_counts.entry(w).or_default() += 1.0;
    }
    c.docs
        .iter()
        .map(|(id, words)| {
            let len = words.len() as f64;
            let ll: f64 = q_counts
                .iter()
                .map(|(w, qc)| {
                    let tf = words.iter().filter(|x| x == w).count() as f64;
                    qc * ((tf + c.mu * p_c(w)) / (len + c.mu)).ln()
                })
                .sum();
            (id.clone(), ll)
        })
        .collect()
}

fn reduction_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(20_240_601);
    let mut max_gap = 0.0f64;
    for round in 0..50 {
        let c = random_corpus(&mut rng);
        let docs: Vec<EntityDocument> = c
            .docs
            .iter()
            .map(|(id, w)| EntityDocument::new(id, "", w.join(" "), vec![], &RAW))
            .collect();
        let corpus = Corpus::from_documents(docs, RAW).map_err(|e| e.to_string())?;
        let mut table = EmbeddingTable::new(c.vocab.len() + 1);
        for (i, w) in c.vocab.iter().chain(std::iter::once(&"unseen".to_string())).enumerate() {
            let mut v = vec![0.0; c.vocab.len() + 1];
            v[i] = 1.0;
            table.insert(w, v).map_err(|e| e.to_string())?;
        }
        let engine = Engine::with_corpus_background(corpus)
            .map_err(|e| e.to_string())?
            .with_embeddings(table);
        let tr = Translation {
            table: engine.embeddings.as_ref().unwrap(),
            config: SimilarityConfig::default(),
        };
        let q = build_lm(&c.query.iter().cloned().collect()).map_err(|e| e.to_string())?;
        let u = build_lm(&c.user.iter().cloned().collect()).map_err(|e| e.to_string())?;
        for d in engine.corpus.docs() {
            for (lambda, user) in [(1.0, None), (0.5, Some(&u)), (0.0, Some(&u))] {
                let plain = lm_score(&q, user, d, &engine.background, lambda, c.mu, None)
                    .map_err(|e| e.to_string())?;
                let ident = lm_score(&q, user, d, &engine.background, lambda, c.mu, Some(tr))
                    .map_err(|e| e.to_string())?;
                max_gap = max_gap.max((plain - ident).abs());
            }
        }

        let pool = profilerank_core::CandidatePool {
            query_id: "q".into(),
            query_text: c.query.join(" "),
            doc_ids: c.docs.iter().map(|(id, _)| id.clone()).collect(),
            sampled_ids: None,
        };
        let mut cfg = RankerConfig::new(RankerKind::Lm).with_lambda(1.0);
        cfg.mu = Mu::Fixed(c.mu);
        let run = rerank(&engine, &pool, "u", None, &cfg, RunVariant::QueryOnly)
            .map_err(|e| e.to_string())?;
        let oracle = query_likelihood(&c);
        for pair in run.entries.windows(2) {
            let (a, b) = (oracle[&pair[0].doc_id], oracle[&pair[1].doc_id]);
            check(a >= b - 1e-9, || {
                format!(
                    "corpus {round}: {} ranked above {} but log-likelihood {a} < {b}",
                    pair[0].doc_id, pair[1].doc_id
                )
            })?;
        }
    }
    check(max_gap <= 1e-9, || format!("identity translation differs by {max_gap:e}"))?;
    within(start.elapsed(), Duration::from_secs(10), "reduction suite")?;
    Ok(format!("50 corpora, max score gap {max_gap:.1e}, {:.2?}", start.elapsed()))
}

fn hand_oracles() -> Outcome {
    let tol = 1e-4;
    let bg = BackgroundLM::from_probabilities(
        [("a".to_string(), 0.5), ("b".to_string(), 0.5)].into(),
        0.01,
    )
    .map_err(|e| e.to_string())?;
    let d = EntityDocument::new("d", "", "a a b", vec![], &RAW);
    let q = build_lm(&seq("a")).unwrap();
    let u = build_lm(&seq("b")).unwrap();
    let mut got = vec![
        ("smoothed_doc_prob", 0.625, smoothed_doc_prob("a", &d, &bg, 1.0, None).unwrap()),
        ("lm_score lambda=1", 0.4700, lm_score(&q, None, &d, &bg, 1.0, 1.0, None).unwrap()),
        ("lm_score lambda=0.5", 0.7254, lm_score(&q, Some(&u), &d, &bg, 0.5, 1.0, None).unwrap()),
    ];

    let x = EntityDocument::new("x", "", "x y z", vec![], &RAW);
    let stats = CorpusStats {
        num_docs: 10,
        total_tokens: 30,
        avg_doc_len: 3.0,
        doc_freq: [("x".to_string(), 2)].into(),
    };
    let bm = bm25_contributions(&seq("x"), &x, &stats, &Bm25Config::default());
    got.push(("bm25 contribution", 1.4816, bm[0].1));
    got.push(("ndcg", 0.7967, ndcg_of_grades(&[1, 2], 5).unwrap()));
    let t = paired_t_test(&[1.0, 0.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
    got.push(("t statistic", 1.7321, t.t));
    got.push(("one-sided p", 0.1127, t.p_one_sided));

    let bad: Vec<String> = got
        .iter()
        .filter(|(_, want, v)| (want - v).abs() > tol)
        .map(|(name, want, v)| format!("{name}: want {want}, got {v:.6}"))
        .collect();
    check(bad.is_empty(), || bad.join("; "))?;
    Ok(format!("{} values within {tol:e}", got.len()))
}

fn brute_ndcg(grades: &[u8], k: usize) -> Option<f64> {
    if grades.is_empty() {
        return None;
    }
    let dcg = |gs: &[u8]| -> f64 {
        gs.iter()
            .take(k)
            .enumerate()
            .map(|(i, g)| (2f64.powi(i32::from(*g)) - 1.0) / ((i + 2) as f64).log2())
            .sum()
    };
    // every distinct arrangement of the grade multiset
    let mut perm = grades.to_vec();
    perm.sort_unstable();
    let mut best = dcg(&perm);
    loop {
        let Some(i) = (0..perm.len().saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..perm.len()).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
        best = best.max(dcg(&perm));
    }
    if best == 0.0 {
        return Some(0.0);
    }
    Some(dcg(grades) / best)
}

fn metric_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let len = rng.random_range(0..=8);
        let grades: Vec<u8> = (0..len).map(|_| rng.random_range(0..=2)).collect();
        let k = rng.random_range(1..=10);
        let (lib, oracle) = (ndcg_of_grades(&grades, k), brute_ndcg(&grades, k));
        match (lib, oracle) {
            (None, None) => {}
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            _ => return Err(format!("list {i} {grades:?}: definedness differs")),
        }
    }
    check(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("1000 lists, max deviation {worst:.1e}"))
}

fn synthetic_engine() -> (profilerank_core::synthetic::SyntheticData, Engine) {
    let data = generate(&SyntheticConfig::default()).unwrap();
    let engine = Engine::with_corpus_background(data.corpus.clone()).unwrap();
    (data, engine)
}

fn synthetic_experiment() -> Outcome {
    let start = Instant::now();
    let (data, engine) = synthetic_engine();
    let profiles = data.profiles_by_id();
    let inputs = ExperimentInputs {
        engine: &engine,
        pools: &data.pools,
        profiles: &profiles,
        judgments: &data.judgments,
    };
    let lm = RankerConfig::new(RankerKind::Lm);
    let cells = [
        Cell::new(lm, RunVariant::QueryOnly),
        Cell::new(lm, RunVariant::Profile(ProfileVariant::Full)),
    ];
    let report = run_experiment(&inputs, &cells, &Metric::DEFAULTS).map_err(|e| e.to_string())?;
    let ndcg5 = Metric::Ndcg(5);
    let base = report.cells[0].average(&report.metrics, ndcg5).ok_or("baseline undefined")?;
    let pers = report.cells[1].average(&report.metrics, ndcg5).ok_or("personalized undefined")?;
    let sig = report
        .significance
        .iter()
        .find(|s| s.metric == ndcg5)
        .and_then(|s| s.test)
        .ok_or("no significance test")?;
    check(pers - base >= 0.05, || {
        format!("nDCG@5 lambda=0 {pers:.4} vs lambda=1 {base:.4}, gain below 0.05")
    })?;
    check(sig.p_one_sided < 0.01, || format!("p = {:.4} not below 0.01", sig.p_one_sided))?;
    within(start.elapsed(), Duration::from_secs(30), "synthetic experiment")?;
    Ok(format!(
        "{} pairs, nDCG@5 {base:.4} -> {pers:.4}, t = {:.3}, p = {:.2e}, {:.2?}",
        report.evaluated_pairs,
        sig.t,
        sig.p_one_sided,
        start.elapsed()
    ))
}

fn ablation() -> Outcome {
    let (data, engine) = synthetic_engine();
    let profiles = data.profiles_by_id();
    let inputs = ExperimentInputs {
        engine: &engine,
        pools: &data.pools,
        profiles: &profiles,
        judgments: &data.judgments,
    };
    let report = run_ablation(&inputs, RankerConfig::new(RankerKind::Lm), &Metric::DEFAULTS)
        .map_err(|e| e.to_string())?;
    let variants: Vec<String> = report.cells.iter().map(|c| c.cell.variant.to_string()).collect();
    check(
        variants == ["full", "no_book_fields", "demographics_hobbies_only"],
        || format!("rows {variants:?}"),
    )?;
    let rows = report.to_tsv().lines().count();
    check(rows == 4, || format!("table has {rows} lines, want header + 3"))?;
    let (no_book, demo) = (&report.cells[1], &report.cells[2]);
    for (i, m) in report.metrics.iter().enumerate() {
        let (a, b) = (no_book.averages[i], demo.averages[i]);
        check(a.unwrap_or(0.0) >= b.unwrap_or(0.0), || {
            format!("{m}: no_book_fields {a:?} < demographics_hobbies_only {b:?}")
        })?;
    }
    let ndcg20 = |c: &profilerank_core::eval::CellReport| c.averages[0].unwrap_or(f64::NAN);
    Ok(format!(
        "nDCG@20 full {:.4}, no_book {:.4}, demo_hobbies {:.4}",
        ndcg20(&report.cells[0]),
        ndcg20(no_book),
        ndcg20(demo)
    ))
}

/// docs -> index -> rerank -> evaluate, with every artifact as bytes.
fn pipeline(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let err = |e: profilerank_core::Error| e.to_string();
    let data = generate(&SyntheticConfig::default()).map_err(err)?;
    data.write_dir(dir).map_err(err)?;
    let corpus = profilerank_core::corpus::load_documents(&dir.join("docs.jsonl"), &TextConfig::default())
        .map_err(err)?;
    corpus.save_index(&dir.join("index.json")).map_err(err)?;
    let corpus = Corpus::load_index(&dir.join("index.json")).map_err(err)?;
    let table = profilerank_core::embeddings::load_embeddings(&dir.join("embeddings.txt")).map_err(err)?;
    let engine = Engine::with_corpus_background(corpus).map_err(err)?.with_embeddings(table);
    let profiles: BTreeMap<_, _> = profilerank_core::profiles::load_profiles_with_entities(
        &dir.join("profiles.jsonl"),
        Some(&dir.join("entities.jsonl")),
    )
    .map_err(err)?
    .into_iter()
    .map(|p| (p.user_id.clone(), p))
    .collect();
    let pools = profilerank_core::corpus::load_pools(&dir.join("pools.jsonl")).map_err(err)?;
    let judgments = profilerank_core::eval::load_qrels(&dir.join("qrels.txt")).map_err(err)?;
    let inputs = ExperimentInputs {
        engine: &engine,
        pools: &pools,
        profiles: &profiles,
        judgments: &judgments,
    };
    let mut cells = Vec::new();
    for kind in [RankerKind::Lm, RankerKind::LmWv, RankerKind::Bm25] {
        for v in [
            RunVariant::QueryOnly,
            RunVariant::Profile(ProfileVariant::Full),
            RunVariant::Profile(ProfileVariant::FullPlusEntities),
        ] {
            cells.push(Cell::new(RankerConfig::new(kind), v));
        }
    }
    let report = run_experiment(&inputs, &cells, &Metric::DEFAULTS).map_err(err)?;
    let mut out: Vec<(String, Vec<u8>)> = report
        .cells
        .iter()
        .map(|c| (format!("{}.run", c.tag), format_run(&c.runs, &c.tag).into_bytes()))
        .collect();
    out.push(("report.tsv".into(), report.to_tsv().into_bytes()));
    out.push(("report.json".into(), report.to_json().map_err(err)?.into_bytes()));
    out.push(("index.json".into(), std::fs::read(dir.join("index.json")).map_err(|e| e.to_string())?));
    Ok(out)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline(a.path())?;
    let second = pipeline(b.path())?;
    check(first.len() == second.len(), || "artifact count differs".into())?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        check(x == y, || format!("{name} differs between runs"))?;
    }
    let bytes: usize = first.iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} artifacts, {bytes} bytes identical", first.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 6] = [
        ("reduction suite", reduction_suite),
        ("hand-computed oracles", hand_oracles),
        ("nDCG brute-force oracle", metric_oracle),
        ("synthetic personalization experiment", synthetic_experiment),
        ("profile ablation table", ablation),
        ("end-to-end determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (name, f) in criteria {
        let line = match f() {
            Ok(detail) => format!("PASS  {name}: {detail}"),
            Err(why) => {
                failed.push(name);
                format!("FAIL  {name}: {why}")
            }
        };
        writeln!(err, "{line}").expect("stderr");
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
