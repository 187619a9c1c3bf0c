//! Seeded synthetic collection with known topical preferences.
//!
//! Documents are drawn from five topics, each user prefers one topic, and
//! the profile's favorites fields hold that topic's vocabulary while the
//! demographics and hobbies use words that never occur in documents.
//! Judgments grade preferred-topic documents 2 and everything else 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{documents_to_jsonl, pools_to_jsonl, sample_pool, CandidatePool, Corpus, EntityDocument};
use crate::error::Result;
use crate::eval::JudgmentSet;
use crate::io;
use crate::profiles::{profiles_to_jsonl, EntityDescription, EntityLink, ProfileField, UserProfile};
use crate::rng::XorShift64Star;
use crate::text::TextConfig;

pub const TOPICS: [(&str, [&str; 12]); 5] = [
    ("space", [
        "rocket", "galaxy", "orbit", "astronaut", "planet", "nebula", "comet", "starship",
        "asteroid", "lunar", "cosmos", "telescope",
    ]),
    ("crime", [
        "detective", "murder", "heist", "suspect", "police", "alibi", "gangster", "forensic",
        "clue", "robbery", "inspector", "verdict",
    ]),
    ("romance", [
        "love", "wedding", "heart", "kiss", "passion", "courtship", "bride", "romance",
        "sweetheart", "valentine", "affair", "engagement",
    ]),
    ("history", [
        "empire", "medieval", "dynasty", "revolution", "pharaoh", "knight", "castle", "ancient",
        "treaty", "monarchy", "crusade", "colonial",
    ]),
    ("nature", [
        "forest", "river", "wildlife", "mountain", "ocean", "garden", "meadow", "glacier",
        "bird", "jungle", "desert", "volcano",
    ]),
];

const GENERAL: [&str; 20] = [
    "story", "novel", "journey", "family", "secret", "world", "life", "young", "city", "war",
    "friend", "mystery", "adventure", "dark", "power", "night", "home", "stranger", "book",
    "tale",
];

const OFF_CORPUS: [&str; 12] = [
    "thirties", "teacher", "lisbon", "cycling", "chess", "knitting", "pottery", "jogging",
    "engineer", "baking", "nurse", "surfing",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub num_docs: usize,
    pub num_users: usize,
    pub num_queries: usize,
    pub queries_per_user: usize,
    pub pool_per_topic: usize,
    pub judged_per_pair: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            num_docs: 200,
            num_users: 10,
            num_queries: 6,
            queries_per_user: 2,
            pool_per_topic: 8,
            judged_per_pair: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub corpus: Corpus,
    /// Topic index of each document, by doc id.
    pub doc_topics: BTreeMap<String, usize>,
    pub pools: Vec<CandidatePool>,
    /// Profiles with their entity descriptions attached.
    pub profiles: Vec<UserProfile>,
    pub entity_links: Vec<EntityLink>,
    pub judgments: JudgmentSet,
    /// Word vectors in the plain-text format, clustered by topic.
    pub embeddings: String,
}

fn pick<'a>(rng: &mut XorShift64Star, words: &[&'a str], n: usize) -> Vec<&'a str> {
    (0..n).map(|_| *rng.choose(words)).collect()
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    let mut rng = XorShift64Star::new(config.seed);
    let text_config = TextConfig::default();
    let n_topics = TOPICS.len();

    let mut docs = Vec::with_capacity(config.num_docs);
    let mut doc_topics = BTreeMap::new();
    let mut by_topic: Vec<Vec<String>> = vec![Vec::new(); n_topics];
    for i in 0..config.num_docs {
        let topic = i % n_topics;
        let vocab = &TOPICS[topic].1;
        let id = format!("doc{i:03}");
        let title = format!("{} {}", rng.choose(vocab), rng.choose(&GENERAL));
        let n_topic = 5 + rng.below(8) as usize;
        let n_general = 2 + rng.below(5) as usize;
        let mut words = pick(&mut rng, vocab, n_topic);
        words.extend(pick(&mut rng, &GENERAL, n_general));
        rng.shuffle(&mut words);
        let n_comment = 1 + rng.below(3) as usize;
        let comment = pick(&mut rng, &GENERAL, n_comment).join(" ");
        docs.push(EntityDocument::new(&id, title, words.join(" "), vec![comment], &text_config));
        doc_topics.insert(id.clone(), topic);
        by_topic[topic].push(id);
    }
    let corpus = Corpus::from_documents(docs, text_config)?;

    let mut pools = Vec::with_capacity(config.num_queries);
    for q in 0..config.num_queries {
        let query_text = pick(&mut rng, &GENERAL, 2).join(" ");
        let mut doc_ids = Vec::new();
        for ids in &by_topic {
            let mut ids = ids.clone();
            rng.shuffle(&mut ids);
            ids.truncate(config.pool_per_topic);
            doc_ids.extend(ids);
        }
        doc_ids.sort();
        pools.push(CandidatePool {
            query_id: format!("q{}", q + 1),
            query_text,
            doc_ids,
            sampled_ids: None,
        });
    }

    let mut profiles = Vec::with_capacity(config.num_users);
    let mut entity_links = Vec::new();
    for u in 0..config.num_users {
        let topic = u % n_topics;
        let vocab = &TOPICS[topic].1;
        let user_id = format!("u{:02}", u + 1);
        let mut p = UserProfile::new(&user_id);
        p.demographics.insert("age".into(), rng.choose(&OFF_CORPUS[..2]).to_string());
        p.demographics.insert("occupation".into(), rng.choose(&OFF_CORPUS[..]).to_string());
        p.hobbies = pick(&mut rng, &OFF_CORPUS, 2).join(", ");
        p.favorite_books = (0..2).map(|_| pick(&mut rng, vocab, 2).join(" ")).collect();
        p.book_genres = vec![TOPICS[topic].0.to_string()];
        p.favorite_movies = (0..2).map(|_| pick(&mut rng, vocab, 2).join(" ")).collect();
        p.movie_genres = vec![rng.choose(vocab).to_string()];
        p.favorite_music = vec![rng.choose(vocab).to_string()];
        let link = EntityLink {
            user_id: user_id.clone(),
            owner_field: ProfileField::FavoriteBooks.as_str().to_string(),
            mention: p.favorite_books[0].clone(),
            entity_id: format!("e{:02}", u + 1),
            description: pick(&mut rng, vocab, 6).join(" "),
        };
        p.entities.push(EntityDescription::from(link.clone()));
        entity_links.push(link);
        profiles.push(p);
    }

    let mut judgments = JudgmentSet::new();
    for (u, p) in profiles.iter().enumerate() {
        let topic = u % n_topics;
        for k in 0..config.queries_per_user {
            let pool = &pools[(u + k * 3) % pools.len()];
            let sample_seed = config.seed ^ ((u as u64 + 1) << 32) ^ (k as u64 + 1);
            let sampled = sample_pool(pool, config.judged_per_pair.min(pool.doc_ids.len()), sample_seed)?;
            for d in sampled.sampled_ids.unwrap_or_default() {
                let grade = if doc_topics[&d] == topic { 2 } else { 0 };
                judgments.insert(&p.user_id, &pool.query_id, &d, grade)?;
            }
        }
    }

    let embeddings = topic_embeddings(&mut rng);
    Ok(SyntheticData {
        corpus,
        doc_topics,
        pools,
        profiles,
        entity_links,
        judgments,
        embeddings,
    })
}

const DIM: usize = 8;

/// Topic words sit near a per-topic center; general words are random.
fn topic_embeddings(rng: &mut XorShift64Star) -> String {
    let mut gauss = |scale: f64| (rng.next_f64() * 2.0 - 1.0) * scale;
    let mut out = String::new();
    let mut line = |word: &str, v: &[f64]| {
        out.push_str(word);
        for x in v {
            write!(out, " {x:.5}").unwrap();
        }
        out.push('\n');
    };
    for (t, (_, vocab)) in TOPICS.iter().enumerate() {
        let mut center = [0.0; DIM];
        center[t] = 1.0;
        for w in vocab {
            let v: Vec<f64> = center.iter().map(|c| c + gauss(0.3)).collect();
            line(w, &v);
        }
    }
    for w in GENERAL {
        let v: Vec<f64> = (0..DIM).map(|_| gauss(1.0)).collect();
        line(w, &v);
    }
    out
}

impl SyntheticData {
    /// Writes `docs.jsonl`, `pools.jsonl`, `profiles.jsonl`, `entities.jsonl`,
    /// `qrels.txt` and `embeddings.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        io::write_file(&dir.join("docs.jsonl"), documents_to_jsonl(self.corpus.docs())?.as_bytes())?;
        io::write_file(&dir.join("pools.jsonl"), pools_to_jsonl(&self.pools)?.as_bytes())?;
        io::write_file(&dir.join("profiles.jsonl"), profiles_to_jsonl(&self.profiles)?.as_bytes())?;
        io::write_file(&dir.join("entities.jsonl"), io::to_jsonl(&self.entity_links)?.as_bytes())?;
        io::write_file(&dir.join("qrels.txt"), self.judgments.to_qrels().as_bytes())?;
        io::write_file(&dir.join("embeddings.txt"), self.embeddings.as_bytes())?;
        Ok(())
    }

    pub fn profiles_by_id(&self) -> BTreeMap<String, UserProfile> {
        self.profiles.iter().map(|p| (p.user_id.clone(), p.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::is_stopword;

    #[test]
    fn shape() {
        let data = generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(data.corpus.len(), 200);
        assert_eq!(data.profiles.len(), 10);
        assert_eq!(data.pools.len(), 6);
        assert!(data.pools.iter().all(|p| p.doc_ids.len() == 40));
        assert_eq!(data.judgments.pairs().count(), 20);
        assert_eq!(data.judgments.len(), 400);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate(&SyntheticConfig::default()).unwrap();
        let b = generate(&SyntheticConfig::default()).unwrap();
        assert_eq!(a.corpus.docs(), b.corpus.docs());
        assert_eq!(a.judgments, b.judgments);
        assert_eq!(a.embeddings, b.embeddings);
        let c = generate(&SyntheticConfig { seed: 7, ..Default::default() }).unwrap();
        assert_ne!(a.corpus.docs(), c.corpus.docs());
    }

    #[test]
    fn off_corpus_words_never_occur_in_documents() {
        let data = generate(&SyntheticConfig::default()).unwrap();
        for w in OFF_CORPUS {
            assert!(!is_stopword(w));
            assert!(data.corpus.docs().iter().all(|d| d.count(w) == 0), "{w}");
        }
        for (_, vocab) in TOPICS {
            assert!(vocab.iter().all(|w| !is_stopword(w)));
        }
    }

    #[test]
    fn write_dir_round_trips() {
        let data = generate(&SyntheticConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        data.write_dir(dir.path()).unwrap();
        let corpus = crate::corpus::load_documents(&dir.path().join("docs.jsonl"), &TextConfig::default()).unwrap();
        assert_eq!(corpus.docs(), data.corpus.docs());
        let profiles = crate::profiles::load_profiles_with_entities(
            &dir.path().join("profiles.jsonl"),
            Some(&dir.path().join("entities.jsonl")),
        )
        .unwrap();
        assert_eq!(profiles, data.profiles);
        let qrels = crate::eval::load_qrels(&dir.path().join("qrels.txt")).unwrap();
        assert_eq!(qrels, data.judgments);
        let table = crate::embeddings::load_embeddings(&dir.path().join("embeddings.txt")).unwrap();
        assert_eq!(table.len(), 80);
    }
}
