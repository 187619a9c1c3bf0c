//! Shared fixtures for the benchmarks.

use profilerank_core::embeddings::EmbeddingTable;
use profilerank_core::synthetic::{generate, SyntheticConfig, SyntheticData};
use profilerank_core::Engine;

/// Synthetic collection with embeddings attached to the engine.
pub fn fixture() -> (SyntheticData, Engine) {
    let data = generate(&SyntheticConfig::default()).expect("synthetic data");
    let table = EmbeddingTable::parse(&data.embeddings, "embeddings.txt".as_ref()).expect("embeddings");
    let engine = Engine::with_corpus_background(data.corpus.clone())
        .expect("engine")
        .with_embeddings(table);
    (data, engine)
}
