//! Benchmark-only crate; see `benches/retrieval.rs`.
