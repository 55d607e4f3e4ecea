//! Wall-clock benchmarks for the retrieval pipeline: index construction,
//! first-stage traversal at several pruning depths, exact refinement, and the
//! assembled two-stage search.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use slim_core::index::{build, BuildOptions, PruneConfig};
use slim_core::ingest::synth::{synth_corpus, SynthSpec};
use slim_core::search::{fuse_query, refine, stage1, FusedQuery};
use slim_core::{DocStore, InvertedIndex, SearchConfig, Searcher, TokenMatrix};

fn fixture(num_docs: usize) -> (InvertedIndex, DocStore, Vec<TokenMatrix>) {
    let spec = SynthSpec {
        num_docs,
        vocab_size: 30_000,
        num_queries: 16,
        num_topics: 100,
        seed: 7,
    };
    let corpus = synth_corpus(&spec).expect("benchmark corpus");
    let (index, store) =
        build(corpus.docs, corpus.manifest.vocab_size, &BuildOptions::default())
            .expect("benchmark index");
    let queries = corpus.queries.into_iter().map(|q| q.matrix).collect();
    (index, store, queries)
}

fn bench_build(c: &mut Criterion) {
    let spec = SynthSpec {
        num_docs: 2_000,
        vocab_size: 30_000,
        num_queries: 1,
        num_topics: 50,
        seed: 7,
    };
    let corpus = synth_corpus(&spec).expect("benchmark corpus");
    c.bench_function("build/2k-docs", |b| {
        b.iter_batched(
            || corpus.docs.clone(),
            |docs| build(docs, corpus.manifest.vocab_size, &BuildOptions::default()).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_stage1(c: &mut Criterion) {
    let (index, _, queries) = fixture(10_000);
    let fused: Vec<FusedQuery> =
        queries.iter().map(|m| fuse_query(m, 0.01).unwrap()).collect();
    let mut group = c.benchmark_group("stage1-10k-docs");
    for idf_threshold in [0.0, 1.5, 3.0] {
        let pruned = index.prune(&PruneConfig { weight_threshold: 0.5, idf_threshold });
        group.bench_with_input(
            BenchmarkId::new("idf-threshold", idf_threshold),
            &pruned,
            |b, idx| {
                b.iter(|| {
                    for fq in &fused {
                        black_box(stage1(idx, fq, 4000));
                    }
                })
            },
        );
    }
    group.finish();
}

fn bench_refine(c: &mut Criterion) {
    let (index, store, queries) = fixture(10_000);
    let pruned = index.prune(&PruneConfig { weight_threshold: 0.5, idf_threshold: 0.0 });
    let candidates: Vec<_> = queries
        .iter()
        .map(|m| {
            let fq = fuse_query(m, 0.01).unwrap();
            stage1(&pruned, &fq, 4000)
        })
        .collect();
    c.bench_function("refine/4k-candidates", |b| {
        b.iter(|| {
            for (m, cand) in queries.iter().zip(&candidates) {
                black_box(refine(&store, m, cand, 1000).unwrap());
            }
        })
    });
}

fn bench_two_stage(c: &mut Criterion) {
    let (index, store, queries) = fixture(10_000);
    let pruned = index.prune(&PruneConfig::default());
    let searcher = Searcher::new(pruned, store, SearchConfig::default()).unwrap();
    c.bench_function("search/two-stage-defaults", |b| {
        b.iter(|| {
            for m in &queries {
                black_box(searcher.search(m).unwrap());
            }
        })
    });
}

criterion_group!(benches, bench_build, bench_stage1, bench_refine, bench_two_stage);
criterion_main!(benches);
