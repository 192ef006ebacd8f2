//! Criterion benchmarks for the trimlump pipeline; see `benches/pipeline.rs`.
