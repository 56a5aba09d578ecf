//! Criterion benchmarks for the clustering pipeline.
