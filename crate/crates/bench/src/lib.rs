//! Criterion benchmarks for the gammaflag pipeline live in `benches/`.
