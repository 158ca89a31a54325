//! Criterion benchmarks for the gaffect core algorithms live under `benches/`.
