//! Criterion benchmarks for hetmac live under `benches/`.
