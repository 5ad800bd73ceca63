//! Benchmarks for qbm-core live under `benches/`.
