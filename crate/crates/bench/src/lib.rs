//! Criterion benchmarks for the per-trial kernels; see `benches/`.
