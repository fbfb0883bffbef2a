//! Criterion benchmarks for the lqdim kernels live under `benches/`.
