//! Criterion benchmarks for the anongossip kernels; see `benches/`.
