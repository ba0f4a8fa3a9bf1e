//! Criterion benchmarks for the `delaystab` kernels; see `benches/kernels.rs`.
