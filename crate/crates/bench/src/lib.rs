//! Criterion benchmarks for the hot kernels of `lorentz_core`.
//!
//! Run with `cargo bench -p lorentz-bench`.
