//! Benchmark-only crate; see `benches/kernels.rs` for the criterion
//! benchmarks of the hot kernels (differences, filters, Poisson solves,
//! full right-hand sides).
