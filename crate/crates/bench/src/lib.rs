//! Benchmarks for `qmcqoi`; see `benches/kernels.rs`.
