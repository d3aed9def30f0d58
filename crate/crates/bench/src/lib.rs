//! Criterion benchmarks for the element kernel, global assembly and a full
//! time step live in `benches/kernels.rs`.
