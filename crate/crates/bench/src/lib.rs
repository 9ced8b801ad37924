//! Criterion benchmarks for the workbench kernels; see `benches/`.
