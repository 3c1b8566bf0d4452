//! Criterion benchmarks for the sampling and inference kernels (`cargo bench -p ccrm-bench`).
