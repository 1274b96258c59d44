//! Criterion benchmarks for drowsegate live in `benches/`.
