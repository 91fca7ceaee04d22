//! Criterion benchmarks for netcoal-core live under `benches/`.
