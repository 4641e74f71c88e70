//! Criterion benchmarks for `bgmix-core`; see `benches/`.
