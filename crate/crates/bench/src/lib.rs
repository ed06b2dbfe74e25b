//! Benchmarks for the spectral-flow engines live under `benches/`.
