//! Criterion benchmarks for the `elastica` crate; see `benches/`.
