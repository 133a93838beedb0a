//! Benchmark-only crate; see `benches/placement.rs`.
