//! Bench-only crate; see `benches/segments.rs`.
