//! Bench-only package; the measured code lives in `benches/hotpaths.rs`.
