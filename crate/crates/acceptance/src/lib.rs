//! Acceptance suite. The checks live in `tests/acceptance.rs` and run with
//! `cargo test -p kpirl-acceptance`, printing one pass/fail line per
//! criterion.
