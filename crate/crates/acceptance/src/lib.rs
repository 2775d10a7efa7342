//! Acceptance suite for `cwss`; see `tests/acceptance.rs`.
