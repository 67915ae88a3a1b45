//! Acceptance suite for `stretchld`; see `tests/acceptance.rs`.
