//! Acceptance checks for the modlap engine live in `tests/acceptance.rs`; this
//! crate has no library code. It is last in the workspace so that its
//! criteria report runs after every unit and integration suite.
