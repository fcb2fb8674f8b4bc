//! Report pipeline, text rendering and independent verification backing the
//! `sidec` binary. Exposed as a library so the integration suites can build
//! reports and family files directly.

pub mod render;
pub mod report;
pub mod verify;
