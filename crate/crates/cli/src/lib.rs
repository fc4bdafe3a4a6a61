//! Scenario files, JSON reports and the seeded self-test suite behind the
//! `qinstr` binary.

pub mod error;
pub mod report;
pub mod scenario;
pub mod selftest;
