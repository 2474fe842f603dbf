//! Independent oracles shared by the integration tests and the acceptance
//! target. Nothing here calls into the code under test except to build
//! inputs.
#![allow(dead_code)]

pub mod disocclusion;
pub mod fk;
pub mod scenes;
