//! Front end for the varpois engine: input language, command dispatch and reports.

pub mod commands;
pub mod dsl;
pub mod report;
