pub mod commands;
pub mod config;
pub mod golden;
pub mod output;
pub mod suites;
