// SPDX-License-Identifier: Apache-2.0

//! Pipeline front end: configuration, subcommand implementations and a
//! synthetic fixture generator.

pub mod commands;
pub mod config;
pub mod fixture;

pub use config::PipelineConfig;
