// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Configuration-driven studies on top of `mollow-core`: TOML run
//! configurations, CSV/JSON file formats and the `mollow` command line.

pub mod commands;
pub mod config;
pub mod formats;
pub mod studies;

pub use commands::{run, Command};
pub use config::RunConfig;
