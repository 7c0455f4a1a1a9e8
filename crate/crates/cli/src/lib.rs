//! IO, file formats, UCI engine sessions and the command implementations
//! behind the `puzzleforge` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod pipeline;
pub mod records;
pub mod uci;
