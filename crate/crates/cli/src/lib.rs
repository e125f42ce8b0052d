//! Library side of the `proofsim` command: configuration, file formats
//! and the subcommands.

pub mod commands;
pub mod config;
pub mod io;
pub mod proofs;

/// An error caused by how the command was invoked rather than by the
/// data; the binary exits with status 1 for these and 2 otherwise.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn is_usage_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<UsageError>().is_some()
}
