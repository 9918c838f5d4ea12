//! Command implementations behind the `spectrum-queue` binary.

pub mod format;
pub mod report;
pub mod simulate;
pub mod sweep;
pub mod validate;

use spectrum_queue::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;

/// Maps a library error onto an exit code.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Solve(_) => EXIT_CHECK_FAILED,
        _ => EXIT_BAD_INPUT,
    }
}
