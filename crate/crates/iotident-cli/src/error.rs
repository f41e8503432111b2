//! Error classification for exit codes: 1 config, 2 data, 3 internal.

use std::fmt;

#[derive(Debug)]
pub enum CmdError {
    /// Bad flags, config values, or missing configured inputs.
    Config(anyhow::Error),
    /// Malformed captures, CSVs, models or schema mismatches.
    Data(anyhow::Error),
    /// Everything else (I/O failures mid-run, internal bugs).
    Internal(anyhow::Error),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 1,
            CmdError::Data(_) => 2,
            CmdError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, err) = match self {
            CmdError::Config(e) => ("config error", e),
            CmdError::Data(e) => ("data error", e),
            CmdError::Internal(e) => ("internal error", e),
        };
        write!(f, "{kind}: {err:#}")
    }
}

pub trait IntoCmdError<T> {
    fn config_err(self) -> Result<T, CmdError>;
    fn data_err(self) -> Result<T, CmdError>;
    fn internal_err(self) -> Result<T, CmdError>;
}

impl<T, E: Into<anyhow::Error>> IntoCmdError<T> for Result<T, E> {
    fn config_err(self) -> Result<T, CmdError> {
        self.map_err(|e| CmdError::Config(e.into()))
    }

    fn data_err(self) -> Result<T, CmdError> {
        self.map_err(|e| CmdError::Data(e.into()))
    }

    fn internal_err(self) -> Result<T, CmdError> {
        self.map_err(|e| CmdError::Internal(e.into()))
    }
}
