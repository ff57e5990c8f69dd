use std::fmt;

/// Failure of one CLI run, with its exit status and reason code.
#[derive(Debug)]
pub enum CliError {
    /// Numerical or domain failure from the library.
    Domain(pinney::Error),
    /// Bad flags, config file or frequency input.
    Config(String),
    Io(String),
    /// A computation finished but missed its certification threshold.
    Verification(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn reason_code(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.reason_code(),
            CliError::Config(_) => "CONFIG_ERROR",
            CliError::Io(_) => "IO_ERROR",
            CliError::Verification(_) => "VERIFICATION_FAILED",
        }
    }

    /// 1 for domain and verification failures, 2 for config and I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(
                pinney::Error::ConfigMismatch(_) | pinney::Error::InvalidTable(_) | pinney::Error::InvalidParameter(_),
            ) => 2,
            CliError::Domain(_) | CliError::Verification(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<pinney::Error> for CliError {
    fn from(e: pinney::Error) -> Self {
        CliError::Domain(e)
    }
}
