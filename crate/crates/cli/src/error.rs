use std::fmt;

/// Machine-parsable failure class printed by the binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Io,
    MissingArtifacts,
    Numerical,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Config => "config",
            Self::Io => "io",
            Self::MissingArtifacts => "missing-artifacts",
            Self::Numerical => "numerical",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::Config => 2,
            Self::Io => 3,
            Self::MissingArtifacts => 4,
            Self::Numerical => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self { category, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self::new(Category::MissingArtifacts, message)
    }

    /// Single line `error[category]: message`.
    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.category.as_str(), self.message.replace('\n', " "))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.line())
    }
}

impl std::error::Error for CliError {}

impl From<nsctl_core::Error> for CliError {
    fn from(e: nsctl_core::Error) -> Self {
        use nsctl_core::Error as E;
        let category = match &e {
            E::Io(_) => Category::Io,
            E::Format(_) => Category::Io,
            E::InvalidGrid(_) | E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::MissingTarget(_) => Category::Config,
            _ => Category::Numerical,
        };
        Self::new(category, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Category::Io, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Category::Config, e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
