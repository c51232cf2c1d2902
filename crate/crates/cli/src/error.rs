use std::fmt;
use std::path::Path;

/// A failure with a stable category and exit code.
#[derive(Debug)]
pub struct CliError {
    pub category: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(category: &'static str, message: impl Into<String>) -> Self {
        CliError { category, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new("io", format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.category)
    }
}

pub fn exit_code(category: &str) -> i32 {
    match category {
        "usage" => 2,
        "io" => 3,
        "format" => 4,
        "empty-input" => 5,
        "invalid-input" => 6,
        "degenerate" => 7,
        "numerical" => 8,
        _ => 1,
    }
}

impl fmt::Display for CliError {
    /// Single line: `error[<category>]: <message>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {msg}", self.category)
    }
}

impl std::error::Error for CliError {}

impl From<equifair::Error> for CliError {
    fn from(e: equifair::Error) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the file path to library errors raised while handling it.
pub trait WithPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T> WithPath<T> for equifair::Result<T> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| {
            let cat = e.category();
            CliError::new(cat, format!("{}: {e}", path.display()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_map_to_distinct_codes() {
        let cats = ["usage", "io", "format", "empty-input", "invalid-input", "degenerate", "numerical"];
        let mut codes: Vec<i32> = cats.iter().map(|c| exit_code(c)).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), cats.len());
        assert!(!codes.contains(&0));
    }

    #[test]
    fn display_is_one_line() {
        let e = CliError::new("format", "bad\nthing");
        assert_eq!(e.to_string(), "error[format]: bad thing");
    }
}
