use std::path::Path;

use serde_json::error::Category;

use super::model::TmkModel;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl From<serde_json::Error> for ParseError {
    fn from(err: serde_json::Error) -> Self {
        let (line, column) = (err.line(), err.column());
        let message = strip_position(&err.to_string());
        match err.classify() {
            Category::Data => ParseError::Schema { line, column, message },
            Category::Syntax | Category::Eof | Category::Io => ParseError::Syntax { line, column, message },
        }
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(idx) => msg[..idx].to_string(),
        None => msg.to_string(),
    }
}

/// Parses a `.tmk.json` document. Cross-references are not resolved here;
/// run [`validate_model`](super::validate_model) afterwards.
pub fn parse_model(text: &str) -> Result<TmkModel, ParseError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TmkModel, ParseError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| ParseError::Io { path: path.display().to_string(), source })?;
    parse_model(&text)
}

/// Deterministic pretty-printed rendering; re-parses to an equal model.
pub fn serialize_model(model: &TmkModel) -> String {
    let mut out = serde_json::to_string_pretty(model).expect("TMK models always serialize");
    out.push('\n');
    out
}
