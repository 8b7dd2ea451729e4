use std::fs;
use std::path::Path;

use thiserror::Error;

/// Task instructions shipped with the crate.
pub const DEFAULT_TASK_SPEC: &str = include_str!("../../templates/task_spec.txt");

const PLACEHOLDERS: [&str; 1] = ["room_type"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemplateError {
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("unbalanced brace at byte {0}")]
    Unbalanced(usize),
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    RoomType,
}

/// Plain-text template with named placeholders. `{room_type}` expands to the
/// query's room type; `{{` and `}}` are literal braces.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pieces: Vec<Piece>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TASK_SPEC).expect("bundled template is valid")
    }
}

impl PromptTemplate {
    pub fn parse(text: &str) -> Result<Self, TemplateError> {
        let mut pieces = Vec::new();
        let mut literal = String::new();
        let mut rest = text;
        let mut offset = 0;
        while let Some(i) = rest.find(['{', '}']) {
            literal.push_str(&rest[..i]);
            let tail = &rest[i..];
            let consumed = if tail.starts_with("{{") {
                literal.push('{');
                2
            } else if tail.starts_with("}}") {
                literal.push('}');
                2
            } else if tail.starts_with('{') {
                let end = tail.find('}').ok_or(TemplateError::Unbalanced(offset + i))?;
                let name = &tail[1..end];
                if !PLACEHOLDERS.contains(&name) {
                    return Err(TemplateError::UnknownPlaceholder(name.to_string()));
                }
                pieces.push(Piece::Text(std::mem::take(&mut literal)));
                pieces.push(Piece::RoomType);
                end + 1
            } else {
                return Err(TemplateError::Unbalanced(offset + i));
            };
            offset += i + consumed;
            rest = &tail[consumed..];
        }
        literal.push_str(rest);
        pieces.push(Piece::Text(literal));
        pieces.retain(|p| !matches!(p, Piece::Text(t) if t.is_empty()));
        Ok(Self { pieces })
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = fs::read_to_string(path)
            .map_err(|e| TemplateError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn render(&self, room_type: &str) -> String {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Text(t) => t.as_str(),
                Piece::RoomType => room_type,
            })
            .collect()
    }
}
