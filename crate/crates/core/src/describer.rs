//! Rule-based layout descriptions and an optional model paraphrase.
//!
//! Each box yields one sentence naming its grid cell and its yaw quantized to
//! the nearest multiple of 90 degrees.

use serde::{Deserialize, Serialize};

use crate::gateway::{ChatExchange, ChatParams, Gateway, GatewayError, Role};
use crate::geometry::{grid_cell_of, GridCell};
use crate::layout::Layout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionSource {
    RuleBased,
    Paraphrased,
}

/// One sentence per box, in layout order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub sentences: Vec<String>,
    /// Category of the box each sentence describes.
    pub categories: Vec<String>,
    pub source: DescriptionSource,
}

impl Description {
    pub fn text(&self) -> String {
        self.sentences.join(" ")
    }
}

/// Quantized yaw phrases for 0, 90, 180 and 270 degrees.
pub const ORIENTATION_PHRASES: [&str; 4] = [
    "a straight orientation facing the front",
    "a perpendicular orientation",
    "a straight orientation facing the back",
    "a perpendicular orientation, mirrored",
];

pub fn orientation_phrase(yaw_deg: f64) -> &'static str {
    let quarter = (yaw_deg.rem_euclid(360.0) / 90.0).round() as usize % 4;
    ORIENTATION_PHRASES[quarter]
}

pub fn cell_phrase(cell: GridCell) -> String {
    match cell {
        GridCell::Center => "center".to_string(),
        c if c.is_corner() => format!("{} corner", c.name()),
        c => format!("{} side", c.name()),
    }
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "An",
        _ => "A",
    }
}

/// Template sentences for every box.
pub fn describe(layout: &Layout) -> Description {
    let (sentences, categories) = layout
        .boxes()
        .iter()
        .map(|b| {
            let category = b.category();
            let sentence = format!(
                "{} {category} is placed at the {} of the room, with {}.",
                article(category),
                cell_phrase(grid_cell_of(b, layout.room())),
                orientation_phrase(b.orientation_deg())
            );
            (sentence, category.to_string())
        })
        .unzip();
    Description { sentences, categories, source: DescriptionSource::RuleBased }
}

pub const PARAPHRASE_INSTRUCTION: &str = "Paraphrase each of the following sentences describing objects in a room. \
Keep the meaning, the object names, their positions and their orientations. \
Write exactly one sentence per line, in the same order, with no numbering and no other text.";

fn accept(original: &Description, reply: &str) -> Option<Vec<String>> {
    let lines: Vec<String> = reply.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if lines.len() != original.sentences.len() {
        return None;
    }
    let mentions_all =
        lines.iter().zip(&original.categories).all(|(line, category)| line.to_lowercase().contains(category.as_str()));
    mentions_all.then_some(lines)
}

/// Rewrites the template sentences through the model.
///
/// The reply must keep one line per object and mention each object's category
/// on its line; otherwise the original description comes back unchanged.
/// Without a gateway the original is returned as-is.
pub fn paraphrase(description: &Description, gateway: Option<&Gateway>) -> Result<Description, GatewayError> {
    let Some(gateway) = gateway else {
        return Ok(description.clone());
    };
    if description.sentences.is_empty() {
        return Ok(description.clone());
    }
    let exchange = ChatExchange::new(ChatParams::paraphrase())
        .with(Role::System, PARAPHRASE_INSTRUCTION)
        .with(Role::User, description.sentences.join("\n"));
    let reply = gateway.complete(&exchange)?;
    match accept(description, &reply) {
        Some(sentences) => Ok(Description {
            sentences,
            categories: description.categories.clone(),
            source: DescriptionSource::Paraphrased,
        }),
        None => {
            log::warn!("paraphrase rejected: object count or category mentions changed; keeping template text");
            Ok(description.clone())
        }
    }
}
