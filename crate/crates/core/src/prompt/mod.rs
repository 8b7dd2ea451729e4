//! In-context prompting: exemplar selection and prompt assembly.
//!
//! A prompt has three parts: task instructions, `k` worked exemplars
//! (condition followed by its CSS layout) and the query condition with the
//! layout left blank.

mod store;
mod template;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ChatExchange, ChatParams, Role};
use crate::grammar::serialize_layout;
use crate::layout::{Layout, RoomSpec};

pub use store::{Exemplar, ExemplarStore, ManifestEntry, Polarity, StoreError, STORE_SCHEMA};
pub use template::{PromptTemplate, TemplateError, DEFAULT_TASK_SPEC};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("need {needed} exemplars but only {available} are available")]
    InsufficientExemplars { needed: usize, available: usize },
    #[error("k must be at least 1")]
    ZeroK,
}

/// Generation input: the textual description plus room type and dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub description: String,
    pub room: RoomSpec,
}

impl Condition {
    pub fn new(description: impl Into<String>, room: RoomSpec) -> Self {
        Self { description: description.into(), room }
    }

    pub fn room_type(&self) -> &str {
        self.room.room_type()
    }
}

/// Squared difference of room lengths plus squared difference of widths.
pub fn condition_distance(a: &Condition, b: &Condition) -> f64 {
    let dl = a.room.length() - b.room.length();
    let dw = a.room.width() - b.room.width();
    dl * dl + dw * dw
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Retrieval,
    PosNeg,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "retrieval" => Ok(Self::Retrieval),
            "pos_neg" | "pos+neg" => Ok(Self::PosNeg),
            other => Err(format!("unknown strategy {other:?} (expected random, retrieval or pos_neg)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Random => "random",
            Self::Retrieval => "retrieval",
            Self::PosNeg => "pos_neg",
        })
    }
}

fn nearest<'a>(pool: Vec<&'a Exemplar>, query: &Condition, k: usize) -> Result<Vec<&'a Exemplar>, PromptError> {
    if pool.len() < k {
        return Err(PromptError::InsufficientExemplars { needed: k, available: pool.len() });
    }
    let mut scored: Vec<(f64, &Exemplar)> =
        pool.into_iter().map(|e| (condition_distance(&e.condition, query), e)).collect();
    // stable: equal distances keep store order
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(scored.into_iter().take(k).map(|(_, e)| e).collect())
}

/// Picks `k` exemplars for `query`.
///
/// Exemplars whose condition equals the query are never selected.
/// `PosNeg` returns `ceil(k/2)` nearest positives followed by `floor(k/2)`
/// nearest negatives.
pub fn select_exemplars<'a>(
    store: &'a ExemplarStore,
    query: &Condition,
    k: usize,
    strategy: Strategy,
    seed: u64,
) -> Result<Vec<&'a Exemplar>, PromptError> {
    if k == 0 {
        return Err(PromptError::ZeroK);
    }
    let pool = |polarity: Polarity| -> Vec<&'a Exemplar> {
        store.exemplars().iter().filter(|e| e.polarity == polarity && e.condition != *query).collect()
    };
    match strategy {
        Strategy::Retrieval => nearest(pool(Polarity::Positive), query, k),
        Strategy::Random => {
            let positives = pool(Polarity::Positive);
            if positives.len() < k {
                return Err(PromptError::InsufficientExemplars { needed: k, available: positives.len() });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(rand::seq::index::sample(&mut rng, positives.len(), k).into_iter().map(|i| positives[i]).collect())
        }
        Strategy::PosNeg => {
            let (n_pos, n_neg) = (k.div_ceil(2), k / 2);
            let mut chosen = nearest(pool(Polarity::Positive), query, n_pos)?;
            chosen.extend(nearest(pool(Polarity::Negative), query, n_neg)?);
            Ok(chosen)
        }
    }
}

/// Rendering options for [`build_prompt`].
#[derive(Debug, Clone, PartialEq)]
pub struct FormatOptions {
    pub template: PromptTemplate,
    /// Header placed above every negative exemplar.
    pub negative_marker: String,
}

impl Default for FormatOptions {
    fn default() -> Self {
        Self {
            template: PromptTemplate::default(),
            negative_marker:
                "Negative example (it contains out-of-bounds or overlapping objects; avoid layouts like this):"
                    .to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task_spec: String,
    pub exemplars: Vec<String>,
    pub query: String,
}

impl PromptBundle {
    /// Exemplars and query joined into the user turn.
    pub fn user_message(&self) -> String {
        let mut parts: Vec<&str> = self.exemplars.iter().map(String::as_str).collect();
        parts.push(&self.query);
        parts.join("\n")
    }

    /// Two-message exchange: task instructions as system, the rest as user.
    pub fn to_exchange(&self, params: ChatParams) -> ChatExchange {
        ChatExchange::new(params).with(Role::System, self.task_spec.clone()).with(Role::User, self.user_message())
    }

    /// The whole prompt as one text, in send order.
    pub fn to_text(&self) -> String {
        format!("{}\n{}", self.task_spec, self.user_message())
    }
}

fn render_condition(condition: &Condition, layout: Option<&Layout>) -> String {
    let room = &condition.room;
    let mut out = format!(
        "Room type: {}\nRoom dimensions: length {:.2}m, width {:.2}m\nDescription: {}\nLayout:\n",
        room.room_type(),
        room.length(),
        room.width(),
        condition.description.trim()
    );
    if let Some(layout) = layout {
        out.push_str(&serialize_layout(layout));
    }
    out
}

/// Assembles the prompt. Exemplars are rendered in the given order, the query
/// last with an empty layout.
pub fn build_prompt(query: &Condition, exemplars: &[&Exemplar], opts: &FormatOptions) -> PromptBundle {
    let exemplars = exemplars
        .iter()
        .map(|e| {
            let body = render_condition(&e.condition, Some(&e.layout));
            match e.polarity {
                Polarity::Positive => body,
                Polarity::Negative => format!("{}\n{body}", opts.negative_marker),
            }
        })
        .collect();
    PromptBundle { task_spec: opts.template.render(query.room_type()), exemplars, query: render_condition(query, None) }
}
