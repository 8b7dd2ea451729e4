//! End-to-end generation shared by the command line and the HTTP service:
//! exemplar selection, prompt assembly, the model call and validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{generate_layout, ChatParams, Diagnostics, Gateway, GenerateError};
use crate::geometry::DEFAULT_TOLERANCE;
use crate::layout::{Layout, LayoutDocument, LayoutError, RoomSpec};
use crate::prompt::{
    build_prompt, select_exemplars, Condition, ExemplarStore, FormatOptions, PromptBundle, PromptError, Strategy,
};

fn default_k() -> usize {
    8
}

fn default_strategy() -> Strategy {
    Strategy::Retrieval
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// One generation job. Field names double as the `/v1/generate` body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub room_type: String,
    pub length: f64,
    pub width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    pub description: String,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_strategy")]
    pub strategy: Strategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub repair_attempts: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl GenerateRequest {
    pub fn new(room_type: &str, length: f64, width: f64, description: &str) -> Self {
        Self {
            room_type: room_type.into(),
            length,
            width,
            height: None,
            description: description.into(),
            k: default_k(),
            strategy: default_strategy(),
            seed: 0,
            repair_attempts: 0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn condition(&self) -> Result<Condition, LayoutError> {
        let room = match self.height {
            Some(h) => RoomSpec::with_height(&self.room_type, self.length, self.width, h)?,
            None => RoomSpec::new(&self.room_type, self.length, self.width)?,
        };
        Ok(Condition::new(self.description.clone(), room))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid room: {0}")]
    Room(#[from] LayoutError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
}

/// Diagnostics plus which exemplars were shown to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub strategy: Strategy,
    pub exemplars: Vec<String>,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub condition: Condition,
    pub prompt: PromptBundle,
    pub layout: Layout,
    pub report: GenerationReport,
}

impl Generation {
    /// The interchange document written by the CLI and returned by the service.
    pub fn document(&self) -> LayoutDocument {
        let mut doc = LayoutDocument::from_layout(&self.layout);
        doc.description = Some(self.condition.description.clone());
        doc
    }
}

/// Selects exemplars and renders the prompt without calling the model.
pub fn prepare(
    store: &ExemplarStore,
    request: &GenerateRequest,
    format: &FormatOptions,
) -> Result<(Condition, Vec<String>, PromptBundle), PipelineError> {
    let condition = request.condition()?;
    let chosen = select_exemplars(store, &condition, request.k, request.strategy, request.seed)?;
    let ids = chosen.iter().map(|e| e.id.clone()).collect();
    let prompt = build_prompt(&condition, &chosen, format);
    Ok((condition, ids, prompt))
}

pub fn generate(
    store: &ExemplarStore,
    request: &GenerateRequest,
    format: &FormatOptions,
    gateway: &Gateway,
) -> Result<Generation, PipelineError> {
    let (condition, exemplars, prompt) = prepare(store, request, format)?;
    let (layout, diagnostics) = generate_layout(
        &condition,
        &prompt,
        gateway,
        ChatParams::layout(),
        request.repair_attempts,
        request.tolerance,
    )?;
    let report = GenerationReport { strategy: request.strategy, exemplars, diagnostics };
    Ok(Generation { condition, prompt, layout, report })
}
