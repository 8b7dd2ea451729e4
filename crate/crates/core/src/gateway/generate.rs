use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChatParams, Gateway, GatewayError, Role};
use crate::geometry::{validate_layout, Violation, ViolationKind};
use crate::grammar::{parse_layout, CssLayoutDocument, GrammarError};
use crate::layout::Layout;
use crate::prompt::{Condition, PromptBundle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no usable layout after {attempts} attempt(s): {source}")]
    Grammar { attempts: u32, source: GrammarError },
}

/// What happened while producing a layout. Residual violations are reported,
/// not treated as failures.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub attempts: u32,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parse_errors: Vec<String>,
}

fn repair_request(layout: &Layout, violations: &[Violation]) -> String {
    let doc = CssLayoutDocument::from_layout(layout);
    let name = |i: usize| doc.rules[i].selector.as_str();
    let room = layout.room();
    let mut out = String::from("The layout violates these constraints:\n");
    for v in violations {
        let line = match v.kind {
            ViolationKind::OutOfBounds => format!(
                "- {} extends beyond the floor plan ({:.2}m x {:.2}m)\n",
                name(v.boxes[0]),
                room.length(),
                room.width()
            ),
            ViolationKind::Overlap => format!("- {} overlaps {}\n", name(v.boxes[0]), name(v.boxes[1])),
        };
        out.push_str(&line);
    }
    out.push_str("Rewrite the complete layout so that no objects overlap and every object stays inside the room. Answer with the CSS rules only.");
    out
}

/// Queries the model with `bundle` and parses its answer.
///
/// With `repair_attempts > 0`, a layout that fails validation (or an answer
/// that fails to parse) is sent back with the problems listed, up to that
/// many extra rounds. The last successfully parsed layout is returned.
pub fn generate_layout(
    query: &Condition,
    bundle: &PromptBundle,
    gateway: &Gateway,
    params: ChatParams,
    repair_attempts: u32,
    tolerance: f64,
) -> Result<(Layout, Diagnostics), GenerateError> {
    let mut exchange = bundle.to_exchange(params);
    let mut diagnostics = Diagnostics::default();
    let mut best: Option<(Layout, Vec<Violation>)> = None;
    let mut last_error = GrammarError::NoRulesFound;
    for round in 0..=repair_attempts {
        diagnostics.attempts = round + 1;
        let reply = gateway.complete(&exchange)?;
        let follow_up = match parse_layout(&reply, &query.room) {
            Ok(layout) => {
                let violations = validate_layout(&layout, tolerance);
                let done = violations.is_empty();
                let message = repair_request(&layout, &violations);
                best = Some((layout, violations));
                if done {
                    break;
                }
                message
            }
            Err(e) => {
                let message =
                    format!("Your answer could not be used: {e}. Answer with the complete layout as CSS rules only.");
                diagnostics.parse_errors.push(e.to_string());
                last_error = e;
                message
            }
        };
        if round < repair_attempts {
            exchange.push(Role::Assistant, reply).push(Role::User, follow_up);
        }
    }
    match best {
        Some((layout, violations)) => {
            diagnostics.violations = violations;
            Ok((layout, diagnostics))
        }
        None => Err(GenerateError::Grammar { attempts: diagnostics.attempts, source: last_error }),
    }
}
