//! CSS-style layout text exchanged with the language model.
//!
//! ```text
//! document    = { prose | rule } ;
//! rule        = selector ws? "{" ws? { declaration } "}" ;
//! selector    = category-word { "-" category-word } "-" index ;
//! declaration = attribute ws? ":" ws? value ws? ";" ws? ;
//! attribute   = "width" | "depth" | "height" | "left" | "top" | "elevation" | "orientation" ;
//! value       = number "m"            (* width depth height left top elevation *)
//!             | number [ "deg" ] ;    (* orientation *)
//! number      = [ "-" ] digit { digit } [ "." digit { digit } ] ;
//! ```
//!
//! `left`, `top` and `elevation` are the box center (x, y, z). Serialized
//! lengths carry exactly two decimals; orientation is printed with trailing
//! zeros trimmed (`90`, `45.5`).
//!
//! Parsing is lenient about whatever surrounds the rules (prose, code fences,
//! blank lines) and strict about the rules themselves. A brace block counts as
//! a rule when it is preceded by an identifier and declares at least one of the
//! layout attributes; anything else is skipped as prose. Unknown attributes
//! inside a rule are ignored.

use std::collections::HashMap;

use thiserror::Error;

use crate::layout::{normalize_category, Layout, LayoutError, OrientedBox, RoomSpec, Vec3};

/// Attributes every rule must declare, in serialization order.
pub const REQUIRED_ATTRIBUTES: [&str; 7] = ["width", "depth", "height", "left", "top", "elevation", "orientation"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("rule {selector:?} is missing attribute {attribute:?}")]
    MissingAttribute { selector: String, attribute: String },
    #[error("rule {selector:?} has malformed {attribute:?} value {raw:?}")]
    MalformedValue { selector: String, attribute: String, raw: String },
    #[error("rule {selector:?} declares {attribute:?} more than once")]
    DuplicateAttribute { selector: String, attribute: String },
    #[error("rule {selector:?} describes an invalid box: {source}")]
    InvalidBox { selector: String, source: LayoutError },
    #[error("parsed boxes do not form a valid layout: {0}")]
    InvalidLayout(LayoutError),
    #[error("no layout rules found")]
    NoRulesFound,
}

/// One `selector { attr: value; ... }` block.
#[derive(Debug, Clone, PartialEq)]
pub struct CssRule {
    pub selector: String,
    pub declarations: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CssLayoutDocument {
    pub rules: Vec<CssRule>,
}

fn format_length(v: f64) -> String {
    format!("{v:.2}m")
}

fn format_degrees(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl CssLayoutDocument {
    pub fn from_layout(layout: &Layout) -> Self {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        let rules = layout
            .boxes()
            .iter()
            .map(|b| {
                let index = seen.entry(b.category()).or_insert(0);
                let selector = format!("{}-{}", b.category().replace(' ', "-"), index);
                *index += 1;
                let (c, s) = (b.center(), b.size());
                let declarations = [
                    format_length(s.w),
                    format_length(s.d),
                    format_length(s.h),
                    format_length(c.x),
                    format_length(c.y),
                    format_length(c.z),
                    format_degrees(b.orientation_deg()),
                ]
                .into_iter()
                .zip(REQUIRED_ATTRIBUTES)
                .map(|(value, attr)| (attr.to_string(), value))
                .collect();
                CssRule { selector, declarations }
            })
            .collect();
        Self { rules }
    }

    /// One rule per line, each line newline-terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.selector);
            out.push_str(" {");
            for (attr, value) in &rule.declarations {
                out.push(' ');
                out.push_str(attr);
                out.push_str(": ");
                out.push_str(value);
                out.push(';');
            }
            out.push_str(" }\n");
        }
        out
    }

    /// Extracts the rule blocks from arbitrary text.
    pub fn lex(text: &str) -> Self {
        let mut rules = Vec::new();
        let mut cursor = 0;
        while let Some(open) = text[cursor..].find('{').map(|i| cursor + i) {
            let rest = &text[open + 1..];
            let close = match rest.find(['{', '}']) {
                Some(i) if rest.as_bytes()[i] == b'}' => open + 1 + i,
                // unterminated or nested: restart at the next brace
                Some(i) => {
                    cursor = open + 1 + i;
                    continue;
                }
                None => break,
            };
            cursor = close + 1;
            let selector = trailing_identifier(&text[..open]);
            if selector.is_empty() || !selector.starts_with(|c: char| c.is_ascii_alphabetic()) {
                continue;
            }
            let declarations = split_declarations(&text[open + 1..close]);
            let is_rule = declarations.iter().any(|(attr, _)| REQUIRED_ATTRIBUTES.contains(&attr.as_str()));
            if is_rule {
                rules.push(CssRule { selector: selector.to_lowercase(), declarations });
            }
        }
        Self { rules }
    }

    /// Converts every rule to a box, strict on rule contents.
    pub fn to_layout(&self, room: &RoomSpec) -> Result<Layout, GrammarError> {
        if self.rules.is_empty() {
            return Err(GrammarError::NoRulesFound);
        }
        let boxes = self.rules.iter().map(rule_to_box).collect::<Result<Vec<_>, _>>()?;
        Layout::new(room.clone(), boxes).map_err(GrammarError::InvalidLayout)
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

fn trailing_identifier(prefix: &str) -> &str {
    let trimmed = prefix.trim_end();
    let start =
        trimmed.char_indices().rev().take_while(|(_, c)| is_ident_char(*c)).last().map_or(trimmed.len(), |(i, _)| i);
    &trimmed[start..]
}

fn split_declarations(body: &str) -> Vec<(String, String)> {
    body.split(';')
        .map(str::trim)
        .filter(|piece| !piece.is_empty())
        .map(|piece| match piece.split_once(':') {
            Some((attr, value)) => (attr.trim().to_lowercase(), value.trim().to_string()),
            None => (piece.to_lowercase(), String::new()),
        })
        .collect()
}

/// Splits `double-bed-1` into the category `double bed`.
fn category_of(selector: &str) -> Option<String> {
    let base = match selector.rsplit_once('-') {
        Some((head, index)) if !head.is_empty() && index.bytes().all(|b| b.is_ascii_digit()) && !index.is_empty() => {
            head
        }
        _ => selector,
    };
    normalize_category(base)
}

fn parse_number(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    let ok = !raw.is_empty() && raw.bytes().all(|b| b.is_ascii_digit() || b == b'.' || b == b'-' || b == b'+');
    ok.then(|| raw.parse::<f64>().ok()).flatten().filter(|v| v.is_finite())
}

fn rule_to_box(rule: &CssRule) -> Result<OrientedBox, GrammarError> {
    let selector = &rule.selector;
    let mut values: HashMap<&str, &str> = HashMap::new();
    for (attr, value) in &rule.declarations {
        let Some(known) = REQUIRED_ATTRIBUTES.iter().find(|a| **a == attr.as_str()) else {
            continue;
        };
        if values.insert(known, value.as_str()).is_some() {
            return Err(GrammarError::DuplicateAttribute { selector: selector.clone(), attribute: attr.clone() });
        }
    }
    let mut get = |attr: &'static str| -> Result<f64, GrammarError> {
        let raw = values.remove(attr).ok_or_else(|| GrammarError::MissingAttribute {
            selector: selector.clone(),
            attribute: attr.to_string(),
        })?;
        let number = if attr == "orientation" {
            let r = raw.trim_end();
            r.strip_suffix("deg").or_else(|| r.strip_suffix('°')).unwrap_or(r)
        } else {
            raw.trim_end().strip_suffix('m').unwrap_or("")
        };
        parse_number(number).ok_or_else(|| GrammarError::MalformedValue {
            selector: selector.clone(),
            attribute: attr.to_string(),
            raw: raw.to_string(),
        })
    };
    let mut numbers = [0.0; 7];
    for (slot, value) in numbers.iter_mut().zip(REQUIRED_ATTRIBUTES.map(&mut get)) {
        *slot = value?;
    }
    let [w, d, h, x, y, z, o] = numbers;
    let category = category_of(selector).ok_or_else(|| GrammarError::InvalidBox {
        selector: selector.clone(),
        source: LayoutError::InvalidCategory(selector.clone()),
    })?;
    OrientedBox::new(&category, Vec3::new(x, y, z), [w, h, d], o)
        .map_err(|source| GrammarError::InvalidBox { selector: selector.clone(), source })
}

/// Renders a layout as CSS-style rules, one per box in layout order.
pub fn serialize_layout(layout: &Layout) -> String {
    CssLayoutDocument::from_layout(layout).to_text()
}

/// Recovers a layout from model output.
pub fn parse_layout(text: &str, room: &RoomSpec) -> Result<Layout, GrammarError> {
    CssLayoutDocument::lex(text).to_layout(room)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room() -> RoomSpec {
        RoomSpec::new("bedroom", 4.0, 3.6).unwrap()
    }

    fn wardrobe() -> OrientedBox {
        OrientedBox::new("wardrobe", [0.31, 1.37, 1.15], [2.02, 2.30, 0.62], 90.0).unwrap()
    }

    const WARDROBE_RULE: &str = "wardrobe-0 { width: 2.02m; depth: 0.62m; height: 2.30m; left: 0.31m; top: 1.37m; elevation: 1.15m; orientation: 90; }";

    #[test]
    fn serializes_pinned_grammar() {
        assert_eq!(serialize_layout(&Layout::empty(room())), "");
        let layout = Layout::new(room(), vec![wardrobe()]).unwrap();
        assert_eq!(serialize_layout(&layout), format!("{WARDROBE_RULE}\n"));
    }

    #[test]
    fn indexes_per_category() {
        let bed = |x: f64| OrientedBox::new("double bed", [x, 1.5, 0.5], [1.6, 1.0, 2.0], 0.0).unwrap();
        let layout = Layout::new(room(), vec![bed(1.0), wardrobe(), bed(3.0)]).unwrap();
        let doc = CssLayoutDocument::from_layout(&layout);
        let selectors: Vec<_> = doc.rules.iter().map(|r| r.selector.as_str()).collect();
        assert_eq!(selectors, ["double-bed-0", "wardrobe-0", "double-bed-1"]);
        assert_eq!(parse_layout(&doc.to_text(), &room()).unwrap(), layout);
    }

    #[test]
    fn orientation_formatting() {
        assert_eq!(format_degrees(0.0), "0");
        assert_eq!(format_degrees(90.0), "90");
        assert_eq!(format_degrees(45.5), "45.5");
        assert_eq!(format_degrees(12.34), "12.34");
        assert_eq!(format_degrees(359.999), "360");
    }

    #[test]
    fn skips_prose_and_fences() {
        let text =
            format!("Here is the layout:\n```css\n{WARDROBE_RULE}\n```\nLet me know if you need {{anything}} else.");
        let layout = parse_layout(&text, &room()).unwrap();
        assert_eq!(layout.boxes(), &[wardrobe()]);
    }

    #[test]
    fn accepts_loose_spacing_and_units() {
        let text = "Wardrobe-0{width:2.02m;depth:0.62 m ;height: 2.30m;left:0.31m;top:1.37m;elevation:1.15m;orientation:90deg;color: red}";
        let layout = parse_layout(text, &room()).unwrap();
        assert_eq!(layout.boxes(), &[wardrobe()]);
    }

    #[test]
    fn missing_orientation() {
        let text =
            "wardrobe-0 { width: 2.02m; depth: 0.62m; height: 2.30m; left: 0.31m; top: 1.37m; elevation: 1.15m; }";
        assert_eq!(
            parse_layout(text, &room()),
            Err(GrammarError::MissingAttribute { selector: "wardrobe-0".into(), attribute: "orientation".into() })
        );
    }

    #[test]
    fn malformed_values() {
        let bad_unit = WARDROBE_RULE.replace("2.02m", "202cm");
        assert!(matches!(
            parse_layout(&bad_unit, &room()),
            Err(GrammarError::MalformedValue { attribute, .. }) if attribute == "width"
        ));
        let no_unit = WARDROBE_RULE.replace("0.31m", "0.31");
        assert!(matches!(parse_layout(&no_unit, &room()), Err(GrammarError::MalformedValue { .. })));
        let nan = WARDROBE_RULE.replace("orientation: 90", "orientation: NaN");
        assert!(matches!(parse_layout(&nan, &room()), Err(GrammarError::MalformedValue { .. })));
        let dup = WARDROBE_RULE.replace("orientation: 90;", "orientation: 90; width: 1.00m;");
        assert!(matches!(parse_layout(&dup, &room()), Err(GrammarError::DuplicateAttribute { .. })));
        let below = WARDROBE_RULE.replace("elevation: 1.15m", "elevation: 0.00m");
        assert!(matches!(parse_layout(&below, &room()), Err(GrammarError::InvalidBox { .. })));
    }

    #[test]
    fn no_rules() {
        assert_eq!(parse_layout("", &room()), Err(GrammarError::NoRulesFound));
        assert_eq!(parse_layout("I cannot help with {that}.", &room()), Err(GrammarError::NoRulesFound));
        assert_eq!(parse_layout("bed-0 { width: 1m;", &room()), Err(GrammarError::NoRulesFound));
    }

    #[test]
    fn nested_braces_do_not_swallow_rules() {
        let text = format!("note {{ unfinished\n{WARDROBE_RULE}");
        assert_eq!(parse_layout(&text, &room()).unwrap().boxes(), &[wardrobe()]);
    }

    #[test]
    fn category_recovery() {
        assert_eq!(category_of("double-bed-12").as_deref(), Some("double bed"));
        assert_eq!(category_of("nightstand").as_deref(), Some("nightstand"));
        assert_eq!(category_of("shelf-2-0").as_deref(), Some("shelf 2"));
        assert_eq!(category_of("---"), None);
    }
}
