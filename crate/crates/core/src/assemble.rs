//! Rendering of selected context terms into the summary string.
//!
//! Grammar: included sections in the fixed order A, N_h, N_s, joined by
//! `"; "`; items inside a section joined by `", "`; an action pair renders as
//! `"verb noun"`. Empty sections keep their slot so parsing stays positional,
//! except that a context with nothing in any included section renders as `""`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{ActionContext, ActionPair, Category};

const SECTION_SEP: &str = "; ";
const ITEM_SEP: &str = ", ";

/// Build the context for one frame. Lists of categories not in `include`
/// are dropped.
pub fn assemble(
    action_terms: &[ActionPair],
    held: &[String],
    salient: &[String],
    include: &BTreeSet<Category>,
) -> ActionContext {
    let keep = |c: Category| include.contains(&c);
    let action_segments = if keep(Category::Action) {
        action_terms.to_vec()
    } else {
        Vec::new()
    };
    let held_objects = if keep(Category::Held) {
        held.to_vec()
    } else {
        Vec::new()
    };
    let salient_objects = if keep(Category::Salient) {
        salient.to_vec()
    } else {
        Vec::new()
    };
    let text = render(&action_segments, &held_objects, &salient_objects, include);
    ActionContext {
        action_segments,
        held_objects,
        salient_objects,
        text,
    }
}

pub fn render(
    action_terms: &[ActionPair],
    held: &[String],
    salient: &[String],
    include: &BTreeSet<Category>,
) -> String {
    let mut sections = Vec::new();
    let mut any = false;
    for c in Category::ALL.into_iter().filter(|c| include.contains(c)) {
        let items: Vec<String> = match c {
            Category::Action => action_terms.iter().map(ActionPair::to_string).collect(),
            Category::Held => held.to_vec(),
            Category::Salient => salient.to_vec(),
        };
        any |= !items.is_empty();
        sections.push(items.join(ITEM_SEP));
    }
    if any {
        sections.join(SECTION_SEP)
    } else {
        String::new()
    }
}

/// Inverse of [`render`] for the same `include` set.
pub fn parse_text(
    text: &str,
    include: &BTreeSet<Category>,
) -> Result<(Vec<ActionPair>, Vec<String>, Vec<String>)> {
    let mut action = Vec::new();
    let mut held = Vec::new();
    let mut salient = Vec::new();
    if text.is_empty() {
        return Ok((action, held, salient));
    }
    let sections: Vec<&str> = text.split(SECTION_SEP).collect();
    if sections.len() != include.len() {
        return Err(Error::Input(format!(
            "expected {} sections, found {} in {text:?}",
            include.len(),
            sections.len()
        )));
    }
    for (c, section) in include.iter().zip(sections) {
        let items: Vec<String> = if section.is_empty() {
            Vec::new()
        } else {
            section.split(ITEM_SEP).map(str::to_string).collect()
        };
        match c {
            Category::Action => {
                for item in items {
                    let (verb, noun) = item
                        .split_once(' ')
                        .ok_or_else(|| Error::Input(format!("action item {item:?} lacks a noun")))?;
                    action.push(ActionPair::new(verb, noun)?);
                }
            }
            Category::Held => held = items,
            Category::Salient => salient = items,
        }
    }
    Ok((action, held, salient))
}
