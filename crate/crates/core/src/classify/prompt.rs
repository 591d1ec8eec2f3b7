use serde::{Deserialize, Serialize};

use super::{EthicalConcernCategory, Taxonomy};
use crate::ingest::WindowedText;

/// Default task prompt. Bracketed text marks wording that has to be
/// supplied by the operator.
pub const DEFAULT_TASK_PROMPT: &str = include_str!("../../data/category_prompt.txt");

pub const POST_HEADER: &str = "\n\nPost:\n";
pub const DEFINITIONS_HEADER: &str = "\n\nCategories and definitions:\n";

/// The three parts of a categorization request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptText {
    pub task_instructions: String,
    pub category_definitions: String,
    pub windowed_post: String,
}

impl PromptText {
    /// Task prompt, then the post, then the category definitions at the end.
    pub fn render(&self) -> String {
        let mut s = String::with_capacity(
            self.task_instructions.len()
                + self.category_definitions.len()
                + self.windowed_post.len()
                + POST_HEADER.len()
                + DEFINITIONS_HEADER.len(),
        );
        s.push_str(&self.task_instructions);
        s.push_str(POST_HEADER);
        s.push_str(&self.windowed_post);
        s.push_str(DEFINITIONS_HEADER);
        s.push_str(&self.category_definitions);
        s
    }
}

fn definition_block(taxonomy: &Taxonomy) -> String {
    let mut s = String::new();
    for (c, def) in taxonomy.iter() {
        s.push_str("- ");
        s.push_str(c.name());
        s.push_str(": ");
        s.push_str(def.trim());
        s.push('\n');
    }
    s.push_str("- ");
    s.push_str(EthicalConcernCategory::NoneLabel.name());
    s.push_str(": None of the categories above applies.\n");
    s
}

/// Builds the categorization prompt for one windowed post.
pub fn assemble_category_prompt(windowed: &WindowedText, taxonomy: &Taxonomy, task_prompt: &str) -> PromptText {
    PromptText {
        task_instructions: task_prompt.trim_end().to_string(),
        category_definitions: definition_block(taxonomy),
        windowed_post: windowed.text.clone(),
    }
}
