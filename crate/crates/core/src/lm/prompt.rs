//! Prompt templates for the word-association task.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Language;
use crate::{Error, Result};

/// Prompting paradigm: plain task prompt, culture-specific persona, or
/// persona plus a cross-culture contrast instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateMode {
    Base,
    Csp,
    Cct,
}

impl TemplateMode {
    pub fn name(self) -> &'static str {
        match self {
            TemplateMode::Base => "base",
            TemplateMode::Csp => "csp",
            TemplateMode::Cct => "cct",
        }
    }
}

impl fmt::Display for TemplateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(TemplateMode::Base),
            "csp" => Ok(TemplateMode::Csp),
            "cct" => Ok(TemplateMode::Cct),
            other => Err(Error::Invalid(format!("unknown template mode {other:?}"))),
        }
    }
}

const EN_BASE: &str = "When \"{cue_word}\" is mentioned, people often think of the following words:";
const EN_PERSONA: &str = "You are a person with {culture} cultural background.";
const EN_TASK: &str = "You will be performing a word association task. Please directly answer the association word.";
const EN_CONTRAST: &str =
    "Before you respond, think about how {culture} culture is different from {cultures} cultures.";

const ZH_BASE: &str = "当提起\"{cue_word}\",人们往往会想到的词是:";
const ZH_PERSONA: &str = "你是一个中国文化背景的人。";
const ZH_TASK: &str = "你将进行词联想任务，请直接说出你联想到的词。";
const ZH_CONTRAST: &str = "在回答之前, 请你注意中国文化与美国、英国、大洋洲文化的不同。";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub mode: TemplateMode,
    pub language: Language,
}

impl PromptTemplate {
    pub fn new(mode: TemplateMode, language: Language) -> Self {
        PromptTemplate { mode, language }
    }

    /// Template body with `{cue_word}`, `{culture}` and `{cultures}` slots.
    pub fn body(&self) -> String {
        let (base, persona, task, contrast, sep) = match self.language {
            Language::En => (EN_BASE, EN_PERSONA, EN_TASK, EN_CONTRAST, " "),
            Language::Zh => (ZH_BASE, ZH_PERSONA, ZH_TASK, ZH_CONTRAST, ""),
        };
        match self.mode {
            TemplateMode::Base => base.to_string(),
            TemplateMode::Csp => [persona, task, base].join(sep),
            TemplateMode::Cct => [persona, task, contrast, base].join(sep),
        }
    }

    /// Fills the template by exact substitution. CSP and CCT need `culture`;
    /// CCT also needs `others` (joined with ", ").
    pub fn render(&self, cue: &str, culture: Option<&str>, others: Option<&[&str]>) -> Result<String> {
        let mut text = self.body();
        if matches!(self.mode, TemplateMode::Csp | TemplateMode::Cct) {
            let c = culture.ok_or(Error::MissingSlot {
                mode: self.mode.name(),
                slot: "culture",
            })?;
            if self.mode == TemplateMode::Cct {
                let o = others.ok_or(Error::MissingSlot {
                    mode: "cct",
                    slot: "cultures",
                })?;
                text = text.replace("{cultures}", &o.join(", "));
            }
            text = text.replace("{culture}", c);
        }
        Ok(text.replace("{cue_word}", cue))
    }
}
