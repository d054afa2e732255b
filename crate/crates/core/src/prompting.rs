//! Versioned classification prompts and the few-shot example bank.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::taxonomy::{normalize_exact, FailureType};

const TEMPLATE_V0: &str = include_str!("../templates/v0.txt");
const TEMPLATE_V1: &str = include_str!("../templates/v1.txt");
const TEMPLATE_V2: &str = include_str!("../templates/v2.txt");

const CAUSE_SLOT: &str = "{{cause}}";
const EXAMPLES_SLOT: &str = "{{examples}}";

/// Prompt iterations: bare instruction, closed label list, list plus
/// few-shot examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PromptVersion {
    V0,
    V1,
    #[default]
    V2,
}

impl PromptVersion {
    pub const ALL: [PromptVersion; 3] = [PromptVersion::V0, PromptVersion::V1, PromptVersion::V2];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVersion::V0 => "v0",
            PromptVersion::V1 => "v1",
            PromptVersion::V2 => "v2",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            PromptVersion::V0 => TEMPLATE_V0,
            PromptVersion::V1 => TEMPLATE_V1,
            PromptVersion::V2 => TEMPLATE_V2,
        }
    }

    pub fn uses_examples(self) -> bool {
        self == PromptVersion::V2
    }
}

impl fmt::Display for PromptVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v0" | "0" => Ok(PromptVersion::V0),
            "v1" | "1" => Ok(PromptVersion::V1),
            "v2" | "2" => Ok(PromptVersion::V2),
            other => Err(format!("unknown prompt version '{other}' (expected v0, v1 or v2)")),
        }
    }
}

impl Serialize for PromptVersion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PromptVersion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub cause: String,
    pub label: FailureType,
}

impl FewShotExample {
    pub fn new(cause: impl Into<String>, label: FailureType) -> Self {
        FewShotExample {
            cause: cause.into(),
            label,
        }
    }
}

const BUNDLED_EXAMPLES: [(&str, FailureType); 3] = [
    (
        "The faulty computer software in the Chinook helicopter was described as \"positively dangerous\" and had deficiencies that meant the pilot's full control of the engines \"could not be assured\".",
        FailureType::FunctionalityBug,
    ),
    (
        "Software bug causing Windows Mobile devices to incorrectly date incoming SMS messages to 2016.",
        FailureType::RegressionBug,
    ),
    (
        "Lack of Adobe Flash support on Apple's Safari browser for iPad, iPhone, and iPod Touch devices.",
        FailureType::NonSoftwareCause,
    ),
];

/// The published few-shot examples, in their published order.
pub fn bundled_example_bank() -> Vec<FewShotExample> {
    BUNDLED_EXAMPLES
        .iter()
        .map(|&(cause, label)| FewShotExample::new(cause, label))
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cause text is empty")]
    EmptyCause,
    #[error("prompt {0} needs at least one few-shot example")]
    MissingExamples(PromptVersion),
    #[error("cannot read example file {path}: {source}")]
    ExampleIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("example file line {line_no}: {reason}")]
    MalformedExample { line_no: u64, reason: String },
}

#[derive(Deserialize)]
struct RawExample {
    cause: String,
    label: String,
}

/// Reads an extension bank: JSONL of `{"cause": ..., "label": ...}`.
/// Labels must be exact canonical texts.
pub fn load_example_file(path: &Path) -> Result<Vec<FewShotExample>, PromptError> {
    let file = File::open(path).map_err(|source| PromptError::ExampleIo {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|source| PromptError::ExampleIo {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawExample = serde_json::from_str(&line).map_err(|e| PromptError::MalformedExample {
            line_no,
            reason: e.to_string(),
        })?;
        if raw.cause.trim().is_empty() {
            return Err(PromptError::MalformedExample {
                line_no,
                reason: "empty cause".into(),
            });
        }
        let label = normalize_exact(&raw.label).ok_or_else(|| PromptError::MalformedExample {
            line_no,
            reason: format!("label {:?} is not a canonical failure type", raw.label),
        })?;
        out.push(FewShotExample::new(raw.cause, label));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub version: PromptVersion,
    pub body: String,
    /// Byte offset of the target cause inside `body`.
    pub cause_offset: usize,
}

impl RenderedPrompt {
    pub fn cause(&self, cause_len: usize) -> &str {
        &self.body[self.cause_offset..self.cause_offset + cause_len]
    }
}

fn render_examples(examples: &[FewShotExample]) -> String {
    examples
        .iter()
        .map(|ex| format!("Cause: {}\n{}", ex.cause, ex.label.display_text()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Instantiates a prompt template for one cause. `examples` is only read
/// for V2.
pub fn render_prompt(
    version: PromptVersion,
    cause: &str,
    examples: &[FewShotExample],
) -> Result<RenderedPrompt, PromptError> {
    if cause.trim().is_empty() {
        return Err(PromptError::EmptyCause);
    }
    // Split on the cause slot first so that text substituted into the
    // prefix is never rescanned for placeholders.
    let (prefix, suffix) = version
        .template()
        .split_once(CAUSE_SLOT)
        .expect("every template has a cause slot");
    let prefix = if version.uses_examples() {
        if examples.is_empty() {
            return Err(PromptError::MissingExamples(version));
        }
        prefix.replacen(EXAMPLES_SLOT, &render_examples(examples), 1)
    } else {
        prefix.to_string()
    };
    let cause_offset = prefix.len();
    let mut body = prefix;
    body.push_str(cause);
    body.push_str(suffix);
    Ok(RenderedPrompt {
        version,
        body,
        cause_offset,
    })
}
