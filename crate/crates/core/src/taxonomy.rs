//! Failure-type taxonomy, industry vocabulary and label normalization.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The closed set of ten failure types a cause can be assigned to.
///
/// Declaration order follows the list given to the model in the prompts.
/// Charts and tables use [`canonical_order`] instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureType {
    DataBreach,
    FunctionalityBug,
    UiUxBug,
    RegressionBug,
    Outage,
    SecurityVulnerability,
    PerformanceIssue,
    IntegrationIssue,
    NonSoftwareCause,
    Other,
}

/// Figure axis order shared by every per-industry chart.
const CANONICAL_ORDER: [FailureType; 10] = [
    FailureType::SecurityVulnerability,
    FailureType::FunctionalityBug,
    FailureType::DataBreach,
    FailureType::Outage,
    FailureType::IntegrationIssue,
    FailureType::Other,
    FailureType::PerformanceIssue,
    FailureType::UiUxBug,
    FailureType::RegressionBug,
    FailureType::NonSoftwareCause,
];

impl FailureType {
    pub const COUNT: usize = 10;

    /// All variants in prompt-list order.
    pub const ALL: [FailureType; 10] = [
        FailureType::DataBreach,
        FailureType::FunctionalityBug,
        FailureType::UiUxBug,
        FailureType::RegressionBug,
        FailureType::Outage,
        FailureType::SecurityVulnerability,
        FailureType::PerformanceIssue,
        FailureType::IntegrationIssue,
        FailureType::NonSoftwareCause,
        FailureType::Other,
    ];

    pub const fn display_text(self) -> &'static str {
        match self {
            FailureType::DataBreach => "Data Breach",
            FailureType::FunctionalityBug => "Functionality Bug",
            FailureType::UiUxBug => "UI/UX Bug",
            FailureType::RegressionBug => "Regression Bug",
            FailureType::Outage => "Outage",
            FailureType::SecurityVulnerability => "Security Vulnerability",
            FailureType::PerformanceIssue => "Performance Issue",
            FailureType::IntegrationIssue => "Integration Issue",
            FailureType::NonSoftwareCause => "Non-Software Cause",
            FailureType::Other => "Other",
        }
    }

    /// Position of this variant in [`canonical_order`]; used to index
    /// matrices and count arrays.
    pub const fn canonical_index(self) -> usize {
        match self {
            FailureType::SecurityVulnerability => 0,
            FailureType::FunctionalityBug => 1,
            FailureType::DataBreach => 2,
            FailureType::Outage => 3,
            FailureType::IntegrationIssue => 4,
            FailureType::Other => 5,
            FailureType::PerformanceIssue => 6,
            FailureType::UiUxBug => 7,
            FailureType::RegressionBug => 8,
            FailureType::NonSoftwareCause => 9,
        }
    }

    pub fn from_canonical_index(index: usize) -> Option<FailureType> {
        CANONICAL_ORDER.get(index).copied()
    }

    /// Lowercased spellings accepted as an exact match for this variant.
    fn accepted_spellings(self) -> &'static [&'static str] {
        match self {
            FailureType::DataBreach => &["data breach"],
            FailureType::FunctionalityBug => &["functionality bug"],
            FailureType::UiUxBug => &["ui/ux bug", "ui-ux bug", "ui ux bug"],
            FailureType::RegressionBug => &["regression bug"],
            FailureType::Outage => &["outage"],
            FailureType::SecurityVulnerability => &["security vulnerability"],
            FailureType::PerformanceIssue => &["performance issue"],
            FailureType::IntegrationIssue => &["integration issue"],
            FailureType::NonSoftwareCause => &["non-software cause"],
            FailureType::Other => &["other"],
        }
    }
}

impl fmt::Display for FailureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_text())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a canonical failure type: {0:?}")]
pub struct UnknownFailureType(pub String);

/// Strict parse: exact-match rules only, no substring rescue.
impl FromStr for FailureType {
    type Err = UnknownFailureType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_exact(s).ok_or_else(|| UnknownFailureType(s.to_string()))
    }
}

impl Serialize for FailureType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.display_text())
    }
}

impl<'de> Deserialize<'de> for FailureType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// The ten failure types in chart axis order.
pub fn canonical_order() -> [FailureType; 10] {
    CANONICAL_ORDER
}

/// Outcome of [`normalize_label`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizedLabel {
    pub label: FailureType,
    /// Set when the reply was not an exact label: either rescued from
    /// surrounding prose or unrecognised and mapped to `Other`.
    pub non_canonical: bool,
}

fn strip_reply(raw: &str) -> &str {
    raw.trim()
        .trim_end_matches(['.', '!'])
        .trim_end()
}

/// Exact-match rules only: trim, drop trailing `.`/`!`, compare
/// case-insensitively against the canonical texts.
pub fn normalize_exact(raw: &str) -> Option<FailureType> {
    let folded = strip_reply(raw).to_lowercase();
    FailureType::ALL
        .into_iter()
        .find(|ft| ft.accepted_spellings().contains(&folded.as_str()))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// True when `needle` occurs in `haystack` with no alphanumeric character
/// directly before or after it.
fn contains_bounded(haystack: &str, needle: &str) -> bool {
    haystack.match_indices(needle).any(|(start, m)| {
        let before = haystack[..start].chars().next_back();
        let after = haystack[start + m.len()..].chars().next();
        !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
    })
}

/// Maps a free-text backend reply onto the taxonomy. Never fails: replies
/// that name zero or several labels degrade to `Other` with the
/// non-canonical flag set.
pub fn normalize_label(raw: &str) -> NormalizedLabel {
    if let Some(label) = normalize_exact(raw) {
        return NormalizedLabel {
            label,
            non_canonical: false,
        };
    }
    let folded = strip_reply(raw).to_lowercase();
    let mut hits = FailureType::ALL.into_iter().filter(|ft| {
        ft.accepted_spellings()
            .iter()
            .any(|spelling| contains_bounded(&folded, spelling))
    });
    let label = match (hits.next(), hits.next()) {
        (Some(only), None) => only,
        _ => FailureType::Other,
    };
    NormalizedLabel {
        label,
        non_canonical: true,
    }
}

/// An industry name. Comparison ignores case and surrounding whitespace;
/// the first-seen spelling is kept for display.
#[derive(Debug, Clone)]
pub struct Industry {
    name: String,
    key: String,
}

pub const UNKNOWN_INDUSTRY: &str = "Unknown";

impl Industry {
    /// Returns `None` for a blank name.
    pub fn new(name: &str) -> Option<Industry> {
        let name = name.trim();
        if name.is_empty() {
            return None;
        }
        Some(Industry {
            name: name.to_string(),
            key: name.to_lowercase(),
        })
    }

    /// Blank names fall back to the `Unknown` industry.
    pub fn or_unknown(name: &str) -> Industry {
        Industry::new(name).unwrap_or_else(Industry::unknown)
    }

    pub fn unknown() -> Industry {
        Industry {
            name: UNKNOWN_INDUSTRY.to_string(),
            key: UNKNOWN_INDUSTRY.to_lowercase(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Case-folded comparison key.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// File-name slug: case-folded, spaces become hyphens. Path separators
    /// are replaced as well so the slug is always a single path component.
    pub fn slug(&self) -> String {
        self.key
            .chars()
            .map(|c| match c {
                ' ' | '/' | '\\' => '-',
                other => other,
            })
            .collect()
    }
}

impl PartialEq for Industry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Industry {}

impl Hash for Industry {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl PartialOrd for Industry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Industry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl fmt::Display for Industry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for Industry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for Industry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(Industry::or_unknown(&raw))
    }
}
