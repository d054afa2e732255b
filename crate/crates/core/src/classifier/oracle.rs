//! Deterministic keyword classifier used as an offline stand-in for the
//! remote model.

use crate::taxonomy::FailureType;

/// A keyword matches at word boundaries. A trailing `*` turns it into a
/// prefix match (`vulnerab*` matches "vulnerable" and "vulnerabilities").
pub struct KeywordRule {
    pub label: FailureType,
    pub keywords: &'static [&'static str],
}

/// Evaluated top to bottom; the first rule with any matching keyword wins.
pub const RULES: &[KeywordRule] = &[
    KeywordRule {
        label: FailureType::DataBreach,
        keywords: &[
            "breach*",
            "leaked data",
            "data leak*",
            "stolen data",
            "data was stolen",
            "exposed records",
            "exposed personal",
            "records were exposed",
            "exfiltrat*",
        ],
    },
    KeywordRule {
        label: FailureType::SecurityVulnerability,
        keywords: &[
            "vulnerab*",
            "exploit*",
            "ransomware",
            "malware",
            "hacker*",
            "hacked",
            "cyberattack*",
            "cyber attack*",
            "phishing",
            "zero-day",
            "unpatched",
            "injection",
            "backdoor",
        ],
    },
    KeywordRule {
        label: FailureType::Outage,
        keywords: &[
            "outage*",
            "downtime",
            "went down",
            "went offline",
            "service disruption",
            "unavailable",
        ],
    },
    KeywordRule {
        label: FailureType::RegressionBug,
        keywords: &[
            "regression*",
            "after update broke",
            "after an update",
            "after the update",
            "update broke",
            "previously working",
            "no longer work*",
            "incorrectly date",
            "date rollover",
        ],
    },
    KeywordRule {
        label: FailureType::PerformanceIssue,
        keywords: &[
            "slow*",
            "latency",
            "sluggish",
            "performance",
            "response time*",
            "timeout*",
            "memory leak*",
        ],
    },
    KeywordRule {
        label: FailureType::IntegrationIssue,
        keywords: &[
            "integration",
            "third-party api",
            "third party api",
            "incompatib*",
            "interoperab*",
            "interface between",
        ],
    },
    KeywordRule {
        label: FailureType::UiUxBug,
        keywords: &["ui", "ux", "user interface", "display*", "screen layout", "confusing interface"],
    },
    KeywordRule {
        label: FailureType::NonSoftwareCause,
        keywords: &[
            "not software",
            "lack of support",
            "lack of",
            "hardware failure",
            "human error",
            "power failure",
            "natural disaster",
        ],
    },
    KeywordRule {
        label: FailureType::FunctionalityBug,
        keywords: &[
            "bug*",
            "malfunction*",
            "glitch*",
            "faulty",
            "deficienc*",
            "defect*",
            "miscalculat*",
            "crash*",
        ],
    },
];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

pub(crate) fn keyword_matches(text_lower: &str, keyword: &str) -> bool {
    let (needle, prefix) = match keyword.strip_suffix('*') {
        Some(stem) => (stem, true),
        None => (keyword, false),
    };
    text_lower.match_indices(needle).any(|(start, m)| {
        let before = text_lower[..start].chars().next_back();
        let after = text_lower[start + m.len()..].chars().next();
        !before.is_some_and(is_word_char) && (prefix || !after.is_some_and(is_word_char))
    })
}

/// Index of the first rule that fires, if any.
pub fn matching_rule(cause: &str) -> Option<usize> {
    let lower = cause.to_lowercase();
    RULES
        .iter()
        .position(|rule| rule.keywords.iter().any(|kw| keyword_matches(&lower, kw)))
}

/// Labels a cause by the first matching keyword rule; `Other` when none
/// fires.
pub fn keyword_oracle(cause: &str) -> FailureType {
    matching_rule(cause).map_or(FailureType::Other, |i| RULES[i].label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompting::bundled_example_bank;
    use proptest::prelude::*;

    #[test]
    fn first_match_wins_for_ransomware() {
        let cause = "Ransomware exploited an unpatched vulnerability";
        // Hand trace: the data-breach rule has no hit, the security rule
        // hits on "ransomware", "exploited", "unpatched" and "vulnerability".
        assert_eq!(RULES[0].label, FailureType::DataBreach);
        assert!(!RULES[0]
            .keywords
            .iter()
            .any(|k| keyword_matches(&cause.to_lowercase(), k)));
        assert_eq!(matching_rule(cause), Some(1));
        assert_eq!(keyword_oracle(cause), FailureType::SecurityVulnerability);
    }

    #[test]
    fn no_rule_gives_other() {
        assert_eq!(keyword_oracle("Scheduled maintenance notice"), FailureType::Other);
    }

    #[test]
    fn reproduces_published_examples() {
        for ex in bundled_example_bank() {
            assert_eq!(keyword_oracle(&ex.cause), ex.label, "{}", ex.cause);
        }
    }

    #[test]
    fn word_boundaries() {
        assert!(keyword_matches("the ui froze", "ui"));
        assert!(!keyword_matches("a quick build", "ui"));
        assert!(keyword_matches("multiple vulnerabilities found", "vulnerab*"));
        assert!(!keyword_matches("debugging", "bug*"));
        assert!(keyword_matches("bugs everywhere", "bug*"));
    }

    #[test]
    fn rule_order_follows_table() {
        let labels: Vec<_> = RULES.iter().map(|r| r.label).collect();
        use FailureType::*;
        assert_eq!(
            labels,
            vec![
                DataBreach,
                SecurityVulnerability,
                Outage,
                RegressionBug,
                PerformanceIssue,
                IntegrationIssue,
                UiUxBug,
                NonSoftwareCause,
                FunctionalityBug
            ]
        );
    }

    proptest! {
        #[test]
        fn oracle_is_pure(cause in ".{1,80}") {
            prop_assert_eq!(keyword_oracle(&cause), keyword_oracle(&cause));
            prop_assert!(FailureType::ALL.contains(&keyword_oracle(&cause)));
        }
    }
}
