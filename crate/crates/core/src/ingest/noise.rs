use serde::Deserialize;

use super::{Discussion, IngestError};

const BUNDLED_PATTERNS: &str = include_str!("../../data/noise_patterns.toml");

/// Deleted-post markers and moderator boilerplate used to drop noise replies.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct NoisePatterns {
    pub version: u32,
    pub deleted: Vec<String>,
    pub moderator: Vec<String>,
}

impl NoisePatterns {
    /// The pattern set shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_toml(BUNDLED_PATTERNS).expect("bundled noise patterns parse")
    }

    pub fn from_toml(raw: &str) -> Result<Self, IngestError> {
        let mut patterns: NoisePatterns =
            toml::from_str(raw).map_err(|e| IngestError::Patterns(e.to_string()))?;
        for p in &mut patterns.moderator {
            *p = p.to_lowercase();
        }
        Ok(patterns)
    }

    /// Raw text of the bundled pattern file, for auditing.
    pub fn bundled_source() -> &'static str {
        BUNDLED_PATTERNS
    }

    pub fn is_noise(&self, body: &str) -> bool {
        let trimmed = body.trim();
        if self.deleted.iter().any(|marker| marker == trimmed) {
            return true;
        }
        let lowered = body.to_lowercase();
        self.moderator.iter().any(|p| lowered.contains(p.as_str()))
    }
}

impl Default for NoisePatterns {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Returns a copy of `discussion` without deleted or moderator replies.
pub fn filter_noise_replies(discussion: &Discussion, patterns: &NoisePatterns) -> Discussion {
    Discussion {
        replies: discussion
            .replies
            .iter()
            .filter(|r| !patterns.is_noise(&r.body))
            .cloned()
            .collect(),
        ..discussion.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Reply;
    use proptest::prelude::*;

    fn with_bodies(bodies: &[&str]) -> Discussion {
        Discussion {
            id: "d".into(),
            title: "t".into(),
            op_body: String::new(),
            replies: bodies
                .iter()
                .enumerate()
                .map(|(i, b)| Reply {
                    id: format!("r{i}"),
                    author: String::new(),
                    body: (*b).to_string(),
                    parent_id: None,
                    created_utc: 0,
                })
                .collect(),
        }
    }

    #[test]
    fn bundled_patterns_are_verbatim() {
        let p = NoisePatterns::bundled();
        assert_eq!(p.version, 1);
        assert_eq!(
            p.deleted,
            ["[deleted]", "[removed]", "[Wiki][Code][/r/DeltaBot]", "[History]"]
        );
        assert_eq!(p.moderator.len(), 7);
        assert!(p.moderator[5].contains("as far as possibe (hint:use res)"));
    }

    #[test]
    fn drops_deleted_and_moderator_replies() {
        let d = with_bodies(&[
            "[deleted]",
            "I disagree because...",
            "Hello, users of CMV! This is a footnote from your moderators. Please read the rules.",
            "  [removed]  ",
            "Your comment has been automatically removed for being too short.",
            "I [deleted] my earlier point.",
        ]);
        let kept = filter_noise_replies(&d, &NoisePatterns::bundled());
        let bodies: Vec<_> = kept.replies.iter().map(|r| r.body.as_str()).collect();
        assert_eq!(bodies, ["I disagree because...", "I [deleted] my earlier point."]);
    }

    proptest! {
        #[test]
        fn filtering_is_idempotent(bodies in proptest::collection::vec(
            prop_oneof![
                Just("[deleted]".to_string()),
                Just("reply to their comment with the DELTA symbol".to_string()),
                "[a-zA-Z .!?]{0,40}",
            ], 0..12)) {
            let refs: Vec<&str> = bodies.iter().map(String::as_str).collect();
            let d = with_bodies(&refs);
            let p = NoisePatterns::bundled();
            let once = filter_noise_replies(&d, &p);
            let twice = filter_noise_replies(&once, &p);
            prop_assert_eq!(once, twice);
        }
    }
}
