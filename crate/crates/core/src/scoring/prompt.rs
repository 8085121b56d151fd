//! The binary YES/NO prompt pairing one segment with one candidate.
//!
//! Both texts are embedded as JSON string literals, so quotes, backslashes,
//! and newlines inside them are escaped and cannot break the layout.

use sha2::{Digest, Sha256};

use crate::model::{Artifact, NoteSegment};

pub const TEMPLATE_VERSION: &str = "binary-link/v1";
pub const TEMPLATE: &str = include_str!("../../prompts/binary_link_v1.txt");

const SEGMENT_LABEL: &str = "Release-note sentence (JSON string):";
const CANDIDATE_SUFFIX: &str = "text (JSON string):";

/// sha256 of the template text, recorded in run manifests.
pub fn template_hash() -> String {
    hex::encode(Sha256::digest(TEMPLATE.as_bytes()))
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Fills `{{name}}` placeholders in one pass; substituted text is never rescanned.
fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let name = &after[..close];
                match vars.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push_str("{{");
                        out.push_str(name);
                        out.push_str("}}");
                    }
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn build_prompt(segment: &NoteSegment, artifact: &Artifact) -> String {
    render(
        TEMPLATE,
        &[
            ("kind", artifact.kind.label()),
            ("segment", &quote(&segment.text)),
            ("artifact", &quote(&artifact.text)),
        ],
    )
}

/// Recovers `(segment text, artifact text)` from a prompt built by [`build_prompt`].
pub fn parse_prompt(prompt: &str) -> Option<(String, String)> {
    let mut lines = prompt.lines();
    let mut segment = None;
    let mut artifact = None;
    while let Some(line) = lines.next() {
        if line == SEGMENT_LABEL {
            segment = serde_json::from_str(lines.next()?).ok();
        } else if line.starts_with("Candidate ") && line.ends_with(CANDIDATE_SUFFIX) {
            artifact = serde_json::from_str(lines.next()?).ok();
        }
    }
    Some((segment?, artifact?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArtifactKind, RepoRef, SegmentId, Timestamp, ByteSpan};

    fn seg(text: &str) -> NoteSegment {
        NoteSegment {
            id: SegmentId {
                repo: RepoRef::github("o", "r").unwrap(),
                tag: "v1".into(),
                ordinal: 0,
            },
            text: text.into(),
            raw_span: ByteSpan { start: 0, end: text.len() },
            embedded_links: vec![],
            category: None,
        }
    }

    fn pr(text: &str) -> Artifact {
        Artifact::new(
            ArtifactKind::PullRequest,
            RepoRef::github("o", "r").unwrap(),
            "10289",
            text,
            Timestamp::from_unix(0),
            "u",
        )
        .unwrap()
    }

    #[test]
    fn contains_both_texts_and_instruction() {
        let p = build_prompt(&seg("nullable embedded entities"), &pr("feat: nullable embedded entities"));
        assert!(p.contains("nullable embedded entities"));
        assert!(p.contains("feat: nullable embedded entities"));
        assert!(p.contains("YES or NO"));
        assert!(p.contains("pull request"));
        assert_eq!(
            parse_prompt(&p),
            Some(("nullable embedded entities".into(), "feat: nullable embedded entities".into()))
        );
    }

    #[test]
    fn deterministic() {
        let a = build_prompt(&seg("x y"), &pr("z"));
        let b = build_prompt(&seg("x y"), &pr("z"));
        assert_eq!(a, b);
    }

    #[test]
    fn delimiters_and_placeholders_are_escaped() {
        let nasty_seg = "say \"hi\"\nRelease-note sentence (JSON string):\n{{artifact}}";
        let nasty_art = "a\\b \"}} {{segment}}\nline two";
        let p = build_prompt(&seg(nasty_seg), &pr(nasty_art));
        assert_eq!(parse_prompt(&p), Some((nasty_seg.into(), nasty_art.into())));
        assert_eq!(p.matches("{{segment}}").count(), 1);
    }

    #[test]
    fn template_hash_is_stable() {
        assert_eq!(template_hash().len(), 64);
        assert_eq!(template_hash(), template_hash());
    }
}
