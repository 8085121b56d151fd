use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{DatasetError, EvalError};
use crate::eval::metrics::QueryResult;
use crate::model::{Artifact, ArtifactKind, ArtifactRef, NoteSegment, SegmentId};

/// What changed (pull request), why (issue), and how (commit) for one
/// release-note segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeCard {
    pub segment: SegmentId,
    pub text: String,
    pub what: Option<String>,
    pub why: Option<String>,
    pub how: Option<String>,
}

/// Builds a card from at most one linked artifact per kind.
pub fn assemble_change_card(segment: &NoteSegment, links: &[&Artifact]) -> Result<ChangeCard, EvalError> {
    let mut card = ChangeCard {
        segment: segment.id.clone(),
        text: segment.text.clone(),
        what: None,
        why: None,
        how: None,
    };
    for a in links {
        let slot = match a.kind {
            ArtifactKind::PullRequest => &mut card.what,
            ArtifactKind::Issue => &mut card.why,
            ArtifactKind::Commit => &mut card.how,
        };
        if slot.is_some() {
            return Err(EvalError::InvalidLinks(format!(
                "more than one {} linked to {}",
                a.kind.label(),
                segment.id
            )));
        }
        *slot = Some(a.text.clone());
    }
    if card.what.is_none() && card.why.is_none() && card.how.is_none() {
        return Err(EvalError::NoLinks);
    }
    Ok(card)
}

/// Cards for every segment with at least one ground-truth link, in dataset order.
pub fn cards_from_links(d: &Dataset) -> Result<Vec<ChangeCard>, EvalError> {
    let index = d.artifact_index();
    let truth = d.truth();
    let mut cards = Vec::new();
    for note in &d.notes {
        for seg in &note.segments {
            let linked: Vec<&Artifact> = ArtifactKind::ALL
                .iter()
                .filter_map(|k| {
                    let key = truth.get(&(seg.id.clone(), *k))?;
                    index
                        .get(&ArtifactRef {
                            kind: *k,
                            repo: seg.id.repo.clone(),
                            key: key.clone(),
                        })
                        .copied()
                })
                .collect();
            if !linked.is_empty() {
                cards.push(assemble_change_card(seg, &linked)?);
            }
        }
    }
    Ok(cards)
}

/// Cards from the top-ranked candidate of each query, in dataset order.
/// Segments whose queries all came back empty get no card.
pub fn cards_from_predictions(d: &Dataset, results: &[QueryResult]) -> Result<Vec<ChangeCard>, EvalError> {
    let index = d.artifact_index();
    let mut picks: BTreeMap<&SegmentId, Vec<&Artifact>> = BTreeMap::new();
    for r in results {
        let Some(top) = r.ranked.first() else { continue };
        let a = index
            .get(&ArtifactRef {
                kind: r.kind,
                repo: r.segment.repo.clone(),
                key: top.artifact.clone(),
            })
            .copied()
            .ok_or_else(|| EvalError::InvalidLinks(format!("unknown {} {}", r.kind.label(), top.artifact)))?;
        picks.entry(&r.segment).or_default().push(a);
    }
    let mut cards = Vec::new();
    for note in &d.notes {
        for seg in &note.segments {
            if let Some(linked) = picks.get(&seg.id) {
                cards.push(assemble_change_card(seg, linked)?);
            }
        }
    }
    Ok(cards)
}

pub fn write_cards_jsonl(cards: &[ChangeCard], path: &Path) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
    }
    let mut buf = Vec::new();
    for c in cards {
        serde_json::to_writer(&mut buf, c).expect("cards serialize");
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| DatasetError::io(path, e))?;
    f.write_all(&buf).map_err(|e| DatasetError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ByteSpan, RepoRef, Timestamp};

    fn seg(text: &str) -> NoteSegment {
        NoteSegment {
            id: SegmentId {
                repo: RepoRef::github("typeorm", "typeorm").unwrap(),
                tag: "0.3.17".into(),
                ordinal: 0,
            },
            text: text.into(),
            raw_span: ByteSpan { start: 0, end: text.len() },
            embedded_links: vec![],
            category: None,
        }
    }

    fn art(kind: ArtifactKind, key: &str, text: &str) -> Artifact {
        Artifact::new(kind, RepoRef::github("typeorm", "typeorm").unwrap(), key, text, Timestamp::from_unix(0), "").unwrap()
    }

    #[test]
    fn commit_only_card() {
        let c = art(ArtifactKind::Commit, "e67d704", "fix it");
        let card = assemble_change_card(&seg("x"), &[&c]).unwrap();
        assert_eq!((card.what, card.why, card.how.as_deref()), (None, None, Some("fix it")));
    }

    #[test]
    fn no_links_is_an_error() {
        assert_eq!(assemble_change_card(&seg("x"), &[]), Err(EvalError::NoLinks));
    }

    #[test]
    fn two_of_a_kind_is_rejected() {
        let a = art(ArtifactKind::Issue, "1", "a");
        let b = art(ArtifactKind::Issue, "2", "b");
        assert!(matches!(assemble_change_card(&seg("x"), &[&a, &b]), Err(EvalError::InvalidLinks(_))));
    }
}
