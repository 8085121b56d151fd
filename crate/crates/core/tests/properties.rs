use std::collections::BTreeSet;

use proptest::prelude::*;

use tracelink::eval::{mrr, precision_at_1, QueryResult};
use tracelink::notes::{build_ground_truth, classify_link, segment_body, DatasetBuildConfig};
use tracelink::scoring::{fuse, rank_order, time_score, ScoredCandidate, TfIdfModel};
use tracelink::synth::{SynthRepo, SynthSpec};
use tracelink::{
    export_dataset, import_dataset, Artifact, ArtifactKind, ReleaseNote, RepoRef, SegmentId, Timestamp,
};

fn repo() -> RepoRef {
    RepoRef::github("o", "r").unwrap()
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn result(i: usize, rank: Option<usize>) -> QueryResult {
    let len = rank.unwrap_or(2).max(2);
    let ranked = (1..=len)
        .map(|r| ScoredCandidate {
            artifact: if Some(r) == rank { "1".into() } else { format!("{}", 100 + r) },
            text_score: 0.0,
            time_score: 0.0,
            final_score: 0.0,
            rank: r,
            abstained: false,
            failed: false,
            distance_days: 0.0,
        })
        .collect();
    let seg = SegmentId {
        repo: repo(),
        tag: "v1".into(),
        ordinal: i,
    };
    QueryResult::new(seg, ArtifactKind::Commit, ranked, "1".into())
}

fn ranks() -> impl Strategy<Value = Vec<Option<usize>>> {
    prop::collection::vec(prop::option::weighted(0.8, 1usize..8), 1..30)
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["cache", "parser", "fix", "entity", "null", "pool", "driver"]), 0..12)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn fuse_is_between_its_inputs(t in unit(), s in unit(), a in unit()) {
        let f = fuse(t, s, a).unwrap();
        prop_assert!(f >= t.min(s) - 1e-12 && f <= t.max(s) + 1e-12);
        prop_assert_eq!(fuse(t, s, 1.0).unwrap(), t);
        prop_assert_eq!(fuse(t, s, 0.0).unwrap(), s);
    }

    #[test]
    fn fuse_rejects_out_of_range(x in prop_oneof![-10.0..-1e-9f64, 1.0 + 1e-9..10.0f64], t in unit()) {
        prop_assert!(fuse(x, t, 0.5).is_err());
        prop_assert!(fuse(t, x, 0.5).is_err());
        prop_assert!(fuse(t, t, x).is_err());
    }

    #[test]
    fn time_score_is_symmetric_and_bounded(a in 0i64..400_000_000, b in 0i64..400_000_000, w in 1u32..400) {
        let (x, y) = (Timestamp::from_unix(1_000_000_000 + a), Timestamp::from_unix(1_000_000_000 + b));
        let s = time_score(x, y, w);
        prop_assert_eq!(s, time_score(y, x, w));
        prop_assert!((0.0..=1.0).contains(&s));
        if (a - b).abs() >= i64::from(w) * 86_400 {
            prop_assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn cosine_ignores_document_scale(corpus in prop::collection::vec(words(), 1..10), q in words(), c in words(), k in 1usize..4) {
        let model = TfIdfModel::fit(&corpus);
        let repeated = vec![c.as_str(); k].join(" ");
        let a = model.similarity(&q, &c);
        let b = model.similarity(&q, &repeated);
        prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        prop_assert!((model.similarity(&q, &c) - model.similarity(&c, &q)).abs() <= 1e-12);
    }

    #[test]
    fn ranking_ignores_input_order(
        entries in prop::collection::vec((0u8..4, 0u8..5), 1..15),
        shuffle in any::<prop::sample::Index>(),
        time_tiebreak in any::<bool>(),
    ) {
        let keys: Vec<String> = (0..entries.len()).map(|i| (i * 7 % 13 + 10 * i).to_string()).collect();
        let rows: Vec<(f64, f64, &str)> = entries
            .iter()
            .zip(&keys)
            .map(|((f, d), k)| (f64::from(*f) / 4.0, f64::from(*d), k.as_str()))
            .collect();
        let mut rotated = rows.clone();
        rotated.rotate_left(shuffle.index(rows.len()));
        let order = |r: &[(f64, f64, &str)]| -> Vec<String> {
            rank_order(r, time_tiebreak).into_iter().map(|i| r[i].2.to_string()).collect()
        };
        prop_assert_eq!(order(&rows), order(&rotated));
        if !time_tiebreak {
            // distance plays no part without the time tiebreak
            let flat: Vec<(f64, f64, &str)> = rows.iter().map(|(f, _, k)| (*f, 0.0, *k)).collect();
            prop_assert_eq!(order(&rows), order(&flat));
        }
    }

    #[test]
    fn metrics_ignore_query_order(rs in ranks(), rot in any::<prop::sample::Index>()) {
        let results: Vec<QueryResult> = rs.iter().enumerate().map(|(i, r)| result(i, *r)).collect();
        let mut moved = results.clone();
        moved.rotate_left(rot.index(results.len()));
        prop_assert_eq!(precision_at_1(&results).unwrap(), precision_at_1(&moved).unwrap());
        prop_assert!((mrr(&results).unwrap() - mrr(&moved).unwrap()).abs() <= 1e-12);
        prop_assert!(precision_at_1(&results).unwrap() <= mrr(&results).unwrap() + 1e-12);
    }

    #[test]
    fn metrics_weight_concatenations_by_size(a in ranks(), b in ranks()) {
        let ra: Vec<QueryResult> = a.iter().enumerate().map(|(i, r)| result(i, *r)).collect();
        let rb: Vec<QueryResult> = b.iter().enumerate().map(|(i, r)| result(1000 + i, *r)).collect();
        let all: Vec<QueryResult> = ra.iter().chain(&rb).cloned().collect();
        let (na, nb) = (ra.len() as f64, rb.len() as f64);
        let weighted = |f: fn(&[QueryResult]) -> Result<f64, tracelink::EvalError>| {
            (na * f(&ra).unwrap() + nb * f(&rb).unwrap()) / (na + nb)
        };
        prop_assert!((mrr(&all).unwrap() - weighted(mrr)).abs() <= 1e-12);
        prop_assert!((precision_at_1(&all).unwrap() - weighted(precision_at_1)).abs() <= 1e-12);
    }

    #[test]
    fn classify_link_is_total(url in ".{0,80}") {
        let l = classify_link(&url, &repo());
        prop_assert_eq!(l.kind.is_some(), l.key.is_some());
        prop_assert_eq!(&l.url, &url);
        prop_assert!(l.kind.is_some() || !l.cross_repo);
    }

    #[test]
    fn classify_link_total_on_url_like_input(
        host in prop::sample::select(vec!["https://github.com", "http://www.github.com", "https://example.org", ""]),
        parts in prop::collection::vec(prop::sample::select(vec!["o", "r", "pull", "issues", "commit", "12", "abc1234", "..", "x"]), 0..6),
    ) {
        let url = format!("{host}/{}", parts.join("/"));
        let l = classify_link(&url, &repo());
        prop_assert_eq!(l.kind.is_some(), l.key.is_some());
    }

    #[test]
    fn segment_spans_are_ordered(pieces in prop::collection::vec(prop::sample::select(vec![
        "- added a cache (#12)\n",
        "* fixed the parser (e67d704)\n",
        "## Bug Fixes\n",
        "Fixed A. Fixed B! Is C fixed? Yes.\n",
        "\n",
        "```\ncode. here\n```\n",
        "1. numbered item [#3](https://github.com/o/r/pull/3)\n",
        "See `a.b()` for details. Done.\n",
        "  - nested (#4)\n",
    ]), 0..12)) {
        let body = pieces.concat();
        let segs = segment_body(&body);
        for w in segs.windows(2) {
            prop_assert!(w[0].raw_span.end <= w[1].raw_span.start, "{:?}", segs);
        }
        for s in &segs {
            prop_assert!(s.raw_span.start < s.raw_span.end && s.raw_span.end <= body.len());
        }
    }
}

fn synth_inputs(seed: u64) -> (Vec<ReleaseNote>, Vec<Artifact>) {
    let repo = SynthRepo::generate(SynthSpec { seed, releases: 3, ..SynthSpec::default() });
    let notes = repo
        .releases
        .iter()
        .map(|r| ReleaseNote::segmented(repo.spec.repo.clone(), &r.tag, r.date, &r.body))
        .collect();
    (notes, repo.artifacts())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dataset_survives_export_and_import(seed in any::<u64>()) {
        let (notes, artifacts) = synth_inputs(seed);
        let d = build_ground_truth(&notes, &artifacts, &DatasetBuildConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_dataset(&d, dir.path()).unwrap();
        prop_assert_eq!(import_dataset(dir.path()).unwrap(), d);
    }

    #[test]
    fn rebuilding_from_output_is_idempotent(seed in any::<u64>()) {
        let (notes, artifacts) = synth_inputs(seed);
        let cfg = DatasetBuildConfig::default();
        let d = build_ground_truth(&notes, &artifacts, &cfg).unwrap();
        let again = build_ground_truth(&d.notes, &d.artifacts, &cfg).unwrap();
        prop_assert_eq!(&again.links, &d.links);
        prop_assert_eq!(&again.notes, &d.notes);
    }
}

proptest! {
    /// 10 notes carrying 25 valid links in total, capped at 20: the kept
    /// links are the first 20 of a brute-force enumeration in
    /// (release date, segment ordinal, position) order.
    #[test]
    fn link_cap_keeps_the_canonical_prefix(
        per_note in prop::collection::vec(0usize..10, 25).prop_map(|picks| {
            let mut v = vec![0usize; 10];
            for i in picks {
                v[i] += 1;
            }
            v
        }),
        date_order in Just((0..10).collect::<Vec<i64>>()).prop_shuffle(),
    ) {
        let repo = repo();
        let t0 = Timestamp::parse("2024-01-01T00:00:00Z").unwrap();
        let mut notes = Vec::new();
        let mut artifacts = Vec::new();
        // (date offset, ordinal, key)
        let mut expected: Vec<(i64, usize, String)> = Vec::new();
        let mut next_key = 1;
        for (n, &count) in per_note.iter().enumerate() {
            let offset = date_order[n] * 10;
            let date = t0.plus_days(offset);
            let mut body = String::new();
            for ordinal in 0..count {
                let key = next_key.to_string();
                next_key += 1;
                body.push_str(&format!("- change {key} (#{key})\n"));
                artifacts.push(
                    Artifact::new(ArtifactKind::PullRequest, repo.clone(), &key, "change", date, format!("https://github.com/o/r/pull/{key}")).unwrap(),
                );
                expected.push((offset, ordinal, key));
            }
            if count == 0 {
                body.push_str("- nothing linked here\n");
            }
            notes.push(ReleaseNote::segmented(repo.clone(), &format!("v{n}"), date, &body));
        }
        expected.sort();
        let cfg = DatasetBuildConfig { max_links: 20, ..DatasetBuildConfig::default() };
        let d = build_ground_truth(&notes, &artifacts, &cfg).unwrap();
        let got: Vec<String> = d.links.iter().map(|l| l.artifact.key.clone()).collect();
        let want: Vec<String> = expected.into_iter().take(20).map(|(_, _, k)| k).collect();
        prop_assert_eq!(got, want);
        prop_assert_eq!(d.build_manifest.counts.capped_links, 5);
        let kept: BTreeSet<&str> = d.notes.iter().map(|n| n.tag.as_str()).collect();
        for l in &d.links {
            prop_assert!(kept.contains(l.segment.tag.as_str()));
        }
    }
}
