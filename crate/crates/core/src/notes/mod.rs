//! Release-note segmentation, link labeling, and ground-truth construction.

pub mod ground_truth;
pub mod links;
pub mod segment;

pub use ground_truth::{
    build_ground_truth, build_ground_truth_with, is_changelog_only, queries_of_kind, BuildContext,
    DatasetBuildConfig, DedupePolicy,
};
pub use links::{classify_link, LinkKind, LinkLabel};
pub use segment::{segment_body, segment_note, RawSegment};
