//! Precision@1 and MRR, comparison reports, and What/Why/How change cards.

mod cards;
mod metrics;
mod report;

pub use cards::{assemble_change_card, cards_from_links, cards_from_predictions, write_cards_jsonl, ChangeCard};
pub use metrics::{misses, mrr, precision_at_1, QueryResult};
pub use report::{
    compare_report, reference_table, Delta, EvalReport, EvalRow, MethodInfo, MethodRun,
    ReferenceRow, REFERENCE_NOTE, REPORT_JSON, REPORT_TXT,
};
