//! Writes a synthetic, eligible repository snapshot for offline runs.
//!
//! ```text
//! cargo run -p tracelink --example demo_snapshot -- snapshots [seed]
//! ```

use std::path::PathBuf;

use tracelink::ingest::IngestConfig;
use tracelink::pipeline::ingest_to_snapshot;
use tracelink::synth::{SynthRepo, SynthSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "snapshots".into()));
    let seed = args.next().map_or(7, |s| s.parse().expect("seed must be an integer"));
    let repo = SynthRepo::generate(SynthSpec { seed, ..SynthSpec::default() });
    let cfg = IngestConfig {
        snapshot_dir: dir.clone(),
        ..IngestConfig::default()
    };
    let out = ingest_to_snapshot(&repo.transport(cfg.page_size), None, &repo.spec.repo, &cfg, repo.now, false)
        .expect("synthetic ingest");
    print!("{}", out.report.render());
    println!("snapshot: {} in {}", out.snapshot_id.expect("eligible"), dir.display());
}
