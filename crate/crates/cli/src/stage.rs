//! The pipeline's stages and their static dependency graph.

use anyhow::{bail, Result};
use clap::ValueEnum;
use std::collections::BTreeSet;
use std::fmt;

/// One pipeline stage; artifacts land under `<output_dir>/<stage name>/`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Stage {
    Ingest,
    Graph,
    Centrality,
    Communities,
    Narratives,
    Embed,
    Market,
    Features,
    Regress,
    Report,
}

/// Every stage in dependency order; `run-all` executes exactly this sequence.
pub const ALL_STAGES: [Stage; 10] = [
    Stage::Ingest,
    Stage::Graph,
    Stage::Centrality,
    Stage::Communities,
    Stage::Narratives,
    Stage::Embed,
    Stage::Market,
    Stage::Features,
    Stage::Regress,
    Stage::Report,
];

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Graph => "graph",
            Stage::Centrality => "centrality",
            Stage::Communities => "communities",
            Stage::Narratives => "narratives",
            Stage::Embed => "embed",
            Stage::Market => "market",
            Stage::Features => "features",
            Stage::Regress => "regress",
            Stage::Report => "report",
        }
    }

    /// Direct upstream stages whose artifacts this stage reads.
    pub fn deps(self) -> &'static [Stage] {
        match self {
            Stage::Ingest | Stage::Market => &[],
            Stage::Graph => &[Stage::Ingest],
            Stage::Centrality | Stage::Communities | Stage::Embed => {
                &[Stage::Ingest, Stage::Graph]
            }
            Stage::Narratives => &[Stage::Communities],
            Stage::Features => &[
                Stage::Ingest,
                Stage::Graph,
                Stage::Centrality,
                Stage::Communities,
                Stage::Embed,
                Stage::Market,
            ],
            Stage::Regress => &[Stage::Features],
            Stage::Report => &[
                Stage::Ingest,
                Stage::Graph,
                Stage::Centrality,
                Stage::Communities,
                Stage::Narratives,
                Stage::Embed,
                Stage::Features,
                Stage::Regress,
            ],
        }
    }

    /// This stage plus everything it transitively depends on.
    pub fn closure(self) -> BTreeSet<Stage> {
        let mut out = BTreeSet::new();
        let mut queue = vec![self];
        while let Some(s) = queue.pop() {
            if out.insert(s) {
                queue.extend(s.deps());
            }
        }
        out
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Startup sanity check: the dependency table must be acyclic. Since
/// [`ALL_STAGES`] is the intended execution order, it suffices that every
/// dependency appears strictly earlier in that sequence.
pub fn check_dag() -> Result<()> {
    for (i, stage) in ALL_STAGES.iter().enumerate() {
        for dep in stage.deps() {
            let j = ALL_STAGES
                .iter()
                .position(|s| s == dep)
                .expect("dependency table only names known stages");
            if j >= i {
                bail!(
                    "stage dependency table is not acyclic: '{stage}' depends on '{dep}' \
                     which does not precede it"
                );
            }
        }
    }
    Ok(())
}
