//! Stage execution with content-addressed caching.
//!
//! Every stage gets a hash over the slice of the configuration it actually
//! reads, the content of the raw input files it consumes, and the hashes of
//! the stages it depends on. The manifest pairs each completed stage with
//! that hash, so a rerun can tell three situations apart: up to date (skip),
//! never run (run), and run under a different configuration (refuse unless
//! forced — mixing artifacts from two configurations is never silent).

use anyhow::{bail, Context, Result};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::config::PipelineConfig;
use crate::hash::{file_sha256, hex_sha256};
use crate::manifest::Manifest;
use crate::stage::{Stage, ALL_STAGES};
use crate::steps;

pub struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    manifest: Manifest,
    force: bool,
    expected: BTreeMap<Stage, String>,
}

impl<'a> Runner<'a> {
    pub fn new(cfg: &'a PipelineConfig, force: bool) -> Result<Self> {
        let out = cfg.output_dir.clone();
        let manifest = Manifest::load(&out)?;
        Ok(Runner {
            cfg,
            out,
            manifest,
            force,
            expected: BTreeMap::new(),
        })
    }

    /// The configuration a stage actually depends on, as a JSON value. Raw
    /// input files enter by content hash, so touching a file without
    /// changing it never invalidates anything.
    fn stage_view(&self, stage: Stage) -> Result<serde_json::Value> {
        Ok(match stage {
            Stage::Ingest => json!({
                "corpus_sha256": file_sha256(self.cfg.corpus()?)?,
                "exclude_weeks": self.cfg.exclude_weeks,
            }),
            Stage::Graph | Stage::Centrality | Stage::Narratives | Stage::Report => json!({}),
            Stage::Communities => json!({
                "beta": self.cfg.beta,
                "k_range": self.cfg.k_range,
                "seed": self.cfg.seed,
            }),
            Stage::Embed => json!({
                "walk": self.cfg.walk,
                "seed": self.cfg.seed,
            }),
            Stage::Market => {
                let hashes = self
                    .cfg
                    .indices()?
                    .iter()
                    .map(|p| file_sha256(p))
                    .collect::<Result<Vec<_>>>()?;
                json!({ "index_sha256": hashes })
            }
            Stage::Features => json!({
                "start_date": self.cfg.start_date,
            }),
            Stage::Regress => json!({
                "alpha": self.cfg.alpha,
                "seed": self.cfg.seed,
                "experiments": self.cfg.experiments,
            }),
        })
    }

    /// Computes (and memoizes) the expected hash of `stage` and everything it
    /// depends on.
    fn expected_hash(&mut self, stage: Stage) -> Result<String> {
        if let Some(h) = self.expected.get(&stage) {
            return Ok(h.clone());
        }
        let closure = stage.closure();
        for member in ALL_STAGES.into_iter().filter(|s| closure.contains(s)) {
            if self.expected.contains_key(&member) {
                continue;
            }
            let deps: BTreeMap<&str, &String> = member
                .deps()
                .iter()
                .map(|d| (d.name(), &self.expected[d]))
                .collect();
            let document = json!({
                "stage": member.name(),
                "view": self.stage_view(member)?,
                "deps": deps,
            });
            let hash = hex_sha256(serde_json::to_string(&document)?.as_bytes());
            self.expected.insert(member, hash);
        }
        Ok(self.expected[&stage].clone())
    }

    fn artifacts_present(&self, stage: Stage) -> bool {
        self.manifest
            .stages
            .get(stage.name())
            .is_some_and(|r| r.artifacts.iter().all(|rel| self.out.join(rel).exists()))
    }

    /// Checks that an upstream stage has already run, under the current
    /// configuration, with its artifacts still on disk.
    fn require_fresh(&mut self, dep: Stage) -> Result<()> {
        if !self.manifest.stages.contains_key(dep.name()) {
            bail!(
                "stage {dep} has not run yet; run `newsweave run {dep}` (or run-all) first"
            );
        }
        let expected = self.expected_hash(dep)?;
        let record = &self.manifest.stages[dep.name()];
        if record.hash != expected {
            bail!(
                "the artifacts of stage {dep} were produced under a different \
                 configuration; re-run it (or run-all) first"
            );
        }
        if !self.artifacts_present(dep) {
            bail!(
                "stage {dep} is recorded in the manifest but its artifacts are \
                 missing; re-run it (or run-all) first"
            );
        }
        Ok(())
    }

    /// Runs one stage, honoring the cache. Returns true when work was done,
    /// false on a cache hit.
    pub fn run(&mut self, stage: Stage) -> Result<bool> {
        for dep in stage.deps() {
            self.require_fresh(*dep)?;
        }
        let expected = self.expected_hash(stage)?;
        if let Some(record) = self.manifest.stages.get(stage.name()) {
            let fresh = record.hash == expected;
            if fresh && self.artifacts_present(stage) && !self.force {
                log::info!("stage {stage} is up to date; skipping");
                return Ok(false);
            }
            if !fresh && !self.force {
                bail!(
                    "refusing to overwrite stage {stage}: {} holds artifacts \
                     produced under a different configuration (pass --force to \
                     replace them)",
                    self.out.display()
                );
            }
        }
        log::info!("running stage {stage}");
        let artifacts = steps::execute(stage, self.cfg, &self.out)
            .with_context(|| format!("stage {stage} failed"))?;
        self.manifest.record(stage.name(), expected, artifacts);
        self.manifest.store(&self.out)?;
        Ok(true)
    }

    /// Runs every stage in dependency order.
    pub fn run_all(&mut self) -> Result<()> {
        let mut ran = 0usize;
        for stage in ALL_STAGES {
            if self.run(stage)? {
                ran += 1;
            }
        }
        log::info!("run complete: {ran} stages ran, {} cached", ALL_STAGES.len() - ran);
        Ok(())
    }
}
