//! JSON solution documents.
//!
//! Top-level keys are `config`, `solutions` and `aggregates`. Numbers are
//! written in the shortest form that reads back to the same `f64`, so a
//! document survives a parse/serialize round trip unchanged.

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use balconf::continuation::{ContinuationTree, RefinedSolution};
use balconf::local_solver::Termination;
use balconf::metrics::VerificationReport;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentConfig {
    #[serde(flatten)]
    pub run: RunConfig,
    pub command: String,
    pub version: String,
    /// Seconds since the Unix epoch when the run finished.
    pub created_unix: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    /// n-body solution, index `k`.
    Base,
    /// Initial guess `(q0^(k), p0^(k,l))` with a massless small body.
    Restricted,
    /// Refined (n+1)-body solution `(k, l)`.
    Continued,
    /// (n+1)-body solution from the direct method, index `m`.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionBlock {
    pub kind: SolutionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub coordinates: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    /// Restricted critical point the refinement started from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restricted_point: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    pub verification: VerificationReport,
}

impl SolutionBlock {
    pub fn flat(&self) -> Vec<f64> {
        self.coordinates.iter().flat_map(|p| *p).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregates {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sol_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sol_per_base: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sol_n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sol_distinct: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sol_direct: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_q0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failed_refinements: Vec<[usize; 2]>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    pub config: DocumentConfig,
    pub solutions: Vec<SolutionBlock>,
    pub aggregates: Aggregates,
}

pub fn to_points(q: &[f64]) -> Vec<[f64; 2]> {
    q.chunks_exact(2).map(|p| [p[0], p[1]]).collect()
}

impl SolutionDocument {
    pub fn to_json(&self) -> String {
        let mut s =
            serde_json::to_string_pretty(self).expect("documents contain only finite numbers");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            // a missing top-level key is reported at the root; name it instead
            let field = match (path.as_str(), missing_field(&inner.to_string())) {
                (".", Some(name)) => name,
                _ => path,
            };
            CliError::Document {
                path: origin.to_string(),
                field,
                message: inner.to_string(),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn blocks(&self, kind: SolutionKind) -> impl Iterator<Item = &SolutionBlock> {
        self.solutions.iter().filter(move |b| b.kind == kind)
    }

    /// Rebuilds the continuation tree from base, restricted and continued blocks.
    pub fn to_tree(&self) -> Result<ContinuationTree> {
        let run = &self.config.run;
        let n = run.n;
        let bad = |msg: String| CliError::Document {
            path: "document".into(),
            field: "solutions".into(),
            message: msg,
        };
        let mut bases: Vec<(usize, Vec<f64>)> = self
            .blocks(SolutionKind::Base)
            .map(|b| (b.k.unwrap_or(0), b.flat()))
            .collect();
        bases.sort_by_key(|(k, _)| *k);
        if bases.is_empty()
            || bases
                .iter()
                .enumerate()
                .any(|(i, (k, q))| *k != i || q.len() != 2 * n)
        {
            return Err(bad(
                "base solutions must be numbered 0, 1, ... with n bodies each".into(),
            ));
        }
        let mut restricted: Vec<Vec<(usize, [f64; 2])>> = vec![Vec::new(); bases.len()];
        let mut refined: Vec<Vec<(usize, RefinedSolution)>> = vec![Vec::new(); bases.len()];
        let continued: Vec<&SolutionBlock> = self.blocks(SolutionKind::Continued).collect();
        let source = if continued.is_empty() {
            self.blocks(SolutionKind::Restricted).collect()
        } else {
            continued
        };
        for b in source {
            let (k, l) = match (b.k, b.l) {
                (Some(k), Some(l)) if k < bases.len() => (k, l),
                _ => return Err(bad("small-mass blocks need a valid (k, l)".into())),
            };
            if b.coordinates.len() != n + 1 {
                return Err(bad(format!("block ({k}, {l}) does not have n + 1 bodies")));
            }
            let p = b.restricted_point.unwrap_or(b.coordinates[n]);
            restricted[k].push((l, p));
            if b.kind == SolutionKind::Continued {
                refined[k].push((
                    l,
                    RefinedSolution {
                        point: b.flat(),
                        objective: b.objective.unwrap_or(f64::INFINITY),
                        residual_inf: b.residual_inf.unwrap_or(f64::INFINITY),
                        accepted: b.accepted.unwrap_or(false),
                        termination: b.termination.unwrap_or(Termination::MaxIter),
                        delta_q0: b.delta_q0.unwrap_or(0.0),
                    },
                ));
            }
        }
        let is_continued = refined.iter().any(|r| !r.is_empty());
        for row in restricted.iter_mut() {
            row.sort_by_key(|(l, _)| *l);
        }
        for row in refined.iter_mut() {
            row.sort_by_key(|(l, _)| *l);
        }
        Ok(ContinuationTree {
            masses: vec![run.mass; n],
            scale: balconf::ScaleMatrix::new(run.sigma_x, run.sigma_y)?,
            n_body_solutions: bases.into_iter().map(|(_, q)| q).collect(),
            restricted_solutions: restricted
                .into_iter()
                .map(|row| row.into_iter().map(|(_, p)| p).collect())
                .collect(),
            small_mass: is_continued.then_some(run.epsilon * run.mass),
            refined_solutions: if is_continued {
                refined
                    .into_iter()
                    .map(|row| row.into_iter().map(|(_, r)| r).collect())
                    .collect()
            } else {
                Vec::new()
            },
        })
    }
}

fn missing_field(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    Some(rest.split('`').next()?.to_string())
}
