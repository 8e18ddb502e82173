//! TOML dataset manifests binding model ids to replicate matrix files.
//!
//! ```toml
//! name = "demo"
//! embed_dim = 2
//! reference = "H"
//!
//! [[queries]]
//! id = "q0001"
//! word_count = 12
//! split = "in_sample"
//!
//! [[models]]
//! id = "H"
//! source = "human"
//! file = "H.bin"
//! replicates = 1
//! ```
//!
//! Matrix paths are relative to the manifest's directory.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix_file::{read_bytes, read_matrix, write_matrix, MatrixEncoding};
use crate::dkps::{summarize, ModelRoster, ModelSummary, ReplicateSet, RosterEntry, Source};
use crate::error::{Error, Result};
use crate::estimators::QueryMeta;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    InSample,
    Oos,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_count: Option<u32>,
    #[serde(default)]
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl QueryRecord {
    pub fn new(id: impl Into<String>) -> Self {
        QueryRecord {
            id: id.into(),
            word_count: None,
            split: Split::InSample,
            text: None,
        }
    }
}

/// Queries `q0001..` without metadata, all in-sample.
pub fn numbered_queries(m: usize) -> Vec<QueryRecord> {
    (1..=m)
        .map(|j| QueryRecord::new(format!("q{j:04}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRecord {
    pub id: String,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub file: PathBuf,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub embed_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub queries: Vec<QueryRecord>,
    pub models: Vec<ModelRecord>,
}

/// A fully validated dataset: every model has `m * r` rows and `embed_dim`
/// columns, ids are unique, and all values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    pub name: String,
    pub embed_dim: usize,
    pub reference: Option<String>,
    pub queries: Vec<QueryRecord>,
    pub roster: ModelRoster,
    pub models: Vec<ReplicateSet>,
}

impl EmbeddingDataset {
    /// Builds and validates a dataset from in-memory parts. Roster order and
    /// model order must agree.
    pub fn new(
        name: impl Into<String>,
        queries: Vec<QueryRecord>,
        roster: ModelRoster,
        models: Vec<ReplicateSet>,
        reference: Option<String>,
    ) -> Result<Self> {
        let name = name.into();
        if models.is_empty() {
            return Err(Error::Validation(format!("dataset `{name}` has no models")));
        }
        let embed_dim = models[0].embed_dim();
        check_queries(&queries)?;
        if roster.len() != models.len() {
            return Err(Error::Alignment(format!(
                "roster has {} entries, {} models given",
                roster.len(),
                models.len()
            )));
        }
        for (entry, rs) in roster.entries().iter().zip(&models) {
            if entry.model_id != rs.model_id {
                return Err(Error::Alignment(format!(
                    "roster entry `{}` paired with model `{}`",
                    entry.model_id, rs.model_id
                )));
            }
            if rs.embed_dim() != embed_dim || rs.query_count() != queries.len() {
                return Err(Error::Shape {
                    path: PathBuf::from("<in-memory>"),
                    model: rs.model_id.clone(),
                    message: format!(
                        "{} queries x {} dims, expected {} x {embed_dim}",
                        rs.query_count(),
                        rs.embed_dim(),
                        queries.len()
                    ),
                });
            }
        }
        let ds = EmbeddingDataset {
            name,
            embed_dim,
            reference,
            queries,
            roster,
            models,
        };
        if let Some(r) = &ds.reference {
            ds.model_index(r)
                .ok_or_else(|| Error::Validation(format!("reference `{r}` is not a model")))?;
        }
        Ok(ds)
    }

    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn model_index(&self, id: &str) -> Option<usize> {
        self.models.iter().position(|m| m.model_id == id)
    }

    pub fn model(&self, id: &str) -> Option<&ReplicateSet> {
        self.model_index(id).map(|i| &self.models[i])
    }

    /// The reference model, or `NoReference` when the manifest names none.
    pub fn reference_model(&self) -> Result<&ReplicateSet> {
        let id = self.reference.as_deref().ok_or(Error::NoReference)?;
        self.model(id).ok_or(Error::NoReference)
    }

    pub fn summaries(&self) -> Result<Vec<ModelSummary>> {
        self.models.iter().map(summarize).collect()
    }

    pub fn query_meta(&self) -> Vec<QueryMeta> {
        self.queries
            .iter()
            .map(|q| QueryMeta {
                query_id: q.id.clone(),
                word_count: q.word_count,
            })
            .collect()
    }

    /// Indices of queries in the given split.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.queries.len())
            .filter(|&j| self.queries[j].split == split)
            .collect()
    }
}

fn check_queries(queries: &[QueryRecord]) -> Result<()> {
    if queries.is_empty() {
        return Err(Error::Validation("dataset has no queries".into()));
    }
    let mut seen = HashSet::new();
    for q in queries {
        if !seen.insert(q.id.as_str()) {
            return Err(Error::DuplicateId(q.id.clone()));
        }
    }
    Ok(())
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<DatasetManifest> {
    toml::from_str(text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| format!("line {}: ", text[..s.start].matches('\n').count() + 1))
            .unwrap_or_default();
        Error::file(path, format!("{loc}{}", e.message()))
    })
}

/// Reads a manifest and every matrix it references, checking all invariants.
/// `path` may be the manifest itself or a directory holding `manifest.toml`.
pub fn load_dataset(path: &Path) -> Result<EmbeddingDataset> {
    let path = if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    };
    let bytes = read_bytes(&path)?;
    let text = String::from_utf8(bytes).map_err(|_| Error::file(&path, "manifest is not UTF-8"))?;
    let manifest = parse_manifest(&text, &path)?;
    let base = path.parent().unwrap_or(Path::new("."));

    if manifest.embed_dim == 0 {
        return Err(Error::file(&path, "embed_dim must be >= 1"));
    }
    check_queries(&manifest.queries)?;
    let entries = manifest
        .models
        .iter()
        .map(|m| RosterEntry {
            model_id: m.id.clone(),
            source: m.source,
            rank: m.rank,
        })
        .collect();
    let roster = ModelRoster::new(entries)?;
    if let Some(r) = &manifest.reference {
        if !manifest.models.iter().any(|m| &m.id == r) {
            return Err(Error::file(
                &path,
                format!("reference `{r}` is not a listed model"),
            ));
        }
    }

    let m = manifest.queries.len();
    let p = manifest.embed_dim;
    let models = manifest
        .models
        .iter()
        .map(|rec| {
            let file = base.join(&rec.file);
            if rec.replicates == 0 {
                return Err(Error::Shape {
                    path: file,
                    model: rec.id.clone(),
                    message: "replicates must be >= 1".into(),
                });
            }
            let data = read_matrix(&file)?;
            let expect = (m * rec.replicates, p);
            if data.shape() != expect {
                return Err(Error::Shape {
                    path: file,
                    model: rec.id.clone(),
                    message: format!(
                        "file is {}x{}, manifest implies {}x{} ({m} queries x {} replicates, {p} dims)",
                        data.rows(),
                        data.cols(),
                        expect.0,
                        expect.1,
                        rec.replicates
                    ),
                });
            }
            ReplicateSet::new(rec.id.clone(), rec.replicates, data)
        })
        .collect::<Result<Vec<_>>>()?;

    EmbeddingDataset::new(
        manifest.name,
        manifest.queries,
        roster,
        models,
        manifest.reference,
    )
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes `manifest.toml` plus one matrix file per model into `dir`, which
/// is created if needed. Returns the manifest path.
pub fn save_dataset(
    ds: &EmbeddingDataset,
    dir: &Path,
    encoding: MatrixEncoding,
) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut used = HashSet::new();
    let mut models = Vec::with_capacity(ds.models.len());
    for (entry, rs) in ds.roster.entries().iter().zip(&ds.models) {
        let stem = file_stem(&rs.model_id);
        let mut name = format!("{stem}.{}", encoding.extension());
        let mut k = 1;
        while !used.insert(name.clone()) {
            k += 1;
            name = format!("{stem}_{k}.{}", encoding.extension());
        }
        write_matrix(&dir.join(&name), rs.data(), encoding)?;
        models.push(ModelRecord {
            id: rs.model_id.clone(),
            source: entry.source,
            rank: entry.rank,
            file: PathBuf::from(name),
            replicates: rs.replicates_per_query(),
        });
    }
    let manifest = DatasetManifest {
        name: ds.name.clone(),
        embed_dim: ds.embed_dim,
        reference: ds.reference.clone(),
        queries: ds.queries.clone(),
        models,
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::Validation(format!("cannot serialize manifest: {e}")))?;
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, text)?;
    Ok(path)
}
