//! Conversion between datasets and per-sentence triplet batches.
//!
//! The reference model supplies `x`, sequential models (roster order) the
//! preferred samples and batch models (rank order) the dispreferred ones.
//! Each model's replicates for a query are stacked in row order.

use super::dataset::{EmbeddingDataset, QueryRecord};
use crate::cpo::{MahalanobisSetting, TripletBatch};
use crate::dkps::{summarize, ModelRoster, ReplicateSet, RosterEntry, Source};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn stack_rows(sets: &[&ReplicateSet], j: usize, q: usize) -> Matrix {
    let mut data = Vec::new();
    for rs in sets {
        data.extend_from_slice(rs.block(j).as_slice());
    }
    Matrix::from_vec(data.len() / q.max(1), q, data).expect("rows of equal width")
}

impl EmbeddingDataset {
    fn by_source(&self, source: Source) -> Vec<(&RosterEntry, &ReplicateSet)> {
        self.roster
            .entries()
            .iter()
            .zip(&self.models)
            .filter(|(e, _)| e.source == source)
            .collect()
    }

    /// One triplet batch per query. The reference's replicates are averaged.
    pub fn triplets(&self) -> Result<Vec<TripletBatch>> {
        let reference = summarize(self.reference_model()?)?;
        let seq: Vec<&ReplicateSet> = self
            .by_source(Source::Sequential)
            .into_iter()
            .map(|(_, r)| r)
            .collect();
        let mut batch = self.by_source(Source::Batch);
        batch.sort_by_key(|(e, _)| e.rank);
        let batch: Vec<&ReplicateSet> = batch.into_iter().map(|(_, r)| r).collect();
        let t_w: usize = seq.iter().map(|r| r.replicates_per_query()).sum();
        let t_l: usize = batch.iter().map(|r| r.replicates_per_query()).sum();
        if t_w != t_l || t_w < 2 {
            return Err(Error::Validation(format!(
                "triplets need equal sequential and batch sample counts >= 2; \
                 dataset has {t_w} sequential and {t_l} batch samples per query"
            )));
        }
        let q = self.embed_dim;
        self.queries
            .iter()
            .enumerate()
            .map(|(j, query)| {
                TripletBatch::new(
                    query.id.clone(),
                    reference.x.row(j).to_vec(),
                    stack_rows(&seq, j, q),
                    stack_rows(&batch, j, q),
                )
            })
            .collect()
    }

    /// Roster for a Mahalanobis DKPS: the reference human followed by the
    /// sequential and/or batch models the setting uses, in dataset order.
    pub fn mahalanobis_roster(&self, setting: MahalanobisSetting) -> Result<ModelRoster> {
        let reference = self.reference_model()?.model_id.clone();
        let keep = |s: Source| match setting {
            MahalanobisSetting::Sequential => s == Source::Sequential,
            MahalanobisSetting::Batch => s == Source::Batch,
            MahalanobisSetting::Joint => s == Source::Sequential || s == Source::Batch,
        };
        let mut entries: Vec<RosterEntry> = self
            .roster
            .entries()
            .iter()
            .filter(|e| e.model_id == reference)
            .cloned()
            .collect();
        if entries.first().map(|e| e.source) != Some(Source::Human) {
            return Err(Error::Validation(format!(
                "reference `{reference}` is not tagged human"
            )));
        }
        entries.extend(
            self.roster
                .entries()
                .iter()
                .filter(|e| keep(e.source))
                .cloned(),
        );
        ModelRoster::new(entries)
    }
}

/// Dataset with a human reference `H`, sequential models `seq01..` (one per
/// preferred sample) and batch models `batch01..` ranked by dispreferred row.
pub fn dataset_from_triplets(name: &str, batches: &[TripletBatch]) -> Result<EmbeddingDataset> {
    let first = batches
        .first()
        .ok_or_else(|| Error::Validation("no triplet batches".into()))?;
    let (t, q) = (first.t(), first.dim());
    for b in batches {
        b.validate()?;
        if b.t() != t || b.dim() != q {
            return Err(Error::Validation(format!(
                "sentence `{}` is {}x{}, expected {t}x{q}",
                b.sentence_id,
                b.t(),
                b.dim()
            )));
        }
    }
    let column = |f: &dyn Fn(&TripletBatch) -> &[f64]| -> Result<Matrix> {
        let data: Vec<f64> = batches.iter().flat_map(|b| f(b).to_vec()).collect();
        Matrix::from_vec(batches.len(), q, data)
    };
    let mut entries = vec![RosterEntry {
        model_id: "H".into(),
        source: Source::Human,
        rank: None,
    }];
    let mut models = vec![ReplicateSet::new("H", 1, column(&|b| &b.x)?)?];
    for k in 0..t {
        let id = format!("seq{:02}", k + 1);
        models.push(ReplicateSet::new(
            id.clone(),
            1,
            column(&|b| b.preferred.row(k))?,
        )?);
        entries.push(RosterEntry {
            model_id: id,
            source: Source::Sequential,
            rank: None,
        });
    }
    for k in 0..t {
        let id = format!("batch{:02}", k + 1);
        models.push(ReplicateSet::new(
            id.clone(),
            1,
            column(&|b| b.dispreferred.row(k))?,
        )?);
        entries.push(RosterEntry {
            model_id: id,
            source: Source::Batch,
            rank: Some(k + 1),
        });
    }
    let queries = batches
        .iter()
        .map(|b| QueryRecord::new(b.sentence_id.clone()))
        .collect();
    EmbeddingDataset::new(
        name,
        queries,
        ModelRoster::new(entries)?,
        models,
        Some("H".into()),
    )
}
