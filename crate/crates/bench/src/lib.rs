//! Fixed workloads shared by the benchmarks.

use dkps::cpo::TripletBatch;
use dkps::geometry::PairedClouds;
use dkps::simulator::{simulate, simulate_paired_clouds, simulate_triplets, CloudMap, SimConfig};
use dkps::{summarize, ModelSummary, ReplicateSet};

/// Replicate sets for `n` models, `m` queries, `r` replicates in four dimensions.
pub fn replicates(n: usize, m: usize, r: usize) -> Vec<ReplicateSet> {
    let cfg = SimConfig {
        n_models: n,
        m_queries: m,
        seed: 7,
        ..Default::default()
    };
    simulate(&cfg, r).expect("valid simulation").1
}

pub fn summaries(n: usize, m: usize, r: usize) -> Vec<ModelSummary> {
    replicates(n, m, r)
        .iter()
        .map(|rs| summarize(rs).expect("summary"))
        .collect()
}

pub fn triplets(m: usize, t: usize) -> Vec<TripletBatch> {
    let cfg = SimConfig {
        m_queries: m,
        seed: 7,
        ..SimConfig::triplet_default()
    };
    simulate_triplets(&cfg, t).expect("valid simulation")
}

pub fn clouds(m: usize) -> PairedClouds {
    let cfg = SimConfig {
        m_queries: m,
        embed_dim: 2,
        seed: 7,
        ..Default::default()
    };
    simulate_paired_clouds(&cfg, CloudMap::Identity).expect("valid simulation")
}
