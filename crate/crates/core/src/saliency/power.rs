//! Damped random walk (PageRank-style) power iteration over a pull-oriented
//! CSR graph.
//!
//! Every node teleports uniformly and dangling mass is redistributed
//! uniformly, so each step is
//!
//! > x'ᵥ = ((1 − d) + d·D) / N + d · Σ_{u→v} xᵤ / outdeg(u)
//!
//! where D is the mass currently sitting on dangling nodes. Reductions run
//! over fixed-size chunks combined in chunk order, so the result does not
//! depend on the number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Csr;

/// Chunk size for all deterministic reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralityConfig {
    pub damping: f64,
    /// Stop once the L1 change between iterates falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for CentralityConfig {
    fn default() -> Self {
        CentralityConfig {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

impl CentralityConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(crate::Error::Config(format!(
                "damping must lie strictly inside (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(crate::Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(crate::Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Sum of a slice using fixed chunks, reduced left to right.
pub fn chunked_sum(values: &[f64]) -> f64 {
    values
        .par_chunks(CHUNK)
        .map(|c| c.iter().sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// Stationary distribution of the walk. `incoming` lists, for each node, the
/// nodes that point to it; `out_degree[u]` is the number of out-edges of `u`
/// in the same graph.
pub fn stationary(incoming: &Csr, out_degree: &[u32], cfg: &CentralityConfig) -> (Vec<f64>, IterationStats) {
    let n = incoming.num_nodes();
    debug_assert_eq!(out_degree.len(), n);
    if n == 0 {
        return (
            Vec::new(),
            IterationStats {
                converged: true,
                ..Default::default()
            },
        );
    }
    let d = cfg.damping;
    let inv_n = 1.0 / n as f64;
    let inv_out: Vec<f64> = out_degree
        .par_iter()
        .map(|&k| if k == 0 { 0.0 } else { 1.0 / k as f64 })
        .collect();

    let mut x = vec![inv_n; n];
    let mut next = vec![0.0; n];
    let mut contrib = vec![0.0; n];
    let mut dangling = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut stats = IterationStats::default();

    for it in 1..=cfg.max_iterations {
        contrib
            .par_chunks_mut(CHUNK)
            .zip(dangling.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(ci, (c, dg))| {
                let off = ci * CHUNK;
                for j in 0..c.len() {
                    let u = off + j;
                    c[j] = x[u] * inv_out[u];
                    dg[j] = if out_degree[u] == 0 { x[u] } else { 0.0 };
                }
            });
        let dangling_mass = chunked_sum(&dangling);
        let base = ((1.0 - d) + d * dangling_mass) * inv_n;

        next.par_chunks_mut(CHUNK)
            .zip(diff.par_chunks_mut(CHUNK))
            .enumerate()
            .for_each(|(ci, (out, df))| {
                let off = ci * CHUNK;
                for j in 0..out.len() {
                    let v = off + j;
                    let pulled: f64 = incoming.neighbors(v as u32).iter().map(|&u| contrib[u as usize]).sum();
                    out[j] = base + d * pulled;
                    df[j] = (out[j] - x[v]).abs();
                }
            });
        std::mem::swap(&mut x, &mut next);
        stats.iterations = it;
        stats.residual = chunked_sum(&diff);
        if stats.residual < cfg.tolerance {
            stats.converged = true;
            break;
        }
    }

    let total = chunked_sum(&x);
    x.par_iter_mut().for_each(|m| *m /= total);
    (x, stats)
}
