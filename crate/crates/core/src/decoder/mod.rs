//! Minimum-weight matching decoder for the repetition-code detector graph.

mod blossom;
mod graph;
mod metric;

use std::collections::HashSet;

pub use graph::{
    build_matching_graph, edge_weight, quantize, BoundaryClass, EdgeEffect, EdgeKind, GraphEdge, GraphNoise,
    MatchingGraph, Mechanism, QubitFlip, WEIGHT_SCALE,
};

use crate::bits::{BitVector, SyndromeBits};
use crate::error::{Error, Result};
use crate::rep_code::{chain_from_syndrome, Detector};
use blossom::{CandidateGraph, Mate};
use metric::{DefectMetric, Footprint, GraphMetric, LatticeMetric};

/// Number of nearest partners seeded per defect before the matching is
/// certified against every admissible pair.
const SEED_NEIGHBOURS: usize = 6;

/// Largest defect set accepted by [`brute_force_decode`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Decoder output.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    /// Data qubits flipped by the matched paths.
    pub spatial_flips: BitVector,
    /// Checks whose final-round outcome is judged faulty.
    pub last_round_meas: SyndromeBits,
    /// Total matched weight in log-likelihood units.
    pub weight: f64,
    /// Total matched weight in fixed-point units.
    pub iweight: i64,
    /// Matched pairs; `None` marks a boundary match.
    pub pairs: Vec<(Detector, Option<Detector>)>,
    pub data_steps: u32,
    pub meas_steps: u32,
    pub correlated_steps: u32,
}

impl Correction {
    pub fn identity(n: usize) -> Self {
        Correction {
            spatial_flips: BitVector::zeros(n),
            last_round_meas: BitVector::zeros(n - 1),
            weight: 0.0,
            iweight: 0,
            pairs: Vec::new(),
            data_steps: 0,
            meas_steps: 0,
            correlated_steps: 0,
        }
    }
}

fn prepare_defects(g: &MatchingGraph, defects: &[Detector]) -> Result<Vec<Detector>> {
    let mut sorted = defects.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Structural("repeated defect".into()));
    }
    if let Some(d) = sorted.iter().find(|d| !g.contains(**d)) {
        return Err(Error::Structural(format!("defect ({},{}) outside the detector grid", d.row, d.col)));
    }
    Ok(sorted)
}

/// Exact minimum-weight matching of the defects, each defect paired with
/// another defect or with the boundary.
pub fn decode(g: &MatchingGraph, defects: &[Detector]) -> Result<Correction> {
    let defects = prepare_defects(g, defects)?;
    if defects.is_empty() {
        return Ok(Correction::identity(g.n));
    }
    match g.lattice {
        Some(lat) => decode_with(g, &defects, &mut LatticeMetric::new(lat, &defects)),
        None => decode_with(g, &defects, &mut GraphMetric::new(g, &defects)),
    }
}

/// Same as [`decode`] but always runs shortest-path searches on the
/// explicit graph.
pub fn decode_on_explicit_graph(g: &MatchingGraph, defects: &[Detector]) -> Result<Correction> {
    let defects = prepare_defects(g, defects)?;
    if defects.is_empty() {
        return Ok(Correction::identity(g.n));
    }
    decode_with(g, &defects, &mut GraphMetric::new(g, &defects))
}

fn decode_with<M: DefectMetric>(g: &MatchingGraph, defects: &[Detector], m: &mut M) -> Result<Correction> {
    let mates = match_defects(m)?;
    Ok(assemble(g, defects, m, &mates))
}

fn assemble<M: DefectMetric>(g: &MatchingGraph, defects: &[Detector], m: &mut M, mates: &[Option<usize>]) -> Correction {
    let mut fp = Footprint::new(g.n);
    let mut iweight = 0;
    let mut pairs = Vec::new();
    for (u, mate) in mates.iter().enumerate() {
        match *mate {
            None => {
                iweight += m.boundary(u).expect("boundary match without a boundary path");
                m.apply_boundary(u, &mut fp);
                pairs.push((defects[u], None));
            }
            Some(v) if v > u => {
                iweight += m.distance(u, v).expect("pair match without a path");
                m.apply_pair(u, v, &mut fp);
                pairs.push((defects[u], Some(defects[v])));
            }
            Some(_) => {}
        }
    }
    Correction {
        spatial_flips: fp.spatial(),
        last_round_meas: fp.future.clone(),
        weight: graph::dequantize(iweight),
        iweight,
        pairs,
        data_steps: fp.data_steps,
        meas_steps: fp.meas_steps,
        correlated_steps: fp.correlated_steps,
    }
}

fn admissible(d: i64, bu: Option<i64>, bv: Option<i64>) -> bool {
    match (bu, bv) {
        (Some(a), Some(b)) => d < a + b,
        _ => true,
    }
}

/// Returns the partner of every defect, `None` meaning the boundary.
fn match_defects<M: DefectMetric>(m: &mut M) -> Result<Vec<Option<usize>>> {
    let n = m.len();
    let bd: Vec<Option<i64>> = (0..n).map(|u| m.boundary(u)).collect();
    let mut in_set: HashSet<(u32, u32)> = HashSet::new();
    let mut edges: Vec<(u32, u32, i64)> = Vec::new();
    let mut buf = Vec::new();
    let mut add = |u: usize, v: usize, d: i64, edges: &mut Vec<(u32, u32, i64)>| {
        let key = (u.min(v) as u32, u.max(v) as u32);
        if in_set.insert(key) {
            edges.push((key.0, key.1, d));
            true
        } else {
            false
        }
    };
    for u in 0..n {
        m.nearest(u, SEED_NEIGHBOURS, &mut buf);
        for &(v, d) in &buf {
            if admissible(d, bd[u], bd[v]) {
                add(u, v, d, &mut edges);
            }
        }
    }
    let mut exhaustive = false;
    loop {
        let cg = CandidateGraph::from_edges(bd.clone(), &edges);
        let sol = match blossom::solve(&cg) {
            Ok(s) => s,
            Err(e) => {
                if exhaustive {
                    return Err(e);
                }
                // No perfect matching on the seed graph: admit every pair.
                exhaustive = true;
                for u in 0..n {
                    m.within(u, i64::MAX, &mut buf);
                    for &(v, d) in &buf {
                        if v > u && admissible(d, bd[u], bd[v]) {
                            add(u, v, d, &mut edges);
                        }
                    }
                }
                continue;
            }
        };
        let max_pi = sol.pi.iter().copied().max().unwrap_or(0);
        let mut added = false;
        for u in 0..n {
            let radius = sol.pi[u].saturating_add(max_pi);
            if radius <= 0 {
                continue;
            }
            m.within(u, radius, &mut buf);
            for &(v, d) in &buf {
                if v > u && admissible(d, bd[u], bd[v]) && sol.slack(u, v, d) < 0 && add(u, v, d, &mut edges) {
                    added = true;
                }
            }
        }
        if !added {
            return Ok(sol
                .mate
                .iter()
                .map(|m| match m {
                    Mate::Vertex(v) => Some(*v as usize),
                    _ => None,
                })
                .collect());
        }
    }
}

/// Exhaustive minimum-weight pairing over at most 12 defects, using
/// shortest paths on the explicit graph.
pub fn brute_force_decode(g: &MatchingGraph, defects: &[Detector]) -> Result<Correction> {
    let defects = prepare_defects(g, defects)?;
    let n = defects.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit(format!("{n} defects exceed the limit of {BRUTE_FORCE_LIMIT}")));
    }
    if n == 0 {
        return Ok(Correction::identity(g.n));
    }
    let mut m = GraphMetric::new(g, &defects);
    let bd: Vec<Option<i64>> = (0..n).map(|u| m.boundary(u)).collect();
    let mut dist = vec![vec![None; n]; n];
    for u in 0..n {
        for v in u + 1..n {
            let d = m.distance(u, v);
            dist[u][v] = d;
            dist[v][u] = d;
        }
    }
    const INF: i64 = i64::MAX / 4;
    let full = (1usize << n) - 1;
    let mut best = vec![INF; 1 << n];
    let mut choice = vec![usize::MAX; 1 << n];
    best[full] = 0;
    for mask in (0..full).rev() {
        let u = (!mask).trailing_zeros() as usize;
        if let Some(b) = bd[u] {
            let rest = best[mask | 1 << u];
            if rest < INF && b + rest < best[mask] {
                best[mask] = b + rest;
                choice[mask] = u;
            }
        }
        for v in u + 1..n {
            if mask & (1 << v) != 0 {
                continue;
            }
            if let Some(d) = dist[u][v] {
                let rest = best[mask | 1 << u | 1 << v];
                if rest < INF && d + rest < best[mask] {
                    best[mask] = d + rest;
                    choice[mask] = v;
                }
            }
        }
    }
    if best[0] >= INF {
        return Err(Error::Structural("no perfect matching exists".into()));
    }
    let mut mates = vec![None; n];
    let mut mask = 0usize;
    while mask != full {
        let u = (!mask).trailing_zeros() as usize;
        let v = choice[mask];
        if v == u {
            mask |= 1 << u;
        } else {
            mates[u] = Some(v);
            mates[v] = Some(u);
            mask |= 1 << u | 1 << v;
        }
    }
    Ok(assemble(g, &defects, &mut m, &mates))
}

/// Residual after applying the spatial flips, with its weight taken modulo
/// the global flip.
pub fn residual_after_correction(e_total: &BitVector, c: &Correction) -> Result<(BitVector, usize)> {
    if e_total.len() != c.spatial_flips.len() {
        return Err(Error::InvalidParameter(format!(
            "error length {} does not match correction length {}",
            e_total.len(),
            c.spatial_flips.len()
        )));
    }
    let res = e_total.xor(&c.spatial_flips);
    let wt = res.weight();
    Ok((res.clone(), wt.min(res.len() - wt)))
}

/// Residual obtained by steering the final frame with the last reported
/// syndrome after removing the estimated final-round measurement errors.
pub fn physical_residual(final_frame: &BitVector, last_reported: &SyndromeBits, c: &Correction) -> (BitVector, usize) {
    let res = final_frame.xor(&chain_from_syndrome(&last_reported.xor(&c.last_round_meas)));
    let wt = res.weight();
    let w = wt.min(res.len() - wt);
    (res, w)
}

#[cfg(test)]
mod tests;
