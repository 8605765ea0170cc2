//! Space-time detector graph of the repetition code.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};

use crate::core_model::{derive_effective_noise, EffectiveNoise, NoiseModel, NoiseParams};
use crate::error::{Error, Result};
use crate::rep_code::Detector;

/// Fixed-point scale applied to log-likelihood weights.
pub const WEIGHT_SCALE: f64 = 65536.0;

/// ln((1-p)/p).
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

/// Integer weight used by the matcher. Always a multiple of 4.
pub fn quantize(weight: f64) -> i64 {
    4 * (weight * WEIGHT_SCALE).round() as i64
}

pub(crate) fn dequantize(iweight: i64) -> f64 {
    iweight as f64 / (4.0 * WEIGHT_SCALE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryClass {
    SpaceLeft,
    SpaceRight,
    TimePast,
    TimeFuture,
}

impl BoundaryClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryClass::SpaceLeft => "space-left",
            BoundaryClass::SpaceRight => "space-right",
            BoundaryClass::TimePast => "time-past",
            BoundaryClass::TimeFuture => "time-future",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Space,
    Time,
    Diagonal,
    BoundaryHalf,
}

impl EdgeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeKind::Space => "space",
            EdgeKind::Time => "time",
            EdgeKind::Diagonal => "diagonal",
            EdgeKind::BoundaryHalf => "boundary-half",
        }
    }
}

/// Physical fault that an edge stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    DataFlip,
    MeasurementFlip,
    Correlated,
}

/// Data-qubit footprint of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QubitFlip {
    None,
    Qubit(u32),
    /// Qubits `0..len`.
    Prefix(u32),
}

/// What choosing an edge implies for the correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeEffect {
    pub flip: QubitFlip,
    /// Check whose final-round outcome is declared wrong.
    pub future_check: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    pub a: Detector,
    /// `None` for a half-edge into the boundary.
    pub b: Option<Detector>,
    pub boundary: Option<BoundaryClass>,
    pub kind: EdgeKind,
    pub mechanism: Mechanism,
    pub prob: f64,
    pub weight: f64,
    pub iweight: i64,
    pub effect: EdgeEffect,
}

/// Closed-form distances on the uniform lattice without diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Lattice {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub ws: Option<i64>,
    pub wt: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct MatchingGraph {
    pub n: usize,
    pub rounds: usize,
    pub model: NoiseModel,
    pub edges: Vec<GraphEdge>,
    pub(crate) adjacency: Vec<Vec<u32>>,
    pub(crate) lattice: Option<Lattice>,
}

/// Noise description accepted by the graph builder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphNoise {
    Effective(EffectiveNoise),
    Physical(NoiseParams),
}

struct Candidate {
    dets: Vec<Detector>,
    prob: f64,
    mechanism: Mechanism,
    boundary: Option<BoundaryClass>,
    effect: EdgeEffect,
}

/// Builds the detector graph for `rounds` rounds on an n-qubit chain.
pub fn build_matching_graph(n: usize, rounds: usize, noise: GraphNoise, model: NoiseModel) -> Result<MatchingGraph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 2")));
    }
    if rounds < 2 {
        return Err(Error::InvalidParameter(format!("rounds = {rounds} must be at least 2")));
    }
    let (eff, p_cnot) = match noise {
        GraphNoise::Effective(e) => (e, 0.0),
        GraphNoise::Physical(np) => (derive_effective_noise(&np)?, np.p_cnot),
    };
    let diag_prob = if model == NoiseModel::CircuitCorrelated { p_cnot / 3.0 } else { 0.0 };
    let rows = rounds - 1;
    let cols = n - 1;
    let mut cands = Vec::new();

    for k in 1..rounds {
        for i in 0..n {
            let mut dets = Vec::new();
            if i >= 1 {
                dets.push(Detector::new(k - 1, i - 1));
            }
            if i < cols {
                dets.push(Detector::new(k - 1, i));
            }
            let boundary = match (i, dets.len()) {
                (0, 1) => Some(BoundaryClass::SpaceLeft),
                (_, 1) => Some(BoundaryClass::SpaceRight),
                _ => None,
            };
            cands.push(Candidate {
                dets,
                prob: eff.p_eff,
                mechanism: Mechanism::DataFlip,
                boundary,
                effect: EdgeEffect { flip: QubitFlip::Qubit(i as u32), future_check: None },
            });
        }
    }
    for k in 0..rounds {
        for c in 0..cols {
            let mut dets = Vec::new();
            if k >= 1 {
                dets.push(Detector::new(k - 1, c));
            }
            if k < rows {
                dets.push(Detector::new(k, c));
            }
            let (boundary, effect) = if k == 0 {
                (Some(BoundaryClass::TimePast), EdgeEffect { flip: QubitFlip::Prefix(c as u32 + 1), future_check: None })
            } else if k == rows {
                (Some(BoundaryClass::TimeFuture), EdgeEffect { flip: QubitFlip::None, future_check: Some(c as u32) })
            } else {
                (None, EdgeEffect { flip: QubitFlip::None, future_check: None })
            };
            cands.push(Candidate { dets, prob: eff.q_eff, mechanism: Mechanism::MeasurementFlip, boundary, effect });
        }
    }
    if diag_prob > 0.0 {
        // X on the data qubit c+1 and on the ancilla of check c right after
        // the second CNOT layer of round k.
        for k in 0..rounds {
            for c in 0..cols {
                let mut dets = Vec::new();
                if k >= 1 {
                    dets.push(Detector::new(k - 1, c));
                }
                if k < rows && c + 1 < cols {
                    dets.push(Detector::new(k, c + 1));
                }
                if dets.is_empty() {
                    continue;
                }
                let flip = if k == 0 { QubitFlip::Prefix(c as u32 + 2) } else { QubitFlip::Qubit(c as u32 + 1) };
                let future_check = if k == rows && c + 1 < cols { Some(c as u32 + 1) } else { None };
                let boundary = if dets.len() == 2 {
                    None
                } else if k == 0 {
                    Some(BoundaryClass::TimePast)
                } else if k == rows {
                    Some(BoundaryClass::TimeFuture)
                } else {
                    Some(BoundaryClass::SpaceRight)
                };
                cands.push(Candidate {
                    dets,
                    prob: diag_prob,
                    mechanism: Mechanism::Correlated,
                    boundary,
                    effect: EdgeEffect { flip, future_check },
                });
            }
        }
    }

    let mut index: HashMap<(Detector, Option<Detector>, EdgeEffect), usize> = HashMap::new();
    let mut merged: Vec<Candidate> = Vec::new();
    for cand in cands {
        if cand.prob <= 0.0 {
            continue;
        }
        let key = (cand.dets[0], cand.dets.get(1).copied(), cand.effect);
        match index.get(&key) {
            Some(&i) => {
                let p = merged[i].prob;
                merged[i].prob = p + cand.prob - 2.0 * p * cand.prob;
            }
            None => {
                index.insert(key, merged.len());
                merged.push(cand);
            }
        }
    }

    let mut edges = Vec::with_capacity(merged.len());
    let mut adjacency = vec![Vec::new(); rows * cols];
    for cand in merged {
        let weight = edge_weight(cand.prob);
        let kind = match (cand.dets.len(), cand.mechanism) {
            (1, _) => EdgeKind::BoundaryHalf,
            (_, Mechanism::DataFlip) => EdgeKind::Space,
            (_, Mechanism::MeasurementFlip) => EdgeKind::Time,
            (_, Mechanism::Correlated) => EdgeKind::Diagonal,
        };
        let id = edges.len() as u32;
        for d in &cand.dets {
            adjacency[d.row as usize * cols + d.col as usize].push(id);
        }
        edges.push(GraphEdge {
            a: cand.dets[0],
            b: cand.dets.get(1).copied(),
            boundary: cand.boundary,
            kind,
            mechanism: cand.mechanism,
            prob: cand.prob,
            weight,
            iweight: quantize(weight),
            effect: cand.effect,
        });
    }
    let lattice = if diag_prob > 0.0 {
        None
    } else {
        let w = |p: f64| (p > 0.0).then(|| quantize(edge_weight(p)));
        Some(Lattice { n, rows, cols, ws: w(eff.p_eff), wt: w(eff.q_eff) })
    };
    Ok(MatchingGraph { n, rounds, model, edges, adjacency, lattice })
}

impl MatchingGraph {
    pub fn rows(&self) -> usize {
        self.rounds - 1
    }

    pub fn cols(&self) -> usize {
        self.n - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.rows() * self.cols()
    }

    pub fn node_index(&self, d: Detector) -> usize {
        d.row as usize * self.cols() + d.col as usize
    }

    pub fn contains(&self, d: Detector) -> bool {
        (d.row as usize) < self.rows() && (d.col as usize) < self.cols()
    }

    /// Number of edges of each kind: (space, time, diagonal, boundary-half).
    pub fn edge_counts(&self) -> (usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0);
        for e in &self.edges {
            match e.kind {
                EdgeKind::Space => c.0 += 1,
                EdgeKind::Time => c.1 += 1,
                EdgeKind::Diagonal => c.2 += 1,
                EdgeKind::BoundaryHalf => c.3 += 1,
            }
        }
        c
    }

    /// Text edge list, one edge per line: endpoints, weight, kind.
    pub fn write_edge_list<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# n={} rounds={} model={} edges={}", self.n, self.rounds, self.model, self.edges.len())?;
        for e in &self.edges {
            let b = match (e.b, e.boundary) {
                (Some(b), _) => format!("({},{})", b.row, b.col),
                (None, Some(class)) => class.as_str().to_string(),
                (None, None) => "boundary".to_string(),
            };
            writeln!(out, "({},{}) {} {:.6} {}", e.a.row, e.a.col, b, e.weight, e.kind.as_str())?;
        }
        Ok(())
    }
}

impl fmt::Display for MatchingGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).map_err(|_| fmt::Error)?;
        f.write_str(&String::from_utf8_lossy(&buf))
    }
}
