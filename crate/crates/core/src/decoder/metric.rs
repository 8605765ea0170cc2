//! Defect-to-defect and defect-to-boundary distances with the correction
//! footprint of the corresponding shortest paths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::graph::{BoundaryClass, EdgeEffect, Lattice, MatchingGraph, Mechanism, QubitFlip};
use crate::bits::BitVector;
use crate::rep_code::Detector;

const NONE: u32 = u32::MAX;

/// XOR accumulator for path footprints.
#[derive(Debug, Clone)]
pub(crate) struct Footprint {
    diff: Vec<bool>,
    pub future: BitVector,
    pub data_steps: u32,
    pub meas_steps: u32,
    pub correlated_steps: u32,
    /// Explicit edges walked, when known.
    pub path_edges: Vec<u32>,
}

impl Footprint {
    pub fn new(n: usize) -> Self {
        Footprint {
            diff: vec![false; n + 1],
            future: BitVector::zeros(n - 1),
            data_steps: 0,
            meas_steps: 0,
            correlated_steps: 0,
            path_edges: Vec::new(),
        }
    }

    pub(crate) fn flip_range(&mut self, lo: usize, hi: usize) {
        self.diff[lo] ^= true;
        self.diff[hi] ^= true;
    }

    pub(crate) fn apply(&mut self, effect: &EdgeEffect, mechanism: Mechanism) {
        match effect.flip {
            QubitFlip::None => {}
            QubitFlip::Qubit(i) => self.flip_range(i as usize, i as usize + 1),
            QubitFlip::Prefix(len) => self.flip_range(0, len as usize),
        }
        if let Some(c) = effect.future_check {
            self.future.flip(c as usize);
        }
        match mechanism {
            Mechanism::DataFlip => self.data_steps += 1,
            Mechanism::MeasurementFlip => self.meas_steps += 1,
            Mechanism::Correlated => self.correlated_steps += 1,
        }
    }

    pub fn spatial(&self) -> BitVector {
        let n = self.diff.len() - 1;
        let mut out = BitVector::zeros(n);
        let mut on = false;
        for i in 0..n {
            on ^= self.diff[i];
            if on {
                out.set(i, true);
            }
        }
        out
    }
}

pub(crate) trait DefectMetric {
    fn len(&self) -> usize;
    fn boundary(&mut self, u: usize) -> Option<i64>;
    /// Up to `k` other defects closest to `u`, in no particular order.
    fn nearest(&mut self, u: usize, k: usize, out: &mut Vec<(usize, i64)>);
    /// Every other defect strictly closer than `radius`.
    fn within(&mut self, u: usize, radius: i64, out: &mut Vec<(usize, i64)>);
    fn distance(&mut self, u: usize, v: usize) -> Option<i64>;
    fn apply_pair(&mut self, u: usize, v: usize, fp: &mut Footprint);
    fn apply_boundary(&mut self, u: usize, fp: &mut Footprint);
}

pub(crate) struct LatticeMetric<'a> {
    lat: Lattice,
    defects: &'a [Detector],
    row_start: Vec<usize>,
}

impl<'a> LatticeMetric<'a> {
    /// `defects` must be sorted.
    pub fn new(lat: Lattice, defects: &'a [Detector]) -> Self {
        let mut row_start = vec![0; lat.rows + 1];
        for r in 0..=lat.rows {
            row_start[r] = defects.partition_point(|d| (d.row as usize) < r);
        }
        LatticeMetric { lat, defects, row_start }
    }

    fn dist(&self, a: Detector, b: Detector) -> Option<i64> {
        let dc = (a.col as i64 - b.col as i64).abs();
        let dr = (a.row as i64 - b.row as i64).abs();
        let s = match (dc, self.lat.ws) {
            (0, _) => 0,
            (_, Some(w)) => dc * w,
            (_, None) => return None,
        };
        let t = match (dr, self.lat.wt) {
            (0, _) => 0,
            (_, Some(w)) => dr * w,
            (_, None) => return None,
        };
        Some(s + t)
    }

    fn boundary_choice(&self, a: Detector) -> Option<(i64, BoundaryClass)> {
        let (r, c) = (a.row as i64, a.col as i64);
        let mut best: Option<(i64, BoundaryClass)> = None;
        let mut offer = |d: Option<i64>, class| {
            if let Some(d) = d {
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, class));
                }
            }
        };
        offer(self.lat.ws.map(|w| (c + 1) * w), BoundaryClass::SpaceLeft);
        offer(self.lat.ws.map(|w| (self.lat.cols as i64 - c) * w), BoundaryClass::SpaceRight);
        offer(self.lat.wt.map(|w| (r + 1) * w), BoundaryClass::TimePast);
        offer(self.lat.wt.map(|w| (self.lat.rows as i64 - r) * w), BoundaryClass::TimeFuture);
        best
    }

    fn row_slice(&self, r: usize) -> (usize, usize) {
        (self.row_start[r], self.row_start[r + 1])
    }

    /// Visits defects in rows ordered by |dr|, calling `visit` for those
    /// with distance below the current cutoff returned by `cutoff`.
    fn scan(&self, u: usize, mut cutoff: impl FnMut() -> i64, mut visit: impl FnMut(usize, i64)) {
        let d0 = self.defects[u];
        let (r0, c0) = (d0.row as usize, d0.col as i64);
        for dr in 0..self.lat.rows {
            let cost_r = if dr == 0 {
                0
            } else {
                match self.lat.wt {
                    Some(w) => dr as i64 * w,
                    None => break,
                }
            };
            if cost_r >= cutoff() {
                break;
            }
            let mut rows = Vec::with_capacity(2);
            if dr <= r0 {
                rows.push(r0 - dr);
            }
            if dr > 0 && r0 + dr < self.lat.rows {
                rows.push(r0 + dr);
            }
            for r in rows {
                let (lo, hi) = self.row_slice(r);
                let row = &self.defects[lo..hi];
                let pos = lo + row.partition_point(|d| (d.col as i64) < c0);
                let mut i = pos;
                while i < hi {
                    let dc = self.defects[i].col as i64 - c0;
                    let d = match (dc, self.lat.ws) {
                        (0, _) => cost_r,
                        (_, Some(w)) => cost_r + dc * w,
                        (_, None) => break,
                    };
                    if d >= cutoff() {
                        break;
                    }
                    if i != u {
                        visit(i, d);
                    }
                    i += 1;
                }
                let mut i = pos;
                while i > lo {
                    i -= 1;
                    let dc = c0 - self.defects[i].col as i64;
                    let d = match (dc, self.lat.ws) {
                        (0, _) => cost_r,
                        (_, Some(w)) => cost_r + dc * w,
                        (_, None) => break,
                    };
                    if d >= cutoff() {
                        break;
                    }
                    if i != u {
                        visit(i, d);
                    }
                }
            }
        }
    }
}

impl DefectMetric for LatticeMetric<'_> {
    fn len(&self) -> usize {
        self.defects.len()
    }

    fn boundary(&mut self, u: usize) -> Option<i64> {
        self.boundary_choice(self.defects[u]).map(|(d, _)| d)
    }

    fn nearest(&mut self, u: usize, k: usize, out: &mut Vec<(usize, i64)>) {
        out.clear();
        if k == 0 {
            return;
        }
        let best = std::cell::RefCell::new(BinaryHeap::<(i64, usize)>::new());
        self.scan(
            u,
            || {
                let b = best.borrow();
                if b.len() < k { i64::MAX } else { b.peek().unwrap().0 }
            },
            |v, d| {
                let mut b = best.borrow_mut();
                b.push((d, v));
                if b.len() > k {
                    b.pop();
                }
            },
        );
        out.extend(best.into_inner().into_iter().map(|(d, v)| (v, d)));
    }

    fn within(&mut self, u: usize, radius: i64, out: &mut Vec<(usize, i64)>) {
        out.clear();
        self.scan(u, || radius, |v, d| out.push((v, d)));
    }

    fn distance(&mut self, u: usize, v: usize) -> Option<i64> {
        self.dist(self.defects[u], self.defects[v])
    }

    fn apply_pair(&mut self, u: usize, v: usize, fp: &mut Footprint) {
        let (a, b) = (self.defects[u], self.defects[v]);
        let (lo, hi) = (a.col.min(b.col) as usize, a.col.max(b.col) as usize);
        if lo != hi {
            fp.flip_range(lo + 1, hi + 1);
        }
        fp.data_steps += (hi - lo) as u32;
        fp.meas_steps += a.row.abs_diff(b.row);
    }

    fn apply_boundary(&mut self, u: usize, fp: &mut Footprint) {
        let a = self.defects[u];
        let Some((_, class)) = self.boundary_choice(a) else { return };
        let (r, c) = (a.row as usize, a.col as usize);
        match class {
            BoundaryClass::SpaceLeft => {
                fp.flip_range(0, c + 1);
                fp.data_steps += c as u32 + 1;
            }
            BoundaryClass::SpaceRight => {
                fp.flip_range(c + 1, self.lat.n);
                fp.data_steps += (self.lat.n - c - 1) as u32;
            }
            BoundaryClass::TimePast => {
                fp.flip_range(0, c + 1);
                fp.meas_steps += r as u32 + 1;
            }
            BoundaryClass::TimeFuture => {
                fp.future.flip(c);
                fp.meas_steps += (self.lat.rows - r) as u32;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Goal {
    Radius(i64),
    Target(u32),
    Boundary,
    Nearest(usize),
}

/// Shortest paths on the explicit detector graph.
pub(crate) struct GraphMetric<'a> {
    g: &'a MatchingGraph,
    defects: &'a [Detector],
    defect_at: Vec<u32>,
    dist: Vec<i64>,
    pred: Vec<u32>,
    touched: Vec<u32>,
    heap: BinaryHeap<Reverse<(i64, u32)>>,
    boundary_cache: Vec<Option<Option<(i64, u32)>>>,
}

impl<'a> GraphMetric<'a> {
    pub fn new(g: &'a MatchingGraph, defects: &'a [Detector]) -> Self {
        let nodes = g.num_nodes();
        let mut defect_at = vec![NONE; nodes];
        for (i, d) in defects.iter().enumerate() {
            defect_at[g.node_index(*d)] = i as u32;
        }
        GraphMetric {
            g,
            defects,
            defect_at,
            dist: vec![i64::MAX; nodes],
            pred: vec![NONE; nodes],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            boundary_cache: vec![None; defects.len()],
        }
    }

    fn other_end(&self, e: u32, x: usize) -> Option<usize> {
        let edge = &self.g.edges[e as usize];
        let b = edge.b?;
        let (ia, ib) = (self.g.node_index(edge.a), self.g.node_index(b));
        Some(if ia == x { ib } else { ia })
    }

    /// Runs Dijkstra from defect `u`. Returns defects found (for radius and
    /// nearest goals) or the best boundary half-edge (for the boundary goal).
    fn search(&mut self, u: usize, goal: Goal, found: &mut Vec<(usize, i64)>) -> Option<(i64, u32)> {
        for &x in &self.touched {
            self.dist[x as usize] = i64::MAX;
            self.pred[x as usize] = NONE;
        }
        self.touched.clear();
        self.heap.clear();
        found.clear();
        let src = self.g.node_index(self.defects[u]);
        self.dist[src] = 0;
        self.touched.push(src as u32);
        self.heap.push(Reverse((0, src as u32)));
        let mut best: Option<(i64, u32)> = None;
        while let Some(Reverse((d, x))) = self.heap.pop() {
            let x = x as usize;
            if d > self.dist[x] {
                continue;
            }
            match goal {
                Goal::Radius(r) => {
                    if d >= r {
                        break;
                    }
                }
                Goal::Target(t) => {
                    if x == t as usize {
                        break;
                    }
                }
                Goal::Boundary => {
                    if best.is_some_and(|(b, _)| d >= b) {
                        break;
                    }
                }
                Goal::Nearest(k) => {
                    if found.len() >= k {
                        break;
                    }
                }
            }
            let di = self.defect_at[x];
            if di != NONE && di as usize != u && matches!(goal, Goal::Radius(_) | Goal::Nearest(_)) {
                found.push((di as usize, d));
            }
            for &e in &self.g.adjacency[x] {
                let w = self.g.edges[e as usize].iweight;
                match self.other_end(e, x) {
                    None => {
                        if matches!(goal, Goal::Boundary) && best.is_none_or(|(b, _)| d + w < b) {
                            best = Some((d + w, e));
                        }
                    }
                    Some(y) => {
                        let nd = d + w;
                        if nd < self.dist[y] {
                            if self.dist[y] == i64::MAX {
                                self.touched.push(y as u32);
                            }
                            self.dist[y] = nd;
                            self.pred[y] = e;
                            self.heap.push(Reverse((nd, y as u32)));
                        }
                    }
                }
            }
        }
        best
    }

    fn boundary_choice(&mut self, u: usize) -> Option<(i64, u32)> {
        if let Some(b) = self.boundary_cache[u] {
            return b;
        }
        let mut scratch = Vec::new();
        let b = self.search(u, Goal::Boundary, &mut scratch);
        self.boundary_cache[u] = Some(b);
        b
    }

    fn walk_back(&self, mut x: usize, fp: &mut Footprint) {
        while self.pred[x] != NONE {
            let e = self.pred[x];
            let edge = &self.g.edges[e as usize];
            fp.apply(&edge.effect, edge.mechanism);
            fp.path_edges.push(e);
            x = self.other_end(e, x).unwrap();
        }
    }
}

impl DefectMetric for GraphMetric<'_> {
    fn len(&self) -> usize {
        self.defects.len()
    }

    fn boundary(&mut self, u: usize) -> Option<i64> {
        self.boundary_choice(u).map(|(d, _)| d)
    }

    fn nearest(&mut self, u: usize, k: usize, out: &mut Vec<(usize, i64)>) {
        self.search(u, Goal::Nearest(k), out);
    }

    fn within(&mut self, u: usize, radius: i64, out: &mut Vec<(usize, i64)>) {
        self.search(u, Goal::Radius(radius), out);
    }

    fn distance(&mut self, u: usize, v: usize) -> Option<i64> {
        let t = self.g.node_index(self.defects[v]);
        let mut scratch = Vec::new();
        self.search(u, Goal::Target(t as u32), &mut scratch);
        (self.dist[t] != i64::MAX).then_some(self.dist[t])
    }

    fn apply_pair(&mut self, u: usize, v: usize, fp: &mut Footprint) {
        let t = self.g.node_index(self.defects[v]);
        let mut scratch = Vec::new();
        self.search(u, Goal::Target(t as u32), &mut scratch);
        self.walk_back(t, fp);
    }

    fn apply_boundary(&mut self, u: usize, fp: &mut Footprint) {
        let Some((_, e)) = self.boundary_choice(u) else { return };
        let edge = &self.g.edges[e as usize];
        let x = self.g.node_index(edge.a);
        fp.apply(&edge.effect, edge.mechanism);
        fp.path_edges.push(e);
        let mut scratch = Vec::new();
        self.search(u, Goal::Target(x as u32), &mut scratch);
        self.walk_back(x, fp);
    }
}
