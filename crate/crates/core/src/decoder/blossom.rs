//! Exact minimum-weight perfect matching with an open boundary.
//!
//! Every vertex must be matched either to another vertex or to the
//! boundary, which has unlimited capacity and no dual variable. The solver
//! is a primal-dual blossom algorithm in which all alternating trees grow
//! simultaneously on a shared clock. Dual values are stored lazily as
//! `(value, time)` pairs so a dual update costs nothing; tight edges,
//! boundary contacts and vanishing blossom duals are found through a
//! priority queue of predicted event times. Trees that are not involved in
//! an augmentation survive it.
//!
//! All weights must be multiples of 4. Every outer vertex then carries a
//! dual of the same parity and every event time is an integer.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mate {
    Unmatched,
    Vertex(u32),
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Free,
    Plus,
    Minus,
}

/// Sparse candidate graph in adjacency-array form. Every edge appears once
/// in each endpoint's list.
#[derive(Debug, Clone, Default)]
pub(crate) struct CandidateGraph {
    pub boundary: Vec<Option<i64>>,
    pub start: Vec<usize>,
    pub nbr: Vec<u32>,
    pub weight: Vec<i64>,
}

impl CandidateGraph {
    pub fn from_edges(boundary: Vec<Option<i64>>, edges: &[(u32, u32, i64)]) -> Self {
        let n = boundary.len();
        let mut deg = vec![0usize; n + 1];
        for &(a, b, _) in edges {
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for v in 0..n {
            start[v + 1] = start[v] + deg[v];
        }
        let mut fill = start.clone();
        let mut nbr = vec![0u32; start[n]];
        let mut weight = vec![0i64; start[n]];
        for &(a, b, w) in edges {
            for (x, y) in [(a, b), (b, a)] {
                let slot = fill[x as usize];
                nbr[slot] = y;
                weight[slot] = w;
                fill[x as usize] += 1;
            }
        }
        CandidateGraph { boundary, start, nbr, weight }
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }
}

#[derive(Debug, Clone)]
struct Node {
    parent: u32,
    label: Label,
    tree: u32,
    /// For a Minus node: (vertex in the parent Plus node, vertex in this node).
    tree_edge: (u32, u32),
    y0: i64,
    t0: i64,
    base: u32,
    children: Vec<u32>,
    /// `edges[i]` joins `children[i]` and `children[(i + 1) % k]`, written
    /// as (vertex in the first, vertex in the second).
    edges: Vec<(u32, u32)>,
    alive: bool,
}

impl Node {
    fn vertex(v: u32, y0: i64) -> Self {
        Node {
            parent: NONE,
            label: Label::Free,
            tree: NONE,
            tree_edge: (NONE, NONE),
            y0,
            t0: 0,
            base: v,
            children: Vec::new(),
            edges: Vec::new(),
            alive: true,
        }
    }
}

const EV_EXPAND: u8 = 0;
const EV_EDGE: u8 = 1;
const EV_BOUNDARY: u8 = 2;

/// Final matching together with the dual certificate.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub mate: Vec<Mate>,
    /// Sum of the duals of every set containing the vertex.
    pub pi: Vec<i64>,
    parent: Vec<u32>,
    dual: Vec<i64>,
}

impl Solution {
    /// Reduced cost of a vertex pair at distance `d` under the final duals.
    pub fn slack(&self, u: usize, v: usize, d: i64) -> i64 {
        let mut up = Vec::new();
        let mut x = self.parent[u];
        while x != NONE {
            up.push(x);
            x = self.parent[x as usize];
        }
        let mut x = self.parent[v];
        while x != NONE && !up.contains(&x) {
            x = self.parent[x as usize];
        }
        let mut common = 0;
        while x != NONE {
            common += self.dual[x as usize];
            x = self.parent[x as usize];
        }
        d - self.pi[u] - self.pi[v] + 2 * common
    }
}

pub(crate) struct Solver<'g> {
    g: &'g CandidateGraph,
    n: usize,
    nodes: Vec<Node>,
    free_ids: Vec<u32>,
    top: Vec<u32>,
    pi_fixed: Vec<i64>,
    mate: Vec<Mate>,
    now: i64,
    heap: BinaryHeap<Reverse<(i64, u8, u32, u32)>>,
    trees: Vec<Vec<u32>>,
    alive_trees: usize,
    stamp: Vec<u32>,
    stamp_id: u32,
    scratch: Vec<u32>,
}

impl<'g> Solver<'g> {
    pub fn new(g: &'g CandidateGraph) -> Result<Self> {
        let n = g.len();
        let mut y = vec![0i64; n];
        for (v, yv) in y.iter_mut().enumerate() {
            let mut best = g.boundary[v];
            for idx in g.start[v]..g.start[v + 1] {
                let half = g.weight[idx] / 2;
                best = Some(best.map_or(half, |b| b.min(half)));
            }
            *yv = best.ok_or_else(|| Error::Structural(format!("vertex {v} has no edge and no boundary path")))?;
        }
        let mut s = Solver {
            g,
            n,
            nodes: (0..n).map(|v| Node::vertex(v as u32, y[v])).collect(),
            free_ids: Vec::new(),
            top: (0..n as u32).collect(),
            pi_fixed: vec![0; n],
            mate: vec![Mate::Unmatched; n],
            now: 0,
            heap: BinaryHeap::new(),
            trees: Vec::new(),
            alive_trees: 0,
            stamp: vec![0; n],
            stamp_id: 0,
            scratch: Vec::new(),
        };
        s.greedy_start(&y);
        Ok(s)
    }

    fn greedy_start(&mut self, y: &[i64]) {
        for v in 0..self.n {
            if self.mate[v] != Mate::Unmatched {
                continue;
            }
            if self.g.boundary[v] == Some(y[v]) {
                self.mate[v] = Mate::Boundary;
                continue;
            }
            for idx in self.g.start[v]..self.g.start[v + 1] {
                let u = self.g.nbr[idx] as usize;
                if self.mate[u] == Mate::Unmatched && y[u] + y[v] == self.g.weight[idx] {
                    self.mate[v] = Mate::Vertex(u as u32);
                    self.mate[u] = Mate::Vertex(v as u32);
                    break;
                }
            }
        }
        for v in 0..self.n {
            if self.mate[v] == Mate::Unmatched {
                let t = self.trees.len() as u32;
                self.trees.push(vec![v as u32]);
                self.alive_trees += 1;
                let node = &mut self.nodes[v];
                node.label = Label::Plus;
                node.tree = t;
            }
        }
        for v in 0..self.n {
            if self.nodes[v].label == Label::Plus {
                self.push_vertex(v as u32);
            }
        }
    }

    #[inline]
    fn rate(&self, x: u32) -> i64 {
        match self.nodes[x as usize].label {
            Label::Plus => 1,
            Label::Minus => -1,
            Label::Free => 0,
        }
    }

    #[inline]
    fn y(&self, x: u32) -> i64 {
        let node = &self.nodes[x as usize];
        node.y0 + self.rate(x) * (self.now - node.t0)
    }

    fn relabel(&mut self, x: u32, label: Label) {
        let y = self.y(x);
        let node = &mut self.nodes[x as usize];
        node.y0 = y;
        node.t0 = self.now;
        node.label = label;
    }

    #[inline]
    fn pi(&self, v: u32) -> i64 {
        self.pi_fixed[v as usize] + self.y(self.top[v as usize])
    }

    #[inline]
    fn base(&self, x: u32) -> u32 {
        self.nodes[x as usize].base
    }

    fn leaves(&self, x: u32, out: &mut Vec<u32>) {
        if (x as usize) < self.n {
            out.push(x);
        } else {
            for &c in &self.nodes[x as usize].children {
                self.leaves(c, out);
            }
        }
    }

    fn edge_time(&self, u: u32, idx: usize) -> Option<i64> {
        let v = self.g.nbr[idx];
        let (a, c) = (self.top[u as usize], self.top[v as usize]);
        if a == c {
            return None;
        }
        let r = self.rate(a) + self.rate(c);
        if r <= 0 {
            return None;
        }
        let slack = self.g.weight[idx] - self.pi(u) - self.pi(v);
        debug_assert!(slack >= 0, "negative slack {slack} on edge {u}-{v}");
        if r == 2 {
            debug_assert!(slack % 2 == 0, "odd slack between outer vertices");
            Some(self.now + slack / 2)
        } else {
            Some(self.now + slack)
        }
    }

    fn boundary_time(&self, u: u32) -> Option<i64> {
        if self.nodes[self.top[u as usize] as usize].label != Label::Plus {
            return None;
        }
        let d = self.g.boundary[u as usize]?;
        let slack = d - self.pi(u);
        debug_assert!(slack >= 0, "negative boundary slack at {u}");
        Some(self.now + slack)
    }

    fn expand_time(&self, b: u32) -> Option<i64> {
        let node = &self.nodes[b as usize];
        if (b as usize) < self.n || !node.alive || node.parent != NONE || node.label != Label::Minus {
            return None;
        }
        Some(self.now + self.y(b))
    }

    fn push_vertex(&mut self, u: u32) {
        let (lo, hi) = (self.g.start[u as usize], self.g.start[u as usize + 1]);
        for idx in lo..hi {
            if let Some(t) = self.edge_time(u, idx) {
                self.heap.push(Reverse((t, EV_EDGE, u, idx as u32)));
            }
        }
        if let Some(t) = self.boundary_time(u) {
            self.heap.push(Reverse((t, EV_BOUNDARY, u, 0)));
        }
    }

    fn push_node(&mut self, x: u32) {
        let mut vs = std::mem::take(&mut self.scratch);
        vs.clear();
        self.leaves(x, &mut vs);
        for &v in &vs {
            self.push_vertex(v);
        }
        self.scratch = vs;
        if let Some(t) = self.expand_time(x) {
            self.heap.push(Reverse((t, EV_EXPAND, x, 0)));
        }
    }

    pub fn solve(mut self) -> Result<Solution> {
        while self.alive_trees > 0 {
            let Reverse((t, class, a, b)) = self
                .heap
                .pop()
                .ok_or_else(|| Error::Structural("alternating trees left with no reachable event".into()))?;
            let current = match class {
                EV_EXPAND => self.expand_time(a),
                EV_EDGE => self.edge_time(a, b as usize),
                _ => self.boundary_time(a),
            };
            let Some(current) = current else { continue };
            if current != t {
                self.heap.push(Reverse((current, class, a, b)));
                continue;
            }
            debug_assert!(t >= self.now);
            self.now = t;
            match class {
                EV_EXPAND => self.expand(a),
                EV_EDGE => self.on_tight_edge(a, self.g.nbr[b as usize]),
                _ => self.on_boundary(a),
            }
        }
        Ok(self.into_solution())
    }

    fn into_solution(self) -> Solution {
        let pi = (0..self.n as u32).map(|v| self.pi(v)).collect();
        let parent = self.nodes.iter().map(|x| x.parent).collect();
        let dual = (0..self.nodes.len() as u32).map(|x| self.y(x)).collect();
        Solution { mate: self.mate, pi, parent, dual }
    }

    fn on_tight_edge(&mut self, mut u: u32, mut v: u32) {
        let (mut a, mut c) = (self.top[u as usize], self.top[v as usize]);
        if self.nodes[a as usize].label != Label::Plus {
            std::mem::swap(&mut u, &mut v);
            std::mem::swap(&mut a, &mut c);
        }
        match self.nodes[c as usize].label {
            Label::Free => match self.mate[self.base(c) as usize] {
                Mate::Vertex(x) => self.grow(a, u, c, v, x),
                Mate::Boundary => {
                    let t = self.nodes[a as usize].tree;
                    self.augment_path(a, u, Mate::Vertex(v));
                    self.set_base(c, v);
                    self.mate[v as usize] = Mate::Vertex(u);
                    self.dissolve(t);
                }
                Mate::Unmatched => unreachable!("unlabelled node without a mate"),
            },
            Label::Plus => {
                let (ta, tc) = (self.nodes[a as usize].tree, self.nodes[c as usize].tree);
                if ta == tc {
                    self.form_blossom(u, v);
                } else {
                    self.augment_path(a, u, Mate::Vertex(v));
                    self.augment_path(c, v, Mate::Vertex(u));
                    self.dissolve(ta);
                    self.dissolve(tc);
                }
            }
            Label::Minus => unreachable!("tight edge between outer and inner nodes"),
        }
    }

    fn on_boundary(&mut self, u: u32) {
        let a = self.top[u as usize];
        let t = self.nodes[a as usize].tree;
        self.augment_path(a, u, Mate::Boundary);
        self.dissolve(t);
    }

    fn grow(&mut self, a: u32, u: u32, c: u32, v: u32, x: u32) {
        let t = self.nodes[a as usize].tree;
        let d = self.top[x as usize];
        self.relabel(c, Label::Minus);
        self.nodes[c as usize].tree = t;
        self.nodes[c as usize].tree_edge = (u, v);
        self.relabel(d, Label::Plus);
        self.nodes[d as usize].tree = t;
        self.trees[t as usize].push(c);
        self.trees[t as usize].push(d);
        if let Some(time) = self.expand_time(c) {
            self.heap.push(Reverse((time, EV_EXPAND, c, 0)));
        }
        self.push_node(d);
    }

    fn dissolve(&mut self, t: u32) {
        let members = std::mem::take(&mut self.trees[t as usize]);
        for &x in &members {
            let node = &self.nodes[x as usize];
            if !node.alive || node.parent != NONE || node.tree != t {
                continue;
            }
            let was_minus = node.label == Label::Minus;
            self.relabel(x, Label::Free);
            let node = &mut self.nodes[x as usize];
            node.tree = NONE;
            node.tree_edge = (NONE, NONE);
            if was_minus {
                self.push_node(x);
            }
        }
        self.alive_trees -= 1;
    }

    /// Flips the alternating path from `v` (inside the Plus node `node`) to
    /// the root of its tree; `v` is then matched through `link`.
    fn augment_path(&mut self, mut node: u32, mut v: u32, mut link: Mate) {
        loop {
            let old = self.mate[self.base(node) as usize];
            self.set_base(node, v);
            self.mate[v as usize] = link;
            match old {
                Mate::Unmatched => return,
                Mate::Vertex(w) => {
                    let m = self.top[w as usize];
                    let (x, y) = self.nodes[m as usize].tree_edge;
                    self.set_base(m, y);
                    self.mate[y as usize] = Mate::Vertex(x);
                    node = self.top[x as usize];
                    v = x;
                    link = Mate::Vertex(y);
                }
                Mate::Boundary => unreachable!("outer tree node matched to the boundary"),
            }
        }
    }

    fn child_of(&self, b: u32, v: u32) -> u32 {
        let mut x = v;
        while self.nodes[x as usize].parent != b {
            x = self.nodes[x as usize].parent;
            debug_assert!(x != NONE);
        }
        x
    }

    /// Re-matches the inside of blossom `b` so that vertex `v` becomes its
    /// base. The mate of `v` itself is left to the caller.
    fn set_base(&mut self, b: u32, v: u32) {
        if (b as usize) < self.n {
            return;
        }
        let t = self.child_of(b, v);
        self.set_base(t, v);
        let k = self.nodes[b as usize].children.len();
        let i = self.nodes[b as usize].children.iter().position(|&c| c == t).unwrap();
        if i != 0 {
            let mut pairs = Vec::new();
            if i % 2 == 0 {
                let mut j = i - 2;
                loop {
                    pairs.push(j);
                    if j == 0 {
                        break;
                    }
                    j -= 2;
                }
            } else {
                let mut j = i + 1;
                while j < k {
                    pairs.push(j);
                    j += 2;
                }
            }
            for j in pairs {
                let (p, q) = self.nodes[b as usize].edges[j];
                let cj = self.nodes[b as usize].children[j];
                let cn = self.nodes[b as usize].children[(j + 1) % k];
                self.set_base(cj, p);
                self.set_base(cn, q);
                self.mate[p as usize] = Mate::Vertex(q);
                self.mate[q as usize] = Mate::Vertex(p);
            }
            let node = &mut self.nodes[b as usize];
            node.children.rotate_left(i);
            node.edges.rotate_left(i);
        }
        self.nodes[b as usize].base = v;
    }

    fn plus_parent(&self, x: u32) -> Option<u32> {
        match self.mate[self.base(x) as usize] {
            Mate::Vertex(w) => {
                let m = self.top[w as usize];
                Some(self.top[self.nodes[m as usize].tree_edge.0 as usize])
            }
            _ => None,
        }
    }

    fn path_up(&self, start: u32, lca: u32) -> (Vec<u32>, Vec<(u32, u32)>) {
        let mut nodes = vec![start];
        let mut edges = Vec::new();
        let mut x = start;
        while x != lca {
            let b = self.base(x);
            let Mate::Vertex(w) = self.mate[b as usize] else { unreachable!("root reached before common ancestor") };
            let m = self.top[w as usize];
            nodes.push(m);
            edges.push((b, w));
            let (px, py) = self.nodes[m as usize].tree_edge;
            let p = self.top[px as usize];
            nodes.push(p);
            edges.push((py, px));
            x = p;
        }
        (nodes, edges)
    }

    fn alloc_node(&mut self) -> u32 {
        if let Some(id) = self.free_ids.pop() {
            return id;
        }
        self.nodes.push(Node::vertex(NONE, 0));
        self.stamp.push(0);
        (self.nodes.len() - 1) as u32
    }

    fn form_blossom(&mut self, u: u32, v: u32) {
        let (a, c) = (self.top[u as usize], self.top[v as usize]);
        self.stamp_id += 1;
        let sid = self.stamp_id;
        let (mut pa, mut pc) = (Some(a), Some(c));
        let lca = loop {
            if let Some(x) = pa {
                if self.stamp[x as usize] == sid {
                    break x;
                }
                self.stamp[x as usize] = sid;
                pa = self.plus_parent(x);
            }
            if let Some(x) = pc {
                if self.stamp[x as usize] == sid {
                    break x;
                }
                self.stamp[x as usize] = sid;
                pc = self.plus_parent(x);
            }
        };
        let (na, ea) = self.path_up(a, lca);
        let (nc, ec) = self.path_up(c, lca);
        let mut children = vec![lca];
        let mut edges = Vec::with_capacity(na.len() + nc.len());
        for i in (0..na.len() - 1).rev() {
            children.push(na[i]);
            edges.push((ea[i].1, ea[i].0));
        }
        edges.push((u, v));
        for i in 0..nc.len() - 1 {
            children.push(nc[i]);
            edges.push(ec[i]);
        }
        debug_assert_eq!(children.len(), edges.len());
        debug_assert!(children.len() % 2 == 1);

        let t = self.nodes[lca as usize].tree;
        let base = self.base(lca);
        let b = self.alloc_node();
        let mut reactivated = Vec::new();
        let mut vs = Vec::new();
        for &ch in &children {
            let yc = self.y(ch);
            let was_minus = self.nodes[ch as usize].label == Label::Minus;
            let node = &mut self.nodes[ch as usize];
            node.y0 = yc;
            node.t0 = self.now;
            node.label = Label::Free;
            node.tree = NONE;
            node.parent = b;
            vs.clear();
            self.leaves(ch, &mut vs);
            for &x in &vs {
                self.pi_fixed[x as usize] += yc;
                self.top[x as usize] = b;
            }
            if was_minus {
                reactivated.extend_from_slice(&vs);
            }
        }
        self.nodes[b as usize] = Node {
            parent: NONE,
            label: Label::Plus,
            tree: t,
            tree_edge: (NONE, NONE),
            y0: 0,
            t0: self.now,
            base,
            children,
            edges,
            alive: true,
        };
        self.trees[t as usize].push(b);
        for x in reactivated {
            self.push_vertex(x);
        }
    }

    fn expand(&mut self, b: u32) {
        let t = self.nodes[b as usize].tree;
        let (x, y) = self.nodes[b as usize].tree_edge;
        let entry = self.child_of(b, y);
        let children = std::mem::take(&mut self.nodes[b as usize].children);
        let edges = std::mem::take(&mut self.nodes[b as usize].edges);
        let k = children.len();
        let mut vs = Vec::new();
        for &ch in &children {
            let yc = self.nodes[ch as usize].y0;
            let node = &mut self.nodes[ch as usize];
            node.parent = NONE;
            node.t0 = self.now;
            node.label = Label::Free;
            node.tree = NONE;
            vs.clear();
            self.leaves(ch, &mut vs);
            for &x in &vs {
                self.pi_fixed[x as usize] -= yc;
                self.top[x as usize] = ch;
            }
        }
        let j = children.iter().position(|&ch| ch == entry).unwrap();
        let mut labelled = vec![(children[j], Label::Minus, (x, y))];
        if j % 2 == 0 {
            for m in (0..j).rev() {
                if (j - m) % 2 == 1 {
                    labelled.push((children[m], Label::Plus, (NONE, NONE)));
                } else {
                    labelled.push((children[m], Label::Minus, (edges[m].1, edges[m].0)));
                }
            }
        } else {
            for s in 1..=(k - j) {
                let m = (j + s) % k;
                if s % 2 == 1 {
                    labelled.push((children[m], Label::Plus, (NONE, NONE)));
                } else {
                    labelled.push((children[m], Label::Minus, edges[(j + s - 1) % k]));
                }
            }
        }
        for &(ch, label, te) in &labelled {
            let node = &mut self.nodes[ch as usize];
            node.label = label;
            node.tree = t;
            node.tree_edge = te;
            self.trees[t as usize].push(ch);
        }
        let node = &mut self.nodes[b as usize];
        node.alive = false;
        node.label = Label::Free;
        node.tree = NONE;
        node.parent = NONE;
        self.free_ids.push(b);
        for &ch in &children {
            self.push_node(ch);
        }
    }
}

/// Solves the matching problem on a candidate graph.
pub(crate) fn solve(g: &CandidateGraph) -> Result<Solution> {
    if g.len() == 0 {
        return Ok(Solution { mate: Vec::new(), pi: Vec::new(), parent: Vec::new(), dual: Vec::new() });
    }
    Solver::new(g)?.solve()
}

/// Checks primal feasibility, dual feasibility and complementary slackness
/// of a solution against the candidate graph. Returns a description of the
/// first violation found.
#[cfg(test)]
pub(crate) fn certificate_violation(g: &CandidateGraph, s: &Solution) -> Option<String> {
    let n = g.len();
    for v in 0..n {
        match s.mate[v] {
            Mate::Unmatched => return Some(format!("vertex {v} unmatched")),
            Mate::Vertex(u) => {
                if s.mate[u as usize] != Mate::Vertex(v as u32) {
                    return Some(format!("asymmetric mate {v}-{u}"));
                }
                let idx = (g.start[v]..g.start[v + 1]).find(|&i| g.nbr[i] == u);
                let Some(idx) = idx else { return Some(format!("matched non-edge {v}-{u}")) };
                let w = (g.start[v]..g.start[v + 1]).filter(|&i| g.nbr[i] == u).map(|i| g.weight[i]).min().unwrap();
                let _ = idx;
                if s.slack(v, u as usize, w) != 0 {
                    return Some(format!("matched edge {v}-{u} not tight"));
                }
            }
            Mate::Boundary => {
                let Some(d) = g.boundary[v] else { return Some(format!("{v} matched to unreachable boundary")) };
                if d - s.pi[v] != 0 {
                    return Some(format!("boundary edge of {v} not tight"));
                }
            }
        }
        if let Some(d) = g.boundary[v] {
            if d - s.pi[v] < 0 {
                return Some(format!("boundary slack of {v} negative"));
            }
        }
        for i in g.start[v]..g.start[v + 1] {
            let u = g.nbr[i] as usize;
            if s.slack(v, u, g.weight[i]) < 0 {
                return Some(format!("edge {v}-{u} has negative slack"));
            }
        }
    }
    for (x, &d) in s.dual.iter().enumerate().skip(n) {
        if d < 0 {
            return Some(format!("blossom {x} has negative dual"));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(g: &CandidateGraph, s: &Solution) -> i64 {
        let mut t = 0;
        for v in 0..g.len() {
            match s.mate[v] {
                Mate::Boundary => t += g.boundary[v].unwrap() * 2,
                Mate::Vertex(u) => {
                    let w = (g.start[v]..g.start[v + 1]).filter(|&i| g.nbr[i] == u).map(|i| g.weight[i]).min().unwrap();
                    t += w;
                }
                Mate::Unmatched => panic!(),
            }
        }
        t / 2
    }

    fn brute(g: &CandidateGraph) -> i64 {
        fn rec(g: &CandidateGraph, used: u64, memo: &mut std::collections::HashMap<u64, i64>) -> i64 {
            let n = g.len();
            if used.count_ones() as usize == n {
                return 0;
            }
            if let Some(&v) = memo.get(&used) {
                return v;
            }
            let v = (0..n).find(|&i| used & (1 << i) == 0).unwrap();
            let mut best = i64::MAX / 4;
            if let Some(d) = g.boundary[v] {
                best = best.min(d + rec(g, used | 1 << v, memo));
            }
            for i in g.start[v]..g.start[v + 1] {
                let u = g.nbr[i] as usize;
                if used & (1 << u) == 0 {
                    best = best.min(g.weight[i] + rec(g, used | 1 << v | 1 << u, memo));
                }
            }
            memo.insert(used, best);
            best
        }
        rec(g, 0, &mut Default::default())
    }

    #[test]
    fn single_vertex_goes_to_boundary() {
        let g = CandidateGraph::from_edges(vec![Some(8)], &[]);
        let s = solve(&g).unwrap();
        assert_eq!(s.mate, vec![Mate::Boundary]);
    }

    #[test]
    fn pair_prefers_cheaper_option() {
        let g = CandidateGraph::from_edges(vec![Some(20), Some(20)], &[(0, 1, 12)]);
        let s = solve(&g).unwrap();
        assert_eq!(s.mate, vec![Mate::Vertex(1), Mate::Vertex(0)]);
        let g = CandidateGraph::from_edges(vec![Some(4), Some(4)], &[(0, 1, 12)]);
        let s = solve(&g).unwrap();
        assert_eq!(s.mate, vec![Mate::Boundary, Mate::Boundary]);
    }

    #[test]
    fn odd_cycle_forces_blossom() {
        // Triangle plus pendant, boundary expensive everywhere.
        let g = CandidateGraph::from_edges(
            vec![Some(400), Some(400), Some(400), Some(400)],
            &[(0, 1, 4), (1, 2, 4), (0, 2, 4), (2, 3, 40)],
        );
        let s = solve(&g).unwrap();
        assert!(certificate_violation(&g, &s).is_none());
        assert_eq!(total(&g, &s), brute(&g));
    }

    #[test]
    fn random_small_graphs_match_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3000 {
            let n = rng.random_range(1..=10);
            let boundary: Vec<Option<i64>> = (0..n)
                .map(|_| if rng.random_bool(0.85) { Some(4 * rng.random_range(0..12)) } else { None })
                .collect();
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random_bool(0.5) {
                        edges.push((a as u32, b as u32, 4 * rng.random_range(0..12)));
                    }
                }
            }
            let g = CandidateGraph::from_edges(boundary, &edges);
            let reachable = brute(&g) < i64::MAX / 8;
            match solve(&g) {
                Ok(s) => {
                    assert!(reachable);
                    if let Some(msg) = certificate_violation(&g, &s) {
                        panic!("{msg} in {g:?}");
                    }
                    assert_eq!(total(&g, &s), brute(&g), "{g:?}");
                }
                Err(_) => assert!(!reachable),
            }
        }
    }
}
