//! Thinning, skeleton graphs, closed-curve detection and stroke extraction.
//!
//! Graph adjacency uses m-adjacency: 4-neighbours always count, a diagonal
//! neighbour counts only when the two pixels share no ink 4-neighbour. This
//! keeps a unit-width skeleton free of spurious three-pixel triangles.

use crate::raster::BinaryImage;
use crate::segment::Component;
use std::collections::{HashSet, VecDeque};

pub type Px = (usize, usize);

/// A thinned body and the page position of its top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub image: BinaryImage,
    pub origin: Px,
}

impl Skeleton {
    pub fn of_component(comp: &Component) -> Self {
        Self {
            image: thin(&comp.to_image()),
            origin: (comp.bbox.top, comp.bbox.left),
        }
    }
}

// x1..x8 in counter-clockwise order starting east.
const RING: [(isize, isize); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn ring_of(img: &BinaryImage, r: usize, c: usize) -> [bool; 8] {
    let mut x = [false; 8];
    for (k, (dr, dc)) in RING.iter().enumerate() {
        x[k] = img.get_signed(r as isize + dr, c as isize + dc);
    }
    x
}

/// 8-connectivity number; a pixel is simple exactly when this is 1.
fn connectivity_number(x: &[bool; 8]) -> u32 {
    let b = |k: usize| !x[k % 8];
    [0usize, 2, 4, 6]
        .iter()
        .map(|&k| (b(k) && !(b(k + 1) && b(k + 2))) as u32)
        .sum()
}

/// Parallel thinning with four directional sub-passes (north, south, east,
/// west). A border pixel is removed when it is simple and has at least two
/// ink neighbours; passes repeat until nothing changes. A 2x2 block left at
/// that fixpoint is then broken by `break_square` and thinning resumes.
pub fn thin(body: &BinaryImage) -> BinaryImage {
    let mut img = body.clone();
    let mut stuck = HashSet::new();
    loop {
        delete_to_fixpoint(&mut img);
        if !break_square(&mut img, body, &mut stuck) {
            return img;
        }
    }
}

fn delete_to_fixpoint(img: &mut BinaryImage) {
    let borders: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];
    loop {
        let mut changed = false;
        for (dr, dc) in borders {
            let doomed: Vec<Px> = img
                .ink_pixels()
                .into_iter()
                .filter(|&(r, c)| {
                    if img.get_signed(r as isize + dr, c as isize + dc) {
                        return false;
                    }
                    let x = ring_of(img, r, c);
                    x.iter().filter(|&&v| v).count() >= 2 && connectivity_number(&x) == 1
                })
                .collect();
            for (r, c) in doomed {
                img.set(r, c, false);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// 8-connected ink components and 4-connected background holes.
fn topology(img: &BinaryImage) -> (usize, usize) {
    let (h, w) = (img.height() as isize, img.width() as isize);
    let mut seen = vec![false; (w * h) as usize];
    let fill = |seen: &mut Vec<bool>, start: (isize, isize)| {
        let mut stack = vec![start];
        seen[(start.0 * w + start.1) as usize] = true;
        while let Some((r, c)) = stack.pop() {
            for (dr, dc) in [(0, 1), (-1, 0), (0, -1), (1, 0)] {
                let (nr, nc) = (r + dr, c + dc);
                if nr >= 0 && nc >= 0 && nr < h && nc < w && !img.get_signed(nr, nc) && !seen[(nr * w + nc) as usize] {
                    seen[(nr * w + nc) as usize] = true;
                    stack.push((nr, nc));
                }
            }
        }
    };
    for r in 0..h {
        for c in 0..w {
            let border = r == 0 || c == 0 || r == h - 1 || c == w - 1;
            if border && !img.get_signed(r, c) && !seen[(r * w + c) as usize] {
                fill(&mut seen, (r, c));
            }
        }
    }
    let mut holes = 0;
    for r in 0..h {
        for c in 0..w {
            if !img.get_signed(r, c) && !seen[(r * w + c) as usize] {
                fill(&mut seen, (r, c));
                holes += 1;
            }
        }
    }
    (crate::segment::connected_components(img).len(), holes)
}

fn square_near(img: &BinaryImage, r: usize, c: usize) -> bool {
    (r.saturating_sub(2)..(r + 3).min(img.height().saturating_sub(1))).any(|y| {
        (c.saturating_sub(2)..(c + 3).min(img.width().saturating_sub(1)))
            .any(|x| img.get(y, x) && img.get(y + 1, x) && img.get(y, x + 1) && img.get(y + 1, x + 1))
    })
}

/// Breaks one 2x2 block that survived deletion. At the fixpoint each block
/// pixel is the only link of some arm (two even-width strokes crossing), so
/// a pixel is moved one step outward onto body ink rather than removed.
/// Edits must keep components and holes and leave no square nearby; blocks
/// with no such edit are recorded in `stuck` and left alone.
fn break_square(img: &mut BinaryImage, body: &BinaryImage, stuck: &mut HashSet<Px>) -> bool {
    for r in 0..img.height().saturating_sub(1) {
        for c in 0..img.width().saturating_sub(1) {
            let block = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)];
            if stuck.contains(&(r, c)) || !block.iter().all(|&(y, x)| img.get(y, x)) {
                continue;
            }
            let before = topology(img);
            for &(pr, pc) in &block {
                let mut moves: Vec<Option<Px>> = vec![None];
                moves.extend(RING.iter().filter_map(|&(dr, dc)| {
                    let (y, x) = (pr as isize + dr, pc as isize + dc);
                    let q = (y as usize, x as usize);
                    (body.get_signed(y, x) && !img.get_signed(y, x) && !block.contains(&q)).then_some(Some(q))
                }));
                for q in moves {
                    img.set(pr, pc, false);
                    if let Some((qr, qc)) = q {
                        img.set(qr, qc, true);
                    }
                    if topology(img) == before && !square_near(img, r, c) {
                        return true;
                    }
                    if let Some((qr, qc)) = q {
                        img.set(qr, qc, false);
                    }
                    img.set(pr, pc, true);
                }
            }
            stuck.insert((r, c));
        }
    }
    false
}

/// m-adjacent ink neighbours of `(r, c)`: 4-neighbours first (E, N, W, S),
/// then admissible diagonals (NE, NW, SW, SE).
pub fn m_neighbors(img: &BinaryImage, r: usize, c: usize) -> Vec<Px> {
    let (r, c) = (r as isize, c as isize);
    let mut out = Vec::with_capacity(4);
    for (dr, dc) in [(0, 1), (-1, 0), (0, -1), (1, 0)] {
        if img.get_signed(r + dr, c + dc) {
            out.push(((r + dr) as usize, (c + dc) as usize));
        }
    }
    for (dr, dc) in [(-1, 1), (-1, -1), (1, -1), (1, 1)] {
        if img.get_signed(r + dr, c + dc)
            && !img.get_signed(r + dr, c)
            && !img.get_signed(r, c + dc)
        {
            out.push(((r + dr) as usize, (c + dc) as usize));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Endpoint,
    Branch,
    Isolated,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Endpoint => "endpoint",
            NodeKind::Branch => "branch",
            NodeKind::Isolated => "isolated",
        }
    }
}

/// A graph vertex: one endpoint pixel, an isolated pixel, or a cluster of
/// mutually adjacent branch pixels. Pixels are in page coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub pixels: Vec<Px>,
}

impl Node {
    pub fn position(&self) -> Px {
        self.pixels[0]
    }
}

/// A pixel path from a pixel of node `a` to a pixel of node `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub path: Vec<Px>,
}

impl Edge {
    /// The path without its two node pixels.
    pub fn interior(&self) -> &[Px] {
        if self.path.len() <= 2 {
            &[]
        } else {
            &self.path[1..self.path.len() - 1]
        }
    }

    fn reversed(&self) -> Edge {
        let mut path = self.path.clone();
        path.reverse();
        Edge {
            a: self.b,
            b: self.a,
            path,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SkeletonGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Closed pixel paths that touch no node.
    pub cycles: Vec<Vec<Px>>,
}

impl SkeletonGraph {
    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .map(|e| (e.a == node) as usize + (e.b == node) as usize)
            .sum()
    }

    /// Plain-text adjacency listing for debug dumps.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let (r, c) = n.position();
            out.push_str(&format!("node {i} {} {r},{c} size {}\n", n.kind.name(), n.pixels.len()));
        }
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&format!("edge {i} {}-{} len {}\n", e.a, e.b, e.path.len()));
        }
        for (i, c) in self.cycles.iter().enumerate() {
            out.push_str(&format!("cycle {i} len {}\n", c.len()));
        }
        out
    }

    /// Removes dead nodes and edges, renumbering what is left.
    fn compact(&mut self, node_alive: &[bool], edge_alive: &[bool]) {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.drain(..).enumerate() {
            if node_alive[i] {
                remap[i] = nodes.len();
                nodes.push(n);
            }
        }
        self.nodes = nodes;
        self.edges = self
            .edges
            .drain(..)
            .enumerate()
            .filter(|(i, _)| edge_alive[*i])
            .map(|(_, mut e)| {
                e.a = remap[e.a];
                e.b = remap[e.b];
                e
            })
            .collect();
    }

    /// Reclassifies nodes by degree and dissolves nodes of degree two that
    /// are not held by a self-loop, joining their two edges.
    fn simplify(&mut self) {
        loop {
            let target = (0..self.nodes.len()).find(|&n| {
                self.nodes[n].kind != NodeKind::Isolated
                    && self.degree(n) == 2
                    && !self.edges.iter().any(|e| e.a == n && e.b == n)
            });
            let Some(n) = target else { break };
            let ids: Vec<usize> = (0..self.edges.len())
                .filter(|&i| self.edges[i].a == n || self.edges[i].b == n)
                .collect();
            let first = &self.edges[ids[0]];
            let first = if first.b == n { first.clone() } else { first.reversed() };
            let second = &self.edges[ids[1]];
            let second = if second.a == n { second.clone() } else { second.reversed() };
            let connector = cluster_path(
                &self.nodes[n].pixels,
                *first.path.last().unwrap(),
                second.path[0],
            );
            let mut path = first.path[..first.path.len() - 1].to_vec();
            path.extend(connector);
            path.extend_from_slice(&second.path[1..]);
            let merged = Edge {
                a: first.a,
                b: second.b,
                path,
            };
            let mut node_alive = vec![true; self.nodes.len()];
            node_alive[n] = false;
            let mut edge_alive = vec![true; self.edges.len()];
            edge_alive[ids[0]] = false;
            edge_alive[ids[1]] = false;
            self.edges.push(merged);
            edge_alive.push(true);
            self.compact(&node_alive, &edge_alive);
        }
        for n in 0..self.nodes.len() {
            if self.nodes[n].kind == NodeKind::Isolated {
                continue;
            }
            self.nodes[n].kind = match self.degree(n) {
                0 => NodeKind::Isolated,
                1 => NodeKind::Endpoint,
                _ => NodeKind::Branch,
            };
        }
    }
}

fn adjacent8(a: Px, b: Px) -> bool {
    a != b && a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1
}

/// Shortest 8-connected path inside a pixel cluster, inclusive of both ends.
fn cluster_path(cluster: &[Px], from: Px, to: Px) -> Vec<Px> {
    if from == to {
        return vec![from];
    }
    let mut prev: Vec<Option<usize>> = vec![None; cluster.len()];
    let start = cluster.iter().position(|&p| p == from);
    let goal = cluster.iter().position(|&p| p == to);
    let (Some(start), Some(goal)) = (start, goal) else {
        return vec![from, to];
    };
    let mut seen = vec![false; cluster.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        if i == goal {
            break;
        }
        for j in 0..cluster.len() {
            if !seen[j] && adjacent8(cluster[i], cluster[j]) {
                seen[j] = true;
                prev[j] = Some(i);
                queue.push_back(j);
            }
        }
    }
    let mut path = vec![cluster[goal]];
    let mut cur = goal;
    while let Some(p) = prev[cur] {
        path.push(cluster[p]);
        cur = p;
    }
    path.reverse();
    path
}

/// Builds the graph of a unit-width skeleton: endpoints have one neighbour,
/// branch pixels three or more (adjacent ones fused), and paths of
/// two-neighbour pixels become edges or, when they close on themselves,
/// cycles.
pub fn build_graph(sk: &Skeleton) -> SkeletonGraph {
    let img = &sk.image;
    let (w, h) = (img.width(), img.height());
    let degree = |r: usize, c: usize| m_neighbors(img, r, c).len();
    const NONE: usize = usize::MAX;
    let mut node_of = vec![NONE; w * h];
    let mut local_nodes: Vec<(NodeKind, Vec<Px>)> = Vec::new();
    for (r, c) in img.ink_pixels().into_iter() {
        if node_of[r * w + c] != NONE {
            continue;
        }
        let kind = match degree(r, c) {
            0 => NodeKind::Isolated,
            1 => NodeKind::Endpoint,
            2 => continue,
            _ => NodeKind::Branch,
        };
        let id = local_nodes.len();
        let mut pixels = vec![(r, c)];
        node_of[r * w + c] = id;
        if kind == NodeKind::Branch {
            let mut queue = VecDeque::from([(r, c)]);
            while let Some((pr, pc)) = queue.pop_front() {
                for (nr, nc) in m_neighbors(img, pr, pc) {
                    if node_of[nr * w + nc] == NONE && degree(nr, nc) >= 3 {
                        node_of[nr * w + nc] = id;
                        pixels.push((nr, nc));
                        queue.push_back((nr, nc));
                    }
                }
            }
            pixels.sort_unstable();
        }
        local_nodes.push((kind, pixels));
    }

    let mut visited = vec![false; w * h];
    let mut short_edges: HashSet<(Px, Px)> = HashSet::new();
    let mut edges: Vec<Edge> = Vec::new();
    for (id, (_, pixels)) in local_nodes.iter().enumerate() {
        for &s in pixels {
            for n in m_neighbors(img, s.0, s.1) {
                let nid = node_of[n.0 * w + n.1];
                if nid == id {
                    continue;
                }
                if nid != NONE {
                    let key = if s < n { (s, n) } else { (n, s) };
                    if short_edges.insert(key) {
                        edges.push(Edge {
                            a: id,
                            b: nid,
                            path: vec![s, n],
                        });
                    }
                    continue;
                }
                if visited[n.0 * w + n.1] {
                    continue;
                }
                let mut path = vec![s, n];
                visited[n.0 * w + n.1] = true;
                let (mut prev, mut cur) = (s, n);
                let end = loop {
                    let next = m_neighbors(img, cur.0, cur.1)
                        .into_iter()
                        .find(|&p| p != prev)
                        .expect("path pixel has two neighbours");
                    path.push(next);
                    let nid = node_of[next.0 * w + next.1];
                    if nid != NONE {
                        break nid;
                    }
                    visited[next.0 * w + next.1] = true;
                    prev = cur;
                    cur = next;
                };
                edges.push(Edge { a: id, b: end, path });
            }
        }
    }

    let mut cycles = Vec::new();
    for (r, c) in img.ink_pixels().into_iter() {
        if node_of[r * w + c] != NONE || visited[r * w + c] {
            continue;
        }
        let start = (r, c);
        let mut path = vec![start];
        visited[r * w + c] = true;
        let mut prev = start;
        let mut cur = m_neighbors(img, r, c)[0];
        while cur != start {
            path.push(cur);
            visited[cur.0 * w + cur.1] = true;
            let next = m_neighbors(img, cur.0, cur.1)
                .into_iter()
                .find(|&p| p != prev)
                .expect("cycle pixel has two neighbours");
            prev = cur;
            cur = next;
        }
        cycles.push(path);
    }

    let (or, oc) = sk.origin;
    let shift = |p: &Px| (p.0 + or, p.1 + oc);
    SkeletonGraph {
        nodes: local_nodes
            .into_iter()
            .map(|(kind, pixels)| Node {
                kind,
                pixels: pixels.iter().map(shift).collect(),
            })
            .collect(),
        edges: edges
            .into_iter()
            .map(|e| Edge {
                a: e.a,
                b: e.b,
                path: e.path.iter().map(shift).collect(),
            })
            .collect(),
        cycles: cycles
            .into_iter()
            .map(|c| c.iter().map(shift).collect())
            .collect(),
    }
}

/// Drops endpoint-to-branch edges with fewer than `min_len` interior pixels
/// together with their endpoint, then joins edges through any node left
/// with two incident edges.
pub fn prune_spurs(g: &SkeletonGraph, min_len: usize) -> SkeletonGraph {
    let mut out = g.clone();
    let mut node_alive = vec![true; g.nodes.len()];
    let mut edge_alive = vec![true; g.edges.len()];
    for (i, e) in g.edges.iter().enumerate() {
        if e.interior().len() >= min_len || e.a == e.b {
            continue;
        }
        let (ka, kb) = (g.nodes[e.a].kind, g.nodes[e.b].kind);
        let tip = match (ka, kb) {
            (NodeKind::Endpoint, NodeKind::Branch) => e.a,
            (NodeKind::Branch, NodeKind::Endpoint) => e.b,
            _ => continue,
        };
        edge_alive[i] = false;
        node_alive[tip] = false;
    }
    out.compact(&node_alive, &edge_alive);
    out.simplify();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    /// Page-coordinate `(row, col)` centroid.
    pub centroid: (f64, f64),
    pub pixels: Vec<Px>,
}

impl ClosedCurve {
    fn from_pixels(mut pixels: Vec<Px>) -> Self {
        pixels.sort_unstable();
        pixels.dedup();
        let n = pixels.len() as f64;
        let (sr, sc) = pixels
            .iter()
            .fold((0.0, 0.0), |(a, b), &(r, c)| (a + r as f64, b + c as f64));
        Self {
            centroid: (sr / n, sc / n),
            pixels,
        }
    }

    pub fn col_range(&self) -> (usize, usize) {
        let lo = self.pixels.iter().map(|p| p.1).min().unwrap_or(0);
        let hi = self.pixels.iter().map(|p| p.1).max().unwrap_or(0);
        (lo, hi)
    }
}

fn m_adjacent(set: &HashSet<Px>, a: Px, b: Px) -> bool {
    if !adjacent8(a, b) {
        return false;
    }
    if a.0 == b.0 || a.1 == b.1 {
        return true;
    }
    !set.contains(&(a.0, b.1)) && !set.contains(&(b.0, a.1))
}

/// Finds every independent closed curve (pure cycles, holes enclosed
/// inside a branch cluster, and one per edge outside a BFS spanning forest
/// of the node graph), removes the edges that take part in them, and
/// returns the curves with the reduced graph. A node survives if any edge
/// still touches it or if it never touched a cycle.
pub fn detect_closed_curves(g: &SkeletonGraph) -> (Vec<ClosedCurve>, SkeletonGraph) {
    let mut curves: Vec<ClosedCurve> = g
        .cycles
        .iter()
        .map(|c| ClosedCurve::from_pixels(c.clone()))
        .collect();

    for node in &g.nodes {
        if node.pixels.len() < 4 {
            continue;
        }
        let set: HashSet<Px> = node.pixels.iter().copied().collect();
        let mut pairs = 0usize;
        for (i, &a) in node.pixels.iter().enumerate() {
            for &b in &node.pixels[i + 1..] {
                pairs += m_adjacent(&set, a, b) as usize;
            }
        }
        for _ in 0..(pairs + 1).saturating_sub(node.pixels.len()) {
            curves.push(ClosedCurve::from_pixels(node.pixels.clone()));
        }
    }

    let n = g.nodes.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, e) in g.edges.iter().enumerate() {
        incident[e.a].push(i);
        if e.b != e.a {
            incident[e.b].push(i);
        }
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut tree_edge = vec![false; g.edges.len()];
    for root in 0..n {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &ei in &incident[u] {
                let e = &g.edges[ei];
                let v = if e.a == u { e.b } else { e.a };
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    parent[v] = Some((u, ei));
                    tree_edge[ei] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut in_cycle = vec![false; g.edges.len()];
    for (ei, e) in g.edges.iter().enumerate() {
        if tree_edge[ei] {
            continue;
        }
        let mut members = vec![ei];
        let (mut u, mut v) = (e.a, e.b);
        while u != v {
            if depth[u] >= depth[v] {
                let (p, pe) = parent[u].expect("non-root has a parent");
                members.push(pe);
                u = p;
            } else {
                let (p, pe) = parent[v].expect("non-root has a parent");
                members.push(pe);
                v = p;
            }
        }
        let mut pixels = Vec::new();
        for &m in &members {
            in_cycle[m] = true;
            pixels.extend_from_slice(&g.edges[m].path);
        }
        curves.push(ClosedCurve::from_pixels(pixels));
    }

    let mut touched = vec![false; n];
    let mut keeps = vec![false; n];
    for (ei, e) in g.edges.iter().enumerate() {
        for x in [e.a, e.b] {
            if in_cycle[ei] {
                touched[x] = true;
            } else {
                keeps[x] = true;
            }
        }
    }
    let node_alive: Vec<bool> = (0..n).map(|i| keeps[i] || !touched[i]).collect();
    let edge_alive: Vec<bool> = in_cycle.iter().map(|&c| !c).collect();
    let mut out = g.clone();
    out.cycles.clear();
    out.compact(&node_alive, &edge_alive);
    out.simplify();
    (curves, out)
}

/// A simple stroke: interior pixels of one graph edge, oriented to start at
/// its right end (top end when both ends share a column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stroke {
    pub path: Vec<Px>,
    pub start: usize,
    pub end: usize,
    pub degenerate: bool,
}

impl Stroke {
    pub fn rightmost(&self) -> usize {
        self.path.iter().map(|p| p.1).max().unwrap_or(0)
    }
}

/// One stroke per edge with at least `min_len` interior pixels, ordered
/// right to left by rightmost pixel.
pub fn extract_strokes(g: &SkeletonGraph, min_len: usize) -> Vec<Stroke> {
    let mut strokes: Vec<Stroke> = g
        .edges
        .iter()
        .filter(|e| !e.interior().is_empty() && e.interior().len() >= min_len)
        .map(|e| {
            let mut path = e.interior().to_vec();
            let (first, last) = (path[0], *path.last().unwrap());
            let flip = last.1 > first.1 || (last.1 == first.1 && last.0 < first.0);
            let (start, end) = if flip {
                path.reverse();
                (e.b, e.a)
            } else {
                (e.a, e.b)
            };
            Stroke {
                degenerate: path.len() < 2,
                path,
                start,
                end,
            }
        })
        .collect();
    strokes.sort_by(|a, b| {
        b.rightmost()
            .cmp(&a.rightmost())
            .then(a.path[0].0.cmp(&b.path[0].0))
    });
    strokes
}
