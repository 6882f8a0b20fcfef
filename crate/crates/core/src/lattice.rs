//! Null-lattice geometry.
//!
//! Space is periodic with `2N` link slots. A surface assigns a link to every
//! slot; an elementary motion at slot `i` replaces the adjacent `R,L` pair at
//! `(i, i+1 mod 2N)` by the two links leaving the vertex between them. Slots
//! never move, so a vertex is identified by its slot pair and by how many
//! motions that pair has already seen. That identity does not depend on the
//! order in which the lattice was swept.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use bitvec::vec::BitVec;

use crate::error::{Error, Result};

/// Stems larger than this are refused by [`linear_extensions`].
pub const DEFAULT_EXTENSION_LIMIT: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    L,
    R,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::L => f.write_str("L"),
            Direction::R => f.write_str("R"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeGeometry {
    half_width: usize,
}

impl LatticeGeometry {
    pub fn new(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidGeometry("half width N must be at least 1".into()));
        }
        if half_width > 30 {
            return Err(Error::InvalidGeometry(format!(
                "half width {half_width} cannot be indexed by a 64-bit basis"
            )));
        }
        Ok(Self { half_width })
    }

    /// `N`: the surface cuts `N` left-moving and `N` right-moving links.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn slot_count(&self) -> usize {
        2 * self.half_width
    }

    pub fn next_slot(&self, slot: usize) -> usize {
        (slot + 1) % self.slot_count()
    }

    pub fn prev_slot(&self, slot: usize) -> usize {
        (slot + self.slot_count() - 1) % self.slot_count()
    }

    /// The pair `(i, i+1 mod 2N)`.
    pub fn pair(&self, slot: usize) -> (usize, usize) {
        (slot, self.next_slot(slot))
    }
}

/// A segment of a null line between two crossings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId {
    pub direction: Direction,
    /// Initial slot of the null line this link belongs to.
    pub line: u32,
    /// Number of crossings along the line below this link.
    pub segment: u32,
}

impl LinkId {
    fn continuation(self) -> LinkId {
        LinkId {
            segment: self.segment + 1,
            ..self
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}.{}", self.direction, self.line, self.segment)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surface {
    geometry: LatticeGeometry,
    slots: Vec<LinkId>,
}

impl Surface {
    /// The constant-time slice `R,L,R,L,...` with fresh links.
    pub fn initial(geometry: LatticeGeometry) -> Self {
        let slots = (0..geometry.slot_count())
            .map(|slot| LinkId {
                direction: if slot % 2 == 0 { Direction::R } else { Direction::L },
                line: slot as u32,
                segment: 0,
            })
            .collect();
        Self { geometry, slots }
    }

    /// Builds a surface from an explicit direction pattern. Lines are named by
    /// their slot; used for exploring patterns other than the initial slice.
    pub fn from_pattern(pattern: &[Direction]) -> Result<Self> {
        if pattern.len() % 2 != 0 || pattern.is_empty() {
            return Err(Error::InvalidGeometry(format!(
                "pattern length {} is not a positive even number",
                pattern.len()
            )));
        }
        let lefts = pattern.iter().filter(|d| **d == Direction::L).count();
        if 2 * lefts != pattern.len() {
            return Err(Error::InvalidGeometry(format!(
                "pattern needs equal L and R counts, found {lefts} L of {}",
                pattern.len()
            )));
        }
        let geometry = LatticeGeometry::new(pattern.len() / 2)?;
        let slots = pattern
            .iter()
            .enumerate()
            .map(|(slot, &direction)| LinkId {
                direction,
                line: slot as u32,
                segment: 0,
            })
            .collect();
        Ok(Self { geometry, slots })
    }

    pub fn geometry(&self) -> LatticeGeometry {
        self.geometry
    }

    pub fn slots(&self) -> &[LinkId] {
        &self.slots
    }

    pub fn link(&self, slot: usize) -> LinkId {
        self.slots[slot]
    }

    pub fn pattern(&self) -> Vec<Direction> {
        self.slots.iter().map(|l| l.direction).collect()
    }

    pub fn pattern_string(&self) -> String {
        self.slots.iter().map(|l| l.direction.to_string()).collect()
    }

    pub fn is_rl_pair(&self, slot: usize) -> bool {
        slot < self.slots.len()
            && self.slots[slot].direction == Direction::R
            && self.slots[self.geometry.next_slot(slot)].direction == Direction::L
    }

    /// All slots `i` with an `R` at `i` and an `L` at `i+1 mod 2N`.
    pub fn rl_pairs(&self) -> Vec<usize> {
        (0..self.slots.len()).filter(|&i| self.is_rl_pair(i)).collect()
    }

    /// Moves the surface across the vertex above slot pair `(slot, slot+1)`,
    /// recording the vertex in `dag`. Returns the new vertex's ordinal.
    pub fn advance(&mut self, slot: usize, dag: &mut CausalDag) -> Result<usize> {
        if !self.is_rl_pair(slot) {
            return Err(Error::NotAnRlPair {
                slot,
                pattern: self.pattern_string(),
            });
        }
        if dag.geometry != self.geometry {
            return Err(Error::InvalidGeometry("surface and dag geometries differ".into()));
        }
        let next = self.geometry.next_slot(slot);
        let in_r = self.slots[slot];
        let in_l = self.slots[next];
        let out_l = in_l.continuation();
        let out_r = in_r.continuation();
        self.slots[slot] = out_l;
        self.slots[next] = out_r;
        Ok(dag.push(slot, (in_r, in_l), (out_l, out_r)))
    }

    /// Functional form of [`Surface::advance`].
    pub fn apply_motion(&self, slot: usize, dag: &mut CausalDag) -> Result<(Surface, usize)> {
        let mut next = self.clone();
        let vertex = next.advance(slot, dag)?;
        Ok((next, vertex))
    }

    /// Moves across `vertex`, checking that its ingoing links are the ones
    /// currently cut at its slot pair. Used when replaying a labeling without
    /// touching the dag.
    pub fn cross(&mut self, vertex: &Vertex) -> Result<()> {
        let (first, second) = vertex.slot_pair;
        if self.slots[first] != vertex.in_links.0 || self.slots[second] != vertex.in_links.1 {
            return Err(Error::NotNaturalLabeling(format!(
                "vertex {} is not above the current surface at slots ({first}, {second})",
                vertex.ordinal
            )));
        }
        self.slots[first] = vertex.out_links.0;
        self.slots[second] = vertex.out_links.1;
        Ok(())
    }
}

/// A crossed vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Vertex {
    pub ordinal: usize,
    /// Ingoing `(R, L)` links.
    pub in_links: (LinkId, LinkId),
    /// Outgoing `(L, R)` links.
    pub out_links: (LinkId, LinkId),
    pub slot_pair: (usize, usize),
    /// Number of earlier vertices at the same slot pair.
    pub pair_ordinal: u32,
}

/// The vertices crossed so far and their causal order.
///
/// Direct predecessors are the producers of a vertex's ingoing links. When
/// closure tracking is on, every vertex stores its full ancestor set, updated
/// incrementally on insertion; otherwise reachability falls back to a search
/// over predecessors, which keeps long trajectories at linear memory.
#[derive(Clone, Debug)]
pub struct CausalDag {
    geometry: LatticeGeometry,
    vertices: Vec<Vertex>,
    predecessors: Vec<Vec<usize>>,
    ancestors: Option<Vec<BitVec>>,
    producers: HashMap<LinkId, usize>,
    pair_counts: Vec<u32>,
}

impl CausalDag {
    pub fn new(geometry: LatticeGeometry) -> Self {
        Self::with_tracking(geometry, true)
    }

    /// A dag that does not maintain the transitive closure.
    pub fn untracked(geometry: LatticeGeometry) -> Self {
        Self::with_tracking(geometry, false)
    }

    fn with_tracking(geometry: LatticeGeometry, track: bool) -> Self {
        Self {
            geometry,
            vertices: Vec::new(),
            predecessors: Vec::new(),
            ancestors: track.then(Vec::new),
            producers: HashMap::new(),
            pair_counts: vec![0; geometry.slot_count()],
        }
    }

    /// Builds the dag swept by a sequence of motions from the initial surface.
    pub fn from_motions(geometry: LatticeGeometry, motions: &[usize]) -> Result<(Surface, CausalDag)> {
        let mut surface = Surface::initial(geometry);
        let mut dag = CausalDag::new(geometry);
        for &slot in motions {
            surface.advance(slot, &mut dag)?;
        }
        Ok((surface, dag))
    }

    fn push(&mut self, slot: usize, in_links: (LinkId, LinkId), out_links: (LinkId, LinkId)) -> usize {
        let ordinal = self.vertices.len();
        let mut preds: Vec<usize> = [in_links.0, in_links.1]
            .iter()
            .filter_map(|l| self.producers.get(l).copied())
            .collect();
        preds.sort_unstable();
        preds.dedup();

        if let Some(ancestors) = self.ancestors.as_mut() {
            let mut set: BitVec = BitVec::repeat(false, ordinal);
            for &p in &preds {
                set.set(p, true);
                let inherited = &ancestors[p];
                for idx in inherited.iter_ones() {
                    set.set(idx, true);
                }
            }
            ancestors.push(set);
        }

        self.producers.insert(out_links.0, ordinal);
        self.producers.insert(out_links.1, ordinal);
        let pair_ordinal = self.pair_counts[slot];
        self.pair_counts[slot] += 1;
        self.vertices.push(Vertex {
            ordinal,
            in_links,
            out_links,
            slot_pair: self.geometry.pair(slot),
            pair_ordinal,
        });
        self.predecessors.push(preds);
        ordinal
    }

    pub fn geometry(&self) -> LatticeGeometry {
        self.geometry
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Result<&Vertex> {
        self.vertices.get(v).ok_or(Error::UnknownVertex(v))
    }

    pub fn direct_predecessors(&self, v: usize) -> Result<&[usize]> {
        self.predecessors
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownVertex(v))
    }

    /// The vertex at `slot` that was the `pair_ordinal`-th crossing there.
    pub fn find(&self, slot: usize, pair_ordinal: u32) -> Option<usize> {
        self.vertices
            .iter()
            .find(|v| v.slot_pair.0 == slot && v.pair_ordinal == pair_ordinal)
            .map(|v| v.ordinal)
    }

    pub fn tracks_closure(&self) -> bool {
        self.ancestors.is_some()
    }

    /// Strict causal order `u ≺ v`.
    pub fn precedes(&self, u: usize, v: usize) -> Result<bool> {
        self.vertex(u)?;
        self.vertex(v)?;
        if u >= v {
            // ordinals are a linear extension, so ancestors have smaller ordinals
            return Ok(false);
        }
        if let Some(ancestors) = &self.ancestors {
            return Ok(ancestors[v][u]);
        }
        let mut stack = vec![v];
        let mut seen = BTreeSet::new();
        while let Some(w) = stack.pop() {
            for &p in &self.predecessors[w] {
                if p == u {
                    return Ok(true);
                }
                if p > u && seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        Ok(false)
    }

    /// Neither vertex precedes the other. A vertex is not spacelike to itself.
    pub fn is_spacelike(&self, u: usize, v: usize) -> Result<bool> {
        if u == v {
            self.vertex(u)?;
            return Ok(false);
        }
        Ok(!self.precedes(u, v)? && !self.precedes(v, u)?)
    }

    /// All strict ancestors of `v`.
    pub fn ancestors_of(&self, v: usize) -> Result<BTreeSet<usize>> {
        self.vertex(v)?;
        if let Some(ancestors) = &self.ancestors {
            return Ok(ancestors[v].iter_ones().collect());
        }
        let mut out = BTreeSet::new();
        let mut stack = vec![v];
        while let Some(w) = stack.pop() {
            for &p in &self.predecessors[w] {
                if out.insert(p) {
                    stack.push(p);
                }
            }
        }
        Ok(out)
    }
}

/// `P(vs)`: every vertex strictly below some member of `vs`, excluding `vs`.
pub fn causal_past(dag: &CausalDag, vs: &BTreeSet<usize>) -> Result<BTreeSet<usize>> {
    let mut past = BTreeSet::new();
    for &v in vs {
        past.extend(dag.ancestors_of(v)?);
    }
    Ok(past.difference(vs).copied().collect())
}

pub fn is_spacelike(dag: &CausalDag, u: usize, v: usize) -> Result<bool> {
    dag.is_spacelike(u, v)
}

/// A finite vertex set containing its own causal past.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStem {
    vertices: BTreeSet<usize>,
}

impl PartialStem {
    pub fn new(dag: &CausalDag, vertices: BTreeSet<usize>) -> Result<Self> {
        for &v in &vertices {
            for &p in dag.direct_predecessors(v)? {
                if !vertices.contains(&p) {
                    return Err(Error::NotPastClosed { vertex: v, missing: p });
                }
            }
        }
        Ok(Self { vertices })
    }

    /// Every vertex of the dag.
    pub fn full(dag: &CausalDag) -> Self {
        Self {
            vertices: (0..dag.len()).collect(),
        }
    }

    /// The smallest stem containing `vs`.
    pub fn closure_of(dag: &CausalDag, vs: &BTreeSet<usize>) -> Result<Self> {
        let mut vertices = causal_past(dag, vs)?;
        vertices.extend(vs.iter().copied());
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &BTreeSet<usize> {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.contains(&v)
    }
}

/// A total order of a vertex set in which no vertex appears before any of its
/// predecessors in the set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NaturalLabeling {
    sequence: Vec<usize>,
}

impl NaturalLabeling {
    pub fn new(dag: &CausalDag, sequence: Vec<usize>) -> Result<Self> {
        let members: BTreeSet<usize> = sequence.iter().copied().collect();
        if members.len() != sequence.len() {
            return Err(Error::NotNaturalLabeling("repeated vertex".into()));
        }
        let mut placed = BTreeSet::new();
        for &v in &sequence {
            for u in dag.ancestors_of(v)? {
                if members.contains(&u) && !placed.contains(&u) {
                    return Err(Error::NotNaturalLabeling(format!(
                        "vertex {v} appears before its predecessor {u}"
                    )));
                }
            }
            placed.insert(v);
        }
        Ok(Self { sequence })
    }

    /// A labeling of a stem in creation order.
    pub fn creation_order(stem: &PartialStem) -> Self {
        Self {
            sequence: stem.vertices().iter().copied().collect(),
        }
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.sequence.iter().copied().collect()
    }
}

/// Every natural labeling of `stem`, each exactly once.
pub fn linear_extensions(stem: &PartialStem, dag: &CausalDag) -> Result<LinearExtensions> {
    linear_extensions_bounded(stem, dag, DEFAULT_EXTENSION_LIMIT)
}

pub fn linear_extensions_bounded(
    stem: &PartialStem,
    dag: &CausalDag,
    limit: usize,
) -> Result<LinearExtensions> {
    if stem.len() > limit {
        return Err(Error::Guardrail {
            what: "linear-extension stem",
            size: stem.len(),
            limit,
        });
    }
    let items: Vec<usize> = stem.vertices().iter().copied().collect();
    let local: HashMap<usize, usize> = items.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut successors = vec![Vec::new(); items.len()];
    let mut indegree = vec![0; items.len()];
    for (i, &v) in items.iter().enumerate() {
        for p in dag.direct_predecessors(v)? {
            if let Some(&j) = local.get(p) {
                successors[j].push(i);
                indegree[i] += 1;
            }
        }
    }
    let n = items.len();
    Ok(LinearExtensions {
        items,
        successors,
        indegree,
        placed: vec![false; n],
        prefix: Vec::with_capacity(n),
        cursor: vec![0; n + 1],
        done: false,
    })
}

/// Lazy enumeration by repeated removal of a minimal element, with
/// backtracking over the choice at each depth.
#[derive(Debug)]
pub struct LinearExtensions {
    items: Vec<usize>,
    successors: Vec<Vec<usize>>,
    indegree: Vec<usize>,
    placed: Vec<bool>,
    prefix: Vec<usize>,
    cursor: Vec<usize>,
    done: bool,
}

impl LinearExtensions {
    fn place(&mut self, c: usize) {
        self.placed[c] = true;
        for &s in &self.successors[c] {
            self.indegree[s] -= 1;
        }
        self.prefix.push(c);
    }

    fn unplace_last(&mut self) {
        if let Some(c) = self.prefix.pop() {
            self.placed[c] = false;
            for &s in &self.successors[c] {
                self.indegree[s] += 1;
            }
        }
    }
}

impl Iterator for LinearExtensions {
    type Item = NaturalLabeling;

    fn next(&mut self) -> Option<NaturalLabeling> {
        if self.done {
            return None;
        }
        let n = self.items.len();
        loop {
            let depth = self.prefix.len();
            if depth == n {
                let labeling = NaturalLabeling {
                    sequence: self.prefix.iter().map(|&c| self.items[c]).collect(),
                };
                if n == 0 {
                    self.done = true;
                } else {
                    self.unplace_last();
                }
                return Some(labeling);
            }
            let start = self.cursor[depth];
            let candidate = (start..n).find(|&c| !self.placed[c] && self.indegree[c] == 0);
            match candidate {
                Some(c) => {
                    self.cursor[depth] = c + 1;
                    self.cursor[depth + 1] = 0;
                    self.place(c);
                }
                None => {
                    if depth == 0 {
                        self.done = true;
                        return None;
                    }
                    self.cursor[depth] = 0;
                    self.unplace_last();
                }
            }
        }
    }
}
