//! Finite metric measure spaces whose distances take values in {0, 1, 2}.
//!
//! Such a metric is determined by its distance-1 pairs, so a [`Space`] stores
//! that relation as a sorted adjacency list; every other pair of distinct
//! points is at distance 2. The triangle inequality holds automatically.
//!
//! In quotient mode a stored point is an orbit representative standing for
//! `multiplicity` exchangeable copies. Representatives sharing an orbit block
//! are copy-aligned: copy `t` of one is paired with copy `t` of the other, and
//! distances between stored points describe copy 0 of each. Distinct copies
//! inside one block are at distance 2. Across blocks every copy of `p` sees
//! every copy of `q` at the stored distance.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::ExtScalar;

pub type PointId = u32;

/// Default cap on the number of stored points.
pub const DEFAULT_POINT_CAP: usize = 2_000_000;

/// Structural name of a point.
///
/// Leaf-type coordinates `k` are the copy index in explicit mode and the first
/// index of the represented block in quotient mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PointLabel {
    /// `x_{n,i,j}`
    XBranch {
        n: u32,
        i: u32,
        j: u64,
    },
    /// `x'_{n,i,k}`
    XLeaf {
        n: u32,
        i: u32,
        k: u128,
    },
    /// `y_{n,i,j}`
    YBranch {
        n: u32,
        i: u32,
        j: u64,
    },
    /// `y°_{n,i,k}`
    YMid {
        n: u32,
        i: u32,
        k: u128,
    },
    /// `y'_{n,i,k}`
    YLeaf {
        n: u32,
        i: u32,
        k: u128,
    },
    Opaque(u64),
}

impl PointLabel {
    pub fn level(&self) -> Option<u32> {
        match *self {
            PointLabel::XBranch { n, .. }
            | PointLabel::XLeaf { n, .. }
            | PointLabel::YBranch { n, .. }
            | PointLabel::YMid { n, .. }
            | PointLabel::YLeaf { n, .. } => Some(n),
            PointLabel::Opaque(_) => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(
            self,
            PointLabel::XBranch { .. } | PointLabel::YBranch { .. }
        )
    }

    /// Same label with the leaf-type index replaced.
    pub fn with_index(&self, k: u128) -> Option<PointLabel> {
        match *self {
            PointLabel::XLeaf { n, i, .. } => Some(PointLabel::XLeaf { n, i, k }),
            PointLabel::YMid { n, i, .. } => Some(PointLabel::YMid { n, i, k }),
            PointLabel::YLeaf { n, i, .. } => Some(PointLabel::YLeaf { n, i, k }),
            _ => None,
        }
    }

    pub fn index(&self) -> Option<u128> {
        match *self {
            PointLabel::XLeaf { k, .. }
            | PointLabel::YMid { k, .. }
            | PointLabel::YLeaf { k, .. } => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointLabel::XBranch { n, i, j } => write!(f, "x[{n},{i},{j}]"),
            PointLabel::XLeaf { n, i, k } => write!(f, "x'[{n},{i},{k}]"),
            PointLabel::YBranch { n, i, j } => write!(f, "y[{n},{i},{j}]"),
            PointLabel::YMid { n, i, k } => write!(f, "y°[{n},{i},{k}]"),
            PointLabel::YLeaf { n, i, k } => write!(f, "y'[{n},{i},{k}]"),
            PointLabel::Opaque(v) => write!(f, "#{v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Explicit,
    Quotient,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Mode::Explicit),
            "quotient" => Ok(Mode::Quotient),
            other => Err(Error::Usage(format!("unknown mode {other:?}"))),
        }
    }
}

/// `tau[n-1][i-1]` leaf counts of a generated space.
pub type TauTable = Vec<Vec<u128>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartKind {
    FirstGen,
    SecondGen,
    Opaque,
}

/// One constituent of a (possibly glued) space.
#[derive(Clone, Debug)]
pub struct PartInfo {
    pub kind: PartKind,
    pub tau: Arc<TauTable>,
    /// Set when orbits were split after construction.
    pub refined: bool,
}

impl PartInfo {
    pub fn opaque() -> Self {
        PartInfo {
            kind: PartKind::Opaque,
            tau: Arc::new(Vec::new()),
            refined: false,
        }
    }
}

/// A finite metric measure space.
pub struct Space {
    labels: Vec<PointLabel>,
    part: Vec<u16>,
    block: Vec<u32>,
    mult: Vec<u128>,
    mass: Vec<ExtScalar>,
    weight: Vec<ExtScalar>,
    adj_start: Vec<usize>,
    adj: Vec<PointId>,
    parts: Vec<PartInfo>,
    mode: Mode,
    index: HashMap<(u16, PointLabel), PointId>,
    total: ExtScalar,
    balls: OnceLock<crate::maximal::BallFamily>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space")
            .field("points", &self.len())
            .field("mode", &self.mode)
            .field("parts", &self.parts.len())
            .field("total_mass", &self.total)
            .finish()
    }
}

impl Clone for Space {
    fn clone(&self) -> Self {
        Space {
            labels: self.labels.clone(),
            part: self.part.clone(),
            block: self.block.clone(),
            mult: self.mult.clone(),
            mass: self.mass.clone(),
            weight: self.weight.clone(),
            adj_start: self.adj_start.clone(),
            adj: self.adj.clone(),
            parts: self.parts.clone(),
            mode: self.mode,
            index: self.index.clone(),
            total: self.total.clone(),
            balls: OnceLock::new(),
        }
    }
}

/// Incremental construction of a [`Space`].
pub struct SpaceBuilder {
    mode: Mode,
    parts: Vec<PartInfo>,
    labels: Vec<PointLabel>,
    part: Vec<u16>,
    block: Vec<u32>,
    mult: Vec<u128>,
    mass: Vec<ExtScalar>,
    edges: Vec<(PointId, PointId)>,
    cap: usize,
}

impl SpaceBuilder {
    pub fn new(mode: Mode) -> Self {
        SpaceBuilder {
            mode,
            parts: Vec::new(),
            labels: Vec::new(),
            part: Vec::new(),
            block: Vec::new(),
            mult: Vec::new(),
            mass: Vec::new(),
            edges: Vec::new(),
            cap: DEFAULT_POINT_CAP,
        }
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn add_part(&mut self, info: PartInfo) -> u16 {
        self.parts.push(info);
        (self.parts.len() - 1) as u16
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Adds a point; returns its id.
    pub fn push(
        &mut self,
        part: u16,
        label: PointLabel,
        block: u32,
        mult: u128,
        mass: ExtScalar,
    ) -> Result<PointId> {
        if self.labels.len() >= self.cap {
            return Err(Error::CapExceeded { cap: self.cap });
        }
        self.labels.push(label);
        self.part.push(part);
        self.block.push(block);
        self.mult.push(mult);
        self.mass.push(mass);
        Ok((self.labels.len() - 1) as PointId)
    }

    /// Declares `dist(a, b) = 1`.
    pub fn link(&mut self, a: PointId, b: PointId) {
        if a != b {
            self.edges.push((a, b));
        }
    }

    pub fn finish(self) -> Result<Space> {
        let n = self.labels.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        for (id, (m, c)) in self.mass.iter().zip(&self.mult).enumerate() {
            if !m.is_positive() || *c == 0 {
                return Err(Error::NonPositiveMass {
                    point: id as PointId,
                });
            }
            if self.mode == Mode::Explicit && *c != 1 {
                return Err(Error::InvalidStructure(format!(
                    "explicit point {id} has multiplicity {c}"
                )));
            }
        }
        let mut degree = vec![0usize; n];
        for &(a, b) in &self.edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::UnknownPoint(a.max(b)));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut adj_start = Vec::with_capacity(n + 1);
        let mut acc = 0;
        adj_start.push(0);
        for d in &degree {
            acc += d;
            adj_start.push(acc);
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![0 as PointId; acc];
        for &(a, b) in &self.edges {
            adj[fill[a as usize]] = b;
            fill[a as usize] += 1;
            adj[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        // sort and dedupe each row
        let mut compact_start = Vec::with_capacity(n + 1);
        let mut compact = Vec::with_capacity(acc);
        compact_start.push(0);
        for p in 0..n {
            let row = &mut adj[adj_start[p]..adj_start[p + 1]];
            row.sort_unstable();
            let mut last = None;
            for &q in row.iter() {
                if Some(q) != last {
                    compact.push(q);
                    last = Some(q);
                }
            }
            compact_start.push(compact.len());
        }
        let mut index = HashMap::with_capacity(n);
        for (id, (label, part)) in self.labels.iter().zip(&self.part).enumerate() {
            if index.insert((*part, *label), id as PointId).is_some() {
                return Err(Error::InvalidStructure(format!("duplicate label {label}")));
            }
        }
        let weight: Vec<ExtScalar> = self
            .mass
            .iter()
            .zip(&self.mult)
            .map(|(m, &c)| {
                if c == 1 {
                    m.clone()
                } else {
                    m * &ExtScalar::from_u128(c)
                }
            })
            .collect();
        let total = ExtScalar::sum(weight.iter());
        Ok(Space {
            labels: self.labels,
            part: self.part,
            block: self.block,
            mult: self.mult,
            mass: self.mass,
            weight,
            adj_start: compact_start,
            adj: compact,
            parts: self.parts,
            mode: self.mode,
            index,
            total,
            balls: OnceLock::new(),
        })
    }
}

impl Space {
    /// Explicit space from point masses and a full distance matrix whose
    /// off-diagonal entries are 1 or 2.
    #[allow(clippy::needless_range_loop)]
    pub fn from_distance_matrix(masses: &[ExtScalar], dist: &[Vec<u8>]) -> Result<Space> {
        let n = masses.len();
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidStructure("distance matrix shape".into()));
        }
        let mut b = SpaceBuilder::new(Mode::Explicit);
        let part = b.add_part(PartInfo::opaque());
        for (i, m) in masses.iter().enumerate() {
            b.push(part, PointLabel::Opaque(i as u64), i as u32, 1, m.clone())?;
        }
        for a in 0..n {
            if dist[a][a] != 0 {
                return Err(Error::InvalidStructure(format!("dist({a},{a}) != 0")));
            }
            for c in 0..n {
                if a == c {
                    continue;
                }
                if dist[a][c] != dist[c][a] {
                    return Err(Error::InvalidStructure(format!("asymmetric at ({a},{c})")));
                }
                match dist[a][c] {
                    1 if a < c => b.link(a as PointId, c as PointId),
                    1 | 2 => {}
                    v => {
                        return Err(Error::InvalidStructure(format!(
                            "dist({a},{c}) = {v} outside {{1,2}}"
                        )))
                    }
                }
            }
        }
        b.finish()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn ids(&self) -> std::ops::Range<PointId> {
        0..self.len() as PointId
    }

    pub fn check(&self, id: PointId) -> Result<()> {
        if (id as usize) < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(id))
        }
    }

    pub fn label(&self, id: PointId) -> PointLabel {
        self.labels[id as usize]
    }

    pub fn labels(&self) -> &[PointLabel] {
        &self.labels
    }

    pub fn part_of(&self, id: PointId) -> u16 {
        self.part[id as usize]
    }

    pub fn parts(&self) -> &[PartInfo] {
        &self.parts
    }

    pub fn block(&self, id: PointId) -> u32 {
        self.block[id as usize]
    }

    pub fn multiplicity(&self, id: PointId) -> u128 {
        self.mult[id as usize]
    }

    /// Mass of a single copy.
    pub fn mass(&self, id: PointId) -> &ExtScalar {
        &self.mass[id as usize]
    }

    /// Mass of the whole orbit (`mass * multiplicity`).
    pub fn weight(&self, id: PointId) -> &ExtScalar {
        &self.weight[id as usize]
    }

    /// Mass of `count` copies.
    pub fn weight_of(&self, id: PointId, count: u128) -> ExtScalar {
        if count == self.mult[id as usize] {
            self.weight[id as usize].clone()
        } else if count == 1 {
            self.mass[id as usize].clone()
        } else {
            &self.mass[id as usize] * &ExtScalar::from_u128(count)
        }
    }

    pub fn total_mass(&self) -> &ExtScalar {
        &self.total
    }

    /// Number of represented points.
    pub fn point_count(&self) -> u128 {
        self.mult.iter().sum()
    }

    pub fn lookup(&self, part: u16, label: &PointLabel) -> Option<PointId> {
        self.index.get(&(part, *label)).copied()
    }

    /// Looks a label up in the first part that contains it.
    pub fn find(&self, label: &PointLabel) -> Option<PointId> {
        (0..self.parts.len() as u16).find_map(|p| self.lookup(p, label))
    }

    /// Points at distance 1, sorted.
    pub fn neighbors(&self, id: PointId) -> &[PointId] {
        let i = id as usize;
        &self.adj[self.adj_start[i]..self.adj_start[i + 1]]
    }

    /// Distance between copy 0 of `a` and copy 0 of `b`.
    pub fn dist(&self, a: PointId, b: PointId) -> u8 {
        if a == b {
            0
        } else if self.neighbors(a).binary_search(&b).is_ok() {
            1
        } else {
            2
        }
    }

    /// Copies of `q` inside the open ball of radius `r` about copy 0 of `c`,
    /// from distances alone.
    pub fn copies_within(&self, c: PointId, q: PointId, r: f64) -> u128 {
        let d = self.dist(c, q) as f64;
        let m = self.mult[q as usize];
        if self.block[c as usize] != self.block[q as usize] {
            if d < r {
                m
            } else {
                0
            }
        } else {
            let own = u128::from(d < r);
            let others = if 2.0 < r { m - 1 } else { 0 };
            own + others
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.len() / 2
    }

    pub(crate) fn ball_family(&self) -> &crate::maximal::BallFamily {
        self.balls
            .get_or_init(|| crate::maximal::BallFamily::build(self))
    }

    /// Points of a part, in id order.
    pub fn part_points(&self, part: u16) -> impl Iterator<Item = PointId> + '_ {
        self.ids().filter(move |&p| self.part[p as usize] == part)
    }

    /// Splits orbit blocks into sub-blocks of the given sizes.
    ///
    /// Every representative of a split block is duplicated once per
    /// sub-block, keeping copy alignment. Returns the new space and, for each
    /// old point, its new representatives in sub-block order.
    pub fn split_blocks(&self, splits: &[(u32, Vec<u128>)]) -> Result<(Space, Vec<Vec<PointId>>)> {
        let mut plan: HashMap<u32, &Vec<u128>> = HashMap::new();
        for (blk, sizes) in splits {
            let reps: Vec<PointId> = self.ids().filter(|&p| self.block(p) == *blk).collect();
            let Some(&first) = reps.first() else {
                return Err(Error::InvalidStructure(format!("no block {blk}")));
            };
            let total: u128 = sizes.iter().sum();
            if sizes.contains(&0) || total != self.multiplicity(first) {
                return Err(Error::InvalidStructure(format!(
                    "split sizes of block {blk} must be positive and sum to {}",
                    self.multiplicity(first)
                )));
            }
            plan.insert(*blk, sizes);
        }
        let mut b = SpaceBuilder::new(self.mode).with_cap(usize::MAX);
        let mut touched_parts = vec![false; self.parts.len()];
        let mut map: Vec<Vec<PointId>> = vec![Vec::new(); self.len()];
        let mut next_block: u32 = 0;
        let mut block_ids: HashMap<(u32, usize), u32> = HashMap::new();
        for p in self.ids() {
            let blk = self.block(p);
            let label = self.label(p);
            match plan.get(&blk) {
                Some(sizes) if sizes.len() > 1 => {
                    touched_parts[self.part_of(p) as usize] = true;
                    let base = label.index().ok_or_else(|| {
                        Error::InvalidStructure(format!("cannot split orbit of {label}"))
                    })?;
                    let mut offset = 0u128;
                    for (s, &size) in sizes.iter().enumerate() {
                        let nb = *block_ids.entry((blk, s)).or_insert_with(|| {
                            next_block += 1;
                            next_block - 1
                        });
                        let new_label = label.with_index(base + offset).expect("indexed label");
                        let id =
                            b.push(self.part_of(p), new_label, nb, size, self.mass(p).clone())?;
                        map[p as usize].push(id);
                        offset += size;
                    }
                }
                _ => {
                    let nb = *block_ids.entry((blk, 0)).or_insert_with(|| {
                        next_block += 1;
                        next_block - 1
                    });
                    let id = b.push(
                        self.part_of(p),
                        label,
                        nb,
                        self.multiplicity(p),
                        self.mass(p).clone(),
                    )?;
                    map[p as usize].push(id);
                }
            }
        }
        for (idx, info) in self.parts.iter().enumerate() {
            let mut info = info.clone();
            info.refined |= touched_parts[idx];
            b.add_part(info);
        }
        for p in self.ids() {
            for &q in self.neighbors(p) {
                if q < p {
                    continue;
                }
                let (mp, mq) = (&map[p as usize], &map[q as usize]);
                if self.block(p) == self.block(q) {
                    // copy-aligned: sub-block s pairs with sub-block s
                    for (a, c) in mp.iter().zip(mq.iter()) {
                        b.link(*a, *c);
                    }
                } else {
                    for a in mp {
                        for c in mq {
                            b.link(*a, *c);
                        }
                    }
                }
            }
        }
        Ok((b.finish()?, map))
    }
}

/// A set of points, as (representative, number of copies) pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PointSet {
    Whole,
    Listed(Vec<(PointId, u128)>),
}

impl PointSet {
    /// Canonical set from entries; merges duplicates and collapses to
    /// [`PointSet::Whole`] when every copy is present.
    pub fn from_entries(space: &Space, mut entries: Vec<(PointId, u128)>) -> Result<PointSet> {
        entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(PointId, u128)> = Vec::with_capacity(entries.len());
        for (id, c) in entries {
            space.check(id)?;
            if c == 0 {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.0 == id => last.1 += c,
                _ => out.push((id, c)),
            }
        }
        for &(id, c) in &out {
            if c > space.multiplicity(id) {
                return Err(Error::InvalidStructure(format!(
                    "{c} copies of point {id} requested, {} exist",
                    space.multiplicity(id)
                )));
            }
        }
        if out.len() == space.len() && out.iter().all(|&(id, c)| c == space.multiplicity(id)) {
            Ok(PointSet::Whole)
        } else {
            Ok(PointSet::Listed(out))
        }
    }

    /// Full orbits of the given points.
    pub fn of_points(space: &Space, ids: impl IntoIterator<Item = PointId>) -> Result<PointSet> {
        let entries = ids
            .into_iter()
            .map(|id| space.check(id).map(|_| (id, space.multiplicity(id))))
            .collect::<Result<Vec<_>>>()?;
        PointSet::from_entries(space, entries)
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, PointSet::Listed(v) if v.is_empty())
    }

    pub fn entries<'a>(
        &'a self,
        space: &'a Space,
    ) -> Box<dyn Iterator<Item = (PointId, u128)> + 'a> {
        match self {
            PointSet::Whole => Box::new(space.ids().map(move |p| (p, space.multiplicity(p)))),
            PointSet::Listed(v) => Box::new(v.iter().copied()),
        }
    }

    pub fn contains(&self, id: PointId) -> bool {
        match self {
            PointSet::Whole => true,
            PointSet::Listed(v) => v.binary_search_by_key(&id, |e| e.0).is_ok(),
        }
    }

    /// True if each listed representative appears with all its copies.
    pub fn is_orbit_union(&self, space: &Space) -> bool {
        self.entries(space)
            .all(|(id, c)| c == space.multiplicity(id))
    }

    /// Number of represented points.
    pub fn size(&self, space: &Space) -> u128 {
        self.entries(space).map(|e| e.1).sum()
    }
}

/// Open ball `{y : dist(center, y) < radius}`.
pub fn ball(space: &Space, center: PointId, radius: f64) -> Result<PointSet> {
    space.check(center)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    if radius > 2.0 {
        return Ok(PointSet::Whole);
    }
    let mut entries = vec![(center, 1u128)];
    if radius > 1.0 {
        let cb = space.block(center);
        for &q in space.neighbors(center) {
            let c = if space.block(q) == cb {
                1
            } else {
                space.multiplicity(q)
            };
            entries.push((q, c));
        }
    }
    PointSet::from_entries(space, entries)
}

/// Same ball computed by scanning the distance to every stored point.
pub fn ball_by_scan(space: &Space, center: PointId, radius: f64) -> Result<PointSet> {
    space.check(center)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    let entries = space
        .ids()
        .map(|q| (q, space.copies_within(center, q, radius)))
        .filter(|e| e.1 > 0)
        .collect();
    PointSet::from_entries(space, entries)
}

/// Radii realizing every distinct ball about a center: one below the least
/// positive distance, one per gap, one above the diameter.
pub const REPRESENTATIVE_RADII: [f64; 3] = [1.0, 1.5, 2.5];
