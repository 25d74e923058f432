//! Construction of generated spaces from their metric rules.

use std::sync::Arc;

use super::{GenParams, Generation};
use crate::error::{Error, Result};
use crate::scalar::ExtScalar;
use crate::space::{
    Mode, PartInfo, PartKind, PointId, PointLabel, Space, SpaceBuilder, TauTable, DEFAULT_POINT_CAP,
};

/// Dyadic block index `j` at level `i` containing leaf index `k` of a family
/// of size `tau`, i.e. the `j` with `k` in `((j-1) tau/2^(i-1), j tau/2^(i-1)]`.
pub(crate) fn block_at(tau: u128, i: u32, k: u128) -> u64 {
    let size = tau >> (i - 1);
    ((k - 1) / size + 1) as u64
}

fn tau_of(tau: &TauTable, n: u32, i: u32) -> Option<u128> {
    tau.get(n.checked_sub(1)? as usize)?
        .get(i.checked_sub(1)? as usize)
        .copied()
}

/// `1` iff `{x_{n,i,j}, x'_{n,i',k}}` with `x'_{n,i',k}` in `S'_{n,i',i,j}`.
fn branch_sees_leaf(tau: &TauTable, n: u32, i: u32, j: u64, n2: u32, i2: u32, k: u128) -> bool {
    if n != n2 || i2 < i {
        return false;
    }
    match tau_of(tau, n2, i2) {
        Some(t) => k >= 1 && k <= t && block_at(t, i, k) == j,
        None => false,
    }
}

/// Metric of the first-generation template on two labels.
pub fn first_gen_distance(tau: &TauTable, a: &PointLabel, b: &PointLabel) -> u8 {
    use PointLabel::*;
    if a == b {
        return 0;
    }
    match (*a, *b) {
        (XBranch { n, i, j }, XLeaf { n: n2, i: i2, k })
        | (XLeaf { n: n2, i: i2, k }, XBranch { n, i, j })
            if branch_sees_leaf(tau, n, i, j, n2, i2, k) =>
        {
            1
        }
        _ => 2,
    }
}

/// Metric of the second-generation template on two labels.
pub fn second_gen_distance(tau: &TauTable, a: &PointLabel, b: &PointLabel) -> u8 {
    use PointLabel::*;
    if a == b {
        return 0;
    }
    match (*a, *b) {
        (YBranch { n, i, j }, YMid { n: n2, i: i2, k })
        | (YMid { n: n2, i: i2, k }, YBranch { n, i, j })
            if branch_sees_leaf(tau, n, i, j, n2, i2, k) =>
        {
            1
        }
        (YBranch { n, .. }, YBranch { n: n2, .. }) if n == n2 => 1,
        (
            YMid { n, i, k },
            YLeaf {
                n: n2,
                i: i2,
                k: k2,
            },
        )
        | (
            YLeaf {
                n: n2,
                i: i2,
                k: k2,
            },
            YMid { n, i, k },
        ) if (n, i, k) == (n2, i2, k2) => 1,
        _ => 2,
    }
}

/// Number of stored points of a construction.
pub fn point_count(params: &GenParams, generation: Generation, mode: Mode) -> u128 {
    let layers = match generation {
        Generation::First => 1,
        Generation::Second => 2,
    };
    (1..=params.nmax)
        .map(|n| {
            let branches = (1u128 << n) - 1;
            let leaves: u128 = match mode {
                Mode::Explicit => (1..=n).map(|i| params.tau(n, i)).sum(),
                Mode::Quotient => branches,
            };
            branches + layers * leaves
        })
        .sum()
}

pub fn build(params: &GenParams, generation: Generation, mode: Mode) -> Result<Space> {
    build_with_cap(params, generation, mode, DEFAULT_POINT_CAP)
}

pub fn build_first_gen(params: &GenParams, mode: Mode) -> Result<Space> {
    build(params, Generation::First, mode)
}

pub fn build_second_gen(params: &GenParams, mode: Mode) -> Result<Space> {
    build(params, Generation::Second, mode)
}

/// Leaf families of level `n`: `(i, first k, copies)` per orbit.
fn leaf_orbits(params: &GenParams, n: u32, mode: Mode) -> Vec<(u32, u128, u128)> {
    let mut out = Vec::new();
    for i in 1..=n {
        let t = params.tau(n, i);
        match mode {
            Mode::Explicit => out.extend((1..=t).map(|k| (i, k, 1))),
            Mode::Quotient => {
                let size = t >> (i - 1);
                out.extend((0..1u128 << (i - 1)).map(|b| (i, b * size + 1, size)));
            }
        }
    }
    out
}

pub fn build_with_cap(
    params: &GenParams,
    generation: Generation,
    mode: Mode,
    cap: usize,
) -> Result<Space> {
    let violations = super::validate_params(params);
    if let Some(v) = violations.first() {
        return Err(Error::InvalidParams(v.to_string()));
    }
    if generation == Generation::Second && !params.has_second() {
        return Err(Error::InvalidParams("second generation needs G".into()));
    }
    if point_count(params, generation, mode) > cap as u128 {
        return Err(Error::CapExceeded { cap });
    }
    let tau = Arc::new(params.tau.clone());
    let kind = match generation {
        Generation::First => PartKind::FirstGen,
        Generation::Second => PartKind::SecondGen,
    };
    let mut b = SpaceBuilder::new(mode).with_cap(cap);
    let part = b.add_part(PartInfo {
        kind,
        tau: tau.clone(),
        refined: false,
    });
    let mut next_block = 0u32;
    let mut fresh = || {
        next_block += 1;
        next_block - 1
    };
    let rule = |x: &PointLabel, y: &PointLabel| match generation {
        Generation::First => first_gen_distance(&tau, x, y),
        Generation::Second => second_gen_distance(&tau, x, y),
    };
    for n in 1..=params.nmax {
        let d = params.d(n, generation);
        let mut branches: Vec<(PointId, PointLabel)> = Vec::new();
        for i in 1..=n {
            let mass = d * params.f(n, i);
            for j in 1..=1u64 << (i - 1) {
                let label = match generation {
                    Generation::First => PointLabel::XBranch { n, i, j },
                    Generation::Second => PointLabel::YBranch { n, i, j },
                };
                branches.push((b.push(part, label, fresh(), 1, mass.clone())?, label));
            }
        }
        let mut inner: Vec<(PointId, PointLabel)> = Vec::new();
        let mut outer: Vec<(PointId, PointLabel)> = Vec::new();
        let leaf_mass: Vec<ExtScalar> = (1..=n)
            .map(|i| d * &(params.m(n) * &ExtScalar::from_u64(i as u64)))
            .collect();
        for (i, k, copies) in leaf_orbits(params, n, mode) {
            let blk = fresh();
            let lm = leaf_mass[(i - 1) as usize].clone();
            match generation {
                Generation::First => {
                    let label = PointLabel::XLeaf { n, i, k };
                    inner.push((b.push(part, label, blk, copies, lm)?, label));
                }
                Generation::Second => {
                    let g = d * params.g(n).expect("checked above");
                    let mid = PointLabel::YMid { n, i, k };
                    inner.push((b.push(part, mid, blk, copies, g)?, mid));
                    let leaf = PointLabel::YLeaf { n, i, k };
                    outer.push((b.push(part, leaf, blk, copies, lm)?, leaf));
                }
            }
        }
        // candidate pairs; the rule decides
        for (bi, (p, lp)) in branches.iter().enumerate() {
            for (q, lq) in &inner {
                if rule(lp, lq) == 1 {
                    b.link(*p, *q);
                }
            }
            if generation == Generation::Second {
                for (q, lq) in &branches[bi + 1..] {
                    if rule(lp, lq) == 1 {
                        b.link(*p, *q);
                    }
                }
            }
        }
        for ((p, lp), (q, lq)) in inner.iter().zip(&outer) {
            if rule(lp, lq) == 1 {
                b.link(*p, *q);
            }
        }
    }
    b.finish()
}

/// Disjoint union at mutual distance 2 with summed measure.
pub fn glue(a: &Space, other: &Space) -> Result<Space> {
    if a.mode() != other.mode() {
        return Err(Error::InvalidStructure(
            "cannot glue spaces of different modes".into(),
        ));
    }
    let mut b = SpaceBuilder::new(a.mode()).with_cap(usize::MAX);
    for info in a.parts().iter().chain(other.parts()) {
        b.add_part(info.clone());
    }
    let part_offset = a.parts().len() as u16;
    let block_offset = a.ids().map(|p| a.block(p) + 1).max().unwrap_or(0);
    for (src, poff, boff) in [(a, 0u16, 0u32), (other, part_offset, block_offset)] {
        for p in src.ids() {
            b.push(
                src.part_of(p) + poff,
                src.label(p),
                src.block(p) + boff,
                src.multiplicity(p),
                src.mass(p).clone(),
            )?;
        }
    }
    let id_offset = a.len() as PointId;
    for (src, off) in [(a, 0), (other, id_offset)] {
        for p in src.ids() {
            for &q in src.neighbors(p) {
                if p < q {
                    b.link(p + off, q + off);
                }
            }
        }
    }
    b.finish()
}

/// `mu` of level `n` within one part.
pub fn level_mass(space: &Space, part: u16, n: u32) -> ExtScalar {
    let w: Vec<&ExtScalar> = space
        .part_points(part)
        .filter(|&p| space.label(p).level() == Some(n))
        .map(|p| space.weight(p))
        .collect();
    ExtScalar::sum(w)
}
