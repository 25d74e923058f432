//! Balls from the closed-form case lists of the generated spaces.

use super::build::block_at;
use crate::error::{Error, Result};
use crate::space::{Mode, PartKind, PointId, PointLabel, PointSet, Space, TauTable};

/// Leaf-type representatives of `family(n, i2, k)` lying in the level-`i`
/// block `j`, i.e. the points of `S'_{n,i2,i,j}` (or its `T` analog).
#[allow(clippy::too_many_arguments)]
fn block_members(
    space: &Space,
    part: u16,
    tau: &TauTable,
    n: u32,
    i2: u32,
    i: u32,
    j: u64,
    family: impl Fn(u128) -> PointLabel,
    out: &mut Vec<(PointId, u128)>,
) -> Result<()> {
    let t = tau[(n - 1) as usize][(i2 - 1) as usize];
    let span = t >> (i - 1);
    let lo = (j as u128 - 1) * span;
    let step = match space.mode() {
        Mode::Explicit => 1,
        Mode::Quotient => t >> (i2 - 1),
    };
    let mut k = lo + 1;
    while k <= lo + span {
        let id = lookup(space, part, &family(k))?;
        out.push((id, space.multiplicity(id)));
        k += step;
    }
    Ok(())
}

fn lookup(space: &Space, part: u16, label: &PointLabel) -> Result<PointId> {
    space
        .lookup(part, label)
        .ok_or_else(|| Error::InvalidStructure(format!("{label} missing from part {part}")))
}

/// Ball about a point of a generated part, from the case lists of the
/// construction rather than a distance scan.
pub fn structural_ball(space: &Space, center: PointId, radius: f64) -> Result<PointSet> {
    space.check(center)?;
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidRadius(radius));
    }
    let part = space.part_of(center);
    let info = &space.parts()[part as usize];
    if info.kind == PartKind::Opaque {
        return Err(Error::ForeignSpace("opaque part".into()));
    }
    if info.refined {
        return Err(Error::ForeignSpace(
            "orbits were split after construction".into(),
        ));
    }
    if radius > 2.0 {
        return Ok(PointSet::Whole);
    }
    if radius <= 1.0 {
        return PointSet::from_entries(space, vec![(center, 1)]);
    }
    let tau = &info.tau;
    let label = space.label(center);
    let mut out = vec![(center, 1u128)];
    match (label, &info.kind) {
        (PointLabel::XBranch { n, i, j }, PartKind::FirstGen) => {
            for i2 in i..=n {
                block_members(
                    space,
                    part,
                    tau,
                    n,
                    i2,
                    i,
                    j,
                    |k| PointLabel::XLeaf { n, i: i2, k },
                    &mut out,
                )?;
            }
        }
        (PointLabel::XLeaf { n, i: i2, k }, PartKind::FirstGen) => {
            let t = tau[(n - 1) as usize][(i2 - 1) as usize];
            for i in 1..=i2 {
                let j = block_at(t, i, k);
                out.push((lookup(space, part, &PointLabel::XBranch { n, i, j })?, 1));
            }
        }
        (PointLabel::YBranch { n, i, j }, PartKind::SecondGen) => {
            for i1 in 1..=n {
                for j1 in 1..=1u64 << (i1 - 1) {
                    out.push((
                        lookup(space, part, &PointLabel::YBranch { n, i: i1, j: j1 })?,
                        1,
                    ));
                }
            }
            for i2 in i..=n {
                block_members(
                    space,
                    part,
                    tau,
                    n,
                    i2,
                    i,
                    j,
                    |k| PointLabel::YMid { n, i: i2, k },
                    &mut out,
                )?;
            }
            // the center was listed twice
            out.remove(0);
        }
        (PointLabel::YMid { n, i: i2, k }, PartKind::SecondGen) => {
            out.push((lookup(space, part, &PointLabel::YLeaf { n, i: i2, k })?, 1));
            let t = tau[(n - 1) as usize][(i2 - 1) as usize];
            for i in 1..=i2 {
                let j = block_at(t, i, k);
                out.push((lookup(space, part, &PointLabel::YBranch { n, i, j })?, 1));
            }
        }
        (PointLabel::YLeaf { n, i, k }, PartKind::SecondGen) => {
            out.push((lookup(space, part, &PointLabel::YMid { n, i, k })?, 1));
        }
        (other, _) => {
            return Err(Error::ForeignSpace(format!(
                "{other} does not belong to its part template"
            )))
        }
    }
    PointSet::from_entries(space, out)
}
