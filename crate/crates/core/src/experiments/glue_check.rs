//! Maximal operators across a glued union.
//!
//! Balls of radius at most 2 about a point of one part stay inside that
//! part, and every larger ball is the whole union. Two identities are
//! checked for `x` in a part `P` of `Z`:
//!
//! * `M_Z f(x) = max(M_P f|_P (x), A_Z f)`, with `M_P` the operator of `P`
//!   as a space on its own;
//! * `M_Z f(x) = max(M_P^loc f|_P (x), A_Z f)`, with `M_P^loc` using only
//!   balls of radius at most 2.
//!
//! The first can fail: `M_P` may use the average over `P`, and `P` is not
//! a ball of `Z` about `x` unless it is one of radius at most 2. The second
//! holds in general.

use rayon::prelude::*;

use super::report::{Report, Row};
use super::rng::{random_function, trial_rng};
use super::{params_json, TOL};
use crate::error::Result;
use crate::function::WeightedFunction;
use crate::generators::glue;
use crate::maximal::{maximal, maximal_local, Operator};
use crate::norms::average;
use crate::scalar::ExtScalar;
use crate::space::{PointId, PointSet, Space};

/// First point where an identity fails, if any.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub cases: u64,
    pub violations: u64,
    pub first: Option<String>,
}

#[derive(Clone, Debug, Default)]
pub struct GlueOutcome {
    /// Indexed by operator (centered, noncentered), then identity
    /// (whole-part, local).
    pub tallies: [[Tally; 2]; 2],
}

/// Violation count and first description, by operator then identity.
type Counts = [[(u64, Option<String>); 2]; 2];

const OPS: [Operator; 2] = [Operator::Centered, Operator::NonCentered];

/// Violations of both identities for one function on `Z`, per operator.
fn check_one(
    z: &Space,
    parts: &[(&Space, PointId)],
    f: &WeightedFunction,
    tag: &str,
) -> Result<Counts> {
    let avg = average(z, f, &PointSet::Whole)?;
    let mut out: Counts = Default::default();
    for (oi, &op) in OPS.iter().enumerate() {
        let mz = maximal(z, f, op)?;
        for &(part, offset) in parts {
            let ids: Vec<PointId> = (offset..offset + part.len() as PointId).collect();
            let fp = f.select(&ids);
            let whole = maximal(part, &fp, op)?;
            let local = maximal_local(part, &fp, op)?;
            for (x, &zx) in ids.iter().enumerate() {
                let lhs = mz.value(zx);
                for (ii, g) in [&whole, &local].into_iter().enumerate() {
                    let rhs = g.value(x as PointId).clone().max_of(avg.clone());
                    if !lhs.approx_eq_rel(&rhs, TOL) {
                        let slot = &mut out[oi][ii];
                        slot.0 += 1;
                        if slot.1.is_none() {
                            slot.1 = Some(format!(
                                "{tag}: x = {}, M_Z = {}, rhs = {}",
                                z.label(zx),
                                lhs.to_decimal_string(12),
                                rhs.to_decimal_string(12)
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn glue_consistency(a: &Space, b: &Space, trials: u64, seed: u64) -> Result<GlueOutcome> {
    let z = glue(a, b)?;
    let parts = [(a, 0 as PointId), (b, a.len() as PointId)];

    let mut cases: Vec<(String, WeightedFunction)> = Vec::new();
    cases.push((
        "constant".into(),
        WeightedFunction::constant(&z, ExtScalar::from_u64(3))?,
    ));
    let mut in_b = WeightedFunction::zeros(&z);
    for id in a.len()..z.len() {
        in_b.set(&z, id as PointId, ExtScalar::one())?;
    }
    cases.push(("indicator of the second part".into(), in_b));

    let fixed: Vec<Result<_>> = cases
        .par_iter()
        .map(|(tag, f)| check_one(&z, &parts, f, tag))
        .collect();
    let random: Vec<Result<_>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let f = random_function(&z, &mut rng);
            check_one(&z, &parts, &f, &format!("trial {t}"))
        })
        .collect();

    let mut outcome = GlueOutcome::default();
    for r in fixed.into_iter().chain(random) {
        let r = r?;
        for (tallies, counts) in outcome.tallies.iter_mut().zip(r) {
            for (t, (violations, first)) in tallies.iter_mut().zip(counts) {
                t.cases += 1;
                t.violations += violations;
                if t.first.is_none() {
                    t.first = first;
                }
            }
        }
    }
    Ok(outcome)
}

pub fn glue_consistency_check(a: &Space, b: &Space, trials: u64, seed: u64) -> Result<Report> {
    let outcome = glue_consistency(a, b, trials, seed)?;
    let mut report = Report::new("glue-check")
        .param("points_a", a.len())
        .param("points_b", b.len())
        .param("trials", trials)
        .param("seed", seed);
    params_json(&mut report);
    report.note(
        "identity 'whole-part' uses each part's own operator, whose radius > 2 ball is the part; \
         identity 'local' uses only radius <= 2 balls of the part",
    );
    for (oi, op) in OPS.iter().enumerate() {
        for (ii, name) in ["whole-part", "local"].iter().enumerate() {
            let t = &outcome.tallies[oi][ii];
            let ok = t.violations == 0;
            report.assert(ok);
            report.push(
                Row::new()
                    .with("op", op.to_string())
                    .with("identity", *name)
                    .with("functions", t.cases)
                    .with("violations", t.violations)
                    .with(
                        "first_violation",
                        t.first.clone().unwrap_or_else(|| "none".into()),
                    )
                    .with("ok", ok),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build_first_gen, build_second_gen, derive_sequences};
    use crate::space::{Mode, PointLabel};

    #[test]
    fn local_identity_holds_and_whole_part_fails_on_y() {
        let p = derive_sequences(2.0, 1).unwrap();
        let x = build_first_gen(&p, Mode::Explicit).unwrap();
        let y = build_second_gen(&p, Mode::Explicit).unwrap();
        let out = glue_consistency(&x, &y, 20, 1).unwrap();
        for oi in 0..2 {
            assert_eq!(
                out.tallies[oi][1].violations, 0,
                "{:?}",
                out.tallies[oi][1].first
            );
        }

        // a Dirac at one y' leaf, seen from another y' leaf
        let z = glue(&x, &y).unwrap();
        let off = x.len() as PointId;
        let leaf = |k| y.find(&PointLabel::YLeaf { n: 1, i: 1, k }).unwrap();
        let f = WeightedFunction::dirac(&z, off + leaf(1)).unwrap();
        let r = check_one(&z, &[(&x, 0), (&y, off)], &f, "dirac").unwrap();
        assert!(r[0][0].0 > 0 && r[1][0].0 > 0);
        assert_eq!(r[0][1].0 + r[1][1].0, 0);
        let mz = maximal(&z, &f, Operator::NonCentered).unwrap();
        let want = ExtScalar::from_u64(8) / ExtScalar::from_u64(259);
        assert_eq!(mz.value(off + leaf(2)), &want);
    }

    #[test]
    fn one_level_first_generation_part_is_a_ball() {
        // X with one level is the ball of radius 1.5 about its branch point,
        // so only the centered whole-part identity can fail
        let p = derive_sequences(2.0, 1).unwrap();
        let x = build_first_gen(&p, Mode::Explicit).unwrap();
        let out = glue_consistency(&x, &x, 10, 4).unwrap();
        assert!(out.tallies[0][0].violations > 0);
        assert_eq!(out.tallies[0][1].violations, 0);
        assert_eq!(out.tallies[1][0].violations, 0);
        assert_eq!(out.tallies[1][1].violations, 0);
    }
}
