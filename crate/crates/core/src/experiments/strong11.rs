//! Strong (1,1) check for the centered operator on second-generation spaces.

use rayon::prelude::*;

use super::growth::extremal_function;
use super::report::{Report, Row};
use super::rng::{random_function, trial_rng};
use super::{params_json, TOL};
use crate::error::{Error, Result};
use crate::function::WeightedFunction;
use crate::generators::{GenParams, Generation};
use crate::maximal::{l1_of_maximal, Operator};
use crate::norms::lp_norm_pow;
use crate::scalar::ExtScalar;
use crate::space::{Mode, PartKind, PointId, Space};

/// The constant of the strong (1,1) estimate.
pub const STRONG11_BOUND: u64 = 6;

/// `||M^c f||_1 / ||f||_1`.
pub fn strong11_ratio(space: &Space, f: &WeightedFunction) -> Result<ExtScalar> {
    let norm = lp_norm_pow(space, f, 1.0)?;
    if norm.is_zero() {
        return Err(Error::ZeroFunction);
    }
    Ok(l1_of_maximal(space, f, Operator::Centered)? / norm)
}

/// Ratio for a Dirac mass at one copy of `id`. Orbits with several copies
/// are split first so the single copy becomes its own representative.
pub fn dirac_ratio(space: &Space, id: PointId) -> Result<ExtScalar> {
    let mult = space.multiplicity(id);
    if mult == 1 {
        return strong11_ratio(space, &WeightedFunction::dirac(space, id)?);
    }
    let (refined, map) = space.split_blocks(&[(space.block(id), vec![1, mult - 1])])?;
    strong11_ratio(
        &refined,
        &WeightedFunction::dirac(&refined, map[id as usize][0])?,
    )
}

/// One representative per point class: every branch point, and the first
/// point of each finest leaf block.
fn dirac_targets(space: &Space) -> Vec<PointId> {
    let mut seen = std::collections::HashSet::new();
    space
        .ids()
        .filter(|&p| {
            let label = space.label(p);
            if label.is_branch() || space.mode() == Mode::Quotient {
                return true;
            }
            // explicit: one leaf per (level, family, finest block, layer)
            let key = (
                space.part_of(p),
                std::mem::discriminant(&label),
                label.level(),
                space_block_key(space, p),
            );
            seen.insert(key)
        })
        .collect()
}

fn space_block_key(space: &Space, p: PointId) -> Option<(u32, u64)> {
    use crate::space::PointLabel::*;
    let info = &space.parts()[space.part_of(p) as usize];
    match space.label(p) {
        XLeaf { n, i, k } | YMid { n, i, k } | YLeaf { n, i, k } => {
            let t = info.tau[(n - 1) as usize][(i - 1) as usize];
            let size = t >> (i - 1);
            Some((i, ((k - 1) / size) as u64))
        }
        _ => None,
    }
}

pub fn strong11_check(space: &Space, params: &GenParams, trials: u64, seed: u64) -> Result<Report> {
    if !space.parts().iter().any(|p| p.kind == PartKind::SecondGen) {
        return Err(Error::ForeignSpace(
            "strong (1,1) check needs a second-generation space".into(),
        ));
    }
    let bound = ExtScalar::from_u64(STRONG11_BOUND);
    let mut report = Report::new("strong11-check")
        .param("p0", params.p0)
        .param("nmax", params.nmax)
        .param("mode", serde_json::to_value(space.mode())?)
        .param("seed", seed)
        .param("trials", trials)
        .param("op", "centered");
    params_json(&mut report);
    report.golden_ref = Some("bound 6 for the centered operator".into());
    if space.mode() == Mode::Quotient {
        report.note("quotient mode: random functions are constant on each orbit");
    }

    let record = |report: &mut Report, family: String, ratio: ExtScalar| {
        let ok = ratio.le_rel(&bound, TOL);
        report.assert(ok);
        report.push(
            Row::new()
                .with("family", family)
                .with("ratio", ratio)
                .with("bound", &bound)
                .with("ok", ok),
        );
    };

    let one = WeightedFunction::constant(space, ExtScalar::one())?;
    record(&mut report, "constant".into(), strong11_ratio(space, &one)?);
    let targets = dirac_targets(space);
    let diracs: Vec<Result<ExtScalar>> =
        targets.par_iter().map(|&p| dirac_ratio(space, p)).collect();
    for (p, r) in targets.iter().zip(diracs) {
        record(&mut report, format!("dirac {}", space.label(*p)), r?);
    }
    for n in 1..=params.nmax {
        let f = extremal_function(space, params, n, Generation::Second)?;
        record(&mut report, format!("f_{n}"), strong11_ratio(space, &f)?);
    }

    let ratios: Vec<Result<ExtScalar>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let f = random_function(space, &mut rng);
            strong11_ratio(space, &f)
        })
        .collect();
    let mut best: Option<(u64, ExtScalar)> = None;
    let mut violations = 0u64;
    for (t, r) in ratios.into_iter().enumerate() {
        let r = r?;
        if !r.le_rel(&bound, TOL) {
            violations += 1;
        }
        if best.as_ref().is_none_or(|(_, b)| r > *b) {
            best = Some((t as u64, r));
        }
    }
    if let Some((t, r)) = best {
        report.assert(violations == 0);
        report.push(
            Row::new()
                .with("family", format!("random max (trial {t})"))
                .with("ratio", r)
                .with("bound", &bound)
                .with("ok", violations == 0)
                .with("violations", violations),
        );
    }
    Ok(report)
}

/// Largest ratio in a strong (1,1) report.
pub fn max_ratio(report: &Report) -> Option<ExtScalar> {
    report
        .rows
        .iter()
        .filter_map(|r| r.num("ratio").cloned())
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build_second_gen, derive_sequences};

    #[test]
    fn dirac_modes_agree() {
        let p = derive_sequences(2.0, 1).unwrap();
        let e = build_second_gen(&p, Mode::Explicit).unwrap();
        let q = build_second_gen(&p, Mode::Quotient).unwrap();
        for label in [
            crate::space::PointLabel::YMid { n: 1, i: 1, k: 1 },
            crate::space::PointLabel::YLeaf { n: 1, i: 1, k: 1 },
        ] {
            let a = dirac_ratio(&e, e.find(&label).unwrap()).unwrap();
            let b = dirac_ratio(&q, q.find(&label).unwrap()).unwrap();
            assert!(a.approx_eq_rel(&b, 1e-30), "{label}");
        }
    }

    #[test]
    fn small_check_passes() {
        let p = derive_sequences(2.0, 1).unwrap();
        let s = build_second_gen(&p, Mode::Explicit).unwrap();
        let r = strong11_check(&s, &p, 20, 3).unwrap();
        assert!(r.passed());
        assert!(max_ratio(&r).unwrap() >= ExtScalar::one());
        let c = &r.rows[0];
        assert!(c
            .num("ratio")
            .unwrap()
            .approx_eq_rel(&ExtScalar::one(), 1e-30));
    }
}
