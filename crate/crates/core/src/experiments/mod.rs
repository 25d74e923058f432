//! Drivers for the quantitative checks and their reports.

pub mod glue_check;
pub mod growth;
pub mod report;
pub mod rng;
pub mod rwt;
pub mod strong11;

use crate::error::Result;
use crate::generators::{build, derive_sequences, orbit_representative, Generation};
use crate::maximal::{maximal, Operator};
use crate::scalar::{working_precision, ExtScalar};
use crate::space::{Mode, PointId};

pub use glue_check::glue_consistency_check;
pub use growth::{extremal_function, growth_table};
pub use report::{Cell, Report, Row, Verdict};
pub use rwt::{dirac_rwt_check, family_subset_check, rwt_search, FamilyPlan, Search};
pub use strong11::strong11_check;

/// Relative tolerance of every asserted inequality.
pub const TOL: f64 = 1e-20;

/// Adds the scalar precision to a report's parameter echo.
pub(crate) fn params_json(report: &mut Report) {
    report
        .params
        .insert("precision_bits".into(), working_precision().into());
}

/// Explicit and quotient evaluations of `Op f_n` on every level `n <= N`,
/// compared point by point through the orbit map.
pub fn mode_agreement_check(p0: f64, nmax: u32) -> Result<Report> {
    let params = derive_sequences(p0, nmax)?;
    let mut report = Report::new("mode-agreement")
        .param("p0", p0)
        .param("nmax", nmax);
    params_json(&mut report);
    for generation in [Generation::First, Generation::Second] {
        let e = build(&params, generation, Mode::Explicit)?;
        let q = build(&params, generation, Mode::Quotient)?;
        let rep: Vec<PointId> = e
            .ids()
            .map(|p| {
                let label = orbit_representative(&params, &e.label(p));
                q.lookup(0, &label).expect("orbit representative exists")
            })
            .collect();
        for n in 1..=nmax {
            let fe = extremal_function(&e, &params, n, generation)?;
            let fq = extremal_function(&q, &params, n, generation)?;
            for op in [Operator::Centered, Operator::NonCentered] {
                let ge = maximal(&e, &fe, op)?;
                let gq = maximal(&q, &fq, op)?;
                let mut worst = ExtScalar::zero();
                for p in e.ids() {
                    let d = ge.value(p).rel_diff(gq.value(rep[p as usize]));
                    if d > worst {
                        worst = d;
                    }
                }
                let ok = worst.to_f64() <= TOL;
                report.assert(ok);
                report.push(
                    Row::new()
                        .with("gen", generation.to_string())
                        .with("n", n)
                        .with("op", op.to_string())
                        .with("points", e.len())
                        .with("max_rel_diff", worst)
                        .with("ok", ok),
                );
            }
        }
    }
    Ok(report)
}
