//! Acceptance criteria, one printed line each.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::Oracle;
use maxtype_core::cli::golden_value;
use maxtype_core::experiments::growth::{growth_table, lower_bound};
use maxtype_core::experiments::rwt::{
    family_subset_check, family_total, rwt_search, FamilyPlan, Search,
};
use maxtype_core::experiments::strong11::max_ratio;
use maxtype_core::experiments::{
    dirac_rwt_check, extremal_function, glue_consistency_check, mode_agreement_check,
    strong11_check, Report,
};
use maxtype_core::generators::{
    build, derive_sequences, level_mass, point_count, structural_ball, GenParams, Generation,
};
use maxtype_core::maximal::{maximal, Operator};
use maxtype_core::norms::lp_norm_pow;
use maxtype_core::scalar::set_working_precision;
use maxtype_core::space::{ball, DEFAULT_POINT_CAP, REPRESENTATIVE_RADII};
use maxtype_core::{ExtScalar, Mode, PointLabel, Space};

/// Relative tolerance of the parameter and norm identities.
const TOL_IDENTITY: f64 = 1e-25;
/// Relative tolerance of every asserted bound and of mode agreement.
const TOL_BOUND: f64 = 1e-20;
const PRECISION_BITS: usize = 128;

const BALL_LIMIT: Duration = Duration::from_secs(10);
const GROWTH_LIMIT: Duration = Duration::from_secs(60);
const ORACLE_LIMIT: Duration = Duration::from_secs(120);

const PRESETS: [f64; 3] = [1.5, 2.0, 3.0];
const GENERATIONS: [Generation; 2] = [Generation::First, Generation::Second];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn c1_balls() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    let mut centers = 0usize;
    let mut mismatches = 0usize;
    let mut infeasible = Vec::new();
    for p0 in PRESETS {
        for nmax in 1..=3 {
            let params = derive_sequences(p0, nmax).unwrap();
            for generation in GENERATIONS {
                let mode = if point_count(&params, generation, Mode::Explicit)
                    <= DEFAULT_POINT_CAP as u128
                {
                    Mode::Explicit
                } else {
                    Mode::Quotient
                };
                let s = build(&params, generation, mode).unwrap();
                for c in s.ids() {
                    for &r in &REPRESENTATIVE_RADII {
                        if structural_ball(&s, c, r).unwrap() != ball(&s, c, r).unwrap() {
                            mismatches += 1;
                        }
                    }
                }
                cases += 1;
                centers += s.len();
                if mode == Mode::Quotient {
                    infeasible.push(format!(
                        "p0={p0} N={nmax} {generation} ({} points, checked on orbit representatives)",
                        point_count(&params, generation, Mode::Explicit)
                    ));
                }
            }
        }
    }
    let t = start.elapsed();
    let mut detail =
        format!("{cases} spaces, {centers} centers x 3 radii, {mismatches} mismatches, {t:.1?}");
    if !infeasible.is_empty() {
        detail += &format!(
            "; explicit mode exceeds the point cap for {}",
            infeasible.join(", ")
        );
    }
    outcome(
        mismatches == 0 && infeasible.is_empty() && t < BALL_LIMIT,
        detail,
    )
}

/// `mu` of level `n` from the parameter tables alone.
fn level_mass_formula(p: &GenParams, n: u32, generation: Generation) -> ExtScalar {
    let mut terms = Vec::new();
    for i in 1..=n {
        terms.push(ExtScalar::from_u64(1 << (i - 1)) * p.f(n, i));
        let mut leaf = p.m(n) * ExtScalar::from_u64(i as u64);
        if generation == Generation::Second {
            leaf = leaf + p.g(n).unwrap();
        }
        terms.push(ExtScalar::from_u128(p.tau(n, i)) * leaf);
    }
    p.d(n, generation) * ExtScalar::sum(terms.iter())
}

fn c2_parameters() -> Outcome {
    let mut checks = 0;
    let mut failures = Vec::new();
    let half = ExtScalar::one() / ExtScalar::from_u64(2);
    for p0 in PRESETS {
        let p = derive_sequences(p0, 6).unwrap();
        let spaces: Vec<Space> = GENERATIONS
            .iter()
            .map(|&g| build(&p, g, Mode::Quotient).unwrap())
            .collect();
        let pm1 = ExtScalar::from_f64(p0 - 1.0);
        for n in 1..=6u32 {
            let mut tau_sum = ExtScalar::zero();
            for i in 1..=n {
                let t = p.tau(n, i);
                checks += 1;
                if t == 0 || t % (1u128 << (i - 1)) != 0 {
                    failures.push(format!(
                        "p0={p0} tau[{n},{i}]={t} not divisible by 2^{}",
                        i - 1
                    ));
                }
                let lhs =
                    ExtScalar::from_u128(t) * ExtScalar::from_u64(i as u64) / p.m(n).powf(&pm1);
                let rhs =
                    ExtScalar::pow2(n as i64) * ExtScalar::from_u64(p.floor_a[(i - 1) as usize]);
                checks += 1;
                if !lhs.approx_eq_rel(&rhs, TOL_IDENTITY) {
                    failures.push(format!(
                        "p0={p0} tau[{n},{i}] i / m^(p0-1) = {lhs}, want {rhs}"
                    ));
                }
                tau_sum = tau_sum + ExtScalar::from_u128(t);
            }
            checks += 1;
            if !p.g(n).unwrap().le_rel(&tau_sum.recip(), TOL_IDENTITY) {
                failures.push(format!("p0={p0} G({n}) exceeds 1/sum tau"));
            }
            for (gi, &generation) in GENERATIONS.iter().enumerate() {
                let built = level_mass(&spaces[gi], 0, n);
                let formula = level_mass_formula(&p, n, generation);
                checks += 1;
                if !built.approx_eq_rel(&formula, TOL_IDENTITY) {
                    failures.push(format!(
                        "p0={p0} {generation} level {n} mass {built} vs {formula}"
                    ));
                }
                if n >= 2 {
                    let ratio = formula / level_mass_formula(&p, n - 1, generation);
                    checks += 1;
                    if !ratio.approx_eq_rel(&half, TOL_IDENTITY) {
                        failures.push(format!("p0={p0} {generation} mass ratio at {n} = {ratio}"));
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checks} identities, {} failures {:?}",
            failures.len(),
            failures
        ),
    )
}

fn c3_extremal_norms() -> Outcome {
    let mut checks = 0;
    let mut worst = ExtScalar::zero();
    for p0 in PRESETS {
        let p = derive_sequences(p0, 6).unwrap();
        for generation in GENERATIONS {
            let s = build(&p, generation, Mode::Quotient).unwrap();
            for n in 1..=6u32 {
                let f = extremal_function(&s, &p, n, generation).unwrap();
                let got = lp_norm_pow(&s, &f, p0).unwrap();
                let want = ExtScalar::pow2(n as i64 - 1)
                    * ExtScalar::from_u64(n as u64)
                    * p.d(n, generation);
                let d = got.rel_diff(&want);
                if d > worst {
                    worst = d;
                }
                checks += 1;
            }
        }
    }
    let ok = worst.to_f64() <= TOL_IDENTITY;
    outcome(
        ok,
        format!(
            "{checks} norms, max relative deviation {:.3e}",
            worst.to_f64()
        ),
    )
}

fn c4_leaf_bound() -> Outcome {
    let mut checks = 0;
    let mut failures = Vec::new();
    for p0 in PRESETS {
        let p = derive_sequences(p0, 6).unwrap();
        for (generation, op) in [
            (Generation::First, Operator::Centered),
            (Generation::Second, Operator::NonCentered),
        ] {
            let s = build(&p, generation, Mode::Quotient).unwrap();
            for n in 1..=6u32 {
                let f = extremal_function(&s, &p, n, generation).unwrap();
                let g = maximal(&s, &f, op).unwrap();
                let bound = (ExtScalar::from_u64(2) * p.m(n)).recip();
                for q in s.ids() {
                    let leaf = matches!(
                        s.label(q),
                        PointLabel::XLeaf { n: ln, .. } | PointLabel::YLeaf { n: ln, .. } if ln == n
                    );
                    if leaf {
                        checks += 1;
                        if !bound.le_rel(g.value(q), TOL_BOUND) {
                            failures
                                .push(format!("p0={p0} {generation} {} below 1/(2m)", s.label(q)));
                        }
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checks} leaf orbits, {} below the bound {:?}",
            failures.len(),
            failures
        ),
    )
}

struct Runs {
    c5: (Vec<Report>, Duration),
    c6: Vec<Report>,
    c7: Vec<Report>,
    c8: (Vec<Report>, Vec<ExtScalar>, Duration),
    c9: Report,
}

fn run_5_to_9() -> Runs {
    let start = Instant::now();
    let mut growth = Vec::new();
    for p0 in PRESETS {
        growth.push(growth_table(p0, 8, Generation::First, Operator::Centered).unwrap());
        growth.push(growth_table(p0, 8, Generation::Second, Operator::NonCentered).unwrap());
    }
    let growth_time = start.elapsed();

    let mut strong = Vec::new();
    for p0 in [1.5, 2.0] {
        for nmax in 1..=3 {
            let p = derive_sequences(p0, nmax).unwrap();
            let mode = if point_count(&p, Generation::Second, Mode::Explicit) <= 20_000 {
                Mode::Explicit
            } else {
                Mode::Quotient
            };
            let s = build(&p, Generation::Second, mode).unwrap();
            strong.push(strong11_check(&s, &p, 1000, 7).unwrap());
        }
    }

    let mut rwt = Vec::new();
    for p0 in PRESETS {
        let p = derive_sequences(p0, 5).unwrap();
        for generation in GENERATIONS {
            let s = build(&p, generation, Mode::Quotient).unwrap();
            rwt.push(dirac_rwt_check(&s, p0, Operator::NonCentered).unwrap());
            let plan = FamilyPlan {
                seed: 11,
                ..FamilyPlan::default()
            };
            rwt.push(family_subset_check(&s, p0, Operator::NonCentered, plan).unwrap());
        }
    }

    let start = Instant::now();
    let mut exhaustive = Vec::new();
    let mut maxima = Vec::new();
    for s in oracle_spaces() {
        let (r, out) = rwt_search(&s.1, 2.0, Operator::NonCentered, Search::Exhaustive).unwrap();
        exhaustive.push(r);
        maxima.push(out.max);
    }
    let exhaustive_time = start.elapsed();

    let p = derive_sequences(2.0, 1).unwrap();
    let x = build(&p, Generation::First, Mode::Explicit).unwrap();
    let y = build(&p, Generation::Second, Mode::Explicit).unwrap();
    let glue = glue_consistency_check(&x, &y, 500, 1).unwrap();

    Runs {
        c5: (growth, growth_time),
        c6: strong,
        c7: rwt,
        c8: (exhaustive, maxima, exhaustive_time),
        c9: glue,
    }
}

/// The two spaces of the exhaustive oracle, with their golden keys.
fn oracle_spaces() -> Vec<(String, Space, GenParams)> {
    let a = derive_sequences(2.0, 1).unwrap();
    let b = GenParams::simple(vec![vec![1], vec![2, 2]]).unwrap();
    vec![
        (
            "gen=first p0=2 nmax=1 p=2 op=noncentered precision_bits=128".into(),
            build(&a, Generation::First, Mode::Explicit).unwrap(),
            a,
        ),
        (
            "gen=first tau=1;2,2 p=2 op=noncentered precision_bits=128".into(),
            build(&b, Generation::First, Mode::Explicit).unwrap(),
            b,
        ),
    ]
}

fn c5_growth(runs: &Runs) -> Outcome {
    let (reports, t) = &runs.c5;
    let mut rows = 0;
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("p0={} {}", r.params["p0"], r.params["gen"]))
        .collect();
    // p0 = 2: L(n) = n/8 exactly
    let p = derive_sequences(2.0, 8).unwrap();
    let mut exact = true;
    for r in reports.iter().filter(|r| r.params["p0"] == 2.0) {
        for (k, row) in r.rows.iter().enumerate() {
            let want = ExtScalar::from_u64(k as u64 + 1) / ExtScalar::from_u64(8);
            exact &= row.num("L") == Some(&want) && lower_bound(&p, k as u32 + 1) == want;
            rows += 1;
        }
    }
    let increasing = reports.iter().all(|r| {
        r.rows
            .windows(2)
            .skip(1)
            .all(|w| w[0].num("L").unwrap() < w[1].num("L").unwrap())
    });
    let ok = failed.is_empty() && exact && increasing && *t < GROWTH_LIMIT;
    outcome(
        ok,
        format!(
            "{} tables (N=8), R >= L and leaf bound on every row: {}, p0=2 L = n/8 exactly: {exact}, \
             L strictly increasing from n=2: {increasing}, {rows} p0=2 rows, {t:.1?}",
            reports.len(),
            if failed.is_empty() { "yes".to_string() } else { format!("no {failed:?}") },
        ),
    )
}

fn c6_strong11(runs: &Runs) -> Outcome {
    let mut violations = 0;
    let mut max = ExtScalar::zero();
    let mut rows = 0;
    for r in &runs.c6 {
        if !r.passed() {
            violations += 1;
        }
        rows += r.rows.len();
        let m = max_ratio(r).unwrap();
        if m > max {
            max = m;
        }
    }
    // regression value for Y p0=2 N=2, 1000 trials, seed 7
    let golden = golden_value(
        "strong11.json",
        "gen=second p0=2 nmax=2 mode=explicit trials=1000 seed=7 precision_bits=128",
    )
    .unwrap();
    let y22 = runs
        .c6
        .iter()
        .find(|r| r.params["p0"] == 2.0 && r.params["nmax"] == 2)
        .unwrap();
    let measured = max_ratio(y22).unwrap();
    let golden_ok = golden.as_ref() == Some(&measured);
    outcome(
        violations == 0 && golden_ok,
        format!(
            "{} spaces, {rows} rows, {violations} failing reports, max ratio {} <= 6, golden regression match: {golden_ok}",
            runs.c6.len(),
            max.to_decimal_string(10)
        ),
    )
}

fn c7_rwt_families(runs: &Runs) -> Outcome {
    let mut dirac_max = ExtScalar::zero();
    let mut family_max = ExtScalar::zero();
    let mut subsets = 0;
    let mut failing = 0;
    for r in &runs.c7 {
        if !r.passed() {
            failing += 1;
        }
        let is_dirac = r.experiment == "dirac-rwt";
        for row in &r.rows {
            if let Some(v) = row.num(if is_dirac { "value" } else { "max" }) {
                let slot = if is_dirac {
                    &mut dirac_max
                } else {
                    &mut family_max
                };
                if v > slot {
                    *slot = v.clone();
                }
            }
        }
        if !is_dirac {
            subsets += family_total(r);
        }
    }
    let ok = failing == 0 && subsets >= 10_000;
    outcome(
        ok,
        format!(
            "Dirac max {} <= 4, leaf-family max {} <= 2 over {subsets} subsets, {failing} failing reports",
            dirac_max.to_decimal_string(10),
            family_max.to_decimal_string(10)
        ),
    )
}

fn c8_exhaustive(runs: &Runs) -> Outcome {
    let (reports, maxima, t) = &runs.c8;
    let mut parts = Vec::new();
    let mut ok = *t < ORACLE_LIMIT;
    for ((key, _, params), (main, report)) in oracle_spaces().iter().zip(maxima.iter().zip(reports))
    {
        let oracle = Oracle::generated(params, Generation::First).rwt_exhaustive(2.0, false);
        let golden = golden_value("rwt_exhaustive.json", key).unwrap();
        let same = *main == oracle;
        let frozen = golden.as_ref() == Some(main);
        ok &= same && frozen && report.passed();
        parts.push(format!(
            "{} points: C* = {} (oracle bit-identical: {same}, golden: {frozen})",
            oracle_len(params),
            main.to_decimal_string(12)
        ));
    }
    outcome(ok, format!("{}; <= 64; {t:.1?}", parts.join("; ")))
}

fn oracle_len(p: &GenParams) -> usize {
    Oracle::generated(p, Generation::First).len()
}

fn c9_glue(runs: &Runs) -> Outcome {
    let r = &runs.c9;
    let mut literal = 0;
    let mut local = 0;
    let mut first = String::new();
    let mut functions = 0;
    for row in &r.rows {
        let v = row.num("violations").unwrap().to_f64() as u64;
        match row.get("identity") {
            Some(c) if *c == "whole-part".into() => {
                literal += v;
                functions = row.num("functions").unwrap().to_f64() as u64;
                if first.is_empty() {
                    if let Some(maxtype_core::experiments::Cell::Text(t)) =
                        row.get("first_violation")
                    {
                        first = t.clone();
                    }
                }
            }
            _ => local += v,
        }
    }
    outcome(
        literal == 0,
        format!(
            "literal identity: {literal} point violations over {functions} functions x 2 operators (first: {first}); \
             identity restricted to balls of radius <= 2: {local} violations"
        ),
    )
}

fn c10_determinism(reference: &Runs) -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let again = pool.install(run_5_to_9);
    let flatten = |r: &Runs| -> Vec<String> {
        r.c5.0
            .iter()
            .chain(&r.c6)
            .chain(&r.c7)
            .chain(&r.c8.0)
            .chain(std::iter::once(&r.c9))
            .map(|x| x.to_json())
            .collect()
    };
    let a = flatten(reference);
    let b = flatten(&again);
    let same = a == b;
    let bytes: usize = a.iter().map(String::len).sum();
    outcome(
        same,
        format!(
            "{} reports, {bytes} bytes, identical under 1 and 4 threads: {same}",
            a.len()
        ),
    )
}

fn c11_modes() -> Outcome {
    let r = mode_agreement_check(2.0, 2).unwrap();
    let worst = r
        .rows
        .iter()
        .filter_map(|row| row.num("max_rel_diff"))
        .max()
        .unwrap()
        .clone();
    outcome(
        r.passed() && worst.to_f64() <= TOL_BOUND,
        format!(
            "{} comparisons (p0=2, n <= 2, both operators), max relative difference {:.3e}",
            r.rows.len(),
            worst.to_f64()
        ),
    )
}

fn main() -> ExitCode {
    set_working_precision(PRECISION_BITS);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let report =
        |id: u32, name: &'static str, o: Outcome, results: &mut Vec<(u32, &str, Outcome)>| {
            println!(
                "[{}] {id:>2} {name}: {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            results.push((id, name, o));
        };
    report(1, "ball equivalence", c1_balls(), &mut results);
    report(2, "parameter identities", c2_parameters(), &mut results);
    report(
        3,
        "extremal norm formula",
        c3_extremal_norms(),
        &mut results,
    );
    report(4, "leaf lower bound", c4_leaf_bound(), &mut results);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let runs = single.install(run_5_to_9);
    report(5, "growth reproduction", c5_growth(&runs), &mut results);
    report(
        6,
        "strong (1,1) on the second generation",
        c6_strong11(&runs),
        &mut results,
    );
    report(
        7,
        "restricted weak constants",
        c7_rwt_families(&runs),
        &mut results,
    );
    report(8, "exhaustive oracle", c8_exhaustive(&runs), &mut results);
    report(9, "glue decomposition", c9_glue(&runs), &mut results);
    report(10, "determinism", c10_determinism(&runs), &mut results);
    report(11, "mode agreement", c11_modes(), &mut results);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {failed:?}")
        }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
