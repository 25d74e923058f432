//! First- and second-generation spaces, their parameters, and gluing.

mod build;
mod describe;
mod structural;

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{working_precision, ExtScalar};
use crate::space::{PointLabel, TauTable};

pub use build::{
    build, build_first_gen, build_second_gen, first_gen_distance, glue, level_mass, point_count,
    second_gen_distance,
};
pub use describe::{describe_params, describe_space};
pub use structural::structural_ball;

/// Largest level accepted by the presets.
pub const MAX_LEVEL: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Generation {
    First,
    Second,
}

impl fmt::Display for Generation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generation::First => "first",
            Generation::Second => "second",
        })
    }
}

/// Parameter bundle of a generated space. Level `n` and index `i` are
/// 1-based and stored at `[n-1]` / `[n-1][i-1]`.
#[derive(Clone, Debug)]
pub struct GenParams {
    pub p0: f64,
    pub nmax: u32,
    pub tau: TauTable,
    pub f: Vec<Vec<ExtScalar>>,
    pub m: Vec<ExtScalar>,
    /// Empty when no second-generation weight was given.
    pub g: Vec<ExtScalar>,
    /// `a_i` and `floor(a_i)`; empty for custom parameters.
    pub a: Vec<ExtScalar>,
    pub floor_a: Vec<u64>,
    pub d_first: Vec<ExtScalar>,
    pub d_second: Vec<ExtScalar>,
    pub preset: bool,
}

impl GenParams {
    pub fn tau(&self, n: u32, i: u32) -> u128 {
        self.tau[(n - 1) as usize][(i - 1) as usize]
    }

    pub fn f(&self, n: u32, i: u32) -> &ExtScalar {
        &self.f[(n - 1) as usize][(i - 1) as usize]
    }

    pub fn m(&self, n: u32) -> &ExtScalar {
        &self.m[(n - 1) as usize]
    }

    pub fn g(&self, n: u32) -> Option<&ExtScalar> {
        self.g.get((n - 1) as usize)
    }

    pub fn d(&self, n: u32, generation: Generation) -> &ExtScalar {
        match generation {
            Generation::First => &self.d_first[(n - 1) as usize],
            Generation::Second => &self.d_second[(n - 1) as usize],
        }
    }

    pub fn has_second(&self) -> bool {
        self.g.len() == self.nmax as usize
    }

    /// Parameters from explicit tables; `d` is derived by normalization.
    pub fn custom(
        p0: f64,
        tau: TauTable,
        f: Vec<Vec<ExtScalar>>,
        m: Vec<ExtScalar>,
        g: Option<Vec<ExtScalar>>,
    ) -> Result<GenParams> {
        let nmax = tau.len();
        if nmax == 0 || m.len() != nmax || f.len() != nmax {
            return Err(Error::InvalidParams("tables must cover levels 1..N".into()));
        }
        for n in 0..nmax {
            if tau[n].len() != n + 1 || f[n].len() != n + 1 {
                return Err(Error::InvalidParams(format!(
                    "level {} needs {} entries",
                    n + 1,
                    n + 1
                )));
            }
        }
        if g.as_ref().is_some_and(|g| g.len() != nmax) {
            return Err(Error::InvalidParams("G must cover levels 1..N".into()));
        }
        let mut params = GenParams {
            p0,
            nmax: nmax as u32,
            tau,
            f,
            m,
            g: g.unwrap_or_default(),
            a: Vec::new(),
            floor_a: Vec::new(),
            d_first: Vec::new(),
            d_second: Vec::new(),
            preset: false,
        };
        params.d_first = normalization_weights(&params, Generation::First)?;
        if params.has_second() {
            params.d_second = normalization_weights(&params, Generation::Second)?;
        }
        Ok(params)
    }

    /// Custom parameters with `F = 1` and `m_n = 2^n`.
    pub fn simple(tau: TauTable) -> Result<GenParams> {
        let f = tau
            .iter()
            .map(|row| vec![ExtScalar::one(); row.len()])
            .collect();
        let m = (1..=tau.len() as i64).map(ExtScalar::pow2).collect();
        GenParams::custom(2.0, tau, f, m, None)
    }
}

/// Label of the quotient representative standing for an explicit label.
pub fn orbit_representative(params: &GenParams, label: &PointLabel) -> PointLabel {
    match (label.level(), label.index()) {
        (Some(n), Some(k)) => {
            let i = match *label {
                PointLabel::XLeaf { i, .. }
                | PointLabel::YMid { i, .. }
                | PointLabel::YLeaf { i, .. } => i,
                _ => unreachable!("indexed labels are leaf-type"),
            };
            let size = params.tau(n, i) >> (i - 1);
            label
                .with_index((k - 1) / size * size + 1)
                .expect("indexed label")
        }
        _ => *label,
    }
}

fn check_p0(p0: f64) -> Result<()> {
    if p0.is_nan() || p0 <= 1.0 || !p0.is_finite() {
        return Err(Error::InvalidP0(p0));
    }
    Ok(())
}

/// `floor(a)` for `a >= 0`, snapping values within rounding noise of an
/// integer onto it.
fn robust_floor(a: &ExtScalar) -> BigUint {
    let nearest = (a + &ExtScalar::from_f64(0.5)).floor_biguint();
    let near = ExtScalar::from_biguint(&nearest);
    let slack =
        ExtScalar::pow2(20 - working_precision() as i64) * &a.abs().max_of(ExtScalar::one());
    if (a - &near).abs() <= slack {
        nearest
    } else {
        a.floor_biguint()
    }
}

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `2^x` for a real exponent.
pub(crate) fn exp2(x: &ExtScalar) -> ExtScalar {
    ExtScalar::from_u64(2).powf(x)
}

/// Preset parameters for a given `p0` and truncation level `N`.
pub fn derive_sequences(p0: f64, nmax: u32) -> Result<GenParams> {
    check_p0(p0)?;
    if nmax == 0 || nmax > MAX_LEVEL {
        return Err(Error::InvalidParams(format!(
            "N must lie in 1..={MAX_LEVEL}, got {nmax}"
        )));
    }
    let pe = ExtScalar::from_f64(p0);
    let pm1 = &pe - &ExtScalar::one();
    let fl = p0.floor() as u64;

    let mut a = Vec::new();
    let mut floor_a = Vec::new();
    for i in 1..=nmax as u64 {
        let ai = if i == 1 {
            ExtScalar::one()
        } else {
            ExtScalar::from_u64(i).powf(&pe) - ExtScalar::from_u64(i - 1).powf(&pe)
        };
        let fa = robust_floor(&ai)
            .to_u64()
            .ok_or_else(|| Error::Overflow(format!("floor(a_{i})")))?;
        a.push(ai);
        floor_a.push(fa);
    }

    let mut tau = Vec::new();
    let mut f = Vec::new();
    let mut m = Vec::new();
    let mut g = Vec::new();
    for n in 1..=nmax {
        let fact = factorial(n);
        let scale = BigUint::one() << (2 * n as u64 * fl) as usize;
        let mut row = Vec::new();
        for i in 1..=n {
            let t = BigUint::from(floor_a[(i - 1) as usize]) * &scale * (&fact / i);
            let t = t
                .to_u128()
                .ok_or_else(|| Error::Overflow(format!("tau[{n},{i}]")))?;
            row.push(t);
        }
        let fr: Vec<ExtScalar> = (1..=n)
            .map(|i| exp2(&(ExtScalar::from_i64(i as i64 - n as i64) / &pm1)))
            .collect();
        let e = ExtScalar::from_u64(2 * n as u64 * fl - n as u64) / &pm1;
        let mn = exp2(&e) * ExtScalar::from_biguint(&fact).powf(&pm1.recip());
        let tau_sum: u128 = row.iter().sum();
        let gn = exp2(&(ExtScalar::from_i64(1 - n as i64) / &pm1)) / ExtScalar::from_u128(tau_sum);
        tau.push(row);
        f.push(fr);
        m.push(mn);
        g.push(gn);
    }
    let mut params = GenParams {
        p0,
        nmax,
        tau,
        f,
        m,
        g,
        a,
        floor_a,
        d_first: Vec::new(),
        d_second: Vec::new(),
        preset: true,
    };
    params.d_first = normalization_weights(&params, Generation::First)?;
    params.d_second = normalization_weights(&params, Generation::Second)?;
    Ok(params)
}

/// Level mass with `d_n` factored out.
pub fn level_weight(params: &GenParams, n: u32, generation: Generation) -> Result<ExtScalar> {
    let mut terms = Vec::new();
    for i in 1..=n {
        terms.push(ExtScalar::pow2(i as i64 - 1) * params.f(n, i));
        terms.push(params.m(n) * &ExtScalar::from_u128(params.tau(n, i) * i as u128));
    }
    if generation == Generation::Second {
        let g = params
            .g(n)
            .ok_or_else(|| Error::InvalidParams("second generation needs G".into()))?;
        for i in 1..=n {
            terms.push(g * &ExtScalar::from_u128(params.tau(n, i)));
        }
    }
    Ok(ExtScalar::sum(terms.iter()))
}

/// `d_1 = 1`, `d_n = d_{n-1} W_{n-1} / (2 W_n)`.
pub fn normalization_weights(params: &GenParams, generation: Generation) -> Result<Vec<ExtScalar>> {
    let mut d = vec![ExtScalar::one()];
    let mut prev = level_weight(params, 1, generation)?;
    for n in 2..=params.nmax {
        let w = level_weight(params, n, generation)?;
        let dn = &d[(n - 2) as usize] * &prev / (ExtScalar::from_u64(2) * &w);
        if !dn.is_positive() || !dn.is_finite() {
            return Err(Error::Overflow(format!("d_{n}")));
        }
        d.push(dn);
        prev = w;
    }
    Ok(d)
}

/// A violated parameter constraint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    TauNotDivisible { n: u32, i: u32 },
    MTooSmall { n: u32 },
    FOutOfRange { n: u32, i: u32 },
    GOutOfRange { n: u32 },
    P0OutOfRange,
    HalvingBroken { n: u32, generation: Generation },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TauNotDivisible { n, i } => {
                write!(f, "tau[{n},{i}]/2^{} is not a positive integer", i - 1)
            }
            Violation::MTooSmall { n } => write!(f, "m_{n} < 2^{n}"),
            Violation::FOutOfRange { n, i } => write!(f, "F({n},{i}) outside (0, 1]"),
            Violation::GOutOfRange { n } => write!(f, "G({n}) outside (0, 1/sum_i tau[{n},i]]"),
            Violation::P0OutOfRange => write!(f, "p0 outside (1, inf)"),
            Violation::HalvingBroken { n, generation } => {
                write!(
                    f,
                    "level {n} of the {generation} generation is not half of level {}",
                    n - 1
                )
            }
        }
    }
}

/// Every violated constraint; empty means valid.
pub fn validate_params(params: &GenParams) -> Vec<Violation> {
    let mut out = Vec::new();
    if params.preset && check_p0(params.p0).is_err() {
        out.push(Violation::P0OutOfRange);
    }
    let one = ExtScalar::one();
    for n in 1..=params.nmax {
        for i in 1..=n {
            let t = params.tau(n, i);
            let block = 1u128 << (i - 1);
            if t == 0 || !t.is_multiple_of(block) {
                out.push(Violation::TauNotDivisible { n, i });
            }
            let fv = params.f(n, i);
            if !fv.is_positive() || *fv > one {
                out.push(Violation::FOutOfRange { n, i });
            }
        }
        if *params.m(n) < ExtScalar::pow2(n as i64) {
            out.push(Violation::MTooSmall { n });
        }
        if let Some(g) = params.g(n) {
            let tau_sum: u128 = params.tau[(n - 1) as usize].iter().sum();
            let cap = ExtScalar::from_u128(tau_sum).recip();
            if !g.is_positive() || !g.le_rel(&cap, 1e-25) {
                out.push(Violation::GOutOfRange { n });
            }
        }
    }
    let mut gens = vec![Generation::First];
    if params.has_second() {
        gens.push(Generation::Second);
    }
    for generation in gens {
        let d = match generation {
            Generation::First => &params.d_first,
            Generation::Second => &params.d_second,
        };
        if d.len() != params.nmax as usize {
            continue;
        }
        for n in 2..=params.nmax {
            let (Ok(w), Ok(wp)) = (
                level_weight(params, n, generation),
                level_weight(params, n - 1, generation),
            ) else {
                continue;
            };
            let cur = &d[(n - 1) as usize] * &w * ExtScalar::from_u64(2);
            let prev = &d[(n - 2) as usize] * &wp;
            if !cur.approx_eq_rel(&prev, 1e-20) {
                out.push(Violation::HalvingBroken { n, generation });
            }
        }
    }
    out
}
