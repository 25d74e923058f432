//! Centered and non-centered maximal operators, evaluated exactly.
//!
//! With distances in {0, 1, 2} every ball about a center is one of the open
//! balls of radius 1, 1.5 or 2.5. The distinct balls of a space are collected
//! once per space and cached; an operator evaluation then costs one average
//! per distinct ball.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::WeightedFunction;
use crate::norms::{integral, lp_norm_pow, measure, weak_quasinorm_pow};
use crate::scalar::ExtScalar;
use crate::space::{ball, PointId, PointSet, Space, REPRESENTATIVE_RADII};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Centered,
    #[serde(rename = "noncentered")]
    NonCentered,
}

impl std::str::FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centered" => Ok(Operator::Centered),
            "noncentered" => Ok(Operator::NonCentered),
            other => Err(Error::Usage(format!("unknown operator {other:?}"))),
        }
    }
}

impl std::fmt::Display for Operator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Operator::Centered => "centered",
            Operator::NonCentered => "noncentered",
        })
    }
}

/// Which balls an evaluation may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    /// Every ball.
    All,
    /// Balls of radius at most 2 only.
    Local,
}

#[derive(Debug)]
pub struct Ball {
    pub set: PointSet,
    pub measure: ExtScalar,
    /// Realized with some radius at most 2.
    pub local: bool,
}

/// The distinct balls of a space.
#[derive(Debug)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
    /// Ball index for each center and representative radius.
    pub centered: Vec<[u32; 3]>,
    /// Indices of listed (non-whole) balls containing each point.
    pub containing: Vec<Vec<u32>>,
    pub whole: Option<u32>,
}

impl BallFamily {
    pub fn build(space: &Space) -> BallFamily {
        let mut index: HashMap<PointSet, u32> = HashMap::new();
        let mut sets: Vec<(PointSet, bool)> = Vec::new();
        let mut centered = Vec::with_capacity(space.len());
        for c in space.ids() {
            let mut row = [0u32; 3];
            for (slot, &r) in REPRESENTATIVE_RADII.iter().enumerate() {
                let set = ball(space, c, r).expect("valid center and radius");
                let local = r <= 2.0;
                let id = *index.entry(set.clone()).or_insert_with(|| {
                    sets.push((set, false));
                    (sets.len() - 1) as u32
                });
                sets[id as usize].1 |= local;
                row[slot] = id;
            }
            centered.push(row);
        }
        let mut containing = vec![Vec::new(); space.len()];
        let mut whole = None;
        for (bid, (set, _)) in sets.iter().enumerate() {
            match set {
                PointSet::Whole => whole = Some(bid as u32),
                PointSet::Listed(v) => {
                    for &(p, _) in v {
                        containing[p as usize].push(bid as u32);
                    }
                }
            }
        }
        let balls = sets
            .into_par_iter()
            .map(|(set, local)| {
                let measure = measure(space, &set);
                Ball {
                    set,
                    measure,
                    local,
                }
            })
            .collect();
        BallFamily {
            balls,
            centered,
            containing,
            whole,
        }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}

/// Average of `f` over every distinct ball, in family order.
pub fn ball_averages(space: &Space, f: &WeightedFunction) -> Vec<ExtScalar> {
    let fam = space.ball_family();
    fam.balls
        .par_iter()
        .map(|b| integral(space, f, &b.set) / &b.measure)
        .collect()
}

fn evaluate(
    space: &Space,
    f: &WeightedFunction,
    op: Operator,
    scope: Scope,
) -> Result<WeightedFunction> {
    if f.len() != space.len() {
        return Err(Error::InvalidStructure(
            "function belongs to another space".into(),
        ));
    }
    let fam = space.ball_family();
    let avg = ball_averages(space, f);
    let allowed = |b: u32| scope == Scope::All || fam.balls[b as usize].local;
    let values: Vec<ExtScalar> = space
        .ids()
        .into_par_iter()
        .map(|x| {
            let mut best = ExtScalar::zero();
            let mut consider = |b: u32| {
                if allowed(b) && avg[b as usize] > best {
                    best = avg[b as usize].clone();
                }
            };
            match op {
                Operator::Centered => {
                    for (slot, &b) in fam.centered[x as usize].iter().enumerate() {
                        if scope == Scope::All || REPRESENTATIVE_RADII[slot] <= 2.0 {
                            consider(b);
                        }
                    }
                }
                Operator::NonCentered => {
                    for &b in &fam.containing[x as usize] {
                        consider(b);
                    }
                    if let Some(w) = fam.whole {
                        consider(w);
                    }
                }
            }
            best
        })
        .collect();
    WeightedFunction::from_values(space, values)
}

/// `M^c f(x) = sup_r A_{B(x,r)} f`.
pub fn maximal_centered(space: &Space, f: &WeightedFunction) -> Result<WeightedFunction> {
    evaluate(space, f, Operator::Centered, Scope::All)
}

/// `M f(x) = sup_{B containing x} A_B f`.
pub fn maximal_noncentered(space: &Space, f: &WeightedFunction) -> Result<WeightedFunction> {
    evaluate(space, f, Operator::NonCentered, Scope::All)
}

pub fn maximal(space: &Space, f: &WeightedFunction, op: Operator) -> Result<WeightedFunction> {
    evaluate(space, f, op, Scope::All)
}

/// The operator restricted to balls of radius at most 2.
pub fn maximal_local(
    space: &Space,
    f: &WeightedFunction,
    op: Operator,
) -> Result<WeightedFunction> {
    evaluate(space, f, op, Scope::Local)
}

/// `||Op f||_{p,inf}^p / ||f||_p^p`.
pub fn weak_ratio(space: &Space, f: &WeightedFunction, p: f64, op: Operator) -> Result<ExtScalar> {
    if f.is_zero() {
        return Err(Error::ZeroFunction);
    }
    let norm = lp_norm_pow(space, f, p)?;
    let g = maximal(space, f, op)?;
    Ok(weak_quasinorm_pow(space, &g, p)? / norm)
}

/// `sup_l l^p mu(E_l(Op chi_E)) / ||chi_E||_p^p`.
pub fn rwt_functional(space: &Space, set: &PointSet, p: f64, op: Operator) -> Result<ExtScalar> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let f = WeightedFunction::indicator(space, set)?;
    weak_ratio(space, &f, p, op)
}

/// `||Op f||_1`, used by the strong (1,1) check.
pub fn l1_of_maximal(space: &Space, f: &WeightedFunction, op: Operator) -> Result<ExtScalar> {
    let g = maximal(space, f, op)?;
    lp_norm_pow(space, &g, 1.0)
}

/// Point ids at which `a` and `b` differ by more than `tol` relatively.
pub fn mismatches(a: &WeightedFunction, b: &WeightedFunction, tol: f64) -> Vec<PointId> {
    a.values()
        .iter()
        .zip(b.values())
        .enumerate()
        .filter(|(_, (x, y))| !x.approx_eq_rel(y, tol))
        .map(|(i, _)| i as PointId)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: u64, b: u64) -> ExtScalar {
        ExtScalar::from_u64(a) / ExtScalar::from_u64(b)
    }

    /// Center of mass 1 joined to 16 leaves of mass 8.
    #[allow(clippy::needless_range_loop)]
    fn star17() -> Space {
        let n = 17;
        let mut d = vec![vec![2u8; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for leaf in 1..n {
            d[0][leaf] = 1;
            d[leaf][0] = 1;
        }
        let mut m = vec![ExtScalar::one()];
        m.extend((1..n).map(|_| ExtScalar::from_u64(8)));
        Space::from_distance_matrix(&m, &d).unwrap()
    }

    #[test]
    fn dirac_at_center() {
        let s = star17();
        let f = WeightedFunction::dirac(&s, 0).unwrap();
        let mc = maximal_centered(&s, &f).unwrap();
        assert_eq!(mc.value(0), &ExtScalar::one());
        for leaf in 1..17 {
            assert_eq!(mc.value(leaf), &q(1, 9));
        }
        let r = weak_ratio(&s, &f, 2.0, Operator::Centered).unwrap();
        assert!(r.approx_eq_rel(&q(129, 81), 1e-30));
    }

    #[test]
    fn dirac_at_leaf() {
        let s = star17();
        let f = WeightedFunction::dirac(&s, 1).unwrap();
        let mc = maximal_centered(&s, &f).unwrap();
        assert_eq!(mc.value(0), &q(8, 129));
        let m = maximal_noncentered(&s, &f).unwrap();
        assert_eq!(m.value(0), &q(8, 9));
        assert_eq!(m.value(1), &ExtScalar::one());
        assert_eq!(m.value(2), &q(8, 129));
    }

    #[test]
    fn constants_are_fixed() {
        let s = star17();
        let c = q(3, 7);
        let f = WeightedFunction::constant(&s, c.clone()).unwrap();
        for op in [Operator::Centered, Operator::NonCentered] {
            let g = maximal(&s, &f, op).unwrap();
            assert!(g.values().iter().all(|v| v.approx_eq_rel(&c, 1e-30)));
            assert!(weak_ratio(&s, &f, 2.0, op)
                .unwrap()
                .approx_eq_rel(&ExtScalar::one(), 1e-30));
        }
        assert!(matches!(
            weak_ratio(&s, &WeightedFunction::zeros(&s), 2.0, Operator::Centered),
            Err(Error::ZeroFunction)
        ));
    }

    #[test]
    fn rwt_of_leaves() {
        let s = star17();
        let leaves = PointSet::of_points(&s, 1..17).unwrap();
        let v = rwt_functional(&s, &leaves, 2.0, Operator::NonCentered).unwrap();
        assert!(v.approx_eq_rel(&ExtScalar::one(), 1e-30));
        assert!(matches!(
            rwt_functional(&s, &PointSet::Listed(vec![]), 2.0, Operator::NonCentered),
            Err(Error::EmptySet)
        ));
    }

    #[test]
    fn family_is_deduplicated() {
        let s = star17();
        let fam = s.ball_family();
        // 17 singletons, 16 leaf stars, one whole space
        assert_eq!(fam.len(), 34);
        assert!(fam.balls[fam.whole.unwrap() as usize].local);
    }
}
