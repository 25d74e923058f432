//! Measures, averages, weighted `l^p` norms and weak `L^{p,inf}` quasi-norms.

use crate::error::{Error, Result};
use crate::function::WeightedFunction;
use crate::scalar::ExtScalar;
use crate::space::{PointSet, Space};

fn check_p(p: f64) -> Result<ExtScalar> {
    if p.is_nan() || p < 1.0 || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(ExtScalar::from_f64(p))
}

/// `mu(E)`.
pub fn measure(space: &Space, set: &PointSet) -> ExtScalar {
    match set {
        PointSet::Whole => space.total_mass().clone(),
        PointSet::Listed(v) => {
            let w: Vec<ExtScalar> = v.iter().map(|&(id, c)| space.weight_of(id, c)).collect();
            ExtScalar::sum(w.iter())
        }
    }
}

/// `sum_{y in E} f(y) |{y}|`.
pub fn integral(space: &Space, f: &WeightedFunction, set: &PointSet) -> ExtScalar {
    let terms: Vec<ExtScalar> = set
        .entries(space)
        .filter(|&(id, _)| !f.value(id).is_zero())
        .map(|(id, c)| f.value(id) * &space.weight_of(id, c))
        .collect();
    ExtScalar::sum(terms.iter())
}

/// Average of `f` over a nonempty set.
pub fn average(space: &Space, f: &WeightedFunction, set: &PointSet) -> Result<ExtScalar> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(integral(space, f, set) / measure(space, set))
}

/// `||f||_p^p = sum_x f(x)^p |{x}|`.
pub fn lp_norm_pow(space: &Space, f: &WeightedFunction, p: f64) -> Result<ExtScalar> {
    let pe = check_p(p)?;
    let terms: Vec<ExtScalar> = space
        .ids()
        .filter(|&id| !f.value(id).is_zero())
        .map(|id| f.value(id).powf(&pe) * space.weight(id))
        .collect();
    Ok(ExtScalar::sum(terms.iter()))
}

pub fn lp_norm(space: &Space, f: &WeightedFunction, p: f64) -> Result<ExtScalar> {
    let pp = lp_norm_pow(space, f, p)?;
    Ok(pp.powf(&ExtScalar::from_f64(p).recip()))
}

/// `||g||_{p,inf}^p = max_v v^p mu({g >= v})` over the distinct values `v`
/// of `g`.
pub fn weak_quasinorm_pow(space: &Space, g: &WeightedFunction, p: f64) -> Result<ExtScalar> {
    let pe = check_p(p)?;
    let mut order: Vec<u32> = space.ids().filter(|&id| !g.value(id).is_zero()).collect();
    order.sort_by(|&a, &b| g.value(b).cmp(g.value(a)).then(a.cmp(&b)));
    let mut best = ExtScalar::zero();
    let mut acc: Option<ExtScalar> = None;
    let mut prec = 0;
    for (pos, &id) in order.iter().enumerate() {
        let w = space.weight(id);
        prec = prec.max(w.precision());
        acc = Some(match acc {
            None => w.clone(),
            Some(a) => a.add_exact(w),
        });
        let v = g.value(id);
        let group_ends = order.get(pos + 1).is_none_or(|&next| g.value(next) != v);
        if group_ends {
            let mass_ge = acc.as_ref().expect("accumulated").rounded(prec);
            let cand = v.powf(&pe) * &mass_ge;
            if cand > best {
                best = cand;
            }
        }
    }
    Ok(best)
}

pub fn weak_quasinorm(space: &Space, g: &WeightedFunction, p: f64) -> Result<ExtScalar> {
    let pp = weak_quasinorm_pow(space, g, p)?;
    Ok(pp.powf(&ExtScalar::from_f64(p).recip()))
}
