//! Brute-force reference implementations used by the integration tests.
//!
//! Points, distances and balls are rebuilt here from the labels alone; only
//! the scalar type and the parameter tables are shared with the library.

#![allow(dead_code)]

use maxtype_core::generators::{GenParams, Generation};
use maxtype_core::{ExtScalar, PointLabel};

pub struct Oracle {
    pub labels: Vec<PointLabel>,
    pub mass: Vec<ExtScalar>,
    pub dist: Vec<Vec<u8>>,
}

fn block_of(tau: u128, i: u32, k: u128) -> u64 {
    // blocks of level i split tau leaves into 2^{i-1} runs
    let size = tau / (1u128 << (i - 1));
    ((k - 1) / size + 1) as u64
}

fn x_dist(p: &GenParams, a: &PointLabel, b: &PointLabel) -> u8 {
    use PointLabel::*;
    if a == b {
        return 0;
    }
    match (a, b) {
        (XBranch { n, i, j }, XLeaf { n: m, i: ii, k })
        | (XLeaf { n: m, i: ii, k }, XBranch { n, i, j })
            if n == m && ii >= i && block_of(p.tau(*n, *ii), *i, *k) == *j =>
        {
            1
        }
        _ => 2,
    }
}

fn y_dist(p: &GenParams, a: &PointLabel, b: &PointLabel) -> u8 {
    use PointLabel::*;
    if a == b {
        return 0;
    }
    match (a, b) {
        (YBranch { n, .. }, YBranch { n: m, .. }) if n == m => 1,
        (YBranch { n, i, j }, YMid { n: m, i: ii, k })
        | (YMid { n: m, i: ii, k }, YBranch { n, i, j })
            if n == m && ii >= i && block_of(p.tau(*n, *ii), *i, *k) == *j =>
        {
            1
        }
        (YMid { n, i, k }, YLeaf { n: m, i: ii, k: kk })
        | (YLeaf { n: m, i: ii, k: kk }, YMid { n, i, k })
            if n == m && i == ii && k == kk =>
        {
            1
        }
        _ => 2,
    }
}

impl Oracle {
    /// Every point of the generated space, listed level by level.
    pub fn generated(p: &GenParams, generation: Generation) -> Oracle {
        let mut labels = Vec::new();
        let mut mass = Vec::new();
        for n in 1..=p.nmax {
            let d = p.d(n, generation).clone();
            for i in 1..=n {
                for j in 1..=1u64 << (i - 1) {
                    labels.push(match generation {
                        Generation::First => PointLabel::XBranch { n, i, j },
                        Generation::Second => PointLabel::YBranch { n, i, j },
                    });
                    mass.push(&d * p.f(n, i));
                }
            }
            for i in 1..=n {
                for k in 1..=p.tau(n, i) {
                    let leaf = &d * p.m(n) * ExtScalar::from_u64(i as u64);
                    match generation {
                        Generation::First => {
                            labels.push(PointLabel::XLeaf { n, i, k });
                            mass.push(leaf);
                        }
                        Generation::Second => {
                            labels.push(PointLabel::YMid { n, i, k });
                            mass.push(&d * p.g(n).expect("second-generation weight"));
                            labels.push(PointLabel::YLeaf { n, i, k });
                            mass.push(leaf);
                        }
                    }
                }
            }
        }
        let dist = labels
            .iter()
            .map(|a| {
                labels
                    .iter()
                    .map(|b| match generation {
                        Generation::First => x_dist(p, a, b),
                        Generation::Second => y_dist(p, a, b),
                    })
                    .collect()
            })
            .collect();
        Oracle { labels, mass, dist }
    }

    /// Disjoint union at distance 2.
    pub fn glued(a: &Oracle, b: &Oracle) -> Oracle {
        let na = a.labels.len();
        let n = na + b.labels.len();
        let mut dist = vec![vec![2u8; n]; n];
        for (x, row) in dist.iter_mut().enumerate() {
            for (y, d) in row.iter_mut().enumerate() {
                if x < na && y < na {
                    *d = a.dist[x][y];
                } else if x >= na && y >= na {
                    *d = b.dist[x - na][y - na];
                }
            }
        }
        Oracle {
            labels: a.labels.iter().chain(&b.labels).copied().collect(),
            mass: a.mass.iter().chain(&b.mass).cloned().collect(),
            dist,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Open ball `{q : d(c,q) < r}`.
    pub fn ball(&self, c: usize, r: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&q| (self.dist[c][q] as f64) < r)
            .collect()
    }

    /// Every ball as (center, point list), radii chosen in each distance
    /// gap.
    pub fn balls(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out = Vec::new();
        for c in 0..self.len() {
            for r in [0.5, 1.75, 3.0] {
                out.push((c, self.ball(c, r)));
            }
        }
        out
    }

    pub fn mass_of(&self, pts: &[usize]) -> ExtScalar {
        let v: Vec<&ExtScalar> = pts.iter().map(|&q| &self.mass[q]).collect();
        ExtScalar::sum(v)
    }

    pub fn average(&self, f: &[ExtScalar], pts: &[usize]) -> ExtScalar {
        let terms: Vec<ExtScalar> = pts
            .iter()
            .filter(|&&q| !f[q].is_zero())
            .map(|&q| &f[q] * &self.mass[q])
            .collect();
        ExtScalar::sum(terms.iter()) / self.mass_of(pts)
    }

    /// Centered (`centered = true`) or non-centered maximal function.
    pub fn maximal(&self, f: &[ExtScalar], centered: bool) -> Vec<ExtScalar> {
        let balls = self.balls();
        let avgs: Vec<ExtScalar> = balls.iter().map(|(_, b)| self.average(f, b)).collect();
        (0..self.len())
            .map(|x| {
                let mut best = ExtScalar::zero();
                for ((c, b), a) in balls.iter().zip(&avgs) {
                    let usable = if centered { *c == x } else { b.contains(&x) };
                    if usable && *a > best {
                        best = a.clone();
                    }
                }
                best
            })
            .collect()
    }

    /// `max_v v^p mu({g >= v})`.
    pub fn weak_pow(&self, g: &[ExtScalar], p: f64) -> ExtScalar {
        let pe = ExtScalar::from_f64(p);
        let mut best = ExtScalar::zero();
        for v in g.iter().filter(|v| !v.is_zero()) {
            let above: Vec<usize> = (0..self.len()).filter(|&q| g[q] >= *v).collect();
            let cand = v.powf(&pe) * self.mass_of(&above);
            if cand > best {
                best = cand;
            }
        }
        best
    }

    /// `||M chi_E||_{p,inf}^p / mu(E)`.
    pub fn rwt(&self, set: &[usize], p: f64, centered: bool) -> ExtScalar {
        let mut f = vec![ExtScalar::zero(); self.len()];
        for &q in set {
            f[q] = ExtScalar::one();
        }
        self.weak_pow(&self.maximal(&f, centered), p) / self.mass_of(set)
    }

    /// Exhaustive maximum of [`Oracle::rwt`] over nonempty subsets.
    pub fn rwt_exhaustive(&self, p: f64, centered: bool) -> ExtScalar {
        let n = self.len();
        assert!(n <= 22);
        // distinct balls as bit masks, with the points each may serve
        let mut uniq: Vec<(u64, u64)> = Vec::new();
        for (c, b) in self.balls() {
            let bits = b.iter().fold(0u64, |m, &q| m | 1 << q);
            let serves = if centered { 1u64 << c } else { bits };
            match uniq.iter_mut().find(|(m, _)| *m == bits) {
                Some(e) => e.1 |= serves,
                None => uniq.push((bits, serves)),
            }
        }
        let measures: Vec<ExtScalar> = uniq
            .iter()
            .map(|&(m, _)| self.mass_of(&bits_to(m, n)))
            .collect();
        let pe = ExtScalar::from_f64(p);
        let mut best = ExtScalar::zero();
        for set in 1u64..1 << n {
            let avgs: Vec<ExtScalar> = uniq
                .iter()
                .zip(&measures)
                .map(|(&(m, _), mu)| self.mass_of(&bits_to(m & set, n)) / mu)
                .collect();
            let g: Vec<ExtScalar> = (0..n)
                .map(|x| {
                    let mut v = ExtScalar::zero();
                    for ((_, serves), a) in uniq.iter().zip(&avgs) {
                        if serves >> x & 1 == 1 && *a > v {
                            v = a.clone();
                        }
                    }
                    v
                })
                .collect();
            let mut weak = ExtScalar::zero();
            for v in g.iter().filter(|v| !v.is_zero()) {
                let above: Vec<usize> = (0..n).filter(|&q| g[q] >= *v).collect();
                let cand = v.powf(&pe) * self.mass_of(&above);
                if cand > weak {
                    weak = cand;
                }
            }
            let r = weak / self.mass_of(&bits_to(set, n));
            if r > best {
                best = r;
            }
        }
        best
    }
}

fn bits_to(m: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&q| m >> q & 1 == 1).collect()
}
