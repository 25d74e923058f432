//! JSON descriptions of parameters and spaces.

use serde_json::{json, Value};

use super::{level_mass, GenParams};
use crate::space::{PartKind, Space};

pub fn describe_params(params: &GenParams) -> Value {
    let levels: Vec<Value> = (1..=params.nmax)
        .map(|n| {
            let mut row = json!({
                "n": n,
                "tau": params.tau[(n - 1) as usize].iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                "F": params.f[(n - 1) as usize],
                "m": params.m(n),
                "d_first": params.d_first.get((n - 1) as usize),
            });
            if let Some(g) = params.g(n) {
                row["G"] = json!(g);
                row["d_second"] = json!(params.d_second.get((n - 1) as usize));
            }
            if params.preset {
                row["a"] = json!(params.a[(n - 1) as usize]);
                row["floor_a"] = json!(params.floor_a[(n - 1) as usize]);
            }
            row
        })
        .collect();
    json!({
        "p0": params.p0,
        "nmax": params.nmax,
        "preset": params.preset,
        "levels": levels,
    })
}

pub fn describe_space(space: &Space, dump_points: bool) -> Value {
    let parts: Vec<Value> = space
        .parts()
        .iter()
        .enumerate()
        .map(|(idx, info)| {
            let kind = match info.kind {
                PartKind::FirstGen => "first",
                PartKind::SecondGen => "second",
                PartKind::Opaque => "opaque",
            };
            let idx = idx as u16;
            let stored = space.part_points(idx).count();
            let represented: u128 = space.part_points(idx).map(|p| space.multiplicity(p)).sum();
            let levels: Vec<Value> = (1..=info.tau.len() as u32)
                .map(|n| json!({ "n": n, "mass": level_mass(space, idx, n) }))
                .collect();
            json!({
                "kind": kind,
                "stored_points": stored,
                "points": represented.to_string(),
                "refined": info.refined,
                "levels": levels,
            })
        })
        .collect();
    let mut v = json!({
        "mode": space.mode(),
        "stored_points": space.len(),
        "points": space.point_count().to_string(),
        "unit_distance_pairs": space.edge_count(),
        "total_mass": space.total_mass(),
        "parts": parts,
    });
    if dump_points {
        let pts: Vec<Value> = space
            .ids()
            .map(|p| {
                json!({
                    "id": p,
                    "part": space.part_of(p),
                    "label": space.label(p).to_string(),
                    "multiplicity": space.multiplicity(p).to_string(),
                    "mass": space.mass(p),
                })
            })
            .collect();
        v["point_list"] = Value::Array(pts);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{build_first_gen, derive_sequences};
    use crate::space::Mode;

    #[test]
    fn describes_levels() {
        let p = derive_sequences(2.0, 2).unwrap();
        let v = describe_params(&p);
        assert_eq!(v["levels"][1]["tau"][1], "768");
        assert_eq!(v["levels"][0]["m"]["dec"], "8");
        let s = build_first_gen(&p, Mode::Quotient).unwrap();
        let d = describe_space(&s, false);
        assert_eq!(d["points"], "1300");
        assert_eq!(d["parts"][0]["levels"][0]["mass"]["dec"], "129");
        assert!(d.get("point_list").is_none());
        assert_eq!(
            describe_space(&s, true)["point_list"]
                .as_array()
                .unwrap()
                .len(),
            8
        );
    }
}
