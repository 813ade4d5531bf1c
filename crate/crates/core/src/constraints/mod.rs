//! The full derivation: conditional independences, one functional system
//! per district, V-to-H conversion of its columns, and flagging of rows that
//! some extreme point of the product of simplices violates.
//!
//! The all-ones normalization row is implicit: each column of `B` sums to one
//! within every block, so the hull of the columns already lies in the
//! normalized affine space.

mod evaluate;
mod render;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{ConditionsReport, HiddenDag, VarId};
use crate::independence::{enumerate_ci, CIStatement};
use crate::polyhedra::{self, HRep, InsertionOrder, Row, VRep};
use crate::response::{build_functional_system, FunctionalSystem, DEFAULT_COLUMN_LIMIT};
use crate::transform::{merge_district_latents, RewriteLog};

pub use evaluate::{evaluate, CheckStatus, ConstraintCheck, ViolationReport};
pub use render::{render, RenderMode};

pub const CAVEAT: &str = "flagged constraints are potentially nontrivial: some extreme point of the \
product of probability simplices violates them, but a flagged constraint may still be implied by \
the probability axioms once star probabilities are written in observables";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
        }
    }
}

/// `sum coeff * P*(row) (<= | =) rhs` over the rows of one district's system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub district: usize,
    /// Nonzero coefficients by row of the district's system, ascending.
    pub terms: Vec<(usize, BigInt)>,
    pub relation: Relation,
    pub rhs: BigInt,
    pub flagged: bool,
    /// Index of a violating extreme point (first block fastest).
    pub witness: Option<usize>,
}

impl Constraint {
    fn from_row(district: usize, row: &Row, relation: Relation, flag: Flag) -> Self {
        Constraint {
            district,
            terms: row
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (i, c.clone()))
                .collect(),
            relation,
            rhs: row.rhs.clone(),
            flagged: flag.flagged,
            witness: flag.witness,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Flag {
    pub flagged: bool,
    pub witness: Option<usize>,
}

/// Flags every row (inequalities first, then equalities) that some extreme
/// point of the product of simplices with the given block sizes violates.
pub fn flag_nontrivial(h: &HRep, block_sizes: &[usize]) -> Result<Vec<Flag>> {
    let n: usize = block_sizes.iter().sum();
    if n != h.dim {
        return Err(Error::DimensionMismatch {
            expected: h.dim,
            found: n,
        });
    }
    let pick = |row: &Row, want_max: bool| -> (BigInt, usize) {
        let mut total = BigInt::zero();
        let mut index = 0;
        let mut stride = 1;
        let mut offset = 0;
        for &s in block_sizes {
            let block = &row.coeffs[offset..offset + s];
            let mut best = 0;
            for (k, c) in block.iter().enumerate() {
                if (want_max && *c > block[best]) || (!want_max && *c < block[best]) {
                    best = k;
                }
            }
            total += &block[best];
            index += best * stride;
            stride *= s;
            offset += s;
        }
        (total, index)
    };
    let mut out = Vec::with_capacity(h.ineq.len() + h.eq.len());
    for r in &h.ineq {
        let (hi, w) = pick(r, true);
        out.push(if hi > r.rhs {
            Flag {
                flagged: true,
                witness: Some(w),
            }
        } else {
            Flag::default()
        });
    }
    for r in &h.eq {
        let (hi, wh) = pick(r, true);
        let (lo, wl) = pick(r, false);
        out.push(if hi != r.rhs {
            Flag {
                flagged: true,
                witness: Some(wh),
            }
        } else if lo != r.rhs {
            Flag {
                flagged: true,
                witness: Some(wl),
            }
        } else {
            Flag::default()
        });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct DeriveOptions {
    /// Merge the latents of districts with c-degree above one first; the
    /// result is then valid but possibly incomplete.
    pub merge: bool,
    pub max_ci_size: Option<usize>,
    pub column_limit: u128,
    pub insertion_order: InsertionOrder,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        DeriveOptions {
            merge: false,
            max_ci_size: None,
            column_limit: DEFAULT_COLUMN_LIMIT,
            insertion_order: InsertionOrder::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DistrictResult {
    pub members: Vec<VarId>,
    /// c-degree in the input graph.
    pub c_degree: usize,
    pub merged: bool,
    pub system: FunctionalSystem,
    pub hrep: HRep,
    pub constraints: Vec<Constraint>,
    pub elapsed: Duration,
}

impl DistrictResult {
    pub fn counts(&self) -> Counts {
        Counts::of(self.constraints.iter())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub total: usize,
    pub inequalities: usize,
    pub equalities: usize,
    pub flagged: usize,
    pub flagged_equalities: usize,
}

impl Counts {
    fn of<'a>(cs: impl Iterator<Item = &'a Constraint>) -> Self {
        let mut c = Counts::default();
        for k in cs {
            c.total += 1;
            match k.relation {
                Relation::Le => c.inequalities += 1,
                Relation::Eq => c.equalities += 1,
            }
            if k.flagged {
                c.flagged += 1;
                if k.relation == Relation::Eq {
                    c.flagged_equalities += 1;
                }
            }
        }
        c
    }

    pub fn summary(&self) -> String {
        format!(
            "{} constraints, {} inequalities, {} equalities, {} flagged",
            self.total, self.inequalities, self.equalities, self.flagged
        )
    }
}

#[derive(Clone, Debug)]
pub struct DerivationResult {
    /// The input graph.
    pub input: HiddenDag,
    /// The graph the districts were derived from (the input unless merged).
    pub graph: HiddenDag,
    pub conditions: ConditionsReport,
    pub merge_log: RewriteLog,
    /// Statements over `graph`'s variable ids.
    pub ci: Vec<CIStatement>,
    pub districts: Vec<DistrictResult>,
    pub merged: bool,
    pub elapsed: Duration,
}

impl DerivationResult {
    pub fn constraints(&self) -> impl Iterator<Item = &Constraint> {
        self.districts.iter().flat_map(|d| d.constraints.iter())
    }

    pub fn counts(&self) -> Counts {
        Counts::of(self.constraints())
    }

    /// True when every district had c-degree one, so the constraints
    /// together with the independences are complete.
    pub fn complete(&self) -> bool {
        !self.districts.iter().any(|d| d.merged)
    }

    pub fn render(&self, c: &Constraint, mode: RenderMode) -> String {
        render(&self.graph, &self.districts[c.district].system, c, mode)
    }

    /// The derivation document. Timings are included only on request so
    /// repeated runs produce identical bytes.
    pub fn to_json(&self, seed: Option<u64>, timings: bool) -> Value {
        let g = &self.graph;
        let names = |vs: &[VarId]| vs.iter().map(|&v| g.name(v)).collect::<Vec<_>>();
        let districts: Vec<Value> = self
            .districts
            .iter()
            .map(|d| {
                let cons: Vec<Value> = d
                    .constraints
                    .iter()
                    .map(|c| {
                        let terms: Vec<Value> = c
                            .terms
                            .iter()
                            .map(|(row, coeff)| {
                                let (a, b) = d.system.row_label(*row);
                                let obj = |vars: &[VarId], vals: &[usize]| {
                                    let mut m = serde_json::Map::new();
                                    for (v, x) in vars.iter().zip(vals) {
                                        m.insert(g.name(*v).to_string(), json!(x));
                                    }
                                    Value::Object(m)
                                };
                                json!({
                                    "w1": obj(&d.system.w1_order, &a),
                                    "w2": obj(&d.system.w2_order, &b),
                                    "coeff": coeff.to_string(),
                                })
                            })
                            .collect();
                        json!({
                            "terms": terms,
                            "relation": c.relation.symbol(),
                            "rhs": c.rhs.to_string(),
                            "flagged": c.flagged,
                            "witness": c.witness,
                            "text_star": self.render(c, RenderMode::Star),
                            "text_observable": self.render(c, RenderMode::Observable),
                        })
                    })
                    .collect();
                let mut v = json!({
                    "members": names(&d.members),
                    "c_degree": d.c_degree,
                    "merged": d.merged,
                    "counts": d.counts(),
                    "system": d.system.to_json(g),
                    "hrep": d.hrep.to_json(),
                    "constraints": cons,
                });
                if timings {
                    v["seconds"] = json!(d.elapsed.as_secs_f64());
                }
                v
            })
            .collect();
        let ci: Vec<Value> = self
            .ci
            .iter()
            .map(|s| {
                json!({
                    "lhs": names(&s.lhs),
                    "rhs": names(&s.rhs),
                    "given": names(&s.given),
                    "text": s.display(g),
                })
            })
            .collect();
        let mut meta = json!({
            "tool": "mera",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "merged": self.merged,
            "complete": self.complete(),
            "ci_policy": "minimal conditioning sets per pair, merged per conditioning set",
            "caveat": CAVEAT,
            "counts": self.counts(),
        });
        if self.merged {
            meta["note"] = json!("latents were merged per district: constraints are valid but possibly incomplete");
            meta["merge_log"] = serde_json::to_value(&self.merge_log).unwrap_or(Value::Null);
        }
        if timings {
            meta["timings"] = json!({ "total_seconds": self.elapsed.as_secs_f64() });
        }
        json!({
            "graph": {
                "text": self.input.to_text(),
                "fingerprint": self.input.fingerprint(),
            },
            "conditions_report": serde_json::to_value(&self.conditions).unwrap_or(Value::Null),
            "ci": ci,
            "districts": districts,
            "meta": meta,
        })
    }
}

/// Runs the whole derivation on a graph satisfying both structural
/// conditions.
pub fn derive_all(dag: &HiddenDag, options: &DeriveOptions) -> Result<DerivationResult> {
    let start = Instant::now();
    let conditions = dag.validate_conditions();
    if !conditions.is_ok() {
        return Err(Error::Conditions(conditions.summary()));
    }
    let original = dag.districts();
    let (graph, merge_log) = if options.merge {
        merge_district_latents(dag)?
    } else {
        if let Some(d) = original.iter().find(|d| d.c_degree() > 1) {
            return Err(Error::CDegree {
                district: dag.fmt_set(&d.members),
                c_degree: d.c_degree(),
            });
        }
        (dag.clone(), RewriteLog::default())
    };
    let remap = |v: VarId| graph.id(dag.name(v)).expect("observed variables survive merging");
    let ci: Vec<CIStatement> = enumerate_ci(dag, options.max_ci_size)
        .into_iter()
        .map(|s| {
            CIStatement::new(
                s.lhs.iter().map(|&v| remap(v)),
                s.rhs.iter().map(|&v| remap(v)),
                s.given.iter().map(|&v| remap(v)),
            )
        })
        .collect();

    let districts = graph.districts();
    let mut results: Vec<DistrictResult> = districts
        .par_iter()
        .enumerate()
        .map(|(k, d)| -> Result<DistrictResult> {
            let t = Instant::now();
            let before = original
                .iter()
                .find(|o| o.members.iter().map(|&v| remap(v)).eq(d.members.iter().copied()))
                .map_or(1, |o| o.c_degree());
            let system = build_functional_system(&graph, d, options.column_limit)?;
            let points: Vec<Vec<i64>> = system
                .columns()
                .into_iter()
                .map(|c| c.into_iter().map(i64::from).collect())
                .collect();
            let hrep = polyhedra::v_to_h_with(&VRep::from_integers(&points)?, options.insertion_order)?;
            let flags = flag_nontrivial(&hrep, &system.block_sizes())?;
            let constraints = hrep
                .ineq
                .iter()
                .map(|r| (r, Relation::Le))
                .chain(hrep.eq.iter().map(|r| (r, Relation::Eq)))
                .zip(flags)
                .map(|((r, rel), f)| Constraint::from_row(k, r, rel, f))
                .collect();
            Ok(DistrictResult {
                members: d.members.clone(),
                c_degree: before,
                merged: options.merge && before > 1,
                system,
                hrep,
                constraints,
                elapsed: t.elapsed(),
            })
        })
        .collect::<Result<_>>()?;

    let mut seen = BTreeSet::new();
    for d in &mut results {
        let sys = d.system.clone();
        d.constraints
            .retain(|c| seen.insert(render(&graph, &sys, c, RenderMode::Star)));
    }
    Ok(DerivationResult {
        input: dag.clone(),
        graph,
        conditions,
        merge_log,
        ci,
        districts: results,
        merged: options.merge,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn g(text: &str) -> HiddenDag {
        HiddenDag::parse(text).unwrap()
    }

    #[test]
    fn iv_counts_and_flags() {
        let r = derive_all(&g(fixtures::IV), &DeriveOptions::default()).unwrap();
        assert_eq!(r.districts.len(), 2);
        let xy = &r.districts[1];
        assert_eq!(
            xy.counts(),
            Counts {
                total: 14,
                inequalities: 12,
                equalities: 2,
                flagged: 4,
                flagged_equalities: 0
            }
        );
        assert_eq!(r.districts[0].counts().flagged, 0);
        assert!(r.complete());
    }

    #[test]
    fn axioms_are_never_flagged() {
        let mut ineq = Vec::new();
        for i in 0..4 {
            let mut c = [0i64; 4];
            c[i] = -1;
            ineq.push(Row::from_i64(&c, 0));
        }
        let h = HRep::new(4, ineq, vec![Row::from_i64(&[-1, -1, 0, 0], -1), Row::from_i64(&[0, 0, -1, -1], -1)])
            .unwrap();
        let flags = flag_nontrivial(&h, &[2, 2]).unwrap();
        assert!(flags.iter().all(|f| !f.flagged));
        assert!(flag_nontrivial(&h, &[3]).is_err());
    }

    #[test]
    fn witnesses_violate() {
        let h = HRep::new(4, vec![Row::from_i64(&[0, 1, 1, 0], 1)], vec![]).unwrap();
        let flags = flag_nontrivial(&h, &[2, 2]).unwrap();
        assert_eq!(flags[0], Flag { flagged: true, witness: Some(1 + 2 * 0) });
        let pts = polyhedra::simplex_product_extreme_points(&[2, 2]);
        let w = &pts[flags[0].witness.unwrap()];
        assert!(h.ineq[0].lhs(w) > crate::rational::int(1));
    }

    #[test]
    fn c_degree_requires_merge() {
        let tri = g(fixtures::TRIANGLE);
        assert!(matches!(
            derive_all(&tri, &DeriveOptions::default()),
            Err(Error::CDegree { c_degree: 3, .. })
        ));
        let r = derive_all(&tri, &DeriveOptions { merge: true, ..Default::default() }).unwrap();
        assert_eq!(r.counts().flagged, 0);
        assert!(!r.complete());
        let bad = g(fixtures::ABSORB);
        assert!(matches!(derive_all(&bad, &DeriveOptions::default()), Err(Error::Conditions(_))));
    }

    #[test]
    fn duarte_merged_flags() {
        let r = derive_all(&g(fixtures::DUARTE), &DeriveOptions { merge: true, ..Default::default() }).unwrap();
        let by_members: Vec<(String, Counts)> = r
            .districts
            .iter()
            .map(|d| (r.graph.fmt_set(&d.members), d.counts()))
            .collect();
        let small = by_members.iter().find(|(m, _)| m == "{V1,V3,V6}").unwrap().1;
        assert_eq!((small.flagged, small.flagged_equalities), (8, 4));
        let big = by_members.iter().find(|(m, _)| m == "{V2,V4,V5}").unwrap().1;
        assert_eq!(big.flagged, 1118);
    }

    #[test]
    fn json_is_reproducible() {
        let dag = g(fixtures::FRONT_DOOR);
        let a = derive_all(&dag, &DeriveOptions::default()).unwrap().to_json(None, false);
        let b = derive_all(&dag, &DeriveOptions::default()).unwrap().to_json(None, false);
        assert_eq!(a.to_string(), b.to_string());
        assert!(a["meta"].get("timings").is_none());
    }
}
