//! Conditional independences among observed variables implied by
//! d-separation in the full graph.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{HiddenDag, VarId};

/// `lhs _||_ rhs | given`, with sorted sets and `lhs[0] < rhs[0]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CIStatement {
    pub lhs: Vec<VarId>,
    pub rhs: Vec<VarId>,
    pub given: Vec<VarId>,
}

impl CIStatement {
    pub fn new(
        lhs: impl IntoIterator<Item = VarId>,
        rhs: impl IntoIterator<Item = VarId>,
        given: impl IntoIterator<Item = VarId>,
    ) -> Self {
        let mut lhs: Vec<VarId> = lhs.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut rhs: Vec<VarId> = rhs.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let given = given.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if rhs.first() < lhs.first() {
            std::mem::swap(&mut lhs, &mut rhs);
        }
        CIStatement { lhs, rhs, given }
    }

    /// `A,B _||_ C | D`
    pub fn display(&self, dag: &HiddenDag) -> String {
        let join = |s: &[VarId]| {
            s.iter()
                .map(|&v| dag.name(v))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = format!("{} _||_ {}", join(&self.lhs), join(&self.rhs));
        if !self.given.is_empty() {
            out.push_str(" | ");
            out.push_str(&join(&self.given));
        }
        out
    }

    pub fn holds(&self, dag: &HiddenDag) -> Result<bool> {
        let set = |s: &[VarId]| s.iter().copied().collect::<BTreeSet<_>>();
        d_separated(dag, &set(&self.lhs), &set(&self.rhs), &set(&self.given))
    }

    /// True when `other` implies `self` by decomposition (same conditioning set).
    fn implied_by(&self, other: &CIStatement) -> bool {
        let sub = |a: &[VarId], b: &[VarId]| a.iter().all(|x| b.contains(x));
        self.given == other.given
            && ((sub(&self.lhs, &other.lhs) && sub(&self.rhs, &other.rhs))
                || (sub(&self.lhs, &other.rhs) && sub(&self.rhs, &other.lhs)))
    }
}

/// Tests whether `a` and `b` are d-separated given `z` (ancestral moral graph
/// criterion).
pub fn d_separated(
    dag: &HiddenDag,
    a: &BTreeSet<VarId>,
    b: &BTreeSet<VarId>,
    z: &BTreeSet<VarId>,
) -> Result<bool> {
    for set in [a, b, z] {
        for &v in set {
            if v.0 >= dag.len() {
                return Err(Error::UnknownVariable(format!("#{}", v.0)));
            }
            if !dag.is_observed(v) {
                return Err(Error::NotObserved(dag.name(v).to_string()));
            }
        }
    }
    if !a.is_disjoint(b) || !a.is_disjoint(z) || !b.is_disjoint(z) {
        return Err(Error::Overlap("d-separation"));
    }
    if a.is_empty() || b.is_empty() {
        return Ok(true);
    }
    let seed: BTreeSet<VarId> = a.iter().chain(b).chain(z).copied().collect();
    let anc = dag.ancestors(&seed);
    let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for &v in &anc {
        let ps = dag.parents(v);
        for (i, &p) in ps.iter().enumerate() {
            adj.entry(v).or_default().insert(p);
            adj.entry(p).or_default().insert(v);
            for &q in &ps[i + 1..] {
                adj.entry(p).or_default().insert(q);
                adj.entry(q).or_default().insert(p);
            }
        }
    }
    let mut seen: BTreeSet<VarId> = a.clone();
    let mut queue: VecDeque<VarId> = a.iter().copied().collect();
    while let Some(v) = queue.pop_front() {
        for &w in adj.get(&v).into_iter().flatten() {
            if z.contains(&w) || !seen.insert(w) {
                continue;
            }
            if b.contains(&w) {
                return Ok(false);
            }
            queue.push_back(w);
        }
    }
    Ok(true)
}

fn subsets_upto(items: &[VarId], k: usize) -> Vec<BTreeSet<VarId>> {
    let mut out = vec![BTreeSet::new()];
    let mut frontier = vec![(BTreeSet::new(), 0usize)];
    for _ in 0..k {
        let mut next = Vec::new();
        for (set, start) in &frontier {
            for (i, &v) in items.iter().enumerate().skip(*start) {
                let mut s: BTreeSet<VarId> = set.clone();
                s.insert(v);
                out.push(s.clone());
                next.push((s, i + 1));
            }
        }
        frontier = next;
    }
    out
}

/// Enumerates pairwise separations with minimal conditioning sets (at most
/// `max_condition_size` variables, default all), then merges them into
/// set-valued statements per conditioning set and drops statements implied
/// by decomposition. Output is sorted by `(|Z|, Z, lhs, rhs)`.
pub fn enumerate_ci(dag: &HiddenDag, max_condition_size: Option<usize>) -> Vec<CIStatement> {
    let w = dag.observed();
    if w.len() < 2 {
        return Vec::new();
    }
    let cap = max_condition_size.unwrap_or(w.len() - 2).min(w.len() - 2);
    let sep = |x: VarId, y: VarId, z: &BTreeSet<VarId>| {
        d_separated(dag, &BTreeSet::from([x]), &BTreeSet::from([y]), z)
            .expect("observed disjoint arguments")
    };

    let mut conditioning: BTreeSet<(VarId, Vec<VarId>)> = BTreeSet::new();
    for (i, &x) in w.iter().enumerate() {
        for &y in &w[i + 1..] {
            let rest: Vec<VarId> = w.iter().copied().filter(|&v| v != x && v != y).collect();
            let mut minimal: Vec<BTreeSet<VarId>> = Vec::new();
            for z in subsets_upto(&rest, cap) {
                if minimal.iter().any(|m| m.is_subset(&z)) {
                    continue;
                }
                if sep(x, y, &z) {
                    minimal.push(z);
                }
            }
            for z in minimal {
                let zv: Vec<VarId> = z.into_iter().collect();
                conditioning.insert((x, zv.clone()));
                conditioning.insert((y, zv));
            }
        }
    }

    let mut partners: BTreeMap<(VarId, Vec<VarId>), BTreeSet<VarId>> = BTreeMap::new();
    let mut partners_of = |v: VarId, z: &Vec<VarId>| -> BTreeSet<VarId> {
        partners
            .entry((v, z.clone()))
            .or_insert_with(|| {
                let zs: BTreeSet<VarId> = z.iter().copied().collect();
                w.iter()
                    .copied()
                    .filter(|&k| k != v && !zs.contains(&k) && sep(v, k, &zs))
                    .collect()
            })
            .clone()
    };

    let mut found: BTreeSet<CIStatement> = BTreeSet::new();
    for (v, z) in &conditioning {
        let b = partners_of(*v, z);
        if b.is_empty() {
            continue;
        }
        let a: Vec<VarId> = w
            .iter()
            .copied()
            .filter(|k| !z.contains(k) && !b.contains(k))
            .filter(|&k| partners_of(k, z).is_superset(&b))
            .collect();
        found.insert(CIStatement::new(a, b, z.iter().copied()));
    }

    let all: Vec<CIStatement> = found.into_iter().collect();
    let mut kept: Vec<CIStatement> = all
        .iter()
        .filter(|s| !all.iter().any(|o| o != *s && s.implied_by(o)))
        .cloned()
        .collect();
    kept.sort_by(|p, q| {
        (p.given.len(), &p.given, &p.lhs, &p.rhs).cmp(&(q.given.len(), &q.given, &q.lhs, &q.rhs))
    });
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn g(text: &str) -> HiddenDag {
        HiddenDag::parse(text).unwrap()
    }

    fn s(dag: &HiddenDag, names: &[&str]) -> BTreeSet<VarId> {
        names.iter().map(|n| dag.id(n).unwrap()).collect()
    }

    #[test]
    fn d_separation_examples() {
        let iv = g(fixtures::IV);
        assert!(!d_separated(&iv, &s(&iv, &["Z"]), &s(&iv, &["Y"]), &s(&iv, &[])).unwrap());
        assert!(!d_separated(&iv, &s(&iv, &["Z"]), &s(&iv, &["Y"]), &s(&iv, &["X"])).unwrap());
        let seq = g(fixtures::SEQUENTIAL_IV);
        assert!(d_separated(
            &seq,
            &s(&seq, &["V1", "V2"]),
            &s(&seq, &["V4", "V5"]),
            &s(&seq, &["V3"])
        )
        .unwrap());
        for text in [fixtures::NESTED_LEFT, fixtures::NESTED_RIGHT] {
            let d = g(text);
            assert!(d_separated(&d, &s(&d, &["V1"]), &s(&d, &["V3"]), &s(&d, &["V2"])).unwrap());
        }
    }

    #[test]
    fn d_separation_argument_errors() {
        let iv = g(fixtures::IV);
        assert_eq!(
            d_separated(&iv, &s(&iv, &["Z"]), &s(&iv, &["Z"]), &s(&iv, &[])),
            Err(Error::Overlap("d-separation"))
        );
        assert!(matches!(
            d_separated(&iv, &s(&iv, &["U"]), &s(&iv, &["Z"]), &s(&iv, &[])),
            Err(Error::NotObserved(_))
        ));
    }

    #[test]
    fn ci_lists() {
        let bell = g(fixtures::TRIPARTITE_BELL);
        let lines: Vec<String> = enumerate_ci(&bell, None)
            .iter()
            .map(|c| c.display(&bell))
            .collect();
        assert!(lines.contains(&"V2,V3,Y,Z _||_ X".to_string()) || lines.contains(&"X _||_ V2,V3,Y,Z".to_string()), "{lines:?}");

        let seq = g(fixtures::SEQUENTIAL_IV);
        let lines: Vec<String> = enumerate_ci(&seq, None)
            .iter()
            .map(|c| c.display(&seq))
            .collect();
        assert!(lines.contains(&"V1,V2 _||_ V4,V5 | V3".to_string()), "{lines:?}");

        assert!(enumerate_ci(&g(fixtures::FRONT_DOOR), None).is_empty());
        let complete = g("var A 2\nvar B 2\nvar C 2\nedge A B\nedge A C\nedge B C\n");
        assert!(enumerate_ci(&complete, None).is_empty());
    }

    #[test]
    fn ci_statements_hold_and_are_canonical() {
        for (_, text) in fixtures::ALL {
            let dag = g(text);
            for c in enumerate_ci(&dag, None) {
                assert!(c.holds(&dag).unwrap(), "{}", c.display(&dag));
                assert!(c.lhs[0] < c.rhs[0]);
            }
        }
    }

    #[test]
    fn cap_limits_conditioning_size() {
        let seq = g(fixtures::SEQUENTIAL_IV);
        assert!(enumerate_ci(&seq, Some(0)).iter().all(|c| c.given.is_empty()));
        let iv = g(fixtures::IV);
        let lines: Vec<String> = enumerate_ci(&iv, None).iter().map(|c| c.display(&iv)).collect();
        assert!(lines.is_empty(), "{lines:?}");
    }
}
