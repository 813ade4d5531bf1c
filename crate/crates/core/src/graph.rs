//! Hidden-variable DAGs over discrete observed variables.
//!
//! Variables keep the order in which they were declared; that order is the
//! canonical order used for every enumeration downstream (districts, row and
//! column labels, CI statements), so derivations are reproducible byte for
//! byte.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Index of a variable in the canonical (declaration) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Observed,
    Latent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    /// Number of categories; `None` for latent variables.
    pub cardinality: Option<usize>,
}

impl Variable {
    pub fn observed(name: impl Into<String>, cardinality: usize) -> Self {
        Variable {
            name: name.into(),
            kind: VarKind::Observed,
            cardinality: Some(cardinality),
        }
    }

    pub fn latent(name: impl Into<String>) -> Self {
        Variable {
            name: name.into(),
            kind: VarKind::Latent,
            cardinality: None,
        }
    }

    pub fn is_observed(&self) -> bool {
        self.kind == VarKind::Observed
    }
}

/// A district (c-component): observed members connected through shared
/// latent parents, plus the latents that have a child among the members.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct District {
    pub members: Vec<VarId>,
    pub latents: Vec<VarId>,
}

impl District {
    /// `max(1, number of latent parents)`.
    pub fn c_degree(&self) -> usize {
        self.latents.len().max(1)
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct HiddenDag {
    variables: Vec<Variable>,
    edges: BTreeSet<(VarId, VarId)>,
    parents: Vec<Vec<VarId>>,
    children: Vec<Vec<VarId>>,
    index: HashMap<String, VarId>,
}

impl PartialEq for HiddenDag {
    fn eq(&self, other: &Self) -> bool {
        self.variables == other.variables && self.edges == other.edges
    }
}

impl Eq for HiddenDag {}

pub(crate) fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

impl HiddenDag {
    /// Builds and validates a graph.
    pub fn new(
        variables: Vec<Variable>,
        edges: impl IntoIterator<Item = (VarId, VarId)>,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, v) in variables.iter().enumerate() {
            if !valid_name(&v.name) {
                return Err(Error::Syntax {
                    line: 0,
                    message: format!("invalid variable name `{}`", v.name),
                });
            }
            match v.kind {
                VarKind::Observed => {
                    let card = v.cardinality.unwrap_or(0);
                    if card < 2 {
                        return Err(Error::BadCardinality {
                            name: v.name.clone(),
                            cardinality: card,
                        });
                    }
                }
                VarKind::Latent => {
                    if v.cardinality.is_some() {
                        return Err(Error::Syntax {
                            line: 0,
                            message: format!("latent `{}` cannot carry a cardinality", v.name),
                        });
                    }
                }
            }
            if index.insert(v.name.clone(), VarId(i)).is_some() {
                return Err(Error::DuplicateVariable(v.name.clone()));
            }
        }
        let n = variables.len();
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a.0 >= n || b.0 >= n {
                return Err(Error::UnknownVariable(format!("#{}", a.0.max(b.0))));
            }
            if a == b {
                let name = variables[a.0].name.clone();
                return Err(Error::Cycle(name.clone(), name));
            }
            set.insert((a, b));
        }
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(a, b) in &set {
            parents[b.0].push(a);
            children[a.0].push(b);
        }
        let dag = HiddenDag {
            variables,
            edges: set,
            parents,
            children,
            index,
        };
        dag.check_acyclic()?;
        Ok(dag)
    }

    /// Builds a graph from variable declarations and named edges.
    pub fn from_names<'a>(
        variables: Vec<Variable>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let index: HashMap<&str, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.as_str(), i))
            .collect();
        let mut ids = Vec::new();
        for (a, b) in edges {
            let pa = *index
                .get(a)
                .ok_or_else(|| Error::UnknownVariable(a.to_string()))?;
            let pb = *index
                .get(b)
                .ok_or_else(|| Error::UnknownVariable(b.to_string()))?;
            ids.push((VarId(pa), VarId(pb)));
        }
        HiddenDag::new(variables, ids)
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// # comment
    /// var Z 2
    /// latent U
    /// edge Z X
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut variables: Vec<Variable> = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut edges: Vec<(usize, String, String)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let syntax = |message: String| Error::Syntax {
                line: line_no,
                message,
            };
            match toks[0] {
                "var" => {
                    if toks.len() != 3 {
                        return Err(syntax("expected `var <name> <cardinality>`".into()));
                    }
                    let card: usize = toks[2]
                        .parse()
                        .map_err(|_| syntax(format!("bad cardinality `{}`", toks[2])))?;
                    if card < 2 {
                        return Err(syntax(format!(
                            "observed variable `{}` needs cardinality >= 2",
                            toks[1]
                        )));
                    }
                    variables.push(Variable::observed(toks[1], card));
                }
                "latent" => {
                    if toks.len() == 3 {
                        return Err(syntax(format!(
                            "latent `{}` cannot carry a cardinality",
                            toks[1]
                        )));
                    }
                    if toks.len() != 2 {
                        return Err(syntax("expected `latent <name>`".into()));
                    }
                    variables.push(Variable::latent(toks[1]));
                }
                "edge" => {
                    if toks.len() != 3 {
                        return Err(syntax("expected `edge <parent> <child>`".into()));
                    }
                    edges.push((line_no, toks[1].to_string(), toks[2].to_string()));
                    continue;
                }
                other => return Err(syntax(format!("unknown directive `{other}`"))),
            }
            let v = variables.last().expect("just pushed");
            if !valid_name(&v.name) {
                return Err(syntax(format!("invalid variable name `{}`", v.name)));
            }
            if seen.insert(v.name.clone(), variables.len() - 1).is_some() {
                return Err(syntax(format!("variable `{}` declared twice", v.name)));
            }
        }
        let mut ids = BTreeSet::new();
        for (line, a, b) in &edges {
            let lookup = |name: &str| {
                seen.get(name).copied().ok_or_else(|| Error::Syntax {
                    line: *line,
                    message: format!("edge names undeclared variable `{name}`"),
                })
            };
            let (pa, pb) = (lookup(a)?, lookup(b)?);
            if pa == pb {
                return Err(Error::Syntax {
                    line: *line,
                    message: format!("self-loop on `{a}` closes a cycle"),
                });
            }
            if !ids.insert((VarId(pa), VarId(pb))) {
                return Err(Error::Syntax {
                    line: *line,
                    message: format!("duplicate edge {a} -> {b}"),
                });
            }
        }
        HiddenDag::new(variables, ids)
    }

    /// Writes the graph back in the input format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.variables {
            match v.kind {
                VarKind::Observed => {
                    out.push_str(&format!("var {} {}\n", v.name, v.cardinality.unwrap_or(0)))
                }
                VarKind::Latent => out.push_str(&format!("latent {}\n", v.name)),
            }
        }
        for &(a, b) in &self.edges {
            out.push_str(&format!("edge {} {}\n", self.name(a), self.name(b)));
        }
        out
    }

    fn check_acyclic(&self) -> Result<()> {
        let order = self.full_topological_order();
        if order.len() == self.variables.len() {
            return Ok(());
        }
        let placed: BTreeSet<VarId> = order.into_iter().collect();
        let (a, b) = self
            .edges
            .iter()
            .find(|(a, b)| !placed.contains(a) && !placed.contains(b))
            .copied()
            .expect("a cycle leaves an unplaced edge");
        Err(Error::Cycle(self.name(a).into(), self.name(b).into()))
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.variables[v.0].name
    }

    pub fn edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, a: VarId, b: VarId) -> bool {
        self.edges.contains(&(a, b))
    }

    pub fn id(&self, name: &str) -> Result<VarId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn observed_id(&self, name: &str) -> Result<VarId> {
        let id = self.id(name)?;
        if !self.is_observed(id) {
            return Err(Error::NotObserved(name.to_string()));
        }
        Ok(id)
    }

    pub fn latent_id(&self, name: &str) -> Result<VarId> {
        let id = self.id(name)?;
        if self.is_observed(id) {
            return Err(Error::NotLatent(name.to_string()));
        }
        Ok(id)
    }

    pub fn is_observed(&self, v: VarId) -> bool {
        self.variables[v.0].is_observed()
    }

    /// Cardinality of an observed variable (panics on latents).
    pub fn cardinality(&self, v: VarId) -> usize {
        self.variables[v.0]
            .cardinality
            .expect("cardinality of a latent variable")
    }

    pub fn observed(&self) -> Vec<VarId> {
        (0..self.len())
            .map(VarId)
            .filter(|&v| self.is_observed(v))
            .collect()
    }

    pub fn latents(&self) -> Vec<VarId> {
        (0..self.len())
            .map(VarId)
            .filter(|&v| !self.is_observed(v))
            .collect()
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.parents[v.0]
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v.0]
    }

    pub fn observed_children(&self, v: VarId) -> BTreeSet<VarId> {
        self.children[v.0]
            .iter()
            .copied()
            .filter(|&c| self.is_observed(c))
            .collect()
    }

    pub fn latent_parents(&self, v: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.parents[v.0]
            .iter()
            .copied()
            .filter(|&p| !self.is_observed(p))
    }

    fn check_observed(&self, set: &BTreeSet<VarId>) -> Result<()> {
        for &v in set {
            if v.0 >= self.len() {
                return Err(Error::UnknownVariable(format!("#{}", v.0)));
            }
            if !self.is_observed(v) {
                return Err(Error::NotObserved(self.name(v).to_string()));
            }
        }
        Ok(())
    }

    /// Union of the observed parents of `set`; may intersect `set`.
    pub fn observed_parents(&self, set: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
        self.check_observed(set)?;
        Ok(set
            .iter()
            .flat_map(|&v| self.parents[v.0].iter().copied())
            .filter(|&p| self.is_observed(p))
            .collect())
    }

    /// Observed ancestors along directed paths through observed variables,
    /// `set` included.
    pub fn observed_ancestors(&self, set: &BTreeSet<VarId>) -> Result<BTreeSet<VarId>> {
        self.check_observed(set)?;
        let mut out = set.clone();
        let mut queue: VecDeque<VarId> = set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &p in &self.parents[v.0] {
                if self.is_observed(p) && out.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        Ok(out)
    }

    /// All ancestors (latent or observed) of `set`, `set` included.
    pub fn ancestors(&self, set: &BTreeSet<VarId>) -> BTreeSet<VarId> {
        let mut out = set.clone();
        let mut queue: VecDeque<VarId> = set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &p in &self.parents[v.0] {
                if out.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        out
    }

    /// Connected components of the observed variables after deleting every
    /// edge that does not leave a latent. Members and districts are sorted by
    /// canonical index.
    pub fn districts(&self) -> Vec<District> {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let next = p[c];
                p[c] = r;
                c = next;
            }
            r
        }
        for u in self.latents() {
            let kids: Vec<VarId> = self.observed_children(u).into_iter().collect();
            for w in kids.windows(2) {
                let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
        for v in self.observed() {
            let r = find(&mut parent, v.0);
            groups.entry(r).or_default().push(v);
        }
        let mut out: Vec<District> = groups
            .into_values()
            .map(|members| {
                let latents: BTreeSet<VarId> = members
                    .iter()
                    .flat_map(|&m| self.latent_parents(m))
                    .collect();
                District {
                    members,
                    latents: latents.into_iter().collect(),
                }
            })
            .collect();
        out.sort_by_key(|d| d.members[0]);
        out
    }

    /// c-degree of one district of this graph.
    pub fn c_degree(&self, district: &District) -> Result<usize> {
        if !self.districts().contains(district) {
            return Err(Error::NotADistrict);
        }
        Ok(district.c_degree())
    }

    /// Maximum c-degree over all districts (1 for a graph without latents).
    pub fn graph_c_degree(&self) -> usize {
        self.districts()
            .iter()
            .map(District::c_degree)
            .max()
            .unwrap_or(1)
    }

    /// Reports every violation of the two structural conditions: latents are
    /// exogenous, and each latent has at least two observed children that are
    /// not contained in another latent's children.
    pub fn validate_conditions(&self) -> ConditionsReport {
        let mut violations = Vec::new();
        let latents = self.latents();
        for &u in &latents {
            if !self.parents[u.0].is_empty() {
                violations.push(Violation::LatentHasParents {
                    latent: self.name(u).to_string(),
                    parents: self.parents[u.0]
                        .iter()
                        .map(|&p| self.name(p).to_string())
                        .collect(),
                });
            }
        }
        for &u in &latents {
            let kids = self.observed_children(u);
            if kids.len() < 2 {
                violations.push(Violation::TooFewChildren {
                    latent: self.name(u).to_string(),
                    count: kids.len(),
                });
                continue;
            }
            if let Some(&other) = latents
                .iter()
                .find(|&&o| o != u && kids.is_subset(&self.observed_children(o)))
            {
                violations.push(Violation::NestedChildren {
                    latent: self.name(u).to_string(),
                    within: self.name(other).to_string(),
                });
            }
        }
        ConditionsReport { violations }
    }

    /// Latents first (declaration order), then a topological order of the
    /// observed subgraph that always emits the smallest available index.
    pub fn topological_order(&self) -> Vec<VarId> {
        let mut out = self.latents();
        let observed = self.observed();
        out.extend(self.stable_kahn(&observed));
        out
    }

    /// Stable topological order of the whole graph.
    pub fn full_topological_order(&self) -> Vec<VarId> {
        let all: Vec<VarId> = (0..self.len()).map(VarId).collect();
        self.stable_kahn(&all)
    }

    /// Kahn's algorithm restricted to `subset`, always taking the smallest
    /// available index. Returns fewer vertices than `subset` on a cycle.
    pub(crate) fn stable_kahn(&self, subset: &[VarId]) -> Vec<VarId> {
        let inside: BTreeSet<VarId> = subset.iter().copied().collect();
        let mut indeg: BTreeMap<VarId, usize> = subset
            .iter()
            .map(|&v| {
                let d = self.parents[v.0]
                    .iter()
                    .filter(|p| inside.contains(p))
                    .count();
                (v, d)
            })
            .collect();
        let mut ready: BTreeSet<VarId> = indeg
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut out = Vec::with_capacity(subset.len());
        while let Some(v) = ready.pop_first() {
            out.push(v);
            for &c in &self.children[v.0] {
                if let Some(d) = indeg.get_mut(&c) {
                    *d -= 1;
                    if *d == 0 {
                        ready.insert(c);
                    }
                }
            }
        }
        out
    }

    /// Stable order of `set` that respects every edge among its members.
    pub fn order_within(&self, set: &[VarId]) -> Vec<VarId> {
        self.stable_kahn(set)
    }

    /// Human-readable `{A,B}` for a set of variables.
    pub fn fmt_set<'a>(&self, set: impl IntoIterator<Item = &'a VarId>) -> String {
        let names: Vec<&str> = set.into_iter().map(|&v| self.name(v)).collect();
        format!("{{{}}}", names.join(","))
    }

    /// Short stable fingerprint of the graph text (FNV-1a, hex).
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Condition 1: a latent variable has parents.
    LatentHasParents { latent: String, parents: Vec<String> },
    /// Condition 2: fewer than two observed children.
    TooFewChildren { latent: String, count: usize },
    /// Condition 2: observed children nested in another latent's children.
    NestedChildren { latent: String, within: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LatentHasParents { latent, parents } => write!(
                f,
                "C1: latent {latent} has parents {{{}}}",
                parents.join(",")
            ),
            Violation::TooFewChildren { latent, count } => {
                write!(f, "C2: latent {latent} has {count} observed child(ren)")
            }
            Violation::NestedChildren { latent, within } => write!(
                f,
                "C2: observed children of {latent} are contained in those of {within}"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ConditionsReport {
    pub violations: Vec<Violation>,
}

impl ConditionsReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        self.violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(dag: &HiddenDag, names: &[&str]) -> BTreeSet<VarId> {
        names.iter().map(|n| dag.id(n).unwrap()).collect()
    }

    fn names(dag: &HiddenDag, ids: &BTreeSet<VarId>) -> Vec<String> {
        ids.iter().map(|&v| dag.name(v).to_string()).collect()
    }

    #[test]
    fn parses_iv() {
        let dag = HiddenDag::parse(fixtures::IV).unwrap();
        assert_eq!(dag.len(), 4);
        assert_eq!(dag.observed().len(), 3);
        assert!(dag.has_edge(dag.id("U").unwrap(), dag.id("Y").unwrap()));
        assert_eq!(HiddenDag::parse(&dag.to_text()).unwrap(), dag);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = HiddenDag::parse("var X 2\n\nvar Y\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }), "{err:?}");
        let err = HiddenDag::parse("var X 2\nedge X Q\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
        let err = HiddenDag::parse("var X 2\nedge X X\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
        let err = HiddenDag::parse("latent U 3\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = HiddenDag::parse("var X 1\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }));
        let err = HiddenDag::parse("var X 2\nvar X 3\n").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, .. }));
    }

    #[test]
    fn rejects_cycles() {
        let err = HiddenDag::parse("var A 2\nvar B 2\nedge A B\nedge B A\n").unwrap_err();
        assert!(matches!(err, Error::Cycle(..)));
    }

    #[test]
    fn single_node_graph() {
        let dag = HiddenDag::parse("var A 3\n").unwrap();
        let d = dag.districts();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].members, vec![VarId(0)]);
        assert_eq!(d[0].c_degree(), 1);
    }

    #[test]
    fn observed_parents_examples() {
        let iv = HiddenDag::parse(fixtures::IV).unwrap();
        let pa = iv.observed_parents(&set(&iv, &["X", "Y"])).unwrap();
        assert_eq!(names(&iv, &pa), ["Z", "X"]);
        assert!(iv.observed_parents(&set(&iv, &["Z"])).unwrap().is_empty());
        let dag = HiddenDag::parse(fixtures::DISTRICTS).unwrap();
        let pa = dag.observed_parents(&set(&dag, &["F"])).unwrap();
        assert_eq!(names(&dag, &pa), ["D", "G"]);
        assert!(matches!(
            iv.observed_parents(&set(&iv, &["U"])),
            Err(Error::NotObserved(_))
        ));
    }

    #[test]
    fn observed_ancestors_examples() {
        let iv = HiddenDag::parse(fixtures::IV).unwrap();
        let an = iv.observed_ancestors(&set(&iv, &["Y"])).unwrap();
        assert_eq!(names(&iv, &an), ["Z", "X", "Y"]);
        let an = iv.observed_ancestors(&set(&iv, &["Z"])).unwrap();
        assert_eq!(names(&iv, &an), ["Z"]);
        let chain = HiddenDag::parse("var V1 2\nvar V2 2\nvar V3 2\nedge V1 V2\nedge V2 V3\n")
            .unwrap();
        let an = chain.observed_ancestors(&set(&chain, &["V3"])).unwrap();
        assert_eq!(an.len(), 3);
    }

    #[test]
    fn districts_of_paper_graphs() {
        let dag = HiddenDag::parse(fixtures::DISTRICTS).unwrap();
        let ds = dag.districts();
        let shown: Vec<(String, usize)> = ds
            .iter()
            .map(|d| (dag.fmt_set(&d.members), d.c_degree()))
            .collect();
        assert_eq!(
            shown,
            [
                ("{A,C,E}".to_string(), 1),
                ("{B,D,F}".to_string(), 2),
                ("{G}".to_string(), 1)
            ]
        );
        assert_eq!(dag.graph_c_degree(), 2);

        let iv = HiddenDag::parse(fixtures::IV).unwrap();
        let ds: Vec<String> = iv.districts().iter().map(|d| iv.fmt_set(&d.members)).collect();
        assert_eq!(ds, ["{Z}", "{X,Y}"]);

        let free = HiddenDag::parse("var A 2\nvar B 2\nvar C 2\nedge A B\nedge B C\nedge A C\n")
            .unwrap();
        assert_eq!(free.districts().len(), 3);
    }

    #[test]
    fn c_degree_examples() {
        let tri = HiddenDag::parse(fixtures::TRIANGLE).unwrap();
        let ds = tri.districts();
        assert_eq!(ds.len(), 1);
        assert_eq!(tri.c_degree(&ds[0]).unwrap(), 3);
        let dag = HiddenDag::parse(fixtures::DISTRICTS).unwrap();
        let bdf = dag.districts()[1].clone();
        assert_eq!(dag.c_degree(&bdf).unwrap(), 2);
        let bogus = District {
            members: vec![VarId(0)],
            latents: vec![],
        };
        assert_eq!(dag.c_degree(&bogus), Err(Error::NotADistrict));
    }

    #[test]
    fn condition_reports() {
        let a = HiddenDag::parse(fixtures::EXOGENIZE).unwrap();
        let r = a.validate_conditions();
        assert!(r.violations.iter().any(|v| matches!(
            v,
            Violation::LatentHasParents { latent, .. } if latent == "U2"
        )));
        let b = HiddenDag::parse(fixtures::ABSORB).unwrap();
        let r = b.validate_conditions();
        assert_eq!(
            r.violations,
            vec![Violation::NestedChildren {
                latent: "U2".into(),
                within: "U1".into()
            }]
        );
        assert!(HiddenDag::parse(fixtures::IV)
            .unwrap()
            .validate_conditions()
            .is_ok());
    }

    #[test]
    fn topological_orders() {
        let iv = HiddenDag::parse(fixtures::IV).unwrap();
        let order: Vec<&str> = iv.topological_order().iter().map(|&v| iv.name(v)).collect();
        assert_eq!(order, ["U", "Z", "X", "Y"]);
        let two = HiddenDag::parse("var B 2\nvar A 2\n").unwrap();
        assert_eq!(two.topological_order(), vec![VarId(0), VarId(1)]);
        let seq = HiddenDag::parse(fixtures::SEQUENTIAL_IV).unwrap();
        let order = seq.topological_order();
        let pos: HashMap<VarId, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        assert!(seq.edges().all(|(a, b)| pos[&a] < pos[&b]));
        let names: Vec<&str> = order.iter().map(|&v| seq.name(v)).collect();
        assert_eq!(names, ["U2", "U3", "V1", "V2", "V3", "V4", "V5"]);
    }
}
