//! Graph rewrites: exogenization, latent absorption, per-district latent
//! merging, and the edge/latent rewrites that preserve observational
//! equivalence.
//!
//! Every rewrite is expressed as a sequence of name-based [`EditOp`]s, so a
//! [`RewriteLog`] can be replayed on the input graph.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{HiddenDag, VarId, Variable};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    AddEdge { from: String, to: String },
    RemoveEdge { from: String, to: String },
    AddLatent { name: String },
    /// Removes the variable together with its incident edges.
    RemoveVariable { name: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RewriteStep {
    pub rule: String,
    pub affected: Vec<String>,
    pub description: String,
    pub ops: Vec<EditOp>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RewriteLog {
    pub steps: Vec<RewriteStep>,
}

impl RewriteLog {
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn extend(&mut self, other: RewriteLog) {
        self.steps.extend(other.steps);
    }

    /// Applies every recorded edit to `dag`.
    pub fn replay(&self, dag: &HiddenDag) -> Result<HiddenDag> {
        let mut ed = Editable::from(dag);
        for step in &self.steps {
            for op in &step.ops {
                ed.apply(op)?;
            }
        }
        ed.build()
    }
}

impl fmt::Display for RewriteLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{}: {}", s.rule, s.description)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Editable {
    vars: Vec<Variable>,
    edges: BTreeSet<(String, String)>,
}

impl From<&HiddenDag> for Editable {
    fn from(dag: &HiddenDag) -> Self {
        Editable {
            vars: dag.variables().to_vec(),
            edges: dag
                .edges()
                .map(|(a, b)| (dag.name(a).to_string(), dag.name(b).to_string()))
                .collect(),
        }
    }
}

impl Editable {
    fn has(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    fn apply(&mut self, op: &EditOp) -> Result<()> {
        match op {
            EditOp::AddEdge { from, to } => {
                for n in [from, to] {
                    if !self.has(n) {
                        return Err(Error::UnknownVariable(n.clone()));
                    }
                }
                self.edges.insert((from.clone(), to.clone()));
            }
            EditOp::RemoveEdge { from, to } => {
                self.edges.remove(&(from.clone(), to.clone()));
            }
            EditOp::AddLatent { name } => {
                if self.has(name) {
                    return Err(Error::DuplicateVariable(name.clone()));
                }
                self.vars.push(Variable::latent(name.clone()));
            }
            EditOp::RemoveVariable { name } => {
                if !self.has(name) {
                    return Err(Error::UnknownVariable(name.clone()));
                }
                self.vars.retain(|v| &v.name != name);
                self.edges.retain(|(a, b)| a != name && b != name);
            }
        }
        Ok(())
    }

    fn build(&self) -> Result<HiddenDag> {
        HiddenDag::from_names(
            self.vars.clone(),
            self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
    }

    fn fresh(&self, prefix: &str) -> String {
        (1..)
            .map(|k| format!("{prefix}_{k}"))
            .find(|n| !self.has(n))
            .expect("unbounded counter")
    }
}

struct Session {
    ed: Editable,
    log: RewriteLog,
}

impl Session {
    fn new(dag: &HiddenDag) -> Self {
        Session {
            ed: Editable::from(dag),
            log: RewriteLog::default(),
        }
    }

    fn step(
        &mut self,
        rule: &str,
        affected: Vec<String>,
        description: String,
        ops: Vec<EditOp>,
    ) -> Result<()> {
        for op in &ops {
            self.ed.apply(op)?;
        }
        self.log.steps.push(RewriteStep {
            rule: rule.to_string(),
            affected,
            description,
            ops,
        });
        Ok(())
    }

    fn current(&self) -> Result<HiddenDag> {
        self.ed.build()
    }

    fn finish(self) -> Result<(HiddenDag, RewriteLog)> {
        Ok((self.ed.build()?, self.log))
    }
}

fn names(dag: &HiddenDag, set: impl IntoIterator<Item = VarId>) -> Vec<String> {
    set.into_iter().map(|v| dag.name(v).to_string()).collect()
}

fn braces(items: &[String]) -> String {
    format!("{{{}}}", items.join(","))
}

fn add_edge(from: &str, to: &str) -> EditOp {
    EditOp::AddEdge {
        from: from.into(),
        to: to.into(),
    }
}

fn remove_edge(from: &str, to: &str) -> EditOp {
    EditOp::RemoveEdge {
        from: from.into(),
        to: to.into(),
    }
}

fn remove_var(name: &str) -> EditOp {
    EditOp::RemoveVariable { name: name.into() }
}

/// Makes every latent exogenous: each parent of a latent `U` gains edges to
/// all children of `U`, and the edge into `U` is dropped. Latents are handled
/// in reverse topological order.
pub fn exogenize(dag: &HiddenDag) -> Result<(HiddenDag, RewriteLog)> {
    let mut s = Session::new(dag);
    loop {
        let g = s.current()?;
        let target = g
            .full_topological_order()
            .into_iter()
            .rev()
            .find(|&v| !g.is_observed(v) && !g.parents(v).is_empty());
        let Some(u) = target else { break };
        let un = g.name(u).to_string();
        let parents = names(&g, g.parents(u).iter().copied());
        let children = names(&g, g.children(u).iter().copied());
        let mut ops = Vec::new();
        for p in &parents {
            for c in &children {
                let (pi, ci) = (g.id(p)?, g.id(c)?);
                if !g.has_edge(pi, ci) {
                    ops.push(add_edge(p, c));
                }
            }
            ops.push(remove_edge(p, &un));
        }
        let mut affected = vec![un.clone()];
        affected.extend(parents.iter().cloned());
        s.step(
            "exogenize",
            affected,
            format!(
                "parents {} of {un} now point to its children {}",
                braces(&parents),
                braces(&children)
            ),
            ops,
        )?;
    }
    s.finish()
}

/// Deletes latents with fewer than two observed children and absorbs every
/// latent whose observed children are contained in another latent's. When
/// two latents have equal child sets the earlier-declared one is kept.
pub fn absorb_nested_latents(dag: &HiddenDag) -> Result<(HiddenDag, RewriteLog)> {
    let mut s = Session::new(dag);
    loop {
        let g = s.current()?;
        let latents = g.latents();
        if let Some(&u) = latents
            .iter()
            .find(|&&u| g.observed_children(u).len() < 2)
        {
            let un = g.name(u).to_string();
            let count = g.observed_children(u).len();
            s.step(
                "absorb",
                vec![un.clone()],
                format!("{un} has {count} observed child(ren) and is removed"),
                vec![remove_var(&un)],
            )?;
            continue;
        }
        let mut found = None;
        'outer: for &u in &latents {
            let cu = g.observed_children(u);
            for &o in &latents {
                if o == u {
                    continue;
                }
                let co = g.observed_children(o);
                if cu.is_subset(&co) && (cu != co || o < u) {
                    found = Some((u, o));
                    break 'outer;
                }
            }
        }
        let Some((u, o)) = found else { break };
        let (un, on) = (g.name(u).to_string(), g.name(o).to_string());
        let mut ops: Vec<EditOp> = g
            .children(u)
            .iter()
            .filter(|&&c| !g.has_edge(o, c))
            .map(|&c| add_edge(&on, g.name(c)))
            .collect();
        ops.push(remove_var(&un));
        s.step(
            "absorb",
            vec![un.clone(), on.clone()],
            format!(
                "observed children {} of {un} lie within those of {on}; {un} absorbed into {on}",
                braces(&names(&g, g.observed_children(u)))
            ),
            ops,
        )?;
    }
    s.finish()
}

/// Exogenization followed by absorption. The result satisfies both
/// structural conditions.
pub fn normalize(dag: &HiddenDag) -> Result<(HiddenDag, RewriteLog)> {
    let (g, mut log) = exogenize(dag)?;
    let (g, more) = absorb_nested_latents(&g)?;
    log.extend(more);
    Ok((g, log))
}

fn require_conditions(dag: &HiddenDag) -> Result<()> {
    let report = dag.validate_conditions();
    if report.is_ok() {
        Ok(())
    } else {
        Err(Error::Conditions(report.summary()))
    }
}

/// Replaces the latents of every district with c-degree at least two by one
/// fresh latent over the members that had a latent parent.
pub fn merge_district_latents(dag: &HiddenDag) -> Result<(HiddenDag, RewriteLog)> {
    require_conditions(dag)?;
    let mut s = Session::new(dag);
    for d in dag.districts() {
        if d.members.len() < 2 || d.latents.len() < 2 {
            continue;
        }
        let fresh = s.ed.fresh("merge");
        let mut ops = vec![EditOp::AddLatent {
            name: fresh.clone(),
        }];
        let confounded: Vec<VarId> = d
            .members
            .iter()
            .copied()
            .filter(|&w| dag.latent_parents(w).next().is_some())
            .collect();
        for &w in &confounded {
            ops.push(add_edge(&fresh, dag.name(w)));
        }
        let old = names(dag, d.latents.iter().copied());
        for u in &old {
            ops.push(remove_var(u));
        }
        let mut affected = old.clone();
        affected.push(fresh.clone());
        s.step(
            "merge",
            affected,
            format!(
                "latents {} of district {} merged into {fresh}",
                braces(&old),
                dag.fmt_set(&d.members)
            ),
            ops,
        )?;
    }
    s.finish()
}

fn observed_set(dag: &HiddenDag, set: &[VarId]) -> Result<BTreeSet<VarId>> {
    let mut out = BTreeSet::new();
    for &v in set {
        if v.0 >= dag.len() {
            return Err(Error::UnknownVariable(format!("#{}", v.0)));
        }
        if !dag.is_observed(v) {
            return Err(Error::NotObserved(dag.name(v).to_string()));
        }
        out.insert(v);
    }
    Ok(out)
}

fn require_latent(dag: &HiddenDag, u: VarId) -> Result<()> {
    if u.0 >= dag.len() {
        return Err(Error::UnknownVariable(format!("#{}", u.0)));
    }
    if dag.is_observed(u) {
        return Err(Error::NotLatent(dag.name(u).to_string()));
    }
    Ok(())
}

fn parents_of(dag: &HiddenDag, set: &BTreeSet<VarId>) -> BTreeSet<VarId> {
    set.iter()
        .flat_map(|&v| dag.parents(v).iter().copied())
        .collect()
}

/// Replaces every path `c <- u -> d` with `c -> d`. Edges from `u` into `C`
/// are dropped; `u` is removed once fewer than two observed children remain.
pub fn replace_latent_with_edges(
    dag: &HiddenDag,
    u: VarId,
    c_set: &[VarId],
    d_set: &[VarId],
) -> Result<(HiddenDag, RewriteLog)> {
    require_latent(dag, u)?;
    require_conditions(dag)?;
    let c = observed_set(dag, c_set)?;
    let d = observed_set(dag, d_set)?;
    if !c.is_disjoint(&d) {
        return Err(Error::Overlap("replace"));
    }
    let un = dag.name(u).to_string();
    let union: BTreeSet<VarId> = c.union(&d).copied().collect();
    if union != dag.observed_children(u) {
        return Err(Error::Precondition(format!(
            "bullet 1: C u D = {} differs from the observed children {} of {un}",
            dag.fmt_set(&union),
            dag.fmt_set(&dag.observed_children(u))
        )));
    }
    for &cv in &c {
        if let Some(other) = dag.latent_parents(cv).find(|&o| o != u) {
            return Err(Error::Precondition(format!(
                "bullet 2: {} in C is also a child of latent {}",
                dag.name(cv),
                dag.name(other)
            )));
        }
    }
    let pa_c = parents_of(dag, &c);
    for &dv in &d {
        let pa_d: BTreeSet<VarId> = dag.parents(dv).iter().copied().collect();
        if let Some(&missing) = pa_c.difference(&pa_d).next() {
            return Err(Error::Precondition(format!(
                "bullet 3: Pa(C) is not contained in Pa({}); {} is missing",
                dag.name(dv),
                dag.name(missing)
            )));
        }
    }
    let mut s = Session::new(dag);
    let mut ops = Vec::new();
    for &cv in &c {
        for &dv in &d {
            if !dag.has_edge(cv, dv) {
                ops.push(add_edge(dag.name(cv), dag.name(dv)));
            }
        }
        ops.push(remove_edge(&un, dag.name(cv)));
    }
    if d.len() < 2 {
        ops.push(remove_var(&un));
    }
    let mut affected = vec![un.clone()];
    affected.extend(names(dag, union.iter().copied()));
    s.step(
        "replace",
        affected,
        format!(
            "paths c <- {un} -> d replaced by c -> d for c in {}, d in {}",
            dag.fmt_set(&c),
            dag.fmt_set(&d)
        ),
        ops,
    )?;
    s.finish()
}

/// Adds `w1 -> w2` when `Pa(w1)` is contained in `Pa(w2)` and every latent
/// over `w1` is also over `w2`.
pub fn hlp_add_edge(dag: &HiddenDag, w1: VarId, w2: VarId) -> Result<(HiddenDag, RewriteLog)> {
    observed_set(dag, &[w1, w2])?;
    require_conditions(dag)?;
    let (n1, n2) = (dag.name(w1).to_string(), dag.name(w2).to_string());
    if w1 == w2 {
        return Err(Error::Overlap("hlp"));
    }
    if dag.has_edge(w1, w2) {
        return Err(Error::Precondition(format!("edge {n1} -> {n2} already present")));
    }
    let pa2: BTreeSet<VarId> = dag.parents(w2).iter().copied().collect();
    if let Some(&p) = dag.parents(w1).iter().find(|p| !pa2.contains(p)) {
        return Err(Error::Precondition(format!(
            "bullet 1: parent {} of {n1} is not a parent of {n2}",
            dag.name(p)
        )));
    }
    if let Some(u) = dag.latent_parents(w1).find(|&u| !dag.has_edge(u, w2)) {
        return Err(Error::Precondition(format!(
            "bullet 2: latent {} is over {n1} but not over {n2}",
            dag.name(u)
        )));
    }
    let mut s = Session::new(dag);
    s.step(
        "hlp",
        vec![n1.clone(), n2.clone()],
        format!("added edge {n1} -> {n2}"),
        vec![add_edge(&n1, &n2)],
    )?;
    s.finish()
}

/// Splits the latents `U1..Uk` into fresh latents over `Ci = Chobs(Ui) \ D`
/// and one over `D`. `D` defaults to the intersection of the observed child
/// sets; an explicit `shared` set must lie inside that intersection. Latents
/// outside the list are kept.
pub fn strong_face_split(
    dag: &HiddenDag,
    latents: &[VarId],
    shared: Option<&[VarId]>,
) -> Result<(HiddenDag, RewriteLog)> {
    if latents.is_empty() {
        return Err(Error::Precondition("no latents given".into()));
    }
    for &u in latents {
        require_latent(dag, u)?;
    }
    let list: BTreeSet<VarId> = latents.iter().copied().collect();
    if list.len() != latents.len() {
        return Err(Error::Overlap("face-split"));
    }
    require_conditions(dag)?;
    let mut common = dag.observed_children(latents[0]);
    for &u in &latents[1..] {
        common = common
            .intersection(&dag.observed_children(u))
            .copied()
            .collect();
    }
    let d = match shared {
        None => common,
        Some(set) => {
            let d = observed_set(dag, set)?;
            if let Some(&x) = d.difference(&common).next() {
                return Err(Error::Precondition(format!(
                    "shared vertex {} is not a child of every listed latent",
                    dag.name(x)
                )));
            }
            d
        }
    };
    if d.is_empty() {
        return Err(Error::Precondition(
            "the listed latents share no observed child".into(),
        ));
    }
    let cs: Vec<BTreeSet<VarId>> = latents
        .iter()
        .map(|&u| dag.observed_children(u).difference(&d).copied().collect())
        .collect();
    for ci in &cs {
        let mut need = parents_of(dag, ci);
        need.extend(ci.iter().copied());
        for &dv in &d {
            let pa_d: BTreeSet<VarId> = dag.parents(dv).iter().copied().collect();
            if let Some(&w) = need.difference(&pa_d).next() {
                return Err(Error::Precondition(format!(
                    "bullet 1: Pa(C) u C for C = {} is not contained in Pa({}); witness {}",
                    dag.fmt_set(ci),
                    dag.name(dv),
                    dag.name(w)
                )));
            }
        }
    }
    let all_c: BTreeSet<VarId> = cs.iter().flatten().copied().collect();
    for uj in dag.latents() {
        let ch = dag.observed_children(uj);
        if let Some(&c) = ch.intersection(&all_c).next() {
            if let Some(&w) = d.difference(&ch).next() {
                return Err(Error::Precondition(format!(
                    "bullet 2 (checked over all latents): {} is over {} but not over {}; witness {}",
                    dag.name(uj),
                    dag.name(c),
                    dag.name(w),
                    dag.name(w)
                )));
            }
        }
    }
    let mut s = Session::new(dag);
    let mut ops = Vec::new();
    let mut groups: Vec<&BTreeSet<VarId>> = cs.iter().collect();
    groups.push(&d);
    let mut fresh_names = Vec::new();
    let mut scratch = s.ed.clone();
    for g in groups.into_iter().filter(|g| !g.is_empty()) {
        let name = scratch.fresh("split");
        scratch.apply(&EditOp::AddLatent { name: name.clone() })?;
        ops.push(EditOp::AddLatent { name: name.clone() });
        for &v in g {
            ops.push(add_edge(&name, dag.name(v)));
        }
        fresh_names.push(format!("{name}->{}", dag.fmt_set(g)));
    }
    let old = names(dag, latents.iter().copied());
    for u in &old {
        ops.push(remove_var(u));
    }
    s.step(
        "face-split",
        old.clone(),
        format!(
            "latents {} sharing {} split into {}",
            braces(&old),
            dag.fmt_set(&d),
            fresh_names.join(", ")
        ),
        ops,
    )?;
    s.finish()
}
