//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mera_core::graph::HiddenDag;
use mera_core::polyhedra::linalg::{integer_row, rref};
use mera_core::rational::Rational;
use mera_core::response::{build_functional_system, FunctionalSystem};
use mera_core::table::JointTable;
use mera_core::VarId;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Rng8 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng8 {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn q(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

// ---------------------------------------------------------------- simplex

#[derive(Debug, PartialEq)]
pub enum Lp {
    Infeasible,
    Unbounded,
    Optimal(Rational, Vec<Rational>),
}

struct Tableau {
    /// rows of `[coeffs | rhs]`
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / &self.t[r][c];
        for x in self.t[r].iter_mut() {
            *x *= &inv;
        }
        let pr = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pr) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj . x` over the columns in `allowed`.
    /// Returns false when unbounded.
    fn run(&mut self, obj: &[Rational], allowed: &[bool]) -> bool {
        let n = obj.len();
        // reduced costs, kept current across pivots
        let mut rc: Vec<Rational> = obj.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if obj[b].is_zero() {
                continue;
            }
            for j in 0..n {
                if !self.t[i][j].is_zero() {
                    rc[j] -= &obj[b] * &self.t[i][j];
                }
            }
        }
        // Dantzig's rule, switching to Bland's after a degenerate stall
        let mut stall = 0usize;
        loop {
            let entering = if stall < 50 {
                (0..n)
                    .filter(|&j| allowed[j] && rc[j].is_positive())
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if rc[b] >= rc[j] => Some(b),
                        _ => Some(j),
                    })
            } else {
                (0..n).find(|&j| allowed[j] && rc[j].is_positive())
            };
            let Some(j) = entering else { return true };
            let mut best: Option<(Rational, usize, usize)> = None;
            for i in 0..self.t.len() {
                if self.t[i][j].is_positive() {
                    let ratio = &self.t[i][n] / &self.t[i][j];
                    let better = match &best {
                        None => true,
                        Some((r, _, b)) => ratio < *r || (ratio == *r && self.basis[i] < *b),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((ratio, i, _)) = best else { return false };
            if ratio.is_zero() {
                stall += 1;
            } else {
                stall = 0;
            }
            self.pivot(i, j);
            let f = rc[j].clone();
            for (x, p) in rc.iter_mut().zip(&self.t[i]) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
    }
}

/// Exact two-phase simplex for `max c.x` with `A x = b`, `x >= 0`.
pub fn lp_standard(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Lp {
    let n = c.len();
    let m = a.len();
    // columns: x (n), artificials (m), rhs
    let mut t = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let neg = b[i].is_negative();
        let mut r: Vec<Rational> = row.iter().map(|x| if neg { -x } else { x.clone() }).collect();
        for k in 0..m {
            r.push(if k == i { q(1) } else { q(0) });
        }
        r.push(if neg { -&b[i] } else { b[i].clone() });
        t.push(r);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
    };
    let total = n + m;
    let phase1: Vec<Rational> = (0..total).map(|j| if j < n { q(0) } else { q(-1) }).collect();
    tab.run(&phase1, &vec![true; total]);
    let infeas: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .map(|(i, _)| tab.t[i][total].clone())
        .sum();
    if infeas.is_positive() {
        return Lp::Infeasible;
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.t[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut obj = c.to_vec();
    obj.extend((0..m).map(|_| q(0)));
    let allowed: Vec<bool> = (0..total).map(|j| j < n).collect();
    if !tab.run(&obj, &allowed) {
        return Lp::Unbounded;
    }
    let mut x = vec![q(0); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab.t[i][total].clone();
        }
    }
    let val = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Lp::Optimal(val, x)
}

/// Does `{A_le x <= b_le, A_eq x = b_eq}` (assumed feasible) imply
/// `c.x <= d`? Affine Farkas: some `l >= 0`, `m` free with
/// `l A_le + m A_eq = c` and `l b_le + m b_eq <= d`.
pub fn implied(
    c: &[Rational],
    d: &Rational,
    a_le: &[Vec<Rational>],
    b_le: &[Rational],
    a_eq: &[Vec<Rational>],
    b_eq: &[Rational],
) -> bool {
    match support(c, a_le, b_le, a_eq, b_eq) {
        Some(v) => v <= *d,
        None => false,
    }
}

/// `max c.x` over `{A_le x <= b_le, A_eq x = b_eq}` (assumed feasible)
/// through the dual `min l b_le + m b_eq`; `None` when unbounded.
pub fn support(
    c: &[Rational],
    a_le: &[Vec<Rational>],
    b_le: &[Rational],
    a_eq: &[Vec<Rational>],
    b_eq: &[Rational],
) -> Option<Rational> {
    let n = c.len();
    // columns: l (one per inequality), m+ and m- (one per equality each)
    let a: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            a_le.iter()
                .map(|r| r[j].clone())
                .chain(a_eq.iter().map(|r| r[j].clone()))
                .chain(a_eq.iter().map(|r| -&r[j]))
                .collect()
        })
        .collect();
    let obj: Vec<Rational> = b_le
        .iter()
        .map(|x| -x)
        .chain(b_eq.iter().map(|x| -x))
        .chain(b_eq.iter().cloned())
        .collect();
    match lp_standard(&obj, &a, c) {
        Lp::Optimal(v, _) => Some(-v),
        _ => None,
    }
}

/// Is `p` a convex combination of `points`?
pub fn in_hull(points: &[Vec<Rational>], p: &[Rational]) -> bool {
    if points.is_empty() {
        return false;
    }
    let d = p.len();
    let mut a: Vec<Vec<Rational>> = (0..d)
        .map(|i| points.iter().map(|x| x[i].clone()).collect())
        .collect();
    a.push(vec![q(1); points.len()]);
    let mut b = p.to_vec();
    b.push(q(1));
    lp_standard(&vec![q(0); points.len()], &a, &b) != Lp::Infeasible
}

/// Is there `r >= 0` with `B r = p`?
pub fn response_feasible(sys: &FunctionalSystem, p: &[Rational]) -> Option<Vec<Rational>> {
    let dense = sys.dense();
    let a: Vec<Vec<Rational>> = dense
        .iter()
        .map(|row| row.iter().map(|&x| q(x as i64)).collect())
        .collect();
    match lp_standard(&vec![q(0); sys.n_cols()], &a, p) {
        Lp::Optimal(_, r) => Some(r),
        _ => None,
    }
}

// ----------------------------------------------------------- d-separation

/// Brute force over every simple path of the skeleton.
pub fn dsep_by_paths(dag: &HiddenDag, a: &BTreeSet<VarId>, b: &BTreeSet<VarId>, z: &BTreeSet<VarId>) -> bool {
    let n = dag.len();
    let desc: Vec<BTreeSet<usize>> = (0..n)
        .map(|v| {
            let mut seen = BTreeSet::from([v]);
            let mut stack = vec![v];
            while let Some(x) = stack.pop() {
                for c in dag.children(VarId(x)) {
                    if seen.insert(c.0) {
                        stack.push(c.0);
                    }
                }
            }
            seen
        })
        .collect();
    let nbrs: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let mut s: BTreeSet<usize> = dag.children(VarId(v)).iter().map(|c| c.0).collect();
            s.extend(dag.parents(VarId(v)).iter().map(|p| p.0));
            s.into_iter().collect()
        })
        .collect();
    let zs: BTreeSet<usize> = z.iter().map(|v| v.0).collect();
    let active = |path: &[usize]| -> bool {
        path.windows(3).all(|w| {
            let (p, m, c) = (w[0], w[1], w[2]);
            let into_from_p = dag.has_edge(VarId(p), VarId(m));
            let into_from_c = dag.has_edge(VarId(c), VarId(m));
            if into_from_p && into_from_c {
                desc[m].iter().any(|d| zs.contains(d))
            } else {
                !zs.contains(&m)
            }
        })
    };
    fn extend(
        path: &mut Vec<usize>,
        targets: &BTreeSet<usize>,
        nbrs: &[Vec<usize>],
        active: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if path.len() > 1 && targets.contains(&last) {
            return active(path);
        }
        if path.len() >= 3 && !active(&path[path.len() - 3..]) {
            return false;
        }
        for &nb in &nbrs[last] {
            if path.contains(&nb) {
                continue;
            }
            path.push(nb);
            let found = extend(path, targets, nbrs, active);
            path.pop();
            if found {
                return true;
            }
        }
        false
    }
    let targets: BTreeSet<usize> = b.iter().map(|v| v.0).collect();
    !a.iter().any(|s| extend(&mut vec![s.0], &targets, &nbrs, &active))
}

// ------------------------------------------------------------- generators

/// Random DAG text over `n` nodes, some latent, edges along a random order.
pub fn random_graph_text(rng: &mut Rng8, n: usize, edge_prob: f64, latent_prob: f64) -> String {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let latent: Vec<bool> = (0..n).map(|_| rng.gen_bool(latent_prob)).collect();
    let name = |i: usize| if latent[i] { format!("L{i}") } else { format!("V{i}") };
    let mut text = String::new();
    for i in 0..n {
        if latent[i] {
            text.push_str(&format!("latent {}\n", name(i)));
        } else {
            text.push_str(&format!("var {} {}\n", name(i), rng.gen_range(2..=3)));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(edge_prob) {
                text.push_str(&format!("edge {} {}\n", name(order[i]), name(order[j])));
            }
        }
    }
    text
}

fn random_simplex(rng: &mut Rng8, k: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let s: i64 = w.iter().sum();
    w.into_iter().map(|x| Rational::new(x.into(), s.into())).collect()
}

/// Structural model with random conditional tables for every variable and
/// latent cardinalities in 2..=3, marginalized exactly onto the observed
/// variables.
pub fn latent_model_table(dag: &HiddenDag, rng: &mut Rng8) -> JointTable {
    let order = dag.full_topological_order();
    let card: Vec<usize> = (0..dag.len())
        .map(|v| {
            if dag.is_observed(VarId(v)) {
                dag.cardinality(VarId(v))
            } else {
                rng.gen_range(2..=3)
            }
        })
        .collect();
    // cpt[v][parent config] = distribution over v
    let cpt: Vec<Vec<Vec<Rational>>> = (0..dag.len())
        .map(|v| {
            let configs: usize = dag.parents(VarId(v)).iter().map(|p| card[p.0]).product();
            (0..configs).map(|_| random_simplex(rng, card[v])).collect()
        })
        .collect();
    let observed = dag.observed();
    let latents = dag.latents();
    let latent_cards: Vec<usize> = latents.iter().map(|u| card[u.0]).collect();
    let n_latent: usize = latent_cards.iter().product();
    JointTable::from_fn(dag, |vals| {
        let mut value = vec![0usize; dag.len()];
        for (v, &x) in observed.iter().zip(vals) {
            value[v.0] = x;
        }
        let mut total = q(0);
        for li in 0..n_latent {
            let mut rest = li;
            for (u, &c) in latents.iter().zip(&latent_cards) {
                value[u.0] = rest % c;
                rest /= c;
            }
            let mut p = q(1);
            for &v in &order {
                let cfg = dag
                    .parents(v)
                    .iter()
                    .fold(0, |acc, pa| acc * card[pa.0] + value[pa.0]);
                p *= &cpt[v.0][cfg][value[v.0]];
            }
            total += p;
        }
        total
    })
    .expect("model distribution is a probability table")
}

/// Random distribution over the joint responses of each district,
/// pushed through `B` and combined across districts. Requires c-degree 1.
pub fn response_model_table(dag: &HiddenDag, rng: &mut Rng8) -> JointTable {
    let systems: Vec<FunctionalSystem> = dag
        .districts()
        .iter()
        .map(|d| build_functional_system(dag, d, u128::MAX).expect("c-degree one"))
        .collect();
    let stars: Vec<Vec<Rational>> = systems
        .iter()
        .map(|sys| {
            // full support keeps every conditioning event positive
            let cols: Vec<usize> = if sys.n_cols() <= 4096 {
                (0..sys.n_cols()).collect()
            } else {
                (0..64).map(|_| rng.gen_range(0..sys.n_cols())).collect()
            };
            let weights = random_simplex(rng, cols.len());
            let mut p = vec![q(0); sys.n_rows()];
            for (w, col) in weights.into_iter().zip(cols) {
                for row in sys.column_support(col) {
                    p[row] += &w;
                }
            }
            p
        })
        .collect();
    let observed = dag.observed();
    JointTable::from_fn(dag, |vals| {
        let value: BTreeMap<VarId, usize> = observed.iter().copied().zip(vals.iter().copied()).collect();
        systems
            .iter()
            .zip(&stars)
            .map(|(sys, p)| {
                let a: Vec<usize> = sys.w1_order.iter().map(|v| value[v]).collect();
                let b: Vec<usize> = sys.w2_order.iter().map(|v| value[v]).collect();
                p[sys.row_of(&a, &b)].clone()
            })
            .product()
    })
    .expect("model distribution is a probability table")
}

// ----------------------------------------------------- row equivalence

/// Affine row `coeffs . p <= rhs` stored as `[coeffs..., rhs]`.
pub type Affine = Vec<Rational>;

pub fn affine(coeffs: &[BigInt], rhs: &BigInt) -> Affine {
    coeffs
        .iter()
        .chain(std::iter::once(rhs))
        .map(|x| Rational::from_integer(x.clone()))
        .collect()
}

/// Reduces `v` modulo the span of `eqs`, then scales to coprime integers
/// keeping the sign.
pub struct EqReducer {
    basis: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

impl EqReducer {
    pub fn new(eqs: &[Affine]) -> Self {
        let mut basis = eqs.to_vec();
        let pivots = rref(&mut basis);
        EqReducer { basis, pivots }
    }

    pub fn reduce(&self, v: &Affine) -> Vec<BigInt> {
        let mut v = v.clone();
        for (row, &c) in self.basis.iter().zip(&self.pivots) {
            if v[c].is_zero() {
                continue;
            }
            let f = v[c].clone();
            for (x, r) in v.iter_mut().zip(row) {
                *x -= &f * r;
            }
        }
        integer_row(&v)
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Builds a star-probability row from terms `(coeff, w1 partial assignment,
/// w2 assignment)` given by variable name. Unlisted district members are
/// summed out.
pub fn star_row(
    dag: &HiddenDag,
    sys: &FunctionalSystem,
    terms: &[(i64, &[(&str, usize)], &[(&str, usize)])],
    rhs: i64,
) -> Affine {
    let mut v = vec![q(0); sys.n_rows() + 1];
    for (coeff, w1, w2) in terms {
        let fixed: BTreeMap<VarId, usize> = w1
            .iter()
            .chain(w2.iter())
            .map(|(n, x)| (dag.id(n).expect("name"), *x))
            .collect();
        for row in 0..sys.n_rows() {
            let (a, b) = sys.row_label(row);
            let ok = sys
                .w1_order
                .iter()
                .zip(&a)
                .chain(sys.w2_order.iter().zip(&b))
                .all(|(v, x)| fixed.get(v).is_none_or(|y| y == x));
            if ok {
                v[row] += q(*coeff);
            }
        }
    }
    v[sys.n_rows()] = q(rhs);
    v
}

/// Block-sum rows `sum_w1 p(w1|w2) = 1` for every block.
pub fn normalization_rows(sys: &FunctionalSystem) -> Vec<Affine> {
    let n1 = sys.block_size();
    (0..sys.n_blocks())
        .map(|blk| {
            let mut v = vec![q(0); sys.n_rows() + 1];
            for x in v.iter_mut().skip(blk * n1).take(n1) {
                *x = q(1);
            }
            v[sys.n_rows()] = q(1);
            v
        })
        .collect()
}

pub fn rank_of(rows: &[Affine]) -> usize {
    mera_core::polyhedra::linalg::rank(&rows.to_vec())
}
