//! Exact polyhedral computation: vertex-to-halfspace conversion and back,
//! canonical H-representations, and extreme points of simplex products.

pub mod dd;
pub mod linalg;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub use dd::InsertionOrder;

/// Convex hull generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VRep {
    points: Vec<Vec<Rational>>,
    dim: usize,
}

impl VRep {
    pub fn new(points: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptyInput)?.len();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(VRep { points, dim })
    }

    pub fn from_integers(points: &[Vec<i64>]) -> Result<Self> {
        VRep::new(
            points
                .iter()
                .map(|p| p.iter().map(|&x| Rational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn points(&self) -> &[Vec<Rational>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sorted, duplicate-free copy.
    pub fn canonical(&self) -> VRep {
        let mut points = self.points.clone();
        points.sort();
        points.dedup();
        VRep {
            points,
            dim: self.dim,
        }
    }
}

/// One row `coeffs . p (<= | =) rhs` with integer entries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Row {
    pub coeffs: Vec<BigInt>,
    pub rhs: BigInt,
}

impl Row {
    pub fn new(coeffs: Vec<BigInt>, rhs: BigInt) -> Self {
        Row { coeffs, rhs }
    }

    pub fn from_i64(coeffs: &[i64], rhs: i64) -> Self {
        Row {
            coeffs: coeffs.iter().map(|&x| BigInt::from(x)).collect(),
            rhs: BigInt::from(rhs),
        }
    }

    /// Integer row of gcd 1 proportional (positively) to a rational one.
    pub fn from_rational(coeffs: &[Rational], rhs: &Rational) -> Self {
        let mut all = coeffs.to_vec();
        all.push(rhs.clone());
        let mut ints = linalg::integer_row(&all);
        let rhs = ints.pop().expect("rhs");
        Row { coeffs: ints, rhs }
    }

    pub fn lhs(&self, p: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(p)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, x)| Rational::from_integer(a.clone()) * x)
            .sum()
    }

    fn reduced(self) -> Self {
        let mut all = self.coeffs;
        all.push(self.rhs);
        let mut all = linalg::reduce_gcd(all);
        let rhs = all.pop().expect("rhs");
        Row { coeffs: all, rhs }
    }

    fn negated(self) -> Self {
        Row {
            coeffs: self.coeffs.into_iter().map(|x| -x).collect(),
            rhs: -self.rhs,
        }
    }

    pub fn is_trivial_zero(&self) -> bool {
        linalg::is_zero_vec(&self.coeffs)
    }
}

/// `ineq: H_i p <= b_i`, `eq: H_e p = b_e`, canonicalized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HRep {
    pub dim: usize,
    pub ineq: Vec<Row>,
    pub eq: Vec<Row>,
}

impl HRep {
    /// Canonical form: integer rows of gcd 1, equalities with a negative
    /// leading coefficient, all-zero tautologies dropped, rows sorted and
    /// deduplicated.
    pub fn new(dim: usize, ineq: Vec<Row>, eq: Vec<Row>) -> Result<Self> {
        for r in ineq.iter().chain(&eq) {
            if r.coeffs.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.coeffs.len(),
                });
            }
        }
        let mut ineq: Vec<Row> = ineq
            .into_iter()
            .map(Row::reduced)
            .filter(|r| !(r.is_trivial_zero() && !r.rhs.is_negative()))
            .collect();
        let mut eq: Vec<Row> = eq
            .into_iter()
            .map(Row::reduced)
            .map(|r| {
                if linalg::first_nonzero_negative(&r.coeffs)
                    || (r.is_trivial_zero() && !r.rhs.is_positive())
                {
                    r
                } else {
                    r.negated()
                }
            })
            .filter(|r| !(r.is_trivial_zero() && r.rhs.is_zero()))
            .collect();
        ineq.sort();
        ineq.dedup();
        eq.sort();
        eq.dedup();
        Ok(HRep { dim, ineq, eq })
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.ineq
            .iter()
            .all(|r| r.lhs(p) <= Rational::from_integer(r.rhs.clone()))
            && self
                .eq
                .iter()
                .all(|r| r.lhs(p) == Rational::from_integer(r.rhs.clone()))
    }

    /// `{"dim", "ineq": [{"coeffs", "rhs"}], "eq": [...]}` with rationals as
    /// strings.
    pub fn to_json(&self) -> Value {
        let rows = |rs: &[Row]| -> Vec<Value> {
            rs.iter()
                .map(|r| {
                    json!({
                        "coeffs": r.coeffs.iter().map(ToString::to_string).collect::<Vec<_>>(),
                        "rhs": r.rhs.to_string(),
                    })
                })
                .collect()
        };
        json!({ "dim": self.dim, "ineq": rows(&self.ineq), "eq": rows(&self.eq) })
    }

    /// The conventional polyhedral text format: rows `[b, -H]` meaning
    /// `b - H p >= 0`, equalities listed on the linearity line.
    pub fn to_cdd(&self) -> String {
        let mut out = String::from("H-representation\n");
        let n_ineq = self.ineq.len();
        if !self.eq.is_empty() {
            let idx: Vec<String> = (0..self.eq.len())
                .map(|k| (n_ineq + k + 1).to_string())
                .collect();
            let _ = writeln!(out, "linearity {} {}", self.eq.len(), idx.join(" "));
        }
        out.push_str("begin\n");
        let _ = writeln!(
            out,
            " {} {} integer",
            n_ineq + self.eq.len(),
            self.dim + 1
        );
        for r in self.ineq.iter().chain(&self.eq) {
            let mut cells = vec![r.rhs.to_string()];
            cells.extend(r.coeffs.iter().map(|x| (-x).to_string()));
            let _ = writeln!(out, " {}", cells.join(" "));
        }
        out.push_str("end\n");
        out
    }
}

/// Canonical H-representation of the convex hull of `v`.
pub fn v_to_h(v: &VRep) -> Result<HRep> {
    v_to_h_with(v, InsertionOrder::default())
}

pub fn v_to_h_with(v: &VRep, order: InsertionOrder) -> Result<HRep> {
    let v = v.canonical();
    let n = v.dim;
    let pts = &v.points;
    // Equalities: all (a, b) with a . q = b for every point.
    let lifted: linalg::Matrix = pts
        .iter()
        .map(|q| {
            let mut r = q.clone();
            r.push(-Rational::one());
            r
        })
        .collect();
    let mut eqs = linalg::nullspace(&lifted, n + 1);
    let right_to_left: Vec<usize> = (0..n).rev().collect();
    let pivots = linalg::rref_with_order(&mut eqs, &right_to_left);
    let eq_rows: Vec<Row> = eqs
        .iter()
        .map(|r| Row::from_rational(&r[..n], &r[n]))
        .collect();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();

    let mut ineq_rows = Vec::new();
    if !free.is_empty() {
        let cone: Vec<Vec<BigInt>> = pts
            .iter()
            .map(|q| {
                let mut r = vec![Rational::one()];
                r.extend(free.iter().map(|&c| q[c].clone()));
                linalg::integer_row(&r)
            })
            .collect();
        for ray in dd::extreme_rays(&cone, order)? {
            let mut coeffs = vec![BigInt::zero(); n];
            for (k, &c) in free.iter().enumerate() {
                coeffs[c] = -ray[k + 1].clone();
            }
            ineq_rows.push(Row::new(coeffs, ray[0].clone()));
        }
    }
    HRep::new(n, ineq_rows, eq_rows)
}

/// Vertices of a bounded polytope. Fails with `Unbounded` if the
/// representation has a recession direction and `Infeasible` if it is empty.
pub fn h_to_v(h: &HRep) -> Result<VRep> {
    let n = h.dim;
    let he: linalg::Matrix = h.eq.iter().map(|r| linalg::to_rational(&r.coeffs)).collect();
    let be: Vec<Rational> = h.eq.iter().map(|r| Rational::from_integer(r.rhs.clone())).collect();
    let p0 = if he.is_empty() {
        vec![Rational::zero(); n]
    } else {
        linalg::solve(&he, &be, n).ok_or(Error::Infeasible)?
    };
    let basis = if he.is_empty() {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                    .collect()
            })
            .collect()
    } else {
        linalg::nullspace(&he, n)
    };
    let k = basis.len();
    if k == 0 {
        return if h.contains(&p0) {
            VRep::new(vec![p0])
        } else {
            Err(Error::Infeasible)
        };
    }
    // Homogenized system in (t0, t): t0 >= 0 and (b - H p0) t0 - H N t >= 0.
    let mut cone: Vec<Vec<BigInt>> = Vec::with_capacity(h.ineq.len() + 1);
    let mut head = vec![Rational::zero(); k + 1];
    head[0] = Rational::one();
    cone.push(linalg::integer_row(&head));
    for r in &h.ineq {
        let a = linalg::to_rational(&r.coeffs);
        let slack = Rational::from_integer(r.rhs.clone())
            - a.iter().zip(&p0).map(|(x, y)| x * y).sum::<Rational>();
        let mut row = vec![slack];
        for b in &basis {
            row.push(-a.iter().zip(b).map(|(x, y)| x * y).sum::<Rational>());
        }
        if row.iter().all(Zero::is_zero) {
            continue;
        }
        cone.push(linalg::integer_row(&row));
    }
    let rays = dd::extreme_rays(&cone, InsertionOrder::Index)?;
    let mut points = Vec::new();
    for ray in rays {
        if ray[0].is_zero() {
            return Err(Error::Unbounded);
        }
        let t0 = Rational::from_integer(ray[0].clone());
        let mut p = p0.clone();
        for (j, b) in basis.iter().enumerate() {
            let t = Rational::from_integer(ray[j + 1].clone()) / &t0;
            for (x, bi) in p.iter_mut().zip(b) {
                *x += &t * bi;
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(Error::Infeasible);
    }
    Ok(VRep::new(points)?.canonical())
}

/// Index of the chosen coordinate in each block, first block fastest.
pub fn simplex_product_choices(block_sizes: &[usize]) -> Vec<Vec<usize>> {
    let count: usize = block_sizes.iter().product();
    (0..count)
        .map(|mut i| {
            block_sizes
                .iter()
                .map(|&s| {
                    let c = i % s;
                    i /= s;
                    c
                })
                .collect()
        })
        .collect()
}

/// Concatenations of one unit vector per block; the first block's choice
/// varies fastest.
pub fn simplex_product_extreme_points(block_sizes: &[usize]) -> Vec<Vec<Rational>> {
    let n: usize = block_sizes.iter().sum();
    simplex_product_choices(block_sizes)
        .into_iter()
        .map(|choice| {
            let mut v = vec![Rational::zero(); n];
            let mut offset = 0;
            for (c, &s) in choice.iter().zip(block_sizes) {
                v[offset + c] = Rational::one();
                offset += s;
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn row(c: &[i64], b: i64) -> Row {
        Row::from_i64(c, b)
    }

    #[test]
    fn segment() {
        let h = v_to_h(&VRep::from_integers(&[vec![0], vec![1]]).unwrap()).unwrap();
        assert!(h.eq.is_empty());
        assert_eq!(h.ineq, vec![row(&[-1], 0), row(&[1], 1)]);
    }

    #[test]
    fn single_point_gives_equalities() {
        let h = v_to_h(&VRep::from_integers(&[vec![2, 3]]).unwrap()).unwrap();
        assert!(h.ineq.is_empty());
        assert_eq!(h.eq, vec![row(&[-1, 0], -2), row(&[0, -1], -3)]);
    }

    #[test]
    fn simplex_in_three_d() {
        let v = VRep::from_integers(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let h = v_to_h(&v).unwrap();
        assert_eq!(h.eq, vec![row(&[-1, -1, -1], -1)]);
        assert_eq!(h.ineq, vec![row(&[-1, 0, 0], 0), row(&[0, -1, 0], 0)].into_iter().chain([row(&[1, 1, 0], 1)]).collect::<Vec<_>>());
        let back = h_to_v(&h).unwrap();
        assert_eq!(back, v.canonical());
    }

    #[test]
    fn cube_round_trip() {
        let mut ineq = Vec::new();
        for i in 0..3 {
            let mut c = [0i64; 3];
            c[i] = 1;
            ineq.push(row(&c, 1));
            c[i] = -1;
            ineq.push(row(&c, 0));
        }
        let h = HRep::new(3, ineq, vec![]).unwrap();
        let v = h_to_v(&h).unwrap();
        assert_eq!(v.points().len(), 8);
        assert_eq!(v_to_h(&v).unwrap(), h);
    }

    #[test]
    fn four_simplex_vertices() {
        let ineq = (0..4)
            .map(|i| {
                let mut c = [0i64; 4];
                c[i] = -1;
                row(&c, 0)
            })
            .collect();
        let h = HRep::new(4, ineq, vec![row(&[1, 1, 1, 1], 1)]).unwrap();
        let v = h_to_v(&h).unwrap();
        let units: Vec<Vec<Rational>> = (0..4)
            .map(|i| (0..4).map(|j| int((i == j) as i64)).collect())
            .collect();
        let mut units = units;
        units.sort();
        assert_eq!(v.points(), &units[..]);
    }

    #[test]
    fn unbounded_and_infeasible() {
        let h = HRep::new(1, vec![row(&[-1], 0)], vec![]).unwrap();
        assert_eq!(h_to_v(&h), Err(Error::Unbounded));
        let h = HRep::new(1, vec![row(&[-1], -2), row(&[1], 1)], vec![]).unwrap();
        assert_eq!(h_to_v(&h), Err(Error::Infeasible));
    }

    #[test]
    fn canonical_forms() {
        let h = HRep::new(
            2,
            vec![row(&[2, 4], 6), row(&[1, 2], 3), row(&[0, 0], 1)],
            vec![row(&[3, -3], 3)],
        )
        .unwrap();
        assert_eq!(h.ineq, vec![row(&[1, 2], 3)]);
        assert_eq!(h.eq, vec![row(&[-1, 1], -1)]);
        assert!(VRep::new(vec![]).is_err());
        assert!(matches!(
            VRep::new(vec![vec![int(1)], vec![int(1), int(2)]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn simplex_products() {
        assert_eq!(
            simplex_product_extreme_points(&[2]),
            vec![vec![int(1), int(0)], vec![int(0), int(1)]]
        );
        let pts = simplex_product_extreme_points(&[2, 3]);
        assert_eq!(pts.len(), 6);
        assert!(pts.iter().all(|p| p.iter().filter(|x| !x.is_zero()).count() == 2));
        let pts = simplex_product_extreme_points(&[4, 4]);
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[1][1], int(1));
        assert_eq!(pts[1][4], int(1));
    }

    #[test]
    fn cdd_text() {
        let h = HRep::new(1, vec![row(&[1], 1), row(&[-1], 0)], vec![]).unwrap();
        assert_eq!(h.to_cdd(), "H-representation\nbegin\n 2 2 integer\n 0 1\n 1 -1\nend\n");
    }
}
