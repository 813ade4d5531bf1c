//! Double description method: extreme rays of a pointed cone
//! `{y : A y >= 0}` for an integer matrix `A` of full column rank.
//!
//! The computation runs in `i64` (products in `i128`), restarts in checked
//! `i128` if a value leaves that range, and in `BigInt` after that.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use smallvec::SmallVec;

use super::linalg;
use crate::error::{Error, Result};
use crate::rational::Rational;

type Bits = SmallVec<[u64; 2]>;

fn bits_new(m: usize) -> Bits {
    SmallVec::from_elem(0, m.div_ceil(64))
}

fn bit_set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn bits_and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_count(a: &Bits) -> u32 {
    a.iter().map(|x| x.count_ones()).sum()
}

fn bits_subset(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

pub(crate) trait DdNum: Clone + Send + Sync + Sized {
    fn from_big(b: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn signum(&self) -> i32;
    fn dot(a: &[Self], b: &[Self]) -> Option<Self>;
    /// `sp * n - sn * p`, divided by the gcd of its entries.
    fn combine(sp: &Self, n: &[Self], sn: &Self, p: &[Self]) -> Option<Vec<Self>>;
}

impl DdNum for i64 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i64()
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }

    fn signum(&self) -> i32 {
        i64::signum(*self) as i32
    }

    fn dot(a: &[Self], b: &[Self]) -> Option<Self> {
        let mut acc: i128 = 0;
        for (x, y) in a.iter().zip(b) {
            if *x != 0 && *y != 0 {
                acc = acc.checked_add(*x as i128 * *y as i128)?;
            }
        }
        i64::try_from(acc).ok()
    }

    fn combine(sp: &Self, n: &[Self], sn: &Self, p: &[Self]) -> Option<Vec<Self>> {
        let (sp, sn) = (*sp as i128, *sn as i128);
        let raw: Vec<i128> = n
            .iter()
            .zip(p)
            .map(|(&a, &b)| sp * a as i128 - sn * b as i128)
            .collect();
        let g = raw.iter().fold(0i128, |acc, &x| acc.gcd(&x));
        raw.into_iter()
            .map(|x| i64::try_from(if g > 1 { x / g } else { x }).ok())
            .collect()
    }
}

impl DdNum for i128 {
    fn from_big(b: &BigInt) -> Option<Self> {
        b.to_i128()
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }

    fn signum(&self) -> i32 {
        i128::signum(*self) as i32
    }

    fn dot(a: &[Self], b: &[Self]) -> Option<Self> {
        let mut acc: i128 = 0;
        for (x, y) in a.iter().zip(b) {
            if *x != 0 && *y != 0 {
                acc = acc.checked_add(x.checked_mul(*y)?)?;
            }
        }
        Some(acc)
    }

    fn combine(sp: &Self, n: &[Self], sn: &Self, p: &[Self]) -> Option<Vec<Self>> {
        let raw: Vec<i128> = n
            .iter()
            .zip(p)
            .map(|(&a, &b)| sp.checked_mul(a)?.checked_sub(sn.checked_mul(b)?))
            .collect::<Option<_>>()?;
        let g = raw.iter().fold(0i128, |acc, &x| acc.gcd(&x));
        Some(if g > 1 { raw.into_iter().map(|x| x / g).collect() } else { raw })
    }
}

impl DdNum for BigInt {
    fn from_big(b: &BigInt) -> Option<Self> {
        Some(b.clone())
    }

    fn to_big(&self) -> BigInt {
        self.clone()
    }

    fn signum(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }

    fn dot(a: &[Self], b: &[Self]) -> Option<Self> {
        Some(
            a.iter()
                .zip(b)
                .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                .map(|(x, y)| x * y)
                .sum(),
        )
    }

    fn combine(sp: &Self, n: &[Self], sn: &Self, p: &[Self]) -> Option<Vec<Self>> {
        let raw: Vec<BigInt> = n.iter().zip(p).map(|(a, b)| sp * a - sn * b).collect();
        Some(linalg::reduce_gcd(raw))
    }
}

struct Ray<T> {
    v: Vec<T>,
    zeros: Bits,
}

/// Row processing order after the initial simplicial cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InsertionOrder {
    /// Input order.
    #[default]
    Index,
    /// Next row is the one cutting off the fewest current rays.
    MinCutoff,
}

/// Extreme rays of `{y : a y >= 0}`, each primitive (integer, gcd 1).
/// Requires `a` to have full column rank.
pub fn extreme_rays(a: &[Vec<BigInt>], order: InsertionOrder) -> Result<Vec<Vec<BigInt>>> {
    let d = a.first().map_or(0, Vec::len);
    if a.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a.iter().map(Vec::len).find(|&l| l != d).unwrap_or(0),
        });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let basis = initial_rows(a, d).ok_or(Error::Unbounded)?;
    if let Some(small) = a
        .iter()
        .map(|r| r.iter().map(i64::from_big).collect::<Option<Vec<i64>>>())
        .collect::<Option<Vec<_>>>()
    {
        if let Some(rays) = run(&small, d, &basis, order) {
            return Ok(rays.iter().map(|r| r.iter().map(DdNum::to_big).collect()).collect());
        }
    }
    if let Some(mid) = a
        .iter()
        .map(|r| r.iter().map(i128::from_big).collect::<Option<Vec<i128>>>())
        .collect::<Option<Vec<_>>>()
    {
        if let Some(rays) = run(&mid, d, &basis, order) {
            return Ok(rays.iter().map(|r| r.iter().map(DdNum::to_big).collect()).collect());
        }
    }
    let big: Vec<Vec<BigInt>> = a.to_vec();
    Ok(run(&big, d, &basis, order).expect("big integer arithmetic cannot overflow"))
}

/// Greedily picks `d` linearly independent rows.
fn initial_rows(a: &[Vec<BigInt>], d: usize) -> Option<Vec<usize>> {
    let mut chosen = Vec::new();
    let mut echelon: linalg::Matrix = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let mut trial = echelon.clone();
        trial.push(linalg::to_rational(row));
        if linalg::rank(&trial) > echelon.len() {
            echelon = trial;
            chosen.push(i);
            if chosen.len() == d {
                return Some(chosen);
            }
        }
    }
    None
}

fn run<T: DdNum>(a: &[Vec<T>], d: usize, basis: &[usize], order: InsertionOrder) -> Option<Vec<Vec<T>>> {
    let m = a.len();
    let sub: linalg::Matrix = basis
        .iter()
        .map(|&i| a[i].iter().map(|x| Rational::from_integer(x.to_big())).collect())
        .collect();
    let inv = linalg::inverse(&sub).expect("independent rows");
    let mut rays: Vec<Ray<T>> = (0..d)
        .map(|j| {
            let col: Vec<Rational> = inv.iter().map(|row| row[j].clone()).collect();
            let v = linalg::integer_row(&col);
            let mut zeros = bits_new(m);
            for (k, &i) in basis.iter().enumerate() {
                if k != j {
                    bit_set(&mut zeros, i);
                }
            }
            Some(Ray {
                v: v.iter().map(T::from_big).collect::<Option<Vec<T>>>()?,
                zeros,
            })
        })
        .collect::<Option<Vec<_>>>()?;

    let mut pending: Vec<usize> = (0..m).filter(|i| !basis.contains(i)).collect();
    while !pending.is_empty() {
        let pick = match order {
            InsertionOrder::Index => 0,
            InsertionOrder::MinCutoff => {
                let counts: Vec<Option<usize>> = pending
                    .par_iter()
                    .map(|&i| {
                        let mut neg = 0;
                        for r in &rays {
                            if T::dot(&a[i], &r.v)?.signum() < 0 {
                                neg += 1;
                            }
                        }
                        Some(neg)
                    })
                    .collect();
                let counts: Vec<usize> = counts.into_iter().collect::<Option<_>>()?;
                (0..pending.len()).min_by_key(|&k| counts[k]).expect("nonempty")
            }
        };
        let i = pending.remove(pick);
        rays = add_row(rays, &a[i], i, d)?;
    }
    Some(rays.into_iter().map(|r| r.v).collect())
}

fn add_row<T: DdNum>(rays: Vec<Ray<T>>, row: &[T], i: usize, d: usize) -> Option<Vec<Ray<T>>> {
    let signs: Vec<T> = rays
        .par_iter()
        .map(|r| T::dot(row, &r.v))
        .collect::<Option<Vec<T>>>()?;
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (k, s) in signs.iter().enumerate() {
        match s.signum() {
            1 => pos.push(k),
            -1 => neg.push(k),
            _ => {}
        }
    }
    if neg.is_empty() {
        let mut rays = rays;
        for (r, s) in rays.iter_mut().zip(&signs) {
            if s.signum() == 0 {
                bit_set(&mut r.zeros, i);
            }
        }
        return Some(rays);
    }
    let need = (d as u32).saturating_sub(2);
    let all_zeros: Vec<&Bits> = rays.iter().map(|r| &r.zeros).collect();
    // rays_on[c] = rays whose zero set contains row c
    let words = all_zeros.first().map_or(0, |z| z.len());
    let mut rays_on: Vec<Vec<u32>> = vec![Vec::new(); words * 64];
    for (k, z) in all_zeros.iter().enumerate() {
        for (w, &word) in z.iter().enumerate() {
            let mut x = word;
            while x != 0 {
                rays_on[w * 64 + x.trailing_zeros() as usize].push(k as u32);
                x &= x - 1;
            }
        }
    }
    let fresh: Vec<Ray<T>> = pos
        .par_iter()
        .map(|&p| {
            let mut out = Vec::new();
            for &n in &neg {
                let common = bits_and(&rays[p].zeros, &rays[n].zeros);
                if bits_count(&common) < need {
                    continue;
                }
                // a blocking ray is zero on every row of `common`, so only
                // the shortest list needs scanning
                let shortest = common
                    .iter()
                    .enumerate()
                    .flat_map(|(w, &word)| {
                        let mut x = word;
                        std::iter::from_fn(move || {
                            (x != 0).then(|| {
                                let c = w * 64 + x.trailing_zeros() as usize;
                                x &= x - 1;
                                c
                            })
                        })
                    })
                    .min_by_key(|&c| rays_on[c].len());
                let blocked = match shortest {
                    Some(c) => rays_on[c].iter().any(|&k| {
                        let k = k as usize;
                        k != p && k != n && bits_subset(&common, all_zeros[k])
                    }),
                    None => all_zeros
                        .iter()
                        .enumerate()
                        .any(|(k, z)| k != p && k != n && bits_subset(&common, z)),
                };
                if blocked {
                    continue;
                }
                let v = T::combine(&signs[p], &rays[n].v, &signs[n], &rays[p].v)?;
                let mut zeros = common;
                bit_set(&mut zeros, i);
                out.push(Ray { v, zeros });
            }
            Some(out)
        })
        .collect::<Option<Vec<Vec<Ray<T>>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let mut next: Vec<Ray<T>> = Vec::with_capacity(rays.len() + fresh.len());
    for (mut r, s) in rays.into_iter().zip(&signs) {
        match s.signum() {
            1 => next.push(r),
            0 => {
                bit_set(&mut r.zeros, i);
                next.push(r);
            }
            _ => {}
        }
    }
    next.extend(fresh);
    Some(next)
}
