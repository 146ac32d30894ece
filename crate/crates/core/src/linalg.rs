//! Exact linear algebra over prime fields, the rationals, and the integers.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer matrix, row-major.
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coefficients {
    Prime(u64),
    Rational,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients::Prime(2)
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Prime(p) => write!(f, "F{p}"),
            Coefficients::Rational => f.write_str("Q"),
        }
    }
}

impl FromStr for Coefficients {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "q" || lower == "rational" || lower == "rationals" {
            return Ok(Coefficients::Rational);
        }
        let digits = lower.trim_start_matches('f').trim_start_matches("gf");
        let p: u64 = digits.parse().map_err(|_| Error::Parse(format!("unknown coefficient field '{s}'")))?;
        if !is_prime(p) {
            return Err(Error::Parse(format!("{p} is not prime")));
        }
        Ok(Coefficients::Prime(p))
    }
}

pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Rank of an integer matrix over the requested field.
pub fn rank(m: &[Vec<i64>], coeff: Coefficients) -> usize {
    match coeff {
        Coefficients::Prime(2) => rank_f2(m),
        Coefficients::Prime(p) => rank_mod_p(m, p),
        Coefficients::Rational => rank_rational(m),
    }
}

fn rank_f2(m: &[Vec<i64>]) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rows: Vec<FixedBitSet> = m
        .iter()
        .map(|r| {
            let mut b = FixedBitSet::with_capacity(cols);
            for (j, &x) in r.iter().enumerate() {
                if x.rem_euclid(2) == 1 {
                    b.insert(j);
                }
            }
            b
        })
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i].contains(c)) else { continue };
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row.contains(c) {
                row.symmetric_difference_with(&pivot);
            }
        }
        rank += 1;
    }
    rank
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

pub fn rank_mod_p(m: &[Vec<i64>], p: u64) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<u64>> =
        m.iter().map(|r| r.iter().map(|&x| x.rem_euclid(p as i64) as u64).collect()).collect();
    let mul = |a: u64, b: u64| (a as u128 * b as u128 % p as u128) as u64;
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&i| rows[i][c] != 0) else { continue };
        rows.swap(rank, piv);
        let inv = pow_mod(rows[rank][c], p - 2, p);
        for x in rows[rank].iter_mut() {
            *x = mul(*x, inv);
        }
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[c] != 0 {
                let f = row[c];
                for (x, &y) in row.iter_mut().zip(&pivot) {
                    *x = (*x + p - mul(f, y)) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Exact rank over Q by fraction-free elimination on big integers.
pub fn rank_rational(m: &[Vec<i64>]) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut rank = 0;
    for c in 0..cols {
        let piv = (rank..rows.len()).filter(|&i| !rows[i][c].is_zero()).min_by_key(|&i| rows[i][c].abs());
        let Some(piv) = piv else { continue };
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot) {
                *x = &*x * &pivot[c] - &f * y;
            }
            let g = row.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if !g.is_zero() && !g.is_one() {
                for x in row.iter_mut() {
                    *x = &*x / &g;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Nonzero diagonal of the Smith normal form, each dividing the next.
pub fn smith_diagonal(m: &[Vec<i64>]) -> Vec<BigInt> {
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry in the remaining block becomes the pivot
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..cols {
                    let v = &a[t][j] * &q;
                    a[i][j] -= v;
                }
                if !a[i][t].is_zero() {
                    a.swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let v = &row[t] * &q;
                    row[j] -= v;
                }
                if !a[t][j].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, j);
                    }
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // pivot must divide the rest of the block
            let bad = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !(&a[i][j] % &a[t][t]).is_zero());
            match bad {
                Some((i, _)) => {
                    for j in t..cols {
                        let v = a[i][j].clone();
                        a[t][j] += v;
                    }
                }
                None => break,
            }
        }
        diag.push(a[t][t].abs());
        t += 1;
    }
    diag
}

pub fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner, "dimension mismatch");
            (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

/// Determinant by fraction-free elimination.
pub fn determinant(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else { return BigInt::zero() };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    if n == 0 {
        BigInt::one()
    } else {
        sign * &a[n - 1][n - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_ranks() {
        let m = vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, 1]];
        assert_eq!(rank(&m, Coefficients::Prime(2)), 2);
        assert_eq!(rank(&m, Coefficients::Prime(3)), 3);
        assert_eq!(rank(&m, Coefficients::Rational), 3);
        assert_eq!(determinant(&m), BigInt::from(2));
        let d: Vec<i64> = smith_diagonal(&m).iter().map(|x| x.try_into().unwrap()).collect();
        assert_eq!(d, vec![1, 1, 2]);
    }

    #[test]
    fn coefficient_parsing() {
        assert_eq!("F2".parse::<Coefficients>().unwrap(), Coefficients::Prime(2));
        assert_eq!("q".parse::<Coefficients>().unwrap(), Coefficients::Rational);
        assert!("f4".parse::<Coefficients>().is_err());
    }

    proptest! {
        #[test]
        fn smith_product_matches_determinant(m in proptest::collection::vec(proptest::collection::vec(-4i64..5, 3), 3)) {
            let det = determinant(&m);
            let d = smith_diagonal(&m);
            if det.is_zero() {
                prop_assert!(d.len() < 3);
            } else {
                prop_assert_eq!(d.len(), 3);
                let prod = d.iter().fold(BigInt::one(), |a, x| a * x);
                prop_assert_eq!(prod, det.abs());
                prop_assert!((&d[1] % &d[0]).is_zero() && (&d[2] % &d[1]).is_zero());
            }
            prop_assert_eq!(d.len(), rank_rational(&m));
        }

        #[test]
        fn mod_p_rank_bounded_by_rational(m in proptest::collection::vec(proptest::collection::vec(-3i64..4, 4), 1..5)) {
            let r = rank_rational(&m);
            prop_assert!(rank_mod_p(&m, 3) <= r);
            prop_assert!(rank_f2(&m) <= r);
        }
    }
}
