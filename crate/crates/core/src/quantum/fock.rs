//! Truncated single-mode ladder operators in exact arithmetic.
//!
//! Matrix entries are finite sums `Σ c·√r` with integer `c` and square-free
//! `r`, so products such as `a†a` come out as exact integers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// `Σ coef · √radicand` with square-free radicands and no zero terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Surd {
    terms: BTreeMap<u64, i64>,
}

/// `n = k² · r` with `r` square-free.
fn split_square(mut n: u64) -> (u64, u64) {
    let mut outside = 1;
    let mut p = 2;
    while p * p <= n {
        while n % (p * p) == 0 {
            n /= p * p;
            outside *= p;
        }
        p += 1;
    }
    (outside, n)
}

impl Surd {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn integer(c: i64) -> Self {
        let mut s = Self::zero();
        s.push(1, c);
        s
    }

    /// `√n`.
    pub fn sqrt(n: u64) -> Self {
        let (k, r) = split_square(n);
        let mut s = Self::zero();
        if n > 0 {
            s.push(r, k as i64);
        }
        s
    }

    fn push(&mut self, radicand: u64, coef: i64) {
        if coef == 0 {
            return;
        }
        let e = self.terms.entry(radicand).or_insert(0);
        *e += coef;
        if *e == 0 {
            self.terms.remove(&radicand);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if it is a whole number.
    pub fn as_integer(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => self.terms.get(&1).copied(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms.iter().map(|(&r, &c)| c as f64 * (r as f64).sqrt()).sum()
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, o: &Surd) -> Surd {
        let mut s = self.clone();
        for (&r, &c) in &o.terms {
            s.push(r, c);
        }
        s
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            terms: self.terms.iter().map(|(&r, &c)| (r, -c)).collect(),
        }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, o: &Surd) -> Surd {
        self + &(-o)
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, o: &Surd) -> Surd {
        let mut s = Surd::zero();
        for (&r1, &c1) in &self.terms {
            for (&r2, &c2) in &o.terms {
                let (k, r) = split_square(r1 * r2);
                s.push(r, c1 * c2 * k as i64);
            }
        }
        s
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (&r, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0 { "-" } else if i > 0 { "+" } else { "" };
            let mag = c.unsigned_abs();
            match (r, mag) {
                (1, m) => write!(f, "{sign}{m}")?,
                (r, 1) => write!(f, "{sign}sqrt({r})")?,
                (r, m) => write!(f, "{sign}{m}*sqrt({r})")?,
            }
        }
        Ok(())
    }
}

impl Serialize for Surd {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Dense square matrix of [`Surd`] entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurdMatrix {
    dim: usize,
    entries: Vec<Surd>,
}

impl SurdMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Surd::zero(); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> &Surd {
        &self.entries[row * self.dim + col]
    }

    fn set(&mut self, row: usize, col: usize, v: Surd) {
        self.entries[row * self.dim + col] = v;
    }

    /// Conjugate transpose; entries are real so this is the plain transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn diagonal(&self) -> Vec<Surd> {
        (0..self.dim).map(|i| self.get(i, i).clone()).collect()
    }

    /// Column `n`, i.e. the image of the basis ket `|n⟩`.
    pub fn apply_to_basis(&self, n: usize) -> Vec<Surd> {
        (0..self.dim).map(|r| self.get(r, n).clone()).collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.get(r, c).to_f64()).collect())
            .collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Surd]> {
        self.entries.chunks(self.dim)
    }
}

impl Mul for &SurdMatrix {
    type Output = SurdMatrix;
    fn mul(self, o: &SurdMatrix) -> SurdMatrix {
        assert_eq!(self.dim, o.dim, "matrix dimensions differ");
        let mut out = SurdMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let mut acc = Surd::zero();
                for k in 0..self.dim {
                    let (x, y) = (self.get(r, k), o.get(k, c));
                    if !x.is_zero() && !y.is_zero() {
                        acc = &acc + &(x * y);
                    }
                }
                out.set(r, c, acc);
            }
        }
        out
    }
}

impl Sub for &SurdMatrix {
    type Output = SurdMatrix;
    fn sub(self, o: &SurdMatrix) -> SurdMatrix {
        assert_eq!(self.dim, o.dim, "matrix dimensions differ");
        SurdMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Number states `|0⟩ … |n_max⟩` with annihilation and creation matrices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
    a: SurdMatrix,
    a_dag: SurdMatrix,
}

pub fn ladder_operators(n_max: usize) -> Result<FockSpace> {
    if n_max < 1 {
        return Err(Error::Domain("truncation level must be at least 1".into()));
    }
    let mut a = SurdMatrix::zeros(n_max + 1);
    for n in 1..=n_max {
        a.set(n - 1, n, Surd::sqrt(n as u64));
    }
    let a_dag = a.adjoint();
    Ok(FockSpace { n_max, a, a_dag })
}

impl FockSpace {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn annihilation(&self) -> &SurdMatrix {
        &self.a
    }

    pub fn creation(&self) -> &SurdMatrix {
        &self.a_dag
    }

    /// `a†a`.
    pub fn number_operator(&self) -> SurdMatrix {
        &self.a_dag * &self.a
    }

    /// `[a, a†] = a a† − a† a`. Truncation leaves `−n_max` in the last slot.
    pub fn commutator(&self) -> SurdMatrix {
        &(&self.a * &self.a_dag) - &(&self.a_dag * &self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_arithmetic() {
        assert_eq!(split_square(72), (6, 2));
        assert_eq!(&Surd::sqrt(8) * &Surd::sqrt(2), Surd::integer(4));
        assert_eq!(Surd::sqrt(12).to_string(), "2*sqrt(3)");
        assert_eq!((&Surd::sqrt(3) - &Surd::sqrt(3)).as_integer(), Some(0));
        assert_eq!((&Surd::integer(1) + &Surd::sqrt(2)).as_integer(), None);
    }

    #[test]
    fn ladder_action() {
        let f = ladder_operators(4).unwrap();
        assert!(f.annihilation().apply_to_basis(0).iter().all(Surd::is_zero));
        for n in 0..4 {
            let ket = f.creation().apply_to_basis(n);
            for (m, c) in ket.iter().enumerate() {
                let want = if m == n + 1 { Surd::sqrt(n as u64 + 1) } else { Surd::zero() };
                assert_eq!(*c, want);
            }
        }
        assert_eq!(f.creation(), &f.annihilation().adjoint());
    }

    #[test]
    fn number_and_commutator() {
        let f = ladder_operators(3).unwrap();
        let num = f.number_operator();
        for n in 0..=3 {
            for m in 0..=3 {
                let want = if n == m { n as i64 } else { 0 };
                assert_eq!(num.get(n, m).as_integer(), Some(want));
            }
        }
        let diag: Vec<_> = f.commutator().diagonal().iter().map(|s| s.as_integer().unwrap()).collect();
        assert_eq!(diag, vec![1, 1, 1, -3]);
        assert!(ladder_operators(0).is_err());
    }
}
