//! Dense linear systems over an exact field.

use crate::field::FieldElem;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub trait Scalar: Clone + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn inv(&self) -> Self;
    fn neg(&self) -> Self;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn inv(&self) -> Self {
        self.recip()
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
}

impl Scalar for FieldElem {
    fn zero() -> Self {
        FieldElem::zero()
    }
    fn one() -> Self {
        FieldElem::one()
    }
    fn is_zero(&self) -> bool {
        FieldElem::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        FieldElem::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        FieldElem::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        FieldElem::mul(self, o)
    }
    fn inv(&self) -> Self {
        FieldElem::inv(self).expect("pivot is nonzero")
    }
    fn neg(&self) -> Self {
        FieldElem::neg(self)
    }
}

/// Solution of `A v = b`: one particular solution and a nullspace basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<T> {
    pub particular: Vec<T>,
    pub kernel: Vec<Vec<T>>,
}

/// Reduced row echelon solve; `None` when inconsistent.
pub fn solve<T: Scalar>(a: &[Vec<T>], b: &[T], ncols: usize) -> Option<Affine<T>> {
    let mut rows: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut v = r.clone();
            v.resize(ncols, T::zero());
            v.push(bi.clone());
            v
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].inv();
        for v in rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.mul(&inv);
            }
        }
        let prow = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (j, pv) in prow.iter().enumerate() {
                if !pv.is_zero() {
                    row[j] = row[j].sub(&f.mul(pv));
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows[r..].iter().any(|row| !row[ncols].is_zero()) {
        return None;
    }
    let mut particular = vec![T::zero(); ncols];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = rows[i][ncols].clone();
    }
    let mut kernel = Vec::new();
    for f in 0..ncols {
        if pivots.contains(&f) {
            continue;
        }
        let mut v = vec![T::zero(); ncols];
        v[f] = T::one();
        for (i, &c) in pivots.iter().enumerate() {
            v[c] = rows[i][f].neg();
        }
        kernel.push(v);
    }
    Some(Affine { particular, kernel })
}

pub fn rank<T: Scalar>(a: &[Vec<T>], ncols: usize) -> usize {
    let zeros = vec![T::zero(); a.len()];
    let s = solve(a, &zeros, ncols).expect("homogeneous system is consistent");
    ncols - s.kernel.len()
}

/// Determinant by elimination.
pub fn det<T: Scalar>(a: &[Vec<T>]) -> T {
    let n = a.len();
    let mut m = a.to_vec();
    let mut d = T::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else { return T::zero() };
        if p != c {
            m.swap(p, c);
            d = d.neg();
        }
        d = d.mul(&m[c][c]);
        let inv = m[c][c].inv();
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].mul(&inv);
            for j in c..n {
                let t = f.mul(&m[c][j]);
                m[i][j] = m[i][j].sub(&t);
            }
        }
    }
    d
}

pub fn inverse<T: Scalar>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let s = solve(a, &e, n)?;
        if !s.kernel.is_empty() {
            return None;
        }
        cols.push(s.particular);
    }
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::q;

    #[test]
    fn solve_with_kernel() {
        let a = vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]];
        let s = solve(&a, &[q(1), q(2)], 3).unwrap();
        assert_eq!(s.kernel.len(), 2);
        assert!(solve(&a, &[q(1), q(3)], 3).is_none());
    }

    #[test]
    fn det_and_inverse() {
        let a = vec![vec![q(2), q(1)], vec![q(1), q(1)]];
        assert_eq!(det(&a), q(1));
        let inv = inverse(&a).unwrap();
        assert_eq!(inv, vec![vec![q(1), q(-1)], vec![q(-1), q(2)]]);
    }
}
