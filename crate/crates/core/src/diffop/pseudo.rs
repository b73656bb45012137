//! Pseudodifferential operators Σ_{n ≤ N} a_n ∂^n over the quasiconstant field,
//! with an explicit exactness floor for truncated products.

use super::linalg::Majorant;
use super::ScalarOp;
use crate::error::{Error, Result};
use crate::field::FieldElem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use std::collections::BTreeMap;
use std::fmt;

/// Generalized binomial m(m−1)…(m−j+1)/j! for any integer m.
pub fn gbinom(m: i64, j: u64) -> BigRational {
    let mut r = BigRational::one();
    for i in 0..j as i64 {
        r = r * BigRational::from_integer(BigInt::from(m - i)) / BigRational::from_integer(BigInt::from(i + 1));
    }
    r
}

/// Terms strictly below `floor` are unknown; `None` means exact.
#[derive(Clone, PartialEq, Eq)]
pub struct PseudoDiffOp {
    coeffs: BTreeMap<i64, FieldElem>,
    floor: Option<i64>,
}

impl fmt::Debug for PseudoDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PseudoDiffOp {
    pub fn zero() -> PseudoDiffOp {
        PseudoDiffOp {
            coeffs: BTreeMap::new(),
            floor: None,
        }
    }

    pub fn one() -> PseudoDiffOp {
        PseudoDiffOp::monomial(FieldElem::one(), 0)
    }

    pub fn monomial(c: FieldElem, n: i64) -> PseudoDiffOp {
        let mut r = PseudoDiffOp::zero();
        r.add_at(n, c);
        r
    }

    /// ∂^n for any integer n.
    pub fn d(n: i64) -> PseudoDiffOp {
        PseudoDiffOp::monomial(FieldElem::one(), n)
    }

    pub fn from_scalar(op: &ScalarOp) -> Result<PseudoDiffOp> {
        let cs = op.field_coeffs().ok_or(Error::NotQuasiconstant)?;
        Ok(PseudoDiffOp {
            coeffs: cs.into_iter().map(|(n, c)| (n as i64, c)).filter(|(_, c)| !c.is_zero()).collect(),
            floor: None,
        })
    }

    pub fn floor(&self) -> Option<i64> {
        self.floor
    }

    pub fn is_exact(&self) -> bool {
        self.floor.is_none()
    }

    fn add_at(&mut self, n: i64, c: FieldElem) {
        if let Some(f) = self.floor {
            if n < f {
                return;
            }
        }
        let s = self.coeffs.get(&n).cloned().unwrap_or_default().add(&c);
        if s.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, s);
        }
    }

    /// Known terms, highest order last.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&i64, &FieldElem)> {
        self.coeffs.iter()
    }

    /// Coefficient of ∂^n; fails below the exactness floor.
    pub fn coeff(&self, n: i64) -> Result<FieldElem> {
        if let Some(f) = self.floor {
            if n < f {
                return Err(Error::TruncationExceeded { needed: n, floor: f });
            }
        }
        Ok(self.coeffs.get(&n).cloned().unwrap_or_default())
    }

    /// Highest order with a nonzero coefficient; `None` when no known term survives.
    pub fn order(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn leading(&self) -> Option<(i64, &FieldElem)> {
        self.coeffs.iter().next_back().map(|(n, c)| (*n, c))
    }

    /// True when zero as far as known.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, floor: i64) -> PseudoDiffOp {
        let f = self.floor.map_or(floor, |g| g.max(floor));
        PseudoDiffOp {
            coeffs: self.coeffs.range(f..).map(|(n, c)| (*n, c.clone())).collect(),
            floor: Some(f),
        }
    }

    pub fn add(&self, o: &PseudoDiffOp) -> PseudoDiffOp {
        let floor = match (self.floor, o.floor) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a),
            (Some(a), Some(b)) => Some(a.max(b)),
        };
        let mut r = PseudoDiffOp {
            coeffs: BTreeMap::new(),
            floor,
        };
        for (n, c) in self.coeffs.iter().chain(o.coeffs.iter()) {
            r.add_at(*n, c.clone());
        }
        r
    }

    pub fn neg(&self) -> PseudoDiffOp {
        PseudoDiffOp {
            coeffs: self.coeffs.iter().map(|(n, c)| (*n, c.neg())).collect(),
            floor: self.floor,
        }
    }

    pub fn sub(&self, o: &PseudoDiffOp) -> PseudoDiffOp {
        self.add(&o.neg())
    }

    /// Product, computed exactly down to `min_order` (or further when the result is finite).
    pub fn compose(&self, o: &PseudoDiffOp, min_order: i64) -> PseudoDiffOp {
        let (Some(oa), Some(ob)) = (self.order(), o.order()) else {
            let floor = match (self.floor, o.floor) {
                (None, None) => None,
                _ => Some(min_order),
            };
            return PseudoDiffOp {
                coeffs: BTreeMap::new(),
                floor,
            };
        };
        let infinite = self.coeffs.keys().any(|m| *m < 0);
        let mut floor: Option<i64> = None;
        let mut bump = |f: i64| floor = Some(floor.map_or(f, |g: i64| g.max(f)));
        if let Some(fa) = self.floor {
            bump(fa + ob);
        }
        if let Some(fb) = o.floor {
            bump(oa + fb);
        }
        if infinite {
            bump(min_order);
        }
        let mut r = PseudoDiffOp {
            coeffs: BTreeMap::new(),
            floor,
        };
        for (&n, b) in &o.coeffs {
            let mut derivs = vec![b.clone()];
            for (&m, a) in &self.coeffs {
                let mut j: u64 = 0;
                loop {
                    let k = m + n - j as i64;
                    if let Some(f) = floor {
                        if k < f {
                            break;
                        }
                    }
                    if m >= 0 && j as i64 > m {
                        break;
                    }
                    while derivs.len() <= j as usize {
                        let next = derivs.last().unwrap().derive();
                        derivs.push(next);
                    }
                    let bj = &derivs[j as usize];
                    if !bj.is_zero() {
                        r.add_at(k, a.mul(bj).scale(&gbinom(m, j)));
                    }
                    j += 1;
                }
            }
        }
        r
    }

    /// Inverse exact to `depth` orders below its leading term.
    pub fn inverse(&self, depth: i64) -> Result<PseudoDiffOp> {
        let (n, a) = self.leading().ok_or(Error::DivisionByZero)?;
        let ainv = a.inv().ok_or(Error::DivisionByZero)?;
        let floor = -n - depth;
        let linv = PseudoDiffOp::d(-n).compose(&PseudoDiffOp::monomial(ainv, 0), floor);
        let rest = PseudoDiffOp::one().sub(&linv.compose(self, -depth)).truncate(-depth);
        let mut acc = PseudoDiffOp::one();
        let mut pw = PseudoDiffOp::one();
        for _ in 0..depth {
            pw = rest.compose(&pw, -depth).truncate(-depth);
            if pw.is_zero() {
                break;
            }
            acc = acc.add(&pw);
        }
        let acc = acc.truncate(-depth);
        Ok(acc.compose(&linv, floor).truncate(floor))
    }
}

impl fmt::Display for PseudoDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        for (i, (n, c)) in self.coeffs.iter().rev().enumerate() {
            let body = match n {
                0 => String::new(),
                1 => "d".to_string(),
                n => format!("d^({n})"),
            };
            crate::diffalg::write_term(&mut s, c, &body, i == 0);
        }
        if s.is_empty() {
            s.push('0');
        }
        if let Some(fl) = self.floor {
            s.push_str(&format!(" + O(d^({fl}))"));
        }
        write!(f, "{s}")
    }
}

pub type PseudoMat = Vec<Vec<PseudoDiffOp>>;

pub fn pseudo_matrix(m: &super::MatDiffOp) -> Result<PseudoMat> {
    m.entries().iter().map(|r| r.iter().map(PseudoDiffOp::from_scalar).collect()).collect()
}

/// Output of the pseudodifferential elimination.
#[derive(Clone, Debug)]
pub struct PseudoReduced {
    pub matrix: PseudoMat,
    /// Row `k` of `matrix` came from row `perm[k]` of the input.
    pub perm: Vec<usize>,
    pub majorant: Majorant,
    pub sign: i64,
}

fn lead_entry(p: &PseudoDiffOp, power: i64) -> Result<FieldElem> {
    p.coeff(power)
}

/// Upper-triangularize a square matrix with nondegenerate leading matrix by
/// majorant-preserving row operations in the pseudodifferential ring.
pub fn reduce_pseudo(m: &PseudoMat, maj: &Majorant, depth: i64) -> Result<PseudoReduced> {
    let n = m.len();
    if n == 0 || m.iter().any(|r| r.len() != n) || maj.n.len() != n || maj.h.len() != n {
        return Err(Error::ShapeMismatch("square matrix with matching majorant expected".into()));
    }
    let mut a = m.clone();
    let mut h = maj.h.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1;
    for j in 0..n {
        let mut piv = None;
        for k in j..n {
            if !lead_entry(&a[k][j], maj.n[j] - h[k])?.is_zero() {
                piv = Some(k);
                break;
            }
        }
        let p = piv.ok_or(Error::DegenerateLeadingMatrix)?;
        if p != j {
            a.swap(p, j);
            h.swap(p, j);
            perm.swap(p, j);
            sign = -sign;
        }
        let pivot = a[j][j].clone();
        let pord = maj.n[j] - h[j];
        let inv = pivot.inverse(depth)?;
        for r in (j + 1)..n {
            if a[r][j].is_zero() {
                continue;
            }
            let factor = a[r][j].compose(&inv, maj.n[j] - h[r] - pord - depth);
            let row_j = a[j].clone();
            for (k, e) in row_j.iter().enumerate() {
                let low = maj.n[k] - h[r] - depth;
                let t = factor.compose(e, low);
                a[r][k] = a[r][k].sub(&t);
            }
        }
    }
    Ok(PseudoReduced {
        matrix: a,
        perm,
        majorant: Majorant { n: maj.n.clone(), h },
        sign,
    })
}

/// Triangularize with increasing depth until the diagonal leading terms are resolved.
pub fn reduce_pseudo_auto(m: &PseudoMat, maj: &Majorant) -> Result<PseudoReduced> {
    let mut depth = 4;
    loop {
        let res = reduce_pseudo(m, maj, depth).and_then(|r| {
            for (j, row) in r.matrix.iter().enumerate() {
                row[j].coeff(r.majorant.n[j] - r.majorant.h[j])?;
            }
            Ok(r)
        });
        match res {
            Err(Error::TruncationExceeded { .. }) if depth < 256 => depth *= 2,
            other => return other,
        }
    }
}

/// Dieudonné determinant (c, d) read from a pseudodifferential triangularization.
pub fn pseudo_det(m: &PseudoMat, maj: &Majorant) -> Result<(FieldElem, i64)> {
    let r = reduce_pseudo_auto(m, maj)?;
    let mut c = FieldElem::int(r.sign);
    let mut d = 0;
    for j in 0..r.matrix.len() {
        let e = r.majorant.n[j] - r.majorant.h[j];
        c = c.mul(&r.matrix[j][j].coeff(e)?);
        d += e;
    }
    Ok((c, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_first_order() {
        let a = PseudoDiffOp::from_scalar(&ScalarOp::d(1)).unwrap();
        let inv = a.inverse(5).unwrap();
        assert_eq!(inv.order(), Some(-1));
        let prod = a.compose(&inv, -6);
        assert_eq!(prod.coeff(0).unwrap(), FieldElem::one());
        for n in -4..0 {
            assert!(prod.coeff(n).unwrap().is_zero());
        }
    }

    #[test]
    fn inverse_with_field_coefficient() {
        let x = FieldElem::x();
        let mut a = PseudoDiffOp::monomial(x.clone(), 1);
        a = a.add(&PseudoDiffOp::monomial(FieldElem::one(), 0));
        let inv = a.inverse(6).unwrap();
        let l = inv.compose(&a, -6);
        let r = a.compose(&inv, -6);
        for p in [&l, &r] {
            assert_eq!(p.coeff(0).unwrap(), FieldElem::one());
            for n in -5..0 {
                assert!(p.coeff(n).unwrap().is_zero(), "order {n}: {p}");
            }
        }
    }

    #[test]
    fn reading_below_floor_fails() {
        let inv = PseudoDiffOp::d(1).inverse(2).unwrap();
        assert!(matches!(inv.coeff(-10), Err(Error::TruncationExceeded { .. })));
    }

    #[test]
    fn commutation_rule_with_negative_power() {
        // ∂^{-1} ∘ x = x∂^{-1} − ∂^{-2}
        let r = PseudoDiffOp::d(-1).compose(&PseudoDiffOp::monomial(FieldElem::x(), 0), -5);
        assert_eq!(r.coeff(-1).unwrap(), FieldElem::x());
        assert_eq!(r.coeff(-2).unwrap(), FieldElem::int(-1));
        assert!(r.coeff(-3).unwrap().is_zero());
    }
}
