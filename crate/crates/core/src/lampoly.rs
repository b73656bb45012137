//! Polynomials in commuting variables λ_1..λ_r with differential-polynomial
//! coefficients written to the right of the λ-powers.
//!
//! Where a formula substitutes `λ + ∂`, the `∂` acts on the coefficient.

use crate::diffalg::DiffPoly;
use crate::field::FieldElem;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Image of a variable under a substitution: Σ lin_α λ_α + d·∂.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinD {
    pub lin: Vec<i64>,
    pub d: i64,
}

impl LinD {
    pub fn var(nv: usize, a: usize) -> LinD {
        let mut lin = vec![0; nv];
        lin[a] = 1;
        LinD { lin, d: 0 }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LamPoly {
    nv: usize,
    terms: BTreeMap<Vec<u32>, DiffPoly>,
}

impl fmt::Debug for LamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

pub fn binom(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Integer polynomial in λ's and a ∂-power, used during substitution.
type Expansion = BTreeMap<(Vec<u32>, u32), BigInt>;

fn expand_power(l: &LinD, e: u32, nv: usize) -> Expansion {
    // (Σ lin λ + d ∂)^e by repeated multiplication.
    let mut acc: Expansion = BTreeMap::new();
    acc.insert((vec![0; nv], 0), BigInt::one());
    for _ in 0..e {
        let mut next: Expansion = BTreeMap::new();
        for ((m, dp), c) in &acc {
            for (a, &w) in l.lin.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                let mut nm = m.clone();
                nm[a] += 1;
                *next.entry((nm, *dp)).or_insert_with(BigInt::zero) += c * BigInt::from(w);
            }
            if l.d != 0 {
                *next.entry((m.clone(), dp + 1)).or_insert_with(BigInt::zero) += c * BigInt::from(l.d);
            }
        }
        next.retain(|_, c| !c.is_zero());
        acc = next;
    }
    acc
}

fn mul_expansion(a: &Expansion, b: &Expansion) -> Expansion {
    let mut r: Expansion = BTreeMap::new();
    for ((ma, da), ca) in a {
        for ((mb, db), cb) in b {
            let m: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            *r.entry((m, da + db)).or_insert_with(BigInt::zero) += ca * cb;
        }
    }
    r.retain(|_, c| !c.is_zero());
    r
}

/// Memoized derivatives of one coefficient.
struct Derivs {
    ds: Vec<DiffPoly>,
}

impl Derivs {
    fn new(p: &DiffPoly) -> Derivs {
        Derivs { ds: vec![p.clone()] }
    }
    fn get(&mut self, n: u32) -> &DiffPoly {
        while self.ds.len() <= n as usize {
            let next = self.ds.last().unwrap().derive();
            self.ds.push(next);
        }
        &self.ds[n as usize]
    }
}

impl LamPoly {
    pub fn zero(nv: usize) -> LamPoly {
        LamPoly { nv, terms: BTreeMap::new() }
    }

    pub fn constant(nv: usize, c: DiffPoly) -> LamPoly {
        LamPoly::monomial(vec![0; nv], c)
    }

    pub fn monomial(exps: Vec<u32>, c: DiffPoly) -> LamPoly {
        let nv = exps.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        LamPoly { nv, terms }
    }

    /// λ_a as a polynomial.
    pub fn var(nv: usize, a: usize) -> LamPoly {
        let mut e = vec![0; nv];
        e[a] = 1;
        LamPoly::monomial(e, DiffPoly::one())
    }

    pub fn nvars(&self) -> usize {
        self.nv
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Vec<u32>, &DiffPoly)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &[u32]) -> DiffPoly {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, e: Vec<u32>, c: DiffPoly) {
        debug_assert_eq!(e.len(), self.nv);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &LamPoly) -> LamPoly {
        debug_assert_eq!(self.nv, o.nv);
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn add_assign(&mut self, o: &LamPoly) {
        for (e, c) in &o.terms {
            self.add_term(e.clone(), c.clone());
        }
    }

    pub fn sub(&self, o: &LamPoly) -> LamPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> LamPoly {
        LamPoly {
            nv: self.nv,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> LamPoly {
        self.map_coeffs(|p| p.scale(c))
    }

    pub fn scale_q(&self, c: &BigRational) -> LamPoly {
        self.map_coeffs(|p| p.scale_q(c))
    }

    /// Multiply every coefficient by a differential polynomial (on the left; everything commutes).
    pub fn mul_coeff(&self, c: &DiffPoly) -> LamPoly {
        self.map_coeffs(|p| p.mul(c))
    }

    pub fn map_coeffs(&self, f: impl Fn(&DiffPoly) -> DiffPoly) -> LamPoly {
        let mut r = LamPoly::zero(self.nv);
        for (e, c) in &self.terms {
            r.add_term(e.clone(), f(c));
        }
        r
    }

    /// Ordinary product; λ's commute with everything and no ∂ is involved.
    pub fn mul(&self, o: &LamPoly) -> LamPoly {
        debug_assert_eq!(self.nv, o.nv);
        let mut r = LamPoly::zero(self.nv);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                r.add_term(e, ca.mul(cb));
            }
        }
        r
    }

    pub fn mul_monomial(&self, e: &[u32]) -> LamPoly {
        LamPoly {
            nv: self.nv,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.iter().zip(e).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Apply ∂ to every coefficient.
    pub fn derive(&self) -> LamPoly {
        self.map_coeffs(|p| p.derive())
    }

    /// (Σ lin_α λ_α + d·∂)^n applied to this polynomial; ∂ acts on the coefficients.
    pub fn apply_shift(&self, lin: &[i64], d: i64, n: u32) -> LamPoly {
        let l = LinD { lin: lin.to_vec(), d };
        let ex = expand_power(&l, n, self.nv);
        let mut r = LamPoly::zero(self.nv);
        for (e, c) in &self.terms {
            let mut dv = Derivs::new(c);
            for ((m, dp), k) in &ex {
                let coeff = dv.get(*dp).scale_q(&BigRational::from_integer(k.clone()));
                let key: Vec<u32> = e.iter().zip(m).map(|(a, b)| a + b).collect();
                r.add_term(key, coeff);
            }
        }
        r
    }

    /// Multiply by a polynomial operator `Σ_n a_n (L + d∂)^n` with the `a_n` on the left.
    pub fn apply_op_shift(&self, op: &[(u32, DiffPoly)], lin: &[i64], d: i64) -> LamPoly {
        let mut r = LamPoly::zero(self.nv);
        for (n, a) in op {
            r.add_assign(&self.apply_shift(lin, d, *n).mul_coeff(a));
        }
        r
    }

    /// Substitute every variable simultaneously; `images[α]` lives in `nv_out` variables.
    pub fn subst(&self, nv_out: usize, images: &[LinD]) -> LamPoly {
        debug_assert_eq!(images.len(), self.nv);
        let mut cache: BTreeMap<(usize, u32), Expansion> = BTreeMap::new();
        let mut r = LamPoly::zero(nv_out);
        for (e, c) in &self.terms {
            let mut ex: Expansion = BTreeMap::new();
            ex.insert((vec![0; nv_out], 0), BigInt::one());
            for (a, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let p = cache.entry((a, k)).or_insert_with(|| expand_power(&images[a], k, nv_out));
                ex = mul_expansion(&ex, p);
            }
            let mut dv = Derivs::new(c);
            for ((m, dp), k) in &ex {
                r.add_term(m.clone(), dv.get(*dp).scale_q(&BigRational::from_integer(k.clone())));
            }
        }
        r
    }

    /// Permute variables: new variable `perm[a]` receives old variable `a`.
    pub fn permute(&self, perm: &[usize]) -> LamPoly {
        let mut r = LamPoly::zero(self.nv);
        for (e, c) in &self.terms {
            let mut ne = vec![0; self.nv];
            for (a, &k) in e.iter().enumerate() {
                ne[perm[a]] = k;
            }
            r.add_term(ne, c.clone());
        }
        r
    }

    /// Insert fresh variables (with exponent 0) so that old variable `a` lands at `pos[a]`.
    pub fn embed(&self, nv_out: usize, pos: &[usize]) -> LamPoly {
        let mut r = LamPoly::zero(nv_out);
        for (e, c) in &self.terms {
            let mut ne = vec![0; nv_out];
            for (a, &k) in e.iter().enumerate() {
                ne[pos[a]] += k;
            }
            r.add_term(ne, c.clone());
        }
        r
    }

    pub fn degree_in(&self, a: usize) -> Option<u32> {
        self.terms.keys().map(|e| e[a]).max()
    }

    /// Coefficient of λ_a^k as a polynomial in the remaining variables (variable `a` removed).
    pub fn coeff_of_power(&self, a: usize, k: u32) -> LamPoly {
        let mut r = LamPoly::zero(self.nv - 1);
        for (e, c) in &self.terms {
            if e[a] == k {
                let mut ne = e.clone();
                ne.remove(a);
                r.add_term(ne, c.clone());
            }
        }
        r
    }

    pub fn is_quasiconstant(&self) -> bool {
        self.terms.values().all(|c| c.is_quasiconstant())
    }
}

pub fn var_name(a: usize) -> String {
    format!("l{}", a + 1)
}

impl fmt::Display for LamPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut s = String::new();
        let mut first = true;
        for (e, c) in self.terms.iter() {
            let lam: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, k)| **k > 0)
                .map(|(a, k)| if *k == 1 { var_name(a) } else { format!("{}^{}", var_name(a), k) })
                .collect();
            let lam = lam.join("*");
            crate::diffalg::write_poly_times(&mut s, c, &lam, first);
            first = false;
        }
        write!(f, "{s}")
    }
}
