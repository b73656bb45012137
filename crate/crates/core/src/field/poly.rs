//! Sparse multivariate polynomials over ℚ in the quasiconstant variables:
//! `x`, constant parameters, and jets of free function symbols.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

/// Interned symbol name.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Sym(pub u32);

fn interner() -> &'static RwLock<(Vec<String>, HashMap<String, u32>)> {
    static I: OnceLock<RwLock<(Vec<String>, HashMap<String, u32>)>> = OnceLock::new();
    I.get_or_init(|| RwLock::new((Vec::new(), HashMap::new())))
}

impl Sym {
    pub fn new(name: &str) -> Sym {
        {
            let r = interner().read().unwrap();
            if let Some(&id) = r.1.get(name) {
                return Sym(id);
            }
        }
        let mut w = interner().write().unwrap();
        if let Some(&id) = w.1.get(name) {
            return Sym(id);
        }
        let id = w.0.len() as u32;
        w.0.push(name.to_string());
        w.1.insert(name.to_string(), id);
        Sym(id)
    }

    pub fn name(&self) -> String {
        interner().read().unwrap().0[self.0 as usize].clone()
    }
}

/// A generator of the quasiconstant field.
///
/// `Param` symbols are constants (∂p = 0); `Fun(f, n)` is the n-th derivative of a
/// free function symbol f of x.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Var {
    X,
    Param(Sym),
    Fun(Sym, u32),
}

impl Var {
    pub fn derive(&self) -> Option<Var> {
        match self {
            Var::Fun(s, n) => Some(Var::Fun(*s, n + 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X => write!(f, "x"),
            Var::Param(s) => write!(f, "{}", s.name()),
            Var::Fun(s, n) => {
                let name = s.name();
                match n {
                    0 => write!(f, "{name}"),
                    1 => write!(f, "{name}'"),
                    2 => write!(f, "{name}''"),
                    _ => write!(f, "{name}^({n})"),
                }
            }
        }
    }
}

/// Monomial: sorted list of (variable, positive exponent).
pub type Mono = Vec<(Var, u32)>;

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn qq(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn one() -> Poly {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    pub fn var(v: Var) -> Poly {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(v, 1)], BigRational::one());
        Poly { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Mono, BigRational)>) -> Poly {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    /// The constant value when the polynomial has no variables.
    pub fn as_constant(&self) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        if self.is_constant() {
            return self.terms.get(&Vec::new()).cloned();
        }
        None
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().map(|c| c.is_one()).unwrap_or(false)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), -c.clone());
        }
        r
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, s: &BigRational) -> Poly {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = o.as_constant() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_constant() {
            return o.scale(&c);
        }
        let mut r = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.add_term(mono_mul(ma, mb), ca * cb);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut r = Poly::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| *v)).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn contains_var(&self, pred: impl Fn(&Var) -> bool) -> bool {
        self.terms.keys().any(|m| m.iter().any(|(v, _)| pred(v)))
    }

    pub fn deg_in(&self, v: Var) -> u32 {
        self.terms
            .keys()
            .map(|m| m.iter().find(|(w, _)| *w == v).map(|(_, e)| *e).unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().map(|(_, e)| *e).sum::<u32>()).max().unwrap_or(0)
    }

    /// Coefficients as a univariate polynomial in `v`; index = degree.
    pub fn coeffs_in(&self, v: Var) -> Vec<Poly> {
        let d = self.deg_in(v) as usize;
        let mut out = vec![Poly::zero(); d + 1];
        for (m, c) in &self.terms {
            let mut e = 0usize;
            let mut rest = Vec::with_capacity(m.len());
            for &(w, k) in m {
                if w == v {
                    e = k as usize;
                } else {
                    rest.push((w, k));
                }
            }
            out[e].add_term(rest, c.clone());
        }
        out
    }

    pub fn from_coeffs(v: Var, cs: &[Poly]) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in cs.iter().enumerate() {
            for (m, k) in &c.terms {
                let mono = if e == 0 { m.clone() } else { mono_mul(m, &vec![(v, e as u32)]) };
                r.add_term(mono, k.clone());
            }
        }
        r
    }

    /// Partial derivative with respect to a single variable.
    pub fn partial(&self, v: Var) -> Poly {
        let mut r = Poly::zero();
        for (m, c) in &self.terms {
            if let Some(pos) = m.iter().position(|(w, _)| *w == v) {
                let e = m[pos].1;
                let mut nm = m.clone();
                if e == 1 {
                    nm.remove(pos);
                } else {
                    nm[pos].1 = e - 1;
                }
                r.add_term(nm, c * q(e as i64));
            }
        }
        r
    }

    /// Total derivative: ∂x = 1, ∂p = 0, ∂f^(n) = f^(n+1).
    pub fn derive(&self) -> Poly {
        let mut r = Poly::zero();
        for v in self.vars() {
            let dv = match v {
                Var::X => Poly::one(),
                Var::Param(_) => continue,
                Var::Fun(..) => Poly::var(v.derive().unwrap()),
            };
            r = r.add(&self.partial(v).mul(&dv));
        }
        r
    }

    /// Substitute a polynomial for a variable.
    pub fn subst(&self, v: Var, val: &Poly) -> Poly {
        let cs = self.coeffs_in(v);
        let mut r = Poly::zero();
        let mut pw = Poly::one();
        for c in cs.iter() {
            r = r.add(&c.mul(&pw));
            pw = pw.mul(val);
        }
        r
    }

    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Scale so that the leading coefficient is 1.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => Poly::zero(),
            Some((_, c)) => {
                let inv = c.recip();
                self.scale(&inv)
            }
        }
    }

    /// Exact division; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let v = *d.vars().last().unwrap();
        let dc = d.coeffs_in(v);
        let db = dc.len() - 1;
        let mut rem = self.coeffs_in(v);
        if rem.len() < dc.len() {
            return None;
        }
        let mut quo = vec![Poly::zero(); rem.len() - db];
        let lc = &dc[db];
        let mut top = rem.len() - 1;
        loop {
            if !rem[top].is_zero() {
                if top < db {
                    return None;
                }
                let t = rem[top].div_exact(lc)?;
                let shift = top - db;
                for (i, c) in dc.iter().enumerate() {
                    rem[i + shift] = rem[i + shift].sub(&t.mul(c));
                }
                quo[shift] = quo[shift].add(&t);
                debug_assert!(rem[top].is_zero());
            }
            if top == 0 {
                break;
            }
            top -= 1;
        }
        if rem.iter().all(|c| c.is_zero()) {
            Some(Poly::from_coeffs(v, &quo))
        } else {
            None
        }
    }

    /// Gcd of the coefficients w.r.t. `v`.
    fn content_in(&self, v: Var) -> Poly {
        let mut g = Poly::zero();
        for c in self.coeffs_in(v) {
            if c.is_zero() {
                continue;
            }
            g = gcd(&g, &c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    fn prem(a: &Poly, b: &Poly, v: Var) -> Poly {
        let db = b.deg_in(v);
        let bc = b.coeffs_in(v);
        let lcb = bc[db as usize].clone();
        let mut r = a.clone();
        loop {
            if r.is_zero() {
                return r;
            }
            let dr = r.deg_in(v);
            if dr < db {
                return r;
            }
            let lcr = r.coeffs_in(v)[dr as usize].clone();
            let shift = if dr > db { Poly::var(v).pow(dr - db) } else { Poly::one() };
            r = r.mul(&lcb).sub(&lcr.mul(&shift).mul(b));
        }
    }
}

/// Greatest common divisor, normalized to leading coefficient 1 (zero for gcd(0,0)).
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.monic();
    }
    if b.is_zero() {
        return a.monic();
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    if a == b {
        return a.monic();
    }
    let mut vs = a.vars();
    vs.extend(b.vars());
    vs.sort();
    let v = *vs.last().unwrap();
    let da = a.deg_in(v);
    let db = b.deg_in(v);
    if da == 0 {
        return gcd(a, &b.content_in(v));
    }
    if db == 0 {
        return gcd(&a.content_in(v), b);
    }
    let ca = a.content_in(v);
    let cb = b.content_in(v);
    let g = gcd(&ca, &cb);
    let pa = a.div_exact(&ca).expect("content divides");
    let pb = b.div_exact(&cb).expect("content divides");
    let (mut r0, mut r1) = if da >= db { (pa, pb) } else { (pb, pa) };
    loop {
        let r = Poly::prem(&r0, &r1, v);
        if r.is_zero() {
            break;
        }
        if r.deg_in(v) == 0 {
            return g.monic();
        }
        let c = r.content_in(v);
        r0 = r1;
        r1 = r.div_exact(&c).expect("content divides");
    }
    let c = r1.content_in(v);
    let pp = r1.div_exact(&c).expect("content divides");
    pp.mul(&g).monic()
}

fn fmt_rational(c: &BigRational) -> String {
    if c.is_integer() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub(crate) fn fmt_mono(m: &Mono) -> String {
    m.iter()
        .map(|(v, e)| if *e == 1 { format!("{v}") } else { format!("{v}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}

/// Write `c * body` with sign handling; `first` suppresses a leading " + ".
pub(crate) fn push_signed_term(out: &mut String, c: &BigRational, body: &str, first: bool) {
    let neg = c.is_negative();
    let a = c.abs();
    if first {
        if neg {
            out.push('-');
        }
    } else if neg {
        out.push_str(" - ");
    } else {
        out.push_str(" + ");
    }
    if body.is_empty() {
        out.push_str(&fmt_rational(&a));
    } else if a.is_one() {
        out.push_str(body);
    } else {
        out.push_str(&fmt_rational(&a));
        out.push('*');
        out.push_str(body);
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut s = String::new();
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            push_signed_term(&mut s, c, &fmt_mono(m), i == 0);
        }
        write!(f, "{s}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::var(Var::X)
    }

    #[test]
    fn gcd_univariate() {
        let a = x().pow(2).sub(&Poly::one());
        let b = x().sub(&Poly::one()).mul(&x().add(&Poly::constant(q(2))));
        assert_eq!(gcd(&a, &b), x().sub(&Poly::one()));
    }

    #[test]
    fn gcd_multivariate() {
        let c = Poly::var(Var::Param(Sym::new("c")));
        let f = x().add(&c);
        let a = f.mul(&x().sub(&c)).mul(&c);
        let b = f.pow(2).mul(&x());
        assert_eq!(gcd(&a, &b), f.monic());
    }

    #[test]
    fn exact_division() {
        let a = x().pow(3).sub(&Poly::one());
        let b = x().sub(&Poly::one());
        let qt = a.div_exact(&b).unwrap();
        assert_eq!(qt.mul(&b), a);
        assert!(x().div_exact(&b).is_none());
    }
}
