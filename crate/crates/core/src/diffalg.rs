//! Differential polynomials in jet variables over the quasiconstant field,
//! with total and partial derivatives and the variational calculus built on them.

use crate::diffop::{MatDiffOp, ScalarOp};
use crate::error::{Error, Result};
use crate::field::{integrate, poly::push_signed_term, qq, FieldElem};
use num_rational::BigRational;
use num_traits::Zero;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The jet variable u_i^(n); `i` is zero-based. Ordered by (n, i).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Jet {
    pub n: u32,
    pub i: usize,
}

impl Jet {
    pub fn new(i: usize, n: u32) -> Jet {
        Jet { n, i }
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.i == 0 { "u".to_string() } else { format!("u{}", self.i + 1) };
        match self.n {
            0 => write!(f, "{base}"),
            1 => write!(f, "{base}'"),
            2 => write!(f, "{base}''"),
            n => write!(f, "{base}^({n})"),
        }
    }
}

/// Jet monomial, sorted by jet, ordered degrevlex.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct JetMono(pub Vec<(Jet, u32)>);

impl JetMono {
    pub fn one() -> JetMono {
        JetMono(Vec::new())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| *e).sum()
    }

    pub fn exp(&self, j: Jet) -> u32 {
        self.0.iter().find(|(v, _)| *v == j).map(|(_, e)| *e).unwrap_or(0)
    }

    pub fn mul(&self, o: &JetMono) -> JetMono {
        let (a, b) = (&self.0, &o.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        JetMono(out)
    }

    /// Change the exponent of `j` by `delta`; `None` if it would go negative.
    pub fn shift(&self, j: Jet, delta: i64) -> Option<JetMono> {
        let mut v = self.0.clone();
        match v.iter().position(|(w, _)| *w == j) {
            Some(p) => {
                let e = v[p].1 as i64 + delta;
                if e < 0 {
                    return None;
                }
                if e == 0 {
                    v.remove(p);
                } else {
                    v[p].1 = e as u32;
                }
            }
            None => {
                if delta < 0 {
                    return None;
                }
                if delta > 0 {
                    let p = v.partition_point(|(w, _)| *w < j);
                    v.insert(p, (j, delta as u32));
                }
            }
        }
        Some(JetMono(v))
    }
}

impl Ord for JetMono {
    fn cmp(&self, o: &Self) -> Ordering {
        match self.degree().cmp(&o.degree()) {
            Ordering::Equal => {}
            c => return c,
        }
        // Reverse lexicographic from the smallest jet: a smaller exponent there is larger.
        let (a, b) = (&self.0, &o.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ja = a.get(i).map(|t| t.0);
            let jb = b.get(j).map(|t| t.0);
            let (v, ea, eb) = match (ja, jb) {
                (Some(x), Some(y)) if x == y => (x, a[i].1, b[j].1),
                (Some(x), Some(y)) if x < y => (x, a[i].1, 0),
                (Some(_), Some(y)) => (y, 0, b[j].1),
                (Some(x), None) => (x, a[i].1, 0),
                (None, Some(y)) => (y, 0, b[j].1),
                (None, None) => unreachable!(),
            };
            if ea != eb {
                return eb.cmp(&ea);
            }
            if ja == Some(v) {
                i += 1;
            }
            if jb == Some(v) {
                j += 1;
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for JetMono {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for JetMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(j, e)| if *e == 1 { format!("{j}") } else { format!("{j}^{e}") }).collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Element of F[u_i^(n)].
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffPoly {
    terms: BTreeMap<JetMono, FieldElem>,
}

impl fmt::Debug for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl DiffPoly {
    pub fn zero() -> DiffPoly {
        DiffPoly::default()
    }

    pub fn one() -> DiffPoly {
        DiffPoly::from_field(FieldElem::one())
    }

    pub fn int(n: i64) -> DiffPoly {
        DiffPoly::from_field(FieldElem::int(n))
    }

    pub fn from_field(c: FieldElem) -> DiffPoly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(JetMono::one(), c);
        }
        DiffPoly { terms }
    }

    /// u_i^(n), zero-based index.
    pub fn jet(i: usize, n: u32) -> DiffPoly {
        DiffPoly::monomial(JetMono(vec![(Jet::new(i, n), 1)]), FieldElem::one())
    }

    pub fn monomial(m: JetMono, c: FieldElem) -> DiffPoly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        DiffPoly { terms }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&JetMono, &FieldElem)> {
        self.terms.iter()
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: JetMono, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
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

    pub fn is_quasiconstant(&self) -> bool {
        self.terms.keys().all(|m| m.0.is_empty())
    }

    pub fn as_field(&self) -> Option<FieldElem> {
        if self.is_zero() {
            return Some(FieldElem::zero());
        }
        if self.is_quasiconstant() {
            return self.terms.get(&JetMono::one()).cloned();
        }
        None
    }

    pub fn add(&self, o: &DiffPoly) -> DiffPoly {
        let (mut r, s) = if self.terms.len() >= o.terms.len() {
            (self.clone(), o)
        } else {
            (o.clone(), self)
        };
        for (m, c) in &s.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn add_assign(&mut self, o: &DiffPoly) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub(&self, o: &DiffPoly) -> DiffPoly {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.neg());
        }
        r
    }

    pub fn neg(&self) -> DiffPoly {
        DiffPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        if c.is_one() {
            return self.clone();
        }
        DiffPoly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.mul(c))).collect(),
        }
    }

    pub fn scale_q(&self, c: &BigRational) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        DiffPoly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k.scale(c))).collect(),
        }
    }

    pub fn mul(&self, o: &DiffPoly) -> DiffPoly {
        if self.is_zero() || o.is_zero() {
            return DiffPoly::zero();
        }
        if let Some(c) = o.as_field() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_field() {
            return o.scale(&c);
        }
        let mut r = DiffPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                r.add_term(ma.mul(mb), ca.mul(cb));
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> DiffPoly {
        let mut r = DiffPoly::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Total derivative ∂ = ∂/∂x + Σ u^(n+1) ∂/∂u^(n).
    pub fn derive(&self) -> DiffPoly {
        let mut r = DiffPoly::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), c.derive());
            for &(j, e) in &m.0 {
                let nm = m.shift(j, -1).unwrap().shift(Jet::new(j.i, j.n + 1), 1).unwrap();
                r.add_term(nm, c.scale(&BigRational::from_integer(e.into())));
            }
        }
        r
    }

    pub fn derive_n(&self, n: u32) -> DiffPoly {
        let mut r = self.clone();
        for _ in 0..n {
            if r.is_zero() {
                break;
            }
            r = r.derive();
        }
        r
    }

    /// ∂f/∂u_i^(n).
    pub fn jet_partial(&self, i: usize, n: u32) -> DiffPoly {
        let j = Jet::new(i, n);
        let mut r = DiffPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(j);
            if e > 0 {
                r.add_term(m.shift(j, -1).unwrap(), c.scale(&BigRational::from_integer(e.into())));
            }
        }
        r
    }

    pub fn jets(&self) -> BTreeSet<Jet> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(j, _)| *j)).collect()
    }

    pub fn max_jet(&self) -> Option<Jet> {
        self.jets().into_iter().next_back()
    }

    /// Highest derivative order of `u_i` present.
    pub fn order_in(&self, i: usize) -> Option<u32> {
        self.jets().into_iter().filter(|j| j.i == i).map(|j| j.n).max()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.jets().into_iter().map(|j| j.i).max()
    }

    pub fn degree_in(&self, j: Jet) -> u32 {
        self.terms.keys().map(|m| m.exp(j)).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn map_coeffs(&self, f: impl Fn(&FieldElem) -> FieldElem) -> DiffPoly {
        let mut r = DiffPoly::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), f(c));
        }
        r
    }

    /// Substitute DiffPolys for the jets of each u_i (the j-th derivative of `vals[i]` for u_i^(j)).
    pub fn compose(&self, vals: &[DiffPoly]) -> DiffPoly {
        let mut cache: BTreeMap<Jet, DiffPoly> = BTreeMap::new();
        let mut r = DiffPoly::zero();
        for (m, c) in &self.terms {
            let mut t = DiffPoly::from_field(c.clone());
            for &(j, e) in &m.0 {
                let v = cache.entry(j).or_insert_with(|| vals[j.i].derive_n(j.n)).clone();
                t = t.mul(&v.pow(e));
            }
            r.add_assign(&t);
        }
        r
    }

    /// The term collection filtered by a predicate on monomials.
    pub fn filter(&self, pred: impl Fn(&JetMono) -> bool) -> DiffPoly {
        DiffPoly {
            terms: self.terms.iter().filter(|(m, _)| pred(m)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    pub fn coeff(&self, m: &JetMono) -> FieldElem {
        self.terms.get(m).cloned().unwrap_or_default()
    }
}

impl fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut s = String::new();
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            write_term(&mut s, c, &m.to_string(), idx == 0);
        }
        write!(f, "{s}")
    }
}

/// Append `c * body` to `out`, choosing signs and parentheses for a readable and reparseable form.
pub(crate) fn write_term(out: &mut String, c: &FieldElem, body: &str, first: bool) {
    if let Some(q) = c.as_rational() {
        push_signed_term(out, &q, body, first);
        return;
    }
    if c.is_polynomial() && c.num().nterms() == 1 {
        let (m, k) = c.num().terms().next().unwrap();
        let mut b = crate::field::poly::fmt_mono(m);
        if !body.is_empty() {
            b.push('*');
            b.push_str(body);
        }
        push_signed_term(out, k, &b, first);
        return;
    }
    if !first {
        out.push_str(" + ");
    }
    out.push('(');
    out.push_str(&c.to_string());
    out.push(')');
    if !body.is_empty() {
        out.push('*');
        out.push_str(body);
    }
}

/// Append `p * suffix` to `out`; multi-term coefficients are parenthesized unless no suffix follows.
pub(crate) fn write_poly_times(out: &mut String, p: &DiffPoly, suffix: &str, first: bool) {
    if p.is_zero() {
        return;
    }
    if suffix.is_empty() {
        for (i, (m, c)) in p.terms.iter().rev().enumerate() {
            write_term(out, c, &m.to_string(), first && i == 0);
        }
        return;
    }
    if p.nterms() == 1 {
        let (m, c) = p.terms.iter().next().unwrap();
        let ms = m.to_string();
        let body = if ms.is_empty() { suffix.to_string() } else { format!("{ms}*{suffix}") };
        write_term(out, c, &body, first);
        return;
    }
    if !first {
        out.push_str(" + ");
    }
    out.push_str(&format!("({p})*{suffix}"));
}

/// Local functional ∫h, a class in V/(∂V).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalFunctional(pub DiffPoly);

/// δf/δu_i = Σ_n (−∂)^n ∂f/∂u_i^(n).
pub fn variational_derivative(f: &DiffPoly, ell: usize) -> Vec<DiffPoly> {
    (0..ell)
        .map(|i| {
            let Some(top) = f.order_in(i) else { return DiffPoly::zero() };
            // Horner: p_0 − ∂(p_1 − ∂(p_2 − …)).
            let mut acc = DiffPoly::zero();
            for n in (0..=top).rev() {
                acc = f.jet_partial(i, n).sub(&acc.derive());
            }
            acc
        })
        .collect()
}

/// E_λ(f) = Σ_n (−λ−∂)^n ∂f/∂u_i^(n), as a one-variable λ-polynomial.
pub fn higher_euler(f: &DiffPoly, i: usize) -> crate::lampoly::LamPoly {
    use crate::lampoly::LamPoly;
    let mut r = LamPoly::zero(1);
    let Some(top) = f.order_in(i) else { return r };
    for n in 0..=top {
        let p = LamPoly::constant(1, f.jet_partial(i, n));
        r = r.add(&p.apply_shift(&[-1], -1, n));
    }
    r
}

/// D_F(∂)_{ij} = Σ_n (∂F_i/∂u_j^(n)) ∂^n.
pub fn frechet(fs: &[DiffPoly], ell: usize) -> MatDiffOp {
    let mut m = MatDiffOp::zero(fs.len(), ell);
    for (r, f) in fs.iter().enumerate() {
        for j in 0..ell {
            let mut op = ScalarOp::zero();
            if let Some(top) = f.order_in(j) {
                for n in 0..=top {
                    op.set(n, f.jet_partial(j, n));
                }
            }
            m.set(r, j, op);
        }
    }
    m
}

pub fn is_exact_1form(fs: &[DiffPoly], ell: usize) -> bool {
    let d = frechet(fs, ell);
    d == d.adjoint()
}

/// h with δh/δu = F for exact F, via ∫₀¹ u·F(tu) dt.
pub fn reconstruct_density(fs: &[DiffPoly], ell: usize) -> Result<DiffPoly> {
    if !is_exact_1form(fs, ell) {
        return Err(Error::NotExact("Frechet derivative is not selfadjoint".into()));
    }
    let mut h = DiffPoly::zero();
    for (i, f) in fs.iter().enumerate() {
        let mut g = DiffPoly::zero();
        for (m, c) in f.terms() {
            let w = qq(1, m.degree() as i64 + 1);
            g.add_term(m.clone(), c.scale(&w));
        }
        h = h.add(&DiffPoly::jet(i, 0).mul(&g));
    }
    Ok(h)
}

/// Write f = ∂g + r with r quasiconstant. Fails with NoPreimage if f ∉ ∂V + F.
pub fn split_total_derivative(f: &DiffPoly) -> Result<(DiffPoly, FieldElem)> {
    let mut rest = f.clone();
    let mut g = DiffPoly::zero();
    while let Some(top) = rest.max_jet() {
        if top.n == 0 {
            return Err(Error::NoPreimage(format!("{rest} depends on undifferentiated variables")));
        }
        // Top-order jets enter a total derivative linearly, with lower-order coefficients.
        for (m, _) in rest.terms() {
            let d: u32 = m.0.iter().filter(|(j, _)| j.n == top.n).map(|(_, e)| *e).sum();
            if d > 1 {
                return Err(Error::NoPreimage(format!("{rest} is nonlinear in order-{} jets", top.n)));
            }
        }
        let a = rest.jet_partial(top.i, top.n);
        let step = antiderivative_in(&a, Jet::new(top.i, top.n - 1));
        rest = rest.sub(&step.derive());
        g = g.add(&step);
        if rest.max_jet().map(|t| t >= top).unwrap_or(false) {
            return Err(Error::NoPreimage(format!("reduction does not lower the jet {top}")));
        }
    }
    let r = rest.as_field().expect("no jets left");
    Ok((g, r))
}

/// Termwise ∫ f du for a single jet variable.
pub fn antiderivative_in(f: &DiffPoly, j: Jet) -> DiffPoly {
    let mut r = DiffPoly::zero();
    for (m, c) in f.terms() {
        let e = m.exp(j);
        r.add_term(m.shift(j, 1).unwrap(), c.scale(&qq(1, e as i64 + 1)));
    }
    r
}

/// ∂⁻¹f exactly, with zero integration constant.
pub fn inverse_total_derivative(f: &DiffPoly) -> Result<DiffPoly> {
    let (g, r) = split_total_derivative(f)?;
    let (gi, res) = integrate::integrate(&r)?;
    if !res.is_zero() {
        return Err(Error::NoPreimage(format!("quasiconstant residue {res} has no rational antiderivative")));
    }
    let out = g.add(&DiffPoly::from_field(gi));
    debug_assert_eq!(out.derive(), *f);
    Ok(out)
}

/// Equality in V/∂V: vanishing variational derivative plus the quasiconstant residue test.
pub fn functional_eq(a: &LocalFunctional, b: &LocalFunctional, ell: usize) -> Result<bool> {
    let d = a.0.sub(&b.0);
    if variational_derivative(&d, ell).iter().any(|v| !v.is_zero()) {
        return Ok(false);
    }
    let (_, r) = match split_total_derivative(&d) {
        Ok(x) => x,
        Err(_) => return Ok(false),
    };
    let (_, res) = integrate::integrate(&r)?;
    Ok(res.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> DiffPoly {
        DiffPoly::jet(0, n)
    }

    #[test]
    fn total_derivative_basics() {
        assert_eq!(DiffPoly::from_field(FieldElem::x()).derive(), DiffPoly::one());
        assert_eq!(u(0).derive(), u(1));
        let half = DiffPoly::from_field(FieldElem::ratio(1, 2));
        assert_eq!(half.mul(&u(0).pow(2)).derive(), u(0).mul(&u(1)));
    }

    #[test]
    fn printing() {
        let c = DiffPoly::from_field(FieldElem::param("c"));
        let p = u(0).mul(&u(1)).scale(&FieldElem::int(3)).add(&c.mul(&u(3)));
        assert_eq!(p.to_string(), "3*u*u' + c*u^(3)");
    }

    #[test]
    fn total_derivative_split() {
        let f = u(0).mul(&u(1));
        let (g, r) = split_total_derivative(&f).unwrap();
        assert!(r.is_zero());
        assert_eq!(g.derive(), f);
        assert!(split_total_derivative(&u(0)).is_err());
        assert!(inverse_total_derivative(&DiffPoly::from_field(FieldElem::one().div(&FieldElem::x()).unwrap())).is_err());
    }

    #[test]
    fn degrevlex_order() {
        let a = JetMono(vec![(Jet::new(0, 0), 2)]);
        let b = JetMono(vec![(Jet::new(0, 1), 1)]);
        assert!(a > b);
        assert!(JetMono::one() < b);
    }
}
