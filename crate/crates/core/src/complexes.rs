//! De Rham and variational complexes as skewsymmetric arrays of λ-polynomials,
//! the differentials δ_K and d_K, the jet filtration with its local homotopy
//! operators, cohomology reduction and the dimension count.

use crate::diffalg::{antiderivative_in, functional_eq, DiffPoly, Jet, LocalFunctional};
use crate::diffop::{solve_rational, MatDiffOp};
use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::lampoly::{binom, LamPoly, LinD};
use crate::linsys;
use crate::pva::{check_jacobi, LambdaBracket};
use num_traits::ToPrimitive;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Nondecreasing index tuples of length k over 0..ell.
pub fn sorted_tuples(ell: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(ell: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..ell {
            cur.push(i);
            rec(ell, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(ell, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

fn all_tuples(ell: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..ell).map(move |i| {
                    let mut t = t.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub(crate) fn perm_sign(p: &[usize]) -> i64 {
    let mut inv = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            if p[a] > p[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Skewsymmetric array of arity k over ℓ variables, stored on nondecreasing keys.
#[derive(Clone, PartialEq, Eq)]
pub struct SkewArray {
    ell: usize,
    k: usize,
    entries: BTreeMap<Vec<usize>, LamPoly>,
}

impl fmt::Debug for SkewArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl SkewArray {
    pub fn zero(ell: usize, k: usize) -> SkewArray {
        SkewArray {
            ell,
            k,
            entries: BTreeMap::new(),
        }
    }

    /// Arity-0 array.
    pub fn scalar(ell: usize, f: DiffPoly) -> SkewArray {
        let mut a = SkewArray::zero(ell, 0);
        a.insert(Vec::new(), LamPoly::constant(0, f));
        a
    }

    /// Arity-1 array with constant entries.
    pub fn from_vector(v: &[DiffPoly]) -> SkewArray {
        let mut a = SkewArray::zero(v.len(), 1);
        for (i, f) in v.iter().enumerate() {
            a.insert(vec![i], LamPoly::constant(1, f.clone()));
        }
        a
    }

    /// Build from entries on arbitrary keys; each sorted entry is replaced by its
    /// antisymmetrization under the permutations fixing the key.
    pub fn from_entries(ell: usize, k: usize, entries: impl IntoIterator<Item = (Vec<usize>, LamPoly)>) -> Result<SkewArray> {
        let mut raw: BTreeMap<Vec<usize>, LamPoly> = BTreeMap::new();
        for (key, p) in entries {
            if key.len() != k || p.nvars() != k {
                return Err(Error::ShapeMismatch(format!("entry of arity {} in an arity {k} array", key.len())));
            }
            if let Some(&i) = key.iter().find(|&&i| i >= ell) {
                return Err(Error::Arity { index: i + 1, ell });
            }
            let (sorted, sign, perm) = sort_key(&key);
            // P_key(λ) = sign·P_sorted(λ_perm) inverts to P_sorted(λ) = sign·P_key(λ_perm⁻¹).
            let mut inv = vec![0; k];
            for (a, &p) in perm.iter().enumerate() {
                inv[p] = a;
            }
            let q = p.permute(&inv);
            let q = if sign < 0 { q.neg() } else { q };
            raw.entry(sorted).or_insert_with(|| LamPoly::zero(k)).add_assign(&q);
        }
        let mut out = SkewArray::zero(ell, k);
        for (key, p) in raw {
            let q = antisymmetrize(&key, &p);
            out.insert(key, q);
        }
        Ok(out)
    }

    fn insert(&mut self, key: Vec<usize>, p: LamPoly) {
        if p.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, p);
        }
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &BTreeMap<Vec<usize>, LamPoly> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry on any index tuple, extended from the sorted key by skewsymmetry.
    pub fn get(&self, key: &[usize]) -> LamPoly {
        let (sorted, sign, perm) = sort_key(key);
        match self.entries.get(&sorted) {
            None => LamPoly::zero(self.k),
            Some(p) => {
                let q = p.permute(&perm);
                if sign < 0 {
                    q.neg()
                } else {
                    q
                }
            }
        }
    }

    fn zip(&self, o: &SkewArray, f: impl Fn(&LamPoly, &LamPoly) -> LamPoly) -> SkewArray {
        assert_eq!((self.ell, self.k), (o.ell, o.k), "arrays of different shapes");
        let keys: BTreeSet<&Vec<usize>> = self.entries.keys().chain(o.entries.keys()).collect();
        let mut out = SkewArray::zero(self.ell, self.k);
        for key in keys {
            let z = LamPoly::zero(self.k);
            let a = self.entries.get(key).unwrap_or(&z);
            let b = o.entries.get(key).unwrap_or(&z);
            out.insert(key.clone(), f(a, b));
        }
        out
    }

    pub fn add(&self, o: &SkewArray) -> SkewArray {
        self.zip(o, |a, b| a.add(b))
    }

    pub fn sub(&self, o: &SkewArray) -> SkewArray {
        self.zip(o, |a, b| a.sub(b))
    }

    pub fn neg(&self) -> SkewArray {
        self.map_entries(|p| p.neg())
    }

    pub fn scale(&self, c: &FieldElem) -> SkewArray {
        self.map_entries(|p| p.scale(c))
    }

    pub fn map_entries(&self, f: impl Fn(&LamPoly) -> LamPoly) -> SkewArray {
        let mut out = SkewArray::zero(self.ell, self.k);
        for (key, p) in &self.entries {
            out.insert(key.clone(), f(p));
        }
        out
    }

    /// Every stored entry is antisymmetric under the permutations fixing its key.
    pub fn is_skew(&self) -> bool {
        self.entries.iter().all(|(key, p)| antisymmetrize(key, p) == *p)
    }

    pub fn is_quasiconstant(&self) -> bool {
        self.entries.values().all(|p| p.is_quasiconstant())
    }

    pub fn jets(&self) -> BTreeSet<Jet> {
        self.entries.values().flat_map(|p| p.terms().flat_map(|(_, c)| c.jets())).collect()
    }

    /// (∂ + λ_1 + … + λ_k)P.
    pub fn partial_action(&self) -> SkewArray {
        let lin = vec![1; self.k];
        self.map_entries(|p| p.apply_shift(&lin, 1, 1))
    }
}

/// Sorted key, sign of the sorting permutation, and the map perm[a] = position in the input.
fn sort_key(key: &[usize]) -> (Vec<usize>, i64, Vec<usize>) {
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by_key(|&a| key[a]);
    let sorted = idx.iter().map(|&a| key[a]).collect();
    let sign = perm_sign(&idx);
    (sorted, sign, idx)
}

/// Average of sign(σ)·P∘σ over permutations σ that fix the sorted key.
fn antisymmetrize(key: &[usize], p: &LamPoly) -> LamPoly {
    let k = key.len();
    let group: Vec<Vec<usize>> = permutations(k)
        .into_iter()
        .filter(|s| s.iter().enumerate().all(|(a, &b)| key[a] == key[b]))
        .collect();
    if group.len() == 1 {
        return p.clone();
    }
    let mut acc = LamPoly::zero(k);
    for s in &group {
        let q = p.permute(s);
        acc.add_assign(&if perm_sign(s) < 0 { q.neg() } else { q });
    }
    acc.scale(&FieldElem::ratio(1, group.len() as i64))
}

impl fmt::Display for SkewArray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|(key, p)| {
                let k: Vec<String> = key.iter().map(|i| (i + 1).to_string()).collect();
                format!("[{}]: {}", k.join(","), p)
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_k(p: &SkewArray, k: &MatDiffOp) -> Result<()> {
    if !k.is_square() || k.rows() != p.ell {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator on an array over {} variables",
            k.rows(),
            k.cols(),
            p.ell
        )));
    }
    Ok(())
}

fn jet_partial_poly(p: &LamPoly, j: Jet) -> LamPoly {
    p.map_coeffs(|c| c.jet_partial(j.i, j.n))
}

/// The Σ_α (−1)^α Σ_{j,n} ∂P_{α̌}/∂u_j^(n) (λ_α+∂)^n K_{j,i_α}(λ_α) part shared by δ_K and d_K.
fn delta_core(p: &SkewArray, k: &MatDiffOp) -> SkewArray {
    let ell = p.ell;
    let ar = p.k + 1;
    let jets = p.jets();
    let mut out = SkewArray::zero(ell, ar);
    for key in sorted_tuples(ell, ar) {
        let mut acc = LamPoly::zero(ar);
        for alpha in 0..ar {
            let mut rest = key.clone();
            let ia = rest.remove(alpha);
            let Some(pr) = p.entries.get(&rest) else { continue };
            let pos: Vec<usize> = (0..ar).filter(|&b| b != alpha).collect();
            let mut term = LamPoly::zero(ar);
            for &jet in &jets {
                let kj = k.get(jet.i, ia);
                if kj.is_zero() {
                    continue;
                }
                let dp = jet_partial_poly(pr, jet);
                if dp.is_zero() {
                    continue;
                }
                let mut e = vec![0; ar];
                e[alpha] = 1;
                let sym = kj.symbol(ar, alpha).apply_shift(&e.iter().map(|&x| x as i64).collect::<Vec<_>>(), 1, jet.n);
                term.add_assign(&dp.embed(ar, &pos).mul(&sym));
            }
            if alpha % 2 == 1 {
                term = term.neg();
            }
            acc.add_assign(&term);
        }
        out.insert(key, acc);
    }
    out
}

/// δ_K on Ω̃; K must be quasiconstant.
pub fn delta_k(p: &SkewArray, k: &MatDiffOp) -> Result<SkewArray> {
    check_k(p, k)?;
    if !k.is_quasiconstant() {
        return Err(Error::NotQuasiconstant);
    }
    Ok(delta_core(p, k))
}

/// The de Rham differential δ = δ_I.
pub fn de_rham_delta(p: &SkewArray) -> SkewArray {
    delta_core(p, &MatDiffOp::identity(p.ell))
}

/// Class in Ω^k = Ω̃^k/∂Ω̃^k.
#[derive(Clone, Debug)]
pub struct QuotientArray {
    pub representative: SkewArray,
}

impl QuotientArray {
    pub fn new(representative: SkewArray) -> QuotientArray {
        QuotientArray { representative }
    }

    /// Entries on sorted keys with λ_k eliminated; empty for arity 0.
    pub fn normal_form(&self) -> BTreeMap<Vec<usize>, LamPoly> {
        let p = &self.representative;
        let mut out = BTreeMap::new();
        if p.k == 0 {
            return out;
        }
        let nv = p.k - 1;
        let mut images: Vec<LinD> = (0..nv).map(|a| LinD::var(nv, a)).collect();
        images.push(LinD { lin: vec![-1; nv], d: -1 });
        for (key, e) in &p.entries {
            let q = e.subst(nv, &images);
            if !q.is_zero() {
                out.insert(key.clone(), q);
            }
        }
        out
    }

    pub fn equals(&self, o: &QuotientArray) -> Result<bool> {
        let (a, b) = (&self.representative, &o.representative);
        if (a.ell, a.k) != (b.ell, b.k) {
            return Err(Error::ShapeMismatch("classes of different shapes".into()));
        }
        if a.k == 0 {
            let f = |p: &SkewArray| p.entries.get(&Vec::new()).map(|e| e.coeff(&[])).unwrap_or_default();
            return functional_eq(&LocalFunctional(f(a)), &LocalFunctional(f(b)), a.ell);
        }
        Ok(self.normal_form() == o.normal_form())
    }

    pub fn is_zero(&self) -> Result<bool> {
        self.equals(&QuotientArray::new(SkewArray::zero(self.representative.ell, self.representative.k)))
    }
}

/// Ω¹ ≅ V^ℓ: P_i(λ) ↦ Σ_n (−∂)^n p_{i,n}.
pub fn one_form_to_vector(p: &SkewArray) -> Vec<DiffPoly> {
    assert_eq!(p.k, 1);
    let q = QuotientArray::new(p.clone()).normal_form();
    (0..p.ell).map(|i| q.get(&vec![i]).map(|e| e.coeff(&[])).unwrap_or_default()).collect()
}

/// d_K on Ω for a Poisson structure K.
pub fn d_k(p: &QuotientArray, hb: &LambdaBracket) -> Result<QuotientArray> {
    let k = hb.op();
    let p = &p.representative;
    check_k(p, k)?;
    match check_jacobi(hb) {
        Err(Error::NotSkewadjoint) => return Err(Error::NotPoisson("operator is not skewadjoint".into())),
        Err(e) => return Err(e),
        Ok(v) if !v.holds => {
            let w = v.witness.expect("failure carries a witness");
            let (a, b, c) = w.triple;
            return Err(Error::NotPoisson(format!(
                "Jacobi fails on (u{}, u{}, u{}): {}",
                a + 1,
                b + 1,
                c + 1,
                w.residual
            )));
        }
        Ok(_) => {}
    }
    let ell = p.ell;
    let ar = p.k + 1;
    let mut out = delta_core(p, k);
    if !k.is_quasiconstant() && p.k >= 1 {
        let mut second = SkewArray::zero(ell, ar);
        for key in sorted_tuples(ell, ar) {
            let mut acc = LamPoly::zero(ar);
            for alpha in 0..ar {
                for beta in alpha + 1..ar {
                    let kba = k.get(key[beta], key[alpha]);
                    if kba.is_quasiconstant() {
                        continue;
                    }
                    let rest_pos: Vec<usize> = (0..ar).filter(|&c| c != alpha && c != beta).collect();
                    let rest: Vec<usize> = rest_pos.iter().map(|&c| key[c]).collect();
                    let jets: BTreeSet<Jet> = kba.coeffs().flat_map(|(_, c)| c.jets()).collect();
                    let mut lin = vec![0i64; ar];
                    lin[alpha] = 1;
                    lin[beta] = 1;
                    for jet in jets {
                        let y = kba.map_coeffs(|c| c.jet_partial(jet.i, jet.n)).symbol(ar, alpha);
                        if y.is_zero() {
                            continue;
                        }
                        let mut idx = vec![jet.i];
                        idx.extend_from_slice(&rest);
                        let pj = p.get(&idx);
                        let Some(top) = pj.degree_in(0) else { continue };
                        for e in 0..=top {
                            let ce = pj.coeff_of_power(0, e);
                            if ce.is_zero() {
                                continue;
                            }
                            let mut t = y.apply_shift(&lin, 1, e + jet.n).mul(&ce.embed(ar, &rest_pos));
                            if jet.n % 2 == 1 {
                                t = t.neg();
                            }
                            if (alpha + beta) % 2 == 1 {
                                t = t.neg();
                            }
                            acc.add_assign(&t);
                        }
                    }
                }
            }
            second.insert(key, acc);
        }
        out = out.add(&second);
    }
    if p.k % 2 == 0 {
        out = out.neg();
    }
    Ok(QuotientArray::new(out))
}

/// Level Ω̃_{m,i} of the filtration; `i` counts variables 1..=ℓ, and (0,0) is the bottom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level {
    pub m: u32,
    pub i: usize,
}

impl Level {
    pub const BOTTOM: Level = Level { m: 0, i: 0 };

    pub fn new(m: u32, i: usize) -> Level {
        Level { m, i }
    }

    /// Next level down; (m,1) drops to (m−1,ℓ), and (0,1) to the bottom.
    pub fn prev(&self, ell: usize) -> Option<Level> {
        match (self.m, self.i) {
            (0, 0) => None,
            (0, 1) => Some(Level::BOTTOM),
            (m, 1) => Some(Level::new(m - 1, ell)),
            (m, i) => Some(Level::new(m, i - 1)),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.i)
    }
}

/// Jet u_j^(n) (zero-based j) belongs to V_{m,i}.
fn jet_within(jet: Jet, lv: Level) -> bool {
    (jet.n, jet.i + 1) <= (lv.m, lv.i)
}

pub fn in_filtration(p: &SkewArray, n: u32, lv: Level) -> bool {
    if !p.jets().into_iter().all(|j| jet_within(j, lv)) {
        return false;
    }
    let hi = lv.m as i64 + n as i64;
    p.entries.iter().all(|(key, e)| {
        e.terms().all(|(ex, _)| {
            key.iter().zip(ex).all(|(&idx, &d)| {
                let cap = if idx < lv.i { hi } else { hi - 1 };
                d as i64 <= cap
            })
        })
    })
}

/// Minimal level containing P.
pub fn filtration_level(p: &SkewArray, n: u32) -> Level {
    if in_filtration(p, n, Level::BOTTOM) {
        return Level::BOTTOM;
    }
    let top_order = p.jets().iter().map(|j| j.n).max().unwrap_or(0);
    let top_deg = p
        .entries
        .values()
        .flat_map(|e| e.terms().flat_map(|(ex, _)| ex.iter().copied()))
        .max()
        .unwrap_or(0);
    let mmax = top_order.max(top_deg) + 1;
    for m in 0..=mmax {
        for i in 1..=p.ell {
            let lv = Level::new(m, i);
            if in_filtration(p, n, lv) {
                return lv;
            }
        }
    }
    unreachable!("every array lies in some level")
}

/// ∫du_i^(m) f for f ∈ V_{m,i}, termwise in the top jet.
pub fn antiderivative(f: &DiffPoly, lv: Level) -> Result<DiffPoly> {
    if lv.i == 0 {
        return Err(Error::OutOfFiltration("no top variable at the bottom level".into()));
    }
    if let Some(j) = f.jets().into_iter().find(|j| !jet_within(*j, lv)) {
        return Err(Error::OutOfFiltration(format!("{j} lies above level {lv}")));
    }
    Ok(antiderivative_in(f, Jet::new(lv.i - 1, lv.m)))
}

/// Local homotopy h_{m,i}: (hP)_I(λ) = ∫du_i^(m) [μ^{m+N}] P_{i,I}(μ, λ).
pub fn homotopy(p: &SkewArray, lv: Level, n: u32) -> Result<SkewArray> {
    if p.k == 0 {
        return Err(Error::ShapeMismatch("homotopy needs arity at least 1".into()));
    }
    if lv.i == 0 || lv.i > p.ell {
        return Err(Error::OutOfFiltration(format!("level {lv} has no homotopy")));
    }
    if !in_filtration(p, n, lv) {
        return Err(Error::OutOfFiltration(format!("array is not in level {lv}")));
    }
    let ar = p.k - 1;
    let top = Jet::new(lv.i - 1, lv.m);
    let mut out = SkewArray::zero(p.ell, ar);
    for key in sorted_tuples(p.ell, ar) {
        let mut idx = vec![lv.i - 1];
        idx.extend_from_slice(&key);
        let c = p.get(&idx).coeff_of_power(0, lv.m + n);
        out.insert(key, c.map_coeffs(|f| antiderivative_in(f, top)));
    }
    Ok(out)
}

/// Φ_S P: P_J(λ_1+∂_1, …) Π_α S_{j_α i_α}, each ∂_α acting on its own factor of S.
pub fn phi_s(p: &SkewArray, s: &[Vec<FieldElem>]) -> Result<SkewArray> {
    let ell = p.ell;
    if s.len() != ell || s.iter().any(|r| r.len() != ell) {
        return Err(Error::ShapeMismatch("transformation matrix must be square of the array size".into()));
    }
    let ar = p.k;
    if ar == 0 {
        return Ok(p.clone());
    }
    let units: Vec<Vec<i64>> = (0..ar)
        .map(|a| {
            let mut e = vec![0; ar];
            e[a] = 1;
            e
        })
        .collect();
    let mut out = SkewArray::zero(ell, ar);
    let src = all_tuples(ell, ar);
    for key in sorted_tuples(ell, ar) {
        let mut acc = LamPoly::zero(ar);
        for j in &src {
            if j.iter().zip(&key).any(|(&ja, &ia)| s[ja][ia].is_zero()) {
                continue;
            }
            let pj = p.get(j);
            for (ex, c) in pj.terms() {
                let mut prod = LamPoly::constant(ar, c.clone());
                for a in 0..ar {
                    let f = LamPoly::constant(ar, DiffPoly::from_field(s[j[a]][key[a]].clone()));
                    prod = prod.mul(&f.apply_shift(&units[a], 1, ex[a]));
                }
                acc.add_assign(&prod);
            }
        }
        out.insert(key, acc);
    }
    Ok(out)
}

fn leading_data(k: &MatDiffOp) -> Result<(u32, Vec<Vec<FieldElem>>)> {
    if !k.is_square() {
        return Err(Error::ShapeMismatch("operator must be square".into()));
    }
    if !k.is_quasiconstant() {
        return Err(Error::NotQuasiconstant);
    }
    let n = k.order().ok_or(Error::LeadingCoeffSingular)?;
    let lc = k.leading_coeff().ok_or(Error::NotQuasiconstant)?;
    Ok((n, lc))
}

fn normalize(k: &MatDiffOp) -> Result<(u32, MatDiffOp, Vec<Vec<FieldElem>>, Vec<Vec<FieldElem>>)> {
    let (n, lc) = leading_data(k)?;
    let s = linsys::inverse(&lc).ok_or(Error::LeadingCoeffSingular)?;
    let kn = k.compose(&MatDiffOp::from_field_matrix(&s))?;
    Ok((n, kn, s, lc))
}

/// Sweep P through (1 − δ_K h_{m,i}) from its own level down to the bottom; K has identity leading coefficient.
fn sweep(p: &SkewArray, k: &MatDiffOp, n: u32, stop: Level) -> Result<(SkewArray, SkewArray)> {
    let mut rest = p.clone();
    let mut q = SkewArray::zero(p.ell, p.k.saturating_sub(1));
    let mut lv = filtration_level(&rest, n);
    while lv > stop {
        let y = homotopy(&rest, lv, n)?;
        rest = rest.sub(&delta_core(&y, k));
        q = q.add(&y);
        lv = lv.prev(p.ell).expect("above the bottom");
    }
    Ok((q, rest))
}

/// P = δ_K Q + R with R ∈ Ω̃_{0,0}, for closed P and K with invertible leading coefficient.
pub fn reduce_closed(p: &SkewArray, k: &MatDiffOp) -> Result<(SkewArray, SkewArray)> {
    check_k(p, k)?;
    if !delta_k(p, k)?.is_zero() {
        return Err(Error::NotClosed);
    }
    if p.k == 0 {
        return Ok((SkewArray::zero(p.ell, 0), p.clone()));
    }
    let (n, kn, s, lc) = normalize(k)?;
    let p1 = phi_s(p, &s)?;
    let (q1, r1) = sweep(&p1, &kn, n, Level::BOTTOM)?;
    if !in_filtration(&r1, n, Level::BOTTOM) {
        return Err(Error::OutOfFiltration("remainder left the bottom level".into()));
    }
    Ok((phi_s(&q1, &lc)?, phi_s(&r1, &lc)?))
}

/// α_k(C) = (1 − δ_K h_{0,1})…(1 − δ_K h_{0,ℓ}) ∂C on Ω̃_{0,0}.
pub fn alpha_k(c: &SkewArray, k: &MatDiffOp) -> Result<SkewArray> {
    check_k(c, k)?;
    let (n, lc) = leading_data(k)?;
    let id =
        linsys::inverse(&lc).filter(|_| (0..lc.len()).all(|i| (0..lc.len()).all(|j| lc[i][j] == if i == j { FieldElem::one() } else { FieldElem::zero() })));
    if id.is_none() {
        return Err(Error::LeadingCoeffNotIdentity);
    }
    let mut x = c.partial_action();
    if c.k == 0 {
        return Ok(x);
    }
    for i in (1..=c.ell).rev() {
        let y = homotopy(&x, Level::new(0, i), n)?;
        x = x.sub(&delta_core(&y, k));
    }
    Ok(x)
}

/// C(Nℓ, k).
pub fn dim_omega00(n: u32, ell: usize, k: usize) -> u64 {
    binom(n as u64 * ell as u64, k as u64).to_u64().expect("dimension fits")
}

/// F-basis of Ω̃^k_{0,0}: one array per k-subset of the slots (i, n), n < N.
pub fn omega00_basis(n: u32, ell: usize, k: usize) -> Vec<SkewArray> {
    slot_subsets(n, ell, k).into_iter().map(|sub| basis_element(ell, &sub)).collect()
}

fn slot_subsets(n: u32, ell: usize, k: usize) -> Vec<Vec<(usize, u32)>> {
    let slots: Vec<(usize, u32)> = (0..ell).flat_map(|i| (0..n).map(move |d| (i, d))).collect();
    let mut out = Vec::new();
    fn rec(slots: &[(usize, u32)], k: usize, start: usize, cur: &mut Vec<(usize, u32)>, out: &mut Vec<Vec<(usize, u32)>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for s in start..slots.len() {
            cur.push(slots[s]);
            rec(slots, k, s + 1, cur, out);
            cur.pop();
        }
    }
    rec(&slots, k, 0, &mut Vec::new(), &mut out);
    out
}

fn basis_element(ell: usize, sub: &[(usize, u32)]) -> SkewArray {
    let k = sub.len();
    let key: Vec<usize> = sub.iter().map(|s| s.0).collect();
    let mut e = LamPoly::zero(k);
    for s in permutations(k) {
        if !(0..k).all(|a| key[s[a]] == key[a]) {
            continue;
        }
        let ex: Vec<u32> = (0..k).map(|a| sub[s[a]].1).collect();
        let c = DiffPoly::int(perm_sign(&s));
        e.add_term(ex, c);
    }
    let mut out = SkewArray::zero(ell, k);
    out.insert(key, e);
    out
}

/// Coordinates of a quasiconstant array of degree < N in the basis of `omega00_basis`.
pub fn omega00_coords(c: &SkewArray, n: u32) -> Result<Vec<FieldElem>> {
    if !in_filtration(c, n, Level::BOTTOM) {
        return Err(Error::OutOfFiltration("array is not in the bottom level".into()));
    }
    Ok(slot_subsets(n, c.ell, c.k)
        .into_iter()
        .map(|sub| {
            let key: Vec<usize> = sub.iter().map(|s| s.0).collect();
            let ex: Vec<u32> = sub.iter().map(|s| s.1).collect();
            let v = c.entries.get(&key).map(|e| e.coeff(&ex)).unwrap_or_default();
            v.as_field().expect("quasiconstant coefficient")
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyReport {
    pub dim: u64,
    /// The bound C(Nℓ, k+1) for a linearly closed field.
    pub expected: u64,
    pub flagged_lower_bound: bool,
    /// Kernel elements of α_{k+1}, one per basis vector.
    pub basis: Vec<SkewArray>,
}

/// dim H^k(Ω, δ_K) = dim_C ker α_{k+1}, solved for rational coefficients.
pub fn cohomology_dim(k: &MatDiffOp, deg: usize, degree_bound: Option<u32>) -> Result<CohomologyReport> {
    let (n, kn, _s, lc) = normalize(k)?;
    let ell = k.rows();
    let expected = dim_omega00(n, ell, deg + 1);
    let basis = omega00_basis(n, ell, deg + 1);
    let d = basis.len();
    if d == 0 {
        return Ok(CohomologyReport {
            dim: 0,
            expected,
            flagged_lower_bound: false,
            basis: Vec::new(),
        });
    }
    // α(Σ f_s E_s) = Σ f_s' E_s + f_s α(E_s): the kernel solves f' + A f = 0.
    let mut a = vec![vec![FieldElem::zero(); d]; d];
    for (col, e) in basis.iter().enumerate() {
        let img = alpha_k(e, &kn)?;
        for (row, v) in omega00_coords(&img, n)?.into_iter().enumerate() {
            a[row][col] = v;
        }
    }
    let mut m = MatDiffOp::from_field_matrix(&a);
    for r in 0..d {
        let mut op = m.get(r, r).clone();
        op.add_at(1, DiffPoly::one());
        m.set(r, r, op);
    }
    let sol = solve_rational(&m, &vec![FieldElem::zero(); d], degree_bound)?;
    let mut reps = Vec::new();
    for v in &sol.basis {
        let mut c = SkewArray::zero(ell, deg + 1);
        for (f, e) in v.iter().zip(&basis) {
            c = c.add(&e.scale(f));
        }
        reps.push(phi_s(&c, &lc)?);
    }
    let dim = reps.len() as u64;
    Ok(CohomologyReport {
        dim,
        expected,
        flagged_lower_bound: dim < expected,
        basis: reps,
    })
}

/// The k=1 map S ↦ −K∘S∘K on skewadjoint S.
pub fn phi_k1(s: &MatDiffOp, hb: &LambdaBracket) -> Result<MatDiffOp> {
    if !s.is_skewadjoint() {
        return Err(Error::NotSkewadjoint);
    }
    let k = hb.op();
    Ok(k.compose(s)?.compose(k)?.neg())
}
