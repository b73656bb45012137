//! k-differential operators on F^ℓ: the S_{k+1} action, total skewsymmetrization,
//! the matrix-operator module action, the b/c coefficient tables, and the
//! spaces of skewsymmetric solutions that compute Poisson cohomology.

use crate::complexes::{omega00_basis, perm_sign, permutations, SkewArray};
use crate::diffalg::DiffPoly;
use crate::diffop::{solve_rational, MatDiffOp, ScalarOp, SolutionSet};
use crate::error::{Error, Result};
use crate::field::{FieldElem, Sym, Var};
use crate::lampoly::{binom, LamPoly, LinD};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Array P_{i_0,i_1…i_k}(λ_1…λ_k) of polynomials with quasiconstant coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct KDiffOp {
    ell: usize,
    k: usize,
    entries: BTreeMap<Vec<usize>, LamPoly>,
}

impl fmt::Debug for KDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for KDiffOp {
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

impl KDiffOp {
    pub fn zero(ell: usize, k: usize) -> KDiffOp {
        KDiffOp {
            ell,
            k,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_entries(ell: usize, k: usize, entries: impl IntoIterator<Item = (Vec<usize>, LamPoly)>) -> Result<KDiffOp> {
        let mut out = KDiffOp::zero(ell, k);
        for (key, p) in entries {
            if key.len() != k + 1 || p.nvars() != k {
                return Err(Error::ShapeMismatch(format!("entry with {} indices in a {k}-differential operator", key.len())));
            }
            if let Some(&i) = key.iter().find(|&&i| i >= ell) {
                return Err(Error::Arity { index: i + 1, ell });
            }
            if !p.is_quasiconstant() {
                return Err(Error::NotQuasiconstant);
            }
            out.add_entry(key, &p);
        }
        Ok(out)
    }

    /// k = 0: a vector in F^ℓ.
    pub fn from_vector(v: &[FieldElem]) -> KDiffOp {
        let mut out = KDiffOp::zero(v.len(), 0);
        for (i, f) in v.iter().enumerate() {
            out.add_entry(vec![i], &LamPoly::constant(0, DiffPoly::from_field(f.clone())));
        }
        out
    }

    /// k = 1: P_{ij}(λ) is the symbol of M_{ij}(∂).
    pub fn from_matrix(m: &MatDiffOp) -> Result<KDiffOp> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch("1-differential operators are square".into()));
        }
        if !m.is_quasiconstant() {
            return Err(Error::NotQuasiconstant);
        }
        let mut out = KDiffOp::zero(m.rows(), 1);
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                out.add_entry(vec![i, j], &m.get(i, j).symbol(1, 0));
            }
        }
        Ok(out)
    }

    pub fn to_matrix(&self) -> Result<MatDiffOp> {
        if self.k != 1 {
            return Err(Error::ShapeMismatch(format!("a {}-differential operator is not a matrix", self.k)));
        }
        let mut m = MatDiffOp::zero(self.ell, self.ell);
        for (key, p) in &self.entries {
            m.set(key[0], key[1], ScalarOp::from_symbol(p));
        }
        Ok(m)
    }

    fn add_entry(&mut self, key: Vec<usize>, p: &LamPoly) {
        let e = self.entries.entry(key.clone()).or_insert_with(|| LamPoly::zero(self.k));
        e.add_assign(p);
        if e.is_zero() {
            self.entries.remove(&key);
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

    pub fn get(&self, key: &[usize]) -> LamPoly {
        self.entries.get(key).cloned().unwrap_or_else(|| LamPoly::zero(self.k))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, o: &KDiffOp) -> KDiffOp {
        let mut out = self.clone();
        for (key, p) in &o.entries {
            out.add_entry(key.clone(), p);
        }
        out
    }

    pub fn neg(&self) -> KDiffOp {
        self.map(|p| p.neg())
    }

    pub fn sub(&self, o: &KDiffOp) -> KDiffOp {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &FieldElem) -> KDiffOp {
        self.map(|p| p.scale(c))
    }

    fn map(&self, f: impl Fn(&LamPoly) -> LamPoly) -> KDiffOp {
        let mut out = KDiffOp::zero(self.ell, self.k);
        for (key, p) in &self.entries {
            out.add_entry(key.clone(), &f(p));
        }
        out
    }

    /// Max λ-degree over all entries and variables.
    pub fn degree(&self) -> Option<u32> {
        (0..self.k).filter_map(|a| self.entries.values().filter_map(|p| p.degree_in(a)).max()).max()
    }

    /// P(F¹…F^k)_{i_0} = Σ p^{n}_{i_0,I} Π ∂^{n_α} F^α_{i_α}.
    pub fn apply(&self, args: &[Vec<DiffPoly>]) -> Result<Vec<DiffPoly>> {
        if args.len() != self.k || args.iter().any(|a| a.len() != self.ell) {
            return Err(Error::ShapeMismatch("arguments do not match the operator".into()));
        }
        let mut out = vec![DiffPoly::zero(); self.ell];
        for (key, p) in &self.entries {
            for (ex, c) in p.terms() {
                let mut t = c.clone();
                for a in 0..self.k {
                    t = t.mul(&args[a][key[a + 1]].derive_n(ex[a]));
                }
                out[key[0]].add_assign(&t);
            }
        }
        Ok(out)
    }

    pub fn is_skewsymmetric(&self) -> bool {
        permutations(self.k).into_iter().all(|s| {
            let mut full = vec![0];
            full.extend(s.iter().map(|a| a + 1));
            let q = sigma_action(self, &full);
            if perm_sign(&s) < 0 {
                q == self.neg()
            } else {
                q == *self
            }
        })
    }

    pub fn is_totally_skewsymmetric(&self) -> bool {
        total_skewsymmetrize(self) == *self
    }
}

/// λ_0 = −λ_1−…−λ_k−∂ as a substitution image in k variables.
fn lambda0(k: usize) -> LinD {
    LinD { lin: vec![-1; k], d: -1 }
}

/// P^σ_I(λ) = P_{I∘σ⁻¹}(λ_{σ⁻¹(1)}, …), with λ_0 pushed onto the coefficients.
/// `sigma[a]` is σ(a) on 0..=k.
pub fn sigma_action(p: &KDiffOp, sigma: &[usize]) -> KDiffOp {
    let k = p.k;
    assert_eq!(sigma.len(), k + 1, "permutation of the wrong length");
    let mut inv = vec![0; k + 1];
    for (a, &s) in sigma.iter().enumerate() {
        inv[s] = a;
    }
    let images: Vec<LinD> = (1..=k).map(|b| if inv[b] == 0 { lambda0(k) } else { LinD::var(k, inv[b] - 1) }).collect();
    let mut out = KDiffOp::zero(p.ell, k);
    for (j, q) in &p.entries {
        let key: Vec<usize> = (0..=k).map(|c| j[sigma[c]]).collect();
        out.add_entry(key, &q.subst(k, &images));
    }
    out
}

fn transposition(k: usize, a: usize) -> Vec<usize> {
    let mut t: Vec<usize> = (0..=k).collect();
    t.swap(0, a);
    t
}

/// ⟨P⟩⁻ = (1/(k+1)!) Σ sign(σ) P^σ.
pub fn total_skewsymmetrize(p: &KDiffOp) -> KDiffOp {
    let mut acc = KDiffOp::zero(p.ell, p.k);
    let perms = permutations(p.k + 1);
    for s in &perms {
        let q = sigma_action(p, s);
        acc = if perm_sign(s) < 0 { acc.sub(&q) } else { acc.add(&q) };
    }
    acc.scale(&FieldElem::ratio(1, perms.len() as i64))
}

/// (k+1)⟨P⟩⁻ = P − Σ_α P^{τ_α}, valid for skewsymmetric P.
pub fn skew_alternating_sum(p: &KDiffOp) -> KDiffOp {
    let mut acc = p.clone();
    for a in 1..=p.k {
        acc = acc.sub(&sigma_action(p, &transposition(p.k, a)));
    }
    acc
}

/// ⟨P⟩⁻ for skewsymmetric P by the alternating shortcut.
pub fn total_skewsymmetrize_skew(p: &KDiffOp) -> KDiffOp {
    skew_alternating_sum(p).scale(&FieldElem::ratio(1, p.k as i64 + 1))
}

/// (K∘P)_{i_0,I}(λ) = Σ_j K_{i_0 j}(λ_1+…+λ_k+∂) P_{j,I}(λ).
pub fn module_action(kop: &MatDiffOp, p: &KDiffOp) -> Result<KDiffOp> {
    if !kop.is_square() || kop.rows() != p.ell {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator on a {}-component array",
            kop.rows(),
            kop.cols(),
            p.ell
        )));
    }
    let lin = vec![1; p.k];
    let mut out = KDiffOp::zero(p.ell, p.k);
    for (key, q) in &p.entries {
        for i0 in 0..p.ell {
            let e = kop.get(i0, key[0]);
            if e.is_zero() {
                continue;
            }
            let ops: Vec<(u32, DiffPoly)> = e.coeffs().map(|(n, c)| (*n, c.clone())).collect();
            let mut nk = key.clone();
            nk[0] = i0;
            out.add_entry(nk, &q.apply_op_shift(&ops, &lin, 1));
        }
    }
    Ok(out)
}

type Table = Arc<BTreeMap<Vec<u32>, BigInt>>;

fn cache(which: u8) -> &'static Mutex<HashMap<Vec<u32>, Table>> {
    static B: OnceLock<Mutex<HashMap<Vec<u32>, Table>>> = OnceLock::new();
    static C: OnceLock<Mutex<HashMap<Vec<u32>, Table>>> = OnceLock::new();
    if which == b'b' {
        B.get_or_init(Default::default)
    } else {
        C.get_or_init(Default::default)
    }
}

/// Top two entries of the nonincreasing reordering.
fn top_two(n: &[u32]) -> (u32, u32) {
    let mut s = n.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    (s[0], s[1])
}

fn delta_table(n: &[u32]) -> BTreeMap<Vec<u32>, BigInt> {
    BTreeMap::from([(n.to_vec(), BigInt::one())])
}

fn accumulate(acc: &mut BTreeMap<Vec<u32>, BigInt>, t: &BTreeMap<Vec<u32>, BigInt>, sign: i64) {
    for (m, c) in t {
        let e = acc.entry(m.clone()).or_insert_with(BigInt::zero);
        *e += c * sign;
        if e.is_zero() {
            acc.remove(m);
        }
    }
}

/// λ_α^{n_α} → −Σ_{β≠α} λ^{n+e_β−e_α} − λ^{n−e_α}∂ at the first maximal α.
fn lower_top(n: &[u32], rec: impl Fn(&[u32]) -> Table) -> BTreeMap<Vec<u32>, BigInt> {
    let top = *n.iter().max().unwrap();
    let a = n.iter().position(|&v| v == top).unwrap();
    let mut acc = BTreeMap::new();
    for b in 0..n.len() {
        let mut m = n.to_vec();
        m[a] -= 1;
        if b != a {
            m[b] += 1;
        }
        accumulate(&mut acc, &rec(&m), -1);
    }
    acc
}

fn memo(which: u8, n: &[u32], compute: impl FnOnce() -> BTreeMap<Vec<u32>, BigInt>) -> Table {
    if let Some(t) = cache(which).lock().unwrap().get(n) {
        return t.clone();
    }
    let t = Arc::new(compute());
    cache(which).lock().unwrap().insert(n.to_vec(), t.clone());
    t
}

/// All nonzero b^n_m, keyed by m.
pub fn b_table(n: &[u32]) -> Result<Table> {
    if n.len() < 2 {
        return Err(Error::BadSupport("coefficient tables need at least two indices".into()));
    }
    Ok(b_rec(n))
}

fn b_rec(n: &[u32]) -> Table {
    memo(b'b', n, || {
        let (t0, t1) = top_two(n);
        if t0 - t1 <= 1 {
            delta_table(n)
        } else {
            lower_top(n, b_rec)
        }
    })
}

/// All nonzero c^n_m, keyed by m.
pub fn c_table(n: &[u32]) -> Result<Table> {
    if n.len() < 2 {
        return Err(Error::BadSupport("coefficient tables need at least two indices".into()));
    }
    Ok(c_rec(n))
}

fn c_rec(n: &[u32]) -> Table {
    memo(b'c', n, || {
        let (t0, t1) = top_two(n);
        if t0 == t1 + 1 {
            delta_table(n)
        } else if t0 > t1 {
            lower_top(n, c_rec)
        } else {
            // Multiply by 1 = −Σ_α λ_α ∂⁻¹.
            let mut acc = BTreeMap::new();
            for a in 0..n.len() {
                let mut m = n.to_vec();
                m[a] += 1;
                accumulate(&mut acc, &c_rec(&m), -1);
            }
            acc
        }
    })
}

fn check_support(n: &[u32], m: &[u32], gaps: &[u32]) -> Result<()> {
    if n.len() != m.len() || n.len() < 2 {
        return Err(Error::BadSupport("index tuples of different or too short lengths".into()));
    }
    let (t0, t1) = top_two(m);
    if !gaps.contains(&(t0 - t1)) {
        return Err(Error::BadSupport(format!("top gap {} of {:?} is not allowed", t0 - t1, m)));
    }
    Ok(())
}

pub fn coeff_b(n: &[u32], m: &[u32]) -> Result<BigInt> {
    check_support(n, m, &[0, 1])?;
    Ok(b_table(n)?.get(m).cloned().unwrap_or_default())
}

pub fn coeff_c(n: &[u32], m: &[u32]) -> Result<BigInt> {
    check_support(n, m, &[1])?;
    Ok(c_table(n)?.get(m).cloned().unwrap_or_default())
}

/// λ_0^{n_0}…λ_k^{n_k} = Σ c·λ^m ∂^{Σ(n−m)}; each term is (m, c, ∂-exponent).
pub fn expand_monomial(n: &[u32]) -> Result<Vec<(Vec<u32>, BigInt, i64)>> {
    let total: i64 = n.iter().map(|&v| v as i64).sum();
    Ok(c_table(n)?
        .iter()
        .map(|(m, c)| (m.clone(), c.clone(), total - m.iter().map(|&v| v as i64).sum::<i64>()))
        .collect())
}

/// Same with the b-coefficients (top gap 0 or 1, nonnegative ∂-exponents).
pub fn expand_monomial_b(n: &[u32]) -> Result<Vec<(Vec<u32>, BigInt, i64)>> {
    let total: i64 = n.iter().map(|&v| v as i64).sum();
    Ok(b_table(n)?
        .iter()
        .map(|(m, c)| (m.clone(), c.clone(), total - m.iter().map(|&v| v as i64).sum::<i64>()))
        .collect())
}

/// Solutions of a linear problem in skewsymmetric operators, over C.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaSpace {
    pub basis: Vec<KDiffOp>,
    /// C(Nℓ, k+1), the count over a linearly closed field.
    pub expected: u64,
    pub flagged_lower_bound: bool,
}

/// Skewsymmetric operators with entries of degree ≤ `deg` per variable, as
/// unknown functions times F-basis elements.
struct Ansatz {
    ell: usize,
    k: usize,
    syms: Vec<Sym>,
    parts: Vec<KDiffOp>,
}

impl Ansatz {
    fn new(ell: usize, k: usize, deg: u32) -> Ansatz {
        let mut parts = Vec::new();
        for i0 in 0..ell {
            for e in omega00_basis(deg + 1, ell, k) {
                parts.push(lift(&e, i0));
            }
        }
        let syms = (0..parts.len()).map(|s| Sym::new(&format!("#p{s}"))).collect();
        Ansatz { ell, k, syms, parts }
    }

    fn symbolic(&self) -> KDiffOp {
        let mut out = KDiffOp::zero(self.ell, self.k);
        for (s, part) in self.syms.iter().zip(&self.parts) {
            out = out.add(&part.map(|p| p.mul_coeff(&DiffPoly::from_field(FieldElem::from_poly(crate::field::Poly::var(Var::Fun(*s, 0)))))));
        }
        out
    }

    fn assemble(&self, v: &[FieldElem]) -> KDiffOp {
        let mut out = KDiffOp::zero(self.ell, self.k);
        for (f, part) in v.iter().zip(&self.parts) {
            if !f.is_zero() {
                out = out.add(&part.scale(f));
            }
        }
        out
    }

    /// Row operator and right side from `expr = target` on one coefficient.
    fn equation(&self, expr: &FieldElem, target: &FieldElem) -> (Vec<ScalarOp>, FieldElem) {
        let mut row = vec![ScalarOp::zero(); self.syms.len()];
        let mut rest = expr.clone();
        for v in expr.vars() {
            let Var::Fun(s, n) = v else { continue };
            let Some(idx) = self.syms.iter().position(|t| *t == s) else { continue };
            let c = FieldElem::new(expr.num().partial(v), expr.den().clone()).expect("nonzero denominator");
            row[idx].add_at(n, DiffPoly::from_field(c));
            rest = rest.subst(v, &FieldElem::zero());
        }
        (row, target.sub(&rest))
    }
}

/// Sub-array E placed in the row i_0: P_{i_0,J} = E_J.
fn lift(e: &SkewArray, i0: usize) -> KDiffOp {
    let k = e.arity();
    let mut out = KDiffOp::zero(e.ell(), k);
    for key in crate::complexes::sorted_tuples(e.ell(), k) {
        if !e.entries().contains_key(&key) {
            continue;
        }
        for s in permutations(k) {
            let j: Vec<usize> = s.iter().map(|&a| key[a]).collect();
            let mut full = vec![i0];
            full.extend_from_slice(&j);
            if !out.entries.contains_key(&full) {
                out.add_entry(full, &e.get(&j));
            }
        }
    }
    out
}

/// Solve (k+1)⟨K∘P⟩⁻ = S over skewsymmetric P with the given entry degree.
fn solve_alternating(kop: &MatDiffOp, s: &KDiffOp, deg: u32, degree_bound: Option<u32>) -> Result<(Ansatz, SolutionSet)> {
    let ans = Ansatz::new(s.ell, s.k, deg);
    let expr = skew_alternating_sum(&module_action(kop, &ans.symbolic())?);
    let keys: BTreeSet<&Vec<usize>> = expr.entries.keys().chain(s.entries.keys()).collect();
    let mut rows: Vec<Vec<ScalarOp>> = Vec::new();
    let mut rhs: Vec<FieldElem> = Vec::new();
    for key in keys {
        let e = expr.get(key);
        let t = s.get(key);
        let monos: BTreeSet<Vec<u32>> = e.terms().chain(t.terms()).map(|(m, _)| m.clone()).collect();
        for m in monos {
            let ev = e.coeff(&m).as_field().expect("quasiconstant");
            let tv = t.coeff(&m).as_field().expect("quasiconstant");
            let (row, r) = ans.equation(&ev, &tv);
            if row.iter().all(|o| o.is_zero()) {
                if !r.is_zero() {
                    return Err(Error::Incomplete(format!("degree {deg} ansatz cannot meet the right side")));
                }
                continue;
            }
            if rows.iter().zip(&rhs).any(|(o, or)| *o == row && *or == r) {
                continue;
            }
            rows.push(row);
            rhs.push(r);
        }
    }
    if rows.is_empty() {
        let n = ans.parts.len();
        let basis = (0..n)
            .map(|c| {
                let mut v = vec![FieldElem::zero(); n];
                v[c] = FieldElem::one();
                v
            })
            .collect();
        return Ok((
            ans,
            SolutionSet {
                particular: vec![FieldElem::zero(); n],
                basis,
                complete: true,
            },
        ));
    }
    let m = MatDiffOp::from_rows(rows)?;
    let sol = solve_rational(&m, &rhs, degree_bound)?;
    Ok((ans, sol))
}

fn order_and_check(kop: &MatDiffOp) -> Result<u32> {
    if !kop.is_square() {
        return Err(Error::ShapeMismatch("operator must be square".into()));
    }
    if !kop.is_quasiconstant() {
        return Err(Error::NotQuasiconstant);
    }
    let n = kop.order().ok_or(Error::LeadingCoeffSingular)?;
    let lc = kop.leading_coeff().ok_or(Error::NotQuasiconstant)?;
    if crate::linsys::inverse(&lc).is_none() {
        return Err(Error::LeadingCoeffSingular);
    }
    Ok(n)
}

/// {P skewsymmetric, degree ≤ N−1 per variable : ⟨K∘P⟩⁻ = 0} over C.
/// Without an explicit bound the ansatz degree grows until the expected count is met.
pub fn skew_kernel(kop: &MatDiffOp, k: usize, degree_bound: Option<u32>) -> Result<SigmaSpace> {
    let n = order_and_check(kop)?;
    let ell = kop.rows();
    let expected = binom(n as u64 * ell as u64, k as u64 + 1).to_u64().expect("fits");
    if n == 0 {
        return Ok(SigmaSpace {
            basis: Vec::new(),
            expected,
            flagged_lower_bound: false,
        });
    }
    let zero = KDiffOp::zero(ell, k);
    let schedule: Vec<u32> = match degree_bound {
        Some(b) => vec![b],
        None => vec![2, 4, 8, 16],
    };
    let mut best: Vec<KDiffOp> = Vec::new();
    for b in schedule {
        let (ans, sol) = match solve_alternating(kop, &zero, n - 1, Some(b)) {
            Ok(x) => x,
            Err(Error::Incomplete(_)) if degree_bound.is_none() => continue,
            Err(e) => return Err(e),
        };
        best = sol.basis.iter().map(|v| ans.assemble(v)).collect();
        if best.len() as u64 >= expected {
            break;
        }
    }
    let flagged = (best.len() as u64) < expected;
    Ok(SigmaSpace {
        basis: best,
        expected,
        flagged_lower_bound: flagged,
    })
}

/// Σ_k(K*): skewsymmetric P of degree ≤ N−1 with ⟨K*∘P⟩⁻ = 0.
pub fn sigma_space(kop: &MatDiffOp, k: usize, degree_bound: Option<u32>) -> Result<SigmaSpace> {
    skew_kernel(&kop.adjoint(), k, degree_bound)
}

/// Skewsymmetric P with (k+1)⟨K∘P⟩⁻ = S for totally skewsymmetric S.
pub fn solve_skew_equation(kop: &MatDiffOp, s: &KDiffOp, degree_bound: Option<u32>) -> Result<KDiffOp> {
    order_and_check(kop)?;
    if kop.rows() != s.ell {
        return Err(Error::ShapeMismatch("operator and right side differ in size".into()));
    }
    if !s.is_totally_skewsymmetric() {
        return Err(Error::NotSkewadjoint);
    }
    if s.is_zero() {
        return Ok(KDiffOp::zero(s.ell, s.k));
    }
    let deg = s.degree().unwrap_or(0);
    let (ans, sol) = solve_alternating(kop, s, deg, degree_bound)?;
    let p = ans.assemble(&sol.particular);
    debug_assert_eq!(skew_alternating_sum(&module_action(kop, &p)?), *s);
    Ok(p)
}

fn check_sigma(p: &KDiffOp, kop: &MatDiffOp) -> Result<()> {
    if kop.rows() != p.ell {
        return Err(Error::ShapeMismatch("operator and array differ in size".into()));
    }
    if !p.is_skewsymmetric() || !skew_alternating_sum(&module_action(&kop.adjoint(), p)?).is_zero() {
        return Err(Error::NotInSigma);
    }
    Ok(())
}

/// Cohomology representative (Σ_j P_{j,I}(λ) u_j)_I for P ∈ Σ_k(K*).
pub fn chi_representative(p: &KDiffOp, kop: &MatDiffOp) -> Result<SkewArray> {
    check_sigma(p, kop)?;
    let mut entries: BTreeMap<Vec<usize>, LamPoly> = BTreeMap::new();
    for (key, q) in &p.entries {
        let rest = key[1..].to_vec();
        if rest.windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        entries
            .entry(rest)
            .or_insert_with(|| LamPoly::zero(p.k))
            .add_assign(&q.mul_coeff(&DiffPoly::jet(key[0], 0)));
    }
    SkewArray::from_entries(p.ell, p.k, entries)
}

/// C with Σ_α (−1)^α Σ_j P_{j,…α̌…}(…α̌…) K_{j,i_α}(λ_α) = (λ_0+…+λ_k+∂)C.
pub fn phi_k(p: &KDiffOp, kop: &MatDiffOp) -> Result<SkewArray> {
    check_sigma(p, kop)?;
    let ell = p.ell;
    let ar = p.k + 1;
    let mut out = BTreeMap::new();
    for key in crate::complexes::sorted_tuples(ell, ar) {
        let mut lhs = LamPoly::zero(ar);
        for alpha in 0..ar {
            let pos: Vec<usize> = (0..ar).filter(|&b| b != alpha).collect();
            for j in 0..ell {
                let kj = kop.get(j, key[alpha]);
                if kj.is_zero() {
                    continue;
                }
                let mut full = vec![j];
                full.extend(pos.iter().map(|&b| key[b]));
                let q = p.get(&full);
                if q.is_zero() {
                    continue;
                }
                let t = q.embed(ar, &pos).mul(&kj.symbol(ar, alpha));
                lhs.add_assign(&if alpha % 2 == 1 { t.neg() } else { t });
            }
        }
        out.insert(key, divide_by_total(&lhs)?);
    }
    SkewArray::from_entries(ell, ar, out)
}

/// Exact quotient by (λ_0+…+λ_{r−1}+∂), peeling powers of λ_0 from the top.
fn divide_by_total(r: &LamPoly) -> Result<LamPoly> {
    let nv = r.nvars();
    let Some(top) = r.degree_in(0) else { return Ok(LamPoly::zero(nv)) };
    let rest_lin: Vec<i64> = (0..nv - 1).map(|_| 1).collect();
    let slice = |e: u32| r.coeff_of_power(0, e);
    // r_e = c_{e−1} + (λ'+∂)c_e, with c_top = 0.
    let mut cs: Vec<LamPoly> = vec![LamPoly::zero(nv - 1); top as usize + 1];
    for e in (1..=top).rev() {
        let next = if (e as usize) < cs.len() - 1 {
            cs[e as usize].apply_shift(&rest_lin, 1, 1)
        } else {
            LamPoly::zero(nv - 1)
        };
        cs[e as usize - 1] = slice(e).sub(&next);
    }
    let rem = slice(0).sub(&cs[0].apply_shift(&rest_lin, 1, 1));
    if !rem.is_zero() {
        return Err(Error::NotInSigma);
    }
    let mut out = LamPoly::zero(nv);
    for (e, c) in cs.iter().enumerate() {
        let mut ex = vec![0; nv];
        ex[0] = e as u32;
        let pos: Vec<usize> = (1..nv).collect();
        out.add_assign(&c.embed(nv, &pos).mul_monomial(&ex));
    }
    Ok(out)
}
