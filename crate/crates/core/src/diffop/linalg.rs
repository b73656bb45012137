//! Majorants, leading matrices, Ore elimination, Dieudonné determinants and
//! the canonical forms of a scalar operator.

use super::pseudo::{pseudo_det, pseudo_matrix};
use super::{MatDiffOp, ScalarOp};
use crate::diffalg::DiffPoly;
use crate::error::{Error, Result};
use crate::field::{qq, FieldElem};
use crate::linsys;
use std::collections::BTreeMap;

/// ord(M_ij) ≤ n_j − h_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Majorant {
    pub n: Vec<i64>,
    pub h: Vec<i64>,
}

/// Minimal majorant; zero entries are skipped.
pub fn majorant(m: &MatDiffOp) -> Result<Majorant> {
    if m.is_zero() {
        return Err(Error::DegenerateShape("all entries are zero".into()));
    }
    let mut n = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let col = (0..m.rows()).filter_map(|i| m.get(i, j).order()).max();
        n.push(col.ok_or_else(|| Error::DegenerateShape(format!("column {} is zero", j + 1)))? as i64);
    }
    let h = (0..m.rows())
        .map(|i| (0..m.cols()).filter_map(|j| m.get(i, j).order().map(|o| n[j] - o as i64)).min().unwrap_or(0))
        .collect();
    Ok(Majorant { n, h })
}

pub fn check_majorant(m: &MatDiffOp, maj: &Majorant) -> Result<()> {
    if maj.n.len() != m.cols() || maj.h.len() != m.rows() {
        return Err(Error::ShapeMismatch("majorant length".into()));
    }
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if let Some(o) = m.get(i, j).order() {
                if o as i64 > maj.n[j] - maj.h[i] {
                    return Err(Error::NotAMajorant(format!("entry ({},{}) has order {o}", i + 1, j + 1)));
                }
            }
        }
    }
    Ok(())
}

/// Entry (i,j) is coeff·ξ^power with power = n_j − h_i.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingMatrix {
    pub entries: Vec<Vec<(FieldElem, i64)>>,
}

impl LeadingMatrix {
    /// The matrix at ξ = 1.
    pub fn at_one(&self) -> Vec<Vec<FieldElem>> {
        self.entries.iter().map(|r| r.iter().map(|(c, _)| c.clone()).collect()).collect()
    }

    pub fn is_degenerate(&self) -> bool {
        self.entries.len() != self.entries[0].len() || linsys::det(&self.at_one()).is_zero()
    }

    /// det(M̄(ξ)) = det(M̄(1)) ξ^d.
    pub fn det(&self, maj: &Majorant) -> (FieldElem, i64) {
        let d = maj.n.iter().zip(&maj.h).map(|(n, h)| n - h).sum();
        (linsys::det(&self.at_one()), d)
    }
}

pub fn leading_matrix(m: &MatDiffOp, maj: &Majorant) -> Result<LeadingMatrix> {
    check_majorant(m, maj)?;
    let mut entries = Vec::with_capacity(m.rows());
    for i in 0..m.rows() {
        let mut row = Vec::with_capacity(m.cols());
        for j in 0..m.cols() {
            let p = maj.n[j] - maj.h[i];
            let c = if p < 0 {
                FieldElem::zero()
            } else {
                m.get(i, j).get(p as u32).as_field().ok_or(Error::NotQuasiconstant)?
            };
            row.push((c, p));
        }
        entries.push(row);
    }
    Ok(LeadingMatrix { entries })
}

/// Elementary row operation of the Ore ring.
#[derive(Clone, Debug, PartialEq)]
pub enum RowOp {
    Swap(usize, usize),
    /// row[target] += op ∘ row[source]
    AddMultiple {
        target: usize,
        source: usize,
        op: ScalarOp,
    },
}

pub fn apply_row_op(m: &mut MatDiffOp, op: &RowOp) {
    match op {
        RowOp::Swap(a, b) => {
            for j in 0..m.cols() {
                let t = m.get(*a, j).clone();
                m.set(*a, j, m.get(*b, j).clone());
                m.set(*b, j, t);
            }
        }
        RowOp::AddMultiple { target, source, op } => {
            for j in 0..m.cols() {
                let add = op.compose(m.get(*source, j));
                m.set(*target, j, m.get(*target, j).add(&add));
            }
        }
    }
}

pub fn apply_row_ops(m: &MatDiffOp, ops: &[RowOp]) -> MatDiffOp {
    let mut r = m.clone();
    for op in ops {
        apply_row_op(&mut r, op);
    }
    r
}

fn field_lc(op: &ScalarOp) -> Result<(u32, FieldElem)> {
    let (n, c) = op.leading().expect("nonzero entry");
    let f = c.as_field().ok_or_else(|| Error::NonInvertiblePivot(c.to_string()))?;
    Ok((n, f))
}

/// Row echelon form by Euclidean elimination on orders; the recorded operations replay it.
pub fn row_echelon(m: &MatDiffOp) -> Result<(MatDiffOp, Vec<RowOp>)> {
    let mut a = m.clone();
    let mut ops = Vec::new();
    let mut r = 0;
    for c in 0..a.cols() {
        if r == a.rows() {
            break;
        }
        loop {
            // Lowest-order nonzero entry in column c at or below row r becomes the pivot.
            let piv = (r..a.rows()).filter(|&i| !a.get(i, c).is_zero()).min_by_key(|&i| a.get(i, c).order().unwrap());
            let Some(p) = piv else { break };
            if p != r {
                let op = RowOp::Swap(p, r);
                apply_row_op(&mut a, &op);
                ops.push(op);
            }
            let (dp, lp) = field_lc(a.get(r, c))?;
            let lp_inv = lp.inv().unwrap();
            let mut done = true;
            for i in (r + 1)..a.rows() {
                while let Some((di, li)) = a.get(i, c).leading().map(|(n, c)| (n, c.clone())) {
                    if di < dp {
                        done = false;
                        break;
                    }
                    let q = ScalarOp::from_coeffs([(di - dp, li.scale(&lp_inv).neg())]);
                    let op = RowOp::AddMultiple { target: i, source: r, op: q };
                    apply_row_op(&mut a, &op);
                    ops.push(op);
                }
            }
            if done {
                break;
            }
        }
        if !a.get(r, c).is_zero() {
            r += 1;
        }
    }
    Ok((a, ops))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Det {
    Zero,
    Value { c: FieldElem, d: i64 },
}

impl Det {
    pub fn mul(&self, o: &Det) -> Det {
        match (self, o) {
            (Det::Value { c: a, d: x }, Det::Value { c: b, d: y }) => Det::Value { c: a.mul(b), d: x + y },
            _ => Det::Zero,
        }
    }

    pub fn degree(&self) -> Option<i64> {
        match self {
            Det::Zero => None,
            Det::Value { d, .. } => Some(*d),
        }
    }
}

impl std::fmt::Display for Det {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Det::Zero => write!(f, "0"),
            Det::Value { c, d: 0 } => write!(f, "{c}"),
            Det::Value { c, d } => {
                if c.is_compound() {
                    write!(f, "({c})*xi^{d}")
                } else {
                    write!(f, "{c}*xi^{d}")
                }
            }
        }
    }
}

/// Dieudonné determinant c ξ^d of a square matrix via Ore elimination.
pub fn dieudonne_det(m: &MatDiffOp) -> Result<Det> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch("determinant of a non-square matrix".into()));
    }
    let (e, ops) = row_echelon(m)?;
    let swaps = ops.iter().filter(|o| matches!(o, RowOp::Swap(..))).count();
    let mut c = if swaps % 2 == 0 { FieldElem::one() } else { FieldElem::int(-1) };
    let mut d = 0i64;
    for i in 0..e.rows() {
        let Some((n, lc)) = e.get(i, i).leading() else {
            return Ok(Det::Zero);
        };
        c = c.mul(&lc.as_field().ok_or_else(|| Error::NonInvertiblePivot(lc.to_string()))?);
        d += n as i64;
    }
    Ok(Det::Value { c, d })
}

/// Determinant via the pseudodifferential triangularization (requires a nondegenerate leading matrix).
pub fn dieudonne_det_pseudo(m: &MatDiffOp) -> Result<Det> {
    let maj = majorant(m)?;
    let (c, d) = pseudo_det(&pseudo_matrix(m)?, &maj)?;
    Ok(Det::Value { c, d })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelBound {
    Finite(u64),
    Infinite,
}

pub fn kernel_dim_bound(m: &MatDiffOp) -> Result<KernelBound> {
    Ok(match dieudonne_det(m)? {
        Det::Zero => KernelBound::Infinite,
        Det::Value { d, .. } => KernelBound::Finite(d as u64),
    })
}

/// Result of majorant-preserving elimination.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub matrix: MatDiffOp,
    /// Row `k` of `matrix` came from row `perm[k]` of the input.
    pub perm: Vec<usize>,
    pub majorant: Majorant,
    pub ops: Vec<RowOp>,
}

/// Make the leading matrix upper triangular by operations c∂^k with k ≥ 0 that keep the majorant.
pub fn majorant_preserving_reduce(m: &MatDiffOp, maj: &Majorant) -> Result<Reduced> {
    let lm = leading_matrix(m, maj)?;
    if lm.is_degenerate() {
        return Err(Error::DegenerateLeadingMatrix);
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut h = maj.h.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut ops = Vec::new();
    let lead = |a: &MatDiffOp, h: &[i64], i: usize, j: usize| -> FieldElem {
        let p = maj.n[j] - h[i];
        if p < 0 {
            FieldElem::zero()
        } else {
            a.get(i, j).get(p as u32).as_field().unwrap_or_default()
        }
    };
    for j in 0..n {
        // Pivot with the largest shift so every multiplier has a nonnegative ∂-power.
        let p = (j..n).filter(|&k| !lead(&a, &h, k, j).is_zero()).max_by_key(|&k| (h[k], std::cmp::Reverse(k)));
        let p = p.ok_or(Error::DegenerateLeadingMatrix)?;
        if p != j {
            let op = RowOp::Swap(p, j);
            apply_row_op(&mut a, &op);
            ops.push(op);
            h.swap(p, j);
            perm.swap(p, j);
        }
        let pv = lead(&a, &h, j, j).inv().unwrap();
        for r in (j + 1)..n {
            let c = lead(&a, &h, r, j);
            if c.is_zero() {
                continue;
            }
            let k = (h[j] - h[r]) as u32;
            let op = RowOp::AddMultiple {
                target: r,
                source: j,
                op: ScalarOp::from_coeffs([(k, DiffPoly::from_field(c.mul(&pv).neg()))]),
            };
            apply_row_op(&mut a, &op);
            ops.push(op);
        }
    }
    Ok(Reduced {
        matrix: a,
        perm,
        majorant: Majorant { n: maj.n.clone(), h },
        ops,
    })
}

/// a-form, b-form (Σ ∂^n ∘ b_n) and the mixed form Σ ∂^{m+1}∘c_m∂^m + Σ ∂^n∘d_n∂^n.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForms {
    pub a: BTreeMap<u32, DiffPoly>,
    pub b: BTreeMap<u32, DiffPoly>,
    pub c: BTreeMap<u32, DiffPoly>,
    pub d: BTreeMap<u32, DiffPoly>,
}

fn sandwich(left: u32, coeff: &DiffPoly, right: u32) -> ScalarOp {
    ScalarOp::d(left).compose(&ScalarOp::mul_by(coeff.clone())).compose(&ScalarOp::d(right))
}

pub fn canonical_forms(p: &ScalarOp) -> CanonicalForms {
    let a = p.coeffs().map(|(n, c)| (*n, c.clone())).collect();
    let mut b = BTreeMap::new();
    let mut rest = p.clone();
    while let Some((n, lc)) = rest.leading().map(|(n, c)| (n, c.clone())) {
        rest = rest.sub(&sandwich(n, &lc, 0));
        b.insert(n, lc);
    }
    let (mut c, mut d) = (BTreeMap::new(), BTreeMap::new());
    let mut rest = p.clone();
    while let Some((r, lc)) = rest.leading().map(|(n, c)| (n, c.clone())) {
        if r % 2 == 1 {
            let m = (r - 1) / 2;
            rest = rest.sub(&sandwich(m + 1, &lc, m));
            c.insert(m, lc);
        } else {
            rest = rest.sub(&sandwich(r / 2, &lc, r / 2));
            d.insert(r / 2, lc);
        }
    }
    CanonicalForms { a, b, c, d }
}

impl CanonicalForms {
    pub fn expand_a(&self) -> ScalarOp {
        ScalarOp::from_coeffs(self.a.iter().map(|(n, c)| (*n, c.clone())))
    }

    pub fn expand_b(&self) -> ScalarOp {
        self.b.iter().fold(ScalarOp::zero(), |acc, (n, c)| acc.add(&sandwich(*n, c, 0)))
    }

    pub fn expand_mixed(&self) -> ScalarOp {
        let odd = self.c.iter().fold(ScalarOp::zero(), |acc, (m, c)| acc.add(&sandwich(m + 1, c, *m)));
        self.d.iter().fold(odd, |acc, (n, c)| acc.add(&sandwich(*n, c, *n)))
    }
}

/// S = Σ ∂^m∘(∂∘a_m + a_m∂)∘∂^m + Σ ∂^m∘b_m∘∂^m with a_m symmetric and b_m skew.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewDecomposition {
    pub a: BTreeMap<u32, Vec<Vec<DiffPoly>>>,
    pub b: BTreeMap<u32, Vec<Vec<DiffPoly>>>,
}

fn mat_sandwich(m: u32, coeffs: &[Vec<DiffPoly>], odd: bool) -> MatDiffOp {
    let n = coeffs.len();
    let mut r = MatDiffOp::zero(n, n);
    for i in 0..n {
        for j in 0..n {
            let c = &coeffs[i][j];
            if c.is_zero() {
                continue;
            }
            let e = if odd {
                sandwich(m + 1, c, m).add(&sandwich(m, c, m + 1))
            } else {
                sandwich(m, c, m)
            };
            r.set(i, j, e);
        }
    }
    r
}

impl SkewDecomposition {
    pub fn expand(&self, n: usize) -> MatDiffOp {
        let mut r = MatDiffOp::zero(n, n);
        for (m, a) in &self.a {
            r = r.add(&mat_sandwich(*m, a, true)).unwrap();
        }
        for (m, b) in &self.b {
            r = r.add(&mat_sandwich(*m, b, false)).unwrap();
        }
        r
    }
}

pub fn skewadjoint_decompose(s: &MatDiffOp) -> Result<SkewDecomposition> {
    if !s.is_skewadjoint() {
        return Err(Error::NotSkewadjoint);
    }
    let n = s.rows();
    let half = qq(1, 2);
    let mut dec = SkewDecomposition {
        a: BTreeMap::new(),
        b: BTreeMap::new(),
    };
    let mut rest = s.clone();
    while let Some(r) = rest.order() {
        let lc: Vec<Vec<DiffPoly>> = (0..n).map(|i| (0..n).map(|j| rest.get(i, j).get(r)).collect()).collect();
        let piece = if r % 2 == 1 {
            let a: Vec<Vec<DiffPoly>> = lc.iter().map(|row| row.iter().map(|c| c.scale_q(&half)).collect()).collect();
            let m = (r - 1) / 2;
            let e = mat_sandwich(m, &a, true);
            dec.a.insert(m, a);
            e
        } else {
            let e = mat_sandwich(r / 2, &lc, false);
            dec.b.insert(r / 2, lc);
            e
        };
        rest = rest.sub(&piece)?;
    }
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fun(n: u32) -> DiffPoly {
        DiffPoly::from_field(FieldElem::fun("a", n))
    }

    fn example_matrix() -> MatDiffOp {
        let a = fun(0);
        MatDiffOp::from_rows(vec![
            vec![ScalarOp::one(), ScalarOp::mul_by(a.clone())],
            vec![ScalarOp::d(1), ScalarOp::from_coeffs([(1, a)])],
        ])
        .unwrap()
    }

    #[test]
    fn majorant_and_degenerate_leading_matrix() {
        let m = example_matrix();
        let maj = majorant(&m).unwrap();
        assert_eq!(maj, Majorant { n: vec![1, 1], h: vec![1, 0] });
        let lm = leading_matrix(&m, &maj).unwrap();
        assert!(lm.is_degenerate());
        assert!(matches!(majorant_preserving_reduce(&m, &maj), Err(Error::DegenerateLeadingMatrix)));
    }

    #[test]
    fn echelon_and_det_of_example() {
        let m = example_matrix();
        let (e, ops) = row_echelon(&m).unwrap();
        assert_eq!(e.get(1, 0), &ScalarOp::zero());
        assert_eq!(e.get(1, 1), &ScalarOp::mul_by(fun(1).neg()));
        assert_eq!(apply_row_ops(&m, &ops), e);
        assert_eq!(
            dieudonne_det(&m).unwrap(),
            Det::Value {
                c: FieldElem::fun("a", 1).neg(),
                d: 0
            }
        );
    }

    #[test]
    fn diagonal_det_and_bound() {
        let m = MatDiffOp::diag_d(&[1, 3]);
        assert_eq!(dieudonne_det(&m).unwrap(), Det::Value { c: FieldElem::one(), d: 4 });
        assert_eq!(majorant(&m).unwrap(), Majorant { n: vec![1, 3], h: vec![0, 0] });
        assert_eq!(kernel_dim_bound(&MatDiffOp::diag_d(&[1, 1])).unwrap(), KernelBound::Finite(2));
        let mut z = MatDiffOp::zero(2, 2);
        z.set(0, 0, ScalarOp::d(1));
        assert_eq!(kernel_dim_bound(&z).unwrap(), KernelBound::Infinite);
    }

    #[test]
    fn pseudo_route_triangularizes() {
        let m = MatDiffOp::from_rows(vec![vec![ScalarOp::d(1), ScalarOp::one()], vec![ScalarOp::one(), ScalarOp::d(1)]]).unwrap();
        let maj = majorant(&m).unwrap();
        let r = super::super::pseudo::reduce_pseudo(&pseudo_matrix(&m).unwrap(), &maj, 6).unwrap();
        assert!(r.matrix[1][0].is_zero());
        assert_eq!(r.matrix[1][1].coeff(1).unwrap(), FieldElem::one());
        assert!(r.matrix[1][1].coeff(0).unwrap().is_zero());
        assert_eq!(r.matrix[1][1].coeff(-1).unwrap(), FieldElem::int(-1));
        assert_eq!(dieudonne_det_pseudo(&m).unwrap(), dieudonne_det(&m).unwrap());
    }

    #[test]
    fn canonical_forms_examples() {
        let a = fun(0);
        let f = canonical_forms(&ScalarOp::from_coeffs([(1, a.clone())]));
        assert_eq!(f.b, BTreeMap::from([(1, a.clone()), (0, fun(1).neg())]));
        let f = canonical_forms(&ScalarOp::d(2));
        assert!(f.c.is_empty());
        assert_eq!(f.d, BTreeMap::from([(1, DiffPoly::one())]));
    }

    #[test]
    fn skew_decomposition_examples() {
        let dec = skewadjoint_decompose(&MatDiffOp::scalar(ScalarOp::d(1))).unwrap();
        assert_eq!(dec.a[&0][0][0], DiffPoly::from_field(FieldElem::ratio(1, 2)));
        assert!(dec.b.is_empty());
        let dec = skewadjoint_decompose(&MatDiffOp::scalar(ScalarOp::d(3))).unwrap();
        assert_eq!(dec.a.len(), 1);
        assert_eq!(dec.a[&1][0][0], DiffPoly::from_field(FieldElem::ratio(1, 2)));
        assert!(matches!(skewadjoint_decompose(&MatDiffOp::scalar(ScalarOp::d(2))), Err(Error::NotSkewadjoint)));
    }
}
