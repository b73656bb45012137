//! Scalar and matrix differential operators Σ a_n ∂^n with differential-polynomial
//! coefficients, plus linear algebra over the Ore ring F[∂].

pub mod linalg;
pub mod pseudo;
pub mod solve;

use crate::diffalg::{write_poly_times, DiffPoly};
use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::lampoly::{binom, LamPoly};
use num_rational::BigRational;
use std::collections::BTreeMap;
use std::fmt;

pub use linalg::{
    apply_row_ops, canonical_forms, dieudonne_det, dieudonne_det_pseudo, kernel_dim_bound, leading_matrix, majorant, majorant_preserving_reduce, row_echelon,
    skewadjoint_decompose, CanonicalForms, Det, KernelBound, LeadingMatrix, Majorant, Reduced, RowOp, SkewDecomposition,
};
pub use pseudo::PseudoDiffOp;
pub use solve::{solve_rational, SolutionSet};

fn bq(n: u64, k: u64) -> BigRational {
    BigRational::from_integer(binom(n, k))
}

/// Σ a_n ∂^n; coefficients stored by order with no zero entries.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ScalarOp {
    coeffs: BTreeMap<u32, DiffPoly>,
}

impl fmt::Debug for ScalarOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl ScalarOp {
    pub fn zero() -> ScalarOp {
        ScalarOp::default()
    }

    pub fn one() -> ScalarOp {
        ScalarOp::mul_by(DiffPoly::one())
    }

    /// Multiplication operator by `a`.
    pub fn mul_by(a: DiffPoly) -> ScalarOp {
        let mut r = ScalarOp::zero();
        r.set(0, a);
        r
    }

    /// ∂^n.
    pub fn d(n: u32) -> ScalarOp {
        let mut r = ScalarOp::zero();
        r.set(n, DiffPoly::one());
        r
    }

    pub fn from_field(c: FieldElem) -> ScalarOp {
        ScalarOp::mul_by(DiffPoly::from_field(c))
    }

    pub fn from_coeffs(cs: impl IntoIterator<Item = (u32, DiffPoly)>) -> ScalarOp {
        let mut r = ScalarOp::zero();
        for (n, c) in cs {
            r.add_at(n, c);
        }
        r
    }

    pub fn set(&mut self, n: u32, c: DiffPoly) {
        if c.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, c);
        }
    }

    pub fn add_at(&mut self, n: u32, c: DiffPoly) {
        let s = self.get(n).add(&c);
        self.set(n, s);
    }

    pub fn get(&self, n: u32) -> DiffPoly {
        self.coeffs.get(&n).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> impl DoubleEndedIterator<Item = (&u32, &DiffPoly)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn order(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn leading(&self) -> Option<(u32, &DiffPoly)> {
        self.coeffs.iter().next_back().map(|(n, c)| (*n, c))
    }

    pub fn is_quasiconstant(&self) -> bool {
        self.coeffs.values().all(|c| c.is_quasiconstant())
    }

    pub fn add(&self, o: &ScalarOp) -> ScalarOp {
        let mut r = self.clone();
        for (n, c) in &o.coeffs {
            r.add_at(*n, c.clone());
        }
        r
    }

    pub fn neg(&self) -> ScalarOp {
        ScalarOp {
            coeffs: self.coeffs.iter().map(|(n, c)| (*n, c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &ScalarOp) -> ScalarOp {
        self.add(&o.neg())
    }

    /// Left multiplication of every coefficient by `a`.
    pub fn lmul(&self, a: &DiffPoly) -> ScalarOp {
        ScalarOp::from_coeffs(self.coeffs.iter().map(|(n, c)| (*n, a.mul(c))))
    }

    /// Ring product using ∂^m ∘ b = Σ_j C(m,j) b^(j) ∂^(m−j).
    pub fn compose(&self, o: &ScalarOp) -> ScalarOp {
        let mut r = ScalarOp::zero();
        for (&n, b) in &o.coeffs {
            let mut derivs = vec![b.clone()];
            for (&m, a) in &self.coeffs {
                while derivs.len() <= m as usize {
                    let next = derivs.last().unwrap().derive();
                    derivs.push(next);
                }
                for j in 0..=m {
                    let bj = &derivs[j as usize];
                    if bj.is_zero() {
                        continue;
                    }
                    r.add_at(m - j + n, a.mul(bj).scale_q(&bq(m as u64, j as u64)));
                }
            }
        }
        r
    }

    /// Formal adjoint Σ (−∂)^n ∘ a_n.
    pub fn adjoint(&self) -> ScalarOp {
        let mut r = ScalarOp::zero();
        for (&n, a) in &self.coeffs {
            let sign = if n % 2 == 0 { 1 } else { -1 };
            let mut aj = a.clone();
            for j in 0..=n {
                if aj.is_zero() {
                    break;
                }
                let c = bq(n as u64, j as u64) * BigRational::from_integer(sign.into());
                r.add_at(n - j, aj.scale_q(&c));
                aj = aj.derive();
            }
        }
        r
    }

    /// Σ a_n ∂^n f.
    pub fn apply(&self, f: &DiffPoly) -> DiffPoly {
        let mut r = DiffPoly::zero();
        let mut fd = f.clone();
        let top = self.order().unwrap_or(0);
        for n in 0..=top {
            if let Some(a) = self.coeffs.get(&n) {
                r = r.add(&a.mul(&fd));
            }
            if n < top {
                fd = fd.derive();
            }
        }
        r
    }

    /// Apply ∂ to every coefficient (the action of an evolutionary field or ∂ on coefficients).
    pub fn map_coeffs(&self, f: impl Fn(&DiffPoly) -> DiffPoly) -> ScalarOp {
        ScalarOp::from_coeffs(self.coeffs.iter().map(|(n, c)| (*n, f(c))))
    }

    /// The symbol Σ a_n λ^n in variable `a` of an `nv`-variable λ-polynomial.
    pub fn symbol(&self, nv: usize, a: usize) -> LamPoly {
        let mut r = LamPoly::zero(nv);
        for (&n, c) in &self.coeffs {
            let mut e = vec![0; nv];
            e[a] = n;
            r.add_term(e, c.clone());
        }
        r
    }

    pub fn from_symbol(p: &LamPoly) -> ScalarOp {
        assert_eq!(p.nvars(), 1);
        ScalarOp::from_coeffs(p.terms().map(|(e, c)| (e[0], c.clone())))
    }

    /// Coefficients as field elements, if all are quasiconstant.
    pub fn field_coeffs(&self) -> Option<BTreeMap<u32, FieldElem>> {
        self.coeffs.iter().map(|(n, c)| c.as_field().map(|f| (*n, f))).collect()
    }

    pub fn is_zero_order_constant(&self) -> bool {
        self.coeffs.keys().all(|n| *n == 0)
    }
}

impl fmt::Display for ScalarOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut s = String::new();
        for (i, (n, c)) in self.coeffs.iter().enumerate() {
            let suffix = match n {
                0 => String::new(),
                1 => "d".to_string(),
                n => format!("d^{n}"),
            };
            write_poly_times(&mut s, c, &suffix, i == 0);
        }
        write!(f, "{s}")
    }
}

/// Rectangular matrix of scalar operators.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatDiffOp {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<ScalarOp>>,
}

impl fmt::Debug for MatDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl MatDiffOp {
    pub fn zero(rows: usize, cols: usize) -> MatDiffOp {
        MatDiffOp {
            rows,
            cols,
            entries: vec![vec![ScalarOp::zero(); cols]; rows],
        }
    }

    pub fn identity(n: usize) -> MatDiffOp {
        let mut m = MatDiffOp::zero(n, n);
        for i in 0..n {
            m.set(i, i, ScalarOp::one());
        }
        m
    }

    pub fn scalar(op: ScalarOp) -> MatDiffOp {
        MatDiffOp {
            rows: 1,
            cols: 1,
            entries: vec![vec![op]],
        }
    }

    pub fn from_rows(entries: Vec<Vec<ScalarOp>>) -> Result<MatDiffOp> {
        let rows = entries.len();
        let cols = entries.first().map(|r| r.len()).unwrap_or(0);
        if rows == 0 || cols == 0 || entries.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("rows must be nonempty and of equal length".into()));
        }
        Ok(MatDiffOp { rows, cols, entries })
    }

    /// Diagonal matrix with entries ∂^{n_i}.
    pub fn diag_d(ns: &[u32]) -> MatDiffOp {
        let mut m = MatDiffOp::zero(ns.len(), ns.len());
        for (i, &n) in ns.iter().enumerate() {
            m.set(i, i, ScalarOp::d(n));
        }
        m
    }

    /// Constant-coefficient matrix of field elements.
    pub fn from_field_matrix(a: &[Vec<FieldElem>]) -> MatDiffOp {
        let mut m = MatDiffOp::zero(a.len(), a[0].len());
        for (i, row) in a.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                m.set(i, j, ScalarOp::from_field(c.clone()));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarOp {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, op: ScalarOp) {
        self.entries[i][j] = op;
    }

    pub fn entries(&self) -> &Vec<Vec<ScalarOp>> {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_zero())
    }

    pub fn is_quasiconstant(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_quasiconstant())
    }

    pub fn order(&self) -> Option<u32> {
        self.entries.iter().flatten().filter_map(|e| e.order()).max()
    }

    pub fn add(&self, o: &MatDiffOp) -> Result<MatDiffOp> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::ShapeMismatch(format!("{}x{} + {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut r = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                r.entries[i][j] = self.entries[i][j].add(&o.entries[i][j]);
            }
        }
        Ok(r)
    }

    pub fn neg(&self) -> MatDiffOp {
        self.map(|e| e.neg())
    }

    pub fn sub(&self, o: &MatDiffOp) -> Result<MatDiffOp> {
        self.add(&o.neg())
    }

    pub fn map(&self, f: impl Fn(&ScalarOp) -> ScalarOp) -> MatDiffOp {
        MatDiffOp {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }

    pub fn compose(&self, o: &MatDiffOp) -> Result<MatDiffOp> {
        if self.cols != o.rows {
            return Err(Error::ShapeMismatch(format!("{}x{} * {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut r = MatDiffOp::zero(self.rows, o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = ScalarOp::zero();
                for k in 0..self.cols {
                    if self.entries[i][k].is_zero() || o.entries[k][j].is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.entries[i][k].compose(&o.entries[k][j]));
                }
                r.entries[i][j] = acc;
            }
        }
        Ok(r)
    }

    /// Transposed matrix of entry adjoints.
    pub fn adjoint(&self) -> MatDiffOp {
        let mut r = MatDiffOp::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                r.entries[j][i] = self.entries[i][j].adjoint();
            }
        }
        r
    }

    pub fn is_skewadjoint(&self) -> bool {
        self.is_square() && self.adjoint() == self.neg()
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.is_square() && self.adjoint() == *self
    }

    pub fn apply(&self, v: &[DiffPoly]) -> Result<Vec<DiffPoly>> {
        if v.len() != self.cols {
            return Err(Error::ShapeMismatch(format!("vector of length {} for {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = DiffPoly::zero();
                for (j, vj) in v.iter().enumerate() {
                    acc = acc.add(&self.entries[i][j].apply(vj));
                }
                acc
            })
            .collect())
    }

    /// Coefficient matrix at ∂^n, as field elements.
    pub fn coeff_matrix(&self, n: u32) -> Option<Vec<Vec<FieldElem>>> {
        self.entries.iter().map(|r| r.iter().map(|e| e.get(n).as_field()).collect()).collect()
    }

    /// Leading coefficient matrix K_N for N = order.
    pub fn leading_coeff(&self) -> Option<Vec<Vec<FieldElem>>> {
        self.coeff_matrix(self.order()?)
    }
}

impl fmt::Display for MatDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows == 1 && self.cols == 1 {
            return write!(f, "{}", self.entries[0][0]);
        }
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "[{}]", rows.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(n: u32) -> DiffPoly {
        DiffPoly::jet(0, n)
    }

    #[test]
    fn compose_rule() {
        let r = ScalarOp::d(1).compose(&ScalarOp::mul_by(u(0)));
        assert_eq!(r, ScalarOp::from_coeffs([(1, u(0)), (0, u(1))]));
        let a = DiffPoly::from_field(FieldElem::fun("a", 0));
        let r = ScalarOp::d(2).compose(&ScalarOp::mul_by(a.clone()));
        let expect = ScalarOp::from_coeffs([(2, a.clone()), (1, a.derive().scale(&FieldElem::int(2))), (0, a.derive_n(2))]);
        assert_eq!(r, expect);
    }

    #[test]
    fn adjoint_examples() {
        let op = ScalarOp::from_coeffs([(1, u(0))]);
        assert_eq!(op.adjoint(), ScalarOp::from_coeffs([(1, u(0).neg()), (0, u(1).neg())]));
        assert_eq!(ScalarOp::d(1).adjoint(), ScalarOp::d(1).neg());
    }

    #[test]
    fn magri_prints_in_a_form() {
        let c = DiffPoly::from_field(FieldElem::param("c"));
        let op = ScalarOp::from_coeffs([(0, u(1)), (1, u(0).scale(&FieldElem::int(2))), (3, c)]);
        assert_eq!(op.to_string(), "u' + 2*u*d + c*d^3");
    }
}
