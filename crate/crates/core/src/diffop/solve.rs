//! Rational solutions of linear differential systems M(∂)u = b over ℚ(params)(x).

use super::linalg::{dieudonne_det, Det};
use super::MatDiffOp;
use crate::diffalg::DiffPoly;
use crate::error::{Error, Result};
use crate::field::integrate::integrate;
use crate::field::{gcd, FieldElem, Poly, Var};
use crate::linsys;

/// particular + span_C(basis); `complete` when the basis size meets the determinant bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionSet {
    pub particular: Vec<FieldElem>,
    pub basis: Vec<Vec<FieldElem>>,
    pub complete: bool,
}

fn lcm(a: &Poly, b: &Poly) -> Poly {
    let g = gcd(a, b);
    a.mul(&b.div_exact(&g).expect("gcd divides")).monic()
}

/// The factor of a denominator that depends on x and no other variable.
fn x_part(p: &Poly) -> Poly {
    if p.is_zero() {
        return Poly::one();
    }
    let cs = p.coeffs_in(Var::X);
    let mut content = Poly::zero();
    for c in &cs {
        content = gcd(&content, c);
    }
    let prim = p.div_exact(&content).expect("content divides");
    if prim.vars().iter().all(|v| *v == Var::X) {
        prim.monic()
    } else {
        Poly::one()
    }
}

fn apply_field(m: &MatDiffOp, i: usize, j: usize, f: &FieldElem) -> FieldElem {
    m.get(i, j).apply(&DiffPoly::from_field(f.clone())).as_field().expect("quasiconstant operator")
}

/// Default ansatz degree: 2·deg det + 4 for square systems, 2·order·cols + 4 otherwise.
pub fn default_degree_bound(m: &MatDiffOp) -> u32 {
    let ord = m.order().unwrap_or(0);
    if m.is_square() {
        if let Ok(Det::Value { d, .. }) = dieudonne_det(m) {
            return 2 * d as u32 + 4;
        }
    }
    2 * ord * m.cols() as u32 + 4
}

pub fn solve_rational(m: &MatDiffOp, b: &[FieldElem], degree_bound: Option<u32>) -> Result<SolutionSet> {
    if !m.is_quasiconstant() {
        return Err(Error::NotQuasiconstant);
    }
    if b.len() != m.rows() {
        return Err(Error::ShapeMismatch(format!("right side of length {} for {} rows", b.len(), m.rows())));
    }
    if let Some(s) = solve_monomial_system(m, b)? {
        return Ok(s);
    }
    solve_by_ansatz(m, b, degree_bound.unwrap_or_else(|| default_degree_bound(m)))
}

/// Exact route for M = A∂^n with A invertible: integrate A⁻¹b n times by Hermite reduction.
fn solve_monomial_system(m: &MatDiffOp, b: &[FieldElem]) -> Result<Option<SolutionSet>> {
    let Some(n) = m.order() else { return Ok(None) };
    if !m.is_square() || m.entries().iter().flatten().any(|e| e.coeffs().any(|(k, _)| *k != n)) {
        return Ok(None);
    }
    let Some(a) = m.coeff_matrix(n) else { return Ok(None) };
    let Some(ainv) = linsys::inverse(&a) else { return Ok(None) };
    let ell = m.cols();
    let mut particular = Vec::with_capacity(ell);
    for row in &ainv {
        let mut v = row.iter().zip(b).fold(FieldElem::zero(), |acc, (c, bi)| acc.add(&c.mul(bi)));
        for _ in 0..n {
            match integrate(&v) {
                Ok((g, r)) if r.is_zero() => v = g,
                Ok((_, r)) => return Err(Error::NoRationalSolution(format!("non-integrable remainder {r}"))),
                Err(Error::UndecidableResidue(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        particular.push(v);
    }
    let mut basis = Vec::new();
    for j in 0..ell {
        for k in 0..n {
            let mut v = vec![FieldElem::zero(); ell];
            v[j] = FieldElem::x().pow(k);
            basis.push(v);
        }
    }
    Ok(Some(SolutionSet {
        particular,
        basis,
        complete: true,
    }))
}

fn solve_by_ansatz(m: &MatDiffOp, b: &[FieldElem], degree_bound: u32) -> Result<SolutionSet> {
    let has_fun = m
        .entries()
        .iter()
        .flatten()
        .any(|e| e.coeffs().any(|(_, c)| c.as_field().is_some_and(|f| f.has_fun())))
        || b.iter().any(|f| f.has_fun());
    if has_fun {
        return Err(Error::Incomplete("function symbols in the system".into()));
    }
    let ord = m.order().unwrap_or(0);
    let ell = m.cols();
    // Candidate poles come from coefficient denominators and the leading coefficient.
    let mut dd = Poly::one();
    for e in m.entries().iter().flatten() {
        for (_, c) in e.coeffs() {
            dd = lcm(&dd, &x_part(c.as_field().unwrap().den()));
        }
    }
    for f in b {
        dd = lcm(&dd, &x_part(f.den()));
    }
    if let Some(lc) = m.leading_coeff() {
        if m.is_square() {
            dd = lcm(&dd, &x_part(linsys::det(&lc).num()));
        }
    }
    let sqfree = dd.div_exact(&gcd(&dd, &dd.partial(Var::X))).expect("gcd divides");
    let qden = FieldElem::from_poly(sqfree.pow(ord + 1));
    let top = degree_bound + qden.num().deg_in(Var::X);
    let nk = top as usize + 1;
    let nunk = ell * nk;
    let basis_fn: Vec<FieldElem> = (0..nk).map(|k| FieldElem::x().pow(k as u32).div(&qden).unwrap()).collect();
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    let mut rhs: Vec<FieldElem> = Vec::new();
    for i in 0..m.rows() {
        let mut images = vec![FieldElem::zero(); nunk];
        for j in 0..ell {
            if m.get(i, j).is_zero() {
                continue;
            }
            for k in 0..nk {
                images[j * nk + k] = apply_field(m, i, j, &basis_fn[k]);
            }
        }
        let mut den = b[i].den().clone();
        for f in &images {
            den = lcm(&den, f.den());
        }
        let clear = |f: &FieldElem| f.num().mul(&den.div_exact(f.den()).expect("lcm divides"));
        let polys: Vec<Poly> = images.iter().map(clear).collect();
        let bp = clear(&b[i]);
        let deg = polys.iter().chain(std::iter::once(&bp)).map(|p| p.deg_in(Var::X)).max().unwrap_or(0) as usize;
        let cols: Vec<Vec<Poly>> = polys.iter().map(|p| p.coeffs_in(Var::X)).collect();
        let bcs = bp.coeffs_in(Var::X);
        for e in 0..=deg {
            let row: Vec<FieldElem> = cols
                .iter()
                .map(|c| c.get(e).map(|p| FieldElem::from_poly(p.clone())).unwrap_or_default())
                .collect();
            let r = bcs.get(e).map(|p| FieldElem::from_poly(p.clone())).unwrap_or_default();
            if row.iter().all(|c| c.is_zero()) && r.is_zero() {
                continue;
            }
            rows.push(row);
            rhs.push(r);
        }
    }
    let assemble = |v: &[FieldElem]| -> Vec<FieldElem> {
        (0..ell)
            .map(|j| (0..nk).fold(FieldElem::zero(), |acc, k| acc.add(&v[j * nk + k].mul(&basis_fn[k]))))
            .collect()
    };
    let sol = if rows.is_empty() {
        Some(linsys::Affine {
            particular: vec![FieldElem::zero(); nunk],
            kernel: Vec::new(),
        })
    } else {
        linsys::solve(&rows, &rhs, nunk)
    };
    let Some(sol) = sol else {
        return Err(Error::Incomplete(format!("no solution with numerator degree at most {top}")));
    };
    let basis: Vec<Vec<FieldElem>> = if rows.is_empty() {
        (0..nunk)
            .map(|c| {
                let mut v = vec![FieldElem::zero(); nunk];
                v[c] = FieldElem::one();
                assemble(&v)
            })
            .collect()
    } else {
        sol.kernel.iter().map(|v| assemble(v)).collect()
    };
    let complete = m.is_square() && matches!(dieudonne_det(m), Ok(Det::Value { d, .. }) if d as usize == basis.len());
    Ok(SolutionSet {
        particular: assemble(&sol.particular),
        basis,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::ScalarOp;

    #[test]
    fn first_order_polynomial() {
        let m = MatDiffOp::scalar(ScalarOp::d(1));
        let s = solve_rational(&m, &[FieldElem::x()], None).unwrap();
        assert_eq!(s.particular, vec![FieldElem::x().pow(2).scale(&crate::field::qq(1, 2))]);
        assert_eq!(s.basis, vec![vec![FieldElem::one()]]);
        assert!(s.complete);
    }

    #[test]
    fn log_obstruction() {
        let m = MatDiffOp::scalar(ScalarOp::d(1));
        let b = FieldElem::one().div(&FieldElem::x()).unwrap();
        assert!(matches!(solve_rational(&m, &[b], None), Err(Error::NoRationalSolution(_))));
    }

    #[test]
    fn ansatz_finds_rational_kernel() {
        // x u' + u = 0 has the solution 1/x.
        let m = MatDiffOp::scalar(ScalarOp::from_coeffs([(1, DiffPoly::from_field(FieldElem::x())), (0, DiffPoly::one())]));
        let s = solve_rational(&m, &[FieldElem::zero()], None).unwrap();
        assert_eq!(s.basis.len(), 1);
        let v = &s.basis[0][0];
        assert!(v.mul(&FieldElem::x()).is_constant());
        assert!(s.complete);
    }

    #[test]
    fn ansatz_particular_solution() {
        // u' − u/x = x has u = x² + C x.
        let m = MatDiffOp::scalar(ScalarOp::from_coeffs([
            (1, DiffPoly::one()),
            (0, DiffPoly::from_field(FieldElem::int(-1).div(&FieldElem::x()).unwrap())),
        ]));
        let s = solve_rational(&m, &[FieldElem::x()], None).unwrap();
        let check = apply_field(&m, 0, 0, &s.particular[0]);
        assert_eq!(check, FieldElem::x());
        assert_eq!(s.basis.len(), 1);
    }
}
