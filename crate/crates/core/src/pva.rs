//! λ-brackets given by a matrix differential operator, Jacobi and compatibility
//! checks, evolutionary vector fields and the induced functional bracket.

use crate::diffalg::{frechet, variational_derivative, DiffPoly, LocalFunctional};
use crate::diffop::{MatDiffOp, ScalarOp};
use crate::error::{Error, Result};
use crate::lampoly::{LamPoly, LinD};
use rayon::prelude::*;

/// λ-bracket on generators: entry (i,j) of `op` is {u_j ∂ u_i}→, so {u_i λ u_j} = op_ji(λ).
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaBracket {
    op: MatDiffOp,
}

impl LambdaBracket {
    pub fn new(op: MatDiffOp) -> Result<LambdaBracket> {
        if !op.is_square() {
            return Err(Error::ShapeMismatch(format!("{}x{} bracket matrix", op.rows(), op.cols())));
        }
        Ok(LambdaBracket { op })
    }

    pub fn op(&self) -> &MatDiffOp {
        &self.op
    }

    pub fn ell(&self) -> usize {
        self.op.rows()
    }

    /// {f_λ g} by the master formula, as a one-variable λ-polynomial.
    pub fn bracket(&self, f: &DiffPoly, g: &DiffPoly) -> LamPoly {
        let ell = self.ell();
        let mut out = LamPoly::zero(1);
        if f.is_zero() || g.is_zero() {
            return out;
        }
        // A_i = Σ_m (−λ−∂)^m ∂f/∂u_i^(m)
        let a: Vec<LamPoly> = (0..ell).map(|i| crate::diffalg::higher_euler(f, i)).collect();
        for j in 0..ell {
            let Some(top) = g.order_in(j) else { continue };
            // B_j = Σ_i op_ji(λ+∂) A_i
            let mut b = LamPoly::zero(1);
            for (i, ai) in a.iter().enumerate() {
                if ai.is_zero() {
                    continue;
                }
                let h: Vec<(u32, DiffPoly)> = self.op.get(j, i).coeffs().map(|(n, c)| (*n, c.clone())).collect();
                b.add_assign(&ai.apply_op_shift(&h, &[1], 1));
            }
            if b.is_zero() {
                continue;
            }
            for n in 0..=top {
                let dg = g.jet_partial(j, n);
                if dg.is_zero() {
                    continue;
                }
                out.add_assign(&b.apply_shift(&[1], 1, n).mul_coeff(&dg));
            }
        }
        out
    }

    /// {f_λ G} for a λ-polynomial G in `g.nvars()` variables; λ is appended as the last variable.
    pub fn bracket_right(&self, f: &DiffPoly, g: &LamPoly) -> LamPoly {
        let nv = g.nvars();
        let mut out = LamPoly::zero(nv + 1);
        for (e, c) in g.terms() {
            let pos = [nv];
            let b = self.bracket(f, c).embed(nv + 1, &pos);
            let mut ee = e.clone();
            ee.push(0);
            out.add_assign(&b.mul_monomial(&ee));
        }
        out
    }

    /// {F_ν h} with ν substituted by `nu`, for F a λ-polynomial whose variables pass through.
    pub fn bracket_left(&self, f: &LamPoly, h: &DiffPoly, nu: &LinD) -> LamPoly {
        let nv = f.nvars();
        let mut out = LamPoly::zero(nv);
        for (e, c) in f.terms() {
            let b = self.bracket(c, h).subst(nv, std::slice::from_ref(nu));
            out.add_assign(&b.mul_monomial(e));
        }
        out
    }
}

/// {f_{−λ−∂} g} from {f_λ g}: λ^e c ↦ (−λ−∂)^e c.
pub fn flip(p: &LamPoly) -> LamPoly {
    assert_eq!(p.nvars(), 1);
    let mut out = LamPoly::zero(1);
    for (e, c) in p.terms() {
        out.add_assign(&LamPoly::constant(1, c.clone()).apply_shift(&[-1], -1, e[0]));
    }
    out
}

pub fn check_skewadjoint(h: &LambdaBracket) -> bool {
    h.op.is_skewadjoint()
}

/// {f_λ{g_μ h}_b}_a − {g_μ{f_λ h}_b}_a − {{f_λ g}_b λ+μ h}_a in variables (λ, μ).
pub fn mixed_jacobi(a: &LambdaBracket, b: &LambdaBracket, f: &DiffPoly, g: &DiffPoly, h: &DiffPoly) -> LamPoly {
    // Inner brackets carry their own variable at index 0; the outer one lands at index 1.
    let gh = b.bracket(g, h);
    let t1 = a.bracket_right(f, &gh).permute(&[1, 0]);
    let fh = b.bracket(f, h);
    let t2 = a.bracket_right(g, &fh);
    let fg = b.bracket(f, g).embed(2, &[0]);
    let t3 = a.bracket_left(&fg, h, &LinD { lin: vec![1, 1], d: 0 });
    t1.sub(&t2).sub(&t3)
}

pub fn jacobi_residual(hb: &LambdaBracket, f: &DiffPoly, g: &DiffPoly, h: &DiffPoly) -> LamPoly {
    mixed_jacobi(hb, hb, f, g, h)
}

/// Witness for a failed identity on generators (zero-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct TripleWitness {
    pub triple: (usize, usize, usize),
    pub residual: LamPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<TripleWitness>,
}

fn triples(ell: usize) -> Vec<(usize, usize, usize)> {
    let mut v = Vec::with_capacity(ell * ell * ell);
    for i in 0..ell {
        for j in 0..ell {
            for k in 0..ell {
                v.push((i, j, k));
            }
        }
    }
    v
}

fn first_failure(ell: usize, residual: impl Fn(usize, usize, usize) -> LamPoly + Sync) -> Verdict {
    let mut fails: Vec<TripleWitness> = triples(ell)
        .into_par_iter()
        .filter_map(|(i, j, k)| {
            let r = residual(i, j, k);
            (!r.is_zero()).then_some(TripleWitness {
                triple: (i, j, k),
                residual: r,
            })
        })
        .collect();
    fails.sort_by_key(|w| w.triple);
    Verdict {
        holds: fails.is_empty(),
        witness: fails.into_iter().next(),
    }
}

/// Jacobi identity on all generator triples.
pub fn check_jacobi(hb: &LambdaBracket) -> Result<Verdict> {
    if !check_skewadjoint(hb) {
        return Err(Error::NotSkewadjoint);
    }
    let u = |i| DiffPoly::jet(i, 0);
    Ok(first_failure(hb.ell(), |i, j, k| jacobi_residual(hb, &u(i), &u(j), &u(k))))
}

/// Compatibility: the mixed Jacobi expression symmetrized in the two structures vanishes.
pub fn check_compatible(h: &LambdaBracket, k: &LambdaBracket) -> Result<Verdict> {
    if h.ell() != k.ell() {
        return Err(Error::ShapeMismatch("structures on different numbers of variables".into()));
    }
    let u = |i| DiffPoly::jet(i, 0);
    Ok(first_failure(h.ell(), |i, j, l| {
        mixed_jacobi(h, k, &u(i), &u(j), &u(l)).add(&mixed_jacobi(k, h, &u(i), &u(j), &u(l)))
    }))
}

pub fn is_poisson(hb: &LambdaBracket) -> bool {
    check_jacobi(hb).map(|v| v.holds).unwrap_or(false)
}

/// Evolutionary vector field with characteristic P.
#[derive(Clone, Debug, PartialEq)]
pub struct EvVectorField(pub Vec<DiffPoly>);

/// X_P f = Σ (∂^n P_i) ∂f/∂u_i^(n).
pub fn ev_apply(x: &EvVectorField, f: &DiffPoly) -> DiffPoly {
    let mut out = DiffPoly::zero();
    for (i, p) in x.0.iter().enumerate() {
        let Some(top) = f.order_in(i) else { continue };
        let mut dp = p.clone();
        for n in 0..=top {
            let pf = f.jet_partial(i, n);
            if !pf.is_zero() {
                out.add_assign(&dp.mul(&pf));
            }
            if n < top {
                dp = dp.derive();
            }
        }
    }
    out
}

pub fn ev_commutator(p: &EvVectorField, q: &EvVectorField) -> EvVectorField {
    EvVectorField(p.0.iter().zip(&q.0).map(|(pi, qi)| ev_apply(p, qi).sub(&ev_apply(q, pi))).collect())
}

/// X_P(H) − H∘D_P* − D_P∘H.
pub fn ad_field_on_operator(x: &EvVectorField, hb: &LambdaBracket) -> Result<MatDiffOp> {
    let ell = hb.ell();
    let xh = hb.op.map(|e| e.map_coeffs(|c| ev_apply(x, c)));
    let dp = frechet(&x.0, ell);
    xh.sub(&hb.op.compose(&dp.adjoint())?)?.sub(&dp.compose(&hb.op)?)
}

/// P = H(∂) δh/δu.
pub fn hamiltonian_vf(h: &LocalFunctional, hb: &LambdaBracket) -> Result<EvVectorField> {
    let dh = variational_derivative(&h.0, hb.ell());
    Ok(EvVectorField(hb.op.apply(&dh)?))
}

/// ∫ δg/δu · H(∂) δf/δu.
pub fn poisson_bracket(f: &LocalFunctional, g: &LocalFunctional, hb: &LambdaBracket) -> Result<LocalFunctional> {
    let ell = hb.ell();
    let df = variational_derivative(&f.0, ell);
    let dg = variational_derivative(&g.0, ell);
    let hdf = hb.op.apply(&df)?;
    let mut out = DiffPoly::zero();
    for (a, b) in dg.iter().zip(&hdf) {
        out.add_assign(&a.mul(b));
    }
    Ok(LocalFunctional(out))
}

/// Scalar structure from one operator.
pub fn scalar_bracket(op: ScalarOp) -> LambdaBracket {
    LambdaBracket { op: MatDiffOp::scalar(op) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldElem;

    fn u(n: u32) -> DiffPoly {
        DiffPoly::jet(0, n)
    }

    fn magri() -> LambdaBracket {
        let c = DiffPoly::from_field(FieldElem::param("c"));
        scalar_bracket(ScalarOp::from_coeffs([(0, u(1)), (1, u(0).scale(&FieldElem::int(2))), (3, c)]))
    }

    #[test]
    fn gfz_bracket() {
        let k = scalar_bracket(ScalarOp::d(1));
        assert_eq!(k.bracket(&u(0), &u(0)), LamPoly::var(1, 0));
        let r = k.bracket(&u(0).pow(2), &u(0));
        let expect = LamPoly::monomial(vec![1], u(0).scale(&FieldElem::int(2))).add(&LamPoly::constant(1, u(1).scale(&FieldElem::int(2))));
        assert_eq!(r, expect);
    }

    #[test]
    fn magri_bracket_and_jacobi() {
        let m = magri();
        let r = m.bracket(&u(0), &u(0));
        assert_eq!(r.to_string(), "u' + 2*u*l1 + c*l1^3");
        assert!(check_jacobi(&m).unwrap().holds);
        assert!(check_compatible(&m, &scalar_bracket(ScalarOp::d(1))).unwrap().holds);
    }

    #[test]
    fn failing_jacobi_has_witness() {
        let half = FieldElem::ratio(1, 2);
        let hb = scalar_bracket(ScalarOp::from_coeffs([(1, u(1))]).add(&ScalarOp::mul_by(u(2).scale(&half))));
        assert!(check_skewadjoint(&hb));
        let v = check_jacobi(&hb).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness.unwrap().triple, (0, 0, 0));
    }
}
