//! Lenard–Magri recursion K δh_{n+1} = H δh_n for a compatible pair, with
//! obstruction reports and involution certificates.

use crate::diffalg::{
    frechet, functional_eq, inverse_total_derivative, is_exact_1form, reconstruct_density, variational_derivative, DiffPoly, LocalFunctional,
};
use crate::diffop::MatDiffOp;
use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::linsys;
use crate::pva::{check_compatible, check_jacobi, poisson_bracket, LambdaBracket};
use rayon::prelude::*;

/// Why the recursion stopped, with the offending class as witness.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstruction {
    pub step: usize,
    pub error: Error,
    pub witness: Vec<DiffPoly>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyState {
    pub h: LambdaBracket,
    pub k: LambdaBracket,
    pub densities: Vec<LocalFunctional>,
    /// `certificates[n]` re-checks K δh_{n+1} = H δh_n exactly.
    pub certificates: Vec<bool>,
    pub obstruction: Option<Obstruction>,
}

/// K = A∂^n with A a constant-in-jets invertible matrix.
#[derive(Clone, Debug)]
struct Invertible {
    ainv: Vec<Vec<FieldElem>>,
    n: u32,
}

fn invertible_form(k: &MatDiffOp) -> Result<Invertible> {
    let unsupported = || Error::NoPreimage("only operators A∂^n with invertible quasiconstant A are inverted".into());
    if !k.is_quasiconstant() {
        return Err(unsupported());
    }
    let n = k.order().ok_or_else(unsupported)?;
    if k.entries().iter().flatten().any(|e| e.coeffs().any(|(m, _)| *m != n)) {
        return Err(unsupported());
    }
    let a = k.coeff_matrix(n).ok_or_else(unsupported)?;
    let ainv = linsys::inverse(&a).ok_or_else(unsupported)?;
    Ok(Invertible { ainv, n })
}

impl Invertible {
    /// G with A∂^n G = F, integration constants zero.
    fn solve(&self, f: &[DiffPoly]) -> Result<Vec<DiffPoly>> {
        let mut g: Vec<DiffPoly> = self
            .ainv
            .iter()
            .map(|row| row.iter().zip(f).fold(DiffPoly::zero(), |acc, (c, fi)| acc.add(&fi.scale(c))))
            .collect();
        for _ in 0..self.n {
            g = g.iter().map(inverse_total_derivative).collect::<Result<_>>()?;
        }
        Ok(g)
    }
}

impl HierarchyState {
    pub fn new(h: LambdaBracket, k: LambdaBracket, seed: LocalFunctional) -> HierarchyState {
        HierarchyState {
            h,
            k,
            densities: vec![seed],
            certificates: Vec::new(),
            obstruction: None,
        }
    }

    pub fn ell(&self) -> usize {
        self.h.ell()
    }

    /// Description of the ambiguity fixed by zero integration constants.
    pub fn kernel_note(&self) -> String {
        match invertible_form(self.k.op()) {
            Ok(inv) if inv.n > 0 => format!(
                "densities are fixed modulo preimages of ker K: vectors of polynomials in x of degree < {}",
                inv.n
            ),
            _ => "ker K is trivial on the supported class".into(),
        }
    }
}

/// One step: F = Hδh_n, G = K⁻¹F, exactness of G, density of G.
pub fn lenard_step(state: &HierarchyState) -> Result<LocalFunctional> {
    let ell = state.ell();
    let last = state.densities.last().expect("a seed density");
    let dh = variational_derivative(&last.0, ell);
    let f = state.h.op().apply(&dh)?;
    let inv = invertible_form(state.k.op())?;
    let g = inv.solve(&f)?;
    if !is_exact_1form(&g, ell) {
        let d = frechet(&g, ell);
        let r = d.sub(&d.adjoint())?;
        return Err(Error::NotExact(format!("D_G − D_G* = {r}")));
    }
    Ok(LocalFunctional(reconstruct_density(&g, ell)?))
}

fn certify(state: &HierarchyState, n: usize) -> Result<bool> {
    let ell = state.ell();
    let a = variational_derivative(&state.densities[n + 1].0, ell);
    let b = variational_derivative(&state.densities[n].0, ell);
    Ok(state.k.op().apply(&a)? == state.h.op().apply(&b)?)
}

/// Run up to `steps` recursion steps; an obstruction stops the run and is recorded.
pub fn run_hierarchy(h: &LambdaBracket, k: &LambdaBracket, seed: LocalFunctional, steps: usize) -> Result<HierarchyState> {
    for (name, s) in [("first", h), ("second", k)] {
        let v = check_jacobi(s).map_err(|e| Error::NotPoisson(format!("{name} structure: {e}")))?;
        if !v.holds {
            return Err(Error::NotPoisson(format!("{name} structure fails Jacobi")));
        }
    }
    if !check_compatible(h, k)?.holds {
        return Err(Error::NotPoisson("the pair is not compatible".into()));
    }
    let mut state = HierarchyState::new(h.clone(), k.clone(), seed);
    for step in 0..steps {
        match lenard_step(&state) {
            Ok(next) => {
                state.densities.push(next);
                let ok = certify(&state, step)?;
                state.certificates.push(ok);
            }
            Err(e @ (Error::NoPreimage(_) | Error::NotExact(_))) => {
                let last = state.densities.last().unwrap();
                let witness = state.h.op().apply(&variational_derivative(&last.0, state.ell()))?;
                state.obstruction = Some(Obstruction { step, error: e, witness });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

/// Pairwise {∫h_m, ∫h_n} ≡ 0 under each bracket.
#[derive(Clone, Debug, PartialEq)]
pub struct InvolutionReport {
    pub under_h: Vec<Vec<bool>>,
    pub under_k: Vec<Vec<bool>>,
}

impl InvolutionReport {
    pub fn all(&self) -> bool {
        self.under_h.iter().chain(&self.under_k).flatten().all(|b| *b)
    }
}

pub fn verify_involution(state: &HierarchyState) -> Result<InvolutionReport> {
    let n = state.densities.len();
    let ell = state.ell();
    let zero = LocalFunctional(DiffPoly::zero());
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let check = |s: &LambdaBracket| -> Result<Vec<Vec<bool>>> {
        let flat: Vec<bool> = pairs
            .par_iter()
            .map(|&(a, b)| {
                let pb = poisson_bracket(&state.densities[a], &state.densities[b], s)?;
                functional_eq(&pb, &zero, ell)
            })
            .collect::<Result<_>>()?;
        Ok(flat.chunks(n).map(|c| c.to_vec()).collect())
    };
    Ok(InvolutionReport {
        under_h: check(&state.h)?,
        under_k: check(&state.k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::ScalarOp;
    use crate::pva::scalar_bracket;

    fn u(n: u32) -> DiffPoly {
        DiffPoly::jet(0, n)
    }

    fn c() -> DiffPoly {
        DiffPoly::from_field(FieldElem::param("c"))
    }

    fn magri() -> LambdaBracket {
        scalar_bracket(ScalarOp::from_coeffs([(0, u(1)), (1, u(0).scale(&FieldElem::int(2))), (3, c())]))
    }

    #[test]
    fn kdv_first_step() {
        let half = FieldElem::ratio(1, 2);
        let st = HierarchyState::new(magri(), scalar_bracket(ScalarOp::d(1)), LocalFunctional(u(0).pow(2).scale(&half)));
        let h1 = lenard_step(&st).unwrap();
        let expect = u(0).pow(3).add(&c().mul(&u(0)).mul(&u(2))).scale(&half);
        assert!(functional_eq(&h1, &LocalFunctional(expect), 1).unwrap());
    }

    #[test]
    fn third_order_second_structure_is_obstructed() {
        let half = FieldElem::ratio(1, 2);
        let st = run_hierarchy(
            &scalar_bracket(ScalarOp::d(1)),
            &scalar_bracket(ScalarOp::d(3)),
            LocalFunctional(u(0).pow(2).scale(&half)),
            2,
        )
        .unwrap();
        let ob = st.obstruction.unwrap();
        assert!(matches!(ob.error, Error::NoPreimage(_)));
        assert_eq!(ob.witness, vec![u(1)]);
        assert_eq!(st.densities.len(), 1);
    }

    #[test]
    fn zero_steps_keeps_seed() {
        let st = run_hierarchy(&magri(), &scalar_bracket(ScalarOp::d(1)), LocalFunctional(u(0)), 0).unwrap();
        assert_eq!(st.densities.len(), 1);
        assert!(verify_involution(&st).unwrap().all());
    }
}
