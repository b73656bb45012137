//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varpois::complexes::{sorted_tuples, Level, SkewArray};
use varpois::diffalg::{DiffPoly, Jet};
use varpois::diffop::{MatDiffOp, ScalarOp};
use varpois::lampoly::LamPoly;
use varpois::FieldElem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn u(i: usize, n: u32) -> DiffPoly {
    DiffPoly::jet(i, n)
}

pub fn int(n: i64) -> FieldElem {
    FieldElem::int(n)
}

pub fn nonzero(r: &mut (impl Rng + ?Sized), bound: i64) -> i64 {
    loop {
        let c = r.gen_range(-bound..=bound);
        if c != 0 {
            return c;
        }
    }
}

/// Random coefficient: a small integer, sometimes times x.
pub fn coeff(r: &mut (impl Rng + ?Sized)) -> FieldElem {
    let c = FieldElem::int(nonzero(r, 3));
    if r.gen_bool(0.2) {
        c.mul(&FieldElem::x())
    } else {
        c
    }
}

/// Random polynomial in the jets admitted by `allow`, total degree ≤ `max_deg`.
pub fn poly_with(r: &mut (impl Rng + ?Sized), jets: &[Jet], max_deg: u32, nterms: usize, with_constant: bool) -> DiffPoly {
    let mut p = DiffPoly::zero();
    for _ in 0..nterms {
        let deg = r.gen_range(if with_constant { 0 } else { 1 }..=max_deg);
        let mut m = DiffPoly::one();
        for _ in 0..deg {
            if jets.is_empty() {
                break;
            }
            let j = jets[r.gen_range(0..jets.len())];
            m = m.mul(&DiffPoly::jet(j.i, j.n));
        }
        p.add_assign(&m.scale(&coeff(r)));
    }
    p
}

pub fn jets_up_to(ell: usize, max_n: u32) -> Vec<Jet> {
    (0..=max_n).flat_map(|n| (0..ell).map(move |i| Jet::new(i, n))).collect()
}

pub fn poly(r: &mut (impl Rng + ?Sized), ell: usize, max_n: u32, max_deg: u32, nterms: usize) -> DiffPoly {
    poly_with(r, &jets_up_to(ell, max_n), max_deg, nterms, true)
}

/// Random λ-polynomial with per-variable degree bounds.
pub fn lampoly_with(r: &mut (impl Rng + ?Sized), bounds: &[u32], mut coeff_gen: impl FnMut(&mut dyn rand::RngCore) -> DiffPoly, nterms: usize) -> LamPoly {
    let mut p = LamPoly::zero(bounds.len());
    for _ in 0..nterms {
        let e: Vec<u32> = bounds.iter().map(|&b| r.gen_range(0..=b)).collect();
        let mut rr = ChaCha8Rng::seed_from_u64(r.gen());
        p.add_assign(&LamPoly::monomial(e, coeff_gen(&mut rr)));
    }
    p
}

/// Random array of arity k with jets up to `max_n` and λ-degree ≤ `lam_deg`.
pub fn array(r: &mut (impl Rng + ?Sized), ell: usize, k: usize, max_n: u32, lam_deg: u32) -> SkewArray {
    let jets = jets_up_to(ell, max_n);
    let mut entries: Vec<(Vec<usize>, LamPoly)> = Vec::new();
    for key in sorted_tuples(ell, k) {
        if r.gen_bool(0.8) {
            let nt = r.gen_range(1..=2);
            entries.push((key, lampoly_with(r, &vec![lam_deg; k], |rr| poly_with(rr, &jets, 2, 2, true), nt)));
        }
    }
    SkewArray::from_entries(ell, k, entries).expect("well-formed keys")
}

/// Jets at or below level (m, i): (n, j+1) ≤ (m, i) lexicographically.
pub fn jets_in_level(ell: usize, lv: Level) -> Vec<Jet> {
    jets_up_to(ell, lv.m).into_iter().filter(|j| (j.n, j.i + 1) <= (lv.m, lv.i)).collect()
}

/// Random array in Ω̃_{m,i} for an operator of order `n`.
pub fn array_in_level(r: &mut (impl Rng + ?Sized), ell: usize, k: usize, n: u32, lv: Level) -> SkewArray {
    let jets = jets_in_level(ell, lv);
    let entries: Vec<(Vec<usize>, LamPoly)> = sorted_tuples(ell, k)
        .into_iter()
        .map(|key| {
            let bounds: Vec<u32> = key.iter().map(|&ia| if ia < lv.i { lv.m + n } else { lv.m + n - 1 }).collect();
            let nt = r.gen_range(1..=3);
            let e = lampoly_with(r, &bounds, |rr| poly_with(rr, &jets, 2, 2, true), nt);
            (key, e)
        })
        .collect();
    SkewArray::from_entries(ell, k, entries).expect("well-formed keys")
}

/// Random quasiconstant operator ∂^n·1 + lower terms with polynomial coefficients.
pub fn monic_operator(r: &mut (impl Rng + ?Sized), ell: usize, n: u32) -> MatDiffOp {
    let mut rows = Vec::new();
    for i in 0..ell {
        let mut row = Vec::new();
        for j in 0..ell {
            let mut op = if i == j { ScalarOp::d(n) } else { ScalarOp::zero() };
            for m in 0..n {
                if r.gen_bool(0.5) {
                    op.add_at(m, DiffPoly::from_field(coeff(r)));
                }
            }
            row.push(op);
        }
        rows.push(row);
    }
    MatDiffOp::from_rows(rows).unwrap()
}

/// Σλ + ∂ applied to every entry: the action whose image is factored out in the quotient.
pub fn total_shift(p: &SkewArray) -> SkewArray {
    let k = p.arity();
    p.map_entries(|e| {
        let mut out = e.derive();
        for a in 0..k {
            out.add_assign(&e.mul(&LamPoly::var(k, a)));
        }
        out
    })
}
