//! Rational antiderivatives in x via Horowitz–Ostrogradsky reduction.

use super::poly::{q, Mono, Poly, Var};
use super::FieldElem;
use crate::error::{Error, Result};
use crate::linsys;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Dense univariate polynomial over ℚ; index = degree.
type UPoly = Vec<BigRational>;

fn trim(mut p: UPoly) -> UPoly {
    while p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
    p
}

fn umul(a: &UPoly, b: &UPoly) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut r = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    trim(r)
}

fn usub(a: &UPoly, b: &UPoly) -> UPoly {
    let n = a.len().max(b.len());
    let z = BigRational::zero();
    trim((0..n).map(|i| a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).collect())
}

fn uderiv(a: &UPoly) -> UPoly {
    trim(a.iter().enumerate().skip(1).map(|(i, c)| c * q(i as i64)).collect())
}

fn udivrem(a: &UPoly, b: &UPoly) -> (UPoly, UPoly) {
    let mut r = trim(a.clone());
    let db = b.len() - 1;
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut quo = vec![BigRational::zero(); r.len() - db];
    let lc = b[db].clone();
    while r.len() >= b.len() {
        let t = r.last().unwrap() / &lc;
        let s = r.len() - 1 - db;
        for (i, c) in b.iter().enumerate() {
            r[i + s] -= &t * c;
        }
        quo[s] = t;
        r.pop();
        r = trim(r);
    }
    (trim(quo), r)
}

fn umonic(a: &UPoly) -> UPoly {
    let lc = a.last().unwrap().clone();
    a.iter().map(|c| c / &lc).collect()
}

fn ugcd(a: &UPoly, b: &UPoly) -> UPoly {
    let (mut x, mut y) = (trim(a.clone()), trim(b.clone()));
    while !y.is_empty() {
        let (_, r) = udivrem(&x, &y);
        x = y;
        y = r;
    }
    umonic(&x)
}

fn to_upoly(p: &Poly) -> UPoly {
    let cs = p.coeffs_in(Var::X);
    trim(cs.iter().map(|c| c.as_constant().expect("univariate in x")).collect())
}

fn from_upoly(p: &UPoly) -> Poly {
    Poly::from_terms(p.iter().enumerate().map(|(i, c)| {
        let m: Mono = if i == 0 { vec![] } else { vec![(Var::X, i as u32)] };
        (m, c.clone())
    }))
}

/// `a/d = (g)' + c/d2` over ℚ(x); returns (g, c/d2). The second part is zero iff a/d has a rational antiderivative.
fn hermite_u(a: &UPoly, d: &UPoly) -> (FieldElem, FieldElem) {
    let (quo, rem) = udivrem(a, d);
    // Polynomial part integrates termwise.
    let mut ip = vec![BigRational::zero()];
    for (i, c) in quo.iter().enumerate() {
        ip.push(c / q(i as i64 + 1));
    }
    let poly_part = FieldElem::from_poly(from_upoly(&trim(ip)));
    if rem.is_empty() {
        return (poly_part, FieldElem::zero());
    }
    let d1 = ugcd(d, &uderiv(d));
    let (d2, _) = udivrem(d, &d1);
    let (t, tr) = udivrem(&umul(&d2, &uderiv(&d1)), &d1);
    debug_assert!(tr.is_empty());
    let n1 = d1.len() - 1;
    let n2 = d2.len() - 1;
    let n = n1 + n2;
    // Columns: b_0..b_{n1-1}, c_0..c_{n2-1}; rows: coefficients of x^0..x^{n-1}.
    let mut rows = vec![vec![BigRational::zero(); n]; n];
    for j in 0..n1 {
        let mut e = vec![BigRational::zero(); j + 1];
        e[j] = BigRational::one();
        let col = usub(&umul(&uderiv(&e), &d2), &umul(&e, &t));
        for (i, c) in col.iter().enumerate() {
            if i < n {
                rows[i][j] += c;
            }
        }
    }
    for j in 0..n2 {
        let mut e = vec![BigRational::zero(); j + 1];
        e[j] = BigRational::one();
        let col = umul(&e, &d1);
        for (i, c) in col.iter().enumerate() {
            if i < n {
                rows[i][n1 + j] += c;
            }
        }
    }
    let mut rhs = rem.clone();
    rhs.resize(n, BigRational::zero());
    let sol = linsys::solve(&rows, &rhs, n).expect("Horowitz-Ostrogradsky system is uniquely solvable");
    let b = trim(sol.particular[..n1].to_vec());
    let c = trim(sol.particular[n1..].to_vec());
    let g = FieldElem::new(from_upoly(&b), from_upoly(&d1)).unwrap();
    let r = FieldElem::new(from_upoly(&c), from_upoly(&d2)).unwrap();
    (poly_part.add(&g), r)
}

/// Split `f = g' + r` with `r = 0` iff f has an antiderivative in the field.
///
/// Supported class: the x-dependent factor of the denominator is a polynomial over ℚ
/// and no free function symbols occur.
pub fn integrate(f: &FieldElem) -> Result<(FieldElem, FieldElem)> {
    if f.is_zero() {
        return Ok((FieldElem::zero(), FieldElem::zero()));
    }
    if f.has_fun() {
        return Err(Error::UndecidableResidue(format!("function symbols in {f}")));
    }
    let den = f.den();
    let dx_cs = den.coeffs_in(Var::X);
    let mut content = Poly::zero();
    for c in &dx_cs {
        content = super::gcd(&content, c);
    }
    let dx = den.div_exact(&content).expect("content divides");
    if dx.vars().iter().any(|v| *v != Var::X) {
        return Err(Error::UndecidableResidue(format!("denominator {den} couples x with parameters")));
    }
    let dx_u = to_upoly(&dx);
    let scale = FieldElem::new(Poly::one(), content).unwrap();
    // Group the numerator by parameter monomials.
    let mut groups: std::collections::BTreeMap<Mono, Vec<(u32, BigRational)>> = Default::default();
    for (m, c) in f.num().terms() {
        let e = m.iter().find(|(v, _)| *v == Var::X).map(|(_, e)| *e).unwrap_or(0);
        let rest: Mono = m.iter().filter(|(v, _)| *v != Var::X).cloned().collect();
        groups.entry(rest).or_default().push((e, c.clone()));
    }
    let mut g = FieldElem::zero();
    let mut r = FieldElem::zero();
    for (pm, terms) in groups {
        let deg = terms.iter().map(|(e, _)| *e).max().unwrap() as usize;
        let mut a = vec![BigRational::zero(); deg + 1];
        for (e, c) in terms {
            a[e as usize] += c;
        }
        let (gi, ri) = hermite_u(&trim(a), &dx_u);
        let w = FieldElem::from_poly(Poly::from_terms([(pm, BigRational::one())])).mul(&scale);
        g = g.add(&gi.mul(&w));
        r = r.add(&ri.mul(&w));
    }
    Ok((g, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_rational_parts() {
        let x = FieldElem::x();
        let (g, r) = integrate(&x).unwrap();
        assert_eq!(g, x.mul(&x).scale(&super::super::qq(1, 2)));
        assert!(r.is_zero());
        let inv = FieldElem::one().div(&x).unwrap();
        let (_, r) = integrate(&inv).unwrap();
        assert_eq!(r, inv);
        let f = FieldElem::int(-1).div(&x.pow(2)).unwrap();
        let (g, r) = integrate(&f).unwrap();
        assert!(r.is_zero());
        assert_eq!(g.derive(), f);
    }

    #[test]
    fn parameters_in_numerator() {
        let c = FieldElem::param("c");
        let x = FieldElem::x();
        let f = c.div(&x.add(&FieldElem::one()).pow(2)).unwrap();
        let (g, r) = integrate(&f).unwrap();
        assert!(r.is_zero());
        assert_eq!(g.derive(), f);
        let bad = FieldElem::one().div(&x.add(&c)).unwrap();
        assert!(matches!(integrate(&bad), Err(Error::UndecidableResidue(_))));
    }
}
