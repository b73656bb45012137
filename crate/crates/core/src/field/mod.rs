//! The quasiconstant differential field: rational functions over ℚ in `x`,
//! constant parameters, and jets of free function symbols.

pub mod integrate;
pub mod poly;

pub use poly::{gcd, q, qq, Mono, Poly, Sym, Var};

use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;

/// `num / den` in lowest terms with a monic denominator.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElem {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Default for FieldElem {
    fn default() -> Self {
        FieldElem::zero()
    }
}

impl FieldElem {
    pub fn zero() -> FieldElem {
        FieldElem {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> FieldElem {
        FieldElem {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn from_q(c: BigRational) -> FieldElem {
        FieldElem {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn int(n: i64) -> FieldElem {
        FieldElem::from_q(q(n))
    }

    pub fn ratio(n: i64, d: i64) -> FieldElem {
        FieldElem::from_q(qq(n, d))
    }

    pub fn x() -> FieldElem {
        FieldElem::from_poly(Poly::var(Var::X))
    }

    pub fn param(name: &str) -> FieldElem {
        FieldElem::from_poly(Poly::var(Var::Param(Sym::new(name))))
    }

    /// A free function symbol of x, differentiated `order` times.
    pub fn fun(name: &str, order: u32) -> FieldElem {
        FieldElem::from_poly(Poly::var(Var::Fun(Sym::new(name), order)))
    }

    pub fn from_poly(p: Poly) -> FieldElem {
        FieldElem { num: p, den: Poly::one() }
    }

    pub fn new(num: Poly, den: Poly) -> Option<FieldElem> {
        if den.is_zero() {
            return None;
        }
        Some(FieldElem::normalize(num, den))
    }

    fn normalize(num: Poly, den: Poly) -> FieldElem {
        if num.is_zero() {
            return FieldElem::zero();
        }
        if let Some(c) = den.as_constant() {
            return FieldElem {
                num: num.scale(&c.recip()),
                den: Poly::one(),
            };
        }
        let g = gcd(&num, &den);
        let (num, den) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        if lc.is_one() {
            FieldElem { num, den }
        } else {
            let inv = lc.recip();
            FieldElem {
                num: num.scale(&inv),
                den: den.scale(&inv),
            }
        }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// Rational value when the element is a plain number.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// Constant in the differential sense: killed by ∂.
    pub fn is_constant(&self) -> bool {
        let dep = |v: &Var| matches!(v, Var::X | Var::Fun(..));
        !self.num.contains_var(dep) && !self.den.contains_var(dep)
    }

    pub fn has_fun(&self) -> bool {
        let dep = |v: &Var| matches!(v, Var::Fun(..));
        self.num.contains_var(dep) || self.den.contains_var(dep)
    }

    pub fn add(&self, o: &FieldElem) -> FieldElem {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        if self.den == o.den {
            return FieldElem::normalize(self.num.add(&o.num), self.den.clone());
        }
        if self.den.is_one() {
            return FieldElem::normalize(self.num.mul(&o.den).add(&o.num), o.den.clone());
        }
        if o.den.is_one() {
            return FieldElem::normalize(self.num.add(&o.num.mul(&self.den)), self.den.clone());
        }
        let g = gcd(&self.den, &o.den);
        let a = self.den.div_exact(&g).unwrap();
        let b = o.den.div_exact(&g).unwrap();
        FieldElem::normalize(self.num.mul(&b).add(&o.num.mul(&a)), a.mul(&o.den))
    }

    pub fn neg(&self) -> FieldElem {
        FieldElem {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &FieldElem) -> FieldElem {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &FieldElem) -> FieldElem {
        if self.is_zero() || o.is_zero() {
            return FieldElem::zero();
        }
        if self.den.is_one() && o.den.is_one() {
            return FieldElem {
                num: self.num.mul(&o.num),
                den: Poly::one(),
            };
        }
        if let Some(c) = o.as_rational() {
            return self.scale(&c);
        }
        if let Some(c) = self.as_rational() {
            return o.scale(&c);
        }
        // Cross-cancel before multiplying to keep sizes down.
        let g1 = gcd(&self.num, &o.den);
        let g2 = gcd(&o.num, &self.den);
        let n1 = self.num.div_exact(&g1).unwrap();
        let d2 = o.den.div_exact(&g1).unwrap();
        let n2 = o.num.div_exact(&g2).unwrap();
        let d1 = self.den.div_exact(&g2).unwrap();
        let num = n1.mul(&n2);
        let den = d1.mul(&d2);
        let lc = den.leading().map(|(_, c)| c.clone()).unwrap();
        let inv = lc.recip();
        FieldElem {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn scale(&self, c: &BigRational) -> FieldElem {
        if c.is_zero() {
            return FieldElem::zero();
        }
        FieldElem {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn inv(&self) -> Option<FieldElem> {
        if self.is_zero() {
            return None;
        }
        let lc = self.num.leading().map(|(_, c)| c.clone()).unwrap();
        let inv = lc.recip();
        Some(FieldElem {
            num: self.den.scale(&inv),
            den: self.num.scale(&inv),
        })
    }

    pub fn div(&self, o: &FieldElem) -> Option<FieldElem> {
        Some(self.mul(&o.inv()?))
    }

    pub fn pow(&self, e: u32) -> FieldElem {
        let mut r = FieldElem::one();
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    pub fn derive(&self) -> FieldElem {
        if self.den.is_one() {
            return FieldElem {
                num: self.num.derive(),
                den: Poly::one(),
            };
        }
        let n = self.num.derive().mul(&self.den).sub(&self.num.mul(&self.den.derive()));
        FieldElem::normalize(n, self.den.mul(&self.den))
    }

    pub fn derive_n(&self, n: u32) -> FieldElem {
        let mut r = self.clone();
        for _ in 0..n {
            if r.is_zero() {
                break;
            }
            r = r.derive();
        }
        r
    }

    /// Substitute a field element for a variable.
    pub fn subst(&self, v: Var, val: &FieldElem) -> FieldElem {
        let sub = |p: &Poly| -> FieldElem {
            let cs = p.coeffs_in(v);
            let mut r = FieldElem::zero();
            let mut pw = FieldElem::one();
            for c in cs {
                r = r.add(&FieldElem::from_poly(c).mul(&pw));
                pw = pw.mul(val);
            }
            r
        };
        sub(&self.num).div(&sub(&self.den)).expect("substitution made the denominator vanish")
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v.sort();
        v.dedup();
        v
    }

    /// True when printing needs parentheses in a product.
    pub fn is_compound(&self) -> bool {
        !self.den.is_one() || self.num.nterms() > 1
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let n = if self.num.nterms() > 1 {
            format!("({})", self.num)
        } else {
            format!("{}", self.num)
        };
        let single = self.den.terms().next().map(|(m, _)| m.len() == 1).unwrap_or(true);
        let d = if self.den.nterms() > 1 || !single {
            format!("({})", self.den)
        } else {
            format!("{}", self.den)
        };
        write!(f, "{n}/{d}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_inverse() {
        let a = FieldElem::x().add(&FieldElem::param("c"));
        let b = FieldElem::x().mul(&FieldElem::x()).sub(&FieldElem::int(3));
        let r = a.div(&b).unwrap();
        assert!(r.mul(&b.div(&a).unwrap()).is_one());
    }

    #[test]
    fn derivative_of_quotient() {
        let r = FieldElem::one().div(&FieldElem::x()).unwrap();
        let expect = FieldElem::int(-1).div(&FieldElem::x().pow(2)).unwrap();
        assert_eq!(r.derive(), expect);
        assert!(FieldElem::param("c").is_constant());
        assert!(!FieldElem::fun("a", 0).is_constant());
        assert_eq!(FieldElem::fun("a", 0).derive(), FieldElem::fun("a", 1));
    }
}
