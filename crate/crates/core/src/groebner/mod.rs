//! Monomials over tensor-indexed variables, grevlex order, the explicit
//! Gröbner bases of the rank-1 and nuclear p-norm ideals, division, and
//! Buchberger verification.

mod basis;
mod monomial;
mod normal_form;
mod parse;
mod polynomial;

pub use basis::{
    build_groebner, buchberger_check, first_buchberger_failure, is_reduced, max_standard_degree, monomial_basis, reduce,
    s_polynomial, GroebnerBasis, IdealKind, MonomialBasis, NormExponent,
};
pub use monomial::Monomial;
pub use normal_form::{normal_form_g0, normal_form_ginf};
pub use parse::parse_polynomial;
pub use polynomial::{coeff_from_f64, coeff_int, coeff_to_f64, Coeff, Polynomial};
