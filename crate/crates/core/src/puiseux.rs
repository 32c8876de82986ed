//! Essential Puiseux pair sequences of irreducible plane curve singularities
//! and the integer recursions attached to them: linking numbers, double point
//! counts, cable pattern exponents and the reduction curve count.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use std::fmt;
use thiserror::Error;

/// A validated sequence of essential Puiseux pairs `(a_i, b_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuiseuxSeq {
    pairs: Vec<(BigInt, BigInt)>,
}

/// One violated validity condition, reported with its pair index (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PairViolation {
    #[error("pair {index}: need 2 <= a < b, got ({a}, {b})")]
    BadPair { index: usize, a: BigInt, b: BigInt },
    #[error("pair {index}: exponent order violated, {prev_b}*{a} >= {b}")]
    ExponentOrder {
        index: usize,
        prev_b: BigInt,
        a: BigInt,
        b: BigInt,
    },
    #[error("pair {index}: gcd(b_i, a_1..a_i) = {gcd}, expected 1")]
    NotCoprime { index: usize, gcd: BigInt },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PuiseuxError {
    Empty,
    Invalid(Vec<PairViolation>),
}

impl fmt::Display for PuiseuxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PuiseuxError::Empty => write!(f, "empty pair list"),
            PuiseuxError::Invalid(v) => {
                write!(f, "invalid Puiseux pairs:")?;
                for violation in v {
                    write!(f, "\n  {violation}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for PuiseuxError {}

/// Derived cable data for a validated sequence.
///
/// `lambda[k]` is the linking number of the k-th and (k-1)-th cable stages,
/// `delta[k]` the double point count of the k-th divide stage, `bprime[k]`
/// the cable pattern exponent, `mult[k]` the multiplicity `a_1*..*a_{k+1}`,
/// and `mu` the Milnor number of the full singularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CableData {
    pub lambda: Vec<BigInt>,
    pub delta: Vec<BigInt>,
    pub bprime: Vec<BigInt>,
    pub mult: Vec<BigInt>,
    pub mu: BigInt,
}

/// Validate a pair list against the three essential-pair conditions.
pub fn validate<I>(pairs: I) -> Result<PuiseuxSeq, PuiseuxError>
where
    I: IntoIterator<Item = (i64, i64)>,
{
    let pairs: Vec<(BigInt, BigInt)> = pairs
        .into_iter()
        .map(|(a, b)| (BigInt::from(a), BigInt::from(b)))
        .collect();
    validate_big(pairs)
}

pub fn validate_big(pairs: Vec<(BigInt, BigInt)>) -> Result<PuiseuxSeq, PuiseuxError> {
    if pairs.is_empty() {
        return Err(PuiseuxError::Empty);
    }
    let mut violations = Vec::new();
    let two = BigInt::from(2);
    let mut a_prod = BigInt::one();
    for (i, (a, b)) in pairs.iter().enumerate() {
        if a < &two || a >= b {
            violations.push(PairViolation::BadPair {
                index: i,
                a: a.clone(),
                b: b.clone(),
            });
        }
        if i > 0 {
            let prev_b = &pairs[i - 1].1;
            // b_{i-1} * a_i < b_i is the fractional exponent inequality
            // b_{i-1}/(a_1..a_{i-1}) < b_i/(a_1..a_i) cleared of denominators.
            if prev_b * a >= *b {
                violations.push(PairViolation::ExponentOrder {
                    index: i,
                    prev_b: prev_b.clone(),
                    a: a.clone(),
                    b: b.clone(),
                });
            }
        }
        a_prod *= a;
        let g = b.gcd(&a_prod);
        if !g.is_one() {
            violations.push(PairViolation::NotCoprime { index: i, gcd: g });
        }
    }
    if violations.is_empty() {
        Ok(PuiseuxSeq { pairs })
    } else {
        Err(PuiseuxError::Invalid(violations))
    }
}

impl PuiseuxSeq {
    pub fn pairs(&self) -> &[(BigInt, BigInt)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Evaluate all recursions. Total on valid input.
pub fn cable_data(seq: &PuiseuxSeq) -> CableData {
    let n = seq.pairs.len();
    let mut lambda = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    let mut bprime = Vec::with_capacity(n);
    let mut mult = Vec::with_capacity(n);

    let one = BigInt::one();
    let two = BigInt::from(2);

    let (a1, b1) = &seq.pairs[0];
    lambda.push(b1.clone());
    bprime.push(b1.clone());
    let d1_num = (a1 - &one) * (b1 - &one);
    let (d1, rem) = d1_num.div_rem(&two);
    assert!(rem.is_zero(), "(a-1)(b-1) must be even for coprime pairs");
    delta.push(d1);
    mult.push(a1.clone());

    for k in 1..n {
        let (a_k1, b_k1) = &seq.pairs[k]; // (a_{k+1}, b_{k+1}) in 1-based terms
        let (a_k, b_k) = &seq.pairs[k - 1];
        // lambda_{k+1} = b_{k+1} - b_k a_{k+1} + lambda_k a_k a_{k+1}
        let lam = b_k1 - b_k * a_k1 + &lambda[k - 1] * a_k * a_k1;
        // b'_{k+1} = lambda_{k+1} - 2 a_{k+1} delta(S_k)
        let bp = &lam - &two * a_k1 * &delta[k - 1];
        assert!(
            bp.gcd(a_k1).is_one(),
            "gcd(a_k, b'_k) = 1 must follow from validity"
        );
        // delta(S_{k+1}) = (a_{k+1}-1)(b'_{k+1}-1)/2 + delta(S_k) a_{k+1}^2
        let num = (a_k1 - &one) * (&bp - &one);
        let (half, rem) = num.div_rem(&two);
        assert!(rem.is_zero(), "(a-1)(b'-1) must be even");
        let d = half + &delta[k - 1] * a_k1 * a_k1;
        mult.push(&mult[k - 1] * a_k1);
        lambda.push(lam);
        bprime.push(bp);
        delta.push(d);
    }

    let mu = &delta[n - 1] * &two;
    CableData {
        lambda,
        delta,
        bprime,
        mult,
        mu,
    }
}

/// Blocks of the iterated star product, listed outermost first:
/// `[(a_n, b'_n), ..., (a_2, b'_2), (a_1, b_1)]`. Evaluation is right to left.
pub fn divide_spec(seq: &PuiseuxSeq) -> Vec<(BigInt, BigInt)> {
    let data = cable_data(seq);
    seq.pairs
        .iter()
        .map(|(a, _)| a.clone())
        .zip(data.bprime)
        .map(|(a, bp)| (a, bp))
        .rev()
        .collect()
}

/// Number of curves in a complete reduction system:
/// `a_n..a_2 + a_{n-1}..a_2 + ... + a_2`, zero for a single pair.
pub fn reduction_count(seq: &PuiseuxSeq) -> BigInt {
    let n = seq.pairs.len();
    let mut total = BigInt::zero();
    for k in 1..n {
        let mut term = BigInt::one();
        for i in 1..=k {
            term *= &seq.pairs[i].0;
        }
        total += term;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn paper_sequences_validate() {
        assert!(validate([(2, 3), (2, 7)]).is_ok());
        assert!(validate([(2, 3), (3, 11)]).is_ok());
    }

    #[test]
    fn gcd_violation_reported() {
        match validate([(2, 4)]) {
            Err(PuiseuxError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert!(matches!(v[0], PairViolation::NotCoprime { index: 0, .. }));
            }
            other => panic!("expected NotCoprime, got {other:?}"),
        }
    }

    #[test]
    fn every_violation_is_listed() {
        // (1,4): BadPair; second pair fails both order and gcd conditions.
        match validate([(1, 4), (2, 6)]) {
            Err(PuiseuxError::Invalid(v)) => {
                assert!(v.iter().any(|x| matches!(x, PairViolation::BadPair { .. })));
                assert!(v
                    .iter()
                    .any(|x| matches!(x, PairViolation::ExponentOrder { .. })));
                assert!(v
                    .iter()
                    .any(|x| matches!(x, PairViolation::NotCoprime { .. })));
            }
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn cable_data_for_two_seven() {
        let seq = validate([(2, 3), (2, 7)]).unwrap();
        let d = cable_data(&seq);
        assert_eq!(d.lambda, vec![big(3), big(13)]);
        assert_eq!(d.bprime, vec![big(3), big(9)]);
        assert_eq!(d.delta, vec![big(1), big(8)]);
        assert_eq!(d.mu, big(16));
        assert_eq!(d.mult, vec![big(2), big(4)]);
    }

    #[test]
    fn cable_data_for_three_eleven() {
        let seq = validate([(2, 3), (3, 11)]).unwrap();
        let d = cable_data(&seq);
        assert_eq!(d.lambda, vec![big(3), big(20)]);
        assert_eq!(d.bprime, vec![big(3), big(14)]);
    }

    #[test]
    fn single_pair_degenerates() {
        let seq = validate([(4, 7)]).unwrap();
        let d = cable_data(&seq);
        assert_eq!(d.lambda, vec![big(7)]);
        assert_eq!(d.bprime, vec![big(7)]);
        assert_eq!(d.delta, vec![big(9)]); // (4-1)(7-1)/2
        assert_eq!(d.mu, big(18)); // (p-1)(q-1)
        assert_eq!(reduction_count(&seq), big(0));
    }

    #[test]
    fn divide_spec_outermost_first() {
        let seq = validate([(2, 3), (2, 7)]).unwrap();
        assert_eq!(divide_spec(&seq), vec![(big(2), big(9)), (big(2), big(3))]);
        let seq = validate([(2, 3), (3, 11)]).unwrap();
        assert_eq!(divide_spec(&seq), vec![(big(3), big(14)), (big(2), big(3))]);
        let seq = validate([(3, 4)]).unwrap();
        assert_eq!(divide_spec(&seq), vec![(big(3), big(4))]);
    }

    #[test]
    fn reduction_counts() {
        let seq = validate([(2, 3), (2, 7)]).unwrap();
        assert_eq!(reduction_count(&seq), big(2));
        let seq = validate([(2, 3), (2, 7), (2, 29)]).unwrap();
        assert_eq!(reduction_count(&seq), big(6));
    }

    #[test]
    fn lambda_identity_holds() {
        // lambda_k = 2 a_k delta(S_{k-1}) + b'_k, exactly.
        for pairs in [
            vec![(2, 3), (2, 7)],
            vec![(2, 3), (3, 11)],
            vec![(2, 3), (2, 7), (2, 29)],
            vec![(3, 4), (2, 25)],
        ] {
            let seq = validate_big(
                pairs
                    .iter()
                    .map(|&(a, b)| (big(a), big(b)))
                    .collect(),
            )
            .unwrap();
            let d = cable_data(&seq);
            for k in 1..seq.len() {
                let expect = big(2) * &seq.pairs()[k].0 * &d.delta[k - 1] + &d.bprime[k];
                assert_eq!(d.lambda[k], expect, "pairs {pairs:?} stage {k}");
            }
        }
    }
}
