//! Exact argmin of the unrelated-machines potential.
//!
//! For candidate machine `i`, `Phi(i) = sum_k alpha_k S_k(i)^(q_k/r_k)` with
//! `S_k(i) = sum_machines L^r_k` after placing the job on `i`. With integer
//! `r_k` and `q_k`, `S_k^q_k` is rational and only its `r_k`-th root is not.
//! Roots are enclosed in rational intervals of width `2^-bits` (relative to
//! the denominator) and the precision doubles until the comparison is
//! decided. Candidates with identical multisets of `(r, q, S)` terms are exact
//! ties, as are candidates whose enclosures are both exact and equal.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JobLoad, LoadMatrix, Norm, NormSpec};

/// Highest root precision tried before a comparison is reported undecided.
pub const MAX_PRECISION_BITS: u32 = 4096;
const START_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactArgmin {
    /// Lowest-index minimiser among eligible machines.
    pub machine: Option<usize>,
    /// False when some comparison stayed undecided at [`MAX_PRECISION_BITS`].
    pub decided: bool,
    pub comparisons: usize,
    /// Highest precision that was needed.
    pub max_bits: u32,
}

struct Term {
    r: u32,
    q: u32,
    sum: BigRational,
}

struct Candidate {
    machine: usize,
    terms: Vec<Term>,
}

fn integer(x: f64) -> Result<u32> {
    if x.fract() == 0.0 && x >= 1.0 && x <= u32::MAX as f64 {
        Ok(x as u32)
    } else {
        Err(Error::NonIntegerExponent(x))
    }
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite load")
}

/// Enclosure `[lo, hi]` of `x^(1/r)` for `x >= 0`, with `lo == hi` when exact.
fn root_interval(x: &BigRational, r: u32, bits: u32) -> (BigRational, BigRational) {
    if r == 1 || x.is_zero() {
        return (x.clone(), x.clone());
    }
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    // x^(1/r) = (n d^(r-1) 2^(bits r))^(1/r) / (d 2^bits)
    let y: BigUint = (n * Pow::pow(d, r - 1)) << (bits as usize * r as usize);
    let a = y.nth_root(r);
    let scale = BigInt::from(d.clone()) << bits as usize;
    let lo = BigRational::new(BigInt::from(a.clone()), scale.clone());
    if Pow::pow(&a, r) == y {
        (lo.clone(), lo)
    } else {
        (lo, BigRational::new(BigInt::from(a + 1u32), scale))
    }
}

impl Candidate {
    fn interval(&self, bits: u32) -> (BigRational, BigRational, bool) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        let mut exact = true;
        for t in &self.terms {
            // alpha = (3q)^-q
            let alpha = BigRational::new(BigInt::one(), Pow::pow(BigInt::from(3 * t.q), t.q));
            let powered: BigRational = Pow::pow(&t.sum, t.q);
            let (l, h) = root_interval(&powered, t.r, bits);
            exact &= l == h;
            lo += &alpha * l;
            hi += &alpha * h;
        }
        (lo, hi, exact)
    }

    fn same_terms(&self, other: &Candidate) -> bool {
        let key = |c: &Candidate| {
            let mut v: Vec<(u32, u32, BigRational)> =
                c.terms.iter().map(|t| (t.r, t.q, t.sum.clone())).collect();
            v.sort();
            v
        };
        key(self) == key(other)
    }
}

enum Order {
    Less,
    NotLess,
    Undecided,
}

/// Whether `a` is strictly below `b`, and the precision needed to decide it.
fn compare(a: &Candidate, b: &Candidate) -> (Order, u32) {
    if a.same_terms(b) {
        return (Order::NotLess, 0);
    }
    let mut bits = START_BITS;
    loop {
        let (alo, ahi, aex) = a.interval(bits);
        let (blo, bhi, bex) = b.interval(bits);
        if ahi < blo {
            return (Order::Less, bits);
        }
        if alo >= bhi || (aex && bex) {
            return (Order::NotLess, bits);
        }
        if bits >= MAX_PRECISION_BITS {
            return (Order::Undecided, bits);
        }
        bits *= 2;
    }
}

/// Exact argmin of the potential over eligible machines for `job` given
/// current (unnormalised) `loads`, with ties to the lowest index. Requires
/// integer exponents and `d` a power of two so every `q_k` is an integer.
pub fn exact_potential_argmin(
    loads: &LoadMatrix,
    job: &JobLoad,
    spec: &NormSpec,
) -> Result<ExactArgmin> {
    let (m, d) = (loads.machines(), loads.dims());
    if spec.dims() != d || job.dims() != d {
        return Err(Error::BadParams("dimension mismatch".into()));
    }
    if !d.is_power_of_two() {
        return Err(Error::NonIntegerExponent((d as f64).log2()));
    }
    let log_d = d.trailing_zeros();
    let r: Vec<u32> = spec
        .norms
        .iter()
        .map(|n| match n {
            Norm::Lr(r) => integer(*r),
            Norm::Makespan => integer(NormSpec::max_exponent(m)),
        })
        .collect::<Result<_>>()?;
    let base: Vec<Vec<BigRational>> = (0..m)
        .map(|i| loads.row(i).iter().map(|&x| rational(x)).collect())
        .collect();
    let candidates: Vec<Candidate> = job
        .eligible_machines(m)
        .into_iter()
        .map(|i| {
            let row = job.row(i).expect("eligible");
            let terms = (0..d)
                .map(|k| {
                    let sum = (0..m).fold(BigRational::zero(), |acc, h| {
                        let mut x = base[h][k].clone();
                        if h == i {
                            x += rational(row[k]);
                        }
                        acc + Pow::pow(&x, r[k])
                    });
                    debug_assert!(!sum.is_negative());
                    Term {
                        r: r[k],
                        q: r[k] + log_d,
                        sum,
                    }
                })
                .collect();
            Candidate { machine: i, terms }
        })
        .collect();
    let mut best: Option<&Candidate> = None;
    let mut decided = true;
    let mut comparisons = 0;
    let mut max_bits = 0;
    for c in &candidates {
        let Some(b) = best else {
            best = Some(c);
            continue;
        };
        comparisons += 1;
        let (order, bits) = compare(c, b);
        max_bits = max_bits.max(bits);
        match order {
            Order::Less => best = Some(c),
            Order::NotLess => {}
            Order::Undecided => decided = false,
        }
    }
    Ok(ExactArgmin {
        machine: best.map(|c| c.machine),
        decided,
        comparisons,
        max_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Entry;

    #[test]
    fn single_machine() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 1, 1).unwrap();
        let a = exact_potential_argmin(
            &LoadMatrix::zeros(1, 1),
            &JobLoad::Identical(vec![3.0]),
            &spec,
        )
        .unwrap();
        assert_eq!(a.machine, Some(0));
        assert_eq!(a.comparisons, 0);
    }

    #[test]
    fn smaller_increase_wins() {
        let spec = NormSpec::uniform(Norm::Lr(1.0), 1, 2).unwrap();
        let job = JobLoad::Unrelated(vec![vec![Entry::Load(1.0)], vec![Entry::Load(2.0)]]);
        let a = exact_potential_argmin(&LoadMatrix::zeros(2, 1), &job, &spec).unwrap();
        assert_eq!(a.machine, Some(0));
        assert!(a.decided);
    }

    #[test]
    fn symmetric_tie_goes_low() {
        let spec = NormSpec::uniform(Norm::Lr(2.0), 2, 4).unwrap();
        let a = exact_potential_argmin(
            &LoadMatrix::zeros(4, 2),
            &JobLoad::Identical(vec![0.5, 1.5]),
            &spec,
        )
        .unwrap();
        assert_eq!(a.machine, Some(0));
        assert!(a.decided);
    }

    #[test]
    fn root_enclosure_brackets() {
        let two = BigRational::from_integer(2.into());
        let (lo, hi) = root_interval(&two, 2, 64);
        assert!(&lo * &lo < two && &hi * &hi > two);
        let four = BigRational::from_integer(4.into());
        let (lo, hi) = root_interval(&four, 2, 64);
        assert_eq!(lo, hi);
        assert_eq!(lo, two);
    }

    #[test]
    fn non_integer_exponent() {
        let spec = NormSpec::uniform(Norm::Lr(1.5), 2, 4).unwrap();
        let r = exact_potential_argmin(
            &LoadMatrix::zeros(4, 2),
            &JobLoad::Identical(vec![1.0, 1.0]),
            &spec,
        );
        assert_eq!(r, Err(Error::NonIntegerExponent(1.5)));
        let spec = NormSpec::uniform(Norm::Lr(1.0), 3, 4).unwrap();
        let r = exact_potential_argmin(
            &LoadMatrix::zeros(4, 3),
            &JobLoad::Identical(vec![1.0; 3]),
            &spec,
        );
        assert!(matches!(r, Err(Error::NonIntegerExponent(_))));
    }
}
