//! The prime-sum side of the explicit formula, per twist.
//!
//! An [`ExplicitFormulaContext`] freezes the scale X, a coefficient
//! provider, a test-function pair, and the sieve, and precomputes the
//! character-free factor of every prime term once: everything that varies
//! with the twist d is the Kronecker symbol. Three sums are exposed:
//!
//! * [`s1`](ExplicitFormulaContext::s1), the first-order prime sum
//!   (2/(M·log X))·Σ_p a(p)·(log p/√p)·χ_{8d}(p)·φ̂(log p/(M·log X)),
//! * [`s_full`](ExplicitFormulaContext::s_full), ∫φ minus the full
//!   prime-power sum, every m = p^k inside the transform's support,
//! * [`e_partial`](ExplicitFormulaContext::e_partial), the partial sums
//!   E(V) of the s1 kernel for arbitrary odd moduli, no prefactor.
//!
//! Truncation is decided entirely by supp φ̂: only m < X^{M·σ} can
//! contribute, so enlarging the sieve never changes a value. Summation is
//! ascending in the summation index with compensated accumulation, which
//! makes every result reproducible bit for bit.

use std::sync::Arc;

use crate::arith::{is_valid_twist, kronecker, ArithTables};
use crate::coeffs::CoefficientProvider;
use crate::sum::NeumaierSum;
use crate::testfn::TestFunctionPair;
use crate::{Error, Real, Result};

/// A prime power m = p^k with its twist-independent term factor.
#[derive(Debug, Clone, Copy)]
struct PowerTerm<T> {
    m: u64,
    p: u64,
    term: T,
}

/// Frozen inputs and precomputed prime terms for one (X, π, φ) choice.
pub struct ExplicitFormulaContext<T: Real> {
    x: T,
    pair: TestFunctionPair<T>,
    provider: Arc<dyn CoefficientProvider>,
    tables: Arc<ArithTables>,
    /// X^{M·σ}; primes at or above this bound cannot contribute.
    support_bound: f64,
    /// 2/(M·log X).
    prefactor: T,
    /// Odd primes below the support bound, ascending. p = 2 is omitted:
    /// χ_{8d}(2) = 0 for every twist.
    primes: Vec<u64>,
    /// a(p)·(log p/√p)·φ̂(log p/(M·log X)), aligned with `primes`.
    terms: Vec<T>,
    /// All m = p^k < X^{M·σ} with k ≥ 1, ascending in m, each carrying
    /// Λ(m)·a(p^k)·m^{−1/2}·φ̂(log m/(M·log X)).
    power_terms: Vec<PowerTerm<T>>,
}

impl<T: Real> ExplicitFormulaContext<T> {
    /// Precomputes every twist-independent factor.
    ///
    /// Fails if X < 3, if the sieve does not reach X^{M·σ}, or if the
    /// provider's coefficient table ends before that bound.
    pub fn new(
        x: T,
        provider: Arc<dyn CoefficientProvider>,
        pair: TestFunctionPair<T>,
        tables: Arc<ArithTables>,
    ) -> Result<Self> {
        let xf = x.to_f64();
        if !(xf >= 3.0) {
            return Err(Error::BadScale(xf));
        }
        let degree = provider.degree();
        let support_bound = xf.powf(degree as f64 * pair.sigma().to_f64());
        let required = support_bound.ceil() as u64;
        if tables.limit() < required {
            return Err(Error::SieveRange {
                limit: tables.limit(),
                required,
            });
        }
        if let Some(max_prime) = provider.max_prime() {
            if max_prime < required {
                return Err(Error::CoefficientRange(required, max_prime));
            }
        }

        let m_log_x = T::from_u64(degree as u64) * x.ln();
        let prefactor = T::from_f64(2.0) / m_log_x;

        let odd_primes = tables.primes_below(support_bound);
        let mut primes = Vec::new();
        let mut terms = Vec::new();
        let mut power_terms = Vec::new();
        for &p in odd_primes {
            if p == 2 {
                continue;
            }
            let log_p = T::from_u64(p).ln();
            let a1 = T::from_f64(provider.coefficient(p, 1)?);
            let u = log_p / m_log_x;
            let term = a1 * (log_p / T::from_u64(p).sqrt()) * pair.phi_hat(u);
            primes.push(p);
            terms.push(term);
            power_terms.push(PowerTerm { m: p, p, term });

            let mut k = 2u32;
            let mut m = p * p;
            while (m as f64) < support_bound {
                let ak = T::from_f64(provider.coefficient(p, k)?);
                let log_m = T::from_u64(m).ln();
                let power = ak * (log_p / T::from_u64(m).sqrt()) * pair.phi_hat(log_m / m_log_x);
                power_terms.push(PowerTerm { m, p, term: power });
                k += 1;
                match m.checked_mul(p) {
                    Some(next) if (next as f64) < support_bound => m = next,
                    _ => break,
                }
            }
        }
        power_terms.sort_by_key(|t| t.m);

        Ok(ExplicitFormulaContext {
            x,
            pair,
            provider,
            tables,
            support_bound,
            prefactor,
            primes,
            terms,
            power_terms,
        })
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn pair(&self) -> &TestFunctionPair<T> {
        &self.pair
    }

    pub fn provider(&self) -> &Arc<dyn CoefficientProvider> {
        &self.provider
    }

    pub fn tables(&self) -> &Arc<ArithTables> {
        &self.tables
    }

    /// X^{M·σ}.
    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    /// 2/(M·log X).
    pub fn prefactor(&self) -> T {
        self.prefactor
    }

    /// Odd primes below the support bound, ascending.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Twist-independent first-order terms, aligned with [`primes`](Self::primes).
    pub fn terms(&self) -> &[T] {
        &self.terms
    }

    fn validate_twist(&self, d: u64) -> Result<()> {
        if is_valid_twist(d) {
            Ok(())
        } else {
            Err(Error::BadTwist(d))
        }
    }

    /// The first-order prime sum for the twist by 8d.
    pub fn s1(&self, d: u64) -> Result<T> {
        self.validate_twist(d)?;
        let eight_d = 8 * d as i64;
        let mut acc = NeumaierSum::new();
        for (&p, &term) in self.primes.iter().zip(&self.terms) {
            match kronecker(eight_d, p as i64)? {
                1 => acc.add(term),
                -1 => acc.add(-term),
                _ => {}
            }
        }
        Ok(self.prefactor * acc.value())
    }

    /// ∫φ minus the full prime-power sum for the twist by 8d.
    pub fn s_full(&self, d: u64) -> Result<T> {
        self.validate_twist(d)?;
        let eight_d = 8 * d as i64;
        let mut acc = NeumaierSum::new();
        for pt in &self.power_terms {
            match kronecker(eight_d, pt.m as i64)? {
                1 => acc.add(pt.term),
                -1 => acc.add(-pt.term),
                _ => {}
            }
        }
        Ok(self.pair.integral_phi() - self.prefactor * acc.value())
    }

    /// E(V): the s1 kernel summed over p ≤ V against χ_{8q}, without the
    /// 2/(M·log X) prefactor. q must be odd and positive but need not be
    /// square-free; primes dividing q drop out through the character.
    pub fn e_partial(&self, q: u64, v: f64) -> Result<T> {
        if q == 0 || q % 2 == 0 {
            return Err(Error::BadModulus(q));
        }
        if v > self.tables.limit() as f64 {
            return Err(Error::SieveRange {
                limit: self.tables.limit(),
                required: v.ceil() as u64,
            });
        }
        let eight_q = 8 * q as i64;
        let mut acc = NeumaierSum::new();
        for (&p, &term) in self.primes.iter().zip(&self.terms) {
            if (p as f64) > v {
                break;
            }
            match kronecker(eight_q, p as i64)? {
                1 => acc.add(term),
                -1 => acc.add(-term),
                _ => {}
            }
        }
        Ok(acc.value())
    }

    /// Power terms in ascending m, for reductions that need the full sum.
    pub(crate) fn power_terms(&self) -> impl Iterator<Item = (u64, u64, T)> + '_ {
        self.power_terms.iter().map(|t| (t.m, t.p, t.term))
    }
}

impl<T: Real> std::fmt::Debug for ExplicitFormulaContext<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExplicitFormulaContext")
            .field("x", &self.x)
            .field("provider", &self.provider.label())
            .field("sigma", &self.pair.sigma())
            .field("support_bound", &self.support_bound)
            .field("primes", &self.primes.len())
            .finish()
    }
}
