//! Family averages over quadratic twists: the total weight, the empirical
//! one-level density with its random-matrix comparison, and the
//! square-divisor split used to verify the remainder analysis.
//!
//! The family runs over odd square-free `d` with `d/X` inside the support
//! of the averaging weight `w`. Each member contributes a prime sum for
//! the twist by `8d` (see [`crate::explicit`]); the family average of
//! those sums, normalized by the total weight `W(X)`, is the empirical
//! density `D(X)` that converges to the symplectic prediction
//! `integral(phi) - integral(phi_hat on [-1,1])/2`.
//!
//! The square-free condition is also handled in detected form: writing
//! `mu^2(d) = M_Z(d) + R_Z(d)`, where `M_Z` collects square divisors
//! `l <= Z` and `R_Z` the rest, every family sum splits into a main part
//! and a remainder. [`s_split`] exposes the two halves, and [`s_m_dual`]
//! recomputes the main part through Poisson-dualized character sums as an
//! independent cross-check of the machinery.
//!
//! Summation order is fixed: discriminants ascending, blocks of 4096
//! compensated-summed independently, block results combined in ascending
//! order. Worker threads only change who computes a block, never the
//! reduction tree, so reports are bit-identical across thread counts.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::arith::{kronecker, ArithTables};
use crate::coeffs::CoefficientProvider;
use crate::error::{Error, Result};
use crate::explicit::ExplicitFormulaContext;
use crate::poisson::{odd_restricted_dual_with, MellinContour, QuadraticCharacter, WtildeKernel};
use crate::real::Real;
use crate::sum::NeumaierSum;
use crate::testfn::{rmt_prediction, SmoothCompactFunction, TestFunctionPair};

/// Discriminants per reduction block; fixed so the combination order does
/// not depend on the thread count.
const CHUNK: usize = 4096;

/// Verification ceiling for the dual-sum cross-check.
const DUAL_P_MAX: u64 = 1000;

/// Which explicit-formula variant the family average uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Prime-power sum in full, including ramified and higher-power terms.
    Full,
    /// First-order prime sum with the pole and power terms replaced by
    /// their family averages.
    Simplified,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Simplified => "simplified",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "simplified" => Ok(Mode::Simplified),
            other => Err(format!("unknown mode '{other}' (expected full or simplified)")),
        }
    }
}

/// One family of twists: scale, averaging weight, coefficient source, test
/// function, formula mode, and the split parameter `Z`.
pub struct FamilySpec<T: Real> {
    x: T,
    weight: SmoothCompactFunction<T>,
    provider: Arc<dyn CoefficientProvider>,
    pair: TestFunctionPair<T>,
    mode: Mode,
    z: T,
}

impl<T: Real> FamilySpec<T> {
    /// Validates the scale and the support condition `sigma < 2/M` (plain
    /// `sigma < 2` for a degree-1 provider, which the test-function
    /// constructor already enforces). `Z` defaults to `log^3 X`.
    pub fn new(
        x: T,
        weight: SmoothCompactFunction<T>,
        provider: Arc<dyn CoefficientProvider>,
        pair: TestFunctionPair<T>,
        mode: Mode,
    ) -> Result<Self> {
        let xf = x.to_f64();
        if !(xf >= 3.0) {
            return Err(Error::BadScale(xf));
        }
        let degree = provider.degree();
        let sigma = pair.sigma().to_f64();
        if degree > 1 && sigma >= 2.0 / f64::from(degree) {
            return Err(Error::BadSigma(sigma, "(0, 2/M)"));
        }
        let z = x.ln().powi(3);
        Ok(FamilySpec {
            x,
            weight,
            provider,
            pair,
            mode,
            z,
        })
    }

    /// Overrides the split parameter.
    pub fn with_z(mut self, z: T) -> Result<Self> {
        let zf = z.to_f64();
        if !zf.is_finite() || zf <= 0.0 {
            return Err(Error::BadArgument(zf));
        }
        self.z = z;
        Ok(self)
    }

    /// Overrides the formula mode.
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn x(&self) -> T {
        self.x
    }

    pub fn weight(&self) -> &SmoothCompactFunction<T> {
        &self.weight
    }

    pub fn provider(&self) -> &Arc<dyn CoefficientProvider> {
        &self.provider
    }

    pub fn pair(&self) -> &TestFunctionPair<T> {
        &self.pair
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn z(&self) -> T {
        self.z
    }
}

impl<T: Real> std::fmt::Debug for FamilySpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilySpec")
            .field("x", &self.x)
            .field("family", &self.provider.label())
            .field("sigma", &self.pair.sigma())
            .field("mode", &self.mode)
            .field("z", &self.z)
            .finish()
    }
}

/// Everything one pass over the family produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySums<T: Real> {
    /// W(X): sum of w(d/X) over odd square-free d.
    pub weight: T,
    /// Number of odd square-free d in the window.
    pub d_count: u64,
    /// Weighted prime-sum total over the square-free family.
    pub s: T,
    /// The same total with mu^2 replaced by M_Z.
    pub s_m: T,
    /// The same total with mu^2 replaced by R_Z.
    pub s_r: T,
    /// X^{M sigma}: upper end of the contributing prime range.
    pub prime_limit: f64,
}

/// One density experiment, flattened for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub x: f64,
    pub family: &'static str,
    pub degree: u32,
    pub sigma: f64,
    pub mode: Mode,
    pub z: f64,
    pub total_weight: f64,
    pub d_count: u64,
    pub empirical_d: f64,
    pub prediction: f64,
    pub difference: f64,
    pub s_m: f64,
    pub s_r: f64,
    pub prime_limit: f64,
    pub wall_time_s: f64,
}

impl DensityReport {
    pub const CSV_HEADER: &'static str =
        "X,family,M,sigma,mode,Z,W_X,d_count,empirical_D,prediction,diff,prime_limit,wall_time_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.x,
            self.family,
            self.degree,
            self.sigma,
            self.mode,
            self.z,
            self.total_weight,
            self.d_count,
            self.empirical_d,
            self.prediction,
            self.difference,
            self.prime_limit,
            self.wall_time_s
        )
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "X": self.x,
            "family": self.family,
            "M": self.degree,
            "sigma": self.sigma,
            "mode": self.mode.as_str(),
            "Z": self.z,
            "W_X": self.total_weight,
            "d_count": self.d_count,
            "empirical_D": self.empirical_d,
            "prediction": self.prediction,
            "diff": self.difference,
            "prime_limit": self.prime_limit,
            "wall_time_s": self.wall_time_s,
        })
    }
}

/// W(X): the weight mass of the family, no prime sums attached.
pub fn total_weight<T: Real>(spec: &FamilySpec<T>, tables: &Arc<ArithTables>) -> Result<T> {
    let raw = family_pass(spec, tables, None)?;
    Ok(raw.weight)
}

/// One full pass over the family: weight, membership count, and the three
/// prime-sum totals (square-free filtered, M_Z part, R_Z part).
pub fn family_sums<T: Real>(
    spec: &FamilySpec<T>,
    tables: &Arc<ArithTables>,
) -> Result<FamilySums<T>> {
    let ctx = ExplicitFormulaContext::new(
        spec.x,
        spec.provider.clone(),
        spec.pair.clone(),
        tables.clone(),
    )?;
    let raw = family_pass(spec, tables, Some(&ctx))?;
    let (a, b) = spec.weight.support();
    if raw.count == 0 || raw.weight <= T::zero() {
        return Err(Error::EmptyFamily(a.to_f64(), b.to_f64()));
    }
    Ok(FamilySums {
        weight: raw.weight,
        d_count: raw.count,
        s: raw.s,
        s_m: raw.s_m,
        s_r: raw.s_r,
        prime_limit: ctx.support_bound(),
    })
}

/// The empirical one-level density of the family, with the prediction and
/// the split diagnostics, timed.
pub fn density<T: Real>(
    spec: &FamilySpec<T>,
    tables: &Arc<ArithTables>,
) -> Result<DensityReport> {
    let start = Instant::now();
    let sums = family_sums(spec, tables)?;
    let averaged = sums.s / sums.weight;
    let empirical = match spec.mode {
        Mode::Simplified => {
            spec.pair.integral_phi()
                - spec.pair.integral_phi_hat_full() * T::from_f64(0.5)
                - averaged
        }
        Mode::Full => averaged,
    };
    let prediction = rmt_prediction(&spec.pair);
    Ok(DensityReport {
        x: spec.x.to_f64(),
        family: spec.provider.label(),
        degree: spec.provider.degree(),
        sigma: spec.pair.sigma().to_f64(),
        mode: spec.mode,
        z: spec.z.to_f64(),
        total_weight: sums.weight.to_f64(),
        d_count: sums.d_count,
        empirical_d: empirical.to_f64(),
        prediction: prediction.to_f64(),
        difference: (empirical - prediction).to_f64(),
        s_m: sums.s_m.to_f64(),
        s_r: sums.s_r.to_f64(),
        prime_limit: sums.prime_limit,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// The (sM, sR) decomposition of the family prime sum.
pub fn s_split<T: Real>(spec: &FamilySpec<T>, tables: &Arc<ArithTables>) -> Result<(T, T)> {
    let sums = family_sums(spec, tables)?;
    Ok((sums.s_m, sums.s_r))
}

struct RawSums<T: Real> {
    weight: T,
    count: u64,
    s: T,
    s_m: T,
    s_r: T,
}

struct ChunkSums<T: Real> {
    weight: T,
    count: u64,
    s: T,
    s_m: T,
    s_r: T,
}

fn family_pass<T: Real>(
    spec: &FamilySpec<T>,
    tables: &Arc<ArithTables>,
    ctx: Option<&ExplicitFormulaContext<T>>,
) -> Result<RawSums<T>> {
    let (a, b) = spec.weight.support();
    let xf = spec.x.to_f64();
    let hi_f = b.to_f64() * xf;
    let required = hi_f.ceil() as u64;
    if tables.limit() < required {
        return Err(Error::SieveRange {
            limit: tables.limit(),
            required,
        });
    }
    let mut lo = (a.to_f64() * xf).ceil().max(1.0) as u64;
    if lo % 2 == 0 {
        lo += 1;
    }
    let hi = hi_f.floor() as u64;
    let ds: Vec<u64> = (lo..=hi).step_by(2).collect();
    let zf = spec.z.to_f64();

    let chunks: Result<Vec<ChunkSums<T>>> = ds
        .par_chunks(CHUNK)
        .map(|block| {
            let mut weight = NeumaierSum::new();
            let mut count = 0u64;
            let mut s = NeumaierSum::new();
            let mut s_m = NeumaierSum::new();
            let mut s_r = NeumaierSum::new();
            for &d in block {
                let wd = spec.weight.evaluate(T::from_u64(d) / spec.x);
                let (mz, rz) = tables.mz_rz(d, zf)?;
                let square_free = mz + rz == 1;
                if square_free {
                    weight.add(wd);
                    count += 1;
                }
                if let Some(ctx) = ctx {
                    if mz != 0 || rz != 0 {
                        let k = twisted_kernel(ctx, tables, d, spec.mode);
                        let wk = wd * k;
                        if square_free {
                            s.add(wk);
                        }
                        if mz != 0 {
                            s_m.add(T::from_f64(mz as f64) * wk);
                        }
                        if rz != 0 {
                            s_r.add(T::from_f64(rz as f64) * wk);
                        }
                    }
                }
            }
            Ok(ChunkSums {
                weight: weight.value(),
                count,
                s: s.value(),
                s_m: s_m.value(),
                s_r: s_r.value(),
            })
        })
        .collect();

    let mut weight = NeumaierSum::new();
    let mut count = 0u64;
    let mut s = NeumaierSum::new();
    let mut s_m = NeumaierSum::new();
    let mut s_r = NeumaierSum::new();
    for chunk in chunks? {
        weight.add(chunk.weight);
        count += chunk.count;
        s.add(chunk.s);
        s_m.add(chunk.s_m);
        s_r.add(chunk.s_r);
    }
    Ok(RawSums {
        weight: weight.value(),
        count,
        s: s.value(),
        s_m: s_m.value(),
        s_r: s_r.value(),
    })
}

/// The per-twist prime sum, valid for every odd positive `d`.
///
/// Simplified mode reproduces `s1` bit for bit; full mode reproduces
/// `integral(phi) - s_full`'s complement likewise. Unlike the public
/// entry points this accepts non-square-free `d`, which the split sums
/// need whenever `M_Z` and `R_Z` are individually nonzero.
fn twisted_kernel<T: Real>(
    ctx: &ExplicitFormulaContext<T>,
    tables: &ArithTables,
    d: u64,
    mode: Mode,
) -> T {
    let chars = CharTable::for_twist(d, ctx.primes().len(), tables);
    let eight_d = 8 * d as i64;
    match mode {
        Mode::Simplified => {
            let mut acc = NeumaierSum::new();
            for (&p, &term) in ctx.primes().iter().zip(ctx.terms()) {
                match chars.chi(p, eight_d) {
                    1 => acc.add(term),
                    -1 => acc.add(-term),
                    _ => {}
                }
            }
            ctx.prefactor() * acc.value()
        }
        Mode::Full => {
            let mut acc = NeumaierSum::new();
            for (m, p, term) in ctx.power_terms() {
                let sign = if m == p {
                    chars.chi(p, eight_d)
                } else {
                    kronecker(eight_d, m as i64)
                        .expect("prime powers are positive, so the symbol is defined")
                };
                match sign {
                    1 => acc.add(term),
                    -1 => acc.add(-term),
                    _ => {}
                }
            }
            ctx.pair().integral_phi() - ctx.prefactor() * acc.value()
        }
    }
}

/// Character evaluation strategy for one twist.
///
/// Long prime lists amortize a per-twist Jacobi table: with the table,
/// `(8d/p)` costs one reduction `p mod d`, one lookup, and the two
/// reciprocity sign twists, instead of a full binary Jacobi loop.
enum CharTable {
    Direct,
    Table { d: u64, symbols: Vec<i8> },
}

impl CharTable {
    fn for_twist(d: u64, prime_count: usize, tables: &ArithTables) -> Self {
        // The table costs O(d) to build and saves tens of nanoseconds per
        // prime, so it pays off once the prime list is a fair fraction of d.
        if prime_count as u64 * 20 >= d {
            CharTable::Table {
                d,
                symbols: jacobi_row(d, tables),
            }
        } else {
            CharTable::Direct
        }
    }

    /// kronecker(8d, p) for an odd prime p.
    #[inline]
    fn chi(&self, p: u64, eight_d: i64) -> i8 {
        match self {
            CharTable::Direct => {
                kronecker(eight_d, p as i64).expect("odd prime moduli always have a symbol")
            }
            CharTable::Table { d, symbols } => {
                // (8d/p) = (2/p)(d/p), and (d/p) flips against (p/d) only
                // when both are 3 mod 4.
                let two = if p & 7 == 1 || p & 7 == 7 { 1i8 } else { -1 };
                let mut s = symbols[(p % d) as usize];
                if d & 3 == 3 && p & 3 == 3 {
                    s = -s;
                }
                two * s
            }
        }
    }
}

/// Jacobi symbols `(r/d)` for all `r` in `[0, d)`, one multiplicative pass
/// over the smallest-prime-factor table.
fn jacobi_row(d: u64, tables: &ArithTables) -> Vec<i8> {
    if d == 1 {
        return vec![1];
    }
    let n = d as usize;
    let mut symbols = vec![0i8; n];
    symbols[1] = 1;
    for r in 2..n {
        let p = tables.spf(r as u64) as usize;
        symbols[r] = if p == r {
            kronecker(r as i64, d as i64).expect("both arguments are positive")
        } else {
            symbols[p] * symbols[r / p]
        };
    }
    symbols
}

/// The main split part restricted to primes `p <= p_max`, computed the
/// direct way: for each odd `d` in the window, `M_Z(d) w(d/X)` times the
/// truncated prime sum for the twist by `8d`.
pub fn s_m_direct_restricted<T: Real>(
    spec: &FamilySpec<T>,
    tables: &Arc<ArithTables>,
    p_max: u64,
) -> Result<T> {
    if p_max > DUAL_P_MAX {
        return Err(Error::DualRange(p_max, DUAL_P_MAX));
    }
    let ctx = ExplicitFormulaContext::new(
        spec.x,
        spec.provider.clone(),
        spec.pair.clone(),
        tables.clone(),
    )?;
    let (a, b) = spec.weight.support();
    let xf = spec.x.to_f64();
    let hi_f = b.to_f64() * xf;
    if tables.limit() < hi_f.ceil() as u64 {
        return Err(Error::SieveRange {
            limit: tables.limit(),
            required: hi_f.ceil() as u64,
        });
    }
    let mut lo = (a.to_f64() * xf).ceil().max(1.0) as u64;
    if lo % 2 == 0 {
        lo += 1;
    }
    let zf = spec.z.to_f64();
    let mut acc = NeumaierSum::new();
    let mut d = lo;
    while (d as f64) <= hi_f {
        let (mz, _) = tables.mz_rz(d, zf)?;
        if mz != 0 {
            let wd = spec.weight.evaluate(T::from_u64(d) / spec.x);
            let inner = ctx.e_partial(d, p_max as f64)?;
            acc.add(T::from_f64(mz as f64) * wd * inner);
        }
        d += 2;
    }
    Ok(ctx.prefactor() * acc.value())
}

/// The same restricted main part assembled from Poisson-dualized character
/// sums: for each prime `p <= p_max` and each square-free odd `l <= Z`
/// coprime to `p`, the inner sum over `d` collapses to
/// [`odd_restricted_dual_with`] at `alpha = l`.
///
/// This is a verification path; `p_max` is capped at 1000.
pub fn s_m_dual<T: Real>(
    spec: &FamilySpec<T>,
    tables: &Arc<ArithTables>,
    contour: &MellinContour<T>,
    p_max: u64,
) -> Result<T> {
    if p_max > DUAL_P_MAX {
        return Err(Error::DualRange(p_max, DUAL_P_MAX));
    }
    let ctx = ExplicitFormulaContext::new(
        spec.x,
        spec.provider.clone(),
        spec.pair.clone(),
        tables.clone(),
    )?;
    let zf = spec.z.to_f64();
    let (_, b) = spec.weight.support();
    let window_cap = b.to_f64() * spec.x.to_f64();
    let mut kernels: [Option<WtildeKernel<T>>; 2] = [None, None];
    let mut total = NeumaierSum::new();
    for (&p, &term) in ctx.primes().iter().zip(ctx.terms()) {
        if p > p_max {
            break;
        }
        let chi = QuadraticCharacter::new(p)?;
        let parity = usize::from(chi.parity());
        if kernels[parity].is_none() {
            kernels[parity] = Some(WtildeKernel::new(&spec.weight, chi.parity(), contour)?);
        }
        let kernel = kernels[parity].as_ref().expect("kernel was just built");
        let two_sym = T::from_f64(f64::from(chi.eval(2)));
        let mut inner = NeumaierSum::new();
        let mut l = 1u64;
        while (l as f64) <= zf {
            let lf = l as f64;
            // l^2 must divide some d <= bX for the term to exist at all.
            if lf * lf > window_cap {
                break;
            }
            if l % p != 0 {
                let mu = tables.moebius(l)?;
                if mu != 0 {
                    let value = odd_restricted_dual_with(&chi, spec.x, l, kernel)?;
                    inner.add(T::from_f64(f64::from(mu)) * value);
                }
            }
            l += 2;
        }
        total.add(term * two_sym * inner.value());
    }
    Ok(ctx.prefactor() * total.value())
}
