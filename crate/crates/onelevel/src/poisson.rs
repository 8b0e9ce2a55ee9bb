//! Contour kernels and Poisson-dualized character sums.
//!
//! For an odd prime `q` and a smooth weight `W` supported in `[a, b]` with
//! `0 < a < b`, the twisted sum over all integers satisfies
//!
//! ```text
//! sum_n (n/q) W(n/X)  =  (X/sqrt(q)) sum_{m>=1} (m/q) Wtilde_a(mX/q)
//! ```
//!
//! where `a` records the character parity and `Wtilde_b` is the inverse
//! Mellin integral of `MW(1-u)` against the archimedean factor
//! `pi^{-(2u-1)/2} Gamma((u+b)/2) / Gamma((1-u+b)/2)` along a vertical line
//! `Re u = c`. The dual side converges fast because `Wtilde_b(x)` decays
//! faster than any power of `x`, so a handful of `m` terms reproduce a
//! direct sum over thousands of `n`.
//!
//! [`WtildeKernel`] freezes the contour samples for one `(W, b, contour)`
//! choice; evaluating the kernel at a point then costs a single pass over
//! the stored nodes. Every evaluation certifies two bounds against 1e-9:
//! the trapezoid truncation tail (mass of the outermost tenth of the
//! contour, scaled by `x^{-c}`) and the imaginary residual left over after
//! conjugate pairing. A contour too short for the requested point fails
//! loudly instead of returning a polluted value.
//!
//! [`odd_restricted_dual`] builds the sum over odd `d` of `(d/p) W(d a^2/X)`
//! out of two dual sums at scales `X/a^2` and `X/(2a^2)`, which is the form
//! the moment computation actually consumes.

use std::collections::VecDeque;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::gamma::ln_gamma;
use crate::quad::{gauss_kronrod, k15_rule};
use crate::real::Real;
use crate::sum::NeumaierSum;
use crate::testfn::SmoothCompactFunction;

/// Absolute tolerance for the adaptive Mellin quadrature.
const MELLIN_TOL: f64 = 1e-12;

/// Internal certification threshold for kernel evaluations: contour
/// truncation tail and imaginary residual must both stay below this.
const CERT_BOUND: f64 = 1e-9;

/// A dual-sum term counts toward truncation once it drops below this
/// fraction of the largest term seen so far.
const TERM_FLOOR: f64 = 1e-12;

/// Secondary absolute cutoff: a term whose contribution to the prefactored
/// sum is below this also counts toward truncation. Needed when the scale
/// is so large that every dual term is rounding noise and the relative
/// floor can never trigger.
const CONTRIB_FLOOR: f64 = 1e-13;

/// Hard cap on dual-sum terms; reaching it means the decay envelope never
/// certified and the sum is abandoned.
const M_CAP: u64 = 200_000;

/// Vertical line `Re u = c` truncated at `|Im u| <= heightMax` and sampled
/// with a uniform trapezoid of the given step.
///
/// The default is calibrated so that kernel evaluations certify down to
/// `x = 0.1` for the bump weight: tightening the step or raising the height
/// further moves the identity residuals only at the 1e-12 level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MellinContour<T: Real> {
    c: T,
    height_max: T,
    step: T,
}

impl<T: Real> MellinContour<T> {
    /// Validates `1 < c <= 2`, positive step and height, and an integer
    /// step count of at least 100 per half line.
    pub fn new(c: T, height_max: T, step: T) -> Result<Self> {
        let cf = c.to_f64();
        if !cf.is_finite() || cf <= 1.0 || cf > 2.0 {
            return Err(Error::BadContour {
                name: "c",
                value: cf,
                constraint: "1 < c <= 2",
            });
        }
        let sf = step.to_f64();
        if !sf.is_finite() || sf <= 0.0 {
            return Err(Error::BadContour {
                name: "step",
                value: sf,
                constraint: "step > 0",
            });
        }
        let hf = height_max.to_f64();
        if !hf.is_finite() || hf <= 0.0 {
            return Err(Error::BadContour {
                name: "heightMax",
                value: hf,
                constraint: "heightMax > 0",
            });
        }
        let ratio = hf / sf;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::BadContour {
                name: "heightMax/step",
                value: ratio,
                constraint: "an integer number of steps",
            });
        }
        if ratio.round() < 100.0 {
            return Err(Error::BadContour {
                name: "heightMax/step",
                value: ratio,
                constraint: "at least 100 steps",
            });
        }
        Ok(Self {
            c,
            height_max,
            step,
        })
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn height_max(&self) -> T {
        self.height_max
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Number of trapezoid nodes on the closed half line `[0, heightMax]`.
    fn half_nodes(&self) -> usize {
        (self.height_max.to_f64() / self.step.to_f64()).round() as usize + 1
    }
}

impl<T: Real> Default for MellinContour<T> {
    fn default() -> Self {
        Self::new(
            T::from_f64(1.25),
            T::from_f64(900.0),
            T::from_f64(0.05),
        )
        .expect("built-in contour parameters are valid")
    }
}

/// The real primitive character `(./q)` for an odd prime `q`, together with
/// its parity `a` defined by `chi(-1) = (-1)^a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadraticCharacter {
    q: u64,
    parity: u8,
}

impl QuadraticCharacter {
    pub fn new(q: u64) -> Result<Self> {
        if !is_odd_prime(q) {
            return Err(Error::NotOddPrime(q));
        }
        let parity = if q % 4 == 1 { 0 } else { 1 };
        Ok(Self { q, parity })
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// 0 when `q = 1 mod 4` (even character), 1 when `q = 3 mod 4`.
    pub fn parity(&self) -> u8 {
        self.parity
    }

    /// Legendre symbol `(n/q)` in `{-1, 0, 1}`.
    pub fn eval(&self, n: u64) -> i8 {
        crate::arith::kronecker(n as i64, self.q as i64)
            .expect("the symbol is defined for every n once q is a fixed odd prime")
    }
}

fn is_odd_prime(q: u64) -> bool {
    if q < 3 || q % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Mellin transform `int_0^inf W(t) t^{s-1} dt`, reduced to the support of
/// `W` and evaluated by adaptive quadrature to absolute tolerance 1e-12.
///
/// The transform of a smooth compactly supported weight decays in `|Im s|`
/// faster than any polynomial; tall arguments are legitimate inputs and
/// come back tiny rather than failing.
pub fn mellin<T: Real>(w: &SmoothCompactFunction<T>, s: Complex<T>) -> Result<Complex<T>> {
    let (a, b) = w.support();
    let exponent = s - Complex::new(T::one(), T::zero());
    gauss_kronrod(
        |t: T| (exponent * t.ln()).exp() * w.evaluate(t),
        a,
        b,
        T::from_f64(MELLIN_TOL),
    )
}

/// log sin(pi z), stable for large `|Im z|`.
///
/// Off the strip `|Im z| <= 1` the naive form overflows, so the sine is
/// split into its dominant exponential and a small correction. The branch
/// of the result is immaterial here because callers exponentiate a sum of
/// logarithms.
fn ln_sin_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let one = T::one();
    if z.im.abs() <= one {
        return (z * pi).sin().ln();
    }
    let i = Complex::new(T::zero(), one);
    let iz_pi = i * z * pi;
    let two = T::from_f64(2.0);
    let unit = Complex::new(one, T::zero());
    let half_pi = pi / two;
    if z.im < T::zero() {
        iz_pi + (unit - (-(iz_pi * two)).exp()).ln() - Complex::new(T::LN_2(), half_pi)
    } else {
        -iz_pi + (unit - (iz_pi * two).exp()).ln() - Complex::new(T::LN_2(), -half_pi)
    }
}

/// The archimedean factor `pi^{-(2u-1)/2} Gamma((u+b)/2) / Gamma((1-u+b)/2)`
/// at a contour point `u`, via logarithms.
///
/// The denominator argument has negative real part on our contours, where
/// the Lanczos approximation is invalid, so the ratio is rewritten by
/// reflection: `1/Gamma((1-u+b)/2) = Gamma((1+u-b)/2) sin(pi(1-u+b)/2) / pi`.
/// Both remaining Gamma arguments then have real part > 1/2 for
/// `c in (1, 2]` and `b in {0, 1}`.
fn arch_factor<T: Real>(u: Complex<T>, parity: u8) -> Complex<T> {
    let half = T::from_f64(0.5);
    let b = T::from_u64(u64::from(parity));
    let ln_pi = T::PI().ln();
    let z_num = (u + b) * half;
    let z_ref = (u - b + T::one()) * half;
    let z_sin = (-u + b + T::one()) * half;
    let log_total = ln_gamma(z_num) + ln_gamma(z_ref) + ln_sin_pi(z_sin)
        - Complex::new(ln_pi, T::zero())
        - (u - half) * ln_pi;
    log_total.exp()
}

/// Precomputed contour samples of `MW(1-u)` times the archimedean factor
/// for one weight, parity, and contour.
///
/// Conjugate symmetry of the integrand along the line cuts storage to the
/// upper half: node `j` holds the coefficient at `u = c + i j step` with
/// its trapezoid weight folded in (half weight at the truncation end).
/// `eval` then sums `2 Re(koef_j x^{-i j step})` against the real part of
/// `x^{-c}`, which keeps the result real by construction; what remains of
/// the imaginary part sits entirely in the `j = 0` node and is checked
/// against the certification bound.
pub struct WtildeKernel<T: Real> {
    c: T,
    step: T,
    parity: u8,
    koef: Vec<Complex<T>>,
    tail_weight: T,
}

impl<T: Real> WtildeKernel<T> {
    /// Samples the contour integrand for `w` at every node of `contour`.
    ///
    /// The Mellin values along the whole line come from one fixed composite
    /// Kronrod grid in `v = log t`: with `g(v) = w(e^v) e^{(1-c)v}` the
    /// transform is `MW(1-c-it) = int g(v) e^{-itv} dv`, so each contour
    /// node is a discrete oscillatory sum over the same grid, updated by a
    /// phase rotation per step instead of a fresh quadrature.
    pub fn new(
        w: &SmoothCompactFunction<T>,
        parity: u8,
        contour: &MellinContour<T>,
    ) -> Result<Self> {
        if parity > 1 {
            return Err(Error::BadContour {
                name: "parity",
                value: f64::from(parity),
                constraint: "b in {0, 1}",
            });
        }
        let (a, b) = w.support();
        let va = a.ln();
        let vb = b.ln();
        let span = vb - va;
        let height = contour.height_max.to_f64();
        // Panel width keeps the fastest phase e^{-i heightMax v} within
        // 1.5 radians per panel, far inside the rule's resolution; the
        // floor of 64 panels resolves the weight itself.
        let panels = ((height * span.to_f64() / 1.5).ceil() as usize).max(64);
        let rule = k15_rule::<T>();
        let mut v_nodes = Vec::with_capacity(panels * 15);
        let mut g_nodes = Vec::with_capacity(panels * 15);
        let one = T::one();
        for panel in 0..panels {
            let lo = va + span * (T::from_usize(panel) / T::from_usize(panels));
            let hi = va + span * (T::from_usize(panel + 1) / T::from_usize(panels));
            let mid = (lo + hi) * T::from_f64(0.5);
            let rad = (hi - lo) * T::from_f64(0.5);
            for &(x, weight) in &rule {
                let v = mid + rad * x;
                let g = w.evaluate(v.exp()) * ((one - contour.c) * v).exp() * weight * rad;
                v_nodes.push(v);
                g_nodes.push(g);
            }
        }

        let half_nodes = contour.half_nodes();
        let mut mw = vec![Complex::new(T::zero(), T::zero()); half_nodes];
        for (&v, &g) in v_nodes.iter().zip(&g_nodes) {
            let rot = Complex::from_polar(one, -(contour.step * v));
            let mut phase = Complex::new(one, T::zero());
            for (j, slot) in mw.iter_mut().enumerate() {
                *slot += phase * g;
                phase *= rot;
                // The rotation is unimodular; renormalize occasionally so
                // the modulus cannot drift over tens of thousands of steps.
                if j % 4096 == 4095 {
                    phase = phase / phase.norm();
                }
            }
        }

        let mut koef = Vec::with_capacity(half_nodes);
        for (j, &mw_j) in mw.iter().enumerate() {
            let t = contour.step * T::from_usize(j);
            let u = Complex::new(contour.c, t);
            let mut k = mw_j * arch_factor(u, parity);
            if j + 1 == half_nodes {
                k = k * T::from_f64(0.5);
            }
            koef.push(k);
        }

        // Mass of the outermost tenth of the contour under the trapezoid
        // measure step/2pi, counting both half lines. Scaled by |x^{-c}|
        // at evaluation time it bounds what the truncated tail could have
        // contributed.
        let tail_start = (0.9 * (half_nodes - 1) as f64).floor() as usize;
        let mut tail = NeumaierSum::new();
        for k in &koef[tail_start..] {
            tail.add(k.norm());
        }
        let two_pi = T::PI() * T::from_f64(2.0);
        let tail_weight = tail.value() * (contour.step / two_pi) * T::from_f64(2.0);

        Ok(Self {
            c: contour.c,
            step: contour.step,
            parity,
            koef,
            tail_weight,
        })
    }

    pub fn parity(&self) -> u8 {
        self.parity
    }

    /// Certified tail mass of the stored contour; multiplied by `x^{-c}`
    /// it bounds the truncation error of any evaluation.
    pub fn tail_weight(&self) -> T {
        self.tail_weight
    }

    /// Evaluates the kernel at `x > 0`.
    ///
    /// Fails with an accuracy error when the contour truncation tail at
    /// this `x` exceeds 1e-9, or when the folded sum leaves an imaginary
    /// residual above the same bound.
    pub fn eval(&self, x: T) -> Result<T> {
        self.eval_checked(x).map(|(value, _)| value)
    }

    /// `eval` plus the measured imaginary residual, for diagnostics.
    fn eval_checked(&self, x: T) -> Result<(T, T)> {
        let xf = x.to_f64();
        if !xf.is_finite() || xf <= 0.0 {
            return Err(Error::BadArgument(xf));
        }
        let amp = x.powf(-self.c);
        let tail = (self.tail_weight * amp).to_f64();
        if tail > CERT_BOUND {
            return Err(Error::Accuracy {
                what: "contour truncation tail",
                achieved: tail,
                required: CERT_BOUND,
            });
        }
        let lx = x.ln();
        let two = T::from_f64(2.0);
        let mut acc = NeumaierSum::new();
        acc.add(self.koef[0].re);
        for (j, k) in self.koef.iter().enumerate().skip(1) {
            let theta = self.step * T::from_usize(j) * lx;
            // 2 Re(koef e^{-i theta}) for the conjugate node pair.
            acc.add(two * (k.re * theta.cos() + k.im * theta.sin()));
        }
        let two_pi = T::PI() * two;
        let scale = amp * self.step / two_pi;
        let value = acc.value() * scale;
        let residual = (self.koef[0].im * scale).abs();
        if residual.to_f64() > CERT_BOUND {
            return Err(Error::Accuracy {
                what: "imaginary residual",
                achieved: residual.to_f64(),
                required: CERT_BOUND,
            });
        }
        Ok((value, residual))
    }
}

impl<T: Real> std::fmt::Debug for WtildeKernel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WtildeKernel")
            .field("c", &self.c)
            .field("step", &self.step)
            .field("parity", &self.parity)
            .field("nodes", &self.koef.len())
            .field("tail_weight", &self.tail_weight)
            .finish()
    }
}

/// One-off kernel evaluation. Building the kernel dominates the cost, so
/// callers with many points should construct a [`WtildeKernel`] once.
pub fn w_tilde<T: Real>(
    w: &SmoothCompactFunction<T>,
    parity: u8,
    x: T,
    contour: &MellinContour<T>,
) -> Result<T> {
    WtildeKernel::new(w, parity, contour)?.eval(x)
}

/// Gauss sum `tau(chi) = sum_{1<=x<=q} chi(x) e(x/q)` for the quadratic
/// character mod an odd prime `q`; equals `i^a sqrt(q)`.
pub fn gauss_sum<T: Real>(q: u64) -> Result<Complex<T>> {
    let chi = QuadraticCharacter::new(q)?;
    let two_pi = T::PI() * T::from_f64(2.0);
    let qt = T::from_u64(q);
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for x in 1..q {
        let sign = chi.eval(x);
        if sign == 0 {
            continue;
        }
        let angle = two_pi * T::from_u64(x) / qt;
        if sign > 0 {
            re.add(angle.cos());
            im.add(angle.sin());
        } else {
            re.add(-angle.cos());
            im.add(-angle.sin());
        }
    }
    Ok(Complex::new(re.value(), im.value()))
}

/// Both sides of the summation identity, plus the number of dual terms the
/// truncation rule kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonSummary<T: Real> {
    pub lhs: T,
    pub rhs: T,
    pub m_terms: u64,
}

/// Checks `sum_n chi(n) W(n/X) = (X/sqrt(q)) sum_m chi(m) Wtilde_a(mX/q)`
/// for the quadratic character mod an odd prime `q`.
///
/// The left side is a finite direct sum (the weight has compact support);
/// the right side truncates once the decay envelope certifies the
/// remaining tail below 1e-9. The two agree to 1e-6 at the default
/// contour.
pub fn poisson_check<T: Real>(
    q: u64,
    w: &SmoothCompactFunction<T>,
    x: T,
    contour: &MellinContour<T>,
) -> Result<PoissonSummary<T>> {
    let chi = QuadraticCharacter::new(q)?;
    let kernel = WtildeKernel::new(w, chi.parity(), contour)?;
    poisson_check_with(&chi, w, x, &kernel)
}

/// [`poisson_check`] against a prebuilt kernel, so sweeps over `q` and `X`
/// of one parity class can reuse the contour samples.
///
/// The kernel parity need not match the character: feeding the wrong
/// parity is how the negative test demonstrates the identity is not an
/// artifact of the plumbing.
pub fn poisson_check_with<T: Real>(
    chi: &QuadraticCharacter,
    w: &SmoothCompactFunction<T>,
    x: T,
    kernel: &WtildeKernel<T>,
) -> Result<PoissonSummary<T>> {
    let xf = x.to_f64();
    if !xf.is_finite() || xf <= 0.0 {
        return Err(Error::BadArgument(xf));
    }
    let lhs = direct_char_sum(chi, w, x);
    let (rhs, m_terms) = dual_char_sum(chi, kernel, x)?;
    Ok(PoissonSummary { lhs, rhs, m_terms })
}

/// Finite direct sum `sum_n chi(n) W(n/X)` over the support of `W`.
fn direct_char_sum<T: Real>(
    chi: &QuadraticCharacter,
    w: &SmoothCompactFunction<T>,
    x: T,
) -> T {
    let (a, b) = w.support();
    let lo = ((a * x).to_f64().floor().max(1.0)) as u64;
    let hi = (b * x).to_f64().ceil() as u64;
    let mut acc = NeumaierSum::new();
    for n in lo..=hi {
        match chi.eval(n) {
            1 => acc.add(w.evaluate(T::from_u64(n) / x)),
            -1 => acc.add(-w.evaluate(T::from_u64(n) / x)),
            _ => {}
        }
    }
    acc.value()
}

/// Dual sum `(scale/sqrt(q)) sum_m chi(m) Wtilde(m scale / q)`, truncated
/// once three consecutive terms fall below 1e-12 of the maximum and the
/// `x^{-4}` envelope fitted to the trailing samples certifies the tail
/// below 1e-9.
fn dual_char_sum<T: Real>(
    chi: &QuadraticCharacter,
    kernel: &WtildeKernel<T>,
    scale: T,
) -> Result<(T, u64)> {
    let qt = T::from_u64(chi.q());
    let prefactor = scale / qt.sqrt();
    let floor = T::from_f64(TERM_FLOOR);
    let two = T::from_f64(2.0);
    let mut acc = NeumaierSum::new();
    let mut max_abs = T::zero();
    let mut consecutive = 0u32;
    let mut trailing: VecDeque<(T, T)> = VecDeque::with_capacity(10);
    let mut m = 0u64;
    loop {
        m += 1;
        if m > M_CAP {
            return Err(Error::Accuracy {
                what: "dual sum truncation",
                achieved: f64::INFINITY,
                required: CERT_BOUND,
            });
        }
        let arg = scale * T::from_u64(m) / qt;
        let value = kernel.eval(arg)?;
        match chi.eval(m) {
            1 => acc.add(value),
            -1 => acc.add(-value),
            _ => {}
        }
        let size = value.abs();
        if size > max_abs {
            max_abs = size;
        }
        // The envelope and the stopping rule only look at arguments past
        // the support, where the kernel genuinely decays.
        if arg < two {
            continue;
        }
        if trailing.len() == 10 {
            trailing.pop_front();
        }
        trailing.push_back((arg, size));
        let negligible = size < floor * max_abs
            || (prefactor.abs() * size).to_f64() < CONTRIB_FLOOR;
        if negligible {
            consecutive += 1;
            if consecutive >= 3 {
                let mut envelope = T::zero();
                for &(pt, sz) in &trailing {
                    envelope = envelope.max(sz * pt.powi(4));
                }
                // sum_{k>m} (k scale/q)^{-4} <= (q/scale)^4 / (3 m^3).
                let tail = prefactor.abs() * envelope * (qt / scale).powi(4)
                    / (T::from_f64(3.0) * T::from_u64(m).powi(3));
                if tail.to_f64() <= CERT_BOUND {
                    break;
                }
                consecutive = 0;
            }
        } else {
            consecutive = 0;
        }
    }
    Ok((prefactor * acc.value(), m))
}

/// The odd-restricted sum `sum_{d odd} (d/p) W(d alpha^2 / X)` assembled
/// from dual sums at scales `X/alpha^2` and `X/(2 alpha^2)`.
///
/// Restricting to odd `d` costs one extra dual sum: subtracting `(2/p)`
/// times the sum at half the scale removes exactly the even terms.
pub fn odd_restricted_dual<T: Real>(
    p: u64,
    w: &SmoothCompactFunction<T>,
    x: T,
    alpha: u64,
    contour: &MellinContour<T>,
) -> Result<T> {
    let chi = QuadraticCharacter::new(p)?;
    let kernel = WtildeKernel::new(w, chi.parity(), contour)?;
    odd_restricted_dual_with(&chi, x, alpha, &kernel)
}

/// [`odd_restricted_dual`] against a prebuilt kernel.
pub fn odd_restricted_dual_with<T: Real>(
    chi: &QuadraticCharacter,
    x: T,
    alpha: u64,
    kernel: &WtildeKernel<T>,
) -> Result<T> {
    let p = chi.q();
    if alpha == 0 || alpha % 2 == 0 || alpha % p == 0 {
        return Err(Error::BadAlpha {
            alpha,
            two_p: 2 * p,
        });
    }
    let xf = x.to_f64();
    if !xf.is_finite() || xf <= 0.0 {
        return Err(Error::BadArgument(xf));
    }
    let alpha_sq = T::from_u64(alpha * alpha);
    let two = T::from_f64(2.0);
    let (full, _) = dual_char_sum(chi, kernel, x / alpha_sq)?;
    let (halved, _) = dual_char_sum(chi, kernel, x / (two * alpha_sq))?;
    let two_leg = T::from_f64(f64::from(chi.eval(2)));
    Ok(full - two_leg * halved)
}
