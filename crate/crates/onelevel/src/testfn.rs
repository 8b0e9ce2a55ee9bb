//! Test-function pairs (φ, φ̂), smooth compact weights, and the
//! random-matrix prediction they plug into.
//!
//! A [`TestFunctionPair`] bundles a function with its Fourier transform
//! under the convention φ̂(u) = ∫φ(x)e^{−2πixu}dx, together with the three
//! integrals the density statistic consumes. The shipped pair is the Fejér
//! kernel ([`fejer_pair`]): triangular transform of half-width σ, so the
//! support condition is explicit and every integral has a closed form. The
//! averaging weight is the C^∞ bump of [`bump_weight`].
//!
//! [`rmt_prediction`] evaluates ∫φ(x)·(1 − sin(2πx)/(2πx))dx, the symplectic
//! kernel paired against φ. Since the transform of sin(2πx)/(2πx) is half
//! the indicator of [−1, 1], the integral collapses to
//! ∫φ − ½∫_{−1}^{1}φ̂ and needs no quadrature at all.

use std::sync::Arc;

use crate::quad::gauss_kronrod;
use crate::{Error, Real, Result};

/// A test function φ with compactly supported transform φ̂.
#[derive(Clone)]
pub struct TestFunctionPair<T: Real> {
    name: &'static str,
    sigma: T,
    phi: Arc<dyn Fn(T) -> T + Send + Sync>,
    phi_hat: Arc<dyn Fn(T) -> T + Send + Sync>,
    integral_phi: T,
    integral_phi_hat_full: T,
    integral_phi_hat_unit: T,
}

impl<T: Real> TestFunctionPair<T> {
    pub fn name(&self) -> &'static str {
        self.name
    }

    /// Half-width of supp φ̂.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn phi(&self, x: T) -> T {
        (self.phi)(x)
    }

    pub fn phi_hat(&self, u: T) -> T {
        (self.phi_hat)(u)
    }

    /// ∫φ(x)dx, equal to φ̂(0).
    pub fn integral_phi(&self) -> T {
        self.integral_phi
    }

    /// ∫φ̂(u)du over the whole support.
    pub fn integral_phi_hat_full(&self) -> T {
        self.integral_phi_hat_full
    }

    /// ∫_{−1}^{1}φ̂(u)du.
    pub fn integral_phi_hat_unit(&self) -> T {
        self.integral_phi_hat_unit
    }
}

impl<T: Real> std::fmt::Debug for TestFunctionPair<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunctionPair")
            .field("name", &self.name)
            .field("sigma", &self.sigma)
            .finish()
    }
}

/// A smooth nonnegative function supported on [a, b] ⊂ (0, ∞).
#[derive(Clone)]
pub struct SmoothCompactFunction<T: Real> {
    a: T,
    b: T,
    eval: Arc<dyn Fn(T) -> T + Send + Sync>,
    integral: T,
}

impl<T: Real> SmoothCompactFunction<T> {
    pub fn support(&self) -> (T, T) {
        (self.a, self.b)
    }

    pub fn evaluate(&self, t: T) -> T {
        (self.eval)(t)
    }

    /// ∫w(t)dt, fixed at construction.
    pub fn integral(&self) -> T {
        self.integral
    }

    /// The same profile multiplied by a constant factor.
    pub fn scaled(&self, factor: T) -> SmoothCompactFunction<T> {
        let inner = self.eval.clone();
        SmoothCompactFunction {
            a: self.a,
            b: self.b,
            eval: Arc::new(move |t| inner(t) * factor),
            integral: self.integral * factor,
        }
    }
}

impl<T: Real> std::fmt::Debug for SmoothCompactFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothCompactFunction")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("integral", &self.integral)
            .finish()
    }
}

/// The Fejér pair: φ̂(u) = (1 − |u|/σ)₊ and φ(x) = σ·(sin(πσx)/(πσx))².
///
/// Closed forms: ∫φ = 1, ∫φ̂ = σ, and ∫_{−1}^{1}φ̂ = σ for σ ≤ 1, else
/// 2 − 1/σ. Admissible half-widths are 0 < σ < 2.
pub fn fejer_pair<T: Real>(sigma: T) -> Result<TestFunctionPair<T>> {
    let two = T::from_f64(2.0);
    if !(sigma > T::zero() && sigma < two) {
        return Err(Error::BadSigma(sigma.to_f64(), "(0, 2)"));
    }
    let s = sigma;
    let phi = move |x: T| {
        let z = T::PI() * s * x;
        if z == T::zero() {
            s
        } else {
            let r = z.sin() / z;
            s * r * r
        }
    };
    let phi_hat = move |u: T| (T::one() - u.abs() / s).max(T::zero());
    let unit = if s <= T::one() { s } else { two - s.recip() };
    Ok(TestFunctionPair {
        name: "fejer",
        sigma,
        phi: Arc::new(phi),
        phi_hat: Arc::new(phi_hat),
        integral_phi: T::one(),
        integral_phi_hat_full: s,
        integral_phi_hat_unit: unit,
    })
}

/// The C^∞ bump exp(−1/((t−a)(b−t))) on (a, b), rescaled to peak value 1
/// at the midpoint. The integral is fixed by adaptive quadrature at
/// construction time.
pub fn bump_weight<T: Real>(a: T, b: T) -> Result<SmoothCompactFunction<T>> {
    if !(a > T::zero() && b > a) {
        return Err(Error::BadSupport(a.to_f64(), b.to_f64()));
    }
    let half = (b - a) / T::from_f64(2.0);
    let peak = (half * half).recip();
    let eval = move |t: T| {
        if t <= a || t >= b {
            return T::zero();
        }
        (peak - ((t - a) * (b - t)).recip()).exp()
    };
    // 1e−10 in double precision; wider than round-off when T is narrower.
    let tol = T::from_f64(1e-10).max(T::epsilon() * T::from_f64(32.0));
    let integral = gauss_kronrod(eval, a, b, tol)?;
    Ok(SmoothCompactFunction {
        a,
        b,
        eval: Arc::new(eval),
        integral,
    })
}

/// ∫φ(x)·(1 − sin(2πx)/(2πx))dx in closed form: ∫φ − ½∫_{−1}^{1}φ̂.
pub fn rmt_prediction<T: Real>(pair: &TestFunctionPair<T>) -> T {
    pair.integral_phi - pair.integral_phi_hat_unit / T::from_f64(2.0)
}
