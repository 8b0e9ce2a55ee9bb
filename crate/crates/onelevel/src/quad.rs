//! Adaptive quadrature.
//!
//! Two independent rules are exposed on purpose: [`gauss_kronrod`] is the
//! production rule, and [`adaptive_simpson`] exists so every frozen integral
//! in the test suite can be confirmed by machinery that shares no code with
//! the rule under test.

use num_complex::Complex;

use crate::{Error, Real, Result};

/// Values an integrand may take: real scalars or complex pairs.
pub trait IntegrandValue<T: Real>: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, factor: T) -> Self;
    fn norm(self) -> T;
}

impl<T: Real> IntegrandValue<T> for T {
    #[inline]
    fn zero() -> Self {
        T::zero()
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
    #[inline]
    fn scale(self, factor: T) -> Self {
        self * factor
    }
    #[inline]
    fn norm(self) -> T {
        self.abs()
    }
}

impl<T: Real> IntegrandValue<T> for Complex<T> {
    #[inline]
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn sub(self, other: Self) -> Self {
        self - other
    }
    #[inline]
    fn scale(self, factor: T) -> Self {
        Complex::new(self.re * factor, self.im * factor)
    }
    #[inline]
    fn norm(self) -> T {
        self.re.abs() + self.im.abs()
    }
}

/// Positive Kronrod-15 abscissae; rows marked `true` are shared with Gauss-7.
const K15_NODES: [(f64, bool); 8] = [
    (0.000000000000000000000000000000000, true),
    (0.207784955007898467600689403773245, false),
    (0.405845151377397166906606412076961, true),
    (0.586087235467691130294144838258730, false),
    (0.741531185599394439863864773280788, true),
    (0.864864423359769072789712788640926, false),
    (0.949107912342758524526189684047851, true),
    (0.991455371120812639206854697526329, false),
];

const K15_WEIGHTS: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

/// Gauss-7 weights aligned with the shared abscissae, center first.
const G7_WEIGHTS: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// All fifteen Kronrod abscissa/weight pairs on [-1, 1] in ascending order,
/// for callers that lay down a fixed composite rule instead of adapting.
pub(crate) fn k15_rule<T: Real>() -> [(T, T); 15] {
    let mut rule = [(T::zero(), T::zero()); 15];
    for (i, (&(x, _), &w)) in K15_NODES.iter().zip(&K15_WEIGHTS).enumerate() {
        let x = T::from_f64(x);
        let w = T::from_f64(w);
        rule[7 + i] = (x, w);
        rule[7 - i] = (-x, w);
    }
    rule
}

const MAX_DEPTH: u32 = 30;

/// Total subdivision budget per call; integrands that keep failing locally
/// exhaust this instead of expanding the full bisection tree.
const MAX_PANELS: u32 = 1 << 14;

/// One Gauss-7 / Kronrod-15 evaluation; returns the K15 value and |K15 - G7|.
fn gk15_panel<T, V, F>(f: &F, a: T, b: T) -> (V, T)
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let half = T::from_f64(0.5);
    let center = (a + b) * half;
    let radius = (b - a) * half;

    let mut kronrod = V::zero();
    let mut gauss = V::zero();
    let mut gauss_idx = 0usize;
    for (i, &(node, shared)) in K15_NODES.iter().enumerate() {
        let offset = radius * T::from_f64(node);
        let pair = if i == 0 {
            f(center)
        } else {
            f(center + offset).add(f(center - offset))
        };
        kronrod = kronrod.add(pair.scale(T::from_f64(K15_WEIGHTS[i])));
        if shared {
            gauss = gauss.add(pair.scale(T::from_f64(G7_WEIGHTS[gauss_idx])));
            gauss_idx += 1;
        }
    }
    let kronrod = kronrod.scale(radius);
    let gauss = gauss.scale(radius);
    (kronrod, kronrod.sub(gauss).norm())
}

fn gk_recurse<T, V, F>(
    f: &F,
    a: T,
    b: T,
    tol: T,
    depth: u32,
    budget: &mut u32,
    worst: &mut T,
) -> V
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let (value, err) = gk15_panel(f, a, b);
    if err <= tol {
        return value;
    }
    if depth >= MAX_DEPTH || *budget == 0 {
        if err > *worst {
            *worst = err;
        }
        return value;
    }
    *budget -= 1;
    let mid = (a + b) * T::from_f64(0.5);
    let half_tol = tol * T::from_f64(0.5);
    let left = gk_recurse(f, a, mid, half_tol, depth + 1, budget, worst);
    let right = gk_recurse(f, mid, b, half_tol, depth + 1, budget, worst);
    left.add(right)
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`, with bisection capped at depth 30.
pub fn gauss_kronrod<T, V, F>(f: F, a: T, b: T, tol: T) -> Result<V>
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let mut worst = T::zero();
    let mut budget = MAX_PANELS;
    let value = gk_recurse(&f, a, b, tol, 0, &mut budget, &mut worst);
    if worst > tol {
        return Err(Error::QuadratureDepth {
            tol: tol.to_f64(),
            achieved: worst.to_f64(),
        });
    }
    Ok(value)
}

fn simpson_panel<T, V, F>(f: &F, a: T, fa: V, b: T, fb: V) -> (V, V, T)
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let mid = (a + b) * T::from_f64(0.5);
    let fm = f(mid);
    let sixth = (b - a) / T::from_f64(6.0);
    let whole = fa.add(fm.scale(T::from_f64(4.0))).add(fb).scale(sixth);
    (whole, fm, mid)
}

#[allow(clippy::too_many_arguments)]
fn simpson_recurse<T, V, F>(
    f: &F,
    a: T,
    fa: V,
    b: T,
    fb: V,
    whole: V,
    fm: V,
    mid: T,
    tol: T,
    depth: u32,
    budget: &mut u32,
    worst: &mut T,
) -> V
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let (left, flm, lmid) = simpson_panel(f, a, fa, mid, fm);
    let (right, frm, rmid) = simpson_panel(f, mid, fm, b, fb);
    let refined = left.add(right);
    let err = refined.sub(whole).norm() / T::from_f64(15.0);
    if err <= tol || depth >= MAX_DEPTH || *budget == 0 {
        if err > tol && err > *worst {
            *worst = err;
        }
        return refined.add(refined.sub(whole).scale(T::from_f64(1.0 / 15.0)));
    }
    *budget -= 1;
    let half_tol = tol * T::from_f64(0.5);
    #[rustfmt::skip]
    let l = simpson_recurse(f, a, fa, mid, fm, left, flm, lmid, half_tol, depth + 1, budget, worst);
    #[rustfmt::skip]
    let r = simpson_recurse(f, mid, fm, b, fb, right, frm, rmid, half_tol, depth + 1, budget, worst);
    l.add(r)
}

/// Adaptive Simpson integration with Richardson extrapolation. Kept fully
/// independent of [`gauss_kronrod`] so the two can vouch for each other.
pub fn adaptive_simpson<T, V, F>(f: F, a: T, b: T, tol: T) -> Result<V>
where
    T: Real,
    V: IntegrandValue<T>,
    F: Fn(T) -> V,
{
    let fa = f(a);
    let fb = f(b);
    let (whole, fm, mid) = simpson_panel(&f, a, fa, b, fb);
    let mut worst = T::zero();
    let mut budget = MAX_PANELS;
    let value = simpson_recurse(&f, a, fa, b, fb, whole, fm, mid, tol, 0, &mut budget, &mut worst);
    if worst > tol {
        return Err(Error::QuadratureDepth {
            tol: tol.to_f64(),
            achieved: worst.to_f64(),
        });
    }
    Ok(value)
}
