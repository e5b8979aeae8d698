//! Möbius transformations on the Riemann sphere, their quaternionic action on
//! the upper half-space model of hyperbolic 3-space, and Schwarzian
//! derivatives.
//!
//! A transformation z ↦ (az+b)/(cz+d) is stored as a 2×2 complex matrix
//! normalized to ad − bc = 1. The sign ambiguity of PSL(2,ℂ) is resolved by
//! making the first entry of (a, b, c, d) that is not negligibly small have
//! argument in (−π/2, π/2].

use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

pub const I: Complex = Complex::new(0.0, 1.0);

/// A point of the Riemann sphere Ĉ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CPoint {
    Finite(Complex),
    Infinity,
}

impl CPoint {
    pub fn finite(self) -> Option<Complex> {
        match self {
            CPoint::Finite(z) => Some(z),
            CPoint::Infinity => None,
        }
    }

    pub fn is_infinity(self) -> bool {
        matches!(self, CPoint::Infinity)
    }

    /// Distance in the chordal metric on Ĉ (bounded, treats ∞ like any point).
    pub fn chordal_dist(self, other: CPoint) -> f64 {
        match (self, other) {
            (CPoint::Finite(z), CPoint::Finite(w)) => {
                2.0 * (z - w).norm()
                    / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
            }
            (CPoint::Finite(z), CPoint::Infinity) | (CPoint::Infinity, CPoint::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (CPoint::Infinity, CPoint::Infinity) => 0.0,
        }
    }
}

impl From<Complex> for CPoint {
    fn from(z: Complex) -> Self {
        CPoint::Finite(z)
    }
}

/// Normalized Möbius transformation, ad − bc = 1 up to a global sign that is
/// fixed canonically.
///
/// Serializes as the length-8 array [Re a, Im a, Re b, Im b, Re c, Im c,
/// Re d, Im d].
#[derive(Debug, Clone, Copy)]
pub struct MoebiusMap {
    pub a: Complex,
    pub b: Complex,
    pub c: Complex,
    pub d: Complex,
}

impl Serialize for MoebiusMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 8]>::deserialize(d)?;
        MoebiusMap::from_array(v).map_err(serde::de::Error::custom)
    }
}

impl MoebiusMap {
    pub fn identity() -> Self {
        MoebiusMap {
            a: Complex::new(1.0, 0.0),
            b: Complex::new(0.0, 0.0),
            c: Complex::new(0.0, 0.0),
            d: Complex::new(1.0, 0.0),
        }
    }

    /// Builds and normalizes a map from raw matrix entries.
    pub fn new(a: Complex, b: Complex, c: Complex, d: Complex) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-14 {
            return Err(Error::InvalidGroup("singular matrix".into()));
        }
        let s = det.sqrt();
        Ok(MoebiusMap {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        }
        .canonical())
    }

    /// Translation z ↦ z + b.
    pub fn translation(b: Complex) -> Self {
        MoebiusMap::new(Complex::new(1.0, 0.0), b, Complex::new(0.0, 0.0), Complex::new(1.0, 0.0))
            .unwrap()
    }

    /// Dilation z ↦ k z, k ≠ 0.
    pub fn dilation(k: Complex) -> Self {
        MoebiusMap::new(k, Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0))
            .unwrap()
    }

    /// Fixes the PSL(2,ℂ) sign: first entry of (a,b,c,d) larger than
    /// 1e-9·(max entry) gets argument in (−π/2, π/2].
    pub fn canonical(self) -> Self {
        let entries = [self.a, self.b, self.c, self.d];
        let scale = entries.iter().map(|e| e.norm()).fold(0.0, f64::max);
        for e in entries {
            if e.norm() > 1e-9 * scale {
                let keep = e.re > 1e-12 * scale || (e.re.abs() <= 1e-12 * scale && e.im > 0.0);
                return if keep { self } else { self.negate() };
            }
        }
        self
    }

    fn negate(self) -> Self {
        MoebiusMap {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn det(&self) -> Complex {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex {
        self.a + self.d
    }

    /// c(γ) entry, as used by the integration-constant formulas.
    pub fn c_entry(&self) -> Complex {
        self.c
    }

    /// True when the c entry vanishes, i.e. the map is affine and fixes ∞.
    pub fn is_affine(&self) -> bool {
        self.c.norm() < 1e-12
    }

    /// Matrix distance min(|M−N|, |M+N|), the PSL(2,ℂ) comparison.
    pub fn dist(&self, other: &MoebiusMap) -> f64 {
        let d1 = (self.a - other.a).norm()
            + (self.b - other.b).norm()
            + (self.c - other.c).norm()
            + (self.d - other.d).norm();
        let d2 = (self.a + other.a).norm()
            + (self.b + other.b).norm()
            + (self.c + other.c).norm()
            + (self.d + other.d).norm();
        d1.min(d2)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.dist(&MoebiusMap::identity()) < tol
    }

    /// Composition: (γ1 ∘ γ2)(z) = γ1(γ2(z)).
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .canonical()
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonical()
    }

    /// Projective evaluation on Ĉ.
    pub fn apply(&self, z: CPoint) -> CPoint {
        match z {
            CPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() < 1e-300 {
                    CPoint::Infinity
                } else {
                    CPoint::Finite((self.a * z + self.b) / den)
                }
            }
            CPoint::Infinity => {
                if self.c.norm() < 1e-300 {
                    CPoint::Infinity
                } else {
                    CPoint::Finite(self.a / self.c)
                }
            }
        }
    }

    /// Evaluation at a finite point expected to stay finite.
    pub fn apply_finite(&self, z: Complex) -> Result<Complex> {
        let den = self.c * z + self.d;
        if den.norm() < 1e-12 {
            return Err(Error::Pole { z: (z.re, z.im) });
        }
        Ok((self.a * z + self.b) / den)
    }

    /// γ'(z) = 1/(cz+d)² for the det-1 representative.
    pub fn deriv(&self, z: Complex) -> Result<Complex> {
        let den = self.c * z + self.d;
        if den.norm() < 1e-12 {
            return Err(Error::Pole { z: (z.re, z.im) });
        }
        Ok(1.0 / (den * den))
    }

    /// γ''/γ'(z) = −2c/(cz+d).
    pub fn log_deriv_ratio(&self, z: Complex) -> Result<Complex> {
        let den = self.c * z + self.d;
        if den.norm() < 1e-12 {
            return Err(Error::Pole { z: (z.re, z.im) });
        }
        Ok(-2.0 * self.c / den)
    }

    /// Conjugation m ∘ self ∘ m⁻¹.
    pub fn conjugate_by(&self, m: &MoebiusMap) -> MoebiusMap {
        m.compose(self).compose(&m.inverse())
    }

    /// The unique map sending (z1, z2, z3) to (w1, w2, w3).
    pub fn map_points(z: [CPoint; 3], w: [CPoint; 3]) -> Result<MoebiusMap> {
        let to_standard = Self::to_zero_one_inf(z)?;
        let from_standard = Self::to_zero_one_inf(w)?.inverse();
        Ok(from_standard.compose(&to_standard))
    }

    /// Map sending (z1, z2, z3) ↦ (0, 1, ∞): the cross-ratio map.
    fn to_zero_one_inf(p: [CPoint; 3]) -> Result<MoebiusMap> {
        use CPoint::*;
        let m = match p {
            [Finite(z1), Finite(z2), Finite(z3)] => MoebiusMap::new(
                z2 - z3,
                -z1 * (z2 - z3),
                z2 - z1,
                -z3 * (z2 - z1),
            )?,
            [Infinity, Finite(z2), Finite(z3)] => MoebiusMap::new(
                Complex::new(0.0, 0.0),
                -(z2 - z3),
                Complex::new(-1.0, 0.0),
                z3,
            )?,
            [Finite(z1), Infinity, Finite(z3)] => MoebiusMap::new(
                Complex::new(1.0, 0.0),
                -z1,
                Complex::new(1.0, 0.0),
                -z3,
            )?,
            [Finite(z1), Finite(z2), Infinity] => MoebiusMap::new(
                Complex::new(-1.0, 0.0),
                z1,
                Complex::new(0.0, 0.0),
                -(z2 - z1),
            )?,
            _ => return Err(Error::InvalidGroup("repeated point of Ĉ in map_points".into())),
        };
        Ok(m)
    }

    /// Serialization as [Re a, Im a, Re b, Im b, Re c, Im c, Re d, Im d].
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re,
            self.d.im,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Result<Self> {
        MoebiusMap::new(
            Complex::new(v[0], v[1]),
            Complex::new(v[2], v[3]),
            Complex::new(v[4], v[5]),
            Complex::new(v[6], v[7]),
        )
    }

    pub fn has_real_entries(&self, tol: f64) -> bool {
        // Real up to the projective sign: a global phase ±1 or ±i times real.
        let m = self.canonical();
        let im = m.a.im.abs() + m.b.im.abs() + m.c.im.abs() + m.d.im.abs();
        let re = m.a.re.abs() + m.b.re.abs() + m.c.re.abs() + m.d.re.abs();
        im < tol || re < tol
    }

    /// Classification by trace and multiplier.
    pub fn classify(&self) -> MapClass {
        let tol = 1e-9;
        if self.is_identity(tol) {
            return MapClass {
                tag: MapTag::Identity,
                fixed_points: vec![],
                multiplier: Complex::new(1.0, 0.0),
            };
        }
        let tr = self.trace();
        let tr2 = tr * tr;
        if (tr2 - 4.0).norm() < tol {
            // Parabolic: single fixed point.
            let fp = if self.c.norm() < tol {
                CPoint::Infinity
            } else {
                CPoint::Finite((self.a - self.d) / (2.0 * self.c))
            };
            return MapClass {
                tag: MapTag::Parabolic,
                fixed_points: vec![fp],
                multiplier: Complex::new(1.0, 0.0),
            };
        }

        // Two distinct fixed points.
        let (p1, p2) = if self.c.norm() < tol {
            (CPoint::Finite(self.b / (self.d - self.a)), CPoint::Infinity)
        } else {
            let disc = (tr2 - 4.0).sqrt();
            let f1 = (self.a - self.d + disc) / (2.0 * self.c);
            let f2 = (self.a - self.d - disc) / (2.0 * self.c);
            (CPoint::Finite(f1), CPoint::Finite(f2))
        };

        // Derivative at a fixed point in a chart; at ∞ use the 1/z chart,
        // where the derivative is 1/γ'(pole-free limit) = (a/d-form) —
        // computed as reciprocal of the derivative at the other fixed point.
        let d1 = self.deriv_at(p1);
        let d2 = self.deriv_at(p2);
        let (attracting, repelling, mult) = if d1.norm() <= d2.norm() {
            (p1, p2, d2)
        } else {
            (p2, p1, d1)
        };

        let tag = if (mult.norm() - 1.0).abs() < tol {
            MapTag::Elliptic
        } else if tr.im.abs() < tol && mult.im.abs() < tol && mult.re > 0.0 {
            MapTag::Hyperbolic
        } else {
            MapTag::Loxodromic
        };
        MapClass {
            tag,
            fixed_points: vec![attracting, repelling],
            multiplier: mult,
        }
    }

    /// |γ'| at a point of Ĉ, computed in the appropriate chart.
    fn deriv_at(&self, p: CPoint) -> Complex {
        match p {
            CPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() < 1e-12 {
                    Complex::new(f64::INFINITY, 0.0)
                } else {
                    1.0 / (den * den)
                }
            }
            // Chart w = 1/z around ∞: derivative of w ↦ 1/γ(1/w) at 0 is
            // (d/a)² ... for fixed ∞ (c=0): w/(a/d·..) — equals d²/a² wait:
            // γ(z)=az+b (c=0): in chart, w ↦ w/(a + bw): derivative at 0 = 1/a → 1/a².
            CPoint::Infinity => {
                // requires c = 0 here (∞ fixed)
                let den = self.a;
                1.0 / (den * den)
            }
        }
    }

    /// Quaternionic action on upper half-space; returns the image point and
    /// the conformal factor J_γ(Z) = 1/(|cz+d|² + |ct|²).
    pub fn act3d(&self, p: HyperbolicPoint3) -> (HyperbolicPoint3, f64) {
        let z = p.z;
        let t = p.t;
        let czd = self.c * z + self.d;
        let j = 1.0 / (czd.norm_sqr() + (self.c * t).norm_sqr());
        let znew = ((self.a * z + self.b) * czd.conj() + self.a * self.c.conj() * t * t) * j;
        let tnew = t * j;
        (HyperbolicPoint3 { z: znew, t: tnew }, j)
    }

    /// ∂z(γZ)/∂z, ∂z(γZ)/∂z̄ and ∂z(γZ)/∂t.
    pub fn act3d_derivs(&self, p: HyperbolicPoint3) -> (Complex, Complex, Complex) {
        let czd = self.c * p.z + self.d;
        let j = 1.0 / (czd.norm_sqr() + (self.c * p.t).norm_sqr());
        let dz = czd.conj() * czd.conj() * j * j;
        let dzbar = -(self.c.conj() * p.t) * (self.c.conj() * p.t) * j * j;
        let dt = 2.0 * p.t * self.c.conj() * czd.conj() * j * j;
        (dz, dzbar, dt)
    }
}

/// Point of the upper half-space model, z the boundary coordinate, t > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicPoint3 {
    pub z: Complex,
    pub t: f64,
}

impl HyperbolicPoint3 {
    pub fn new(z: Complex, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Numerical(format!("height must be positive, got {t}")));
        }
        Ok(HyperbolicPoint3 { z, t })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapTag {
    Identity,
    Parabolic,
    Elliptic,
    Hyperbolic,
    Loxodromic,
}

/// Conjugacy data of a Möbius map: attracting fixed point first, and the
/// expanding multiplier (derivative at the repelling fixed point, |λ| > 1
/// for loxodromic maps).
#[derive(Debug, Clone)]
pub struct MapClass {
    pub tag: MapTag,
    pub fixed_points: Vec<CPoint>,
    pub multiplier: Complex,
}

impl MapClass {
    pub fn is_loxodromic_or_hyperbolic(&self) -> bool {
        matches!(self.tag, MapTag::Hyperbolic | MapTag::Loxodromic)
    }

    pub fn attracting(&self) -> Option<CPoint> {
        self.fixed_points.first().copied()
    }

    pub fn repelling(&self) -> Option<CPoint> {
        self.fixed_points.get(1).copied()
    }
}

/// A holomorphic map with analytically supplied derivatives up to third
/// order, enough for exact Schwarzian evaluation.
pub trait AnalyticMap {
    /// Returns [f, f', f'', f'''] at z.
    fn jet3(&self, z: Complex) -> [Complex; 4];
}

impl AnalyticMap for MoebiusMap {
    fn jet3(&self, z: Complex) -> [Complex; 4] {
        let den = self.c * z + self.d;
        let f = (self.a * z + self.b) / den;
        let f1 = 1.0 / (den * den);
        let f2 = -2.0 * self.c / (den * den * den);
        let f3 = 6.0 * self.c * self.c / (den * den * den * den);
        [f, f1, f2, f3]
    }
}

/// Polynomial with complex coefficients, lowest degree first.
#[derive(Debug, Clone)]
pub struct Polynomial(pub Vec<Complex>);

impl AnalyticMap for Polynomial {
    fn jet3(&self, z: Complex) -> [Complex; 4] {
        let mut f = Complex::new(0.0, 0.0);
        let mut f1 = Complex::new(0.0, 0.0);
        let mut f2 = Complex::new(0.0, 0.0);
        let mut f3 = Complex::new(0.0, 0.0);
        for (k, &ck) in self.0.iter().enumerate() {
            let kf = k as f64;
            f += ck * z.powu(k as u32);
            if k >= 1 {
                f1 += ck * kf * z.powu((k - 1) as u32);
            }
            if k >= 2 {
                f2 += ck * kf * (kf - 1.0) * z.powu((k - 2) as u32);
            }
            if k >= 3 {
                f3 += ck * kf * (kf - 1.0) * (kf - 2.0) * z.powu((k - 3) as u32);
            }
        }
        [f, f1, f2, f3]
    }
}

impl<T: AnalyticMap + ?Sized> AnalyticMap for &T {
    fn jet3(&self, z: Complex) -> [Complex; 4] {
        (**self).jet3(z)
    }
}

/// Composition f ∘ g of analytic maps.
pub struct Compose<F, G>(pub F, pub G);

impl<F: AnalyticMap, G: AnalyticMap> AnalyticMap for Compose<F, G> {
    fn jet3(&self, z: Complex) -> [Complex; 4] {
        let [g, g1, g2, g3] = self.1.jet3(z);
        let [f, f1, f2, f3] = self.0.jet3(g);
        [
            f,
            f1 * g1,
            f2 * g1 * g1 + f1 * g2,
            f3 * g1 * g1 * g1 + 3.0 * f2 * g1 * g2 + f1 * g3,
        ]
    }
}

/// Schwarzian derivative S(f) = f'''/f' − (3/2)(f''/f')² from a 3-jet.
pub fn schwarzian(map: &dyn AnalyticMap, z: Complex) -> Result<Complex> {
    let [_, f1, f2, f3] = map.jet3(z);
    if f1.norm() < 1e-14 {
        return Err(Error::CriticalPoint);
    }
    let r = f2 / f1;
    Ok(f3 / f1 - 1.5 * r * r)
}

/// Schwarzian of a plain sampler, differentiating through a discrete Cauchy
/// integral over a ring of radius 0.05·max(1, |z|).
///
/// Plain difference stencils cannot deliver third derivatives at the 1e−9
/// level in f64 (roundoff scales as ε/h³); sampling N points on a circle
/// gives spectral truncation error, so the radius can stay large enough to
/// keep roundoff near ε/h³ ≈ 1e−12. Requires f analytic on the closed ring
/// disk.
pub fn schwarzian_fd(f: &dyn Fn(Complex) -> Complex, z: Complex) -> Result<Complex> {
    schwarzian_ring(f, z, 0.05 * z.norm().max(1.0))
}

/// Ring-sampling Schwarzian with explicit radius.
pub fn schwarzian_ring(f: &dyn Fn(Complex) -> Complex, z: Complex, h: f64) -> Result<Complex> {
    const N: usize = 32;
    let mut moments = [Complex::new(0.0, 0.0); 4];
    for j in 0..N {
        let th = 2.0 * std::f64::consts::PI * j as f64 / N as f64;
        let w = Complex::new(0.0, th).exp();
        let v = f(z + h * w);
        for (k, m) in moments.iter_mut().enumerate() {
            *m += v * Complex::new(0.0, -(k as f64) * th).exp();
        }
    }
    let nf = N as f64;
    let f1 = moments[1] / (nf * h);
    let f2 = 2.0 * moments[2] / (nf * h * h);
    let f3 = 6.0 * moments[3] / (nf * h * h * h);
    if f1.norm() < 1e-10 {
        return Err(Error::CriticalPoint);
    }
    let r = f2 / f1;
    Ok(f3 / f1 - 1.5 * r * r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn compose_identity_and_translations() {
        let g = MoebiusMap::new(c(2.0, 1.0), c(0.3, -0.2), c(0.1, 0.4), c(1.0, 0.0)).unwrap();
        let id = MoebiusMap::identity();
        assert!(g.compose(&id).dist(&g) < 1e-12);
        let t1 = MoebiusMap::translation(c(1.0, 0.0));
        let t2 = MoebiusMap::translation(c(2.0, 0.0));
        let t3 = MoebiusMap::translation(c(3.0, 0.0));
        assert!(t1.compose(&t2).dist(&t3) < 1e-12);
    }

    #[test]
    fn inverse_composes_to_identity() {
        let g = MoebiusMap::new(c(2.0, 1.0), c(0.3, -0.2), c(0.1, 0.4), c(1.0, 0.0)).unwrap();
        assert!(g.compose(&g.inverse()).is_identity(1e-12));
        assert!((g.det() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn apply_and_derivatives() {
        let dil = MoebiusMap::dilation(c(2.0, 0.0));
        let z = c(3.0, 0.0);
        assert!((dil.apply_finite(z).unwrap() - c(6.0, 0.0)).norm() < 1e-12);
        assert!((dil.deriv(z).unwrap() - c(2.0, 0.0)).norm() < 1e-12);
        assert!(dil.log_deriv_ratio(z).unwrap().norm() < 1e-12);

        // z ↦ −1/z at i: value i, |γ'(i)| = 1.
        let inv = MoebiusMap::new(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let w = inv.apply_finite(c(0.0, 1.0)).unwrap();
        assert!((w - c(0.0, 1.0)).norm() < 1e-12);
        assert!((inv.deriv(c(0.0, 1.0)).unwrap().norm() - 1.0).abs() < 1e-12);

        // γ''/γ' = −2/z for c=1, d=0.
        let g = MoebiusMap::new(c(1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let z = c(0.7, 1.3);
        assert!((g.log_deriv_ratio(z).unwrap() + 2.0 / z).norm() < 1e-12);
    }

    #[test]
    fn projective_handling() {
        let g = MoebiusMap::new(c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        // pole at z = -1
        assert!(g.apply(CPoint::Finite(c(-1.0, 0.0))).is_infinity());
        // image of ∞ is a/c = 1
        match g.apply(CPoint::Infinity) {
            CPoint::Finite(w) => assert!((w - c(1.0, 0.0)).norm() < 1e-12),
            CPoint::Infinity => panic!("expected finite image"),
        }
        assert!(g.apply_finite(c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn schwarzian_vanishes_on_moebius() {
        let g = MoebiusMap::new(c(1.3, 0.2), c(0.5, -1.0), c(0.2, 0.1), c(1.0, 0.3)).unwrap();
        for k in 0..10 {
            let z = c(0.3 * k as f64 - 1.0, 0.7 + 0.1 * k as f64);
            assert!(schwarzian(&g, z).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn schwarzian_of_cube() {
        // f = z³: f'''/f' = 6/(3z²) = 2/z², (3/2)(f''/f')² = (3/2)(2/z)² = 6/z².
        let f = Polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let s = schwarzian(&f, c(1.0, 0.0)).unwrap();
        assert!((s - c(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn schwarzian_cocycle() {
        // S(f∘g) = S(f)∘g (g')² + S(g) for f = Möbius ∘ cubic, g = Möbius.
        let m = MoebiusMap::new(c(1.0, 0.4), c(0.2, 0.0), c(-0.3, 0.1), c(1.0, 0.0)).unwrap();
        let p = Polynomial(vec![c(0.1, 0.0), c(1.0, 0.0), c(0.2, -0.1), c(0.05, 0.02)]);
        let f = Compose(m, p);
        let g = MoebiusMap::new(c(1.1, 0.0), c(0.3, 0.2), c(0.1, -0.2), c(1.0, 0.1)).unwrap();
        let fg = Compose(&f as &dyn AnalyticMap, &g as &dyn AnalyticMap);
        for k in 0..20 {
            let z = c(0.11 * k as f64 - 1.0, 0.9 + 0.05 * k as f64);
            let lhs = schwarzian(&fg, z).unwrap();
            let gz = g.apply_finite(z).unwrap();
            let gp = g.deriv(z).unwrap();
            let rhs = schwarzian(&f, gz).unwrap() * gp * gp + schwarzian(&g, z).unwrap();
            assert!((lhs - rhs).norm() < 1e-9, "residual {}", (lhs - rhs).norm());
        }
    }

    #[test]
    fn schwarzian_fd_matches_analytic() {
        let p = Polynomial(vec![c(0.1, 0.0), c(1.0, 0.0), c(0.2, -0.1), c(0.05, 0.02)]);
        let z = c(0.4, 0.8);
        let exact = schwarzian(&p, z).unwrap();
        let approx = schwarzian_fd(
            &|z| p.jet3(z)[0],
            z,
        )
        .unwrap();
        assert!((exact - approx).norm() < 1e-8);
    }

    #[test]
    fn act3d_examples() {
        // translation: (z, t) ↦ (z+1, t), J = 1
        let tr = MoebiusMap::translation(c(1.0, 0.0));
        let p = HyperbolicPoint3::new(c(0.3, 0.4), 0.7).unwrap();
        let (q, j) = tr.act3d(p);
        assert!((q.z - (p.z + 1.0)).norm() < 1e-14);
        assert!((q.t - p.t).abs() < 1e-14 && (j - 1.0).abs() < 1e-14);

        // z ↦ −1/z at (0, 1) is fixed, J = 1
        let inv = MoebiusMap::new(c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let p = HyperbolicPoint3::new(c(0.0, 0.0), 1.0).unwrap();
        let (q, j) = inv.act3d(p);
        assert!(q.z.norm() < 1e-14 && (q.t - 1.0).abs() < 1e-14 && (j - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobian_multiplicative() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let mut r = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let g1 = MoebiusMap::new(r() + 2.0, r(), r(), r() + 2.0).unwrap();
            let g2 = MoebiusMap::new(r() + 2.0, r(), r(), r() + 2.0).unwrap();
            let p = HyperbolicPoint3::new(r(), rng.gen_range(0.1..2.0)).unwrap();
            let (q, j2) = g2.act3d(p);
            let (_, j1) = g1.act3d(q);
            let (_, j12) = g1.compose(&g2).act3d(p);
            assert!((j12 - j1 * j2).abs() < 1e-12 * j12.abs().max(1.0));
        }
    }

    #[test]
    fn act3d_derivative_formulas_match_fd() {
        let g = MoebiusMap::new(c(1.2, 0.1), c(0.4, -0.3), c(0.5, 0.2), c(1.0, 0.0)).unwrap();
        let p = HyperbolicPoint3::new(c(0.3, -0.2), 0.8).unwrap();
        let (dz, dzb, dt) = g.act3d_derivs(p);
        let h = 1e-6;
        let zat = |z: Complex, t: f64| g.act3d(HyperbolicPoint3 { z, t }).0.z;
        let dx = (zat(p.z + h, p.t) - zat(p.z - h, p.t)) / (2.0 * h);
        let dy = (zat(p.z + c(0.0, h), p.t) - zat(p.z - c(0.0, h), p.t)) / (2.0 * h);
        let dt_fd = (zat(p.z, p.t + h) - zat(p.z, p.t - h)) / (2.0 * h);
        let dz_fd = (dx - I * dy) / 2.0;
        let dzb_fd = (dx + I * dy) / 2.0;
        assert!((dz - dz_fd).norm() < 1e-6);
        assert!((dzb - dzb_fd).norm() < 1e-6);
        assert!((dt - dt_fd).norm() < 1e-6);
    }

    #[test]
    fn act3d_small_t_limit() {
        // |z(γ(z,t)) − γ(z)| = O(t²): slope fit on t = 1e-2, 1e-3, 1e-4.
        let g = MoebiusMap::new(c(1.2, 0.0), c(0.4, 0.0), c(0.5, 0.0), c(1.0, 0.0)).unwrap();
        let z = c(0.3, 0.9);
        let gz = g.apply_finite(z).unwrap();
        let mut logs = vec![];
        for &t in &[1e-2, 1e-3, 1e-4] {
            let (q, _) = g.act3d(HyperbolicPoint3 { z, t });
            logs.push(((q.z - gz).norm().ln(), t.ln()));
        }
        let slope = (logs[2].0 - logs[0].0) / (logs[2].1 - logs[0].1);
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn classify_examples() {
        let dil = MoebiusMap::dilation(c(4.0, 0.0));
        let cls = dil.classify();
        assert_eq!(cls.tag, MapTag::Hyperbolic);
        // attracting first: ∞ attracts under z ↦ 4z
        assert!(cls.attracting().unwrap().is_infinity());
        assert_eq!(cls.repelling().unwrap(), CPoint::Finite(c(0.0, 0.0)));
        assert!((cls.multiplier - c(4.0, 0.0)).norm() < 1e-9);

        let par = MoebiusMap::translation(c(1.0, 0.0));
        let cls = par.classify();
        assert_eq!(cls.tag, MapTag::Parabolic);
        assert!(cls.fixed_points[0].is_infinity());

        assert_eq!(MoebiusMap::identity().classify().tag, MapTag::Identity);

        let ell = MoebiusMap::new(c(0.8, 0.0), c(-0.6, 0.0), c(0.6, 0.0), c(0.8, 0.0)).unwrap();
        assert_eq!(ell.classify().tag, MapTag::Elliptic);

        let lox = MoebiusMap::dilation(c(2.0, 1.5));
        assert_eq!(lox.classify().tag, MapTag::Loxodromic);
    }

    #[test]
    fn serialization_roundtrip() {
        let g = MoebiusMap::new(c(1.3, 0.2), c(0.5, -1.0), c(0.2, 0.1), c(1.0, 0.3)).unwrap();
        let h = MoebiusMap::from_array(g.to_array()).unwrap();
        assert!(g.dist(&h) < 1e-14);
    }
}
