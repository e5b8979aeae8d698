//! Smooth conformal metrics e^φ|dz|² as automorphic fields with analytic
//! derivative evaluators, and Γ-invariant bump functions for variational
//! directions.
//!
//! A field φ satisfies φ∘γ + log|γ′|² = φ. The hyperbolic field on U ∪ L is
//! exact; Schottky metrics come from a truncated spherical Poincaré series
//! e^φ = Σ_γ |γ′|²(1+|γz|²)⁻², with the truncation tail reported. Invariant
//! functions are orbit sums of compactly supported bumps in the hyperbolic
//! distance, evaluated after folding the argument into a Dirichlet-type
//! domain so invariance is exact up to the folding tolerance.

use num_complex::Complex64 as Complex;

use crate::error::Error;
use crate::group::{enumerate, GroupKind, MarkedGroup};
use crate::moebius::MoebiusMap;
use crate::Result;

/// Value and derivatives of a field at a point: φ, φ_z and the real mixed
/// derivative φ_zz̄ (φ_z̄ is the conjugate of φ_z for real fields).
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub phi: f64,
    pub phi_z: Complex,
    pub phi_zzbar: f64,
}

impl FieldJet {
    pub fn phi_zbar(&self) -> Complex {
        self.phi_z.conj()
    }

    /// Gaussian curvature K = −2 e^{−φ} φ_zz̄.
    pub fn curvature(&self) -> f64 {
        -2.0 * (-self.phi).exp() * self.phi_zzbar
    }
}

/// A conformal metric on the domain of discontinuity.
#[derive(Debug, Clone)]
pub enum ConformalField {
    /// |dz|²/y² on U and its mirror on L: φ = −2 log|y|.
    Hyperbolic,
    /// (1+|z|²)⁻²|dz|²: the trivial-group Poincaré series (curvature +4).
    Spherical,
    /// Truncated spherical Poincaré series over a Schottky group.
    PoincareSeries {
        words: Vec<MoebiusMap>,
        cutoff: usize,
        tail: f64,
    },
    /// base + t·σ.
    Perturbed {
        base: Box<ConformalField>,
        sigma: InvariantFunction,
        t: f64,
    },
}

impl ConformalField {
    pub fn jet(&self, z: Complex) -> Result<FieldJet> {
        match self {
            ConformalField::Hyperbolic => {
                let y = z.im;
                if y.abs() < 1e-300 {
                    return Err(Error::Field("hyperbolic field evaluated on ℝ".into()));
                }
                Ok(FieldJet {
                    phi: -2.0 * y.abs().ln(),
                    phi_z: Complex::new(0.0, 1.0) / y,
                    phi_zzbar: 0.5 / (y * y),
                })
            }
            ConformalField::Spherical => {
                let s = 1.0 + z.norm_sqr();
                Ok(FieldJet {
                    phi: -2.0 * s.ln(),
                    phi_z: -2.0 * z.conj() / s,
                    phi_zzbar: -2.0 / (s * s),
                })
            }
            ConformalField::PoincareSeries { words, .. } => {
                let mut sum = 0.0;
                let mut sum_z = Complex::new(0.0, 0.0);
                let mut sum_mixed = 0.0;
                for w in words {
                    let den = w.c * z + w.d;
                    let dn2 = den.norm_sqr();
                    if dn2 < 1e-280 {
                        return Err(Error::Pole { z: (z.re, z.im) });
                    }
                    let gz = (w.a * z + w.b) / den;
                    let one_gz = 1.0 + gz.norm_sqr();
                    let h = 1.0 / (dn2 * dn2 * one_gz * one_gz);
                    let gp = 1.0 / (den * den);
                    let u = -2.0 * w.c / den - 2.0 * gp * gz.conj() / one_gz;
                    sum += h;
                    sum_z += h * u;
                    sum_mixed += h * (u.norm_sqr() - 2.0 * h);
                }
                if !(sum > 0.0) {
                    return Err(Error::Field("Poincaré series vanished".into()));
                }
                let phi_z = sum_z / sum;
                Ok(FieldJet {
                    phi: sum.ln(),
                    phi_z,
                    phi_zzbar: sum_mixed / sum - phi_z.norm_sqr(),
                })
            }
            ConformalField::Perturbed { base, sigma, t } => {
                let b = base.jet(z)?;
                let s = sigma.jet(z)?;
                Ok(FieldJet {
                    phi: b.phi + t * s.value,
                    phi_z: b.phi_z + t * s.d_z,
                    phi_zzbar: b.phi_zzbar + t * s.d_zzbar,
                })
            }
        }
    }

    pub fn phi(&self, z: Complex) -> Result<f64> {
        Ok(self.jet(z)?.phi)
    }

    pub fn e_phi(&self, z: Complex) -> Result<f64> {
        Ok(self.jet(z)?.phi.exp())
    }

    pub fn curvature(&self, z: Complex) -> Result<f64> {
        Ok(self.jet(z)?.curvature())
    }

    /// Max automorphy residual |φ(γz) + log|γ′(z)|² − φ(z)| over a
    /// deterministic sample set and all generators.
    pub fn automorphy_residual(&self, group: &MarkedGroup, samples: usize) -> Result<f64> {
        let pts = sample_points(group, samples)?;
        let mut worst = 0.0f64;
        for z in pts {
            let phi = self.phi(z)?;
            for gen in &group.generators {
                let gz = match gen.apply_finite(z) {
                    Ok(w) => w,
                    Err(_) => continue,
                };
                let dv = gen.deriv(z)?;
                let res = (self.phi(gz)? + dv.norm_sqr().ln() - phi).abs();
                worst = worst.max(res);
            }
        }
        Ok(worst)
    }

    pub fn provenance(&self) -> String {
        match self {
            ConformalField::Hyperbolic => "hyperbolic".into(),
            ConformalField::Spherical => "spherical".into(),
            ConformalField::PoincareSeries { cutoff, tail, .. } => {
                format!("poincare-series(N={cutoff}, tail≈{tail:.2e})")
            }
            ConformalField::Perturbed { base, t, .. } => {
                format!("perturbed({}, t={t})", base.provenance())
            }
        }
    }

    /// True for fields symmetric under z ↦ z̄ (all Fuchsian-side fields
    /// constructed here).
    pub fn mirror_symmetric(&self) -> bool {
        match self {
            ConformalField::Hyperbolic => true,
            ConformalField::Spherical => false,
            ConformalField::PoincareSeries { .. } => false,
            ConformalField::Perturbed { base, .. } => base.mirror_symmetric(),
        }
    }
}

/// Deterministic interior sample points of the fundamental domain.
pub fn sample_points(group: &MarkedGroup, n: usize) -> Result<Vec<Complex>> {
    let poly = crate::cells::build_polygon(group)?;
    let reg = poly.region2d();
    let (x0, x1) = reg.x_range();
    let mut out = Vec::new();
    let mut k = 0usize;
    while out.len() < n && k < 40 * n {
        k += 1;
        let fx = (k as f64 * 0.618_033_988_749_894_9).fract();
        let fy = (k as f64 * 0.381_966_011_250_105_1).fract();
        let x = x0 + (x1 - x0) * fx;
        for (lo, hi) in reg.slices(x) {
            if hi > lo {
                // log placement in y matches the hyperbolic geometry of
                // Fuchsian domains; Schottky slices may cross y = 0
                let y = if lo > 0.0 {
                    lo * (hi / lo).powf(0.1 + 0.8 * fy)
                } else {
                    lo + (hi - lo) * (0.1 + 0.8 * fy)
                };
                out.push(Complex::new(x, y));
                break;
            }
        }
    }
    Ok(out)
}

/// The hyperbolic metric field of a Fuchsian group (exactly automorphic).
pub fn hyperbolic_field(group: &MarkedGroup) -> Result<ConformalField> {
    if group.kind != GroupKind::Fuchsian {
        return Err(Error::Field(
            "the hyperbolic field is available for Fuchsian groups only".into(),
        ));
    }
    Ok(ConformalField::Hyperbolic)
}

/// Truncated spherical Poincaré series metric for a classical Schottky
/// group: e^φ(z) = Σ_{|γ| ≤ N} |γ′(z)|² (1+|γz|²)⁻².
///
/// The tail bound is geometric: with s_N the largest length-N shell sum over
/// a fundamental-domain sample and ρ the last shell ratio, the dropped mass
/// is below s_N ρ/(1−ρ).
pub fn poincare_series_field(group: &MarkedGroup, cutoff: usize) -> Result<ConformalField> {
    if group.kind != GroupKind::Schottky {
        return Err(Error::Field(
            "Poincaré-series metrics are constructed for Schottky groups".into(),
        ));
    }
    if cutoff < 3 {
        return Err(Error::Field("word-length cutoff must be ≥ 3".into()));
    }
    let words_all = enumerate(group, cutoff);
    let words: Vec<MoebiusMap> = words_all.iter().map(|w| w.element).collect();
    let lens: Vec<usize> = words_all.iter().map(|w| w.letters.len()).collect();

    let pts = sample_points(group, 24)?;
    let shell_sum = |len: usize, z: Complex| -> f64 {
        let mut s = 0.0;
        for (w, &l) in words.iter().zip(lens.iter()) {
            if l == len {
                let den = w.c * z + w.d;
                let gz = (w.a * z + w.b) / den;
                s += 1.0 / (den.norm_sqr().powi(2) * (1.0 + gz.norm_sqr()).powi(2));
            }
        }
        s
    };
    let mut tail = 0.0f64;
    for &z in &pts {
        let s_last = shell_sum(cutoff, z);
        let s_prev = shell_sum(cutoff - 1, z);
        if s_prev > 0.0 {
            let rho = (s_last / s_prev).min(0.95);
            tail = tail.max(s_last * rho / (1.0 - rho));
        }
    }
    if tail > 1e-6 {
        return Err(Error::Field(format!(
            "Poincaré tail estimate {tail:.2e} exceeds 1e-6; increase the cutoff"
        )));
    }
    Ok(ConformalField::PoincareSeries {
        words,
        cutoff,
        tail,
    })
}

/// φ + t·σ.
pub fn perturb(base: &ConformalField, sigma: &InvariantFunction, t: f64) -> ConformalField {
    ConformalField::Perturbed {
        base: Box::new(base.clone()),
        sigma: sigma.clone(),
        t,
    }
}

// ---------------------------------------------------------------------------
// invariant functions
// ---------------------------------------------------------------------------

/// Jet of a Γ-invariant scalar.
#[derive(Debug, Clone, Copy)]
pub struct ScalarJet {
    pub value: f64,
    pub d_z: Complex,
    pub d_zzbar: f64,
}

/// Orbit sum of hyperbolic-distance bumps, Γ-invariant on the upper
/// half-plane and extended to the lower one by mirror symmetry.
#[derive(Debug, Clone)]
pub struct InvariantFunction {
    pub bumps: Vec<Bump>,
    fold_letters: Vec<MoebiusMap>,
    fold_center: Complex,
}

#[derive(Debug, Clone)]
pub struct Bump {
    /// Orbit points γ(center) reaching the folded evaluation region.
    pub orbit: Vec<Complex>,
    /// Hyperbolic support radius.
    pub width: f64,
    pub coef: f64,
}

/// cosh of the hyperbolic distance between upper half-plane points.
pub fn cosh_dist(z: Complex, w: Complex) -> f64 {
    1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)
}

// arccosh² and its first two derivatives, stable near q = 1.
fn acosh2(q: f64) -> f64 {
    let u = q - 1.0;
    if u < 1e-4 {
        u * (2.0 + u * (-1.0 / 3.0 + u * (4.0 / 45.0 - u / 35.0)))
    } else {
        let a = q.acosh();
        a * a
    }
}

fn acosh2_d1(q: f64) -> f64 {
    let u = q - 1.0;
    if u < 1e-4 {
        2.0 + u * (-2.0 / 3.0 + u * (4.0 / 15.0 - u * 4.0 / 35.0))
    } else {
        2.0 * q.acosh() / (q * q - 1.0).sqrt()
    }
}

fn acosh2_d2(q: f64) -> f64 {
    let u = q - 1.0;
    if u < 1e-3 {
        -2.0 / 3.0 + u * (8.0 / 15.0 - u * 12.0 / 35.0)
    } else {
        (2.0 - q * acosh2_d1(q)) / (q * q - 1.0)
    }
}

// bump profile in s = d², support s < w²: exp(1 − w²/(w²−s))
fn profile(s: f64, w2: f64) -> (f64, f64, f64) {
    if s >= w2 {
        return (0.0, 0.0, 0.0);
    }
    let r = w2 - s;
    let b = (1.0 - w2 / r).exp();
    let b1 = -b * w2 / (r * r);
    let b2 = b * (w2 * w2 / (r * r * r * r) - 2.0 * w2 / (r * r * r));
    (b, b1, b2)
}

impl InvariantFunction {
    /// Greedy distance descent towards the reference point; returns the
    /// folded representative and the fold map m with m(z) = representative.
    fn fold(&self, z: Complex) -> (Complex, MoebiusMap) {
        let mut cur = z;
        let mut m = MoebiusMap::identity();
        let mut d = cosh_dist(cur, self.fold_center);
        for _ in 0..200 {
            let mut improved = false;
            for g in &self.fold_letters {
                if let Ok(w) = g.apply_finite(cur) {
                    if w.im > 0.0 {
                        let dw = cosh_dist(w, self.fold_center);
                        if dw < d - 1e-14 {
                            cur = w;
                            d = dw;
                            m = g.compose(&m);
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (cur, m)
    }

    /// Value and derivatives; the lower half-plane is handled by mirror
    /// symmetry.
    pub fn jet(&self, z: Complex) -> Result<ScalarJet> {
        if z.im.abs() < 1e-300 {
            return Err(Error::Field("invariant function evaluated on ℝ".into()));
        }
        let mirrored = z.im < 0.0;
        let zu = if mirrored { z.conj() } else { z };
        let (w, fold_map) = self.fold(zu);
        let jet_w = self.local_jet(w);
        // chain rule through the fold: σ(z) = σ̃(m z)
        let dv = fold_map.deriv(zu).unwrap_or(Complex::new(1.0, 0.0));
        let mut d_z = jet_w.d_z * dv;
        let d_zzbar = jet_w.d_zzbar * dv.norm_sqr();
        if mirrored {
            d_z = d_z.conj();
        }
        Ok(ScalarJet {
            value: jet_w.value,
            d_z,
            d_zzbar,
        })
    }

    fn local_jet(&self, z: Complex) -> ScalarJet {
        let y = z.im;
        let mut value = 0.0;
        let mut d_z = Complex::new(0.0, 0.0);
        let mut d_zzbar = 0.0;
        for bump in &self.bumps {
            let w2 = bump.width * bump.width;
            for &c in &bump.orbit {
                let q = cosh_dist(z, c);
                let s = acosh2(q);
                if s >= w2 {
                    continue;
                }
                let (b, b1, b2) = profile(s, w2);
                let h1 = acosh2_d1(q);
                let h2 = acosh2_d2(q);
                let v = c.im;
                let qz = (z.conj() - c.conj()) / (2.0 * y * v)
                    + Complex::new(0.0, 1.0) * (z - c).norm_sqr() / (4.0 * y * y * v);
                let qzzbar = q / (2.0 * y * y);
                value += bump.coef * b;
                d_z += bump.coef * b1 * h1 * qz;
                d_zzbar += bump.coef
                    * (b2 * h1 * h1 * qz.norm_sqr() + b1 * (h2 * qz.norm_sqr() + h1 * qzzbar));
            }
        }
        ScalarJet {
            value,
            d_z,
            d_zzbar,
        }
    }

    pub fn value(&self, z: Complex) -> Result<f64> {
        Ok(self.jet(z)?.value)
    }

    /// Max invariance residual |σ(γz) − σ(z)| over deterministic samples.
    pub fn invariance_residual(&self, group: &MarkedGroup, samples: usize) -> Result<f64> {
        let pts = sample_points(group, samples)?;
        let mut worst = 0.0f64;
        for z in pts {
            let v = self.value(z)?;
            for gen in &group.generators {
                if let Ok(gz) = gen.apply_finite(z) {
                    worst = worst.max((self.value(gz)? - v).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Fraction of fundamental-domain samples inside the support.
    pub fn support_fraction(&self, group: &MarkedGroup, samples: usize) -> Result<f64> {
        let pts = sample_points(group, samples)?;
        let mut inside = 0usize;
        for &z in &pts {
            if self.value(z)?.abs() > 1e-300 {
                inside += 1;
            }
        }
        Ok(inside as f64 / pts.len() as f64)
    }

    /// Linear combination Σ c_j σ_j of bump functions over one group.
    pub fn combine(parts: &[(&InvariantFunction, f64)]) -> Result<InvariantFunction> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Field("empty combination".into()))?
            .0;
        let mut bumps = Vec::new();
        for (f, c) in parts {
            for b in &f.bumps {
                bumps.push(Bump {
                    orbit: b.orbit.clone(),
                    width: b.width,
                    coef: b.coef * c,
                });
            }
        }
        Ok(InvariantFunction {
            bumps,
            fold_letters: first.fold_letters.clone(),
            fold_center: first.fold_center,
        })
    }
}

/// Γ-invariant bump: the orbit sum of a smooth compactly supported bump of
/// the given hyperbolic radius around `center`.
pub fn invariant_bump(
    group: &MarkedGroup,
    center: Complex,
    width: f64,
) -> Result<InvariantFunction> {
    if group.kind != GroupKind::Fuchsian {
        return Err(Error::Field(
            "invariant bumps are built for Fuchsian groups".into(),
        ));
    }
    if !(width > 0.0) {
        return Err(Error::Field("bump width must be positive".into()));
    }
    if center.im <= 0.0 {
        return Err(Error::Field(
            "bump center must lie in the upper half-plane".into(),
        ));
    }
    let poly = crate::cells::build_polygon(group)?;
    let x0 = poly.barycenter();
    // Folded arguments stay within the Dirichlet radius of x0; include every
    // orbit point whose support ball can reach that region.
    let r_dir = poly
        .vertices
        .iter()
        .map(|&v| cosh_dist(v, x0).acosh())
        .fold(0.0, f64::max);
    if width > r_dir + 2.0 {
        return Err(Error::Field(format!(
            "width {width} too large: the orbit sum is not locally finite on the domain"
        )));
    }
    let reach = r_dir + width + 0.5;
    let mut orbit = Vec::new();
    for w in enumerate(group, 5) {
        if let Ok(p) = w.element.apply_finite(center) {
            if p.im > 0.0 && cosh_dist(p, x0).acosh() <= reach {
                orbit.push(p);
            }
        }
    }
    let mut fold_letters = Vec::new();
    for g in &group.generators {
        fold_letters.push(*g);
        fold_letters.push(g.inverse());
    }
    Ok(InvariantFunction {
        bumps: vec![Bump {
            orbit,
            width,
            coef: 1.0,
        }],
        fold_letters,
        fold_center: x0,
    })
}

/// Metric specification accepted by the CLI.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "metric", rename_all = "lowercase")]
pub enum MetricSpec {
    Hyperbolic,
    Poincare {
        #[serde(rename = "N")]
        n: usize,
    },
    Perturbed {
        t: f64,
        bump: BumpSpec,
    },
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BumpSpec {
    pub center: [f64; 2],
    pub width: f64,
}

/// Builds a field from its CLI specification.
pub fn field_from_spec(group: &MarkedGroup, spec: &MetricSpec) -> Result<ConformalField> {
    match spec {
        MetricSpec::Hyperbolic => hyperbolic_field(group),
        MetricSpec::Poincare { n } => poincare_series_field(group, *n),
        MetricSpec::Perturbed { t, bump } => {
            let base = hyperbolic_field(group)?;
            let sigma = invariant_bump(
                group,
                Complex::new(bump.center[0], bump.center[1]),
                bump.width,
            )?;
            Ok(perturb(&base, &sigma, *t))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{
        build_fuchsian, build_schottky, conjugate_infinity_to_limit_set, CirclePairSpec,
        SchottkyCircleData,
    };

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn schottky2() -> MarkedGroup {
        conjugate_infinity_to_limit_set(
            &build_schottky(&SchottkyCircleData {
                pairs: vec![
                    CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                    CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
                ],
            })
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn hyperbolic_field_values() {
        let f = ConformalField::Hyperbolic;
        let j = f.jet(c(0.0, 1.0)).unwrap();
        assert!(j.phi.abs() < 1e-14);
        assert!((j.phi.exp() - 1.0).abs() < 1e-14);
        for k in 1..100 {
            let z = c(-3.0 + 0.06 * k as f64, 0.1 + 0.05 * k as f64);
            let j = f.jet(z).unwrap();
            // |φ_z|² = e^φ, so the bulk density is 2e^φ
            assert!((j.phi_z.norm_sqr() - j.phi.exp()).abs() < 1e-12 * j.phi.exp());
            assert!((j.curvature() + 1.0).abs() < 1e-12);
        }
        let j = f.jet(c(0.3, -2.0)).unwrap();
        assert!((j.curvature() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_field_is_exactly_automorphic() {
        let g = build_fuchsian(2).unwrap();
        let f = hyperbolic_field(&g).unwrap();
        assert!(f.automorphy_residual(&g, 40).unwrap() < 1e-11);
    }

    #[test]
    fn spherical_curvature_is_plus_four() {
        let f = ConformalField::Spherical;
        for k in 0..30 {
            let z = c(0.2 * k as f64 - 3.0, 0.1 + 0.2 * k as f64);
            assert!((f.curvature(z).unwrap() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn poincare_series_residual_decreases_with_cutoff() {
        let g = schottky2();
        let mut last = f64::INFINITY;
        for n in [3usize, 4, 5] {
            let f = poincare_series_field(&g, n).unwrap();
            let r = f.automorphy_residual(&g, 24).unwrap();
            assert!(r < last, "residual did not decrease: {r} after {last}");
            last = r;
        }
        assert!(last < 1e-5, "cutoff-5 residual {last}");
    }

    #[test]
    fn poincare_identity_term_positivity() {
        let g = schottky2();
        let f = poincare_series_field(&g, 3).unwrap();
        if let ConformalField::PoincareSeries { words, .. } = &f {
            let z = {
                let poly = crate::cells::build_polygon(&g).unwrap();
                poly.barycenter()
            };
            let full = f.e_phi(z).unwrap();
            let without: f64 = words
                .iter()
                .skip(1)
                .map(|w| {
                    let den = w.c * z + w.d;
                    let gz = (w.a * z + w.b) / den;
                    1.0 / (den.norm_sqr().powi(2) * (1.0 + gz.norm_sqr()).powi(2))
                })
                .sum();
            let id_term = 1.0 / (1.0 + z.norm_sqr()).powi(2);
            assert!(full > without);
            assert!((full - without - id_term).abs() < 1e-12 * full);
        } else {
            panic!("expected a series field");
        }
    }

    #[test]
    fn field_jets_match_finite_differences() {
        let g = schottky2();
        let z0 = crate::cells::build_polygon(&g).unwrap().barycenter();
        let fields: Vec<ConformalField> =
            vec![ConformalField::Spherical, poincare_series_field(&g, 4).unwrap()];
        let h = 1e-5;
        for f in &fields {
            let j = f.jet(z0).unwrap();
            let fx = (f.phi(z0 + h).unwrap() - f.phi(z0 - h).unwrap()) / (2.0 * h);
            let fy =
                (f.phi(z0 + c(0.0, h)).unwrap() - f.phi(z0 - c(0.0, h)).unwrap()) / (2.0 * h);
            let fd_z = Complex::new(fx, -fy) / 2.0;
            assert!((j.phi_z - fd_z).norm() < 1e-6, "phi_z mismatch");
            let lap = (f.phi(z0 + h).unwrap()
                + f.phi(z0 - h).unwrap()
                + f.phi(z0 + c(0.0, h)).unwrap()
                + f.phi(z0 - c(0.0, h)).unwrap()
                - 4.0 * f.phi(z0).unwrap())
                / (h * h);
            assert!((j.phi_zzbar - lap / 4.0).abs() < 1e-4 * (1.0 + j.phi_zzbar.abs()));
        }
    }

    #[test]
    fn bump_center_value_and_invariance() {
        let g = build_fuchsian(2).unwrap();
        let poly = crate::cells::build_polygon(&g).unwrap();
        let center = poly.barycenter();
        let sig = invariant_bump(&g, center, 0.45).unwrap();
        // B(0) = 1 plus exponentially small orbit corrections
        let v = sig.value(center).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "center value {v}");
        assert!(sig.invariance_residual(&g, 40).unwrap() < 1e-9);
        let frac = sig.support_fraction(&g, 60).unwrap();
        assert!(frac < 1.0, "small bump must not cover the whole domain");
        assert!(frac > 0.0);
    }

    #[test]
    fn bump_jet_matches_finite_differences() {
        let g = build_fuchsian(2).unwrap();
        let poly = crate::cells::build_polygon(&g).unwrap();
        let center = poly.barycenter();
        let sig = invariant_bump(&g, center, 0.6).unwrap();
        let z = center + c(0.05, 0.03);
        let j = sig.jet(z).unwrap();
        let h = 1e-5;
        let v = |z: Complex| sig.value(z).unwrap();
        let fx = (v(z + h) - v(z - h)) / (2.0 * h);
        let fy = (v(z + c(0.0, h)) - v(z - c(0.0, h))) / (2.0 * h);
        let fd_z = Complex::new(fx, -fy) / 2.0;
        assert!((j.d_z - fd_z).norm() < 1e-6, "σ_z {} vs fd {}", j.d_z, fd_z);
        let lap = (v(z + h) + v(z - h) + v(z + c(0.0, h)) + v(z - c(0.0, h)) - 4.0 * v(z))
            / (h * h);
        assert!((j.d_zzbar - lap / 4.0).abs() < 1e-4);
    }

    #[test]
    fn perturb_basics() {
        let g = build_fuchsian(2).unwrap();
        let base = hyperbolic_field(&g).unwrap();
        let poly = crate::cells::build_polygon(&g).unwrap();
        let center = poly.barycenter();
        let sig = invariant_bump(&g, center, 0.5).unwrap();
        let z = center + c(0.1, 0.05);
        let f0 = perturb(&base, &sig, 0.0);
        assert!((f0.phi(z).unwrap() - base.phi(z).unwrap()).abs() < 1e-15);

        let ft = perturb(&base, &sig, 0.3);
        let rb = base.automorphy_residual(&g, 30).unwrap();
        let rs = sig.invariance_residual(&g, 30).unwrap();
        let rp = ft.automorphy_residual(&g, 30).unwrap();
        assert!(rp <= rb + 0.3 * rs + 1e-12);

        // K(t) = −2 e^{−φ−tσ}(φ+tσ)_zz̄ ⇒ K′(0) = −σK(0) − 2e^{−φ}σ_zz̄
        let h = 1e-3;
        let kp = perturb(&base, &sig, h).curvature(z).unwrap();
        let km = perturb(&base, &sig, -h).curvature(z).unwrap();
        let slope = (kp - km) / (2.0 * h);
        let jb = base.jet(z).unwrap();
        let js = sig.jet(z).unwrap();
        let expected = -js.value * jb.curvature() - 2.0 * (-jb.phi).exp() * js.d_zzbar;
        assert!(
            (slope - expected).abs() < 1e-4 * (1.0 + expected.abs()),
            "slope {slope} vs {expected}"
        );
    }

    #[test]
    fn bump_rejects_bad_inputs() {
        let g = build_fuchsian(2).unwrap();
        assert!(invariant_bump(&g, c(0.0, 0.5), -1.0).is_err());
        assert!(invariant_bump(&g, c(0.0, -0.5), 0.4).is_err());
        assert!(invariant_bump(&g, c(0.0, 0.5), 50.0).is_err());
    }
}
