//! Cochain evaluators ω, θ, θ̌, u, ǔ, η, ϰ and the assembly of the Liouville
//! action functional over the chain ledgers.
//!
//! The primary route uses the absorbed forms θ̌, ǔ, which sweep the
//! integration constants into c(γ)-corrections of the 1-forms:
//!
//!   S = (i/2)(⟨ω, F⟩ − ⟨θ̌, L⟩ + ⟨ǔ, W⟩).
//!
//! A secondary route keeps θ, u and adds the constants ⟨η, V⟩ explicitly;
//! agreement of the two is a strong internal consistency check. All i/2
//! prefactors are resolved to real integrals at assembly time with the
//! conventions d²z = dx∧dy and (i/2) dz∧dz̄ = dx∧dy.

use num_complex::Complex64 as Complex;
use serde::Serialize;

use crate::cells::{AlternativeDomain, ChainSet, FundamentalPolygon};
use crate::error::Error;
use crate::field::ConformalField;
use crate::group::{GroupKind, MarkedGroup};
use crate::moebius::MoebiusMap;
use crate::quad::{integrate2d, integrate_path, SliceRegion};
use crate::Result;

const LOG4: f64 = 2.0 * std::f64::consts::LN_2; // 2 log 2

/// Bulk density |φ_z|² + e^φ; the 2-form is this density times dz∧dz̄ and
/// (i/2) dz∧dz̄ = dx∧dy.
pub fn omega_density(field: &ConformalField, z: Complex) -> Result<f64> {
    let j = field.jet(z)?;
    Ok(j.phi_z.norm_sqr() + j.phi.exp())
}

/// ϰ_δ = (γ″/γ′) dz − conj dz̄ with γ = δ⁻¹; identically zero for affine δ.
pub fn kappa_form(delta: &MoebiusMap, z: Complex) -> Result<(Complex, Complex)> {
    let gamma = delta.inverse();
    let w = gamma.log_deriv_ratio(z)?;
    Ok((w, -w.conj()))
}

/// θ_δ[φ] = (φ − ½ log|γ′|²)(γ″/γ′ dz − conj dz̄), γ = δ⁻¹.
pub fn theta_form(
    field: &ConformalField,
    delta: &MoebiusMap,
    z: Complex,
) -> Result<(Complex, Complex)> {
    let gamma = delta.inverse();
    let w = gamma.log_deriv_ratio(z)?;
    let dv = gamma.deriv(z)?;
    let pref = field.phi(z)? - 0.5 * dv.norm_sqr().ln();
    Ok((pref * w, -pref * w.conj()))
}

/// Absorbed form θ̌_δ = θ_δ − (2log2 + log|c(δ)|²) ϰ_δ; the correction term
/// vanishes identically when c(δ) = 0 because ϰ_δ does.
pub fn theta_check_form(
    field: &ConformalField,
    delta: &MoebiusMap,
    z: Complex,
) -> Result<(Complex, Complex)> {
    let (mut p, mut q) = theta_form(field, delta, z)?;
    if !delta.is_affine() {
        let corr = LOG4 + delta.c.norm_sqr().ln();
        let (kp, kq) = kappa_form(delta, z)?;
        p -= corr * kp;
        q -= corr * kq;
    }
    Ok((p, q))
}

// The two 1-form factors of u and its corrections:
//   A = (γ₂″/γ₂′)(γ₁ z) γ₁′(z) dz − conj,  B = (γ₁″/γ₁′)(z) dz − conj,
// with γᵢ = δᵢ⁻¹. A ≡ 0 iff c(δ₂) = 0, B ≡ 0 iff c(δ₁) = 0, and the
// cocycle identity gives A + B = ϰ_{δ₁δ₂}, which vanishes iff c(δ₁δ₂) = 0.
struct UFactors {
    a: Complex,
    b: Complex,
    log_g1p: f64,
    log_g2p_at: f64,
}

fn u_factors(d1: &MoebiusMap, d2: &MoebiusMap, z: Complex) -> Result<UFactors> {
    let g1 = d1.inverse();
    let g2 = d2.inverse();
    let g1z = g1.apply_finite(z)?;
    let g1p = g1.deriv(z)?;
    let a = g2.log_deriv_ratio(g1z)? * g1p;
    let b = g1.log_deriv_ratio(z)?;
    Ok(UFactors {
        a,
        b,
        log_g1p: g1p.norm_sqr().ln(),
        log_g2p_at: g2.deriv(g1z)?.norm_sqr().ln(),
    })
}

/// u_{δ₁,δ₂} = −½ log|γ₁′|²·A + ½ log|γ₂′∘γ₁|²·B (dz and dz̄ parts).
pub fn u_form(
    d1: &MoebiusMap,
    d2: &MoebiusMap,
    z: Complex,
) -> Result<(Complex, Complex)> {
    let f = u_factors(d1, d2, z)?;
    let p = -0.5 * f.log_g1p * f.a + 0.5 * f.log_g2p_at * f.b;
    let q = -(-0.5 * f.log_g1p * f.a.conj() + 0.5 * f.log_g2p_at * f.b.conj());
    Ok((p, q))
}

/// Absorbed ǔ = u − log|c(δ₂)|²·A − log|c(δ₁)|²·B + log|c(δ₁δ₂)|²·(A+B).
/// Each log multiplies a factor that vanishes identically when its c is
/// zero, so those terms are dropped exactly.
pub fn u_check_form(
    d1: &MoebiusMap,
    d2: &MoebiusMap,
    z: Complex,
) -> Result<(Complex, Complex)> {
    let f = u_factors(d1, d2, z)?;
    let mut p = -0.5 * f.log_g1p * f.a + 0.5 * f.log_g2p_at * f.b;
    if !d2.is_affine() {
        p -= d2.c.norm_sqr().ln() * f.a;
    }
    if !d1.is_affine() {
        p -= d1.c.norm_sqr().ln() * f.b;
    }
    let d12 = d1.compose(d2);
    if !d12.is_affine() {
        p += d12.c.norm_sqr().ln() * (f.a + f.b);
    }
    Ok((p, -p.conj()))
}

/// Integration constant η(p)_{δ₁,δ₂} = 4πi ε (2log2 + log|c(δ₂)|²), with
/// ε = ±1 by the betweenness of δ₂(∞) relative to p and δ₁⁻¹p on ℝ, zero
/// otherwise (and exactly zero for affine δ₂).
pub fn eta_constant(p: f64, d1: &MoebiusMap, d2: &MoebiusMap) -> Result<Complex> {
    if d2.is_affine() {
        return Ok(Complex::new(0.0, 0.0));
    }
    let g2inf = d2.a / d2.c;
    if g2inf.im.abs() > 1e-8 {
        return Err(Error::Numerical(
            "η expects a group with real generator data".into(),
        ));
    }
    let g2inf = g2inf.re;
    let d1invp = d1.inverse().apply_finite(Complex::new(p, 0.0))?;
    if d1invp.im.abs() > 1e-8 {
        return Err(Error::Numerical("δ₁⁻¹ p is not real".into()));
    }
    let d1invp = d1invp.re;
    let eps = if p < g2inf && g2inf < d1invp {
        1.0
    } else if p > g2inf && g2inf > d1invp {
        -1.0
    } else {
        0.0
    };
    Ok(Complex::new(0.0, 4.0 * std::f64::consts::PI * eps)
        * (LOG4 + d2.c.norm_sqr().ln()))
}

/// Pointwise group coboundary (δϖ)_{δ₁,δ₂} = δ₁·ϖ_{δ₂} − ϖ_{δ₁δ₂} + ϖ_{δ₁}
/// for a 1-form-valued 1-cochain.
pub fn coboundary_1form(
    form: &dyn Fn(&MoebiusMap, Complex) -> Result<(Complex, Complex)>,
    d1: &MoebiusMap,
    d2: &MoebiusMap,
    z: Complex,
) -> Result<(Complex, Complex)> {
    let g1 = d1.inverse();
    let w = g1.apply_finite(z)?;
    let dv = g1.deriv(z)?;
    let (p2, q2) = form(d2, w)?;
    let pulled = (p2 * dv, q2 * dv.conj());
    let d12 = d1.compose(d2);
    let (p12, q12) = form(&d12, z)?;
    let (p1, q1) = form(d1, z)?;
    Ok((pulled.0 - p12 + p1, pulled.1 - q12 + q1))
}

/// Itemized Liouville action.
#[derive(Debug, Clone, Serialize)]
pub struct ActionBreakdown {
    pub bulk: f64,
    pub edge: f64,
    pub path: f64,
    pub total: f64,
    pub area: f64,
    pub imag_residue: f64,
    pub error_budget: f64,
    pub terms: Vec<TermValue>,
    /// For Schottky groups: the classical functional value, offset from the
    /// homological normalization by 4π(2g−2) log 2.
    pub classic_form: Option<f64>,
    pub both_components: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermValue {
    pub chain_id: String,
    pub value: f64,
}

/// Evaluation route: absorbed forms (primary) or plain forms with the η
/// constants (secondary cross-check).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Absorbed,
    PlainWithEta,
}

#[derive(Debug, Clone, Copy)]
pub struct ActionOptions {
    pub route: Route,
    /// Evaluate on X ⊔ X̄ (Fuchsian): doubles the per-surface value for
    /// mirror-symmetric fields, or integrates mirror chains explicitly.
    pub both_components: bool,
    /// Integrate the mirror chains rather than doubling (verification mode).
    pub mirror_by_quadrature: bool,
    pub tol_bulk: f64,
    pub tol_path: f64,
}

impl Default for ActionOptions {
    fn default() -> Self {
        ActionOptions {
            route: Route::Absorbed,
            both_components: false,
            mirror_by_quadrature: false,
            tol_bulk: 1e-9,
            tol_path: 1e-10,
        }
    }
}

/// Evaluates the Liouville action over the chain ledgers.
pub fn evaluate_action(
    group: &MarkedGroup,
    field: &ConformalField,
    poly: &FundamentalPolygon,
    chains: &ChainSet,
    opts: &ActionOptions,
) -> Result<ActionBreakdown> {
    let residual = field.automorphy_residual(group, 20)?;
    if residual > 1e-7 {
        return Err(Error::Field(format!(
            "field automorphy residual {residual:.2e} exceeds 1e-7"
        )));
    }
    evaluate_action_unchecked(group, field, poly.region2d(), chains, opts)
}

/// Same as `evaluate_action` on an alternative fundamental domain.
pub fn evaluate_action_alternative(
    group: &MarkedGroup,
    field: &ConformalField,
    alt: &AlternativeDomain,
    opts: &ActionOptions,
) -> Result<ActionBreakdown> {
    evaluate_action_unchecked(group, field, &alt.region, &alt.chains, opts)
}

fn evaluate_action_unchecked(
    group: &MarkedGroup,
    field: &ConformalField,
    region: &dyn SliceRegion,
    chains: &ChainSet,
    opts: &ActionOptions,
) -> Result<ActionBreakdown> {
    if opts.both_components && group.kind != GroupKind::Fuchsian {
        return Err(Error::InvalidGroup(
            "both-components evaluation applies to Fuchsian groups".into(),
        ));
    }
    let mut terms = Vec::new();
    let mut err_budget = 0.0;

    // bulk: (i/2)⟨ω, F⟩ = ∬_F (|φ_z|² + e^φ) dx dy
    let bulk_q = integrate2d(region, &|z| omega_density(field, z).unwrap_or(f64::NAN), opts.tol_bulk);
    let bulk = bulk_q.value;
    err_budget += bulk_q.abs_error;
    terms.push(TermValue {
        chain_id: "bulk:F".into(),
        value: bulk,
    });
    let area_q = integrate2d(region, &|z| field.e_phi(z).unwrap_or(f64::NAN), opts.tol_bulk);
    let area = area_q.value;
    err_budget += area_q.abs_error;

    // edge and path pairings as complex numbers, then (i/2)(−⟨θ̌,L⟩+⟨ǔ,W⟩)
    let (edge_c, path_c) = pair_chains(field, chains, opts, &mut terms, &mut err_budget)?;

    let (mut edge_cx, mut path_cx) = (edge_c, path_c);
    let mut bulk_total = bulk;
    let mut area_total = area;
    if opts.both_components {
        if opts.mirror_by_quadrature || !field.mirror_symmetric() {
            if !field.mirror_symmetric() {
                return Err(Error::Field(
                    "both-components evaluation needs a mirror-symmetric field".into(),
                ));
            }
            // S_Γ = (i/2)(⟨ω,F−F̄⟩ − ⟨θ̌,L−L̄⟩ + ⟨ǔ,W−W̄⟩): mirror chains
            // enter with a minus sign.
            let mirror = chains.mirrored();
            let (edge_m, path_m) =
                pair_chains(field, &mirror, opts, &mut terms, &mut err_budget)?;
            edge_cx -= edge_m;
            path_cx -= path_m;
            // mirrored bulk: −(i/2)⟨ω, F̄⟩ = +∬ density over the mirrored set
            bulk_total *= 2.0;
            area_total *= 2.0;
        } else {
            bulk_total *= 2.0;
            area_total *= 2.0;
            edge_cx *= 2.0;
            path_cx *= 2.0;
        }
    }

    // (i/2)·(−edge + path); for the secondary route the η constants ride on
    // the path side ledger already.
    let ic = Complex::new(0.0, 0.5);
    let edge_contrib = ic * (-edge_cx);
    let path_contrib = ic * path_cx;
    let total_c = Complex::new(bulk_total, 0.0) + edge_contrib + path_contrib;
    let imag_residue = total_c.im;
    if imag_residue.abs() > 1e-8 * (1.0 + total_c.re.abs()) {
        return Err(Error::Numerical(format!(
            "action has imaginary residue {imag_residue:.3e}"
        )));
    }

    let classic_form = match group.kind {
        GroupKind::Schottky => {
            let offset = 4.0 * std::f64::consts::PI * (2.0 * group.genus as f64 - 2.0)
                * std::f64::consts::LN_2;
            Some(total_c.re - offset)
        }
        GroupKind::Fuchsian => None,
    };

    Ok(ActionBreakdown {
        bulk: bulk_total,
        edge: edge_contrib.re,
        path: path_contrib.re,
        total: total_c.re,
        area: area_total,
        imag_residue,
        error_budget: err_budget,
        terms,
        classic_form,
        both_components: opts.both_components,
    })
}

fn pair_chains(
    field: &ConformalField,
    chains: &ChainSet,
    opts: &ActionOptions,
    terms: &mut Vec<TermValue>,
    err_budget: &mut f64,
) -> Result<(Complex, Complex)> {
    let mut edge = Complex::new(0.0, 0.0);
    for t in &chains.l_terms {
        let form = |z: Complex| -> (Complex, Complex) {
            let r = match opts.route {
                Route::Absorbed => theta_check_form(field, &t.delta, z),
                Route::PlainWithEta => theta_form(field, &t.delta, z),
            };
            r.unwrap_or((Complex::new(f64::NAN, 0.0), Complex::new(f64::NAN, 0.0)))
        };
        let q = integrate_path(&t.curve, &form, opts.tol_path);
        edge += t.sign * q.value;
        *err_budget += q.abs_error;
        terms.push(TermValue {
            chain_id: format!("L:{}", t.name),
            value: (t.sign * q.value).im * 0.5,
        });
    }
    let mut path = Complex::new(0.0, 0.0);
    for t in &chains.w_terms {
        let form = |z: Complex| -> (Complex, Complex) {
            let r = match opts.route {
                Route::Absorbed => u_check_form(&t.d1, &t.d2, z),
                Route::PlainWithEta => u_form(&t.d1, &t.d2, z),
            };
            r.unwrap_or((Complex::new(f64::NAN, 0.0), Complex::new(f64::NAN, 0.0)))
        };
        let q = integrate_path(&t.path, &form, opts.tol_path);
        path += t.sign * q.value;
        *err_budget += q.abs_error;
        terms.push(TermValue {
            chain_id: format!("W:{}", t.name),
            value: (t.sign * q.value).im * 0.5,
        });
    }
    if opts.route == Route::PlainWithEta {
        // ⟨η, V⟩ rides with the path side: S = (i/2)(… + ⟨u,W⟩ + ⟨η,V⟩),
        // and ⟨η, V̄⟩ = ⟨η, V⟩ appears with the mirror sign through the
        // caller, matching the −(i/2)⟨Ψ, Σ̄⟩ orientation convention.
        let p = chains.basepoint.re;
        for t in &chains.v_terms {
            let eta = eta_constant(p, &t.d1, &t.d2)?;
            path += t.sign * eta;
            terms.push(TermValue {
                chain_id: format!("eta:{}", t.name),
                value: (t.sign * eta).im * 0.5,
            });
        }
    }
    Ok((edge, path))
}

/// ⟨ϰ, L⟩ by path quadrature; divided by 4πi this is the Euler
/// characteristic 2 − 2g.
pub fn varkappa_pairing(chains: &ChainSet, tol: f64) -> Result<Complex> {
    let mut total = Complex::new(0.0, 0.0);
    for t in &chains.l_terms {
        let form = |z: Complex| {
            kappa_form(&t.delta, z)
                .unwrap_or((Complex::new(f64::NAN, 0.0), Complex::new(f64::NAN, 0.0)))
        };
        let q = integrate_path(&t.curve, &form, tol);
        total += t.sign * q.value;
    }
    Ok(total)
}
