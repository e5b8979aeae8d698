//! Construction of marked Fuchsian groups from regular hyperbolic polygons
//! and of classical Schottky groups from circle-pair data, plus word
//! enumeration and normalization.
//!
//! Fuchsian groups of genus g are generated by the side pairings of the
//! regular hyperbolic 4g-gon with vertex angle 2π/4g, built in the unit-disk
//! model and then moved to the upper half-plane. The marking follows the
//! standard conventions: generators α₁, β₁, …, α_g, β_g with
//! γ₁⋯γ_g = id, γ_k = α_kβ_kα_k⁻¹β_k⁻¹, and the polygon boundary reading
//! a₁ b₁′ a₁′⁻¹ b₁⁻¹ a₂ … counterclockwise with α_k(a_k′) = a_k,
//! β_k(b_k′) = b_k.

use num_complex::Complex64 as Complex;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::moebius::{CPoint, MoebiusMap};
use crate::Result;

/// A Euclidean circle in ℂ.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex,
    pub radius: f64,
}

impl Circle {
    pub fn new(center: Complex, radius: f64) -> Self {
        Circle { center, radius }
    }

    pub fn contains(&self, z: Complex) -> bool {
        (z - self.center).norm() < self.radius
    }

    pub fn point(&self, angle: f64) -> Complex {
        self.center + self.radius * Complex::new(angle.cos(), angle.sin())
    }

    /// Circle through three points (error when collinear).
    pub fn through(p: Complex, q: Complex, r: Complex) -> Result<Circle> {
        let (x1, y1) = (p.re, p.im);
        let (x2, y2) = (q.re, q.im);
        let (x3, y3) = (r.re, r.im);
        let d = 2.0 * (x1 * (y2 - y3) + x2 * (y3 - y1) + x3 * (y1 - y2));
        if d.abs() < 1e-13 * (p.norm() + q.norm() + r.norm() + 1.0).powi(2) {
            return Err(Error::Numerical("circle through collinear points".into()));
        }
        let s1 = p.norm_sqr();
        let s2 = q.norm_sqr();
        let s3 = r.norm_sqr();
        let ux = (s1 * (y2 - y3) + s2 * (y3 - y1) + s3 * (y1 - y2)) / d;
        let uy = (s1 * (x3 - x2) + s2 * (x1 - x3) + s3 * (x2 - x1)) / d;
        let center = Complex::new(ux, uy);
        Ok(Circle::new(center, (p - center).norm()))
    }

    /// Image circle under a Möbius map (valid when no point of the circle
    /// maps to ∞).
    pub fn map(&self, m: &MoebiusMap) -> Result<Circle> {
        let p = m.apply_finite(self.point(0.0))?;
        let q = m.apply_finite(self.point(2.0 * std::f64::consts::FRAC_PI_3))?;
        let r = m.apply_finite(self.point(4.0 * std::f64::consts::FRAC_PI_3))?;
        Circle::through(p, q, r)
    }

    fn disjoint_closed(&self, other: &Circle) -> bool {
        (self.center - other.center).norm() > self.radius + other.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Fuchsian,
    Schottky,
}

/// A marked group together with the construction data needed downstream:
/// polygon vertices for Fuchsian groups, pairing circles for Schottky groups.
///
/// Fuchsian generators are stored interleaved: [α₁, β₁, α₂, β₂, …]. Schottky
/// generators are [γ₁, …, γ_g].
#[derive(Debug, Clone)]
pub struct MarkedGroup {
    pub kind: GroupKind,
    pub genus: usize,
    pub generators: Vec<MoebiusMap>,
    /// Conjugation applied relative to the originally constructed model.
    pub normalization_record: MoebiusMap,
    /// Fuchsian: the 4g polygon vertices in the upper half-plane, in
    /// counterclockwise boundary order starting at a₁(0).
    pub fuchsian_vertices: Vec<Complex>,
    /// Schottky: pairs (C_k, C_k′) with γ_k mapping the exterior of C_k onto
    /// the interior disk of C_k′. `unbounded` marks circles whose paired
    /// disk is the unbounded complement (possible after conjugating ∞ into
    /// the limit set).
    pub schottky_pairs: Vec<SchottkyPair>,
}

#[derive(Debug, Clone, Copy)]
pub struct SchottkyPair {
    pub c1: Circle,
    pub c2: Circle,
    /// True when the "disk" bounded by c2 is the unbounded component, i.e.
    /// the interior of the pair target contains ∞.
    pub c2_unbounded: bool,
}

/// Circle-pair input for a classical Schottky group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchottkyCircleData {
    pub pairs: Vec<CirclePairSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CirclePairSpec {
    pub c1: [f64; 2],
    pub r1: f64,
    pub c2: [f64; 2],
    pub r2: f64,
}

/// A group element together with its generator word.
///
/// Letters are signed 1-based generator indices: +k is the k-th generator,
/// −k its inverse (Fuchsian index order α₁, β₁, α₂, β₂, …).
#[derive(Debug, Clone)]
pub struct GroupWord {
    pub letters: Vec<i32>,
    pub element: MoebiusMap,
}

impl MarkedGroup {
    pub fn alpha(&self, k: usize) -> &MoebiusMap {
        assert_eq!(self.kind, GroupKind::Fuchsian);
        &self.generators[2 * k]
    }

    pub fn beta(&self, k: usize) -> &MoebiusMap {
        assert_eq!(self.kind, GroupKind::Fuchsian);
        &self.generators[2 * k + 1]
    }

    /// γ_k = α_k β_k α_k⁻¹ β_k⁻¹.
    pub fn commutator(&self, k: usize) -> MoebiusMap {
        let a = self.alpha(k);
        let b = self.beta(k);
        a.compose(b).compose(&a.inverse()).compose(&b.inverse())
    }

    /// Residual of the surface relation γ₁⋯γ_g = ±id.
    pub fn relation_residual(&self) -> f64 {
        match self.kind {
            GroupKind::Fuchsian => {
                let mut m = MoebiusMap::identity();
                for k in 0..self.genus {
                    m = m.compose(&self.commutator(k));
                }
                m.dist(&MoebiusMap::identity())
            }
            GroupKind::Schottky => 0.0,
        }
    }

    /// Applies a Möbius conjugation to the whole marked structure.
    pub fn conjugate(&self, m: &MoebiusMap) -> Result<MarkedGroup> {
        let generators = self
            .generators
            .iter()
            .map(|g| g.conjugate_by(m))
            .collect::<Vec<_>>();
        let fuchsian_vertices = self
            .fuchsian_vertices
            .iter()
            .map(|&v| m.apply_finite(v))
            .collect::<Result<Vec<_>>>()?;
        let schottky_pairs = self
            .schottky_pairs
            .iter()
            .map(|p| map_pair(p, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(MarkedGroup {
            kind: self.kind,
            genus: self.genus,
            generators,
            normalization_record: m.compose(&self.normalization_record),
            fuchsian_vertices,
            schottky_pairs,
        })
    }
}

fn map_pair(p: &SchottkyPair, m: &MoebiusMap) -> Result<SchottkyPair> {
    // A circle maps to a circle; whether the paired disk stays bounded is
    // decided by tracking the image of a point inside the bounded disk.
    let img1 = p.c1.map(m)?;
    let img2 = p.c2.map(m)?;
    let inside2 = if p.c2_unbounded {
        // representative far away from c2
        p.c2.center + (p.c2.radius * 1e3) * Complex::new(1.0, 0.0)
    } else {
        p.c2.center
    };
    let w = m.apply(CPoint::Finite(inside2));
    let c2_unbounded = match w {
        CPoint::Infinity => true,
        CPoint::Finite(w) => !img2.contains(w),
    };
    // c1's disk must stay bounded for the downstream geometry.
    let w1 = m.apply(CPoint::Finite(p.c1.center));
    let c1_ok = matches!(w1, CPoint::Finite(w) if img1.contains(w));
    if !c1_ok {
        return Err(Error::InvalidGroup(
            "conjugation moved ∞ into a source pairing disk".into(),
        ));
    }
    Ok(SchottkyPair {
        c1: img1,
        c2: img2,
        c2_unbounded,
    })
}

/// Geodesic midpoint between two points of the unit disk.
fn disk_midpoint(p: Complex, q: Complex) -> Complex {
    // translate p to 0, take the radial hyperbolic midpoint, translate back
    let t = (q - p) / (Complex::new(1.0, 0.0) - p.conj() * q);
    let m = (t.norm().atanh() / 2.0).tanh() * t / t.norm();
    (m + p) / (Complex::new(1.0, 0.0) + p.conj() * m)
}

/// Builds the marked Fuchsian group of the given genus from the regular
/// hyperbolic 4g-gon, normalized so that α₁ is the dilation with attracting
/// fixed point 0 and repelling fixed point ∞, and β₁ has its positive-axis
/// fixed point at 1.
pub fn build_fuchsian(genus: usize) -> Result<MarkedGroup> {
    if genus < 2 {
        return Err(Error::InvalidGroup(format!(
            "genus must be ≥ 2, got {genus}"
        )));
    }
    let g = genus;
    let n = 4 * g;
    // circumradius: cosh R = cot²(π/4g) for vertex angle 2π/4g
    let cot = 1.0 / (std::f64::consts::PI / n as f64).tan();
    let rh = (cot * cot).acosh();
    let re = (rh / 2.0).tanh();
    let verts_d: Vec<Complex> = (0..n)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            re * Complex::new(th.cos(), th.sin())
        })
        .collect();

    // side pairings in the disk: α_{k+1}: a′ (v[4k+3] → v[4k+2]) ↦ a (v[4k] → v[4k+1]),
    // β_{k+1}: b′ (v[4k+1] → v[4k+2]) ↦ b (v[4k+4] → v[4k+3])
    let v = |j: usize| verts_d[j % n];
    let mut gens_d = Vec::with_capacity(2 * g);
    for k in 0..g {
        let (ap0, ap1) = (v(4 * k + 3), v(4 * k + 2));
        let (a0, a1) = (v(4 * k), v(4 * k + 1));
        let alpha = MoebiusMap::map_points(
            [ap0.into(), disk_midpoint(ap0, ap1).into(), ap1.into()],
            [a0.into(), disk_midpoint(a0, a1).into(), a1.into()],
        )?;
        let (bp0, bp1) = (v(4 * k + 1), v(4 * k + 2));
        let (b0, b1) = (v(4 * k + 4), v(4 * k + 3));
        let beta = MoebiusMap::map_points(
            [bp0.into(), disk_midpoint(bp0, bp1).into(), bp1.into()],
            [b0.into(), disk_midpoint(b0, b1).into(), b1.into()],
        )?;
        gens_d.push(alpha);
        gens_d.push(beta);
    }

    // Cayley transform to the upper half-plane: z ↦ i(1+z)/(1−z).
    let cayley = MoebiusMap::new(
        Complex::new(0.0, 1.0),
        Complex::new(0.0, 1.0),
        Complex::new(-1.0, 0.0),
        Complex::new(1.0, 0.0),
    )?;
    let generators = gens_d
        .iter()
        .map(|m| m.conjugate_by(&cayley))
        .collect::<Vec<_>>();
    let fuchsian_vertices = verts_d
        .iter()
        .map(|&z| cayley.apply_finite(z))
        .collect::<Result<Vec<_>>>()?;

    let group = MarkedGroup {
        kind: GroupKind::Fuchsian,
        genus,
        generators,
        normalization_record: MoebiusMap::identity(),
        fuchsian_vertices,
        schottky_pairs: vec![],
    };
    let group = normalize(&group)?;
    let res = group.relation_residual();
    if res > 1e-10 {
        return Err(Error::InvalidGroup(format!(
            "surface relation residual {res:.3e} exceeds 1e-10"
        )));
    }
    Ok(group)
}

/// Conjugates a Fuchsian marked group so that α₁ becomes the contraction
/// z ↦ λz (0 < λ < 1, attracting fixed point 0, repelling ∞) and the fixed
/// point of β₁ lying on the positive axis moves to 1.
pub fn normalize(group: &MarkedGroup) -> Result<MarkedGroup> {
    if group.kind != GroupKind::Fuchsian {
        return Err(Error::InvalidGroup("normalize expects a Fuchsian group".into()));
    }
    let a1 = group.alpha(0).classify();
    if !a1.is_loxodromic_or_hyperbolic() {
        return Err(Error::InvalidGroup(
            "α₁ must be hyperbolic to normalize the marking".into(),
        ));
    }
    let p_att = real_of(a1.attracting().unwrap())?;
    let p_rep = real_of(a1.repelling().unwrap())?;
    // z ↦ ±(z − p_att)/(z − p_rep) with the sign making det > 0 (U → U).
    let m0 = match (p_att, p_rep) {
        (RealPt::Finite(p0), RealPt::Finite(p1)) => {
            let m = MoebiusMap::new(
                Complex::new(1.0, 0.0),
                Complex::new(-p0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(-p1, 0.0),
            )?;
            if p0 - p1 > 0.0 {
                m
            } else {
                MoebiusMap::new(
                    Complex::new(-1.0, 0.0),
                    Complex::new(p0, 0.0),
                    Complex::new(1.0, 0.0),
                    Complex::new(-p1, 0.0),
                )?
            }
        }
        (RealPt::Finite(p0), RealPt::Infinity) => MoebiusMap::translation(Complex::new(-p0, 0.0)),
        (RealPt::Infinity, RealPt::Finite(p1)) => MoebiusMap::new(
            Complex::new(0.0, 0.0),
            Complex::new(-1.0, 0.0),
            Complex::new(1.0, 0.0),
            Complex::new(-p1, 0.0),
        )?,
        _ => return Err(Error::InvalidGroup("α₁ fixed points degenerate".into())),
    };
    // scale so that the positive-axis fixed point of β₁ goes to 1
    let b1 = group.beta(0).conjugate_by(&m0).classify();
    let mut target = None;
    for fp in &b1.fixed_points {
        if let CPoint::Finite(z) = fp {
            if z.im.abs() < 1e-9 && z.re > 1e-12 {
                target = Some(z.re);
            }
        }
    }
    let q = target.ok_or_else(|| {
        Error::InvalidGroup("β₁ has no positive-axis fixed point after moving α₁".into())
    })?;
    let scale = MoebiusMap::dilation(Complex::new(1.0 / q, 0.0));
    let sigma = scale.compose(&m0);
    // Sanity: σ must preserve the upper half-plane.
    let im = sigma.apply_finite(Complex::new(0.0, 1.0))?.im;
    if im <= 0.0 {
        return Err(Error::Numerical("normalization flipped the half-plane".into()));
    }
    let mut out = group.conjugate(&sigma)?;
    // snap conjugation junk: entries are real, and α₁ is exactly diagonal
    for g in out.generators.iter_mut() {
        *g = snap_real(g)?;
    }
    out.generators[0] = MoebiusMap::new(
        Complex::new(out.generators[0].a.re, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(0.0, 0.0),
        Complex::new(out.generators[0].d.re, 0.0),
    )?;
    Ok(out)
}

fn snap_real(m: &MoebiusMap) -> Result<MoebiusMap> {
    let scale = [m.a, m.b, m.c, m.d].iter().map(|e| e.norm()).fold(0.0, f64::max);
    let clean = |e: Complex| {
        let re = if e.re.abs() < 1e-12 * scale { 0.0 } else { e.re };
        Complex::new(re, 0.0)
    };
    MoebiusMap::new(clean(m.a), clean(m.b), clean(m.c), clean(m.d))
}

enum RealPt {
    Finite(f64),
    Infinity,
}

fn real_of(p: CPoint) -> Result<RealPt> {
    match p {
        CPoint::Finite(z) => {
            if z.im.abs() > 1e-8 {
                return Err(Error::InvalidGroup(
                    "fixed point of a Fuchsian generator is not real".into(),
                ));
            }
            Ok(RealPt::Finite(z.re))
        }
        CPoint::Infinity => Ok(RealPt::Infinity),
    }
}

/// Builds a classical Schottky group from disjoint circle pairs. The
/// generator γ_k maps the exterior of C_k onto the interior of C_k′.
pub fn build_schottky(data: &SchottkyCircleData) -> Result<MarkedGroup> {
    let g = data.pairs.len();
    if g < 2 {
        return Err(Error::InvalidGroup(format!(
            "Schottky genus must be ≥ 2, got {g}"
        )));
    }
    let mut circles = Vec::new();
    for p in &data.pairs {
        if !(p.r1 > 0.0 && p.r2 > 0.0) {
            return Err(Error::InvalidGroup("circle radii must be positive".into()));
        }
        circles.push(Circle::new(Complex::new(p.c1[0], p.c1[1]), p.r1));
        circles.push(Circle::new(Complex::new(p.c2[0], p.c2[1]), p.r2));
    }
    for i in 0..circles.len() {
        for j in (i + 1)..circles.len() {
            if !circles[i].disjoint_closed(&circles[j]) {
                return Err(Error::InvalidGroup(format!(
                    "pairing disks {i} and {j} are not disjoint"
                )));
            }
        }
    }
    let mut generators = Vec::new();
    let mut schottky_pairs = Vec::new();
    for p in &data.pairs {
        let q1 = Complex::new(p.c1[0], p.c1[1]);
        let q2 = Complex::new(p.c2[0], p.c2[1]);
        // z ↦ q2 + r1 r2/(z − q1) maps |z−q1| = r1 onto |w−q2| = r2 and the
        // exterior of C1 onto the open disk of C2.
        let gen = MoebiusMap::new(
            q2,
            p.r1 * p.r2 - q1 * q2,
            Complex::new(1.0, 0.0),
            -q1,
        )?;
        let cls = gen.classify();
        if !cls.is_loxodromic_or_hyperbolic() {
            return Err(Error::InvalidGroup(
                "a Schottky generator is not loxodromic".into(),
            ));
        }
        generators.push(gen);
        schottky_pairs.push(SchottkyPair {
            c1: Circle::new(q1, p.r1),
            c2: Circle::new(q2, p.r2),
            c2_unbounded: false,
        });
    }
    Ok(MarkedGroup {
        kind: GroupKind::Schottky,
        genus: g,
        generators,
        normalization_record: MoebiusMap::identity(),
        fuchsian_vertices: vec![],
        schottky_pairs,
    })
}

/// Conjugates the group so that ∞ lies in the limit set.
///
/// Fuchsian groups already have ∞ ∈ Λ = ℝ ∪ {∞} and are returned unchanged.
/// For Schottky groups the attracting fixed point of γ₁ is sent to ∞ (with a
/// scale that keeps the image circles at order-one size), so the pair disk
/// of C₁′ becomes the unbounded component.
pub fn conjugate_infinity_to_limit_set(group: &MarkedGroup) -> Result<MarkedGroup> {
    match group.kind {
        GroupKind::Fuchsian => Ok(group.clone()),
        GroupKind::Schottky => {
            let cls = group.generators[0].classify();
            let p = match cls.attracting() {
                Some(CPoint::Finite(p)) => p,
                Some(CPoint::Infinity) => return Ok(group.clone()),
                None => {
                    return Err(Error::InvalidGroup(
                        "γ₁ has no attracting fixed point".into(),
                    ))
                }
            };
            // s/(z − p), with s set so the image of C₁′ has radius 2.
            let m0 = MoebiusMap::new(
                Complex::new(0.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                -p,
            )?;
            let img = group.schottky_pairs[0].c2.map(&m0)?;
            let s = 2.0 / img.radius;
            let m = MoebiusMap::dilation(Complex::new(s, 0.0)).compose(&m0);
            group.conjugate(&m)
        }
    }
}

/// Enumerates distinct group elements by word length, identity first.
/// Deduplication uses the matrix distance at tolerance 1e−10, which folds
/// Fuchsian relation collapses.
pub fn enumerate(group: &MarkedGroup, max_len: usize) -> Vec<GroupWord> {
    let letters: Vec<(i32, MoebiusMap)> = {
        let gens = &group.generators;
        let mut v: Vec<(i32, MoebiusMap)> = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            v.push((i as i32 + 1, *g));
        }
        for (i, g) in gens.iter().enumerate() {
            v.push((-(i as i32 + 1), g.inverse()));
        }
        v
    };
    let mut out: Vec<GroupWord> = vec![GroupWord {
        letters: vec![],
        element: MoebiusMap::identity(),
    }];
    let mut frontier: Vec<usize> = vec![0];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for &idx in &frontier {
            let base = out[idx].clone();
            for (letter, mat) in &letters {
                // free reduction: skip immediate backtracking
                if let Some(&last) = base.letters.last() {
                    if last == -letter {
                        continue;
                    }
                }
                let element = base.element.compose(mat);
                if out.iter().all(|w| w.element.dist(&element) > 1e-10) {
                    let mut letters2 = base.letters.clone();
                    letters2.push(*letter);
                    out.push(GroupWord {
                        letters: letters2,
                        element,
                    });
                    next.push(out.len() - 1);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Composes the letters of a word over the group's generators.
pub fn compose_letters(group: &MarkedGroup, letters: &[i32]) -> MoebiusMap {
    let mut m = MoebiusMap::identity();
    for &l in letters {
        let gen = &group.generators[(l.unsigned_abs() as usize) - 1];
        m = m.compose(&if l > 0 { *gen } else { gen.inverse() });
    }
    m
}

/// JSON group specification accepted by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum GroupSpec {
    Fuchsian { genus: usize },
    Schottky { pairs: Vec<CirclePairSpec> },
}

pub fn build_from_spec(spec: &GroupSpec) -> Result<MarkedGroup> {
    match spec {
        GroupSpec::Fuchsian { genus } => build_fuchsian(*genus),
        GroupSpec::Schottky { pairs } => build_schottky(&SchottkyCircleData {
            pairs: pairs.clone(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn genus2_relation_and_marking() {
        let g = build_fuchsian(2).unwrap();
        assert_eq!(g.generators.len(), 4);
        assert_eq!(g.fuchsian_vertices.len(), 8);
        assert!(g.relation_residual() < 1e-10);
        // α₁ is a contraction fixing 0 and ∞
        let cls = g.alpha(0).classify();
        assert_eq!(cls.tag, crate::moebius::MapTag::Hyperbolic);
        let att = cls.attracting().unwrap().finite().unwrap();
        assert!(att.norm() < 1e-10);
        assert!(cls.repelling().unwrap().is_infinity());
        // β₁ has a fixed point at 1
        let clsb = g.beta(0).classify();
        let has_one = clsb
            .fixed_points
            .iter()
            .any(|p| matches!(p, CPoint::Finite(z) if (z - c(1.0, 0.0)).norm() < 1e-10));
        assert!(has_one, "β₁ fixed points: {:?}", clsb.fixed_points);
        // all generators real
        for gen in &g.generators {
            assert!(gen.has_real_entries(1e-10));
        }
    }

    #[test]
    fn genus3_relation() {
        let g = build_fuchsian(3).unwrap();
        assert_eq!(g.generators.len(), 6);
        assert_eq!(g.fuchsian_vertices.len(), 12);
        assert!(g.relation_residual() < 1e-10);
    }

    #[test]
    fn generators_preserve_upper_half_plane() {
        let g = build_fuchsian(2).unwrap();
        for gen in &g.generators {
            for k in 0..20 {
                let z = c(-2.0 + 0.2 * k as f64, 0.3 + 0.1 * k as f64);
                assert!(gen.apply_finite(z).unwrap().im > 0.0);
            }
        }
    }

    #[test]
    fn normalize_round_trip() {
        let g = build_fuchsian(2).unwrap();
        let shift = MoebiusMap::translation(c(5.0, 0.0));
        let moved = g.conjugate(&shift).unwrap();
        let back = normalize(&moved).unwrap();
        for (a, b) in back.generators.iter().zip(g.generators.iter()) {
            assert!(a.dist(b) < 1e-10);
        }
        // already-normalized group: identity conjugator up to numerics
        let again = normalize(&g).unwrap();
        for (a, b) in again.generators.iter().zip(g.generators.iter()) {
            assert!(a.dist(b) < 1e-10);
        }
    }

    #[test]
    fn normalized_alpha1_is_diagonal_contraction() {
        let g = build_fuchsian(2).unwrap();
        let a1 = g.alpha(0);
        assert!(a1.b.norm() < 1e-10 && a1.c.norm() < 1e-10);
        let lam = (a1.a / a1.d).norm();
        assert!(lam < 1.0, "α₁ must contract towards 0, ratio {lam}");
    }

    #[test]
    fn enumerate_counts() {
        let data = SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        };
        let g = build_schottky(&data).unwrap();
        assert_eq!(enumerate(&g, 1).len(), 5);
        assert_eq!(enumerate(&g, 2).len(), 17);
        // free group count 1 + 4 + 12 + 36
        assert_eq!(enumerate(&g, 3).len(), 53);

        // The genus-2 relator has length 8, so the first collapses between
        // reduced words appear at length 4: strictly below the free count.
        let f = build_fuchsian(2).unwrap();
        assert_eq!(enumerate(&f, 2).len(), 1 + 8 + 56);
        let n4 = enumerate(&f, 4).len();
        assert!(n4 < 1 + 8 + 56 + 392 + 2744, "relation must collapse words, got {n4}");
        assert!(n4 > 1000);
    }

    #[test]
    fn enumeration_closed_under_inversion() {
        let f = build_fuchsian(2).unwrap();
        let words = enumerate(&f, 2);
        for w in &words {
            let inv = w.element.inverse();
            assert!(
                words.iter().any(|u| u.element.dist(&inv) < 1e-8),
                "inverse of {:?} missing",
                w.letters
            );
        }
    }

    #[test]
    fn schottky_build_and_guards() {
        let data = SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        };
        let g = build_schottky(&data).unwrap();
        // generators loxodromic with fixed points inside the paired disks
        for (gen, pair) in g.generators.iter().zip(g.schottky_pairs.iter()) {
            let cls = gen.classify();
            assert!(cls.is_loxodromic_or_hyperbolic());
            let att = cls.attracting().unwrap().finite().unwrap();
            let rep = cls.repelling().unwrap().finite().unwrap();
            assert!(pair.c2.contains(att), "attracting fp not in target disk");
            assert!(pair.c1.contains(rep), "repelling fp not in source disk");
        }
        // words up to length 4 all loxodromic
        for w in enumerate(&g, 4).iter().skip(1) {
            assert!(w.element.classify().is_loxodromic_or_hyperbolic());
        }

        // genus 1 rejected
        let bad = SchottkyCircleData {
            pairs: vec![CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 }],
        };
        assert!(build_schottky(&bad).is_err());

        // overlapping disks rejected
        let bad = SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-1.0, 0.0], r1: 0.8, c2: [0.5, 0.0], r2: 0.8 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        };
        assert!(build_schottky(&bad).is_err());
    }

    #[test]
    fn schottky_generator_maps_circle_exterior_to_interior() {
        let data = SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        };
        let g = build_schottky(&data).unwrap();
        for (gen, pair) in g.generators.iter().zip(g.schottky_pairs.iter()) {
            for k in 0..100 {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 100.0;
                let z = pair.c1.point(th);
                let w = gen.apply_finite(z).unwrap();
                assert!(
                    ((w - pair.c2.center).norm() - pair.c2.radius).abs() < 1e-10,
                    "boundary point leaves the partner circle"
                );
                // exterior point maps strictly inside
                let zx = pair.c1.center + 1.3 * (z - pair.c1.center);
                let wx = gen.apply_finite(zx).unwrap();
                assert!(pair.c2.contains(wx));
            }
        }
    }

    #[test]
    fn conjugate_infinity_schottky() {
        let data = SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        };
        let g = build_schottky(&data).unwrap();
        let h = conjugate_infinity_to_limit_set(&g).unwrap();
        // γ₁ now attracts to ∞
        let cls = h.generators[0].classify();
        assert!(cls.attracting().unwrap().is_infinity());
        // traces preserved
        for (a, b) in g.generators.iter().zip(h.generators.iter()) {
            assert!((a.trace().norm() - b.trace().norm()).abs() < 1e-10);
        }
        // exactly one pair circle marks the unbounded disk
        let unb = h.schottky_pairs.iter().filter(|p| p.c2_unbounded).count();
        assert_eq!(unb, 1);
        // Fuchsian groups come back unchanged
        let f = build_fuchsian(2).unwrap();
        let f2 = conjugate_infinity_to_limit_set(&f).unwrap();
        assert!(f2.generators[0].dist(&f.generators[0]) < 1e-14);
    }

    #[test]
    fn group_word_letters_match_elements() {
        let f = build_fuchsian(2).unwrap();
        for w in enumerate(&f, 2) {
            let m = compose_letters(&f, &w.letters);
            assert!(m.dist(&w.element) < 1e-12);
        }
    }
}
