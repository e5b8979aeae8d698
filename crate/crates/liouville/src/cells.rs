//! Fundamental polygons, their homological chain ledgers, and the 3-D
//! fundamental regions sitting over them.
//!
//! Chains are carried as explicit ledgers of (cell, group word) pairs. The
//! boundary identities ∂′F = ∂″L, ∂″V = ∂′L, ∂′W = V − U and
//! ∂(R − S + E) = −Σ then become exact integer bookkeeping over a registry
//! of numerically deduplicated group elements and vertices.

use std::collections::BTreeMap;

use num_complex::Complex64 as Complex;

use crate::error::Error;
use crate::group::{Circle, GroupKind, MarkedGroup};
use crate::moebius::{HyperbolicPoint3, MoebiusMap};
use crate::quad::{Path, SliceRegion};
use crate::Result;

// ---------------------------------------------------------------------------
// parametrized curves
// ---------------------------------------------------------------------------

/// A parametrized curve: geodesic/circle arcs, segments, Möbius images and
/// concatenations.
#[derive(Debug, Clone)]
pub enum Curve {
    Seg {
        from: Complex,
        to: Complex,
    },
    Arc {
        center: Complex,
        radius: f64,
        th0: f64,
        th1: f64,
    },
    Mapped {
        base: Box<Curve>,
        map: MoebiusMap,
    },
    Chain(Vec<Curve>),
}

impl Curve {
    /// Geodesic of the upper half-plane between two interior points.
    pub fn geodesic(p: Complex, q: Complex) -> Result<Curve> {
        if (p.re - q.re).abs() < 1e-12 {
            return Ok(Curve::Seg { from: p, to: q });
        }
        let c = (p.norm_sqr() - q.norm_sqr()) / (2.0 * (p.re - q.re));
        let center = Complex::new(c, 0.0);
        let r = (p - center).norm();
        let th0 = (p - center).arg();
        let th1 = (q - center).arg();
        Ok(Curve::Arc {
            center,
            radius: r,
            th0,
            th1,
        })
    }

    /// Full circle, counterclockwise when `ccw`.
    pub fn full_circle(c: Circle, ccw: bool) -> Curve {
        let (th0, th1) = if ccw {
            (0.0, 2.0 * std::f64::consts::PI)
        } else {
            (2.0 * std::f64::consts::PI, 0.0)
        };
        Curve::Arc {
            center: c.center,
            radius: c.radius,
            th0,
            th1,
        }
    }

    pub fn start(&self) -> Complex {
        self.at(0.0)
    }

    pub fn end(&self) -> Complex {
        self.at(1.0)
    }

    /// Mirror image under z ↦ z̄.
    pub fn mirror(&self) -> Curve {
        match self {
            Curve::Seg { from, to } => Curve::Seg {
                from: from.conj(),
                to: to.conj(),
            },
            Curve::Arc {
                center,
                radius,
                th0,
                th1,
            } => Curve::Arc {
                center: center.conj(),
                radius: *radius,
                th0: -th0,
                th1: -th1,
            },
            Curve::Mapped { base, map } => Curve::Mapped {
                base: Box::new(base.mirror()),
                map: MoebiusMap {
                    a: map.a.conj(),
                    b: map.b.conj(),
                    c: map.c.conj(),
                    d: map.d.conj(),
                },
            },
            Curve::Chain(parts) => Curve::Chain(parts.iter().map(|p| p.mirror()).collect()),
        }
    }

    /// The curve with a Möbius map applied.
    pub fn mapped(&self, m: &MoebiusMap) -> Curve {
        Curve::Mapped {
            base: Box::new(self.clone()),
            map: *m,
        }
    }
}

impl Path for Curve {
    fn at(&self, t: f64) -> Complex {
        match self {
            Curve::Seg { from, to } => from + t * (to - from),
            Curve::Arc {
                center,
                radius,
                th0,
                th1,
            } => {
                let th = th0 + t * (th1 - th0);
                center + radius * Complex::new(th.cos(), th.sin())
            }
            Curve::Mapped { base, map } => {
                let z = base.at(t);
                (map.a * z + map.b) / (map.c * z + map.d)
            }
            Curve::Chain(parts) => {
                let n = parts.len() as f64;
                let s = (t * n).clamp(0.0, n - 1e-12);
                let i = s.floor() as usize;
                parts[i].at(s - i as f64)
            }
        }
    }

    fn velocity(&self, t: f64) -> Complex {
        match self {
            Curve::Seg { from, to } => to - from,
            Curve::Arc {
                radius, th0, th1, ..
            } => {
                let th = th0 + t * (th1 - th0);
                radius * (th1 - th0) * Complex::new(-th.sin(), th.cos())
            }
            Curve::Mapped { base, map } => {
                let z = base.at(t);
                let den = map.c * z + map.d;
                base.velocity(t) / (den * den)
            }
            Curve::Chain(parts) => {
                let n = parts.len() as f64;
                let s = (t * n).clamp(0.0, n - 1e-12);
                let i = s.floor() as usize;
                parts[i].velocity(s - i as f64) * n
            }
        }
    }
}

// ---------------------------------------------------------------------------
// fundamental polygons
// ---------------------------------------------------------------------------

/// Edge labels of the marking: a_k, a_k′, b_k, b_k′ for Fuchsian polygons,
/// C_k and C_k′ for Schottky boundaries (k is 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeLabel {
    A(usize),
    Ap(usize),
    B(usize),
    Bp(usize),
    C(usize),
    Cp(usize),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub label: EdgeLabel,
    /// Parametrized with the chain orientation (a_k runs a_k(0) → a_k(1)).
    pub curve: Curve,
    pub partner: EdgeLabel,
    /// Group element mapping this edge onto its partner as parametrized
    /// chains (for a_k this is α_k⁻¹, carrying a_k onto a_k′).
    pub to_partner: MoebiusMap,
}

/// Fundamental polygon with labeled, group-paired edges and a sliceable
/// region description.
#[derive(Debug, Clone)]
pub struct FundamentalPolygon {
    pub kind: GroupKind,
    pub genus: usize,
    pub vertices: Vec<Complex>,
    pub edges: Vec<Edge>,
    pub region: RegionRep,
}

#[derive(Debug, Clone)]
pub enum RegionRep {
    Fuchsian(PolygonRegion),
    Schottky(SchottkyRegion),
}

impl FundamentalPolygon {
    pub fn edge(&self, label: EdgeLabel) -> &Edge {
        self.edges
            .iter()
            .find(|e| e.label == label)
            .expect("edge label present")
    }

    pub fn region2d(&self) -> &dyn SliceRegion {
        match &self.region {
            RegionRep::Fuchsian(r) => r,
            RegionRep::Schottky(r) => r,
        }
    }

    /// Vertex a_k(0) = v_{4k}.
    pub fn vertex_a0(&self, k: usize) -> Complex {
        self.vertices[4 * k]
    }

    /// Vertex b_k(0) = v_{4k+4 mod 4g}.
    pub fn vertex_b0(&self, k: usize) -> Complex {
        self.vertices[(4 * k + 4) % (4 * self.genus)]
    }

    /// A guaranteed interior point of the fundamental domain.
    pub fn barycenter(&self) -> Complex {
        match &self.region {
            RegionRep::Schottky(r) => r.interior_point(),
            RegionRep::Fuchsian(reg) => {
                let (x0, x1) = (reg.xmin, reg.xmax);
                let mut best = (Complex::new(0.0, 1.0), 0.0);
                for i in 1..64 {
                    let x = x0 + (x1 - x0) * i as f64 / 64.0;
                    if let Some((lo, hi)) = reg.ylimits(x) {
                        // widest slice in hyperbolic height
                        let gain = (hi / lo).ln();
                        if gain > best.1 {
                            best = (Complex::new(x, (lo * hi).sqrt()), gain);
                        }
                    }
                }
                best.0
            }
        }
    }
}

/// Convex Fuchsian polygon as an intersection of circle-side constraints
/// (center on ℝ, radius, keep_outside per side).
#[derive(Debug, Clone)]
pub struct PolygonRegion {
    pub sides: Vec<(f64, f64, bool)>,
    pub xmin: f64,
    pub xmax: f64,
}

impl PolygonRegion {
    /// [y_min(x), y_max(x)] of the vertical slice, None outside.
    pub fn ylimits(&self, x: f64) -> Option<(f64, f64)> {
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for &(c, r, keep_out) in &self.sides {
            let disc = r * r - (x - c) * (x - c);
            if disc <= 0.0 {
                if !keep_out {
                    return None;
                }
                continue;
            }
            let s = disc.sqrt();
            if keep_out {
                lo = lo.max(s);
            } else {
                hi = hi.min(s);
            }
        }
        if hi.is_infinite() || hi <= lo {
            return None;
        }
        Some((lo, hi))
    }

    pub fn contains(&self, z: Complex) -> bool {
        if z.im <= 0.0 {
            return false;
        }
        match self.ylimits(z.re) {
            Some((lo, hi)) => z.im >= lo && z.im <= hi,
            None => false,
        }
    }
}

impl SliceRegion for PolygonRegion {
    fn x_range(&self) -> (f64, f64) {
        (self.xmin, self.xmax)
    }
    fn x_breaks(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for &(c, r, _) in &self.sides {
            v.push(c - r);
            v.push(c + r);
        }
        v
    }
    fn slices(&self, x: f64) -> Vec<(f64, f64)> {
        match self.ylimits(x) {
            Some((lo, hi)) => vec![(lo, hi)],
            None => vec![],
        }
    }
}

/// Schottky fundamental domain: inside the outer circle, outside the holes.
#[derive(Debug, Clone)]
pub struct SchottkyRegion {
    pub outer: Circle,
    pub holes: Vec<Circle>,
    /// False when the domain is actually unbounded (∞ still in Ω) and
    /// `outer` is only a sentinel; volume/area integrators reject this.
    pub bounded: bool,
}

impl SchottkyRegion {
    pub fn contains(&self, z: Complex) -> bool {
        (z - self.outer.center).norm() < self.outer.radius
            && self.holes.iter().all(|h| !h.contains(z))
    }

    pub fn interior_point(&self) -> Complex {
        let c = self.outer.center;
        for k in 1..128 {
            for dir in [Complex::new(0.0, 1.0), Complex::new(1.0, 0.0)] {
                let z = c + dir * (self.outer.radius * 0.92 * k as f64 / 128.0);
                if self.contains(z) {
                    return z;
                }
            }
        }
        c
    }
}

impl SliceRegion for SchottkyRegion {
    fn x_range(&self) -> (f64, f64) {
        (
            self.outer.center.re - self.outer.radius,
            self.outer.center.re + self.outer.radius,
        )
    }
    fn x_breaks(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for h in self.holes.iter().chain(std::iter::once(&self.outer)) {
            v.push(h.center.re - h.radius);
            v.push(h.center.re + h.radius);
        }
        v
    }
    fn slices(&self, x: f64) -> Vec<(f64, f64)> {
        let d = self.outer.radius * self.outer.radius
            - (x - self.outer.center.re) * (x - self.outer.center.re);
        if d <= 0.0 {
            return vec![];
        }
        let s = d.sqrt();
        let mut intervals = vec![(self.outer.center.im - s, self.outer.center.im + s)];
        for h in &self.holes {
            let hd = h.radius * h.radius - (x - h.center.re) * (x - h.center.re);
            if hd <= 0.0 {
                continue;
            }
            let hs = hd.sqrt();
            intervals = subtract_interval(intervals, (h.center.im - hs, h.center.im + hs));
        }
        intervals
    }
}

fn subtract_interval(set: Vec<(f64, f64)>, cut: (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for (lo, hi) in set {
        if cut.1 <= lo || cut.0 >= hi {
            out.push((lo, hi));
        } else {
            if cut.0 > lo {
                out.push((lo, cut.0));
            }
            if cut.1 < hi {
                out.push((cut.1, hi));
            }
        }
    }
    out
}

/// Region assembled as base ∖ (cut pieces) ∪ (pasted pieces), used for
/// alternative fundamental domains.
#[derive(Debug, Clone)]
pub struct CompositeRegion {
    pub base: PolygonRegion,
    pub minus: Vec<ArcGon>,
    pub plus: Vec<ArcGon>,
}

impl SliceRegion for CompositeRegion {
    fn x_range(&self) -> (f64, f64) {
        let (mut x0, mut x1) = self.base.x_range();
        for g in &self.plus {
            let (a, b) = g.x_range();
            x0 = x0.min(a);
            x1 = x1.max(b);
        }
        (x0, x1)
    }
    fn x_breaks(&self) -> Vec<f64> {
        let mut v = self.base.x_breaks();
        for g in self.minus.iter().chain(self.plus.iter()) {
            v.extend(g.x_breaks());
            let (a, b) = g.x_range();
            v.push(a);
            v.push(b);
        }
        v
    }
    fn slices(&self, x: f64) -> Vec<(f64, f64)> {
        let mut set = self.base.slices(x);
        for g in &self.minus {
            for cut in g.slices(x) {
                set = subtract_interval(set, cut);
            }
        }
        for g in &self.plus {
            set.extend(g.slices(x));
        }
        set.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        set
    }
}

/// Small region bounded by a closed chain of segments and circular arcs,
/// sliced by the even-odd rule.
#[derive(Debug, Clone)]
pub struct ArcGon {
    pub pieces: Vec<GonPiece>,
}

#[derive(Debug, Clone)]
pub enum GonPiece {
    Seg(Complex, Complex),
    Arc {
        center: Complex,
        radius: f64,
        th0: f64,
        th1: f64,
    },
}

impl GonPiece {
    fn y_crossings(&self, x: f64, out: &mut Vec<f64>) {
        match self {
            GonPiece::Seg(p, q) => {
                let (x0, x1) = (p.re, q.re);
                if (x0 - x1).abs() < 1e-14 {
                    return; // vertical pieces handled by x-breaks
                }
                let t = (x - x0) / (x1 - x0);
                if (0.0..1.0).contains(&t) {
                    out.push(p.im + t * (q.im - p.im));
                }
            }
            GonPiece::Arc {
                center,
                radius,
                th0,
                th1,
            } => {
                let dx = x - center.re;
                let disc = radius * radius - dx * dx;
                if disc <= 0.0 {
                    return;
                }
                let s = disc.sqrt();
                for y in [center.im + s, center.im - s] {
                    let th = (y - center.im).atan2(dx);
                    if angle_in_arc(th, *th0, *th1) {
                        out.push(y);
                    }
                }
            }
        }
    }

    fn x_extent(&self) -> (f64, f64, Vec<f64>) {
        match self {
            GonPiece::Seg(p, q) => (p.re.min(q.re), p.re.max(q.re), vec![p.re, q.re]),
            GonPiece::Arc {
                center,
                radius,
                th0,
                th1,
            } => {
                let mut breaks = vec![
                    center.re + radius * th0.cos(),
                    center.re + radius * th1.cos(),
                ];
                let mut lo = breaks[0].min(breaks[1]);
                let mut hi = breaks[0].max(breaks[1]);
                for th in [0.0, std::f64::consts::PI, -std::f64::consts::PI] {
                    if angle_in_arc(th, *th0, *th1) {
                        let x = center.re + radius * th.cos();
                        breaks.push(x);
                        lo = lo.min(x);
                        hi = hi.max(x);
                    }
                }
                (lo, hi, breaks)
            }
        }
    }
}

fn angle_in_arc(th: f64, th0: f64, th1: f64) -> bool {
    let tau = 2.0 * std::f64::consts::PI;
    let span = th1 - th0;
    let mut d = (th - th0) % tau;
    if span >= 0.0 {
        if d < 0.0 {
            d += tau;
        }
        d <= span + 1e-12
    } else {
        if d > 0.0 {
            d -= tau;
        }
        d >= span - 1e-12
    }
}

impl ArcGon {
    pub fn from_curves(curves: &[Curve]) -> Result<ArcGon> {
        let mut pieces = Vec::new();
        for c in curves {
            flatten_curve(c, &mut pieces)?;
        }
        Ok(ArcGon { pieces })
    }
}

fn flatten_curve(c: &Curve, out: &mut Vec<GonPiece>) -> Result<()> {
    match c {
        Curve::Seg { from, to } => out.push(GonPiece::Seg(*from, *to)),
        Curve::Arc {
            center,
            radius,
            th0,
            th1,
        } => out.push(GonPiece::Arc {
            center: *center,
            radius: *radius,
            th0: *th0,
            th1: *th1,
        }),
        Curve::Chain(parts) => {
            for p in parts {
                flatten_curve(p, out)?;
            }
        }
        Curve::Mapped { .. } => {
            // Möbius images of segments/arcs are arcs: recover the exact
            // circle through three sample points.
            let p = c.at(0.0);
            let m = c.at(0.5);
            let q = c.at(1.0);
            match Circle::through(p, m, q) {
                Ok(circ) => {
                    let th0 = (p - circ.center).arg();
                    let thm = (m - circ.center).arg();
                    let th1 = (q - circ.center).arg();
                    let mut sweep = th1 - th0;
                    if !angle_in_arc(thm, th0, th0 + sweep) {
                        sweep += if sweep > 0.0 {
                            -2.0 * std::f64::consts::PI
                        } else {
                            2.0 * std::f64::consts::PI
                        };
                    }
                    out.push(GonPiece::Arc {
                        center: circ.center,
                        radius: circ.radius,
                        th0,
                        th1: th0 + sweep,
                    });
                }
                Err(_) => out.push(GonPiece::Seg(p, q)),
            }
        }
    }
    Ok(())
}

impl SliceRegion for ArcGon {
    fn x_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in &self.pieces {
            let (a, b, _) = p.x_extent();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }
    fn x_breaks(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for p in &self.pieces {
            v.extend(p.x_extent().2);
        }
        v
    }
    fn slices(&self, x: f64) -> Vec<(f64, f64)> {
        let mut ys = Vec::new();
        for p in &self.pieces {
            p.y_crossings(x, &mut ys);
        }
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let mut out = Vec::new();
        let mut i = 0;
        while i + 1 < ys.len() {
            out.push((ys[i], ys[i + 1]));
            i += 2;
        }
        out
    }
}

// ---------------------------------------------------------------------------
// polygon construction
// ---------------------------------------------------------------------------

/// Builds the labeled fundamental polygon of a marked group.
pub fn build_polygon(group: &MarkedGroup) -> Result<FundamentalPolygon> {
    match group.kind {
        GroupKind::Fuchsian => build_fuchsian_polygon(group),
        GroupKind::Schottky => build_schottky_polygon(group),
    }
}

fn build_fuchsian_polygon(group: &MarkedGroup) -> Result<FundamentalPolygon> {
    let g = group.genus;
    let n = 4 * g;
    let v = &group.fuchsian_vertices;
    if v.len() != n {
        return Err(Error::InvalidGroup(
            "group carries no polygon vertices; build it with build_fuchsian".into(),
        ));
    }
    let vv = |j: usize| v[j % n];

    let mut edges = Vec::new();
    for k in 0..g {
        let alpha = *group.alpha(k);
        let beta = *group.beta(k);
        edges.push(Edge {
            label: EdgeLabel::A(k),
            curve: Curve::geodesic(vv(4 * k), vv(4 * k + 1))?,
            partner: EdgeLabel::Ap(k),
            to_partner: alpha.inverse(),
        });
        edges.push(Edge {
            label: EdgeLabel::Ap(k),
            curve: Curve::geodesic(vv(4 * k + 3), vv(4 * k + 2))?,
            partner: EdgeLabel::A(k),
            to_partner: alpha,
        });
        edges.push(Edge {
            label: EdgeLabel::B(k),
            curve: Curve::geodesic(vv(4 * k + 4), vv(4 * k + 3))?,
            partner: EdgeLabel::Bp(k),
            to_partner: beta.inverse(),
        });
        edges.push(Edge {
            label: EdgeLabel::Bp(k),
            curve: Curve::geodesic(vv(4 * k + 1), vv(4 * k + 2))?,
            partner: EdgeLabel::B(k),
            to_partner: beta,
        });
    }

    let mut sides = Vec::new();
    for j in 0..n {
        match Curve::geodesic(vv(j), vv(j + 1))? {
            Curve::Arc { center, radius, .. } => {
                // the polygon lies on the side of each side-geodesic that
                // contains the opposite vertex (hyperbolic convexity)
                let opposite = vv(j + n / 2);
                let keep_out = (opposite - center).norm() > radius;
                sides.push((center.re, radius, keep_out));
            }
            _ => {
                return Err(Error::InvalidGroup(
                    "polygon has a vertical side; the construction does not produce these".into(),
                ))
            }
        }
    }
    // Side arcs keep θ ∈ (0, π) on circles centered on ℝ, so x is monotone
    // along each arc and the polygon's x-support is exactly the vertex
    // extent. Keeping the range tight matters: the quadrature needs a break
    // at the support onset, where the defect estimator is blind.
    let xmin = v.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let xmax = v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let region = PolygonRegion { sides, xmin, xmax };

    let poly = FundamentalPolygon {
        kind: GroupKind::Fuchsian,
        genus: g,
        vertices: v.clone(),
        edges,
        region: RegionRep::Fuchsian(region),
    };
    let res = vertex_relation_residual(group, &poly);
    if res > 1e-8 {
        return Err(Error::InvalidGroup(format!(
            "vertex relation residual {res:.3e} exceeds 1e-8: inconsistent marking"
        )));
    }
    Ok(poly)
}

/// Residual of the vertex relations α_k⁻¹(a_k(0)) = b_k(1),
/// β_k⁻¹(b_k(0)) = a_k(1), γ_k(b_k(0)) = b_{k−1}(0).
pub fn vertex_relation_residual(group: &MarkedGroup, poly: &FundamentalPolygon) -> f64 {
    let g = group.genus;
    let n = 4 * g;
    let v = |j: usize| poly.vertices[j % n];
    let mut worst = 0.0f64;
    for k in 0..g {
        let a0 = v(4 * k);
        let a1 = v(4 * k + 1);
        let b0 = v(4 * k + 4);
        let b1 = v(4 * k + 3);
        let r1 = (group.alpha(k).inverse().apply_finite(a0).unwrap() - b1).norm();
        let r2 = (group.beta(k).inverse().apply_finite(b0).unwrap() - a1).norm();
        let prev_b0 = v(4 * ((k + g - 1) % g) + 4);
        let r3 = (group.commutator(k).apply_finite(b0).unwrap() - prev_b0).norm();
        worst = worst.max(r1).max(r2).max(r3);
    }
    worst
}

fn build_schottky_polygon(group: &MarkedGroup) -> Result<FundamentalPolygon> {
    let g = group.genus;
    let pairs = &group.schottky_pairs;
    if pairs.len() != g {
        return Err(Error::InvalidGroup("missing Schottky circles".into()));
    }
    let outer = pairs.iter().find(|p| p.c2_unbounded).map(|p| p.c2);
    let mut holes = Vec::new();
    for p in pairs {
        holes.push(p.c1);
        if !p.c2_unbounded {
            holes.push(p.c2);
        }
    }
    let mut edges = Vec::new();
    for (k, p) in pairs.iter().enumerate() {
        let gen = group.generators[k];
        // ∂F orientation: hole circles clockwise, the outer boundary ccw
        edges.push(Edge {
            label: EdgeLabel::C(k),
            curve: Curve::full_circle(p.c1, false),
            partner: EdgeLabel::Cp(k),
            to_partner: gen,
        });
        edges.push(Edge {
            label: EdgeLabel::Cp(k),
            curve: Curve::full_circle(p.c2, p.c2_unbounded),
            partner: EdgeLabel::C(k),
            to_partner: gen.inverse(),
        });
    }
    let region = match outer {
        Some(outer) => SchottkyRegion {
            outer,
            holes,
            bounded: true,
        },
        None => {
            let far = pairs
                .iter()
                .flat_map(|p| [p.c1, p.c2])
                .map(|c| c.center.norm() + c.radius)
                .fold(0.0, f64::max);
            SchottkyRegion {
                outer: Circle::new(Complex::new(0.0, 0.0), 4.0 * far.max(1.0)),
                holes,
                bounded: false,
            }
        }
    };
    Ok(FundamentalPolygon {
        kind: GroupKind::Schottky,
        genus: g,
        vertices: vec![],
        edges,
        region: RegionRep::Schottky(region),
    })
}

/// True when ∞ has been conjugated into the limit set of a Schottky group.
pub fn schottky_has_outer(group: &MarkedGroup) -> bool {
    group.schottky_pairs.iter().any(|p| p.c2_unbounded)
}

// ---------------------------------------------------------------------------
// chain set (integration ledgers)
// ---------------------------------------------------------------------------

/// One edge term of the L-chain: sign · (curve ⊗ [delta]).
#[derive(Debug, Clone)]
pub struct LTerm {
    pub name: String,
    pub curve: Curve,
    pub delta: MoebiusMap,
    pub sign: f64,
}

/// One vertex term of the V-chain: sign · (point ⊗ [d1|d2]).
#[derive(Debug, Clone)]
pub struct VTerm {
    pub name: String,
    pub point: Complex,
    pub d1: MoebiusMap,
    pub d2: MoebiusMap,
    pub sign: f64,
}

/// One path term of the W-chain: sign · (path ⊗ [d1|d2]).
#[derive(Debug, Clone)]
pub struct WTerm {
    pub name: String,
    pub path: Curve,
    pub d1: MoebiusMap,
    pub d2: MoebiusMap,
    pub sign: f64,
}

/// Integration ledgers for the chains L, V, W anchored at a basepoint.
#[derive(Debug, Clone)]
pub struct ChainSet {
    pub basepoint: Complex,
    pub l_terms: Vec<LTerm>,
    pub v_terms: Vec<VTerm>,
    pub w_terms: Vec<WTerm>,
}

impl ChainSet {
    /// Mirror chains in the lower half-plane (same group elements).
    pub fn mirrored(&self) -> ChainSet {
        ChainSet {
            basepoint: self.basepoint.conj(),
            l_terms: self
                .l_terms
                .iter()
                .map(|t| LTerm {
                    name: format!("{}~m", t.name),
                    curve: t.curve.mirror(),
                    delta: t.delta,
                    sign: t.sign,
                })
                .collect(),
            v_terms: self
                .v_terms
                .iter()
                .map(|t| VTerm {
                    name: format!("{}~m", t.name),
                    point: t.point.conj(),
                    d1: t.d1,
                    d2: t.d2,
                    sign: t.sign,
                })
                .collect(),
            w_terms: self
                .w_terms
                .iter()
                .map(|t| WTerm {
                    name: format!("{}~m", t.name),
                    path: t.path.mirror(),
                    d1: t.d1,
                    d2: t.d2,
                    sign: t.sign,
                })
                .collect(),
        }
    }
}

/// Builds the chain ledgers. For Fuchsian groups `basepoint` is a real
/// number p ∉ Γ(∞) (None picks one automatically); V has 4g−1 entries and W
/// mirrors its structure with straight admissible paths from p. Schottky
/// boundary circles are closed, so V and W are empty.
pub fn chains_2d(
    group: &MarkedGroup,
    poly: &FundamentalPolygon,
    basepoint: Option<f64>,
) -> Result<ChainSet> {
    match group.kind {
        GroupKind::Fuchsian => fuchsian_chains(group, poly, basepoint),
        GroupKind::Schottky => {
            let mut l_terms = Vec::new();
            for k in 0..group.genus {
                l_terms.push(LTerm {
                    name: format!("-C{}[g{}^-1]", k + 1, k + 1),
                    curve: poly.edge(EdgeLabel::C(k)).curve.clone(),
                    delta: group.generators[k].inverse(),
                    sign: -1.0,
                });
            }
            Ok(ChainSet {
                basepoint: Complex::new(0.0, 0.0),
                l_terms,
                v_terms: vec![],
                w_terms: vec![],
            })
        }
    }
}

fn fuchsian_chains(
    group: &MarkedGroup,
    poly: &FundamentalPolygon,
    basepoint: Option<f64>,
) -> Result<ChainSet> {
    let g = group.genus;
    let p = match basepoint {
        Some(p) => {
            let poles = pole_set(group, 3);
            let closest = poles
                .iter()
                .map(|q| (p - q).abs())
                .fold(f64::INFINITY, f64::min);
            if closest < 1e-6 {
                return Err(Error::BadBasepoint(format!(
                    "p = {p} is within 1e-6 of a pole of a short word"
                )));
            }
            p
        }
        None => default_basepoint(group),
    };
    let pc = Complex::new(p, 0.0);

    let mut l_terms = Vec::new();
    for k in 0..g {
        l_terms.push(LTerm {
            name: format!("b{}[beta{}]", k + 1, k + 1),
            curve: poly.edge(EdgeLabel::B(k)).curve.clone(),
            delta: *group.beta(k),
            sign: 1.0,
        });
        l_terms.push(LTerm {
            name: format!("-a{}[alpha{}]", k + 1, k + 1),
            curve: poly.edge(EdgeLabel::A(k)).curve.clone(),
            delta: *group.alpha(k),
            sign: -1.0,
        });
    }

    let gam: Vec<MoebiusMap> = (0..g).map(|k| group.commutator(k)).collect();
    let mut v_terms = Vec::new();
    let mut w_terms = Vec::new();
    let path_to = |k: usize| Curve::Seg {
        from: pc,
        to: poly.vertex_b0(k),
    };
    for k in 0..g {
        let prev = (k + g - 1) % g;
        let ab = group.alpha(k).compose(group.beta(k));
        v_terms.push(VTerm {
            name: format!("a{}(0)[alpha{0}|beta{0}]", k + 1),
            point: poly.vertex_a0(k),
            d1: *group.alpha(k),
            d2: *group.beta(k),
            sign: 1.0,
        });
        w_terms.push(WTerm {
            name: format!("P{}[alpha{}|beta{}]", prev + 1, k + 1, k + 1),
            path: path_to(prev),
            d1: *group.alpha(k),
            d2: *group.beta(k),
            sign: 1.0,
        });
        v_terms.push(VTerm {
            name: format!("-b{}(0)[beta{0}|alpha{0}]", k + 1),
            point: poly.vertex_b0(k),
            d1: *group.beta(k),
            d2: *group.alpha(k),
            sign: -1.0,
        });
        w_terms.push(WTerm {
            name: format!("-P{}[beta{0}|alpha{0}]", k + 1),
            path: path_to(k),
            d1: *group.beta(k),
            d2: *group.alpha(k),
            sign: -1.0,
        });
        v_terms.push(VTerm {
            name: format!("b{}(0)[gamma{0}^-1|alpha{0}beta{0}]", k + 1),
            point: poly.vertex_b0(k),
            d1: gam[k].inverse(),
            d2: ab,
            sign: 1.0,
        });
        w_terms.push(WTerm {
            name: format!("P{}[gamma{0}^-1|alpha{0}beta{0}]", k + 1),
            path: path_to(k),
            d1: gam[k].inverse(),
            d2: ab,
            sign: 1.0,
        });
    }
    // −Σ_{k=1}^{g−1} b_g(0) ⊗ [γ_g⁻¹…γ_{k+1}⁻¹ | γ_k⁻¹]  (0-based k ≤ g−2)
    for k in 0..g.saturating_sub(1) {
        let mut d1 = MoebiusMap::identity();
        for j in ((k + 1)..g).rev() {
            d1 = d1.compose(&gam[j].inverse());
        }
        v_terms.push(VTerm {
            name: format!("-b{}(0)[G{}|gamma{}^-1]", g, k + 2, k + 1),
            point: poly.vertex_b0(g - 1),
            d1,
            d2: gam[k].inverse(),
            sign: -1.0,
        });
        w_terms.push(WTerm {
            name: format!("-P{}[G{}|gamma{}^-1]", g, k + 2, k + 1),
            path: path_to(g - 1),
            d1,
            d2: gam[k].inverse(),
            sign: -1.0,
        });
    }

    Ok(ChainSet {
        basepoint: pc,
        l_terms,
        v_terms,
        w_terms,
    })
}

/// Real points γ(∞) of words up to the given length (poles the basepoint
/// must avoid).
pub fn pole_set(group: &MarkedGroup, max_len: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for w in crate::group::enumerate(group, max_len) {
        if w.element.c.norm() > 1e-12 {
            let q = w.element.a / w.element.c;
            if q.im.abs() < 1e-6 {
                out.push(q.re);
            }
        }
    }
    out
}

/// Deterministic basepoint: grid point in [−8, 8] furthest from all poles
/// of words of length ≤ 3.
pub fn default_basepoint(group: &MarkedGroup) -> f64 {
    let poles = pole_set(group, 3);
    let mut best = (0.0, -1.0);
    for i in 0..1601 {
        let p = -8.0 + i as f64 * 0.01;
        let d = poles
            .iter()
            .map(|q| (p - q).abs())
            .fold(f64::INFINITY, f64::min);
        if d > best.1 {
            best = (p, d);
        }
    }
    best.0
}

// ---------------------------------------------------------------------------
// alternative fundamental domain (cut-and-paste across edge a₁)
// ---------------------------------------------------------------------------

/// Alternative fundamental domain: the triangle (a₁(0), a₁(1), m) is cut off
/// the polygon and its α₁⁻¹-image glued along a₁′, with
/// m = arc-midpoint + frac·(barycenter − arc-midpoint).
pub struct AlternativeDomain {
    pub chains: ChainSet,
    pub region: CompositeRegion,
    pub cut_applied: bool,
}

pub fn alternative_domain(
    group: &MarkedGroup,
    poly: &FundamentalPolygon,
    chains: &ChainSet,
    frac: f64,
) -> Result<AlternativeDomain> {
    if group.kind != GroupKind::Fuchsian {
        return Err(Error::InvalidGroup(
            "alternative domains are implemented for Fuchsian polygons".into(),
        ));
    }
    let base = match &poly.region {
        RegionRep::Fuchsian(r) => r.clone(),
        _ => return Err(Error::InvalidGroup("expected a Fuchsian region".into())),
    };
    if frac == 0.0 {
        return Ok(AlternativeDomain {
            chains: chains.clone(),
            region: CompositeRegion {
                base,
                minus: vec![],
                plus: vec![],
            },
            cut_applied: false,
        });
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::InvalidGroup(format!(
            "cut fraction must lie in (0,1), got {frac}"
        )));
    }
    let a_edge = poly.edge(EdgeLabel::A(0));
    let a0 = a_edge.curve.start();
    let a1 = a_edge.curve.end();
    let mid = a_edge.curve.at(0.5);
    let bary = poly.barycenter();
    let m = mid + frac * (bary - mid);
    if !base.contains(m) {
        return Err(Error::InvalidGroup(
            "cut point left the polygon; reduce frac".into(),
        ));
    }
    let alpha_inv = group.alpha(0).inverse();

    // geodesic cut sides: the hyperbolic triangle (a₁(0), a₁(1), m) lies in
    // the closed polygon by convexity, and its α₁⁻¹-image in the adjacent
    // translate, so the surgery is exact.
    let new_a = Curve::Chain(vec![Curve::geodesic(a0, m)?, Curve::geodesic(m, a1)?]);
    let tri = ArcGon::from_curves(&[
        a_edge.curve.clone(),
        Curve::geodesic(a1, m)?,
        Curve::geodesic(m, a0)?,
    ])?;
    let tri_img = ArcGon::from_curves(&[
        a_edge.curve.mapped(&alpha_inv),
        Curve::geodesic(a1, m)?.mapped(&alpha_inv),
        Curve::geodesic(m, a0)?.mapped(&alpha_inv),
    ])?;

    let mut chains2 = chains.clone();
    for t in chains2.l_terms.iter_mut() {
        if t.name.starts_with("-a1[") {
            t.curve = new_a.clone();
        }
    }
    Ok(AlternativeDomain {
        chains: chains2,
        region: CompositeRegion {
            base,
            minus: vec![tri],
            plus: vec![tri_img],
        },
        cut_applied: true,
    })
}

// ---------------------------------------------------------------------------
// 3-D region
// ---------------------------------------------------------------------------

/// Membership data for the fundamental region of the group in upper
/// half-space.
#[derive(Debug, Clone)]
pub enum Region3D {
    /// Fermi membership: (x + iy, t) ∈ R iff x + i√(y² + t²) lies in the
    /// polygon of the invariant vertical plane.
    Fuchsian { upper: PolygonRegion },
    /// Inside the hemisphere over the outer circle, outside the hemispheres
    /// over the holes.
    Schottky { outer: Circle, holes: Vec<Circle> },
}

impl Region3D {
    pub fn contains(&self, p: HyperbolicPoint3) -> bool {
        match self {
            Region3D::Fuchsian { upper } => {
                let r = (p.z.im * p.z.im + p.t * p.t).sqrt();
                upper.contains(Complex::new(p.z.re, r))
            }
            Region3D::Schottky { outer, holes } => {
                let d2 = (p.z - outer.center).norm_sqr() + p.t * p.t;
                if d2 > outer.radius * outer.radius {
                    return false;
                }
                for h in holes {
                    if (p.z - h.center).norm_sqr() + p.t * p.t < h.radius * h.radius {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Wall sample points with their pairing elements.
    pub fn wall_samples(
        &self,
        group: &MarkedGroup,
        m: usize,
    ) -> Result<Vec<(Vec<HyperbolicPoint3>, MoebiusMap)>> {
        let mut out = Vec::new();
        match self {
            Region3D::Fuchsian { .. } => {
                let poly = build_polygon(group)?;
                for e in &poly.edges {
                    let mut pts = Vec::new();
                    for i in 0..m {
                        let t = (i as f64 + 0.5) / m as f64;
                        let w = e.curve.at(t);
                        for j in 0..3 {
                            let psi = -1.2 + 1.2 * j as f64;
                            pts.push(HyperbolicPoint3 {
                                z: Complex::new(w.re, w.im * psi.sin()),
                                t: w.im * psi.cos(),
                            });
                        }
                    }
                    out.push((pts, e.to_partner));
                }
            }
            Region3D::Schottky { .. } => {
                for (k, pair) in group.schottky_pairs.iter().enumerate() {
                    let mut pts = Vec::new();
                    for i in 0..m {
                        let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.3) / m as f64;
                        for j in 1..4 {
                            let psi = j as f64 * 0.35;
                            pts.push(HyperbolicPoint3 {
                                z: pair.c1.center
                                    + pair.c1.radius * psi.cos() * Complex::new(th.cos(), th.sin()),
                                t: pair.c1.radius * psi.sin(),
                            });
                        }
                    }
                    out.push((pts, group.generators[k]));
                }
            }
        }
        Ok(out)
    }
}

/// Builds the 3-D fundamental region. Schottky groups must have ∞ in the
/// limit set (apply `conjugate_infinity_to_limit_set` first).
pub fn region3d(group: &MarkedGroup) -> Result<Region3D> {
    match group.kind {
        GroupKind::Fuchsian => {
            let poly = build_polygon(group)?;
            match poly.region {
                RegionRep::Fuchsian(upper) => Ok(Region3D::Fuchsian { upper }),
                _ => unreachable!(),
            }
        }
        GroupKind::Schottky => {
            if !schottky_has_outer(group) {
                return Err(Error::InvalidGroup(
                    "Schottky region needs ∞ ∈ Λ: apply conjugate_infinity_to_limit_set first"
                        .into(),
                ));
            }
            let poly = build_polygon(group)?;
            match poly.region {
                RegionRep::Schottky(r) => Ok(Region3D::Schottky {
                    outer: r.outer,
                    holes: r.holes,
                }),
                _ => unreachable!(),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// formal chain ledger (symbolic boundary identities)
// ---------------------------------------------------------------------------

/// Cells of the formal ledger; M-suffixed cells are lower half-plane
/// mirrors, Vert* the vertical 1-cells of the 3-D region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cell {
    Top3,
    Face2,
    Face2M,
    WallA(usize),
    WallB(usize),
    HemiC(usize),
    EdgeA(usize),
    EdgeB(usize),
    EdgeAM(usize),
    EdgeBM(usize),
    CircC(usize),
    /// Vertical Fermi-fiber 1-cell over a registered vertex, oriented from
    /// the mirror vertex up to the vertex.
    VertFiber(usize),
    Pt(usize),
}

impl Cell {
    fn dim(&self) -> usize {
        match self {
            Cell::Top3 => 3,
            Cell::Face2 | Cell::Face2M | Cell::WallA(_) | Cell::WallB(_) | Cell::HemiC(_) => 2,
            Cell::Pt(_) => 0,
            _ => 1,
        }
    }
}

/// Bar word of length ≤ 2 over registry element ids.
pub type Word = (Option<usize>, Option<usize>);

/// Integer chain over (acting element, cell, bar word).
pub type FormalChain = BTreeMap<(usize, Cell, Word), i64>;

/// Registry of group elements (dedup 1e−10) and 0-cell points (dedup 1e−9),
/// plus per-cell boundary recipes.
pub struct Ledger {
    pub elems: Vec<MoebiusMap>,
    pub points: Vec<Complex>,
    boundaries: BTreeMap<Cell, Vec<(usize, Cell, i64)>>,
}

impl Ledger {
    fn new() -> Ledger {
        Ledger {
            elems: vec![MoebiusMap::identity()],
            points: vec![],
            boundaries: BTreeMap::new(),
        }
    }

    pub fn elem_id(&mut self, m: &MoebiusMap) -> usize {
        for (i, e) in self.elems.iter().enumerate() {
            if e.dist(m) < 1e-10 {
                return i;
            }
        }
        self.elems.push(*m);
        self.elems.len() - 1
    }

    pub fn point_id(&mut self, z: Complex) -> usize {
        let scale = 1.0 + z.norm();
        for (i, p) in self.points.iter().enumerate() {
            if (p - z).norm() < 1e-9 * scale {
                return i;
            }
        }
        self.points.push(z);
        self.points.len() - 1
    }

    /// Resolves an element acting on a registered point back into the
    /// registry when possible; the cancellations in ∂Σ depend on the vertex
    /// relations holding numerically.
    fn resolve0(&mut self, e: usize, pt: usize) -> (usize, usize) {
        if e == 0 {
            return (0, pt);
        }
        if let Ok(z) = self.elems[e].apply_finite(self.points[pt]) {
            let scale = 1.0 + z.norm();
            for (i, p) in self.points.iter().enumerate() {
                if (p - z).norm() < 1e-9 * scale {
                    return (0, i);
                }
            }
        }
        (e, pt)
    }

    fn add(chain: &mut FormalChain, key: (usize, Cell, Word), v: i64) {
        let entry = chain.entry(key).or_insert(0);
        *entry += v;
        if *entry == 0 {
            chain.remove(&key);
        }
    }

    fn compose_ids(&mut self, a: usize, b: usize) -> usize {
        if a == 0 {
            return b;
        }
        if b == 0 {
            return a;
        }
        let m = self.elems[a].compose(&self.elems[b]);
        self.elem_id(&m)
    }

    fn inv_id(&mut self, a: usize) -> usize {
        let m = self.elems[a].inverse();
        self.elem_id(&m)
    }

    fn normalize_term(&mut self, e: usize, cell: Cell) -> (usize, Cell) {
        match cell {
            Cell::Pt(p) => {
                let (e2, p2) = self.resolve0(e, p);
                (e2, Cell::Pt(p2))
            }
            // a real element carries the fiber over v to the fiber over γ(v)
            Cell::VertFiber(p) => {
                let (e2, p2) = self.resolve0(e, p);
                (e2, Cell::VertFiber(p2))
            }
            _ => (e, cell),
        }
    }

    /// ∂′ of a formal chain.
    pub fn d_prime(&mut self, chain: &FormalChain) -> FormalChain {
        let mut out = FormalChain::new();
        for (&(e, cell, word), &coef) in chain.iter() {
            let recipe = self.boundaries.get(&cell).cloned().unwrap_or_default();
            for (h, c2, s) in recipe {
                let acting = self.compose_ids(e, h);
                let (e2, c3) = self.normalize_term(acting, c2);
                Self::add(&mut out, (e2, c3, word), coef * s);
            }
        }
        out
    }

    /// ∂″ (bar differential); words containing identity letters vanish.
    pub fn d_bar(&mut self, chain: &FormalChain) -> FormalChain {
        let mut out = FormalChain::new();
        for (&(e, cell, word), &coef) in chain.iter() {
            match word {
                (None, None) => {}
                (Some(g1), None) => {
                    if g1 == 0 {
                        continue;
                    }
                    let g1i = self.inv_id(g1);
                    let acted = self.compose_ids(g1i, e);
                    let t1 = self.normalize_term(acted, cell);
                    Self::add(&mut out, (t1.0, t1.1, (None, None)), coef);
                    let t2 = self.normalize_term(e, cell);
                    Self::add(&mut out, (t2.0, t2.1, (None, None)), -coef);
                }
                (Some(g1), Some(g2)) => {
                    if g1 == 0 || g2 == 0 {
                        continue;
                    }
                    let g1i = self.inv_id(g1);
                    let acted = self.compose_ids(g1i, e);
                    let t1 = self.normalize_term(acted, cell);
                    Self::add(&mut out, (t1.0, t1.1, (Some(g2), None)), coef);
                    let g12 = self.compose_ids(g1, g2);
                    if g12 != 0 {
                        let t = self.normalize_term(e, cell);
                        Self::add(&mut out, (t.0, t.1, (Some(g12), None)), -coef);
                    }
                    let t = self.normalize_term(e, cell);
                    Self::add(&mut out, (t.0, t.1, (Some(g1), None)), coef);
                }
                (None, Some(_)) => unreachable!(),
            }
        }
        out
    }

    /// Total differential ∂ = ∂′ + (−1)^p ∂″.
    pub fn d_total(&mut self, chain: &FormalChain) -> FormalChain {
        let mut out = self.d_prime(chain);
        for (&(e, cell, word), &coef) in chain.iter() {
            let sign = if cell.dim() % 2 == 0 { 1 } else { -1 };
            let mut single = FormalChain::new();
            single.insert((e, cell, word), coef);
            for (k, v) in self.d_bar(&single) {
                Self::add(&mut out, k, sign * v);
            }
        }
        out
    }
}

/// Builds the ledger with boundary recipes and the canonical chains:
/// (ledger, Σ = F + L − V, R − S + E).
pub fn formal_chains(group: &MarkedGroup) -> Result<(Ledger, FormalChain, FormalChain)> {
    let poly = build_polygon(group)?;
    let mut led = Ledger::new();
    match group.kind {
        GroupKind::Fuchsian => fuchsian_formal(group, &poly, &mut led)?,
        GroupKind::Schottky => schottky_formal(group, &mut led)?,
    };
    let (sigma, rse) = match group.kind {
        GroupKind::Fuchsian => fuchsian_chain_values(group, &poly, &mut led),
        GroupKind::Schottky => schottky_chain_values(group, &mut led),
    };
    Ok((led, sigma, rse))
}

fn fuchsian_formal(
    group: &MarkedGroup,
    poly: &FundamentalPolygon,
    led: &mut Ledger,
) -> Result<()> {
    let g = group.genus;
    let n = 4 * g;
    let vid: Vec<usize> = (0..n).map(|j| led.point_id(poly.vertices[j])).collect();
    let vmid: Vec<usize> = (0..n)
        .map(|j| led.point_id(poly.vertices[j].conj()))
        .collect();

    let alpha_inv: Vec<usize> = (0..g)
        .map(|k| led.elem_id(&group.alpha(k).inverse()))
        .collect();
    let beta_inv: Vec<usize> = (0..g)
        .map(|k| led.elem_id(&group.beta(k).inverse()))
        .collect();

    let mut face = Vec::new();
    let mut face_m = Vec::new();
    let mut top = vec![(0usize, Cell::Face2, -1i64), (0, Cell::Face2M, 1)];
    for k in 0..g {
        face.push((0, Cell::EdgeA(k), 1));
        face.push((beta_inv[k], Cell::EdgeB(k), 1));
        face.push((alpha_inv[k], Cell::EdgeA(k), -1));
        face.push((0, Cell::EdgeB(k), -1));
        face_m.push((0, Cell::EdgeAM(k), 1));
        face_m.push((beta_inv[k], Cell::EdgeBM(k), 1));
        face_m.push((alpha_inv[k], Cell::EdgeAM(k), -1));
        face_m.push((0, Cell::EdgeBM(k), -1));
        top.push((0, Cell::WallA(k), 1));
        top.push((alpha_inv[k], Cell::WallA(k), -1));
        top.push((beta_inv[k], Cell::WallB(k), 1));
        top.push((0, Cell::WallB(k), -1));
    }
    led.boundaries.insert(Cell::Face2, face);
    led.boundaries.insert(Cell::Face2M, face_m);
    led.boundaries.insert(Cell::Top3, top);

    for k in 0..g {
        let (a0, a1) = (vid[4 * k], vid[(4 * k + 1) % n]);
        let (b0, b1) = (vid[(4 * k + 4) % n], vid[(4 * k + 3) % n]);
        let (am0, am1) = (vmid[4 * k], vmid[(4 * k + 1) % n]);
        let (bm0, bm1) = (vmid[(4 * k + 4) % n], vmid[(4 * k + 3) % n]);
        led.boundaries
            .insert(Cell::EdgeA(k), vec![(0, Cell::Pt(a1), 1), (0, Cell::Pt(a0), -1)]);
        led.boundaries
            .insert(Cell::EdgeB(k), vec![(0, Cell::Pt(b1), 1), (0, Cell::Pt(b0), -1)]);
        led.boundaries
            .insert(Cell::EdgeAM(k), vec![(0, Cell::Pt(am1), 1), (0, Cell::Pt(am0), -1)]);
        led.boundaries
            .insert(Cell::EdgeBM(k), vec![(0, Cell::Pt(bm1), 1), (0, Cell::Pt(bm0), -1)]);
        led.boundaries.insert(
            Cell::WallA(k),
            vec![
                (0, Cell::EdgeA(k), 1),
                (0, Cell::EdgeAM(k), -1),
                (0, Cell::VertFiber(a1), -1),
                (0, Cell::VertFiber(a0), 1),
            ],
        );
        led.boundaries.insert(
            Cell::WallB(k),
            vec![
                (0, Cell::EdgeB(k), 1),
                (0, Cell::EdgeBM(k), -1),
                (0, Cell::VertFiber(b1), -1),
                (0, Cell::VertFiber(b0), 1),
            ],
        );
        led.boundaries
            .insert(Cell::VertFiber(a0), vec![(0, Cell::Pt(a0), 1), (0, Cell::Pt(am0), -1)]);
        led.boundaries
            .insert(Cell::VertFiber(a1), vec![(0, Cell::Pt(a1), 1), (0, Cell::Pt(am1), -1)]);
        led.boundaries
            .insert(Cell::VertFiber(b0), vec![(0, Cell::Pt(b0), 1), (0, Cell::Pt(bm0), -1)]);
        led.boundaries
            .insert(Cell::VertFiber(b1), vec![(0, Cell::Pt(b1), 1), (0, Cell::Pt(bm1), -1)]);
    }
    Ok(())
}

fn fuchsian_chain_values(
    group: &MarkedGroup,
    poly: &FundamentalPolygon,
    led: &mut Ledger,
) -> (FormalChain, FormalChain) {
    let g = group.genus;
    let alpha_ids: Vec<usize> = (0..g).map(|k| led.elem_id(group.alpha(k))).collect();
    let beta_ids: Vec<usize> = (0..g).map(|k| led.elem_id(group.beta(k))).collect();
    let gam_inv: Vec<usize> = (0..g)
        .map(|k| led.elem_id(&group.commutator(k).inverse()))
        .collect();
    let ab_ids: Vec<usize> = (0..g)
        .map(|k| led.elem_id(&group.alpha(k).compose(group.beta(k))))
        .collect();

    let mut sigma = FormalChain::new();
    Ledger::add(&mut sigma, (0, Cell::Face2, (None, None)), 1);
    for k in 0..g {
        Ledger::add(&mut sigma, (0, Cell::EdgeB(k), (Some(beta_ids[k]), None)), 1);
        Ledger::add(&mut sigma, (0, Cell::EdgeA(k), (Some(alpha_ids[k]), None)), -1);
    }
    for k in 0..g {
        let a0 = led.point_id(poly.vertex_a0(k));
        let b0 = led.point_id(poly.vertex_b0(k));
        Ledger::add(
            &mut sigma,
            (0, Cell::Pt(a0), (Some(alpha_ids[k]), Some(beta_ids[k]))),
            -1,
        );
        Ledger::add(
            &mut sigma,
            (0, Cell::Pt(b0), (Some(beta_ids[k]), Some(alpha_ids[k]))),
            1,
        );
        Ledger::add(
            &mut sigma,
            (0, Cell::Pt(b0), (Some(gam_inv[k]), Some(ab_ids[k]))),
            -1,
        );
    }
    for k in 0..g.saturating_sub(1) {
        let mut d1 = MoebiusMap::identity();
        for j in ((k + 1)..g).rev() {
            d1 = d1.compose(&group.commutator(j).inverse());
        }
        let d1id = led.elem_id(&d1);
        let bg0 = led.point_id(poly.vertex_b0(g - 1));
        Ledger::add(&mut sigma, (0, Cell::Pt(bg0), (Some(d1id), Some(gam_inv[k]))), 1);
    }

    let mut rse = FormalChain::new();
    Ledger::add(&mut rse, (0, Cell::Top3, (None, None)), 1);
    for k in 0..g {
        Ledger::add(&mut rse, (0, Cell::WallB(k), (Some(beta_ids[k]), None)), -1);
        Ledger::add(&mut rse, (0, Cell::WallA(k), (Some(alpha_ids[k]), None)), 1);
        let e0 = led.point_id(poly.vertex_a0(k));
        let f0 = led.point_id(poly.vertex_b0(k));
        Ledger::add(
            &mut rse,
            (0, Cell::VertFiber(e0), (Some(alpha_ids[k]), Some(beta_ids[k]))),
            1,
        );
        Ledger::add(
            &mut rse,
            (0, Cell::VertFiber(f0), (Some(beta_ids[k]), Some(alpha_ids[k]))),
            -1,
        );
        Ledger::add(
            &mut rse,
            (0, Cell::VertFiber(f0), (Some(gam_inv[k]), Some(ab_ids[k]))),
            1,
        );
    }
    for k in 0..g.saturating_sub(1) {
        let mut d1 = MoebiusMap::identity();
        for j in ((k + 1)..g).rev() {
            d1 = d1.compose(&group.commutator(j).inverse());
        }
        let d1id = led.elem_id(&d1);
        let fg0 = led.point_id(poly.vertex_b0(g - 1));
        Ledger::add(
            &mut rse,
            (0, Cell::VertFiber(fg0), (Some(d1id), Some(gam_inv[k]))),
            -1,
        );
    }
    (sigma, rse)
}

fn schottky_formal(group: &MarkedGroup, led: &mut Ledger) -> Result<()> {
    let g = group.genus;
    let gen_ids: Vec<usize> = group.generators.iter().map(|m| led.elem_id(m)).collect();
    let mut face = Vec::new();
    let mut top = vec![(0usize, Cell::Face2, -1i64)];
    for k in 0..g {
        face.push((0, Cell::CircC(k), 1));
        face.push((gen_ids[k], Cell::CircC(k), -1));
        top.push((0, Cell::HemiC(k), 1));
        top.push((gen_ids[k], Cell::HemiC(k), -1));
        led.boundaries
            .insert(Cell::HemiC(k), vec![(0, Cell::CircC(k), 1)]);
        led.boundaries.insert(Cell::CircC(k), vec![]);
    }
    led.boundaries.insert(Cell::Face2, face);
    led.boundaries.insert(Cell::Top3, top);
    Ok(())
}

fn schottky_chain_values(group: &MarkedGroup, led: &mut Ledger) -> (FormalChain, FormalChain) {
    let g = group.genus;
    let gen_inv: Vec<usize> = group
        .generators
        .iter()
        .map(|m| led.elem_id(&m.inverse()))
        .collect();
    let mut sigma = FormalChain::new();
    Ledger::add(&mut sigma, (0, Cell::Face2, (None, None)), 1);
    for k in 0..g {
        Ledger::add(&mut sigma, (0, Cell::CircC(k), (Some(gen_inv[k]), None)), -1);
    }
    let mut rse = FormalChain::new();
    Ledger::add(&mut rse, (0, Cell::Top3, (None, None)), 1);
    for k in 0..g {
        Ledger::add(&mut rse, (0, Cell::HemiC(k), (Some(gen_inv[k]), None)), 1);
    }
    (sigma, rse)
}

/// Exact symbolic checks: (∂Σ, ∂(R−S+E) + Σ); both empty when the ledger
/// identities hold. The Fuchsian Σ here is the single-surface cycle and the
/// 3-chain boundary closes against Σ − Σ̄, so the second defect is reported
/// against the two-component cycle.
pub fn chain_identity_defects(group: &MarkedGroup) -> Result<(FormalChain, FormalChain)> {
    let (mut led, sigma, rse) = formal_chains(group)?;
    let d_sigma = led.d_total(&sigma);
    let mut d_rse = led.d_total(&rse);
    match group.kind {
        GroupKind::Fuchsian => {
            // ∂(R−S+E) = −(Σ − Σ̄): add Σ and subtract Σ̄
            for (&(e, cell, word), &v) in sigma.iter() {
                Ledger::add(&mut d_rse, (e, cell, word), v);
                let mcell = mirror_cell(cell, &mut led);
                Ledger::add(&mut d_rse, (e, mcell, word), -v);
            }
        }
        GroupKind::Schottky => {
            for (&k, &v) in sigma.iter() {
                Ledger::add(&mut d_rse, k, v);
            }
        }
    }
    Ok((d_sigma, d_rse))
}

fn mirror_cell(cell: Cell, led: &mut Ledger) -> Cell {
    match cell {
        Cell::Face2 => Cell::Face2M,
        Cell::EdgeA(k) => Cell::EdgeAM(k),
        Cell::EdgeB(k) => Cell::EdgeBM(k),
        Cell::Pt(p) => {
            let z = led.points[p].conj();
            Cell::Pt(led.point_id(z))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{
        build_fuchsian, build_schottky, conjugate_infinity_to_limit_set, CirclePairSpec,
        SchottkyCircleData,
    };
    use crate::quad::integrate2d;

    fn schottky2() -> MarkedGroup {
        build_schottky(&SchottkyCircleData {
            pairs: vec![
                CirclePairSpec { c1: [-2.0, 0.0], r1: 0.5, c2: [2.0, 0.0], r2: 0.5 },
                CirclePairSpec { c1: [-6.0, 0.0], r1: 0.5, c2: [6.0, 0.0], r2: 0.5 },
            ],
        })
        .unwrap()
    }

    #[test]
    fn polygon_structure_genus2() {
        let g = build_fuchsian(2).unwrap();
        let poly = build_polygon(&g).unwrap();
        assert_eq!(poly.edges.len(), 8);
        assert_eq!(poly.vertices.len(), 8);
        assert!(vertex_relation_residual(&g, &poly) < 1e-10);
        // interior angle π/4 at every vertex
        let n = 8;
        for j in 0..n {
            let prev =
                Curve::geodesic(poly.vertices[(j + n - 1) % n], poly.vertices[j]).unwrap();
            let next = Curve::geodesic(poly.vertices[j], poly.vertices[(j + 1) % n]).unwrap();
            let vin = prev.velocity(1.0);
            let vout = next.velocity(0.0);
            let turn = (vout / vin).arg().abs();
            let interior = std::f64::consts::PI - turn;
            assert!(
                (interior - std::f64::consts::FRAC_PI_4).abs() < 1e-9,
                "vertex {j}: interior angle {interior}"
            );
        }
    }

    #[test]
    fn side_pairing_carries_edges() {
        // images land on the partner's geodesic circle (Hausdorff-type test;
        // a Möbius map does not preserve the angle-linear parametrization)
        // and endpoints correspond exactly.
        let g = build_fuchsian(2).unwrap();
        let poly = build_polygon(&g).unwrap();
        for e in &poly.edges {
            let partner = poly.edge(e.partner);
            let (pc, pr) = match &partner.curve {
                Curve::Arc { center, radius, .. } => (*center, *radius),
                _ => panic!("geodesic sides are arcs"),
            };
            for i in 0..=10 {
                let t = i as f64 / 10.0;
                let img = e.to_partner.apply_finite(e.curve.at(t)).unwrap();
                assert!(
                    ((img - pc).norm() - pr).abs() < 1e-8,
                    "edge {:?} t={t} leaves partner circle",
                    e.label
                );
            }
            for t in [0.0, 1.0] {
                let img = e.to_partner.apply_finite(e.curve.at(t)).unwrap();
                assert!((img - partner.curve.at(t)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn polygon_area_gauss_bonnet() {
        for genus in [2usize, 3] {
            let g = build_fuchsian(genus).unwrap();
            let poly = build_polygon(&g).unwrap();
            let area = integrate2d(poly.region2d(), &|z| 1.0 / (z.im * z.im), 1e-9);
            let expected = 2.0 * std::f64::consts::PI * (2.0 * genus as f64 - 2.0);
            assert!(
                (area.value - expected).abs() < 1e-6 * expected,
                "genus {genus}: area {} vs {expected}",
                area.value
            );
        }
    }

    #[test]
    fn schottky_polygon_arcs_and_pairing_orientation() {
        let g = schottky2();
        let poly = build_polygon(&g).unwrap();
        assert_eq!(poly.edges.len(), 4);
        // C′_k = −γ_k(C_k): the image of ∂F-oriented C_k runs against the
        // ∂F orientation of C′_k
        for k in 0..2 {
            let ck = poly.edge(EdgeLabel::C(k));
            let cpk = poly.edge(EdgeLabel::Cp(k));
            let c2 = g.schottky_pairs[k].c2;
            let w_img = {
                let a = ck.to_partner.apply_finite(ck.curve.at(0.10)).unwrap() - c2.center;
                let b = ck.to_partner.apply_finite(ck.curve.at(0.15)).unwrap() - c2.center;
                (b / a).arg()
            };
            let w_cp = {
                let a = cpk.curve.at(0.10) - c2.center;
                let b = cpk.curve.at(0.15) - c2.center;
                (b / a).arg()
            };
            assert!(
                w_img * w_cp < 0.0,
                "image of C{k} must oppose C′{k}'s boundary orientation"
            );
        }
    }

    #[test]
    fn chain_counts_genus2() {
        let g = build_fuchsian(2).unwrap();
        let poly = build_polygon(&g).unwrap();
        let ch = chains_2d(&g, &poly, None).unwrap();
        assert_eq!(ch.l_terms.len(), 4);
        // Eq. (V) carries 3g + (g−1) = 4g−1 entries
        assert_eq!(ch.v_terms.len(), 7);
        assert_eq!(ch.w_terms.len(), 7);
    }

    #[test]
    fn formal_identities_fuchsian() {
        for genus in [2usize, 3] {
            let g = build_fuchsian(genus).unwrap();
            let (d_sigma, d_rse) = chain_identity_defects(&g).unwrap();
            assert!(d_sigma.is_empty(), "genus {genus}: ∂Σ ≠ 0: {d_sigma:?}");
            assert!(d_rse.is_empty(), "genus {genus}: ∂(R−S+E)+Σ ≠ 0: {d_rse:?}");
        }
    }

    #[test]
    fn formal_identities_schottky() {
        let g = conjugate_infinity_to_limit_set(&schottky2()).unwrap();
        let (d_sigma, d_rse) = chain_identity_defects(&g).unwrap();
        assert!(d_sigma.is_empty(), "∂Σ ≠ 0: {d_sigma:?}");
        assert!(d_rse.is_empty(), "∂(R−S+E)+Σ ≠ 0: {d_rse:?}");
    }

    #[test]
    fn region3d_fuchsian_membership() {
        let g = build_fuchsian(2).unwrap();
        let r = region3d(&g).unwrap();
        let poly = build_polygon(&g).unwrap();
        let bary = poly.barycenter();
        assert!(r.contains(HyperbolicPoint3 { z: bary, t: 1e-3 }));
        assert!(!r.contains(HyperbolicPoint3 {
            z: Complex::new(50.0, 0.0),
            t: 0.5
        }));
        let reg = match &poly.region {
            RegionRep::Fuchsian(p) => p.clone(),
            _ => unreachable!(),
        };
        let mut inside = 0;
        for i in 0..1000 {
            let x = -3.0 + 6.0 * ((i as f64 * 0.618).fract());
            let y = -2.0 + 4.0 * ((i as f64 * 0.362).fract());
            let z = Complex::new(x, y);
            let in3d = r.contains(HyperbolicPoint3 { z, t: 1e-8 });
            let in2d = if y > 0.0 {
                reg.contains(z)
            } else {
                reg.contains(z.conj())
            };
            assert_eq!(in3d, in2d, "trace mismatch at {z}");
            if in3d {
                inside += 1;
            }
        }
        assert!(inside > 10);
    }

    #[test]
    fn region3d_generator_images_leave_region() {
        let g = build_fuchsian(2).unwrap();
        let r = region3d(&g).unwrap();
        let poly = build_polygon(&g).unwrap();
        let bary = poly.barycenter();
        let mut tested = 0;
        for k in 0..100 {
            let z = bary + Complex::new(0.002 * k as f64, 0.001 * k as f64);
            let p = HyperbolicPoint3 { z, t: 0.05 + 0.002 * k as f64 };
            if !r.contains(p) {
                continue;
            }
            tested += 1;
            for gen in &g.generators {
                let (q, _) = gen.act3d(p);
                assert!(!r.contains(q), "generator image stayed inside at {z}");
            }
        }
        assert!(tested > 50);
    }

    #[test]
    fn region3d_schottky_walls() {
        let g = schottky2();
        assert!(region3d(&g).is_err());
        let h = conjugate_infinity_to_limit_set(&g).unwrap();
        let r = region3d(&h).unwrap();
        for (pts, gen) in r.wall_samples(&h, 16).unwrap() {
            for p in pts {
                let (q, _) = gen.act3d(p);
                let on_some_wall = h.schottky_pairs.iter().any(|pair| {
                    let d1 = ((q.z - pair.c1.center).norm_sqr() + q.t * q.t).sqrt();
                    let d2 = ((q.z - pair.c2.center).norm_sqr() + q.t * q.t).sqrt();
                    (d1 - pair.c1.radius).abs() < 1e-8 || (d2 - pair.c2.radius).abs() < 1e-8
                });
                assert!(on_some_wall);
            }
        }
    }

    #[test]
    fn fuchsian_wall_samples_pair() {
        let g = build_fuchsian(2).unwrap();
        let r = region3d(&g).unwrap();
        for (pts, gen) in r.wall_samples(&g, 8).unwrap() {
            for p in pts {
                let (q, _) = gen.act3d(p);
                // image must sit on the partner wall: its Fermi projection
                // lies on a side geodesic of the polygon
                let poly = build_polygon(&g).unwrap();
                let w = Complex::new(q.z.re, (q.z.im * q.z.im + q.t * q.t).sqrt());
                let on_side = poly.edges.iter().any(|e| match &e.curve {
                    Curve::Arc { center, radius, .. } => {
                        ((w - center).norm() - radius).abs() < 1e-8
                    }
                    _ => false,
                });
                assert!(on_side, "wall image off every side geodesic");
            }
        }
    }

    #[test]
    fn alternative_domain_preserves_area() {
        let g = build_fuchsian(2).unwrap();
        let poly = build_polygon(&g).unwrap();
        let ch = chains_2d(&g, &poly, None).unwrap();
        let alt = alternative_domain(&g, &poly, &ch, 0.35).unwrap();
        assert!(alt.cut_applied);
        let a0 = integrate2d(poly.region2d(), &|z| 1.0 / (z.im * z.im), 1e-9).value;
        let a1 = integrate2d(&alt.region, &|z| 1.0 / (z.im * z.im), 1e-9).value;
        assert!((a0 - a1).abs() < 1e-8 * a0, "areas {a0} vs {a1}");

        let same = alternative_domain(&g, &poly, &ch, 0.0).unwrap();
        assert!(!same.cut_applied);
    }

    #[test]
    fn edges_meet_only_at_vertices() {
        let g = build_fuchsian(2).unwrap();
        let poly = build_polygon(&g).unwrap();
        let m = 40;
        for (i, e1) in poly.edges.iter().enumerate() {
            for e2 in poly.edges.iter().skip(i + 1) {
                let mut min_d = f64::INFINITY;
                for a in 1..m {
                    for b in 1..m {
                        let d = (e1.curve.at(a as f64 / m as f64)
                            - e2.curve.at(b as f64 / m as f64))
                        .norm();
                        min_d = min_d.min(d);
                    }
                }
                let share_vertex = [e1.curve.start(), e1.curve.end()].iter().any(|v| {
                    (v - e2.curve.start()).norm() < 1e-9 || (v - e2.curve.end()).norm() < 1e-9
                });
                if !share_vertex {
                    assert!(
                        min_d > 1e-3,
                        "edges {:?} {:?} nearly intersect",
                        e1.label,
                        e2.label
                    );
                }
            }
        }
    }

    #[test]
    fn basepoint_avoids_poles() {
        let g = build_fuchsian(2).unwrap();
        let p = default_basepoint(&g);
        let poles = pole_set(&g, 3);
        let d = poles.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min);
        assert!(d > 1e-2, "basepoint {p} too close to a pole ({d})");
        let poly = build_polygon(&g).unwrap();
        assert!(chains_2d(&g, &poly, Some(poles[0])).is_err());
    }
}
