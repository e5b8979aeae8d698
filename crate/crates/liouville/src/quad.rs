//! Deterministic adaptive quadrature: Gauss–Kronrod on intervals and paths,
//! nested slicing over curved 2-D regions, and closed-form column
//! integration in the vertical direction of hyperbolic 3-space.
//!
//! All subdivision is depth-first with a fixed order, so results are
//! bit-identical across runs.

use num_complex::Complex64 as Complex;

use crate::error::Error;
use crate::Result;

/// Value, error estimate and cell count of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ComplexQuad {
    pub value: Complex,
    pub abs_error: f64,
    pub cells: usize,
}

// 7-point Gauss, 15-point Kronrod pair on [-1, 1].
const XGK: [f64; 15] = [
    -0.991455371120813,
    -0.949107912342759,
    -0.864864423359769,
    -0.741531185599394,
    -0.586087235467691,
    -0.405845151377397,
    -0.207784955007898,
    0.0,
    0.207784955007898,
    0.405845151377397,
    0.586087235467691,
    0.741531185599394,
    0.864864423359769,
    0.949107912342759,
    0.991455371120813,
];
const WGK: [f64; 15] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
    0.204432940075298,
    0.190350578064785,
    0.169004726639267,
    0.140653259715525,
    0.104790010322250,
    0.063092092629979,
    0.022935322010529,
];
const WG: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn gk15_complex(f: &mut dyn FnMut(f64) -> Complex, a: f64, b: f64) -> (Complex, f64) {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut kron = Complex::new(0.0, 0.0);
    let mut gauss = Complex::new(0.0, 0.0);
    for (i, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let v = f(mid + h * x);
        kron += wk * v;
        if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }
    kron *= h;
    gauss *= h;
    (kron, (kron - gauss).norm())
}

/// Worst-interval-first adaptive refinement with a hard cell budget; the
/// heap is ordered by (error, insertion index) so runs are deterministic.
struct Piece {
    err: f64,
    idx: usize,
    a: f64,
    b: f64,
    val_re: f64,
    val_im: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err && self.idx == other.idx
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err
            .partial_cmp(&other.err)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(other.idx.cmp(&self.idx))
    }
}

fn adaptive_core(
    f: &mut dyn FnMut(f64) -> Complex,
    a: f64,
    b: f64,
    tol: f64,
    max_cells: usize,
) -> ComplexQuad {
    use std::collections::BinaryHeap;
    let (v0, e0) = gk15_complex(f, a, b);
    let mut heap: BinaryHeap<Piece> = BinaryHeap::new();
    heap.push(Piece {
        err: e0,
        idx: 0,
        a,
        b,
        val_re: v0.re,
        val_im: v0.im,
    });
    let mut next_idx = 1;
    let mut total_err = e0;
    let mut cells = 1;
    while total_err > tol && cells < max_cells {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let width = worst.b - worst.a;
        if width.abs() < 4.0 * f64::EPSILON * (worst.a.abs() + worst.b.abs() + 1.0) {
            // cannot refine further; keep as converged
            total_err -= worst.err;
            heap.push(Piece { err: 0.0, ..worst });
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15_complex(f, worst.a, m);
        let (v2, e2) = gk15_complex(f, m, worst.b);
        total_err += e1 + e2 - worst.err;
        cells += 2;
        heap.push(Piece {
            err: e1,
            idx: next_idx,
            a: worst.a,
            b: m,
            val_re: v1.re,
            val_im: v1.im,
        });
        heap.push(Piece {
            err: e2,
            idx: next_idx + 1,
            a: m,
            b: worst.b,
            val_re: v2.re,
            val_im: v2.im,
        });
        next_idx += 2;
    }
    // fixed summation order by interval position
    let mut pieces: Vec<Piece> = heap.into_vec();
    pieces.sort_by(|p, q| p.a.partial_cmp(&q.a).unwrap());
    let mut value = Complex::new(0.0, 0.0);
    for p in &pieces {
        value += Complex::new(p.val_re, p.val_im);
    }
    ComplexQuad {
        value,
        abs_error: total_err.max(0.0),
        cells,
    }
}

/// Adaptive Gauss–Kronrod on [a, b] to absolute tolerance `tol`.
pub fn adaptive_1d(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> QuadResult {
    adaptive_1d_budget(f, a, b, tol, 2000)
}

/// Adaptive Gauss–Kronrod with an explicit subdivision budget.
pub fn adaptive_1d_budget(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_cells: usize,
) -> QuadResult {
    let mut g = |x: f64| Complex::new(f(x), 0.0);
    let r = adaptive_core(&mut g, a, b, tol, max_cells);
    QuadResult {
        value: r.value.re,
        abs_error: r.abs_error,
        cells: r.cells,
    }
}

/// Adaptive integration of a complex integrand; refinement is driven by the
/// modulus of the Kronrod−Gauss defect, keeping both parts on one
/// subdivision.
pub fn adaptive_1d_complex(
    f: &mut dyn FnMut(f64) -> Complex,
    a: f64,
    b: f64,
    tol: f64,
) -> ComplexQuad {
    adaptive_core(f, a, b, tol, 2000)
}

/// A region representable by vertical slices: for each x, a finite union of
/// y-intervals. Slice boundaries may be curved; `x_breaks` lists abscissae
/// where the slice structure has kinks (vertices, circle extrema).
pub trait SliceRegion {
    fn x_range(&self) -> (f64, f64);
    fn x_breaks(&self) -> Vec<f64>;
    fn slices(&self, x: f64) -> Vec<(f64, f64)>;
}

/// ∬ f dx dy over a sliced region, adaptive in both directions.
pub fn integrate2d(
    region: &dyn SliceRegion,
    f: &dyn Fn(Complex) -> f64,
    tol: f64,
) -> QuadResult {
    let (x0, x1) = region.x_range();
    let mut breaks: Vec<f64> = region
        .x_breaks()
        .into_iter()
        .filter(|&x| x > x0 + 1e-14 && x < x1 - 1e-14)
        .collect();
    breaks.push(x0);
    breaks.push(x1);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let mut total = 0.0;
    let mut err = 0.0;
    let mut cells = 0;
    // The inner tolerance sits far below the outer one so that per-eval
    // noise does not dominate the outer defect estimates.
    let inner_tol = (tol * 1e-3).max(1e-15);
    for w in breaks.windows(2) {
        let mut fx = |x: f64| {
            let mut s = 0.0;
            for (ylo, yhi) in region.slices(x) {
                if yhi > ylo {
                    let mut fy = |y: f64| f(Complex::new(x, y));
                    let r = adaptive_1d_budget(&mut fy, ylo, yhi, inner_tol, 600);
                    s += r.value;
                }
            }
            s
        };
        let r = adaptive_1d_budget(
            &mut fx,
            w[0],
            w[1],
            tol / (breaks.len() as f64 - 1.0),
            20_000,
        );
        total += r.value;
        err += r.abs_error;
        cells += r.cells;
    }
    QuadResult {
        value: total,
        abs_error: err,
        cells,
    }
}

/// A parametrized path t ∈ [0,1] ↦ ℂ with velocity.
pub trait Path {
    fn at(&self, t: f64) -> Complex;
    fn velocity(&self, t: f64) -> Complex;
}

/// Line integral of the 1-form P dz + Q dz̄ along a path;
/// `one_form(z) -> (P, Q)`.
pub fn integrate_path(
    path: &dyn Path,
    one_form: &dyn Fn(Complex) -> (Complex, Complex),
    tol: f64,
) -> ComplexQuad {
    let mut f = |t: f64| {
        let z = path.at(t);
        let v = path.velocity(t);
        let (p, q) = one_form(z);
        p * v + q * v.conj()
    };
    adaptive_1d_complex(&mut f, 0.0, 1.0, tol)
}

/// Closed-form column integral ∫_{t0}^{t1} t⁻³ dt (t1 may be ∞).
pub fn column_t3(t0: f64, t1: Option<f64>) -> Result<f64> {
    if !(t0 > 0.0) {
        return Err(Error::Quadrature(format!("column start must be > 0, got {t0}")));
    }
    let upper = match t1 {
        Some(t1) => {
            if t1 < t0 {
                return Ok(0.0);
            }
            0.5 / (t1 * t1)
        }
        None => 0.0,
    };
    Ok(0.5 / (t0 * t0) - upper)
}

/// ∭ t⁻³ over columns of a sliced base region: lower surface `t_lower(z)`,
/// optional upper surface (None = improper, convergent for t⁻³).
pub fn integrate3d(
    region: &dyn SliceRegion,
    t_lower: &dyn Fn(Complex) -> f64,
    t_upper: &dyn Fn(Complex) -> Option<f64>,
    tol: f64,
) -> Result<QuadResult> {
    let f = |z: Complex| -> f64 {
        let lo = t_lower(z);
        let hi = t_upper(z);
        column_t3(lo, hi).unwrap_or(0.0)
    };
    Ok(integrate2d(region, &f, tol))
}

/// Rectangle [x0,x1]×[y0,y1] as a slice region, for tests and simple bases.
pub struct RectRegion {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl SliceRegion for RectRegion {
    fn x_range(&self) -> (f64, f64) {
        (self.x0, self.x1)
    }
    fn x_breaks(&self) -> Vec<f64> {
        vec![]
    }
    fn slices(&self, _x: f64) -> Vec<(f64, f64)> {
        vec![(self.y0, self.y1)]
    }
}

/// Straight segment path.
pub struct Segment {
    pub from: Complex,
    pub to: Complex,
}

impl Path for Segment {
    fn at(&self, t: f64) -> Complex {
        self.from + t * (self.to - self.from)
    }
    fn velocity(&self, _t: f64) -> Complex {
        self.to - self.from
    }
}

/// Circular arc z = c + r e^{iθ}, θ from th0 to th1 (linear in t).
pub struct CircArc {
    pub center: Complex,
    pub radius: f64,
    pub th0: f64,
    pub th1: f64,
}

impl Path for CircArc {
    fn at(&self, t: f64) -> Complex {
        let th = self.th0 + t * (self.th1 - self.th0);
        self.center + self.radius * Complex::new(th.cos(), th.sin())
    }
    fn velocity(&self, t: f64) -> Complex {
        let th = self.th0 + t * (self.th1 - self.th0);
        self.radius
            * (self.th1 - self.th0)
            * Complex::new(0.0, 1.0)
            * Complex::new(th.cos(), th.sin())
    }
}
