//! Euclidean Jordan algebras of orthant, second-order and PSD blocks.
//!
//! Elements are stored as flat coordinate vectors, block after block:
//!
//! * orthant blocks hold their entries;
//! * second-order blocks hold raw `(x0, x1)` and use `⟨x, y⟩ = 2 xᵀy`, the
//!   trace inner product of the algebra;
//! * PSD blocks of side `k` hold the upper triangle row by row
//!   (`(0,0), (0,1), …, (0,k-1), (1,1), …`) with off-diagonal entries scaled
//!   by `√2`, so the plain dot product equals `tr(XY)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, SymEigen};
use crate::random::SeededRng;

/// Relative strictness of the interior test: `λ_min > ε · max(1, ‖x‖∞)`.
pub const INTERIOR_EPS: f64 = 1e-12;

/// One block of a direct-sum cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// Nonnegative orthant of the given size.
    Orthant(usize),
    /// Second-order cone `{(x0, x1) : x0 ≥ ‖x1‖}` of the given ambient
    /// dimension `m + 1`.
    SecondOrder(usize),
    /// PSD cone of symmetric matrices with the given side.
    Psd(usize),
}

impl BlockKind {
    pub fn rank(&self) -> usize {
        match *self {
            BlockKind::Orthant(k) => k,
            BlockKind::SecondOrder(_) => 2,
            BlockKind::Psd(k) => k,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            BlockKind::Orthant(k) => k,
            BlockKind::SecondOrder(m) => m,
            BlockKind::Psd(k) => k * (k + 1) / 2,
        }
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockKind::Orthant(k) => write!(f, "orthant({k})"),
            BlockKind::SecondOrder(m) => write!(f, "soc({m})"),
            BlockKind::Psd(k) => write!(f, "psd({k})"),
        }
    }
}

/// Ordered list of cone blocks; defines J, its rank n and dimension N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    blocks: Vec<BlockKind>,
    offsets: Vec<usize>,
    rank: usize,
    dim: usize,
}

impl Cone {
    pub fn new(blocks: Vec<BlockKind>) -> Result<Arc<Cone>> {
        if blocks.is_empty() {
            return Err(Error::InvalidCone("no blocks".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let (mut rank, mut dim) = (0, 0);
        for b in &blocks {
            match *b {
                BlockKind::Orthant(0) | BlockKind::Psd(0) => {
                    return Err(Error::InvalidCone(format!("{b}: size must be at least 1")))
                }
                BlockKind::SecondOrder(m) if m < 2 => {
                    return Err(Error::InvalidCone(format!("{b}: ambient dimension must be at least 2")))
                }
                _ => {}
            }
            offsets.push(dim);
            rank += b.rank();
            dim += b.dim();
        }
        Ok(Arc::new(Cone { blocks, offsets, rank, dim }))
    }

    pub fn orthant(k: usize) -> Result<Arc<Cone>> {
        Cone::new(vec![BlockKind::Orthant(k)])
    }

    pub fn second_order(m: usize) -> Result<Arc<Cone>> {
        Cone::new(vec![BlockKind::SecondOrder(m)])
    }

    pub fn psd(k: usize) -> Result<Arc<Cone>> {
        Cone::new(vec![BlockKind::Psd(k)])
    }

    pub fn blocks(&self) -> &[BlockKind] {
        &self.blocks
    }

    /// Rank n of the algebra (number of eigenvalues of an element).
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Vector-space dimension N.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn ranges(&self) -> impl Iterator<Item = (BlockKind, std::ops::Range<usize>)> + '_ {
        self.blocks.iter().zip(&self.offsets).map(|(b, &o)| (*b, o..o + b.dim()))
    }

    /// The identity element e.
    pub fn identity(self: &Arc<Self>) -> Element {
        let mut coords = vec![0.0; self.dim];
        for (b, r) in self.ranges() {
            match b {
                BlockKind::Orthant(_) => coords[r].iter_mut().for_each(|v| *v = 1.0),
                BlockKind::SecondOrder(_) => coords[r.start] = 1.0,
                BlockKind::Psd(k) => {
                    let mut idx = r.start;
                    for i in 0..k {
                        coords[idx] = 1.0;
                        idx += k - i;
                    }
                }
            }
        }
        Element { cone: Arc::clone(self), coords }
    }

    pub fn zeros(self: &Arc<Self>) -> Element {
        Element { cone: Arc::clone(self), coords: vec![0.0; self.dim] }
    }

    /// Converts coordinates to an orthonormal basis for the trace inner
    /// product (second-order blocks are scaled by `√2`).
    pub fn to_orthonormal(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = coords.to_vec();
        for (b, r) in self.ranges() {
            if let BlockKind::SecondOrder(_) = b {
                out[r].iter_mut().for_each(|v| *v *= std::f64::consts::SQRT_2);
            }
        }
        out
    }

    /// Inverse of [`Cone::to_orthonormal`].
    pub fn from_orthonormal(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = coords.to_vec();
        for (b, r) in self.ranges() {
            if let BlockKind::SecondOrder(_) = b {
                out[r].iter_mut().for_each(|v| *v /= std::f64::consts::SQRT_2);
            }
        }
        out
    }
}

/// Length of the scaled symmetric vectorization of a side-`k` matrix.
pub fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Scaled symmetric vectorization (upper triangle, row by row, `√2` off
/// the diagonal).
pub fn svec(m: &Matrix) -> Vec<f64> {
    let k = m.rows();
    let mut out = Vec::with_capacity(svec_len(k));
    for i in 0..k {
        out.push(m[(i, i)]);
        for j in (i + 1)..k {
            out.push(std::f64::consts::SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], k: usize) -> Matrix {
    assert_eq!(v.len(), svec_len(k), "svec length does not match side");
    let mut m = Matrix::zeros(k, k);
    let mut idx = 0;
    for i in 0..k {
        m[(i, i)] = v[idx];
        idx += 1;
        for j in (i + 1)..k {
            let x = v[idx] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            idx += 1;
        }
    }
    m
}

/// Element of J in the cone's coordinate convention.
#[derive(Clone, PartialEq)]
pub struct Element {
    cone: Arc<Cone>,
    coords: Vec<f64>,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Element").field("blocks", &self.cone.blocks).field("coords", &self.coords).finish()
    }
}

/// (‖x‖, ‖x‖∞, ‖x‖₁): Euclidean norm under the trace inner product, and
/// the max / sum of absolute eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub two: f64,
    pub inf: f64,
    pub one: f64,
}

impl Element {
    pub fn new(cone: &Arc<Cone>, coords: Vec<f64>) -> Result<Element> {
        if coords.len() != cone.dim() {
            return Err(Error::DimensionMismatch { expected: cone.dim(), found: coords.len() });
        }
        Ok(Element { cone: Arc::clone(cone), coords })
    }

    /// Builds an element of a single-PSD-block cone from a symmetric matrix.
    pub fn from_matrix(cone: &Arc<Cone>, m: &Matrix) -> Result<Element> {
        Element::new(cone, svec(m))
    }

    pub fn cone(&self) -> &Arc<Cone> {
        &self.cone
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Matrix of PSD block `block` (panics if that block is not PSD).
    pub fn block_matrix(&self, block: usize) -> Matrix {
        let b = self.cone.blocks[block];
        let start = self.cone.offsets[block];
        match b {
            BlockKind::Psd(k) => smat(&self.coords[start..start + b.dim()], k),
            _ => panic!("block {block} is {b}, not PSD"),
        }
    }

    fn same_cone(&self, other: &Element) -> bool {
        Arc::ptr_eq(&self.cone, &other.cone) || self.cone == other.cone
    }

    fn check(&self, other: &Element) -> Result<()> {
        if self.same_cone(other) {
            Ok(())
        } else {
            Err(Error::ConeMismatch)
        }
    }

    fn with_coords(&self, coords: Vec<f64>) -> Element {
        Element { cone: Arc::clone(&self.cone), coords }
    }

    /// Trace inner product `⟨x, y⟩ = tr(x ∘ y)`.
    ///
    /// Panics on mismatched cones.
    pub fn inner(&self, other: &Element) -> f64 {
        assert!(self.same_cone(other), "inner product across different cones");
        let mut acc = 0.0;
        for (b, r) in self.cone.ranges() {
            let d = linalg::dot(&self.coords[r.clone()], &other.coords[r]);
            acc += match b {
                BlockKind::SecondOrder(_) => 2.0 * d,
                _ => d,
            };
        }
        acc
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// `tr x`, the sum of eigenvalues.
    pub fn trace(&self) -> f64 {
        let mut acc = 0.0;
        for (b, r) in self.cone.ranges() {
            let c = &self.coords[r];
            acc += match b {
                BlockKind::Orthant(_) => c.iter().sum(),
                BlockKind::SecondOrder(_) => 2.0 * c[0],
                BlockKind::Psd(k) => {
                    let mut idx = 0;
                    let mut s = 0.0;
                    for i in 0..k {
                        s += c[idx];
                        idx += k - i;
                    }
                    s
                }
            };
        }
        acc
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: f64, other: &Element) -> Element {
        assert!(self.same_cone(other), "axpy across different cones");
        let coords = self.coords.iter().zip(&other.coords).map(|(a, b)| a + alpha * b).collect();
        self.with_coords(coords)
    }

    pub fn scaled(&self, alpha: f64) -> Element {
        self.with_coords(self.coords.iter().map(|v| alpha * v).collect())
    }

    /// Jordan product `x ∘ y`.
    pub fn circ(&self, other: &Element) -> Result<Element> {
        self.check(other)?;
        let mut out = vec![0.0; self.coords.len()];
        for (b, r) in self.cone.ranges() {
            let (x, y) = (&self.coords[r.clone()], &other.coords[r.clone()]);
            let o = &mut out[r];
            match b {
                BlockKind::Orthant(_) => {
                    for ((o, a), b) in o.iter_mut().zip(x).zip(y) {
                        *o = a * b;
                    }
                }
                BlockKind::SecondOrder(_) => {
                    o[0] = linalg::dot(x, y);
                    for i in 1..x.len() {
                        o[i] = x[0] * y[i] + y[0] * x[i];
                    }
                }
                BlockKind::Psd(k) => {
                    let (xm, ym) = (smat(x, k), smat(y, k));
                    let mut p = xm.matmul(&ym);
                    let q = ym.matmul(&xm);
                    for i in 0..k {
                        for j in 0..k {
                            p[(i, j)] = 0.5 * (p[(i, j)] + q[(i, j)]);
                        }
                    }
                    o.copy_from_slice(&svec(&p));
                }
            }
        }
        Ok(self.with_coords(out))
    }

    /// Quadratic representation `Q(self) z = 2 w∘(w∘z) − (w∘w)∘z`.
    ///
    /// PSD blocks use `W Z W`, orthant blocks `w² z`.
    pub fn quad_rep(&self, z: &Element) -> Result<Element> {
        self.check(z)?;
        let mut out = vec![0.0; self.coords.len()];
        for (b, r) in self.cone.ranges() {
            let (w, zz) = (&self.coords[r.clone()], &z.coords[r.clone()]);
            let o = &mut out[r];
            match b {
                BlockKind::Orthant(_) => {
                    for ((o, a), b) in o.iter_mut().zip(w).zip(zz) {
                        *o = a * a * b;
                    }
                }
                BlockKind::SecondOrder(_) => {
                    // 2 (wᵀz) w − det(w) R z, R = diag(1, −I)
                    let wz = linalg::dot(w, zz);
                    let det = w[0] * w[0] - linalg::dot(&w[1..], &w[1..]);
                    o[0] = 2.0 * wz * w[0] - det * zz[0];
                    for i in 1..w.len() {
                        o[i] = 2.0 * wz * w[i] + det * zz[i];
                    }
                }
                BlockKind::Psd(k) => {
                    let wm = smat(w, k);
                    let p = wm.matmul(&smat(zz, k)).matmul(&wm);
                    o.copy_from_slice(&svec(&p));
                }
            }
        }
        Ok(self.with_coords(out))
    }

    /// Blockwise eigen-decomposition.
    pub fn eigen(&self) -> Result<Eigen> {
        let mut blocks = Vec::with_capacity(self.cone.blocks.len());
        for (b, r) in self.cone.ranges() {
            let c = &self.coords[r];
            blocks.push(match b {
                BlockKind::Orthant(_) => BlockEigen::Orthant(c.to_vec()),
                BlockKind::SecondOrder(_) => {
                    let tail = &c[1..];
                    let radius = linalg::dot(tail, tail).sqrt();
                    let axis = if radius > 0.0 {
                        tail.iter().map(|v| v / radius).collect()
                    } else {
                        let mut u = vec![0.0; tail.len()];
                        u[0] = 1.0;
                        u
                    };
                    BlockEigen::SecondOrder { center: c[0], radius, axis }
                }
                BlockKind::Psd(k) => BlockEigen::Psd(linalg::sym_eigen(&smat(c, k))?),
            });
        }
        Ok(Eigen { cone: Arc::clone(&self.cone), blocks })
    }

    /// Spectral decomposition with materialized idempotent frame.
    pub fn spectral(&self) -> Result<SpectralDecomposition> {
        self.eigen()?.decomposition()
    }

    /// `Σ f(λᵢ) eᵢ` without domain checks.
    pub fn spectral_map(&self, f: impl FnMut(f64) -> f64) -> Result<Element> {
        Ok(self.eigen()?.map(f))
    }

    pub fn exp(&self) -> Result<Element> {
        self.spectral_map(f64::exp)
    }

    pub fn log(&self) -> Result<Element> {
        self.eigen()?.map_checked("log", |l| l > 0.0, f64::ln)
    }

    pub fn sqrt(&self) -> Result<Element> {
        self.eigen()?.map_checked("sqrt", |l| l >= 0.0, f64::sqrt)
    }

    pub fn inv(&self) -> Result<Element> {
        self.eigen()?.map_checked("inverse", |l| l > 0.0, |l| 1.0 / l)
    }

    pub fn inv_sqrt(&self) -> Result<Element> {
        self.eigen()?.map_checked("inverse square root", |l| l > 0.0, |l| 1.0 / l.sqrt())
    }

    /// Integer power `xᵐ`; negative powers require `x ∈ int K`.
    pub fn powi(&self, m: i32) -> Result<Element> {
        if m >= 0 {
            self.spectral_map(|l| l.powi(m))
        } else {
            self.eigen()?.map_checked("negative power", |l| l > 0.0, |l| l.powi(m))
        }
    }

    pub fn norms(&self) -> Result<Norms> {
        let eig = self.eigen()?;
        let vals = eig.eigenvalues();
        Ok(Norms {
            two: self.norm(),
            inf: vals.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            one: vals.iter().map(|v| v.abs()).sum(),
        })
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigen()?.min())
    }

    /// Strict interior membership, `λ_min > INTERIOR_EPS · max(1, ‖x‖∞)`.
    pub fn is_interior(&self) -> Result<bool> {
        Ok(self.eigen()?.is_interior())
    }
}

impl Add for &Element {
    type Output = Element;
    fn add(self, rhs: &Element) -> Element {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &Element {
    type Output = Element;
    fn sub(self, rhs: &Element) -> Element {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &Element {
    type Output = Element;
    fn neg(self) -> Element {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &Element {
    type Output = Element;
    fn mul(self, rhs: f64) -> Element {
        self.scaled(rhs)
    }
}

#[derive(Debug, Clone)]
enum BlockEigen {
    Orthant(Vec<f64>),
    /// Eigenvalues `center ± radius` with idempotents `½(1, ±axis)`.
    SecondOrder {
        center: f64,
        radius: f64,
        axis: Vec<f64>,
    },
    Psd(SymEigen),
}

/// Blockwise eigen-decomposition of an element; supports spectral maps
/// without materializing the idempotent frame.
#[derive(Debug, Clone)]
pub struct Eigen {
    cone: Arc<Cone>,
    blocks: Vec<BlockEigen>,
}

impl Eigen {
    /// All n eigenvalues, block after block (second-order blocks list
    /// `x0 + ‖x1‖` then `x0 − ‖x1‖`).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cone.rank());
        for b in &self.blocks {
            match b {
                BlockEigen::Orthant(v) => out.extend_from_slice(v),
                BlockEigen::SecondOrder { center, radius, .. } => {
                    out.push(center + radius);
                    out.push(center - radius);
                }
                BlockEigen::Psd(e) => out.extend_from_slice(&e.values),
            }
        }
        out
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.eigenvalues().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_interior(&self) -> bool {
        self.min() > INTERIOR_EPS * self.norm_inf().max(1.0)
    }

    /// `Σ f(λᵢ) eᵢ`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Element {
        let mut coords = Vec::with_capacity(self.cone.dim());
        for b in &self.blocks {
            match b {
                BlockEigen::Orthant(v) => coords.extend(v.iter().map(|&l| f(l))),
                BlockEigen::SecondOrder { center, radius, axis } => {
                    let hi = f(center + radius);
                    let lo = f(center - radius);
                    coords.push(0.5 * (hi + lo));
                    coords.extend(axis.iter().map(|u| 0.5 * (hi - lo) * u));
                }
                BlockEigen::Psd(e) => coords.extend(svec(&e.map(&mut f))),
            }
        }
        Element { cone: Arc::clone(&self.cone), coords }
    }

    fn map_checked(&self, op: &'static str, valid: impl Fn(f64) -> bool, f: impl FnMut(f64) -> f64) -> Result<Element> {
        if let Some(bad) = self.eigenvalues().into_iter().find(|&l| !valid(l)) {
            return Err(Error::Domain { op, eigenvalue: bad });
        }
        Ok(self.map(f))
    }

    /// Materializes the Jordan frame.
    pub fn decomposition(&self) -> Result<SpectralDecomposition> {
        let cone = &self.cone;
        let mut frame = Vec::with_capacity(cone.rank());
        for ((b, r), be) in cone.ranges().zip(&self.blocks) {
            let unit = |coords: &[f64]| {
                let mut c = vec![0.0; cone.dim()];
                c[r.clone()].copy_from_slice(coords);
                Element { cone: Arc::clone(cone), coords: c }
            };
            match (b, be) {
                (BlockKind::Orthant(k), BlockEigen::Orthant(_)) => {
                    for i in 0..k {
                        let mut v = vec![0.0; k];
                        v[i] = 1.0;
                        frame.push(unit(&v));
                    }
                }
                (BlockKind::SecondOrder(_), BlockEigen::SecondOrder { axis, .. }) => {
                    for sign in [1.0, -1.0] {
                        let mut v = vec![0.5];
                        v.extend(axis.iter().map(|u| 0.5 * sign * u));
                        frame.push(unit(&v));
                    }
                }
                (BlockKind::Psd(k), BlockEigen::Psd(e)) => {
                    for col in 0..k {
                        let p = Matrix::from_fn(k, k, |i, j| e.vectors[(i, col)] * e.vectors[(j, col)]);
                        frame.push(unit(&svec(&p)));
                    }
                }
                _ => return Err(Error::NumericalFailure("eigen blocks out of sync".into())),
            }
        }
        Ok(SpectralDecomposition { eigenvalues: self.eigenvalues(), frame })
    }
}

/// `x = Σ λᵢ eᵢ` with a Jordan frame of primitive idempotents.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub frame: Vec<Element>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Option<Element> {
        let first = self.frame.first()?;
        let mut acc = first.cone().zeros();
        for (l, e) in self.eigenvalues.iter().zip(&self.frame) {
            acc = acc.axpy(*l, e);
        }
        Some(acc)
    }
}

/// Action of an automorphism on one block.
#[derive(Debug, Clone)]
pub enum BlockMap {
    /// `y[i] = scale[i] · x[perm[i]]`.
    Orthant { perm: Vec<usize>, scale: Vec<f64> },
    /// Linear map on raw `(x0, x1)` coordinates with its inverse.
    SecondOrder { matrix: Matrix, inverse: Matrix },
    /// Congruence `X ↦ G X Gᵀ`.
    Psd { g: Matrix, g_inv: Matrix },
}

impl BlockMap {
    pub fn orthant(perm: Vec<usize>, scale: Vec<f64>) -> Result<BlockMap> {
        let k = perm.len();
        if scale.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: scale.len() });
        }
        let mut seen = vec![false; k];
        for &p in &perm {
            if p >= k || seen[p] {
                return Err(Error::InvalidParameter("orthant map needs a permutation".into()));
            }
            seen[p] = true;
        }
        if scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("orthant scalings must be positive".into()));
        }
        Ok(BlockMap::Orthant { perm, scale })
    }

    /// `scale · B(rapidity, axis) · diag(1, rotation)` where `B` is a
    /// Lorentz boost; `rotation` must be orthogonal.
    pub fn second_order(scale: f64, rotation: &Matrix, boost: Option<(f64, Vec<f64>)>) -> Result<BlockMap> {
        let m = rotation.rows();
        if rotation.cols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: rotation.cols() });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter("second-order scaling must be positive".into()));
        }
        let rtr = rotation.transpose().matmul(rotation);
        if (0..m).any(|i| (0..m).any(|j| (rtr[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() > 1e-10)) {
            return Err(Error::InvalidParameter("second-order rotation must be orthogonal".into()));
        }
        let embed = |r: &Matrix| {
            let mut out = Matrix::identity(m + 1);
            for i in 0..m {
                for j in 0..m {
                    out[(i + 1, j + 1)] = r[(i, j)];
                }
            }
            out
        };
        let boost_matrix = |eta: f64, axis: &[f64]| {
            let mut b = Matrix::identity(m + 1);
            b[(0, 0)] = eta.cosh();
            for i in 0..m {
                b[(0, i + 1)] = eta.sinh() * axis[i];
                b[(i + 1, 0)] = eta.sinh() * axis[i];
                for j in 0..m {
                    b[(i + 1, j + 1)] += (eta.cosh() - 1.0) * axis[i] * axis[j];
                }
            }
            b
        };
        let (b, b_inv) = match boost {
            Some((eta, axis)) => {
                if axis.len() != m {
                    return Err(Error::DimensionMismatch { expected: m, found: axis.len() });
                }
                let n = linalg::dot(&axis, &axis).sqrt();
                if !(n > 0.0) {
                    return Err(Error::InvalidParameter("boost axis must be nonzero".into()));
                }
                let unit: Vec<f64> = axis.iter().map(|v| v / n).collect();
                (boost_matrix(eta, &unit), boost_matrix(-eta, &unit))
            }
            None => (Matrix::identity(m + 1), Matrix::identity(m + 1)),
        };
        let mut matrix = b.matmul(&embed(rotation));
        matrix.scale(scale);
        let mut inverse = embed(&rotation.transpose()).matmul(&b_inv);
        inverse.scale(1.0 / scale);
        Ok(BlockMap::SecondOrder { matrix, inverse })
    }

    pub fn psd(g: Matrix) -> Result<BlockMap> {
        let lu = linalg::Lu::factor(&g, 1e-13)
            .ok_or_else(|| Error::InvalidParameter("congruence matrix is singular".into()))?;
        let g_inv = lu.inverse();
        Ok(BlockMap::Psd { g, g_inv })
    }

    fn fits(&self, b: BlockKind) -> bool {
        match (self, b) {
            (BlockMap::Orthant { perm, .. }, BlockKind::Orthant(k)) => perm.len() == k,
            (BlockMap::SecondOrder { matrix, .. }, BlockKind::SecondOrder(m)) => matrix.rows() == m,
            (BlockMap::Psd { g, .. }, BlockKind::Psd(k)) => g.rows() == k,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Adjoint,
    Inverse,
    InverseAdjoint,
}

/// Automorphism of K acting blockwise.
#[derive(Debug, Clone)]
pub struct ConeAutomorphism {
    cone: Arc<Cone>,
    blocks: Vec<BlockMap>,
    orthogonal: bool,
}

impl ConeAutomorphism {
    pub fn new(cone: &Arc<Cone>, blocks: Vec<BlockMap>) -> Result<ConeAutomorphism> {
        if blocks.len() != cone.blocks().len() {
            return Err(Error::DimensionMismatch { expected: cone.blocks().len(), found: blocks.len() });
        }
        for (m, b) in blocks.iter().zip(cone.blocks()) {
            if !m.fits(*b) {
                return Err(Error::ConeMismatch);
            }
        }
        let mut t = ConeAutomorphism { cone: Arc::clone(cone), blocks, orthogonal: false };
        t.orthogonal = t.check_orthogonal();
        Ok(t)
    }

    fn check_orthogonal(&self) -> bool {
        let close = |a: &Matrix, b: &Matrix| a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() <= 1e-10);
        self.blocks.iter().all(|b| match b {
            BlockMap::Orthant { scale, .. } => scale.iter().all(|&s| (s - 1.0).abs() <= 1e-12),
            BlockMap::SecondOrder { matrix, inverse } => close(&matrix.transpose(), inverse),
            BlockMap::Psd { g, g_inv } => close(&g.transpose(), g_inv),
        })
    }

    /// Random automorphism; with `orthogonal` the sample lies in the
    /// orthogonal subgroup (unit scalings, orthogonal congruences, no boosts).
    pub fn random(cone: &Arc<Cone>, rng: &mut SeededRng, orthogonal: bool) -> ConeAutomorphism {
        let mut blocks = Vec::with_capacity(cone.blocks().len());
        for b in cone.blocks() {
            let map = match *b {
                BlockKind::Orthant(k) => {
                    let perm = rng.permutation(k);
                    let scale =
                        if orthogonal { vec![1.0; k] } else { (0..k).map(|_| (0.5 * rng.gaussian()).exp()).collect() };
                    BlockMap::orthant(perm, scale)
                }
                BlockKind::SecondOrder(m) => {
                    let rot = rng.orthogonal(m - 1);
                    if orthogonal {
                        BlockMap::second_order(1.0, &rot, None)
                    } else {
                        let scale = (0.5 * rng.gaussian()).exp();
                        let eta = 0.5 * rng.gaussian();
                        let axis = rng.unit_vector(m - 1);
                        BlockMap::second_order(scale, &rot, Some((eta, axis)))
                    }
                }
                BlockKind::Psd(k) => {
                    if orthogonal {
                        BlockMap::psd(rng.orthogonal(k))
                    } else {
                        let u = rng.orthogonal(k);
                        let v = rng.orthogonal(k);
                        let s: Vec<f64> = (0..k).map(|_| (0.4 * rng.gaussian()).exp()).collect();
                        BlockMap::psd(u.matmul(&Matrix::from_diag(&s)).matmul(&v))
                    }
                }
            };
            blocks.push(map.expect("random block maps are valid by construction"));
        }
        ConeAutomorphism::new(cone, blocks).expect("blocks match cone")
    }

    pub fn cone(&self) -> &Arc<Cone> {
        &self.cone
    }

    pub fn is_orthogonal(&self) -> bool {
        self.orthogonal
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        self.act(x, Direction::Forward)
    }

    /// `T*`, adjoint under the trace inner product.
    pub fn apply_adjoint(&self, x: &Element) -> Result<Element> {
        self.act(x, Direction::Adjoint)
    }

    pub fn apply_inverse(&self, x: &Element) -> Result<Element> {
        self.act(x, Direction::Inverse)
    }

    /// `(T⁻¹)*`.
    pub fn apply_inverse_adjoint(&self, x: &Element) -> Result<Element> {
        self.act(x, Direction::InverseAdjoint)
    }

    fn act(&self, x: &Element, dir: Direction) -> Result<Element> {
        if !(Arc::ptr_eq(&self.cone, x.cone()) || *self.cone == **x.cone()) {
            return Err(Error::ConeMismatch);
        }
        let mut out = vec![0.0; x.coords.len()];
        for ((_, r), map) in self.cone.ranges().zip(&self.blocks) {
            let xc = &x.coords[r.clone()];
            let o = &mut out[r];
            match map {
                BlockMap::Orthant { perm, scale } => {
                    for i in 0..perm.len() {
                        let (p, s) = (perm[i], scale[i]);
                        match dir {
                            Direction::Forward => o[i] = s * xc[p],
                            Direction::Adjoint => o[p] = s * xc[i],
                            Direction::Inverse => o[p] = xc[i] / s,
                            Direction::InverseAdjoint => o[i] = xc[p] / s,
                        }
                    }
                }
                BlockMap::SecondOrder { matrix, inverse } => {
                    let y = match dir {
                        Direction::Forward => matrix.matvec(xc),
                        Direction::Adjoint => matrix.transpose().matvec(xc),
                        Direction::Inverse => inverse.matvec(xc),
                        Direction::InverseAdjoint => inverse.transpose().matvec(xc),
                    };
                    o.copy_from_slice(&y);
                }
                BlockMap::Psd { g, g_inv } => {
                    let k = g.rows();
                    let xm = smat(xc, k);
                    let left = match dir {
                        Direction::Forward => g.clone(),
                        Direction::Adjoint => g.transpose(),
                        Direction::Inverse => g_inv.clone(),
                        Direction::InverseAdjoint => g_inv.transpose(),
                    };
                    let y = left.matmul(&xm).matmul(&left.transpose());
                    o.copy_from_slice(&svec(&y));
                }
            }
        }
        Ok(x.with_coords(out))
    }
}
