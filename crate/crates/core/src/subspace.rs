//! Constraint data, scaled-subspace projections and the Newton direction.
//!
//! A problem pairs a primal affine set `x0 + L` with the dual set
//! `s0 + L⊥`. It is stored either by a basis of `L` or in operator form
//!
//! ```text
//! s0 + L⊥ = { c − A y : B y = g },    x0 + L = { x : ∃ z, A*x + B*z = b }.
//! ```
//!
//! For an iterate `w ∈ int K` and `μ > 0` the Newton direction `d` is the
//! unique element with `√μ Q(w^½)(e + d) ∈ x0 + L` and
//! `√μ Q(w^{-½})(e − d) ∈ s0 + L⊥`. It splits as `d = d1 − d2` with
//! `d1 ∈ L_w⊥`, `d2 ∈ L_w`, where `L_w = Q(w^{-½}) L`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::jordan::{Cone, ConeAutomorphism, Element};
use crate::linalg::{self, Lu, Matrix};

/// Relative norm a basis vector must retain after orthogonalization.
pub const RANK_TOL: f64 = 1e-10;

/// Relative pivot threshold for the saddle-point factorization.
const SADDLE_PIVOT_TOL: f64 = 1e-14;

/// `x0`, `s0` and a basis of `L`.
#[derive(Debug, Clone)]
pub struct BasisForm {
    pub x0: Element,
    pub s0: Element,
    pub basis_l: Vec<Element>,
}

/// Operator data `(A, B, b, c, g)`; `A` is stored by its columns.
#[derive(Debug, Clone)]
pub struct OperatorForm {
    pub a: Vec<Element>,
    /// `d × m` matrix; `d = 0` means no side constraints on `y`.
    pub b_mat: Matrix,
    pub b: Vec<f64>,
    pub c: Element,
    pub g: Vec<f64>,
    /// Generators of `L⊥ = A ker B`.
    perp_generators: Vec<Element>,
}

#[derive(Debug, Clone)]
pub enum ConstraintForm {
    Basis(BasisForm),
    Operator(OperatorForm),
}

/// Primal-dual pair over a symmetric cone.
#[derive(Debug)]
pub struct ConicProblem {
    cone: Arc<Cone>,
    form: ConstraintForm,
    /// Basis-form equivalent of operator data, built on first use.
    equivalent: OnceLock<Result<BasisForm>>,
}

impl Clone for ConicProblem {
    fn clone(&self) -> Self {
        ConicProblem { cone: Arc::clone(&self.cone), form: self.form.clone(), equivalent: OnceLock::new() }
    }
}

fn check_cone(cone: &Arc<Cone>, e: &Element) -> Result<()> {
    if e.cone() == cone {
        Ok(())
    } else {
        Err(Error::ConeMismatch)
    }
}

fn check_finite(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} has non-finite entries")))
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
fn orthonormalize(vectors: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (index, mut v) in vectors.into_iter().enumerate() {
        let norm0 = linalg::dot(&v, &v).sqrt();
        for _ in 0..2 {
            for qj in &q {
                let c = linalg::dot(qj, &v);
                v.iter_mut().zip(qj).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = linalg::dot(&v, &v).sqrt();
        let ratio = if norm0 > 0.0 { norm / norm0 } else { 0.0 };
        if !(ratio > RANK_TOL) {
            return Err(Error::IllConditionedBasis { index, ratio });
        }
        v.iter_mut().for_each(|a| *a /= norm);
        q.push(v);
    }
    Ok(q)
}

/// Basis of `ker B` as columns of an `m × (m − d)` matrix (`B` must have
/// full row rank).
fn kernel_basis(b_mat: &Matrix) -> Result<Matrix> {
    let (d, m) = (b_mat.rows(), b_mat.cols());
    if d == 0 {
        return Ok(Matrix::identity(m));
    }
    if d > m {
        return Err(Error::DegenerateConstraints);
    }
    let bbt = b_mat.matmul(&b_mat.transpose());
    if Lu::factor(&bbt, 1e-12).is_none() {
        return Err(Error::DegenerateConstraints);
    }
    let q = linalg::householder_q(&b_mat.transpose());
    Ok(Matrix::from_fn(m, m - d, |i, j| q[(i, d + j)]))
}

fn combine(cone: &Arc<Cone>, cols: &[Element], y: &[f64]) -> Element {
    let mut acc = cone.zeros();
    for (a, &yi) in cols.iter().zip(y) {
        if yi != 0.0 {
            acc = acc.axpy(yi, a);
        }
    }
    acc
}

impl ConicProblem {
    /// Basis-form problem; rejects a dependent basis.
    pub fn basis(cone: &Arc<Cone>, x0: Element, s0: Element, basis_l: Vec<Element>) -> Result<ConicProblem> {
        check_cone(cone, &x0)?;
        check_cone(cone, &s0)?;
        check_finite("x0", x0.coords())?;
        check_finite("s0", s0.coords())?;
        for (i, l) in basis_l.iter().enumerate() {
            check_cone(cone, l)?;
            check_finite(&format!("basis vector {i}"), l.coords())?;
        }
        if basis_l.len() > cone.dim() {
            return Err(Error::IllConditionedBasis { index: cone.dim(), ratio: 0.0 });
        }
        orthonormalize(basis_l.iter().map(|l| cone.to_orthonormal(l.coords())).collect())?;
        Ok(ConicProblem {
            cone: Arc::clone(cone),
            form: ConstraintForm::Basis(BasisForm { x0, s0, basis_l }),
            equivalent: OnceLock::new(),
        })
    }

    /// Operator-form problem; `b_mat` is `d × m` with `m = a.len()`.
    pub fn operator(
        cone: &Arc<Cone>,
        a: Vec<Element>,
        b_mat: Matrix,
        b: Vec<f64>,
        c: Element,
        g: Vec<f64>,
    ) -> Result<ConicProblem> {
        let m = a.len();
        for col in &a {
            check_cone(cone, col)?;
            check_finite("A", col.coords())?;
        }
        check_cone(cone, &c)?;
        check_finite("c", c.coords())?;
        check_finite("b", &b)?;
        check_finite("g", &g)?;
        check_finite("B", b_mat.as_slice())?;
        if b.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: b.len() });
        }
        if b_mat.cols() != m && b_mat.rows() > 0 {
            return Err(Error::DimensionMismatch { expected: m, found: b_mat.cols() });
        }
        let b_mat = if b_mat.rows() == 0 { Matrix::zeros(0, m) } else { b_mat };
        if g.len() != b_mat.rows() {
            return Err(Error::DimensionMismatch { expected: b_mat.rows(), found: g.len() });
        }
        let k = kernel_basis(&b_mat)?;
        let perp_generators = (0..k.cols())
            .map(|j| {
                let col: Vec<f64> = (0..m).map(|i| k[(i, j)]).collect();
                combine(cone, &a, &col)
            })
            .collect();
        Ok(ConicProblem {
            cone: Arc::clone(cone),
            form: ConstraintForm::Operator(OperatorForm { a, b_mat, b, c, g, perp_generators }),
            equivalent: OnceLock::new(),
        })
    }

    pub fn cone(&self) -> &Arc<Cone> {
        &self.cone
    }

    pub fn form(&self) -> &ConstraintForm {
        &self.form
    }

    /// Equivalent basis-form data (identity for basis-form problems).
    pub fn basis_form(&self) -> Result<BasisForm> {
        match &self.form {
            ConstraintForm::Basis(bf) => Ok(bf.clone()),
            ConstraintForm::Operator(op) => self.equivalent.get_or_init(|| operator_to_basis(&self.cone, op)).clone(),
        }
    }

    /// Operator data with `A` an orthonormal basis of `L⊥`, no side
    /// constraints, `c = s0` and `b = A*x0`.
    pub fn to_operator_form(&self) -> Result<ConicProblem> {
        let bf = match &self.form {
            ConstraintForm::Operator(_) => return Ok(self.clone()),
            ConstraintForm::Basis(bf) => bf,
        };
        let cone = &self.cone;
        let n = cone.dim();
        let r = bf.basis_l.len();
        let ortho = orthonormalize(bf.basis_l.iter().map(|l| cone.to_orthonormal(l.coords())).collect())?;
        let u = Matrix::from_fn(n, r, |i, j| ortho[j][i]);
        let q = linalg::householder_q(&u);
        let a: Vec<Element> = (r..n)
            .map(|j| {
                let col: Vec<f64> = (0..n).map(|i| q[(i, j)]).collect();
                Element::new(cone, cone.from_orthonormal(&col))
            })
            .collect::<Result<_>>()?;
        let b = a.iter().map(|aj| aj.inner(&bf.x0)).collect();
        ConicProblem::operator(cone, a, Matrix::zeros(0, n - r), b, bf.s0.clone(), Vec::new())
    }

    /// Problem transformed by an automorphism `T`: `x0 ↦ T x0`,
    /// `L ↦ T L`, `s0 ↦ (T⁻¹)* s0`.
    pub fn transform(&self, t: &ConeAutomorphism) -> Result<ConicProblem> {
        if t.cone() != &self.cone {
            return Err(Error::ConeMismatch);
        }
        match &self.form {
            ConstraintForm::Basis(bf) => ConicProblem::basis(
                &self.cone,
                t.apply(&bf.x0)?,
                t.apply_inverse_adjoint(&bf.s0)?,
                bf.basis_l.iter().map(|l| t.apply(l)).collect::<Result<_>>()?,
            ),
            ConstraintForm::Operator(op) => ConicProblem::operator(
                &self.cone,
                op.a.iter().map(|a| t.apply_inverse_adjoint(a)).collect::<Result<_>>()?,
                op.b_mat.clone(),
                op.b.clone(),
                t.apply_inverse_adjoint(&op.c)?,
                op.g.clone(),
            ),
        }
    }

    /// Distances of `x` from `x0 + L` and `s` from `s0 + L⊥`.
    pub fn affine_residuals(&self, x: &Element, s: &Element) -> Result<(f64, f64)> {
        let bf = self.basis_form()?;
        let proj = ScaledProjector::from_l_generators(&self.cone, &bf.basis_l)?;
        let rx = proj.proj_perp(&(x - &bf.x0)).norm();
        let rs = proj.proj_l(&(s - &bf.s0)).norm();
        Ok((rx, rs))
    }

    /// Orthogonal projections of `x` onto `x0 + L` and of `s` onto `s0 + L⊥`.
    pub fn project_affine(&self, x: &Element, s: &Element) -> Result<(Element, Element)> {
        let bf = self.basis_form()?;
        let proj = ScaledProjector::from_l_generators(&self.cone, &bf.basis_l)?;
        let x = x - &proj.proj_perp(&(x - &bf.x0));
        let s = s - &proj.proj_l(&(s - &bf.s0));
        Ok((x, s))
    }
}

fn operator_to_basis(cone: &Arc<Cone>, op: &OperatorForm) -> Result<BasisForm> {
    let n = cone.dim();
    let perp = orthonormalize(op.perp_generators.iter().map(|a| cone.to_orthonormal(a.coords())).collect())?;
    let r = perp.len();
    let u = Matrix::from_fn(n, r, |i, j| perp[j][i]);
    let q = linalg::householder_q(&u);
    let basis_l = (r..n)
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|i| q[(i, j)]).collect();
            Element::new(cone, cone.from_orthonormal(&col))
        })
        .collect::<Result<Vec<_>>>()?;

    let m = op.a.len();
    let d = op.b_mat.rows();
    // s0 = c − A y with y the minimum-norm solution of B y = g
    let s0 = if d == 0 {
        op.c.clone()
    } else {
        let bbt = op.b_mat.matmul(&op.b_mat.transpose());
        let lu = Lu::factor(&bbt, 1e-12).ok_or(Error::DegenerateConstraints)?;
        let y = op.b_mat.transpose().matvec(&lu.solve(&op.g));
        &op.c - &combine(cone, &op.a, &y)
    };
    // x0 = A α with [A*A, B*; B, 0][α; z] = [b; 0]
    let e = cone.identity();
    let saddle = SaddleSystem::assemble(op, &e)?;
    let mut rhs = op.b.clone();
    rhs.resize(m + d, 0.0);
    let sol = saddle.lu.solve(&rhs);
    let x0 = combine(cone, &op.a, &sol[..m]);
    Ok(BasisForm { x0, s0, basis_l })
}

/// Orthogonal projectors onto a subspace of J and its complement.
///
/// Holds an orthonormal basis (in orthonormal coordinates) of either the
/// subspace itself or its complement, whichever was generated.
#[derive(Debug, Clone)]
pub struct ScaledProjector {
    cone: Arc<Cone>,
    basis: Vec<Vec<f64>>,
    spans_complement: bool,
}

impl ScaledProjector {
    fn from_generators(cone: &Arc<Cone>, gens: &[Element], spans_complement: bool) -> Result<ScaledProjector> {
        let basis = orthonormalize(gens.iter().map(|g| cone.to_orthonormal(g.coords())).collect())?;
        Ok(ScaledProjector { cone: Arc::clone(cone), basis, spans_complement })
    }

    /// Projectors onto `span(gens)` and its complement.
    pub fn from_l_generators(cone: &Arc<Cone>, gens: &[Element]) -> Result<ScaledProjector> {
        Self::from_generators(cone, gens, false)
    }

    /// Projectors onto `span(gens)⊥` and `span(gens)`.
    pub fn from_perp_generators(cone: &Arc<Cone>, gens: &[Element]) -> Result<ScaledProjector> {
        Self::from_generators(cone, gens, true)
    }

    fn project_basis(&self, z: &Element) -> Element {
        let zo = self.cone.to_orthonormal(z.coords());
        let mut acc = vec![0.0; zo.len()];
        for q in &self.basis {
            let c = linalg::dot(q, &zo);
            acc.iter_mut().zip(q).for_each(|(a, b)| *a += c * b);
        }
        Element::new(&self.cone, self.cone.from_orthonormal(&acc)).expect("same cone")
    }

    /// Projection onto the subspace.
    pub fn proj_l(&self, z: &Element) -> Element {
        if self.spans_complement {
            z - &self.project_basis(z)
        } else {
            self.project_basis(z)
        }
    }

    /// Projection onto the orthogonal complement.
    pub fn proj_perp(&self, z: &Element) -> Element {
        if self.spans_complement {
            self.project_basis(z)
        } else {
            z - &self.project_basis(z)
        }
    }
}

/// Projectors onto `L_w = Q(w^{-½}) L` and `L_w⊥ = Q(w^½) L⊥`.
pub fn scaled_projections(problem: &ConicProblem, w: &Element) -> Result<ScaledProjector> {
    let scaling = Scaling::new(problem.cone(), w)?;
    scaling.projector(problem)
}

/// `w^½` and `w^{-½}` from one eigendecomposition.
struct Scaling {
    half: Element,
    inv_half: Element,
}

impl Scaling {
    fn new(cone: &Arc<Cone>, w: &Element) -> Result<Scaling> {
        check_cone(cone, w)?;
        let eig = w.eigen()?;
        if !eig.is_interior() {
            return Err(Error::Domain { op: "scaling point", eigenvalue: eig.min() });
        }
        Ok(Scaling { half: eig.map(f64::sqrt), inv_half: eig.map(|l| 1.0 / l.sqrt()) })
    }

    fn projector(&self, problem: &ConicProblem) -> Result<ScaledProjector> {
        let cone = problem.cone();
        match problem.form() {
            ConstraintForm::Basis(bf) => {
                let gens = bf.basis_l.iter().map(|l| self.inv_half.quad_rep(l)).collect::<Result<Vec<_>>>()?;
                ScaledProjector::from_l_generators(cone, &gens)
            }
            ConstraintForm::Operator(op) => {
                let gens = op.perp_generators.iter().map(|a| self.half.quad_rep(a)).collect::<Result<Vec<_>>>()?;
                ScaledProjector::from_perp_generators(cone, &gens)
            }
        }
    }
}

struct SaddleSystem {
    lu: Lu,
}

impl SaddleSystem {
    /// Factors `[[A*Q(w)A, B*], [B, 0]]`.
    fn assemble(op: &OperatorForm, w: &Element) -> Result<SaddleSystem> {
        let m = op.a.len();
        let d = op.b_mat.rows();
        let qa = op.a.iter().map(|a| w.quad_rep(a)).collect::<Result<Vec<_>>>()?;
        let mut s = Matrix::zeros(m + d, m + d);
        for i in 0..m {
            for j in i..m {
                let v = op.a[i].inner(&qa[j]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        for r in 0..d {
            for j in 0..m {
                s[(m + r, j)] = op.b_mat[(r, j)];
                s[(j, m + r)] = op.b_mat[(r, j)];
            }
        }
        let lu = Lu::factor(&s, SADDLE_PIVOT_TOL).ok_or(Error::DegenerateConstraints)?;
        Ok(SaddleSystem { lu })
    }
}

/// Newton direction at `(w, μ)` with its summands, bounds and step limit.
#[derive(Debug, Clone)]
pub struct NewtonData {
    pub mu: f64,
    pub d: Element,
    pub d1: Element,
    pub d2: Element,
    pub norm_d: f64,
    pub norm_d_inf: f64,
    /// `‖d1 + d2‖∞`.
    pub sum_inf: f64,
    pub h_lb: f64,
    /// `+∞` when `sum_inf ≥ 1`.
    pub h_ub: f64,
    /// `+∞` when `d = 0`.
    pub t_max: f64,
    /// `P_{L_w⊥} Q(w^{-½}) x0 + P_{L_w} Q(w^½) s0`; satisfies
    /// `d1 + d2 = g_w/√μ − e`.
    pub g_w: Element,
}

impl NewtonData {
    fn assemble(mu: f64, d: Element, d1: Element, d2: Element, g_w: Element) -> Result<NewtonData> {
        let norm_d = d.norm();
        let norm_d_inf = d.eigen()?.norm_inf();
        let sum_inf = (&d1 + &d2).eigen()?.norm_inf();
        let (h_lb, h_ub) = divergence_bounds(norm_d, sum_inf);
        let t_max = step_bound_from(norm_d, norm_d_inf, h_lb);
        Ok(NewtonData { mu, d, d1, d2, norm_d, norm_d_inf, sum_inf, h_lb, h_ub, t_max, g_w })
    }

    /// `k = (‖d‖/‖d‖∞)²`.
    pub fn k(&self) -> f64 {
        if self.norm_d_inf > 0.0 {
            (self.norm_d / self.norm_d_inf).powi(2)
        } else {
            0.0
        }
    }
}

/// `(‖d‖²/(1 + s), ‖d‖²/(1 − s))` with `s = ‖d1 + d2‖∞`; the upper bound
/// is `+∞` for `s ≥ 1`.
pub fn divergence_bounds(norm_d: f64, sum_inf: f64) -> (f64, f64) {
    let sq = norm_d * norm_d;
    let ub = if sum_inf < 1.0 { sq / (1.0 - sum_inf) } else { f64::INFINITY };
    (sq / (1.0 + sum_inf), ub)
}

/// Guaranteed-descent step bound from `‖d‖`, `‖d‖∞` and `h_lb`.
pub fn step_bound_from(norm_d: f64, norm_d_inf: f64, h_lb: f64) -> f64 {
    if norm_d == 0.0 || norm_d_inf == 0.0 {
        return f64::INFINITY;
    }
    let sq = norm_d * norm_d;
    let k = (norm_d / norm_d_inf).powi(2);
    2.0 * (h_lb + sq.min(2.0 * k)) / (norm_d_inf * norm_d_inf * (h_lb + 2.0 * k))
}

pub fn step_bound(nd: &NewtonData) -> f64 {
    nd.t_max
}

/// Newton direction at `(w, μ)`, using the route matching the problem's
/// constraint form.
pub fn newton_direction(problem: &ConicProblem, w: &Element, mu: f64) -> Result<NewtonData> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("μ must be positive and finite, got {mu}")));
    }
    let scaling = Scaling::new(problem.cone(), w)?;
    match problem.form() {
        ConstraintForm::Basis(bf) => basis_route(problem, bf, &scaling, mu),
        ConstraintForm::Operator(op) => operator_route(problem, op, w, &scaling, mu),
    }
}

fn basis_route(problem: &ConicProblem, bf: &BasisForm, sc: &Scaling, mu: f64) -> Result<NewtonData> {
    let e = problem.cone().identity();
    let proj = sc.projector(problem)?;
    let rmu = mu.sqrt();
    let u = proj.proj_perp(&sc.inv_half.quad_rep(&bf.x0)?);
    let v = proj.proj_l(&sc.half.quad_rep(&bf.s0)?);
    let e_l = proj.proj_l(&e);
    let e_perp = &e - &e_l;
    let d1 = (&u * (1.0 / rmu)).axpy(-1.0, &e_perp);
    let d2 = (&v * (1.0 / rmu)).axpy(-1.0, &e_l);
    let d = &d1 - &d2;
    NewtonData::assemble(mu, d, d1, d2, &u + &v)
}

fn operator_route(problem: &ConicProblem, op: &OperatorForm, w: &Element, sc: &Scaling, mu: f64) -> Result<NewtonData> {
    let cone = problem.cone();
    let e = cone.identity();
    let m = op.a.len();
    let d_rows = op.b_mat.rows();
    let rmu = mu.sqrt();
    let saddle = SaddleSystem::assemble(op, w)?;
    let qc = w.quad_rep(&op.c)?;
    let a_qc: Vec<f64> = op.a.iter().map(|a| a.inner(&qc)).collect();
    let a_w: Vec<f64> = op.a.iter().map(|a| a.inner(w)).collect();
    let stack = |top: Vec<f64>, bottom: Vec<f64>| {
        let mut v = top;
        v.extend(bottom);
        v
    };
    let zeros_d = vec![0.0; d_rows];

    // Combined right-hand side gives d directly.
    let rhs: Vec<f64> = (0..m).map(|i| (op.b[i] + a_qc[i]) / rmu - 2.0 * a_w[i]).collect();
    let g_scaled: Vec<f64> = op.g.iter().map(|v| v / rmu).collect();
    let y = saddle.lu.solve(&stack(rhs, g_scaled));
    let resid = &(&op.c * (1.0 / rmu)) - &combine(cone, &op.a, &y[..m]);
    let d = &e - &sc.half.quad_rep(&resid)?;

    // Split solves: x0-part, s0-part and constant part.
    let y_b = saddle.lu.solve(&stack(op.b.clone(), zeros_d.clone()));
    let u = sc.half.quad_rep(&combine(cone, &op.a, &y_b[..m]))?;
    let y_c = saddle.lu.solve(&stack(a_qc, op.g.clone()));
    let v = sc.half.quad_rep(&(&op.c - &combine(cone, &op.a, &y_c[..m])))?;
    let y_e = saddle.lu.solve(&stack(a_w.iter().map(|v| -2.0 * v).collect(), zeros_d));
    // constant part equals P_{L_w} e − P_{L_w⊥} e
    let d_const = &e + &sc.half.quad_rep(&combine(cone, &op.a, &y_e[..m]))?;
    let e_perp = (&e - &d_const).scaled(0.5);
    let e_l = (&e + &d_const).scaled(0.5);
    let d1 = (&u * (1.0 / rmu)).axpy(-1.0, &e_perp);
    let d2 = (&v * (1.0 / rmu)).axpy(-1.0, &e_l);
    NewtonData::assemble(mu, d, d1, d2, &u + &v)
}

/// Spectral summary of `g_w` from which `h_ub(w, ·)` follows in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GwStats {
    pub norm_sq: f64,
    pub trace: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub rank: usize,
}

/// Iteration cap of the bisection in [`GwStats::min_mu`].
const MU_BISECT_ITERS: usize = 200;
/// Bracket width at which the bisection in [`GwStats::min_mu`] stops.
const MU_BISECT_WIDTH: f64 = 1e-13;

impl GwStats {
    pub fn from_newton(nd: &NewtonData) -> Result<GwStats> {
        Self::from_element(&nd.g_w)
    }

    pub fn from_element(g_w: &Element) -> Result<GwStats> {
        let eig = g_w.eigen()?;
        Ok(GwStats {
            norm_sq: g_w.inner(g_w),
            trace: g_w.trace(),
            lambda_min: eig.min(),
            lambda_max: eig.max(),
            rank: g_w.cone().rank(),
        })
    }

    /// `h_ub(w, μ)` evaluated from the closed form.
    pub fn h_ub(&self, mu: f64) -> f64 {
        self.h_ub_inv_sqrt(1.0 / mu.sqrt())
    }

    /// Closed form in `a = 1/√μ`.
    fn h_ub_inv_sqrt(&self, a: f64) -> f64 {
        let k = (self.lambda_min * a).min(2.0 - self.lambda_max * a);
        if !(k > 0.0) {
            return f64::INFINITY;
        }
        let num = self.norm_sq * a * a - 2.0 * self.trace * a + self.rank as f64;
        num.max(0.0) / k
    }

    /// Smallest `μ ≤ μ_cur` with `h_ub(w, μ) ≤ β`.
    ///
    /// Works in `r = √(μ_cur/μ) ≥ 1`. The feasible set in `r` is an
    /// interval containing 1 (quasiconvex ratio), so geometric checkpoints
    /// bracket its right end, which is then bisected. Returns `μ_cur` when
    /// `h_ub(w, μ_cur) > β`.
    pub fn min_mu(&self, mu_cur: f64, beta: f64) -> f64 {
        let a0 = 1.0 / mu_cur.sqrt();
        let h = |r: f64| self.h_ub_inv_sqrt(a0 * r);
        if !(h(1.0) <= beta) {
            return mu_cur;
        }
        let r_pole = if self.lambda_max > 0.0 { 2.0 / (self.lambda_max * a0) } else { f64::INFINITY };
        let (mut lo, mut hi) = (1.0, r_pole);
        let mut r = 2.0;
        while r < r_pole && r.is_finite() {
            if h(r) <= beta {
                lo = r;
                r *= 2.0;
            } else {
                hi = r;
                break;
            }
        }
        if !hi.is_finite() {
            return mu_cur / (lo * lo);
        }
        for _ in 0..MU_BISECT_ITERS {
            if hi - lo <= MU_BISECT_WIDTH * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if h(mid) <= beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        mu_cur / (lo * lo)
    }
}

/// `inf { μ > 0 : h_ub(w, μ) ≤ β }`, searched below `μ_cur`.
pub fn mu_candidates(problem: &ConicProblem, w: &Element, mu_cur: f64, beta: f64) -> Result<f64> {
    let nd = newton_direction(problem, w, mu_cur)?;
    Ok(GwStats::from_newton(&nd)?.min_mu(mu_cur, beta))
}

/// `x = √μ Q(w^½)(e + d)`, `s = √μ Q(w^{-½})(e − d)` when `‖d‖∞ ≤ 1`.
pub fn feasible_point_from(w: &Element, nd: &NewtonData) -> Result<Option<(Element, Element)>> {
    if nd.norm_d_inf > 1.0 {
        return Ok(None);
    }
    let eig = w.eigen()?;
    let (half, inv_half) = (eig.map(f64::sqrt), eig.map(|l| 1.0 / l.sqrt()));
    let e = w.cone().identity();
    let rmu = nd.mu.sqrt();
    let x = &half.quad_rep(&(&e + &nd.d))? * rmu;
    let s = &inv_half.quad_rep(&(&e - &nd.d))? * rmu;
    Ok(Some((x, s)))
}

/// [`feasible_point_from`] followed by [`ConicProblem::project_affine`].
pub fn feasible_point(problem: &ConicProblem, w: &Element, mu: f64) -> Result<Option<(Element, Element)>> {
    let nd = newton_direction(problem, w, mu)?;
    match feasible_point_from(w, &nd)? {
        Some((x, s)) => problem.project_affine(&x, &s).map(Some),
        None => Ok(None),
    }
}

/// `⟨x, s⟩`.
pub fn duality_gap(x: &Element, s: &Element) -> f64 {
    x.inner(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::BlockKind;
    use crate::random::{random_element, random_interior, SeededRng};

    fn rel_close(a: &Element, b: &Element, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
    }

    fn random_problem(cone: &Arc<Cone>, dim_l: usize, rng: &mut SeededRng) -> ConicProblem {
        let x0 = random_interior(cone, rng, 0.5);
        let s0 = random_interior(cone, rng, 0.5);
        let basis = (0..dim_l).map(|_| random_element(cone, rng)).collect();
        ConicProblem::basis(cone, x0, s0, basis).unwrap()
    }

    fn cones() -> Vec<Arc<Cone>> {
        vec![
            Cone::orthant(6).unwrap(),
            Cone::second_order(5).unwrap(),
            Cone::psd(4).unwrap(),
            Cone::new(vec![BlockKind::Orthant(2), BlockKind::SecondOrder(3), BlockKind::Psd(3)]).unwrap(),
        ]
    }

    #[test]
    fn dependent_basis_rejected() {
        let c = Cone::orthant(3).unwrap();
        let l = Element::new(&c, vec![1.0, 2.0, 3.0]).unwrap();
        let err = ConicProblem::basis(&c, c.identity(), c.identity(), vec![l.clone(), &l * 2.0]).unwrap_err();
        assert!(matches!(err, Error::IllConditionedBasis { index: 1, .. }));
    }

    #[test]
    fn projector_examples() {
        let mut rng = SeededRng::new(1);
        for cone in cones() {
            let p = random_problem(&cone, 3, &mut rng);
            let w = random_interior(&cone, &mut rng, 0.5);
            let proj = scaled_projections(&p, &w).unwrap();
            let z = random_element(&cone, &mut rng);
            let z2 = random_element(&cone, &mut rng);
            assert!(rel_close(&(&proj.proj_l(&z) + &proj.proj_perp(&z)), &z, 1e-10));
            assert!(proj.proj_l(&z).inner(&proj.proj_perp(&z2)).abs() < 1e-10 * z.norm() * z2.norm());

            let at_e = scaled_projections(&p, &cone.identity()).unwrap();
            if let ConstraintForm::Basis(bf) = p.form() {
                for l in &bf.basis_l {
                    assert!(rel_close(&at_e.proj_l(l), l, 1e-10));
                }
            }
        }
    }

    #[test]
    fn newton_summands_are_consistent() {
        let mut rng = SeededRng::new(2);
        for cone in cones() {
            for route in 0..2 {
                let p = random_problem(&cone, 3, &mut rng);
                let p = if route == 0 { p } else { p.to_operator_form().unwrap() };
                let w = random_interior(&cone, &mut rng, 0.5);
                let mu = 0.5 + rng.uniform();
                let nd = newton_direction(&p, &w, mu).unwrap();
                let tol = 1e-10 * nd.norm_d.max(1.0);
                assert!((&nd.d - &(&nd.d1 - &nd.d2)).norm() <= tol);
                assert!(nd.d1.inner(&nd.d2).abs() <= 1e-10 * (nd.d1.norm() * nd.d2.norm()).max(1.0));
                let lhs = &nd.d1 + &nd.d2;
                let rhs = (&nd.g_w * (1.0 / mu.sqrt())).axpy(-1.0, &cone.identity());
                assert!(rel_close(&lhs, &rhs, 1e-10));
                assert!(nd.h_ub.is_infinite() || nd.h_lb <= nd.h_ub);
            }
        }
    }

    #[test]
    fn routes_agree() {
        let mut rng = SeededRng::new(3);
        for cone in cones() {
            let p = random_problem(&cone, 3, &mut rng);
            let op = p.to_operator_form().unwrap();
            let w = random_interior(&cone, &mut rng, 0.5);
            let a = newton_direction(&p, &w, 0.7).unwrap();
            let b = newton_direction(&op, &w, 0.7).unwrap();
            assert!(rel_close(&a.d, &b.d, 1e-8));
            assert!(rel_close(&a.d1, &b.d1, 1e-8));
            assert!(rel_close(&a.d2, &b.d2, 1e-8));
            assert!(rel_close(&a.g_w, &b.g_w, 1e-8));
        }
    }

    #[test]
    fn operator_form_with_side_constraints_round_trips() {
        let mut rng = SeededRng::new(4);
        let cone = Cone::psd(3).unwrap();
        let a: Vec<Element> = (0..4).map(|_| random_element(&cone, &mut rng)).collect();
        let b_mat = Matrix::from_row_major(1, 4, rng.gaussian_vec(4)).unwrap();
        let x_feas = random_interior(&cone, &mut rng, 0.3);
        let b = a.iter().map(|ai| ai.inner(&x_feas)).collect();
        let c = random_interior(&cone, &mut rng, 0.3);
        let p = ConicProblem::operator(&cone, a, b_mat, b, c, vec![0.0]).unwrap();
        let bf = p.basis_form().unwrap();
        assert_eq!(bf.basis_l.len(), cone.dim() - 3);
        let back = ConicProblem::basis(&cone, bf.x0.clone(), bf.s0.clone(), bf.basis_l.clone()).unwrap();
        let w = random_interior(&cone, &mut rng, 0.5);
        let a = newton_direction(&p, &w, 1.3).unwrap();
        let b = newton_direction(&back, &w, 1.3).unwrap();
        assert!(rel_close(&a.d, &b.d, 1e-8));
        let (rx, rs) = p.affine_residuals(&x_feas, &bf.s0).unwrap();
        assert!(rx < 1e-10 && rs < 1e-10);
    }

    #[test]
    fn degenerate_operator_data() {
        let cone = Cone::orthant(3).unwrap();
        let a0 = Element::new(&cone, vec![1.0, 0.0, 0.0]).unwrap();
        let p = ConicProblem::operator(
            &cone,
            vec![a0.clone(), a0],
            Matrix::zeros(0, 2),
            vec![1.0, 1.0],
            cone.identity(),
            vec![],
        )
        .unwrap();
        assert_eq!(newton_direction(&p, &cone.identity(), 1.0).unwrap_err(), Error::DegenerateConstraints);
    }

    #[test]
    fn centered_point_has_zero_direction() {
        // L = {0}: the centered point solves x0 = √μ w, s0 = √μ w⁻¹.
        let cone = Cone::orthant(3).unwrap();
        let x0 = Element::new(&cone, vec![2.0, 3.0, 5.0]).unwrap();
        let s0 = x0.inv().unwrap();
        let p = ConicProblem::basis(&cone, x0.clone(), s0, vec![]).unwrap();
        let w = &x0 * 1.0;
        let nd = newton_direction(&p, &w, 1.0).unwrap();
        assert!(nd.norm_d < 1e-14);
        assert!(nd.h_lb < 1e-28 && nd.h_ub < 1e-28);
    }

    #[test]
    fn step_bound_examples() {
        for n in [1usize, 3, 10] {
            let sq = n as f64;
            let (h_lb, _) = divergence_bounds(sq.sqrt(), 1.0);
            assert!((step_bound_from(sq.sqrt(), 1.0, h_lb) - 1.2).abs() < 1e-14);
        }
        // rank-one d with vanishing eigenvalue
        let a = 1e-6;
        let (h_lb, _) = divergence_bounds(a, a);
        assert!((step_bound_from(a, a, h_lb) - 2.0).abs() < 1e-5);
        // k equal eigenvalues of magnitude a, h_lb → 0
        let (k, a) = (4.0f64, 1e-4);
        let norm = a * k.sqrt();
        assert!((step_bound_from(norm, a, 0.0) - 1.0).abs() < 1e-12);
        assert!(step_bound_from(0.0, 0.0, 0.0).is_infinite());
    }

    #[test]
    fn mu_selection_centered_rank_one() {
        let stats = GwStats { norm_sq: 1.0, trace: 1.0, lambda_min: 1.0, lambda_max: 1.0, rank: 1 };
        let mu = stats.min_mu(1.0, 0.25);
        let r = (1.0 / mu).sqrt();
        assert!((r - 1.3903882032022077).abs() < 1e-10, "r = {r}");
        // pole guard for huge β: r → 2
        let mu = stats.min_mu(1.0, 1e300);
        assert!(((1.0 / mu).sqrt() - 2.0).abs() < 1e-10);
        // infeasible at μ_cur: no change
        let off = GwStats { norm_sq: 9.0, trace: 3.0, lambda_min: 3.0, lambda_max: 3.0, rank: 1 };
        assert_eq!(off.min_mu(1.0, 0.25), 1.0);
    }

    #[test]
    fn closed_form_h_ub_matches_newton() {
        let mut rng = SeededRng::new(5);
        for cone in cones() {
            for _ in 0..5 {
                let p = random_problem(&cone, 2, &mut rng);
                let w = random_interior(&cone, &mut rng, 0.3);
                let mu = 0.2 + 2.0 * rng.uniform();
                let nd = newton_direction(&p, &w, mu).unwrap();
                let closed = GwStats::from_newton(&nd).unwrap().h_ub(mu);
                if nd.h_ub.is_finite() {
                    assert!((closed - nd.h_ub).abs() <= 1e-9 * nd.h_ub.max(1.0), "{closed} vs {}", nd.h_ub);
                } else {
                    assert!(closed.is_infinite());
                }
            }
        }
    }

    #[test]
    fn mu_selection_hits_beta() {
        let mut rng = SeededRng::new(6);
        let cone = Cone::psd(4).unwrap();
        // x0 = w, s0 = w⁻¹ puts w on the central path at μ = 1.
        let w = random_interior(&cone, &mut rng, 0.4);
        let basis = (0..3).map(|_| random_element(&cone, &mut rng)).collect();
        let p = ConicProblem::basis(&cone, w.clone(), w.inv().unwrap(), basis).unwrap();
        let mu_cur = 1.0;
        let beta = 5.0;
        let mu = mu_candidates(&p, &w, mu_cur, beta).unwrap();
        assert!(mu < mu_cur);
        let h = newton_direction(&p, &w, mu).unwrap().h_ub;
        assert!((h - beta).abs() < 1e-6 * beta, "h_ub {h} at selected μ");
    }

    #[test]
    fn feasible_point_examples() {
        let mut rng = SeededRng::new(7);
        for cone in cones() {
            let p = random_problem(&cone, 2, &mut rng);
            let w = random_interior(&cone, &mut rng, 0.05);
            let mu = 1.0;
            let nd = newton_direction(&p, &w, mu).unwrap();
            match feasible_point(&p, &w, mu).unwrap() {
                Some((x, s)) => {
                    assert!(nd.norm_d_inf <= 1.0);
                    let (rx, rs) = p.affine_residuals(&x, &s).unwrap();
                    assert!(rx < 1e-8 && rs < 1e-8);
                    assert!(x.min_eigenvalue().unwrap() >= -1e-10);
                    assert!(s.min_eigenvalue().unwrap() >= -1e-10);
                    assert!(duality_gap(&x, &s) >= -1e-10);
                }
                None => assert!(nd.norm_d_inf > 1.0),
            }
        }
        let cone = Cone::orthant(1).unwrap();
        let p = ConicProblem::basis(&cone, Element::new(&cone, vec![2.5]).unwrap(), cone.identity(), vec![]).unwrap();
        // d = 2.5 − 1 = 1.5 at w = e, μ = 1
        assert!(feasible_point(&p, &cone.identity(), 1.0).unwrap().is_none());
    }

    #[test]
    fn duality_gap_examples() {
        let cone = Cone::psd(3).unwrap();
        let mut rng = SeededRng::new(8);
        let w = random_interior(&cone, &mut rng, 0.5);
        let mu: f64 = 2.5;
        let gap = duality_gap(&(&w * mu.sqrt()), &(&w.inv().unwrap() * mu.sqrt()));
        assert!((gap - mu * 3.0).abs() < 1e-12);
        assert_eq!(duality_gap(&cone.zeros(), &cone.zeros()), 0.0);
    }

    #[test]
    fn nt_scaling_point_coincides() {
        let mut rng = SeededRng::new(9);
        for cone in cones() {
            let p = random_problem(&cone, 2, &mut rng);
            let w = random_interior(&cone, &mut rng, 0.4);
            let mu: f64 = 0.8;
            let x = &w * mu.sqrt();
            let s = &w.inv().unwrap() * mu.sqrt();
            let xh = x.sqrt().unwrap();
            let scaling = xh.quad_rep(&xh.quad_rep(&s).unwrap().inv_sqrt().unwrap()).unwrap();
            assert!(rel_close(&scaling, &w, 1e-9));
            let nd = newton_direction(&p, &w, mu).unwrap();
            let xn = &x + &(&scaling.sqrt().unwrap().quad_rep(&nd.d).unwrap() * mu.sqrt());
            let sn = &s - &(&scaling.inv_sqrt().unwrap().quad_rep(&nd.d).unwrap() * mu.sqrt());
            let (rx, rs) = p.affine_residuals(&xn, &sn).unwrap();
            assert!(rx < 1e-9 && rs < 1e-9);
        }
    }

    #[test]
    fn transform_preserves_direction_up_to_m() {
        let mut rng = SeededRng::new(10);
        for cone in cones() {
            let p = random_problem(&cone, 3, &mut rng);
            let t = ConeAutomorphism::random(&cone, &mut rng, false);
            let pt = p.transform(&t).unwrap();
            let w = random_interior(&cone, &mut rng, 0.4);
            let tw = t.apply(&w).unwrap();
            let nd = newton_direction(&p, &w, 0.9).unwrap();
            let ndt = newton_direction(&pt, &tw, 0.9).unwrap();
            let m = |z: &Element| {
                let inner = w.sqrt().unwrap().quad_rep(z).unwrap();
                tw.inv_sqrt().unwrap().quad_rep(&t.apply(&inner).unwrap()).unwrap()
            };
            assert!(rel_close(&ndt.d, &m(&nd.d), 1e-8));
            assert!(rel_close(&ndt.d1, &m(&nd.d1), 1e-8));
            assert!(rel_close(&ndt.d2, &m(&nd.d2), 1e-8));
            assert!((ndt.h_lb - nd.h_lb).abs() <= 1e-8 * nd.h_lb.max(1.0));
            assert!((ndt.t_max - nd.t_max).abs() <= 1e-8 * nd.t_max.max(1.0));
        }
    }
}
