//! Geodesics, distance and divergence on the interior of the cone.

use crate::error::{Error, Result};
use crate::jordan::Element;

/// Curve `t ↦ Q(w^½) exp(t d)` through `w` with initial velocity
/// `Q(w^½) d`.
#[derive(Debug, Clone)]
pub struct GeodesicRay {
    base: Element,
    direction: Element,
    base_half: Element,
}

impl GeodesicRay {
    /// Requires `base ∈ int K` and a direction on the same cone.
    pub fn new(base: Element, direction: Element) -> Result<GeodesicRay> {
        if base.cone() != direction.cone() {
            return Err(Error::ConeMismatch);
        }
        let eig = base.eigen()?;
        if !eig.is_interior() {
            return Err(Error::Domain { op: "geodesic base", eigenvalue: eig.min() });
        }
        let base_half = eig.map(f64::sqrt);
        Ok(GeodesicRay { base, direction, base_half })
    }

    pub fn base(&self) -> &Element {
        &self.base
    }

    pub fn direction(&self) -> &Element {
        &self.direction
    }

    pub fn base_half(&self) -> &Element {
        &self.base_half
    }

    pub fn point(&self, t: f64) -> Result<Element> {
        let step = (&self.direction * t).exp()?;
        self.base_half.quad_rep(&step)
    }
}

/// `Q(w^½) exp(t d)`.
pub fn geodesic_point(ray: &GeodesicRay, t: f64) -> Result<Element> {
    ray.point(t)
}

fn require_interior(op: &'static str, z: &Element) -> Result<()> {
    let eig = z.eigen()?;
    if eig.is_interior() {
        Ok(())
    } else {
        Err(Error::Domain { op, eigenvalue: eig.min() })
    }
}

/// `δ(z0, z1) = ‖log Q(z0^{-½}) z1‖`.
pub fn geodesic_distance(z0: &Element, z1: &Element) -> Result<f64> {
    require_interior("geodesic distance", z0)?;
    require_interior("geodesic distance", z1)?;
    let rel = z0.inv_sqrt()?.quad_rep(z1)?;
    Ok(rel.log()?.norm())
}

/// `q(t) = 2(cosh t − 1)`.
pub fn q_fn(t: f64) -> f64 {
    // 4 sinh²(t/2) avoids cancellation near 0
    let s = (0.5 * t).sinh();
    4.0 * s * s
}

/// Nonnegative inverse of [`q_fn`], `log(1 + t/2 + √(t + t²/4))`.
pub fn q_inv(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain { op: "q inverse", eigenvalue: t });
    }
    Ok((0.5 * t + (t + 0.25 * t * t).sqrt()).ln_1p())
}

/// Symmetric divergence `⟨z0, z1⁻¹⟩ + ⟨z0⁻¹, z1⟩ − 2n`.
pub fn divergence(z0: &Element, z1: &Element) -> Result<f64> {
    require_interior("divergence", z0)?;
    require_interior("divergence", z1)?;
    if z0.cone() != z1.cone() {
        return Err(Error::ConeMismatch);
    }
    let n = z0.cone().rank() as f64;
    Ok(z0.inner(&z1.inv()?) + z0.inv()?.inner(z1) - 2.0 * n)
}

/// Divergence computed from the eigenvalues `λ` of `log Q(z1^{-½}) z0` as
/// `Σ q(λ)`.
pub fn divergence_spectral(z0: &Element, z1: &Element) -> Result<f64> {
    require_interior("divergence", z0)?;
    require_interior("divergence", z1)?;
    let rel = z1.inv_sqrt()?.quad_rep(z0)?;
    let vals = rel.eigen()?.eigenvalues();
    Ok(vals.into_iter().map(|l| q_fn(l.ln())).sum())
}

/// `f(t) = h(Q(w^½) exp(t d), z_ref)`.
pub fn divergence_profile(ray: &GeodesicRay, t: f64, z_ref: &Element) -> Result<f64> {
    divergence(&ray.point(t)?, z_ref)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{BlockKind, Cone, ConeAutomorphism};
    use crate::linalg::Matrix;
    use crate::random::{random_element, random_interior, SeededRng};
    use proptest::prelude::*;
    use std::f64::consts::E;
    use std::sync::Arc;

    fn families() -> Vec<Arc<Cone>> {
        vec![
            Cone::orthant(5).unwrap(),
            Cone::second_order(4).unwrap(),
            Cone::psd(4).unwrap(),
            Cone::new(vec![BlockKind::Orthant(2), BlockKind::SecondOrder(3), BlockKind::Psd(3)]).unwrap(),
        ]
    }

    fn rel_close(a: &Element, b: &Element, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
    }

    /// Closed-form geodesic points per block family, independent of the
    /// generic quadratic-representation path.
    fn geodesic_closed_form(w: &Element, d: &Element) -> Element {
        let cone = w.cone().clone();
        match cone.blocks()[0] {
            BlockKind::Orthant(_) => {
                let c = w.coords().iter().zip(d.coords()).map(|(a, b)| (a.ln() + b).exp()).collect();
                Element::new(&cone, c).unwrap()
            }
            BlockKind::Psd(k) => {
                let wm = w.block_matrix(0);
                let e = crate::linalg::sym_eigen(&wm).unwrap();
                let half = e.map(f64::sqrt);
                let de = crate::linalg::sym_eigen(&d.block_matrix(0)).unwrap().map(f64::exp);
                let p = half.matmul(&de).matmul(&half);
                assert_eq!(p.rows(), k);
                Element::from_matrix(&cone, &p).unwrap()
            }
            BlockKind::SecondOrder(m) => {
                // (2 z zᵀ − det(z) R) exp d with z = w^½, R = diag(1, −I)
                let z = w.sqrt().unwrap();
                let zc = z.coords();
                let det = zc[0] * zc[0] - zc[1..].iter().map(|v| v * v).sum::<f64>();
                let ed = d.exp().unwrap();
                let ec = ed.coords();
                let mut out = vec![0.0; m];
                for i in 0..m {
                    let mut acc = 0.0;
                    for j in 0..m {
                        let r = if i != j {
                            0.0
                        } else if i == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        acc += (2.0 * zc[i] * zc[j] - det * r) * ec[j];
                    }
                    out[i] = acc;
                }
                Element::new(&cone, out).unwrap()
            }
        }
    }

    #[test]
    fn q_examples() {
        assert_eq!(q_fn(0.0), 0.0);
        assert!((q_fn(1.0) - 1.0861612696304874).abs() < 1e-15);
        assert!((q_inv(0.5).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(q_inv(-1e-3), Err(Error::Domain { .. })));
        assert_eq!(q_inv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn q_dominates_square_on_dense_grid() {
        for i in 0..=20000 {
            let t = -10.0 + i as f64 * 1e-3;
            assert!(q_fn(t) - t * t >= 0.0, "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn q_inv_inverts_q(t in -20.0f64..20.0) {
            let back = q_inv(q_fn(t)).unwrap();
            prop_assert!((back - t.abs()).abs() <= 1e-9 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn geodesic_examples() {
        let c = Cone::orthant(2).unwrap();
        let w = Element::new(&c, vec![1.0, E]).unwrap();
        let d = Element::new(&c, vec![1.0, -1.0]).unwrap();
        let ray = GeodesicRay::new(w.clone(), d).unwrap();
        let p = geodesic_point(&ray, 1.0).unwrap();
        assert!((p.coords()[0] - E).abs() < 1e-14 && (p.coords()[1] - 1.0).abs() < 1e-14);
        assert!(rel_close(&geodesic_point(&ray, 0.0).unwrap(), &w, 1e-12));

        let c = Cone::psd(3).unwrap();
        let mut rng = SeededRng::new(3);
        let d = random_element(&c, &mut rng);
        let ray = GeodesicRay::new(c.identity(), d.clone()).unwrap();
        assert!(rel_close(&ray.point(1.0).unwrap(), &d.exp().unwrap(), 1e-12));
    }

    #[test]
    fn geodesic_matches_closed_forms() {
        let mut rng = SeededRng::new(17);
        for cone in [Cone::orthant(5).unwrap(), Cone::second_order(5).unwrap(), Cone::psd(4).unwrap()] {
            for _ in 0..10 {
                let w = random_interior(&cone, &mut rng, 0.8);
                let d = random_element(&cone, &mut rng);
                let ray = GeodesicRay::new(w.clone(), d.clone()).unwrap();
                let generic = ray.point(1.0).unwrap();
                assert!(rel_close(&generic, &geodesic_closed_form(&w, &d), 1e-10));
                assert!(generic.is_interior().unwrap());
            }
        }
    }

    #[test]
    fn geodesic_rejects_boundary_base() {
        let c = Cone::orthant(2).unwrap();
        let w = Element::new(&c, vec![1.0, 0.0]).unwrap();
        assert!(GeodesicRay::new(w, c.zeros()).is_err());
    }

    #[test]
    fn distance_examples() {
        let c = Cone::orthant(2).unwrap();
        let z0 = c.identity();
        let z1 = Element::new(&c, vec![E, E * E]).unwrap();
        assert!((geodesic_distance(&z0, &z1).unwrap() - 5f64.sqrt()).abs() < 1e-14);
        assert!(geodesic_distance(&z1, &z1).unwrap().abs() < 1e-14);

        let mut rng = SeededRng::new(4);
        for cone in families() {
            let a = random_interior(&cone, &mut rng, 0.7);
            let b = random_interior(&cone, &mut rng, 0.7);
            let d = geodesic_distance(&a, &b).unwrap();
            let ds = geodesic_distance(&(&a * 3.7), &(&b * 3.7)).unwrap();
            assert!((d - ds).abs() < 1e-10);
            assert!((d - geodesic_distance(&b, &a).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn divergence_examples() {
        let c = Cone::orthant(1).unwrap();
        let z1 = Element::new(&c, vec![E]).unwrap();
        assert!((divergence(&c.identity(), &z1).unwrap() - q_fn(1.0)).abs() < 1e-14);
        assert!(divergence(&z1, &z1).unwrap().abs() < 1e-14);
        let bad = Element::new(&c, vec![-1.0]).unwrap();
        assert!(matches!(divergence(&bad, &z1), Err(Error::Domain { .. })));
    }

    #[test]
    fn divergence_spectral_form_agrees() {
        let mut rng = SeededRng::new(6);
        for cone in families() {
            for _ in 0..10 {
                let a = random_interior(&cone, &mut rng, 0.7);
                let b = random_interior(&cone, &mut rng, 0.7);
                let h = divergence(&a, &b).unwrap();
                let hs = divergence_spectral(&a, &b).unwrap();
                assert!((h - hs).abs() <= 1e-10 * h.max(1.0), "{h} vs {hs}");
                assert!((h - divergence(&b, &a).unwrap()).abs() <= 1e-10 * h.max(1.0));
            }
        }
    }

    #[test]
    fn sandwich_bounds() {
        let mut rng = SeededRng::new(7);
        for cone in families() {
            for _ in 0..100 {
                let a = random_interior(&cone, &mut rng, 0.8);
                let b = random_interior(&cone, &mut rng, 0.8);
                let d = geodesic_distance(&a, &b).unwrap();
                let h = divergence(&a, &b).unwrap();
                assert!(h - d * d >= -1e-9, "lower: h {h}, δ² {}", d * d);
                assert!(q_fn(d) - h >= -1e-9 * q_fn(d).max(1.0), "upper: h {h}, q(δ) {}", q_fn(d));
            }
        }
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = SeededRng::new(8);
        for cone in families() {
            for _ in 0..30 {
                let a = random_interior(&cone, &mut rng, 0.8);
                let b = random_interior(&cone, &mut rng, 0.8);
                let c = random_interior(&cone, &mut rng, 0.8);
                let ab = geodesic_distance(&a, &b).unwrap();
                let bc = geodesic_distance(&b, &c).unwrap();
                let ac = geodesic_distance(&a, &c).unwrap();
                assert!(ac <= ab + bc + 1e-10);
            }
        }
    }

    #[test]
    fn inverse_geodesic_consistency() {
        let mut rng = SeededRng::new(9);
        for cone in families() {
            let w = random_interior(&cone, &mut rng, 0.7);
            let d = random_element(&cone, &mut rng);
            let fwd = GeodesicRay::new(w.clone(), d.clone()).unwrap().point(0.6).unwrap();
            let back = GeodesicRay::new(w.inv().unwrap(), -&d).unwrap().point(0.6).unwrap();
            assert!(rel_close(&back, &fwd.inv().unwrap(), 1e-10));
        }
    }

    #[test]
    fn distance_invariant_under_automorphisms() {
        let mut rng = SeededRng::new(10);
        for cone in families() {
            for _ in 0..5 {
                let t = ConeAutomorphism::random(&cone, &mut rng, false);
                let a = random_interior(&cone, &mut rng, 0.7);
                let b = random_interior(&cone, &mut rng, 0.7);
                let d = geodesic_distance(&a, &b).unwrap();
                let dt = geodesic_distance(&t.apply(&a).unwrap(), &t.apply(&b).unwrap()).unwrap();
                assert!((d - dt).abs() < 1e-9 * d.max(1.0));
            }
        }
    }

    #[test]
    fn profile_examples() {
        let mut rng = SeededRng::new(12);
        let cone = Cone::psd(3).unwrap();
        let w = random_interior(&cone, &mut rng, 0.5);
        let z = random_interior(&cone, &mut rng, 0.5);
        let flat = GeodesicRay::new(w.clone(), cone.zeros()).unwrap();
        let h0 = divergence(&w, &z).unwrap();
        for t in [-1.0, 0.0, 0.5, 3.0] {
            assert!((divergence_profile(&flat, t, &z).unwrap() - h0).abs() < 1e-10 * h0.max(1.0));
        }
        for _ in 0..10 {
            let d = random_element(&cone, &mut rng);
            let ray = GeodesicRay::new(w.clone(), d).unwrap();
            let e = 1e-3;
            let f = |t| divergence_profile(&ray, t, &z).unwrap();
            assert!((f(0.0) - h0).abs() < 1e-10 * h0.max(1.0));
            assert!(f(e) - 2.0 * f(0.0) + f(-e) >= 0.0);
        }
    }

    #[test]
    fn psd_distance_matches_generalized_eigenvalues() {
        // δ² = Σ log² λ_i(Z0⁻¹ Z1), using a dense nalgebra solve as oracle.
        let mut rng = SeededRng::new(13);
        let cone = Cone::psd(4).unwrap();
        let a = random_interior(&cone, &mut rng, 0.8);
        let b = random_interior(&cone, &mut rng, 0.8);
        let to_na = |m: Matrix| nalgebra::DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice());
        let (am, bm) = (to_na(a.block_matrix(0)), to_na(b.block_matrix(0)));
        let chol = am.cholesky().unwrap();
        let l_inv = chol.l().try_inverse().unwrap();
        let c = &l_inv * bm * l_inv.transpose();
        let vals = nalgebra::SymmetricEigen::new(c).eigenvalues;
        let oracle: f64 = vals.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt();
        assert!((geodesic_distance(&a, &b).unwrap() - oracle).abs() < 1e-10);
    }
}
