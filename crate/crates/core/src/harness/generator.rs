use crate::error::{Error, Result};
use crate::jordan::{svec, Cone, Element};
use crate::random::SeededRng;
use crate::subspace::ConicProblem;

/// Regeneration attempts after the first when the basis comes out
/// dependent.
pub const MAX_RETRIES: u64 = 5;

/// Random SDP of side `n`: `x0 = exp(X)`, `s0 = exp(S)` and a basis of `L`
/// of `dim_l` matrices, all `X`, `S` and basis elements drawn as
/// `½(G + Gᵀ)` with `G` standard normal.
///
/// On a dependent basis the draw is repeated with seed `seed + 1`, `+ 2`, …
pub fn generate_random_sdp(n: usize, dim_l: usize, seed: u64) -> Result<ConicProblem> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("matrix side must be at least 2, got {n}")));
    }
    if dim_l == 0 || dim_l >= n * (n + 1) / 2 {
        return Err(Error::InvalidParameter(format!(
            "dim L must lie in [1, {}) for side {n}, got {dim_l}",
            n * (n + 1) / 2
        )));
    }
    let cone = Cone::psd(n)?;
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let mut rng = SeededRng::new(seed.wrapping_add(attempt));
        let x0 = Element::new(&cone, svec(&rng.sym_gaussian(n)))?.exp()?;
        let s0 = Element::new(&cone, svec(&rng.sym_gaussian(n)))?.exp()?;
        let basis = (0..dim_l).map(|_| Element::new(&cone, svec(&rng.sym_gaussian(n)))).collect::<Result<Vec<_>>>()?;
        match ConicProblem::basis(&cone, x0, s0, basis) {
            Ok(p) => return Ok(p),
            Err(e @ Error::IllConditionedBasis { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
