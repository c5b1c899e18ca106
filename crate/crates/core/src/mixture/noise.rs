use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lower clamp applied to every standard-uniform draw; the upper clamp is
/// `1 - UNIFORM_CLAMP`.
pub const UNIFORM_CLAMP: f64 = 1e-12;

/// One realisation of the sampling noise for a map with `n` components.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    /// i.i.d. Gumbel(0, 1) values, one per component.
    pub gumbels: Vec<f64>,
    /// Standard uniforms in (0, 1), `dim` per component, row-major.
    pub basis_uniforms: Vec<f64>,
    dim: usize,
}

fn clamped_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>().clamp(UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
}

/// Inverse Gumbel CDF: `-ln(-ln u)`.
pub fn gumbel_from_uniform(u: f64) -> f64 {
    -(-u.ln()).ln()
}

/// Draws Gumbel noise for `n` components plus `dim` basis uniforms each.
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize) -> NoiseDraw {
    let gumbels = (0..n)
        .map(|_| gumbel_from_uniform(clamped_uniform(rng)))
        .collect();
    let basis_uniforms = (0..n * dim).map(|_| clamped_uniform(rng)).collect();
    NoiseDraw {
        gumbels,
        basis_uniforms,
        dim,
    }
}

/// RNG for draw `index` under `seed`: a dedicated ChaCha stream, so draws
/// can be generated in any order or in parallel and still match.
pub fn draw_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

impl NoiseDraw {
    /// The draw fully determined by `(seed, index)`.
    pub fn from_seed(seed: u64, index: u64, n: usize, dim: usize) -> Self {
        draw_noise(&mut draw_rng(seed, index), n, dim)
    }

    /// Builds a draw from explicit values.
    pub fn from_parts(gumbels: Vec<f64>, basis_uniforms: Vec<f64>, dim: usize) -> Self {
        assert_eq!(gumbels.len() * dim, basis_uniforms.len(), "one uniform per axis per component");
        Self {
            gumbels,
            basis_uniforms,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.gumbels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gumbels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Uniforms used to sample component `i`.
    pub fn uniforms(&self, i: usize) -> &[f64] {
        &self.basis_uniforms[i * self.dim..(i + 1) * self.dim]
    }
}
