//! Hypoelliptic Brownian motion on `G` with generator `Δ/4`.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lie::StratifiedAlgebra;

/// Per-step update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `AreaMatched` on step-2 groups, `IncrementExp` otherwise.
    #[default]
    Auto,
    /// `g <- g · exp(ξ)` with a Gaussian horizontal increment `ξ`.
    IncrementExp,
    /// `IncrementExp` plus a conditionally Gaussian central term whose mean
    /// and covariance given `ξ` equal those of the Lévy area swept inside the
    /// step. Step-2 groups only.
    AreaMatched,
}

impl Scheme {
    pub fn resolve(self, alg: &StratifiedAlgebra) -> Result<Scheme> {
        match self {
            Scheme::Auto if alg.step() == 2 => Ok(Scheme::AreaMatched),
            Scheme::Auto => Ok(Scheme::IncrementExp),
            Scheme::AreaMatched if alg.step() != 2 => Err(Error::Domain(format!(
                "area-matched scheme needs a step-2 group, {} has step {}",
                alg.name(),
                alg.step()
            ))),
            s => Ok(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Heat-kernel time: terminal points are draws from `ρ_s`.
    pub s: f64,
    pub n: usize,
    pub steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SamplerConfig {
    pub const DEFAULT_STEPS: usize = 256;

    pub fn new(s: f64, n: usize, seed: u64) -> Self {
        Self {
            s,
            n,
            steps: Self::DEFAULT_STEPS,
            seed,
            scheme: Scheme::Auto,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::Domain(format!("s must be > 0, got {}", self.s)));
        }
        if self.n == 0 {
            return Err(Error::Domain("sample count must be >= 1".into()));
        }
        if self.steps == 0 {
            return Err(Error::Domain("steps must be >= 1".into()));
        }
        Ok(())
    }

    /// Stable 64-bit digest of the group and this configuration.
    pub fn hash_with(&self, alg: &StratifiedAlgebra) -> u64 {
        let payload = serde_json::json!({ "group": alg.to_spec(), "config": self });
        let digest = Sha256::digest(payload.to_string().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SamplerConfig,
    pub config_hash: u64,
}

/// Terminal points of `n` sample paths, stored row-major (`n × N`).
#[derive(Debug, Clone)]
pub struct SampleBatch {
    alg: Arc<StratifiedAlgebra>,
    s: f64,
    points: Vec<Complex64>,
    provenance: Provenance,
}

impl PartialEq for SampleBatch {
    fn eq(&self, other: &Self) -> bool {
        *self.alg == *other.alg
            && self.s == other.s
            && self.points == other.points
            && self.provenance == other.provenance
    }
}

impl SampleBatch {
    pub(crate) fn from_parts(
        alg: Arc<StratifiedAlgebra>,
        s: f64,
        points: Vec<Complex64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if !points.len().is_multiple_of(alg.dim()) {
            return Err(Error::Dimension {
                expected: alg.dim(),
                got: points.len() % alg.dim(),
            });
        }
        if let Some(i) = points.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::PoisonedEstimate { index: i / alg.dim() });
        }
        Ok(Self {
            alg,
            s,
            points,
            provenance,
        })
    }

    pub fn algebra(&self) -> &Arc<StratifiedAlgebra> {
        &self.alg
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.alg.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[Complex64] {
        let d = self.alg.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[Complex64]> + '_ {
        self.points.chunks(self.alg.dim())
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.points
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Applies `δ_λ` pointwise. The result is distributed as `ρ_{s|λ|^2}`.
    pub fn dilate(&self, lambda: Complex64) -> Result<SampleBatch> {
        if lambda == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("dilation by 0 is not an automorphism".into()));
        }
        let powers = self.alg.weight_powers(lambda);
        let weights = self.alg.weights();
        let d = self.alg.dim();
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(k, z)| z * powers[weights[k % d] as usize])
            .collect();
        Ok(SampleBatch {
            alg: Arc::clone(&self.alg),
            s: self.s * lambda.norm_sqr(),
            points,
            provenance: self.provenance.clone(),
        })
    }
}

/// Precomputed data for the conditional Lévy-area term on a step-2 group.
///
/// With `w` the realified horizontal path and `K_α` the matrix of the real
/// central coordinate `α` of `[b_p, b_q]`, the central part of `exp(ξ)`
/// composed with the area swept inside a step is `½∫⟨w, K_α dw⟩`. Given the
/// increment `ξ`, that area has mean zero and covariance
/// `σ⁴h²/24 tr(K_αᵀK_β) + σ²h/12 ⟨K_α ξ, K_β ξ⟩` (`σ² = ½` per unit time).
struct AreaModel {
    center: std::ops::Range<usize>,
    /// `K_α` as dense `r × r` matrices, `r = 2 d_1`.
    k: Vec<Vec<f64>>,
    trace: Vec<f64>,
}

impl AreaModel {
    fn new(alg: &StratifiedAlgebra) -> Self {
        let horizontal = alg.layer_range(1);
        let center = alg.layer_range(2);
        let r = 2 * horizontal.len();
        let q = 2 * center.len();
        let mut k = vec![vec![0.0; r * r]; q];
        let unit = |p: usize| {
            let mut v = vec![Complex64::new(0.0, 0.0); alg.dim()];
            v[horizontal.start + p / 2] = if p.is_multiple_of(2) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 1.0)
            };
            v
        };
        for p in 0..r {
            for pp in 0..r {
                let b = alg
                    .bracket(&unit(p), &unit(pp))
                    .expect("basis vectors have full length");
                for (c, idx) in center.clone().enumerate() {
                    k[2 * c][p * r + pp] = b[idx].re;
                    k[2 * c + 1][p * r + pp] = b[idx].im;
                }
            }
        }
        let mut trace = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                trace[a * q + b] = k[a].iter().zip(&k[b]).map(|(x, y)| x * y).sum();
            }
        }
        Self { center, k, trace }
    }

    /// Adds one draw of the area term to `g` given the real increment `xi`.
    fn apply(&self, h: f64, xi: &[f64], normals: &[f64], g: &mut [Complex64], scratch: &mut Scratch) {
        let r = xi.len();
        let q = self.k.len();
        let sigma2 = 0.5;
        for (a, ka) in self.k.iter().enumerate() {
            let kx = &mut scratch.kxi[a * r..(a + 1) * r];
            for (p, out) in kx.iter_mut().enumerate() {
                *out = (0..r).map(|pp| ka[p * r + pp] * xi[pp]).sum();
            }
        }
        let cov = &mut scratch.cov;
        for a in 0..q {
            for b in 0..=a {
                let lin: f64 = scratch.kxi[a * r..(a + 1) * r]
                    .iter()
                    .zip(&scratch.kxi[b * r..(b + 1) * r])
                    .map(|(x, y)| x * y)
                    .sum();
                let v = sigma2 * sigma2 * h * h / 24.0 * self.trace[a * q + b] + sigma2 * h / 12.0 * lin;
                cov[a * q + b] = v;
                cov[b * q + a] = v;
            }
        }
        cholesky_in_place(cov, q);
        for (c, idx) in self.center.clone().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (b, nb) in normals.iter().enumerate().take(q) {
                re += cov[(2 * c) * q + b] * nb;
                im += cov[(2 * c + 1) * q + b] * nb;
            }
            g[idx] += Complex64::new(re, im);
        }
    }
}

struct Scratch {
    kxi: Vec<f64>,
    cov: Vec<f64>,
}

/// Lower-triangular Cholesky factor in place; zero pivots (degenerate
/// directions) yield zero columns.
fn cholesky_in_place(m: &mut [f64], q: usize) {
    for j in 0..q {
        let mut d = m[j * q + j];
        for k in 0..j {
            d -= m[j * q + k] * m[j * q + k];
        }
        let d = if d > 0.0 { d.sqrt() } else { 0.0 };
        m[j * q + j] = d;
        for i in j + 1..q {
            let mut s = m[i * q + j];
            for k in 0..j {
                s -= m[i * q + k] * m[j * q + k];
            }
            m[i * q + j] = if d > 0.0 { s / d } else { 0.0 };
        }
        for k in j + 1..q {
            m[j * q + k] = 0.0;
        }
    }
}

const CHUNK: usize = 512;

/// Simulates `n` paths of the diffusion with generator `Δ/4` up to time `s`.
///
/// Each step draws every real horizontal coordinate as `N(0, Δt/2)` and
/// right-multiplies by its exponential. Sample `i` uses its own ChaCha
/// stream, so the batch is a pure function of `(config, seed)` whatever the
/// number of rayon workers.
pub fn sample_heat_kernel(alg: &Arc<StratifiedAlgebra>, cfg: &SamplerConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let scheme = cfg.scheme.resolve(alg)?;
    let area = (scheme == Scheme::AreaMatched).then(|| AreaModel::new(alg));
    let d = alg.dim();
    let horizontal = alg.layer_range(1);
    let dt = cfg.s / cfg.steps as f64;
    let sd = (dt / 2.0).sqrt();
    let mut points = vec![Complex64::new(0.0, 0.0); cfg.n * d];

    points.par_chunks_mut(CHUNK * d).enumerate().for_each(|(chunk, block)| {
        let mut xi = vec![Complex64::new(0.0, 0.0); d];
        let mut xi_real = vec![0.0; 2 * horizontal.len()];
        let mut next = vec![Complex64::new(0.0, 0.0); d];
        let q = area.as_ref().map_or(0, |a| a.k.len());
        let mut normals = vec![0.0; q];
        let mut scratch = Scratch {
            kxi: vec![0.0; q * xi_real.len()],
            cov: vec![0.0; q * q],
        };
        for (local, g) in block.chunks_mut(d).enumerate() {
            let index = (chunk * CHUNK + local) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index);
            for _ in 0..cfg.steps {
                for x in xi_real.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *x = sd * z;
                }
                for (j, idx) in horizontal.clone().enumerate() {
                    xi[idx] = Complex64::new(xi_real[2 * j], xi_real[2 * j + 1]);
                }
                alg.bch_into(g, &xi, &mut next);
                g.copy_from_slice(&next);
                if let Some(model) = &area {
                    for v in normals.iter_mut() {
                        *v = StandardNormal.sample(&mut rng);
                    }
                    model.apply(dt, &xi_real, &normals, g, &mut scratch);
                }
            }
        }
    });

    let provenance = Provenance {
        config: cfg.clone(),
        config_hash: cfg.hash_with(alg),
    };
    SampleBatch::from_parts(Arc::clone(alg), cfg.s, points, provenance)
}
