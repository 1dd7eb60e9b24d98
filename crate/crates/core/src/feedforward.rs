//! Feed-forward of the detected screen phase into the choice of WWD readout
//! basis.
//!
//! Two protocols are provided. The simplified one switches between the
//! natural and the canonical basis at the crossing phase `δ*` and has a closed
//! form phase average. The full one searches, at each phase of a grid, over
//! Haar-random bases of the WWD subspace for the largest `K_W(δ)`.
//!
//! The candidate set of the full search always contains the natural and the
//! canonical basis, so `K_FF(δ) ≥ max(K_N(δ), K_E)` holds exactly.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{
    canonical_basis, canonical_k_closed, knowledge_at, natural_basis, natural_k_at_closed,
    PhaseKernel,
};
use crate::linalg::{haar_random_basis, ComplexVector, OrthonormalBasis};
use crate::model::{pattern, DetectorCoupling, WWD_DIM};
use crate::rng::{derive_seed, task_stream};

pub const DEFAULT_SAMPLES_PER_DELTA: usize = 50_000;
pub const DEFAULT_DELTA_POINTS: usize = 50;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Natural,
    Canonical,
    Simplified,
    #[serde(rename = "ff")]
    FeedForward,
}

impl Protocol {
    pub const ALL: [Protocol; 4] =
        [Protocol::Natural, Protocol::Canonical, Protocol::Simplified, Protocol::FeedForward];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Natural => "natural",
            Protocol::Canonical => "canonical",
            Protocol::Simplified => "simplified",
            Protocol::FeedForward => "ff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub samples_per_delta: usize,
    pub delta_points: usize,
    pub seed: u64,
    pub refine: bool,
    pub refine_iters: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            samples_per_delta: DEFAULT_SAMPLES_PER_DELTA,
            delta_points: DEFAULT_DELTA_POINTS,
            seed: DEFAULT_SEED,
            refine: false,
            refine_iters: 200,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_points < 2 {
            return Err(Error::InvalidConfig("delta_points must be at least 2".into()));
        }
        if self.refine && self.refine_iters == 0 {
            return Err(Error::InvalidConfig("refine_iters must be positive".into()));
        }
        Ok(())
    }
}

/// `K(δ)` sampled on a phase grid, with the basis that produced each point.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeCurve {
    pub visibility: f64,
    pub protocol: Protocol,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub bases: Option<Vec<OrthonormalBasis>>,
}

impl KnowledgeCurve {
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// Index of the grid point closest to `delta` (taken modulo 2π).
    pub fn nearest_index(&self, delta: f64) -> usize {
        let d = delta.rem_euclid(TAU);
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, &g) in self.deltas.iter().enumerate() {
            let dist = (g - d).abs().min(TAU - (g - d).abs());
            if dist < best_dist - 1e-12 {
                best = i;
                best_dist = dist;
            }
        }
        best
    }
}

/// `n` equally spaced phases covering `[0, 2π]`, both ends included.
pub fn delta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| if i + 1 == n { TAU } else { TAU * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Phase in `(π/2, π)` where natural and canonical knowledge cross:
/// `cos δ* = (√((1-V)/(1+V)) - 1)/V`. The second crossing is `2π - δ*`.
pub fn delta_star(visibility: f64) -> Result<f64> {
    if !(visibility > 0.0 && visibility < 1.0) {
        return Err(Error::CrossingUndefined(visibility));
    }
    let v = visibility;
    Ok(((((1.0 - v) / (1.0 + v)).sqrt() - 1.0) / v).clamp(-1.0, 1.0).acos())
}

/// `max(K_N(δ), K_E)`.
pub fn simplified_k_at(delta: f64, visibility: f64) -> Result<f64> {
    Ok(natural_k_at_closed(delta, visibility)?.max(canonical_k_closed(visibility)))
}

/// Closed-form phase average of the simplified protocol.
pub fn simplified_avg_closed(visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::VisibilityOutOfRange(visibility));
    }
    if visibility == 0.0 {
        return Ok(1.0);
    }
    if visibility == 1.0 {
        return Ok(0.0);
    }
    let v = visibility;
    let ds = delta_star(v)?;
    let canonical_part = 2.0 * canonical_k_closed(v) * (ds + v * ds.sin());
    let natural_part = 2.0 * (1.0 - v) * (PI - ds);
    Ok((canonical_part + natural_part) / TAU)
}

/// Basis and knowledge of the simplified protocol at one phase.
fn simplified_choice(delta: f64, c: DetectorCoupling) -> Result<(OrthonormalBasis, f64)> {
    let v = c.visibility();
    let natural = natural_k_at_closed(delta, v)?;
    let canonical = canonical_k_closed(v);
    if natural >= canonical {
        Ok((natural_basis(), natural))
    } else {
        Ok((canonical_basis(c)?, canonical))
    }
}

/// Knowledge curve of a closed-form protocol on `delta_points` phases,
/// carrying the basis used at each point.
pub fn analytic_curve(visibility: f64, protocol: Protocol, delta_points: usize) -> Result<KnowledgeCurve> {
    let c = DetectorCoupling::from_visibility(visibility)?;
    let deltas = delta_grid(delta_points);
    let mut values = Vec::with_capacity(deltas.len());
    let mut bases = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let (basis, k) = match protocol {
            Protocol::Natural => (natural_basis(), natural_k_at_closed(d, visibility)?),
            Protocol::Canonical => (canonical_basis(c)?, canonical_k_closed(visibility)),
            Protocol::Simplified => simplified_choice(d, c)?,
            Protocol::FeedForward => {
                return Err(Error::InvalidConfig("feed-forward curves come from ff_curve".into()))
            }
        };
        values.push(k);
        bases.push(basis);
    }
    Ok(KnowledgeCurve { visibility, protocol, deltas, values, bases: Some(bases) })
}

/// Best readout basis at phase `delta` over the natural basis, the canonical
/// basis and `cfg.samples_per_delta` Haar-random bases, optionally polished
/// by a local pattern search.
///
/// Random candidates are drawn sequentially from `rng`, so a larger budget
/// on the same stream never returns a smaller knowledge (without refinement).
pub fn optimize_basis_at<R: Rng + ?Sized>(
    delta: f64,
    c: DetectorCoupling,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<(OrthonormalBasis, f64)> {
    let kernel = PhaseKernel::new(delta, c)?;

    let mut best = natural_basis();
    let mut best_k = kernel.knowledge(&best);
    let canonical = canonical_basis(c)?;
    let k = kernel.knowledge(&canonical);
    if k > best_k {
        best = canonical;
        best_k = k;
    }
    for _ in 0..cfg.samples_per_delta {
        let candidate = haar_random_basis(WWD_DIM, rng)?;
        let k = kernel.knowledge(&candidate);
        if k > best_k {
            best = candidate;
            best_k = k;
        }
    }
    if cfg.refine {
        best = refine(&kernel, best, best_k, cfg.refine_iters)?;
    }
    let k = knowledge_at(&best, delta, c)?.knowledge;
    Ok((best, k))
}

/// Right-multiplies the basis matrix by `exp(iH)` with `H` Hermitian and
/// zero on the diagonal; the diagonal would only rephase individual vectors,
/// which leaves the readout unchanged.
fn rotate(basis: &OrthonormalBasis, params: &[f64; 6]) -> Result<OrthonormalBasis> {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    let h01 = z(params[0], params[1]);
    let h02 = z(params[2], params[3]);
    let h12 = z(params[4], params[5]);
    #[rustfmt::skip]
    let h = Matrix3::new(
        z(0.0, 0.0), h01,         h02,
        h01.conj(),  z(0.0, 0.0), h12,
        h02.conj(),  h12.conj(),  z(0.0, 0.0),
    );
    let u = (h * z(0.0, 1.0)).exp();
    let mut out = Vec::with_capacity(WWD_DIM);
    for k in 0..WWD_DIM {
        let mut v = ComplexVector::zeros(WWD_DIM)?;
        for (j, w) in basis.iter().enumerate() {
            for i in 0..WWD_DIM {
                v[i] += w[i] * u[(j, k)];
            }
        }
        out.push(v);
    }
    OrthonormalBasis::gram_schmidt(out)
}

/// Compass search over the six-dimensional chart around the incumbent.
fn refine(
    kernel: &PhaseKernel,
    mut best: OrthonormalBasis,
    mut best_k: f64,
    iters: usize,
) -> Result<OrthonormalBasis> {
    let mut step = 0.1;
    for _ in 0..iters {
        let mut improved = false;
        for axis in 0..6 {
            for sign in [1.0, -1.0] {
                let mut params = [0.0; 6];
                params[axis] = sign * step;
                let candidate = rotate(&best, &params)?;
                let k = kernel.knowledge(&candidate);
                if k > best_k {
                    best = candidate;
                    best_k = k;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-9 {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(feature = "parallel")]
fn map_tasks<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_tasks<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Feed-forward knowledge `K_FF(δ)` on `cfg.delta_points` phases. The phase
/// with index `j` uses its own stream derived from `(cfg.seed, j)`.
pub fn ff_curve(visibility: f64, cfg: &OptimizerConfig) -> Result<KnowledgeCurve> {
    cfg.validate()?;
    let c = DetectorCoupling::from_visibility(visibility)?;
    let deltas = delta_grid(cfg.delta_points);
    let results = map_tasks(deltas.len(), |j| {
        let mut rng = task_stream(cfg.seed, &[j as u64]);
        optimize_basis_at(deltas[j], c, cfg, &mut rng)
    });
    let mut values = Vec::with_capacity(deltas.len());
    let mut bases = Vec::with_capacity(deltas.len());
    for r in results {
        let (basis, k) = r?;
        values.push(k);
        bases.push(basis);
    }
    Ok(KnowledgeCurve {
        visibility,
        protocol: Protocol::FeedForward,
        deltas,
        values,
        bases: Some(bases),
    })
}

/// Trapezoid phase average `Σ K(δ) P(δ) Δδ` over the curve's own grid.
///
/// The integrand is smooth and periodic away from the protocol switch
/// points, so the error is dominated by the kinks; on a 50-point grid it is
/// of order 1e-3.
pub fn ff_average(curve: &KnowledgeCurve) -> Result<f64> {
    let n = curve.deltas.len();
    if n < 2 || curve.values.len() != n {
        return Err(Error::InvalidConfig("curve needs at least two points".into()));
    }
    if curve.deltas[0] != 0.0 || curve.deltas[n - 1] != TAU {
        return Err(Error::InvalidConfig("curve must cover [0, 2pi]".into()));
    }
    let v = curve.visibility;
    let f: Vec<f64> = curve.deltas.iter().zip(&curve.values).map(|(&d, &k)| k * pattern(d, v)).collect();
    Ok(curve
        .deltas
        .windows(2)
        .zip(f.windows(2))
        .map(|(d, y)| 0.5 * (d[1] - d[0]) * (y[0] + y[1]))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    pub visibility: f64,
    pub kbar_canonical: f64,
    pub kbar_simplified: f64,
    pub kbar_ff: f64,
    pub excess_simplified: f64,
    pub excess_ff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessPeak {
    pub visibility: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    /// Grid row with the largest simplified excess.
    pub peak_simplified: ExcessPeak,
    /// Grid row with the largest feed-forward excess.
    pub peak_ff: ExcessPeak,
    /// Continuous maximum of the simplified excess.
    pub peak_simplified_refined: ExcessPeak,
}

fn excess(kbar: f64, visibility: f64) -> f64 {
    kbar * kbar + visibility * visibility
}

/// Simplified (closed form) and feed-forward phase averages with their
/// duality excess `K̄² + V²` for each visibility. Row `i` runs the optimizer
/// with master seed `derive_seed(cfg.seed, [i])`.
pub fn sweep_visibility(grid: &[f64], cfg: &OptimizerConfig) -> Result<Sweep> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty visibility grid".into()));
    }
    let mut records = Vec::with_capacity(grid.len());
    for (i, &v) in grid.iter().enumerate() {
        if !(0.0..1.0).contains(&v) {
            return Err(Error::VisibilityOutOfRange(v));
        }
        let row_cfg = OptimizerConfig { seed: derive_seed(cfg.seed, &[i as u64]), ..*cfg };
        let kbar_simplified = simplified_avg_closed(v)?;
        let kbar_ff = ff_average(&ff_curve(v, &row_cfg)?)?;
        records.push(SweepRecord {
            visibility: v,
            kbar_canonical: canonical_k_closed(v),
            kbar_simplified,
            kbar_ff,
            excess_simplified: excess(kbar_simplified, v),
            excess_ff: excess(kbar_ff, v),
        });
    }
    let peak_of = |f: fn(&SweepRecord) -> f64| {
        let r = records.iter().max_by(|a, b| f(a).total_cmp(&f(b))).expect("non-empty");
        ExcessPeak { visibility: r.visibility, excess: f(r) }
    };
    let peak_simplified = peak_of(|r| r.excess_simplified);
    let peak_ff = peak_of(|r| r.excess_ff);
    Ok(Sweep { records, peak_simplified, peak_ff, peak_simplified_refined: simplified_excess_peak()? })
}

/// Maximum of the simplified excess over `V ∈ (0, 1)`: a 0.01 grid search
/// followed by golden-section polish on the bracketing cell.
pub fn simplified_excess_peak() -> Result<ExcessPeak> {
    let f = |v: f64| simplified_avg_closed(v).map(|k| excess(k, v));
    let mut best_v = 0.01;
    let mut best = f(best_v)?;
    for i in 2..100 {
        let v = i as f64 / 100.0;
        let e = f(v)?;
        if e > best {
            best = e;
            best_v = v;
        }
    }
    let visibility = golden_section_max(f, (best_v - 0.01).max(1e-6), (best_v + 0.01).min(1.0 - 1e-6), 1e-10)?;
    Ok(ExcessPeak { visibility, excess: f(visibility)? })
}

/// Golden-section search for the maximizer of a unimodal `f` on `[a, b]`.
pub fn golden_section_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
