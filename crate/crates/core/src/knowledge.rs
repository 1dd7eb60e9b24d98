//! Which-way knowledge functionals.
//!
//! A readout basis `W = {|W_i⟩}` of the WWD subspace yields outcome
//! probabilities `p_i` (or `p_i(δ)` once the path has been detected at screen
//! phase `δ`) and per-outcome best-guess qualities `q_i`. The knowledge is the
//! rescaled likelihood `K = 2 Σ p_i q_i - 1`.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, inner_unchecked, ComplexVector, HermitianMatrix, OrthonormalBasis};
use crate::model::{
    conditional_wwd_state, joint_state, pattern, projection_probability, rho_wwd, DetectorCoupling,
    WwdStatePair, WWD_DIM,
};

/// Squared overlaps closer than this count as a tie.
pub const TIE_TOL: f64 = 1e-12;

/// Fixed-phase projection probabilities at or below this are a dark fringe.
pub const DARK_FRINGE_TOL: f64 = 1e-12;

/// Simpson panels per smooth piece in [`phase_average`].
pub const QUADRATURE_PANELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Path {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReadoutOutcome {
    pub index: usize,
    pub probability: f64,
    pub guess_quality: f64,
    pub guessed_path: Path,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnowledgeValue {
    pub likelihood: f64,
    pub knowledge: f64,
}

impl KnowledgeValue {
    pub fn from_likelihood(likelihood: f64) -> Self {
        Self { likelihood, knowledge: 2.0 * likelihood - 1.0 }
    }
}

/// Best probability of naming the path correctly after the detector was
/// found in `w`, and the path to name.
///
/// Outcomes orthogonal to both marker states never occur; they get `q = 0.5`.
pub fn guess_quality(w: &ComplexVector, pair: &WwdStatePair) -> (f64, Path) {
    let oa = inner_unchecked(w, &pair.chi_a).norm_sqr();
    let ob = inner_unchecked(w, &pair.chi_b).norm_sqr();
    quality_from_overlaps(oa, ob)
}

#[inline]
fn quality_from_overlaps(oa: f64, ob: f64) -> (f64, Path) {
    if oa + ob <= 1e-30 || (oa - ob).abs() <= TIE_TOL {
        (0.5, Path::Tie)
    } else if oa > ob {
        (oa / (oa + ob), Path::A)
    } else {
        (ob / (oa + ob), Path::B)
    }
}

fn check_wwd_basis(basis: &OrthonormalBasis) -> Result<()> {
    if basis.dim() == WWD_DIM {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left: basis.dim(), right: WWD_DIM })
    }
}

/// Outcome probabilities `p_i = ⟨W_i|ρ_WWD|W_i⟩` with guess qualities.
pub fn readout_probs(basis: &OrthonormalBasis, c: DetectorCoupling) -> Result<Vec<ReadoutOutcome>> {
    check_wwd_basis(basis)?;
    let rho = rho_wwd(&joint_state(c));
    let pair = c.wwd_states();
    basis
        .iter()
        .enumerate()
        .map(|(index, w)| {
            let (guess_quality, guessed_path) = guess_quality(w, &pair);
            Ok(ReadoutOutcome { index, probability: rho.expectation(w)?, guess_quality, guessed_path })
        })
        .collect()
}

fn knowledge_of(outcomes: &[ReadoutOutcome]) -> KnowledgeValue {
    KnowledgeValue::from_likelihood(outcomes.iter().map(|o| o.probability * o.guess_quality).sum())
}

/// Phase-averaged knowledge of a fixed readout basis.
pub fn knowledge_avg(basis: &OrthonormalBasis, c: DetectorCoupling) -> Result<KnowledgeValue> {
    Ok(knowledge_of(&readout_probs(basis, c)?))
}

/// Everything needed to score readout bases at one screen phase.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PhaseKernel {
    pair: WwdStatePair,
    conditional: ComplexVector,
    norm_sqr: f64,
}

impl PhaseKernel {
    pub(crate) fn new(delta: f64, c: DetectorCoupling) -> Result<Self> {
        let conditional = conditional_wwd_state(delta, &joint_state(c));
        let norm_sqr = conditional.norm_sqr();
        if norm_sqr <= DARK_FRINGE_TOL {
            return Err(Error::DarkFringe {
                delta,
                probability: projection_probability(delta, c.visibility()),
            });
        }
        Ok(Self { pair: c.wwd_states(), conditional, norm_sqr })
    }

    /// `K_W(δ)` without allocating; `basis` must be a complete WWD basis.
    #[inline]
    pub(crate) fn knowledge(&self, basis: &OrthonormalBasis) -> f64 {
        let likelihood: f64 = basis
            .iter()
            .map(|w| {
                let (q, _) = guess_quality(w, &self.pair);
                inner_unchecked(w, &self.conditional).norm_sqr() * q
            })
            .sum();
        2.0 * likelihood / self.norm_sqr - 1.0
    }

    fn outcomes(&self, basis: &OrthonormalBasis) -> Vec<ReadoutOutcome> {
        let weights: Vec<f64> =
            basis.iter().map(|w| inner_unchecked(w, &self.conditional).norm_sqr()).collect();
        let total: f64 = weights.iter().sum();
        basis
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(index, (w, weight))| {
                let (guess_quality, guessed_path) = guess_quality(w, &self.pair);
                ReadoutOutcome { index, probability: weight / total, guess_quality, guessed_path }
            })
            .collect()
    }
}

/// Conditional outcome probabilities `p_i(δ)` given the path was detected at
/// screen phase `δ`.
pub fn conditional_probs(
    basis: &OrthonormalBasis,
    delta: f64,
    c: DetectorCoupling,
) -> Result<Vec<ReadoutOutcome>> {
    check_wwd_basis(basis)?;
    Ok(PhaseKernel::new(delta, c)?.outcomes(basis))
}

/// Phase-dependent knowledge `K_W(δ)`.
pub fn knowledge_at(basis: &OrthonormalBasis, delta: f64, c: DetectorCoupling) -> Result<KnowledgeValue> {
    Ok(knowledge_of(&conditional_probs(basis, delta, c)?))
}

/// Local readout of both detector qubits, `{|00⟩, |10⟩, |01⟩}`.
pub fn natural_basis() -> OrthonormalBasis {
    OrthonormalBasis::standard(WWD_DIM).expect("dim 3")
}

/// `Ê = |χ_a⟩⟨χ_a| - |χ_b⟩⟨χ_b|`.
pub fn canonical_observable(c: DetectorCoupling) -> HermitianMatrix {
    let pair = c.wwd_states();
    HermitianMatrix::outer(&pair.chi_a) - HermitianMatrix::outer(&pair.chi_b)
}

/// Eigenbasis of [`canonical_observable`], eigenvalues descending. Every
/// eigenvector is a separate readout outcome, including the zero-eigenvalue
/// one.
pub fn canonical_basis(c: DetectorCoupling) -> Result<OrthonormalBasis> {
    Ok(hermitian_eig(&canonical_observable(c))?.1)
}

pub fn natural_k_closed(visibility: f64) -> f64 {
    1.0 - visibility
}

pub fn canonical_k_closed(visibility: f64) -> f64 {
    (1.0 - visibility * visibility).max(0.0).sqrt()
}

/// The distinguishability is the canonical knowledge under another name.
pub fn distinguishability(visibility: f64) -> f64 {
    canonical_k_closed(visibility)
}

/// `(1 - V)/(1 + V cos δ)`.
pub fn natural_k_at_closed(delta: f64, visibility: f64) -> Result<f64> {
    let denom = 1.0 + visibility * delta.cos();
    if denom <= DARK_FRINGE_TOL {
        return Err(Error::DarkFringe { delta, probability: 0.5 * denom });
    }
    Ok((1.0 - visibility) / denom)
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, panels: usize) -> Result<f64> {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut sum = f(a)? + f(b)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h)?;
    }
    Ok(sum * h / 3.0)
}

/// `∫₀^{2π} K(δ) P(δ) dδ`.
///
/// `breakpoints` inside `(0, 2π)` split the range into pieces that are each
/// integrated with [`QUADRATURE_PANELS`] Simpson panels; pass the kinks of
/// piecewise integrands there. A dark fringe reported by `k` contributes
/// nothing since its weight `P(δ)` vanishes.
pub fn phase_average(
    k: impl Fn(f64) -> Result<f64>,
    visibility: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    let integrand = |d: f64| -> Result<f64> {
        let value = match k(d) {
            Ok(v) => v,
            Err(Error::DarkFringe { .. }) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand(d));
        }
        Ok(value * pattern(d, visibility))
    };
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < TAU).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend(cuts);
    edges.push(TAU);
    edges
        .windows(2)
        .map(|w| simpson(integrand, w[0], w[1], QUADRATURE_PANELS))
        .sum()
}

/// Phase average of `K_W(δ)` for a fixed basis.
pub fn phase_averaged_knowledge(basis: &OrthonormalBasis, c: DetectorCoupling) -> Result<f64> {
    check_wwd_basis(basis)?;
    phase_average(|d| Ok(PhaseKernel::new(d, c)?.knowledge(basis)), c.visibility(), &[])
}
