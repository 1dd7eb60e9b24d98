//! Physical objects of the interferometer: the detector coupling, the WWD
//! marker states, the joint state after the path/detector interaction, its
//! reduced density matrices and the screen pattern.
//!
//! The WWD is represented in the three-dimensional subspace
//! `span{|00⟩, |10⟩, |01⟩}` in that order. `|11⟩` is never populated by the
//! interaction and is dropped.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, HermitianMatrix};

pub const WWD_DIM: usize = 3;

/// Labels of the WWD subspace basis, written as `|q_a q_b⟩`.
pub const WWD_LABELS: [&str; WWD_DIM] = ["00", "10", "01"];

/// Interaction strength of the path/detector coupling.
///
/// `alpha` and `beta` are taken real and non-negative: a relative phase
/// between the marker states only shifts the screen pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorCoupling {
    beta: f64,
    alpha: f64,
    visibility: f64,
}

impl DetectorCoupling {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::CouplingOutOfRange(beta));
        }
        let visibility = 1.0 - beta * beta;
        Ok(Self { beta, alpha: visibility.sqrt(), visibility })
    }

    pub fn from_visibility(visibility: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::VisibilityOutOfRange(visibility));
        }
        Ok(Self { beta: (1.0 - visibility).sqrt(), alpha: visibility.sqrt(), visibility })
    }

    /// Coupling realized by controlled `R_y(2θ)` rotations, `β = sin θ`.
    pub fn from_theta(theta: f64) -> Result<Self> {
        if !(0.0..=PI / 2.0).contains(&theta) {
            return Err(Error::AngleOutOfRange(theta));
        }
        let (beta, alpha) = theta.sin_cos();
        Ok(Self { beta, alpha, visibility: alpha * alpha })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// `θ` with `β = sin θ`.
    pub fn theta(&self) -> f64 {
        self.beta.atan2(self.alpha)
    }

    pub fn wwd_states(&self) -> WwdStatePair {
        let (a, b) = (self.alpha, self.beta);
        WwdStatePair {
            chi_a: ComplexVector::from_real(&[a, b, 0.0]).expect("dim 3"),
            chi_b: ComplexVector::from_real(&[a, 0.0, b]).expect("dim 3"),
        }
    }
}

pub fn make_coupling(beta: f64) -> Result<DetectorCoupling> {
    DetectorCoupling::new(beta)
}

/// The detector states left behind by path `a` and path `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WwdStatePair {
    pub chi_a: ComplexVector,
    pub chi_b: ComplexVector,
}

/// `(|a⟩⊗χ_a + |b⟩⊗χ_b)/√2`, stored as a 2×3 amplitude array indexed by
/// (path, WWD subspace index).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    amplitudes: [[Complex64; WWD_DIM]; 2],
    coupling: DetectorCoupling,
}

impl JointState {
    pub fn amplitudes(&self) -> &[[Complex64; WWD_DIM]; 2] {
        &self.amplitudes
    }

    pub fn coupling(&self) -> DetectorCoupling {
        self.coupling
    }

    /// The (unnormalized) detector state attached to path `a` (0) or `b` (1).
    pub fn branch(&self, path: usize) -> ComplexVector {
        ComplexVector::new(&self.amplitudes[path]).expect("dim 3")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().flatten().map(|a| a.norm_sqr()).sum()
    }
}

pub fn joint_state(c: DetectorCoupling) -> JointState {
    let pair = c.wwd_states();
    let row = |chi: &ComplexVector| std::array::from_fn(|k| chi[k] * FRAC_1_SQRT_2);
    let amplitudes = [row(&pair.chi_a), row(&pair.chi_b)];
    JointState { amplitudes, coupling: c }
}

/// Detector state after tracing out the path.
pub fn rho_wwd(s: &JointState) -> HermitianMatrix {
    HermitianMatrix::outer(&s.branch(0)) + HermitianMatrix::outer(&s.branch(1))
}

/// Path state after tracing out the detector.
pub fn rho_qo(s: &JointState) -> HermitianMatrix {
    let rows = &s.amplitudes;
    HermitianMatrix::from_fn(2, |x, y| {
        rows[x].iter().zip(rows[y].iter()).map(|(u, v)| u * v.conj()).sum()
    })
    .expect("reduced state of a pure state is Hermitian")
}

/// Screen density `P(δ) = (1 + V cos δ)/(2π)`, normalized over one period.
pub fn pattern(delta: f64, visibility: f64) -> f64 {
    (1.0 + visibility * delta.cos()) / TAU
}

/// Cumulative screen distribution `F(δ) = (δ + V sin δ)/(2π)` on `[0, 2π]`.
pub fn pattern_cdf(delta: f64, visibility: f64) -> f64 {
    (delta + visibility * delta.sin()) / TAU
}

/// Probability of projecting the path onto `|ψ_δ⟩` at a fixed phase,
/// `(1 + V cos δ)/2`.
pub fn projection_probability(delta: f64, visibility: f64) -> f64 {
    0.5 * (1.0 + visibility * delta.cos())
}

/// `⟨ψ_δ|Ψ⟩` with `|ψ_δ⟩ = (|a⟩ + e^{iδ}|b⟩)/√2`. Its squared norm is the
/// fixed-phase projection probability.
pub fn conditional_wwd_state(delta: f64, s: &JointState) -> ComplexVector {
    let phase = Complex64::from_polar(1.0, -delta);
    let mut out = ComplexVector::zeros(WWD_DIM).expect("dim 3");
    for k in 0..WWD_DIM {
        out[k] = (s.amplitudes[0][k] + phase * s.amplitudes[1][k]) * FRAC_1_SQRT_2;
    }
    out
}

/// Exchanges the roles of the two detector qubits (`|10⟩ ↔ |01⟩`), which maps
/// `χ_a ↔ χ_b`.
pub fn swap_paths(v: &ComplexVector) -> ComplexVector {
    let mut out = *v;
    out[1] = v[2];
    out[2] = v[1];
    out
}

/// Draws a screen phase from `P(δ)` by inverting the cumulative distribution.
pub fn sample_delta<R: Rng + ?Sized>(visibility: f64, rng: &mut R) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::VisibilityOutOfRange(visibility));
    }
    let u: f64 = rng.random();
    Ok(invert_cdf(u, visibility))
}

/// Safeguarded Newton iteration on the monotone `F(δ) - u`, bracketed in
/// `[0, 2π]` and converged to 1e-12 in `δ`.
fn invert_cdf(u: f64, visibility: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, TAU);
    let mut x = TAU * u;
    for _ in 0..200 {
        let f = pattern_cdf(x, visibility) - u;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = pattern(x, visibility);
        let mut next = if slope > 0.0 { x - f / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 1e-12 || hi - lo <= 1e-12 {
            break;
        }
    }
    if x >= TAU {
        TAU.next_down()
    } else {
        x.max(0.0)
    }
}
