//! Three-qubit statevector simulator of the interferometer circuit.
//!
//! Qubit 0 is the path of the quantum object (`|0⟩ ≡ a`, `|1⟩ ≡ b`), qubits 1
//! and 2 are the detector qubits of path `a` and `b`. Qubit 0 is the most
//! significant bit of the amplitude index, so `|q0 q1 q2⟩` lives at
//! `4·q0 + 2·q1 + q2`.
//!
//! The detector subsystem uses the same local order as the analytic model,
//! `(|00⟩, |10⟩, |01⟩)` written as `|q1 q2⟩`, followed by `|11⟩` as local
//! index 3. A readout basis of the three-dimensional subspace is completed by
//! `|11⟩` as an extra outcome that never fires.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feedforward::KnowledgeCurve;
use crate::knowledge::{guess_quality, Path};
use crate::linalg::OrthonormalBasis;
use crate::model::{joint_state, projection_probability, sample_delta, DetectorCoupling, WWD_DIM};
use crate::rng::task_stream;

pub const QO: usize = 0;
pub const WWD_A: usize = 1;
pub const WWD_B: usize = 2;
pub const NUM_QUBITS: usize = 3;
const STATE_DIM: usize = 1 << NUM_QUBITS;

/// Conditional sample counts below this starve the estimators.
pub const MIN_CONDITIONAL_SHOTS: u64 = 100;

/// Fixed-phase projection probabilities below this need too many shots.
pub const MIN_PORT_PROBABILITY: f64 = 1e-6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Hadamard(usize),
    PauliX(usize),
    /// `R_y(angle)` on `target` when `control` is `|1⟩`.
    ControlledRy { control: usize, target: usize, angle: f64 },
    /// `diag(1, e^{iφ})`.
    Phase(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Qo,
    Wwd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasurementOrder {
    QoFirst,
    WwdFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitState {
    amplitudes: [Complex64; STATE_DIM],
    record: Vec<(String, usize)>,
}

impl Default for CircuitState {
    fn default() -> Self {
        Self::new()
    }
}

fn mask(q: usize) -> Result<usize> {
    if q < NUM_QUBITS {
        Ok(1 << (NUM_QUBITS - 1 - q))
    } else {
        Err(Error::InvalidQubit(q))
    }
}

/// Local detector index of `|q1 q2⟩`.
fn wwd_local(index: usize) -> usize {
    match index & 0b11 {
        0b00 => 0,
        0b10 => 1,
        0b01 => 2,
        _ => 3,
    }
}

impl CircuitState {
    /// `|000⟩`.
    pub fn new() -> Self {
        let mut amplitudes = [ZERO; STATE_DIM];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { amplitudes, record: Vec::new() }
    }

    pub fn from_amplitudes(amplitudes: [Complex64; STATE_DIM]) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::ZeroNorm(n));
        }
        Ok(Self { amplitudes, record: Vec::new() })
    }

    pub fn amplitudes(&self) -> &[Complex64; STATE_DIM] {
        &self.amplitudes
    }

    pub fn amplitude(&self, qo: usize, wwd_local_index: usize) -> Complex64 {
        let low = [0b00, 0b10, 0b01, 0b11][wwd_local_index];
        self.amplitudes[(qo << 2) | low]
    }

    /// Classical record of `(label, outcome)` in measurement order.
    pub fn record(&self) -> &[(String, usize)] {
        &self.record
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Weight on the detector state `|11⟩`, which the interaction never
    /// populates.
    pub fn wwd_leakage(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & 0b11 == 0b11)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn apply(&mut self, gate: Gate) -> Result<()> {
        match gate {
            Gate::Hadamard(q) => {
                let m = mask(q)?;
                for i in (0..STATE_DIM).filter(|i| i & m == 0) {
                    let (a, b) = (self.amplitudes[i], self.amplitudes[i | m]);
                    self.amplitudes[i] = (a + b) * FRAC_1_SQRT_2;
                    self.amplitudes[i | m] = (a - b) * FRAC_1_SQRT_2;
                }
            }
            Gate::PauliX(q) => {
                let m = mask(q)?;
                for i in (0..STATE_DIM).filter(|i| i & m == 0) {
                    self.amplitudes.swap(i, i | m);
                }
            }
            Gate::ControlledRy { control, target, angle } => {
                let (mc, mt) = (mask(control)?, mask(target)?);
                if mc == mt {
                    return Err(Error::InvalidQubit(target));
                }
                let (s, c) = (angle / 2.0).sin_cos();
                for i in (0..STATE_DIM).filter(|i| i & mc != 0 && i & mt == 0) {
                    let (a, b) = (self.amplitudes[i], self.amplitudes[i | mt]);
                    self.amplitudes[i] = a * c - b * s;
                    self.amplitudes[i | mt] = a * s + b * c;
                }
            }
            Gate::Phase(q, phi) => {
                let m = mask(q)?;
                let p = Complex64::from_polar(1.0, phi);
                for i in (0..STATE_DIM).filter(|i| i & m != 0) {
                    self.amplitudes[i] *= p;
                }
            }
        }
        Ok(())
    }

    /// Projective measurement of `subsystem` in `basis`, recording the
    /// outcome under `label` and collapsing the state.
    ///
    /// The path takes a 2-dimensional basis. The detector takes a basis of
    /// the 3-dimensional subspace (completed by `|11⟩` as outcome 3) or of
    /// the full 4-dimensional space.
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        subsystem: Subsystem,
        basis: &OrthonormalBasis,
        label: &str,
        rng: &mut R,
    ) -> Result<usize> {
        let (local_dim, env_dim) = match subsystem {
            Subsystem::Qo => (2, 4),
            Subsystem::Wwd => (4, 2),
        };
        let split = |i: usize| match subsystem {
            Subsystem::Qo => (i >> 2, i & 0b11),
            Subsystem::Wwd => (wwd_local(i), i >> 2),
        };
        let vectors = local_vectors(subsystem, basis)?;

        // amps[env][local]
        let mut amps = [[ZERO; 4]; 4];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let (local, env) = split(i);
            amps[env][local] = *a;
        }
        let mut projected = [[ZERO; 4]; 4]; // [outcome][env]
        let mut probs = [0.0; 4];
        for (k, w) in vectors.iter().enumerate() {
            for env in 0..env_dim {
                let a: Complex64 = (0..local_dim).map(|l| w[l].conj() * amps[env][l]).sum();
                projected[k][env] = a;
                probs[k] += a.norm_sqr();
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::ProbabilityLeak(total));
        }

        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = None;
        for (k, &p) in probs.iter().enumerate().take(vectors.len()) {
            acc += p;
            if p > 0.0 && u < acc {
                outcome = Some(k);
                break;
            }
        }
        // Rounding can leave u just above the last partial sum.
        let outcome = outcome
            .or_else(|| probs.iter().rposition(|&p| p > 0.0))
            .ok_or(Error::ProbabilityLeak(total))?;

        let scale = 1.0 / probs[outcome].sqrt();
        let w = &vectors[outcome];
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            let (local, env) = split(i);
            *a = projected[outcome][env] * w[local] * scale;
        }
        self.record.push((label.to_string(), outcome));
        Ok(outcome)
    }
}

/// Basis vectors expressed in the subsystem's local coordinates.
fn local_vectors(subsystem: Subsystem, basis: &OrthonormalBasis) -> Result<Vec<[Complex64; 4]>> {
    let mut out = Vec::with_capacity(4);
    let expected = match (subsystem, basis.dim()) {
        (Subsystem::Qo, 2) | (Subsystem::Wwd, 3) | (Subsystem::Wwd, 4) => basis.dim(),
        (Subsystem::Qo, d) => return Err(Error::DimensionMismatch { left: d, right: 2 }),
        (Subsystem::Wwd, d) => return Err(Error::DimensionMismatch { left: d, right: WWD_DIM }),
    };
    for v in basis.iter() {
        let mut w = [ZERO; 4];
        w[..expected].copy_from_slice(v.as_slice());
        out.push(w);
    }
    if subsystem == Subsystem::Wwd && expected == WWD_DIM {
        let mut w = [ZERO; 4];
        w[3] = Complex64::new(1.0, 0.0);
        out.push(w);
    }
    Ok(out)
}

pub fn apply_gate(mut state: CircuitState, gate: Gate) -> Result<CircuitState> {
    state.apply(gate)?;
    Ok(state)
}

/// Functional form of [`CircuitState::measure`].
pub fn measure<R: Rng + ?Sized>(
    state: &CircuitState,
    subsystem: Subsystem,
    basis: &OrthonormalBasis,
    rng: &mut R,
) -> Result<(usize, CircuitState)> {
    let mut s = state.clone();
    let label = match subsystem {
        Subsystem::Qo => "qo",
        Subsystem::Wwd => "wwd",
    };
    let k = s.measure(subsystem, basis, label, rng)?;
    Ok((k, s))
}

fn computational_basis() -> OrthonormalBasis {
    OrthonormalBasis::standard(2).expect("dim 2")
}

/// Slit passage and detector interaction, with an optional phase on path `b`
/// before the interaction:
/// `H(0)`, `Phase(0, φ)`, `X(0)`, `CRy(0→1, 2θ)`, `X(0)`, `CRy(0→2, 2θ)`.
pub fn prepare_with_phase(theta: f64, pre_phase: f64) -> Result<CircuitState> {
    let mut s = CircuitState::new();
    let angle = 2.0 * theta;
    s.apply(Gate::Hadamard(QO))?;
    if pre_phase != 0.0 {
        s.apply(Gate::Phase(QO, pre_phase))?;
    }
    s.apply(Gate::PauliX(QO))?;
    s.apply(Gate::ControlledRy { control: QO, target: WWD_A, angle })?;
    s.apply(Gate::PauliX(QO))?;
    s.apply(Gate::ControlledRy { control: QO, target: WWD_B, angle })?;
    let leak = s.wwd_leakage();
    if leak > 1e-12 {
        return Err(Error::ProbabilityLeak(1.0 - leak));
    }
    Ok(s)
}

pub fn prepare(theta: f64) -> Result<CircuitState> {
    prepare_with_phase(theta, 0.0)
}

/// Largest amplitude deviation between the prepared circuit state and the
/// analytic joint state.
pub fn model_deviation(theta: f64) -> Result<f64> {
    let s = prepare(theta)?;
    let j = joint_state(DetectorCoupling::from_theta(theta)?);
    let mut dev = s.wwd_leakage().sqrt();
    for qo in 0..2 {
        for k in 0..WWD_DIM {
            dev = dev.max((s.amplitude(qo, k) - j.amplitudes()[qo][k]).norm());
        }
    }
    Ok(dev)
}

/// Makes the fixed-phase projection onto `|ψ_δ⟩ = (|a⟩ + e^{iδ}|b⟩)/√2` a
/// computational measurement of the path: port 0 is the `ψ_δ` port.
fn screen_projection(s: &mut CircuitState, delta: f64) -> Result<()> {
    s.apply(Gate::Phase(QO, -delta))?;
    s.apply(Gate::Hadamard(QO))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TallyKey {
    /// Detector outcome index (3 is `|11⟩` for subspace bases).
    pub outcome: usize,
    pub guess: Path,
    /// Path (guessing game), port (phase-conditioned runs) or grid index
    /// (feed-forward demo).
    pub observed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShotTally {
    pub counts: BTreeMap<TallyKey, u64>,
    pub total: u64,
}

impl ShotTally {
    pub fn add(&mut self, key: TallyKey) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &ShotTally) {
        for (k, n) in &other.counts {
            *self.counts.entry(*k).or_insert(0) += n;
        }
        self.total += other.total;
    }

    pub fn count_where(&self, f: impl Fn(&TallyKey) -> bool) -> u64 {
        self.counts.iter().filter(|(k, _)| f(k)).map(|(_, n)| n).sum()
    }

    pub fn outcome_count(&self, outcome: usize) -> u64 {
        self.count_where(|k| k.outcome == outcome)
    }

    pub fn observed_count(&self, observed: usize) -> u64 {
        self.count_where(|k| k.observed == observed)
    }

    /// Shots whose announced path matched the measured path.
    pub fn correct_count(&self) -> u64 {
        self.count_where(is_correct)
    }

    pub fn correct_in_outcome(&self, outcome: usize) -> u64 {
        self.count_where(|k| k.outcome == outcome && is_correct(k))
    }

    /// Detector outcome counts among shots with the given observed value.
    pub fn conditional_counts(&self, observed: usize, outcomes: usize) -> Vec<u64> {
        (0..outcomes)
            .map(|i| self.count_where(|k| k.observed == observed && k.outcome == i))
            .collect()
    }

    pub fn is_starved(&self, observed: usize) -> bool {
        self.observed_count(observed) < MIN_CONDITIONAL_SHOTS
    }
}

fn is_correct(k: &TallyKey) -> bool {
    matches!((k.guess, k.observed), (Path::A, 0) | (Path::B, 1))
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        Err(Error::InvalidConfig("shots must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Analytic best guess for every outcome of `basis` (plus `|11⟩` for
/// subspace bases).
fn guesses(basis: &OrthonormalBasis, c: DetectorCoupling) -> Vec<(f64, Path)> {
    let pair = c.wwd_states();
    let mut g: Vec<_> = basis.iter().map(|w| guess_quality(w, &pair)).collect();
    if basis.dim() == WWD_DIM {
        g.push((0.5, Path::Tie));
    }
    g
}

/// Path-guessing game: read out the detector, announce the likelier path,
/// then measure the path. Ties are broken by a fair coin.
pub fn run_guessing_game<R: Rng + ?Sized>(
    theta: f64,
    basis: &OrthonormalBasis,
    shots: u64,
    rng: &mut R,
) -> Result<ShotTally> {
    run_guessing_game_phased(theta, basis, 0.0, shots, rng)
}

/// [`run_guessing_game`] with a phase applied to the path before the
/// detector interaction.
pub fn run_guessing_game_phased<R: Rng + ?Sized>(
    theta: f64,
    basis: &OrthonormalBasis,
    pre_phase: f64,
    shots: u64,
    rng: &mut R,
) -> Result<ShotTally> {
    check_shots(shots)?;
    let c = DetectorCoupling::from_theta(theta)?;
    let guess = guesses(basis, c);
    let prepared = prepare_with_phase(theta, pre_phase)?;
    let path_basis = computational_basis();
    let mut tally = ShotTally::default();
    for _ in 0..shots {
        let mut s = prepared.clone();
        let outcome = s.measure(Subsystem::Wwd, basis, "wwd", rng)?;
        let announced = match guess[outcome].1 {
            Path::Tie => {
                if rng.random::<bool>() {
                    Path::A
                } else {
                    Path::B
                }
            }
            p => p,
        };
        let path = s.measure(Subsystem::Qo, &path_basis, "path", rng)?;
        tally.add(TallyKey { outcome, guess: announced, observed: path });
    }
    Ok(tally)
}

/// Fixed-phase run: project the path onto the `ψ_δ` port and read out the
/// detector, in either order. `observed` is the port (0 for `ψ_δ`).
pub fn run_phase_conditioned<R: Rng + ?Sized>(
    theta: f64,
    basis: &OrthonormalBasis,
    delta: f64,
    shots: u64,
    order: MeasurementOrder,
    rng: &mut R,
) -> Result<ShotTally> {
    check_shots(shots)?;
    let c = DetectorCoupling::from_theta(theta)?;
    let port_probability = projection_probability(delta, c.visibility());
    if port_probability <= MIN_PORT_PROBABILITY {
        return Err(Error::DarkFringe { delta, probability: port_probability });
    }
    let guess = guesses(basis, c);
    let prepared = prepare(theta)?;
    let path_basis = computational_basis();
    let mut tally = ShotTally::default();
    for _ in 0..shots {
        let mut s = prepared.clone();
        let (port, outcome) = match order {
            MeasurementOrder::QoFirst => {
                screen_projection(&mut s, delta)?;
                let port = s.measure(Subsystem::Qo, &path_basis, "port", rng)?;
                (port, s.measure(Subsystem::Wwd, basis, "wwd", rng)?)
            }
            MeasurementOrder::WwdFirst => {
                let outcome = s.measure(Subsystem::Wwd, basis, "wwd", rng)?;
                screen_projection(&mut s, delta)?;
                (s.measure(Subsystem::Qo, &path_basis, "port", rng)?, outcome)
            }
        };
        tally.add(TallyKey { outcome, guess: guess[outcome].1, observed: port });
    }
    Ok(tally)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardRun {
    /// `observed` holds the grid index whose basis was used.
    pub tally: ShotTally,
    /// Estimate of the phase-averaged feed-forward knowledge.
    pub knowledge: Estimate,
}

/// Feed-forward experiment: draw a screen phase from `P(δ)`, repeat the
/// fixed-phase projection until the `ψ_δ` port clicks, then read out the
/// detector in the curve's basis at the nearest grid phase.
///
/// Each shot scores `2 q_i - 1` with the analytic guess quality of the
/// observed outcome; the mean estimates `K̄_FF`.
pub fn run_feedforward_demo<R: Rng + ?Sized>(
    theta: f64,
    curve: &KnowledgeCurve,
    shots: u64,
    rng: &mut R,
) -> Result<FeedForwardRun> {
    check_shots(shots)?;
    let c = DetectorCoupling::from_theta(theta)?;
    if (c.visibility() - curve.visibility).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "curve visibility {} does not match circuit visibility {}",
            curve.visibility,
            c.visibility()
        )));
    }
    let bases = curve
        .bases
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("curve carries no bases".into()))?;
    let qualities: Vec<Vec<(f64, Path)>> = bases.iter().map(|b| guesses(b, c)).collect();
    let prepared = prepare(theta)?;
    let path_basis = computational_basis();

    const MAX_RETRIES: u64 = 1_000_000;
    let mut tally = ShotTally::default();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..shots {
        let delta = sample_delta(c.visibility(), rng)?;
        let mut attempts = 0;
        let mut s = loop {
            let mut s = prepared.clone();
            screen_projection(&mut s, delta)?;
            if s.measure(Subsystem::Qo, &path_basis, "port", rng)? == 0 {
                break s;
            }
            attempts += 1;
            if attempts >= MAX_RETRIES {
                return Err(Error::ShotStarvation { observed: 0, required: 1 });
            }
        };
        let j = curve.nearest_index(delta);
        let outcome = s.measure(Subsystem::Wwd, &bases[j], "wwd", rng)?;
        let (q, guess) = qualities[j][outcome];
        tally.add(TallyKey { outcome, guess, observed: j });
        let score = 2.0 * q - 1.0;
        sum += score;
        sum_sq += score * score;
    }
    let n = shots as f64;
    let mean = sum / n;
    let var = if shots > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(FeedForwardRun { tally, knowledge: Estimate { value: mean, std_error: (var / n).sqrt() } })
}

/// Splits `shots` into `batches` independent runs, each with a stream
/// derived from `(seed, batch index)`, and merges the tallies.
pub fn run_batched(
    shots: u64,
    batches: u64,
    seed: u64,
    run: impl Fn(u64, &mut crate::rng::Stream) -> Result<ShotTally> + Sync + Send,
) -> Result<ShotTally> {
    let batches = batches.clamp(1, shots.max(1));
    let per = shots / batches;
    let extra = shots % batches;
    let task = |b: u64| {
        let n = per + u64::from(b < extra);
        let mut rng = task_stream(seed, &[b]);
        run(n, &mut rng)
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<Result<ShotTally>> = {
        use rayon::prelude::*;
        (0..batches).into_par_iter().map(task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Result<ShotTally>> = (0..batches).map(task).collect();
    let mut tally = ShotTally::default();
    for p in parts {
        tally.merge(&p?);
    }
    Ok(tally)
}

/// `(p̂ - p) / √(p(1-p)/n)`; zero-variance cases give 0 on exact agreement
/// and infinity otherwise.
pub fn binomial_z(successes: u64, trials: u64, p: f64) -> f64 {
    if trials == 0 {
        return f64::INFINITY;
    }
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let var = p * (1.0 - p) / n;
    if var <= 0.0 {
        if (p_hat - p).abs() < 1e-15 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p_hat - p) / var.sqrt()
    }
}

/// Empirical value next to its analytic expectation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub observed: f64,
    pub expected: f64,
    pub std_error: f64,
    /// Non-finite when the expectation has zero variance and is missed.
    pub z: f64,
}

impl Comparison {
    pub fn new(observed: f64, expected: f64, std_error: f64) -> Self {
        let diff = observed - expected;
        let z = if std_error > 0.0 {
            diff / std_error
        } else if diff.abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        Self { observed, expected, std_error, z }
    }

    /// Binomial proportion with the standard error of the expectation.
    pub fn proportion(successes: u64, trials: u64, p: f64) -> Self {
        let n = trials.max(1) as f64;
        Self::new(successes as f64 / n, p, (p * (1.0 - p) / n).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeCheck {
    pub index: usize,
    pub probability: Comparison,
    /// Absent when the outcome never fired.
    pub guess_quality: Option<Comparison>,
}

/// Guessing-game estimates of `p_i`, `q_i` and `K_W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameSummary {
    pub shots: u64,
    pub outcomes: Vec<OutcomeCheck>,
    pub knowledge: Comparison,
}

/// Fixed-phase estimates of the port probability, `p_i(δ)` and `K_W(δ)`.
///
/// `K_W(δ)` combines `p_i(δ)` from the fixed-phase run with `q_i` from an
/// independent guessing game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalSummary {
    pub delta: f64,
    pub port_shots: u64,
    pub port: Comparison,
    pub outcomes: Vec<Comparison>,
    pub knowledge: Comparison,
}

pub trait MaxZ {
    fn max_abs_z(&self) -> f64;
}

impl MaxZ for GameSummary {
    fn max_abs_z(&self) -> f64 {
        self.outcomes
            .iter()
            .flat_map(|o| std::iter::once(o.probability.z).chain(o.guess_quality.map(|q| q.z)))
            .chain(std::iter::once(self.knowledge.z))
            .fold(0.0, |m, z| m.max(z.abs()))
    }
}

impl MaxZ for ConditionalSummary {
    fn max_abs_z(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.z)
            .chain([self.port.z, self.knowledge.z])
            .fold(0.0, |m, z| m.max(z.abs()))
    }
}

pub fn summarize_game(game: &ShotTally, basis: &OrthonormalBasis, c: DetectorCoupling) -> Result<GameSummary> {
    let expected = crate::knowledge::readout_probs(basis, c)?;
    let outcomes = expected
        .iter()
        .map(|o| {
            let n_i = game.outcome_count(o.index);
            OutcomeCheck {
                index: o.index,
                probability: Comparison::proportion(n_i, game.total, o.probability),
                guess_quality: (n_i > 0)
                    .then(|| Comparison::proportion(game.correct_in_outcome(o.index), n_i, o.guess_quality)),
            }
        })
        .collect();
    let k = crate::knowledge::knowledge_avg(basis, c)?.knowledge;
    let likelihood = Comparison::proportion(game.correct_count(), game.total, (1.0 + k) / 2.0);
    let knowledge = Comparison::new(2.0 * likelihood.observed - 1.0, k, 2.0 * likelihood.std_error);
    Ok(GameSummary { shots: game.total, outcomes, knowledge })
}

/// Fails with [`Error::ShotStarvation`] when fewer than
/// [`MIN_CONDITIONAL_SHOTS`] shots reached the `ψ_δ` port.
pub fn summarize_conditional(
    run: &ShotTally,
    game: &ShotTally,
    basis: &OrthonormalBasis,
    delta: f64,
    c: DetectorCoupling,
) -> Result<ConditionalSummary> {
    let port_shots = run.observed_count(0);
    if port_shots < MIN_CONDITIONAL_SHOTS {
        return Err(Error::ShotStarvation { observed: port_shots, required: MIN_CONDITIONAL_SHOTS });
    }
    let expected = crate::knowledge::conditional_probs(basis, delta, c)?;
    let counts = run.conditional_counts(0, expected.len());
    let outcomes = expected
        .iter()
        .zip(&counts)
        .map(|(o, &n)| Comparison::proportion(n, port_shots, o.probability))
        .collect();

    let n_port = port_shots as f64;
    let mut k_hat = 0.0;
    let (mut mean, mut second, mut q_var) = (0.0, 0.0, 0.0);
    for (o, &n) in expected.iter().zip(&counts) {
        let n_i = game.outcome_count(o.index);
        let q_hat = if n_i > 0 { game.correct_in_outcome(o.index) as f64 / n_i as f64 } else { o.guess_quality };
        k_hat += n as f64 / n_port * q_hat;
        mean += o.probability * o.guess_quality;
        second += o.probability * o.guess_quality.powi(2);
        if n_i > 0 {
            q_var += o.probability.powi(2) * o.guess_quality * (1.0 - o.guess_quality) / n_i as f64;
        }
    }
    let var = (second - mean * mean).max(0.0) / n_port + q_var;
    let knowledge = Comparison::new(2.0 * k_hat - 1.0, 2.0 * mean - 1.0, 2.0 * var.sqrt());
    let port = Comparison::proportion(port_shots, run.total, projection_probability(delta, c.visibility()));
    Ok(ConditionalSummary { delta, port_shots, port, outcomes, knowledge })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{canonical_basis, knowledge_avg, natural_basis, readout_probs};
    use crate::rng::stream;
    use std::f64::consts::PI;

    const THETAS: [f64; 5] = [0.0, PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0];

    #[test]
    fn hadamard_on_zero() {
        let s = apply_gate(CircuitState::new(), Gate::Hadamard(QO)).unwrap();
        assert!((s.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitudes()[4].re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn controlled_rotation_realizes_coupling() {
        let theta = 0.4;
        let mut s = CircuitState::new();
        s.apply(Gate::PauliX(QO)).unwrap();
        s.apply(Gate::ControlledRy { control: QO, target: WWD_A, angle: 2.0 * theta }).unwrap();
        let c = DetectorCoupling::from_theta(theta).unwrap();
        assert!((s.amplitude(1, 0).re - c.alpha()).abs() < 1e-15);
        assert!((s.amplitude(1, 1).re - c.beta()).abs() < 1e-15);
    }

    #[test]
    fn gates_preserve_norm() {
        let mut s = CircuitState::new();
        let gates = [
            Gate::Hadamard(0),
            Gate::Hadamard(2),
            Gate::ControlledRy { control: 0, target: 1, angle: 1.1 },
            Gate::Phase(2, 0.7),
            Gate::PauliX(1),
            Gate::ControlledRy { control: 2, target: 0, angle: -0.3 },
            Gate::Hadamard(1),
        ];
        for g in gates {
            s.apply(g).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn invalid_qubits() {
        let mut s = CircuitState::new();
        assert_eq!(s.apply(Gate::Hadamard(3)), Err(Error::InvalidQubit(3)));
        assert!(s.apply(Gate::ControlledRy { control: 1, target: 1, angle: 0.1 }).is_err());
    }

    #[test]
    fn circuit_matches_joint_state() {
        for theta in THETAS {
            assert!(model_deviation(theta).unwrap() <= 1e-12, "theta {theta}");
        }
    }

    #[test]
    fn deterministic_measurement() {
        let mut rng = stream(0);
        let (k, s) = measure(&CircuitState::new(), Subsystem::Qo, &computational_basis(), &mut rng).unwrap();
        assert_eq!(k, 0);
        assert_eq!(s.record(), &[("qo".to_string(), 0)]);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_measurement_statistics() {
        let plus = apply_gate(CircuitState::new(), Gate::Hadamard(QO)).unwrap();
        let mut rng = stream(1);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| measure(&plus, Subsystem::Qo, &computational_basis(), &mut rng).unwrap().0 == 1)
            .count() as u64;
        assert!(binomial_z(ones, n, 0.5).abs() < 3.0);
    }

    #[test]
    fn collapse_is_normalized_and_consistent() {
        let s = prepare(0.5).unwrap();
        let mut rng = stream(9);
        for _ in 0..50 {
            let (k, after) = measure(&s, Subsystem::Wwd, &natural_basis(), &mut rng).unwrap();
            assert!((after.norm_sqr() - 1.0).abs() < 1e-12);
            // Repeating the measurement gives the same outcome.
            let (k2, _) = measure(&after, Subsystem::Wwd, &natural_basis(), &mut rng).unwrap();
            assert_eq!(k, k2);
            assert_ne!(k, 3);
        }
    }

    #[test]
    fn wrong_basis_dimension() {
        let s = prepare(0.5).unwrap();
        let b = OrthonormalBasis::standard(3).unwrap();
        assert!(measure(&s, Subsystem::Qo, &b, &mut stream(0)).is_err());
        let b = OrthonormalBasis::standard(2).unwrap();
        assert!(measure(&s, Subsystem::Wwd, &b, &mut stream(0)).is_err());
    }

    #[test]
    fn wwd_frequencies_match_readout_probabilities() {
        let theta = PI / 4.0;
        let c = DetectorCoupling::from_theta(theta).unwrap();
        let basis = crate::linalg::haar_random_basis(3, &mut stream(12)).unwrap();
        let expect = readout_probs(&basis, c).unwrap();
        let t = run_guessing_game(theta, &basis, 100_000, &mut stream(13)).unwrap();
        for o in &expect {
            assert!(binomial_z(t.outcome_count(o.index), t.total, o.probability).abs() < 4.0);
        }
        assert_eq!(t.outcome_count(3), 0);
    }

    #[test]
    fn perfect_detector_always_guesses_right() {
        let t = run_guessing_game(PI / 2.0, &natural_basis(), 10_000, &mut stream(2)).unwrap();
        assert_eq!(t.correct_count(), t.total);
    }

    #[test]
    fn no_detector_means_coin_flips() {
        let t = run_guessing_game(0.0, &natural_basis(), 100_000, &mut stream(3)).unwrap();
        assert!(binomial_z(t.correct_count(), t.total, 0.5).abs() < 4.0);
    }

    #[test]
    fn guessing_game_estimates_knowledge() {
        let theta = PI / 4.0;
        let c = DetectorCoupling::from_theta(theta).unwrap();
        for basis in [natural_basis(), canonical_basis(c).unwrap()] {
            let k = knowledge_avg(&basis, c).unwrap().knowledge;
            let t = run_guessing_game(theta, &basis, 200_000, &mut stream(5)).unwrap();
            assert!(binomial_z(t.correct_count(), t.total, (1.0 + k) / 2.0).abs() < 4.0);
        }
    }

    #[test]
    fn bright_port_at_zero_phase_without_detector() {
        let t = run_phase_conditioned(0.0, &natural_basis(), 0.0, 1000, MeasurementOrder::QoFirst, &mut stream(4))
            .unwrap();
        assert_eq!(t.observed_count(0), 1000);
        let t = run_phase_conditioned(0.0, &natural_basis(), 0.0, 1000, MeasurementOrder::WwdFirst, &mut stream(4))
            .unwrap();
        assert_eq!(t.observed_count(0), 1000);
    }

    #[test]
    fn dark_port_is_rejected() {
        let r = run_phase_conditioned(0.0, &natural_basis(), PI, 10, MeasurementOrder::QoFirst, &mut stream(0));
        assert!(matches!(r, Err(Error::DarkFringe { .. })));
    }

    #[test]
    fn tallies_merge_and_batches_are_reproducible() {
        let basis = natural_basis();
        let run = |n: u64, rng: &mut crate::rng::Stream| run_guessing_game(0.6, &basis, n, rng);
        let a = run_batched(10_001, 4, 77, run).unwrap();
        let b = run_batched(10_001, 4, 77, run).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total, 10_001);
        assert_eq!(a.counts.values().sum::<u64>(), a.total);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(binomial_z(10, 10, 1.0), 0.0);
        assert_eq!(binomial_z(9, 10, 1.0), f64::INFINITY);
        assert!((binomial_z(60, 100, 0.5) - 2.0).abs() < 1e-12);
    }
    #[test]
    fn summaries_agree_with_analytics() {
        let c = DetectorCoupling::from_visibility(0.5).unwrap();
        let basis = canonical_basis(c).unwrap();
        let game = run_guessing_game(c.theta(), &basis, 200_000, &mut stream(20)).unwrap();
        let g = summarize_game(&game, &basis, c).unwrap();
        assert!(g.max_abs_z() < 4.0, "{g:?}");
        assert!((g.knowledge.expected - 0.75f64.sqrt()).abs() < 1e-12);
        let run = run_phase_conditioned(c.theta(), &basis, 1.0, 200_000, MeasurementOrder::QoFirst, &mut stream(21))
            .unwrap();
        let s = summarize_conditional(&run, &game, &basis, 1.0, c).unwrap();
        assert!(s.max_abs_z() < 4.0, "{s:?}");
    }

    #[test]
    fn starved_conditional_summary() {
        let c = DetectorCoupling::from_visibility(0.5).unwrap();
        let b = natural_basis();
        let game = run_guessing_game(c.theta(), &b, 50, &mut stream(0)).unwrap();
        let run = run_phase_conditioned(c.theta(), &b, 0.0, 50, MeasurementOrder::QoFirst, &mut stream(1)).unwrap();
        assert!(matches!(
            summarize_conditional(&run, &game, &b, 0.0, c),
            Err(Error::ShotStarvation { required: MIN_CONDITIONAL_SHOTS, .. })
        ));
    }
}
