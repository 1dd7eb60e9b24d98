//! Built-in invariant checks with a machine-readable report.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use serde::Serialize;
use whichway::circuit::{
    model_deviation, prepare, run_guessing_game, run_phase_conditioned, summarize_conditional, summarize_game, MaxZ,
    MeasurementOrder, ShotTally,
};
use whichway::feedforward::{
    delta_grid, delta_star, ff_curve, simplified_avg_closed, simplified_excess_peak, simplified_k_at, OptimizerConfig,
};
use whichway::knowledge::{
    canonical_basis, canonical_k_closed, knowledge_at, knowledge_avg, natural_basis, natural_k_at_closed,
    natural_k_closed, phase_average, phase_averaged_knowledge,
};
use whichway::linalg::{haar_random_basis, OrthonormalBasis};
use whichway::model::{projection_probability, DetectorCoupling};
use whichway::rng::task_stream;
use whichway::Complex64;

use crate::args::VerifyArgs;
use crate::error::{CliError, CliResult};
use crate::output::{to_json, write_manifest, Outputs};

const NINE_V: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Monte Carlo checks allow this many standard errors per estimate.
const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value; the check passes when it is at most `tolerance`.
    pub metric: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub mode: &'static str,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Size {
    phase_points: usize,
    duality_bases: usize,
    average_bases: usize,
    quadrature_visibilities: usize,
    ff: OptimizerConfig,
    order_shots: u64,
    circuit_shots: u64,
}

fn size(full: bool, seed: u64) -> Size {
    if full {
        Size {
            phase_points: 1000,
            duality_bases: 10_000,
            average_bases: 100,
            quadrature_visibilities: 20,
            ff: OptimizerConfig { seed, ..OptimizerConfig::default() },
            order_shots: 100_000,
            circuit_shots: 1_000_000,
        }
    } else {
        Size {
            phase_points: 100,
            duality_bases: 1_000,
            average_bases: 10,
            quadrature_visibilities: 5,
            ff: OptimizerConfig { samples_per_delta: 500, delta_points: 20, seed, ..OptimizerConfig::default() },
            order_shots: 20_000,
            circuit_shots: 50_000,
        }
    }
}

fn coupling(v: f64) -> whichway::Result<DetectorCoupling> {
    DetectorCoupling::from_visibility(v)
}

fn closed_forms() -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    for v in NINE_V {
        let c = coupling(v)?;
        let kn = knowledge_avg(&natural_basis(), c)?.knowledge;
        let ke = knowledge_avg(&canonical_basis(c)?, c)?.knowledge;
        worst = worst.max((kn - natural_k_closed(v)).abs()).max((ke - canonical_k_closed(v)).abs());
    }
    Ok(worst)
}

fn phase_closed_forms(points: usize) -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    for v in NINE_V {
        let c = coupling(v)?;
        let canonical = canonical_basis(c)?;
        for j in 0..points {
            let d = TAU * j as f64 / points as f64;
            let kn = knowledge_at(&natural_basis(), d, c)?.knowledge;
            let ke = knowledge_at(&canonical, d, c)?.knowledge;
            worst = worst.max((kn - natural_k_at_closed(d, v)?).abs()).max((ke - canonical_k_closed(v)).abs());
        }
    }
    Ok(worst)
}

/// Largest `K² + V² - 1` over random bases.
fn duality_bound(bases: usize, seed: u64) -> whichway::Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for (i, v) in NINE_V.into_iter().enumerate() {
        let c = coupling(v)?;
        let mut rng = task_stream(seed, &[1, i as u64]);
        for _ in 0..bases {
            let k = knowledge_avg(&haar_random_basis(3, &mut rng)?, c)?.knowledge;
            worst = worst.max(k * k + v * v - 1.0);
        }
    }
    Ok(worst)
}

fn phase_average_identity(bases: usize, seed: u64) -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    for (i, v) in [0.1, 0.3, 0.5, 0.7, 0.9].into_iter().enumerate() {
        let c = coupling(v)?;
        let mut rng = task_stream(seed, &[2, i as u64]);
        for _ in 0..bases {
            let b = haar_random_basis(3, &mut rng)?;
            worst = worst.max((phase_averaged_knowledge(&b, c)? - knowledge_avg(&b, c)?.knowledge).abs());
        }
    }
    Ok(worst)
}

fn simplified_quadrature(count: usize) -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 1..=count {
        let v = i as f64 / (count + 1) as f64;
        let star = delta_star(v)?;
        let quad = phase_average(|d| simplified_k_at(d, v), v, &[star, TAU - star])?;
        worst = worst.max((quad - simplified_avg_closed(v)?).abs());
    }
    Ok(worst)
}

/// Distance of the simplified excess peak from `(0.64, 1.016)`, each axis
/// scaled by its allowed half-width.
fn simplified_peak() -> whichway::Result<f64> {
    let p = simplified_excess_peak()?;
    Ok(((p.excess - 1.016).abs() / 5e-4).max((p.visibility - 0.64).abs() / 0.01))
}

fn order_invariance_analytic(seed: u64) -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    let mut rng = task_stream(seed, &[3]);
    for v in [0.2, 0.5, 0.8] {
        let c = coupling(v)?;
        let s = prepare(c.theta())?;
        for _ in 0..10 {
            let b = haar_random_basis(3, &mut rng)?;
            for d in delta_grid(13) {
                let psi = [Complex64::new(1.0, 0.0), Complex64::from_polar(1.0, d)];
                let total: f64 = b
                    .iter()
                    .map(|w| {
                        let mut a = Complex64::new(0.0, 0.0);
                        for (qo, p) in psi.iter().enumerate() {
                            for (k, wk) in w.iter().enumerate() {
                                a += p.conj() * wk.conj() * s.amplitude(qo, k);
                            }
                        }
                        a.norm_sqr() / 2.0
                    })
                    .sum();
                worst = worst.max((total - projection_probability(d, v)).abs());
            }
        }
    }
    Ok(worst)
}

fn circuit_model() -> whichway::Result<f64> {
    [0.0, PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0]
        .into_iter()
        .try_fold(0.0_f64, |m, t| Ok(m.max(model_deviation(t)?)))
}

/// Largest shortfall of the optimized curve below the better fixed protocol.
fn ff_dominance(cfg: &OptimizerConfig) -> whichway::Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for v in [0.5, 0.9] {
        let curve = ff_curve(v, cfg)?;
        let ke = canonical_k_closed(v);
        for (&d, &k) in curve.deltas.iter().zip(&curve.values) {
            let reference = natural_k_at_closed(d, v).map_or(ke, |kn| kn.max(ke));
            worst = worst.max(reference - k);
        }
    }
    Ok(worst)
}

fn cell_z(a: u64, b: u64, shots: u64) -> f64 {
    let n = shots as f64;
    let p = (a + b) as f64 / (2.0 * n);
    let var = 2.0 * p * (1.0 - p) / n;
    if var <= 0.0 {
        return if a == b { 0.0 } else { f64::INFINITY };
    }
    (a as f64 - b as f64) / n / var.sqrt()
}

/// Largest |z| between joint (port, outcome) frequencies of both orders.
fn order_invariance_montecarlo(shots: u64, seed: u64) -> whichway::Result<f64> {
    let c = coupling(0.6)?;
    let mut worst: f64 = 0.0;
    for (bi, basis) in [natural_basis(), canonical_basis(c)?].iter().enumerate() {
        let path = |o: u64| [4, bi as u64, o];
        let a = run_phase_conditioned(c.theta(), basis, PI / 2.0, shots, MeasurementOrder::QoFirst, &mut task_stream(seed, &path(0)))?;
        let b = run_phase_conditioned(c.theta(), basis, PI / 2.0, shots, MeasurementOrder::WwdFirst, &mut task_stream(seed, &path(1)))?;
        for port in 0..2 {
            for outcome in 0..4 {
                let cell = |t: &ShotTally| t.count_where(|k| k.observed == port && k.outcome == outcome);
                worst = worst.max(cell_z(cell(&a), cell(&b), shots).abs());
            }
        }
    }
    Ok(worst)
}

fn circuit_cross_validation(shots: u64, seed: u64) -> whichway::Result<f64> {
    let mut worst: f64 = 0.0;
    for (vi, v) in [0.5, 0.9].into_iter().enumerate() {
        let c = coupling(v)?;
        let bases: [OrthonormalBasis; 2] = [natural_basis(), canonical_basis(c)?];
        for (bi, basis) in bases.iter().enumerate() {
            let path = |k: u64| [5, vi as u64, bi as u64, k];
            let game = run_guessing_game(c.theta(), basis, shots, &mut task_stream(seed, &path(0)))?;
            worst = worst.max(summarize_game(&game, basis, c)?.max_abs_z());
            let run = run_phase_conditioned(c.theta(), basis, PI / 2.0, shots, MeasurementOrder::QoFirst, &mut task_stream(seed, &path(1)))?;
            worst = worst.max(summarize_conditional(&run, &game, basis, PI / 2.0, c)?.max_abs_z());
        }
    }
    Ok(worst)
}

pub fn run_checks(full: bool, seed: u64, scale: f64) -> whichway::Result<Vec<Check>> {
    let s = size(full, seed);
    let check = |name, metric: f64, tolerance: f64| {
        let tolerance = tolerance * scale;
        Check { name, passed: metric <= tolerance, metric, tolerance }
    };
    Ok(vec![
        check("closed_forms", closed_forms()?, 1e-10),
        check("phase_closed_forms", phase_closed_forms(s.phase_points)?, 1e-9),
        check("duality_bound", duality_bound(s.duality_bases, seed)?, 1e-9),
        check("phase_average_identity", phase_average_identity(s.average_bases, seed)?, 1e-7),
        check("simplified_quadrature", simplified_quadrature(s.quadrature_visibilities)?, 1e-8),
        check("simplified_peak", simplified_peak()?, 1.0),
        check("order_invariance_analytic", order_invariance_analytic(seed)?, 1e-12),
        check("circuit_model_equivalence", circuit_model()?, 1e-12),
        check("ff_dominance", ff_dominance(&s.ff)?, 1e-9),
        check("order_invariance_montecarlo", order_invariance_montecarlo(s.order_shots, seed)?, Z_LIMIT),
        check("circuit_cross_validation", circuit_cross_validation(s.circuit_shots, seed)?, Z_LIMIT),
    ])
}

pub fn verify(args: &VerifyArgs) -> CliResult<()> {
    let start = Instant::now();
    let seed = args.seed.seed;
    let checks = run_checks(args.full, seed, args.tolerance_scale)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    let report = VerifyReport {
        mode: if args.full { "full" } else { "quick" },
        seed,
        tolerance_scale: args.tolerance_scale,
        passed: failed == 0,
        checks,
    };
    let json = to_json(&report);
    print!("{json}");
    if let Some(out) = &args.out {
        let mut outputs = Outputs::default();
        outputs.write(out, &json)?;
        write_manifest(out, "verify", args, seed, start.elapsed(), outputs)?;
    }
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} (metric {:e}, tolerance {:e})", c.name, c.metric, c.tolerance);
    }
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}
