use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use whichway::circuit::{
    run_guessing_game, run_phase_conditioned, summarize_conditional, summarize_game, ConditionalSummary,
    GameSummary, MaxZ, MeasurementOrder, MIN_CONDITIONAL_SHOTS,
};
use whichway::feedforward::{
    analytic_curve, ff_curve, sweep_visibility, ExcessPeak, KnowledgeCurve, OptimizerConfig, Protocol,
};
use whichway::knowledge::{canonical_basis, natural_basis};
use whichway::linalg::{ComplexVector, OrthonormalBasis};
use whichway::model::DetectorCoupling;
use whichway::rng::task_stream;
use whichway::{Complex64, Error};

use crate::args::{Format, MonteCarloArgs, OptimizerArgs, OrderArg, ProtocolArg, SweepDeltaArgs, SweepVisibilityArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv, sidecar, to_json, write_manifest, Outputs};
use crate::plot::{line_plot, Series};

pub const SWEEP_DELTA_HEADER: [&str; 5] = ["delta_rad", "k_natural", "k_canonical", "k_simplified", "k_ff"];
pub const SWEEP_VISIBILITY_HEADER: [&str; 6] =
    ["visibility", "kbar_canonical", "kbar_simplified", "kbar_ff", "excess_simplified", "excess_ff"];

const COLUMN_ORDER: [ProtocolArg; 4] =
    [ProtocolArg::Natural, ProtocolArg::Canonical, ProtocolArg::Simplified, ProtocolArg::Ff];

fn protocol(p: ProtocolArg) -> Protocol {
    match p {
        ProtocolArg::Natural => Protocol::Natural,
        ProtocolArg::Canonical => Protocol::Canonical,
        ProtocolArg::Simplified => Protocol::Simplified,
        ProtocolArg::Ff => Protocol::FeedForward,
    }
}

/// Sweeps need a visible interference pattern everywhere: `V = 1` has a
/// dark fringe at `δ = π`.
fn check_sweep_visibility(v: f64) -> CliResult<()> {
    if v == 1.0 {
        return Err(Error::DarkFringe { delta: PI, probability: 0.0 }.into());
    }
    if !(0.0..1.0).contains(&v) {
        return Err(Error::VisibilityOutOfRange(v).into());
    }
    Ok(())
}

fn optimizer_config(opt: &OptimizerArgs, seed: u64) -> CliResult<OptimizerConfig> {
    let cfg = OptimizerConfig {
        samples_per_delta: opt.samples,
        delta_points: opt.delta_points,
        seed,
        refine: opt.refine,
        ..OptimizerConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SweepDeltaReport<'a> {
    visibility: f64,
    delta_rad: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    k_natural: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_canonical: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_simplified: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_ff: Option<&'a [f64]>,
}

pub fn sweep_delta(args: &SweepDeltaArgs) -> CliResult<()> {
    let start = Instant::now();
    check_sweep_visibility(args.visibility)?;
    let cfg = optimizer_config(&args.optimizer, args.seed.seed)?;

    let mut curves: Vec<Option<KnowledgeCurve>> = vec![None; COLUMN_ORDER.len()];
    for (slot, p) in curves.iter_mut().zip(COLUMN_ORDER) {
        if args.protocols.contains(&p) {
            *slot = Some(match p {
                ProtocolArg::Ff => ff_curve(args.visibility, &cfg)?,
                other => analytic_curve(args.visibility, protocol(other), cfg.delta_points)?,
            });
        }
    }
    let deltas = whichway::feedforward::delta_grid(cfg.delta_points);
    let values = |i: usize| curves[i].as_ref().map(|c| c.values.as_slice());

    let body = match args.format {
        Format::Csv => {
            let rows: Vec<Vec<Option<f64>>> = deltas
                .iter()
                .enumerate()
                .map(|(j, &d)| {
                    std::iter::once(Some(d)).chain(curves.iter().map(|c| c.as_ref().map(|c| c.values[j]))).collect()
                })
                .collect();
            csv(&SWEEP_DELTA_HEADER, &rows)
        }
        Format::Json => to_json(&SweepDeltaReport {
            visibility: args.visibility,
            delta_rad: &deltas,
            k_natural: values(0),
            k_canonical: values(1),
            k_simplified: values(2),
            k_ff: values(3),
        }),
    };

    let mut outputs = Outputs::default();
    outputs.write(&args.out, &body)?;
    if let Some(plot) = &args.plot {
        let series: Vec<Series> = curves
            .iter()
            .zip(COLUMN_ORDER)
            .filter_map(|(c, p)| {
                c.as_ref().map(|c| Series {
                    name: protocol(p).name().to_string(),
                    points: c.deltas.iter().copied().zip(c.values.iter().copied()).collect(),
                })
            })
            .collect();
        let title = format!("Phase-dependent knowledge, V = {}", args.visibility);
        outputs.write(plot, &line_plot(&title, "delta (rad)", "K(delta)", &series))?;
    }
    write_manifest(&args.out, "sweep-delta", args, args.seed.seed, start.elapsed(), outputs)
}

/// `start:step:stop` with the stop included, or a comma-separated list.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("invalid visibility grid '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, step, stop] = parts[..] else { return Err(bad()) };
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        // Rounded so that e.g. 0.15 is not written as 0.15000000000000002.
        (0..=n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        spec.split(',').map(num).collect::<CliResult<Vec<f64>>>()?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[derive(Serialize)]
struct Argmax {
    excess_simplified: ExcessPeak,
    excess_ff: ExcessPeak,
    excess_simplified_continuous: ExcessPeak,
}

pub fn sweep_visibility_cmd(args: &SweepVisibilityArgs) -> CliResult<()> {
    let start = Instant::now();
    let grid = parse_grid(&args.v_grid)?;
    for &v in &grid {
        check_sweep_visibility(v)?;
    }
    let cfg = optimizer_config(&args.optimizer, args.seed.seed)?;
    let sweep = sweep_visibility(&grid, &cfg)?;

    let rows: Vec<Vec<Option<f64>>> = sweep
        .records
        .iter()
        .map(|r| {
            [r.visibility, r.kbar_canonical, r.kbar_simplified, r.kbar_ff, r.excess_simplified, r.excess_ff]
                .map(Some)
                .to_vec()
        })
        .collect();
    let argmax = to_json(&Argmax {
        excess_simplified: sweep.peak_simplified,
        excess_ff: sweep.peak_ff,
        excess_simplified_continuous: sweep.peak_simplified_refined,
    });

    let mut outputs = Outputs::default();
    outputs.write(&args.out, &csv(&SWEEP_VISIBILITY_HEADER, &rows))?;
    outputs.write(&sidecar(&args.out, "argmax.json"), &argmax)?;
    if let Some(plot) = &args.plot {
        let column = |f: fn(&whichway::feedforward::SweepRecord) -> f64| {
            sweep.records.iter().map(|r| (r.visibility, f(r))).collect::<Vec<_>>()
        };
        let series = vec![
            Series { name: "canonical".into(), points: column(|r| r.kbar_canonical.powi(2) + r.visibility.powi(2)) },
            Series { name: "simplified".into(), points: column(|r| r.excess_simplified) },
            Series { name: "ff".into(), points: column(|r| r.excess_ff) },
        ];
        outputs.write(plot, &line_plot("Duality excess", "visibility V", "Kbar^2 + V^2", &series))?;
    }
    print!("{argmax}");
    write_manifest(&args.out, "sweep-visibility", args, args.seed.seed, start.elapsed(), outputs)
}

/// Reads three vectors of `[re, im]` pairs.
pub fn read_basis_file(path: &Path) -> CliResult<OrthonormalBasis> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let raw: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })?;
    if raw.len() != 3 || raw.iter().any(|v| v.len() != 3) {
        return Err(CliError::Usage(format!("{}: expected three vectors of three [re, im] pairs", path.display())));
    }
    let vectors = raw
        .iter()
        .map(|v| ComplexVector::new(&v.iter().map(|&[re, im]| Complex64::new(re, im)).collect::<Vec<_>>()))
        .collect::<whichway::Result<Vec<_>>>()?;
    Ok(OrthonormalBasis::new(vectors)?)
}

fn resolve_basis(spec: &str, c: DetectorCoupling) -> CliResult<OrthonormalBasis> {
    match spec {
        "natural" => Ok(natural_basis()),
        "canonical" => Ok(canonical_basis(c)?),
        path => read_basis_file(Path::new(path)),
    }
}

#[derive(Serialize)]
struct MonteCarloReport {
    visibility: f64,
    theta: f64,
    basis: String,
    basis_vectors: Vec<Vec<[f64; 2]>>,
    seed: u64,
    guessing_game: GameSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_phase: Option<ConditionalSummary>,
    max_abs_z: f64,
}

pub fn montecarlo(args: &MonteCarloArgs) -> CliResult<()> {
    let start = Instant::now();
    if args.shots < MIN_CONDITIONAL_SHOTS {
        return Err(CliError::Starvation(format!(
            "{} shots requested, need at least {MIN_CONDITIONAL_SHOTS}",
            args.shots
        )));
    }
    let c = match (args.theta, args.visibility) {
        (Some(theta), _) => DetectorCoupling::from_theta(theta)?,
        (None, Some(v)) => DetectorCoupling::from_visibility(v)?,
        (None, None) => return Err(CliError::Usage("one of --theta or --visibility is required".into())),
    };
    let basis = resolve_basis(&args.basis, c)?;
    let seed = args.seed.seed;

    let game = run_guessing_game(c.theta(), &basis, args.shots, &mut task_stream(seed, &[0]))?;
    let guessing_game = summarize_game(&game, &basis, c)?;
    let fixed_phase = match args.delta {
        Some(delta) => {
            let order = match args.order {
                OrderArg::QoFirst => MeasurementOrder::QoFirst,
                OrderArg::WwdFirst => MeasurementOrder::WwdFirst,
            };
            let run = run_phase_conditioned(c.theta(), &basis, delta, args.shots, order, &mut task_stream(seed, &[1]))?;
            Some(summarize_conditional(&run, &game, &basis, delta, c)?)
        }
        None => None,
    };
    let max_abs_z = fixed_phase.as_ref().map_or(0.0, |s| s.max_abs_z()).max(guessing_game.max_abs_z());
    let report = MonteCarloReport {
        visibility: c.visibility(),
        theta: c.theta(),
        basis: args.basis.clone(),
        basis_vectors: basis.iter().map(|v| v.iter().map(|a| [a.re, a.im]).collect()).collect(),
        seed,
        guessing_game,
        fixed_phase,
        max_abs_z,
    };
    let mut outputs = Outputs::default();
    outputs.write(&args.out, &to_json(&report))?;
    write_manifest(&args.out, "montecarlo", args, seed, start.elapsed(), outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_includes_stop() {
        let g = parse_grid("0:0.05:0.95").unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[3], 0.15);
        assert_eq!(*g.last().unwrap(), 0.95);
    }

    #[test]
    fn list_grid() {
        assert_eq!(parse_grid("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
    }

    #[test]
    fn bad_grids() {
        for spec in ["", "0:0:1", "1:0.1:0", "a,b", "0:1"] {
            assert!(parse_grid(spec).is_err(), "{spec}");
        }
    }

    #[test]
    fn sweep_visibility_domain() {
        assert_eq!(check_sweep_visibility(1.0).unwrap_err().exit_code(), 3);
        assert_eq!(check_sweep_visibility(-0.1).unwrap_err().exit_code(), 3);
        assert!(check_sweep_visibility(0.0).is_ok());
    }
}
