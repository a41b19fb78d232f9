use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use jointdp::audit::{
    composition_check, estimate_epsilon, halfline_events, influence_bound, influence_count, ks_test_laplace,
    nr_sensitivity_replay, InfluenceTrace,
};
use jointdp::counters::laplace_sample;
use jointdp::equilibria::{check_coarse, check_correlated, check_pure_nash, estimate_equilibrium, Concept};
use jointdp::experiment::{emit, run_experiment, ExperimentConfig};
use jointdp::games::spec::GameSpec;
use jointdp::games::{action_counts, AnyGame, CongestionGame, Game, Instance};
use jointdp::mediator::{best_deviation, incentive_bound, MediatorSpec};
use jointdp::noregret::{
    feasibility, max_feasible_rounds, nr_params, regret, regret_bounds, run_nr_laplace, CorrelatedDistribution,
    Evaluator, Family, NrConfig, NrParams,
};
use jointdp::pbr::{
    compute_params, derive_params, ensure_feasible, eta_bound, feasible_c_alpha, noiseless_params,
    params_for_alpha, run_pbr, PbrConfig, PbrParams,
};
use jointdp::rng::{child_seed, derived_rng, stream_id, DetRng};
use jointdp::Error;

use crate::{AuditArgs, CAlpha, ExperimentArgs, IncentivesArgs, NrArgs, NrOptions, PbrArgs, PbrOptions, VerifyArgs};

/// Laplace draws used by the distributional check on the noise primitive.
const KS_SAMPLES: usize = 10_000;

fn load_game(path: &Path) -> Result<Instance<AnyGame>> {
    let spec = GameSpec::load(path).with_context(|| format!("loading game {}", path.display()))?;
    Ok(spec.build()?)
}

fn congestion(inst: &Instance<AnyGame>) -> Result<&CongestionGame> {
    inst.game
        .as_congestion()
        .ok_or_else(|| Error::Validation("best-response dynamics need a congestion game".into()).into())
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn max_actions(inst: &Instance<AnyGame>) -> usize {
    action_counts(&inst.game, &inst.types).into_iter().max().unwrap_or(1)
}

fn pbr_params(game: &CongestionGame, n: usize, o: &PbrOptions) -> jointdp::Result<PbrParams> {
    let (m, sigma) = (game.m(), game.sensitivity());
    if o.noiseless {
        let alpha = o.alpha.ok_or_else(|| Error::Validation("--noiseless needs --alpha".into()))?;
        return noiseless_params(m, n, sigma, alpha);
    }
    if let Some(alpha) = o.alpha {
        let params = params_for_alpha(m, n, sigma, o.epsilon, o.beta, alpha)?;
        ensure_feasible(&params)?;
        return Ok(params);
    }
    match o.c_alpha {
        CAlpha::Value(c) => derive_params(m, n, sigma, o.epsilon, o.beta, c),
        CAlpha::Auto => {
            let c = feasible_c_alpha(m, n, sigma, o.epsilon, o.beta, 1.0)?;
            compute_params(m, n, sigma, o.epsilon, o.beta, c)
        }
    }
}

fn nr_setup(inst: &Instance<AnyGame>, o: &NrOptions) -> jointdp::Result<(NrParams, NrConfig)> {
    let n = inst.types.len();
    let k = max_actions(inst);
    let lambda = inst.game.largeness();
    let rounds = match o.rounds.0 {
        Some(t) => t,
        None => max_feasible_rounds(lambda, n, k, o.epsilon, o.delta, o.beta)?,
    };
    let params = nr_params(lambda, n, k, o.epsilon, o.delta, o.beta, rounds, o.family)?;
    let config = NrConfig { evaluator: Evaluator::Auto, noiseless: o.noiseless, force: o.force, fixed: Vec::new() };
    Ok((params, config))
}

/// Exact equilibrium check of the family's concept; `None` past the
/// enumeration cap.
fn nr_eta(inst: &Instance<AnyGame>, dist: &CorrelatedDistribution, family: Family) -> Result<(Option<f64>, String)> {
    let report = match family {
        Family::Swap => check_correlated(&inst.game, &inst.types, dist),
        Family::Fixed => check_coarse(&inst.game, &inst.types, dist),
    };
    match report {
        Ok(r) => Ok((Some(r.eta), String::new())),
        Err(Error::CapExceeded(msg)) => Ok((None, format!("exact check skipped: {msg}"))),
        Err(e) => Err(e.into()),
    }
}

pub fn pbr(args: &PbrArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let inst = load_game(&args.game)?;
    let game = congestion(&inst)?;
    let n = inst.types.len();
    let params = pbr_params(game, n, &args.opts)?;
    let config = PbrConfig { init: args.opts.init, record_trace: args.trace };
    let outcome = run_pbr(game, &inst.types, &params, &config, &mut derived_rng(seed, 0))?;
    let eta_hat = match &outcome.result {
        Some(profile) => Some(check_pure_nash(game, &inst.types, profile)?.eta),
        None => None,
    };
    let len = params.stream_len();
    let trace = InfluenceTrace::from_outcome(&outcome, len)?;
    let influence_max = (0..n).map(|i| influence_count(&trace, i)).max().unwrap_or(0);
    let record = json!({
        "kind": "pbr",
        "seed": seed,
        "params": params,
        "bound": eta_bound(&params),
        "profile": outcome.result,
        "last_profile": outcome.last_profile,
        "initial_profile": outcome.initial_profile,
        "failed": outcome.is_fail(),
        "failed_player": outcome.failed_player,
        "rounds_used": outcome.rounds_used,
        "total_moves": outcome.total_moves(),
        "moves": outcome.moves,
        "max_count_error": outcome.max_count_error,
        "eta_hat": eta_hat,
        "influence": { "max_cells": influence_max, "bound": influence_bound(params.p, params.m, len) },
        "trace": if args.trace { Some(&outcome.trace) } else { None },
    });
    write_json(out, &record)
}

pub fn nrlaplace(args: &NrArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let inst = load_game(&args.game)?;
    let (params, config) = nr_setup(&inst, &args.opts)?;
    let feas = feasibility(&params);
    let outcome = run_nr_laplace(&inst.game, &inst.types, &params, &config, seed)?;
    let dist = CorrelatedDistribution::from_sequences(&outcome.sequences)?;
    let (eta_hat, mut note) = nr_eta(&inst, &dist, params.family)?;
    let regrets = (0..inst.types.len())
        .map(|i| regret(&outcome.sequences[i], &outcome.true_losses[i], params.family))
        .collect::<jointdp::Result<Vec<f64>>>()?;
    let b = if args.opts.noiseless { 0.0 } else { params.b };
    // Forced runs outside the accuracy condition have no bound.
    let bound = match regret_bounds(b, params.k, params.rounds, params.beta, !args.opts.noiseless) {
        Ok(rb) => Some(inst.game.utility_bound() * if params.family == Family::Swap { rb.swap } else { rb.fixed }),
        Err(Error::Infeasible(msg)) => {
            if !note.is_empty() {
                note.push_str("; ");
            }
            note.push_str(&format!("no bound: {msg}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let record = json!({
        "kind": "nrlaplace",
        "seed": seed,
        "params": params,
        "feasibility": feas,
        "noiseless": args.opts.noiseless,
        "range_violations": outcome.range_violations,
        "regret": regrets,
        "bound": bound,
        "eta_hat": eta_hat,
        "note": note,
        "sequences": outcome.sequences,
    });
    write_json(out, &record)
}

pub fn verify(args: &VerifyArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let inst = load_game(&args.game)?;
    let text = std::fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let actions = action_counts(&inst.game, &inst.types);
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Value = serde_json::from_str(line).with_context(|| format!("line {}", line_no + 1))?;
        let profile: Option<Vec<usize>> = match record.get("profile") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => None,
        };
        let sequences: Option<Vec<Vec<Vec<f64>>>> = match record.get("sequences") {
            Some(v) => Some(serde_json::from_value(v.clone())?),
            None => None,
        };
        if profile.is_none() && sequences.is_none() {
            let result = json!({ "line": line_no + 1, "report": null, "note": "no output to verify (failed run)" });
            write_json(out, &result)?;
            continue;
        }
        let result = if args.concept == Concept::PureNash {
            let Some(profile) = profile else {
                bail!(Error::Validation(format!("line {}: pure-Nash checks need a profile", line_no + 1)));
            };
            json!({ "line": line_no + 1, "report": check_pure_nash(&inst.game, &inst.types, &profile)? })
        } else {
            let dist = match (sequences, profile) {
                (Some(seqs), _) => CorrelatedDistribution::from_sequences(&seqs)?,
                (None, Some(p)) => CorrelatedDistribution::point(&p, &actions),
                (None, None) => unreachable!("handled above"),
            };
            match args.samples {
                Some(samples) => {
                    let mut rng = derived_rng(seed, line_no as u64);
                    let est = estimate_equilibrium(&inst.game, &inst.types, &dist, args.concept, samples, &mut rng)?;
                    json!({ "line": line_no + 1, "report": est.report, "half_width": est.half_width })
                }
                None => {
                    let report = if args.concept == Concept::Correlated {
                        check_correlated(&inst.game, &inst.types, &dist)?
                    } else {
                        check_coarse(&inst.game, &inst.types, &dist)?
                    };
                    json!({ "line": line_no + 1, "report": report })
                }
            }
        };
        write_json(out, &result)?;
    }
    Ok(())
}

pub fn incentives(args: &IncentivesArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let config = MediatorSpec::from_json(&text)?.build()?;
    let report = best_deviation(&config, args.player, args.trials, seed)?;
    let bound = incentive_bound(&config)?;
    let within = bound.as_ref().map(|b| report.best.gain <= b.eta_prime + 3.0 * report.best.se);
    let record = json!({
        "kind": "incentives",
        "seed": seed,
        "deviation": report,
        "bound": bound,
        "within_bound_3se": within,
    });
    write_json(out, &record)
}

/// Parses `player:from->to` against the game's type names.
fn parse_swap(spec: &str, inst: &Instance<AnyGame>) -> Result<(usize, usize, usize)> {
    let bad = || Error::Validation(format!("swap {spec:?} is not of the form player:from->to"));
    let (player, types) = spec.split_once(':').ok_or_else(bad)?;
    let (from, to) = types.split_once("->").ok_or_else(bad)?;
    let player: usize = player.trim().parse().map_err(|_| bad())?;
    let lookup = |name: &str| {
        inst.game.type_index(name.trim()).ok_or_else(|| Error::Validation(format!("unknown type {name:?}")))
    };
    let (from, to) = (lookup(from)?, lookup(to)?);
    if player >= inst.types.len() {
        bail!(Error::Validation(format!("no player {player}")));
    }
    if inst.types[player] != from {
        bail!(Error::Validation(format!(
            "player {player} has type {:?}, not {:?}",
            inst.game.type_names()[inst.types[player]],
            inst.game.type_names()[from]
        )));
    }
    Ok((player, from, to))
}

/// `trials` outputs on each neighboring input; input `x`, trial `t` uses
/// stream `(x, t)` of `seed`.
fn sample_pair<F>(trials: usize, seed: u64, run: F) -> Result<[Vec<Vec<f64>>; 2]>
where
    F: Fn(bool, &mut DetRng) -> jointdp::Result<Vec<f64>> + Sync,
{
    let side = |which: bool| -> jointdp::Result<Vec<Vec<f64>>> {
        (0..trials)
            .into_par_iter()
            .map(|t| run(which, &mut derived_rng(seed, stream_id(u32::from(which), t as u32))))
            .collect()
    };
    Ok([side(false)?, side(true)?])
}

fn ks_on_noise(b: f64, seed: u64) -> Result<Option<Value>> {
    if !(b > 0.0 && b.is_finite()) {
        return Ok(None);
    }
    let mut rng = derived_rng(seed, stream_id(2, 0));
    let samples = (0..KS_SAMPLES).map(|_| laplace_sample(&mut rng, b)).collect::<jointdp::Result<Vec<f64>>>()?;
    let ks = ks_test_laplace(&samples, b)?;
    Ok(Some(json!({ "b": b, "samples": KS_SAMPLES, "result": ks })))
}

pub fn audit(args: &AuditArgs, seed: u64, out: &mut dyn Write) -> Result<()> {
    if args.trials == 0 {
        bail!(Error::Parameter("at least one trial is required".into()));
    }
    let inst = load_game(&args.game)?;
    let (player, from, to) = parse_swap(&args.swap, &inst)?;
    let mut swapped = inst.types.clone();
    swapped[player] = to;
    let others = |v: &[usize]| -> Vec<f64> {
        v.iter().enumerate().filter(|&(j, _)| j != player).map(|(_, &a)| a as f64).collect()
    };
    let swap = json!({ "player": player, "from": inst.game.type_names()[from], "to": inst.game.type_names()[to] });
    let record = match args.mechanism.as_str() {
        "pbr" => {
            let game = congestion(&inst)?;
            let n = inst.types.len();
            let params = pbr_params(game, n, &args.pbr)?;
            let config = PbrConfig { init: args.pbr.init, record_trace: false };
            // The last coordinate flags FAIL, which is an observable outcome.
            let outputs = sample_pair(args.trials, seed, |which, rng| {
                let types = if which { &swapped } else { &inst.types };
                let o = run_pbr(game, types, &params, &config, rng)?;
                let mut v = others(o.result.as_ref().unwrap_or(&o.last_profile));
                v.push(if o.is_fail() { 1.0 } else { 0.0 });
                Ok(v)
            })?;
            let fail_rate = |xs: &[Vec<f64>]| xs.iter().filter(|x| x.last() == Some(&1.0)).count() as f64 / xs.len() as f64;
            let events = halfline_events(&[&outputs[0], &outputs[1]], 20);
            let estimate = estimate_epsilon(&outputs[0], &outputs[1], &events);
            let len = params.stream_len();
            let traced = run_pbr(game, &inst.types, &params, &config, &mut derived_rng(seed, stream_id(3, 0)))?;
            let trace = InfluenceTrace::from_outcome(&traced, len)?;
            let bound = influence_bound(params.p, params.m, len);
            let counts: Vec<usize> = (0..n).map(|i| influence_count(&trace, i)).collect();
            json!({
                "kind": "audit",
                "mechanism": "pbr",
                "seed": seed,
                "swap": swap,
                "trials": args.trials,
                "params": params,
                "fail_rate": { "original": fail_rate(&outputs[0]), "swapped": fail_rate(&outputs[1]) },
                "empirical_epsilon": estimate,
                "influence": {
                    "player": counts[player],
                    "max": counts.iter().copied().max().unwrap_or(0),
                    "bound": bound,
                    "within_bound": counts.iter().all(|&c| c <= bound),
                },
                "ks": ks_on_noise(1.0 / params.eps_prime, seed)?,
            })
        }
        "nrlaplace" => {
            let opts = NrOptions {
                epsilon: args.pbr.epsilon,
                delta: args.delta,
                beta: args.pbr.beta,
                rounds: args.rounds,
                family: args.family,
                noiseless: args.pbr.noiseless,
                force: args.force,
            };
            let (params, config) = nr_setup(&inst, &opts)?;
            let sensitivity = nr_sensitivity_replay(&inst.game, &inst.types, player, to, &params, &config, seed)?;
            let outputs = sample_pair(args.trials, seed, |which, rng| {
                let types = if which { &swapped } else { &inst.types };
                let o = run_nr_laplace(&inst.game, types, &params, &config, child_seed(rng))?;
                Ok(o.sequences
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != player)
                    .flat_map(|(_, seq)| seq.last().cloned().unwrap_or_default())
                    .collect())
            })?;
            let events = halfline_events(&[&outputs[0], &outputs[1]], 20);
            let estimate = estimate_epsilon(&outputs[0], &outputs[1], &events);
            let b = if args.pbr.noiseless { 0.0 } else { params.b };
            json!({
                "kind": "audit",
                "mechanism": "nrlaplace",
                "seed": seed,
                "swap": swap,
                "trials": args.trials,
                "params": params,
                "sensitivity": sensitivity,
                "composition": composition_check(&params),
                "empirical_epsilon": estimate,
                "ks": ks_on_noise(b, seed)?,
            })
        }
        other => bail!(Error::Validation(format!("unknown mechanism {other:?} (pbr|nrlaplace)"))),
    };
    write_json(out, &record)
}

pub fn experiment(args: &ExperimentArgs, seed: Option<u64>, timing: bool, out: &mut dyn Write) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let rows = run_experiment(&config, timing)?;
    emit(&rows, args.format, out)?;
    Ok(())
}
