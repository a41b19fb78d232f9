//! Parameter sweeps with deterministic per-cell, per-trial randomness and
//! tabular output.
//!
//! A sweep is the product of its axes in the order `n`, `epsilon`, `rounds`.
//! The generator of trial `t` in a cell is stream `t` of a cell seed
//! obtained by FNV-1a hashing the master seed with the cell's axis values,
//! so adding or reordering cells never changes the draws of existing ones.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{check_coarse, check_correlated, check_pure_nash};
use crate::error::{Error, Result};
use crate::games::spec::GameSpec;
use crate::games::{parallel_links, random_congestion_game, random_large_game, AnyGame, Game, Instance};
use crate::noregret::{
    max_feasible_rounds, nr_params, regret, regret_bounds, run_nr_laplace, CorrelatedDistribution, Evaluator,
    Family, NrConfig,
};
use crate::pbr::{
    compute_params, derive_params, eta_bound, feasible_c_alpha, noiseless_params, run_pbr, InitPolicy, PbrConfig,
    PbrParams,
};
use crate::rng::{child_seed, derived_rng, DetRng};

pub const CSV_SCHEMA: &str = "# schema jointdp-experiment v1";
pub const SCHEMA_NAME: &str = "jointdp-experiment";
pub const SCHEMA_VERSION: u32 = 1;

/// Game family of a sweep. Sized families take `n` from the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentGame {
    /// `links` parallel links with `ℓ(y) = y/n`.
    ParallelLinks { links: usize },
    /// A fresh random congestion game per trial.
    RandomCongestion { m: usize, #[serde(default = "one")] types: usize, actions: usize, max_step: f64 },
    /// A fresh random large game per trial; `lambda` defaults to `1/n`.
    RandomLarge { k: usize, #[serde(default)] lambda: Option<f64>, #[serde(default = "one")] types: usize },
    /// A fixed game; `n` sweeps are not allowed.
    Spec { spec: GameSpec },
}

fn one() -> usize {
    1
}

fn default_family() -> Family {
    Family::Swap
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExperimentMechanism {
    Pbr {
        epsilon: f64,
        beta: f64,
        /// `None` picks the smallest feasible constant per cell.
        #[serde(default)]
        c_alpha: Option<f64>,
        #[serde(default)]
        noiseless: bool,
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        init: InitPolicy,
    },
    Nrlaplace {
        epsilon: f64,
        delta: f64,
        beta: f64,
        /// `None` takes the largest feasible round count.
        #[serde(default)]
        rounds: Option<usize>,
        #[serde(default = "default_family")]
        family: Family,
        #[serde(default)]
        noiseless: bool,
        #[serde(default)]
        force: bool,
    },
}

/// Sweep axes. A missing axis contributes its single default value; an
/// empty list yields no cells.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Sweep {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default)]
    pub rounds: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub game: ExperimentGame,
    pub mechanism: ExperimentMechanism,
    #[serde(default)]
    pub sweep: Sweep,
    pub trials: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let ExperimentGame::Spec { .. } = self.game {
            if self.sweep.n.is_some() {
                return Err(Error::validation("a fixed game cannot be swept over n"));
            }
        } else if self.sweep.n.is_none() {
            return Err(Error::validation("sized game families need an n axis"));
        }
        if matches!(self.mechanism, ExperimentMechanism::Pbr { .. }) && self.sweep.rounds.is_some() {
            return Err(Error::validation("best-response dynamics derive their own round count"));
        }
        Ok(())
    }

    /// Cells in canonical order.
    pub fn cells(&self) -> Vec<Cell> {
        let eps0 = match self.mechanism {
            ExperimentMechanism::Pbr { epsilon, .. } | ExperimentMechanism::Nrlaplace { epsilon, .. } => epsilon,
        };
        let ns: Vec<Option<usize>> = match &self.sweep.n {
            Some(v) => v.iter().map(|&n| Some(n)).collect(),
            None => vec![None],
        };
        let epss = self.sweep.epsilon.clone().unwrap_or_else(|| vec![eps0]);
        let rounds: Vec<Option<usize>> = match &self.sweep.rounds {
            Some(v) => v.iter().map(|&t| Some(t)).collect(),
            None => vec![None],
        };
        let mut cells = Vec::new();
        for &n in &ns {
            for &epsilon in &epss {
                for &r in &rounds {
                    cells.push(Cell { index: cells.len(), n, epsilon, rounds: r });
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub n: Option<usize>,
    pub epsilon: f64,
    pub rounds: Option<usize>,
}

impl Cell {
    /// FNV-1a over the master seed and the axis values.
    pub fn seed(&self, master: u64) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for byte in x.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(master);
        eat(self.n.map_or(u64::MAX, |n| n as u64));
        eat(self.epsilon.to_bits());
        eat(self.rounds.map_or(u64::MAX, |t| t as u64));
        h
    }
}

/// One output row. Optional fields are empty in CSV and `null` in JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub cell: usize,
    pub trial: Option<usize>,
    pub mechanism: String,
    pub n: usize,
    pub epsilon: f64,
    pub beta: f64,
    pub delta: Option<f64>,
    pub rounds: Option<usize>,
    pub alpha: Option<f64>,
    pub eta_hat: Option<f64>,
    pub bound: Option<f64>,
    pub regret: Option<f64>,
    pub moves: Option<usize>,
    pub failed: bool,
    pub skipped: bool,
    pub note: String,
    pub wall_ms: Option<f64>,
}

/// Cell-level setup shared by all trials of the cell.
enum Setup {
    Pbr { params: PbrParams, init: InitPolicy },
    Nr { rounds: usize },
}

fn sized_n(cell: &Cell, game: &ExperimentGame) -> Result<usize> {
    match (game, cell.n) {
        (ExperimentGame::Spec { spec }, _) => Ok(spec.build()?.types.len()),
        (_, Some(n)) if n > 0 => Ok(n),
        _ => Err(Error::validation("cell has no player count")),
    }
}

fn build_game(config: &ExperimentConfig, n: usize, rng: &mut DetRng) -> Result<Instance<AnyGame>> {
    Ok(match &config.game {
        ExperimentGame::ParallelLinks { links } => {
            Instance { game: AnyGame::Congestion(parallel_links(n, *links)?), types: vec![0; n] }
        }
        ExperimentGame::RandomCongestion { m, types, actions, max_step } => {
            let g = random_congestion_game(n, *m, *types, *actions, *max_step, rng)?;
            let t = (0..n).map(|i| i % *types).collect();
            Instance { game: AnyGame::Congestion(g), types: t }
        }
        ExperimentGame::RandomLarge { k, lambda, types } => {
            let inst = random_large_game(n, *k, lambda.unwrap_or(1.0 / n as f64), *types, rng)?;
            Instance { game: AnyGame::General(inst.game), types: inst.types }
        }
        ExperimentGame::Spec { spec } => spec.build()?,
    })
}

fn pbr_params_for(config: &ExperimentConfig, cell: &Cell, n: usize, game: &AnyGame) -> Result<PbrParams> {
    let ExperimentMechanism::Pbr { beta, c_alpha, noiseless, alpha, .. } = &config.mechanism else {
        unreachable!("caller matched the mechanism")
    };
    let g = game.as_congestion().ok_or_else(|| Error::validation("best-response dynamics need a congestion game"))?;
    let (m, sigma) = (g.m(), g.sensitivity());
    if *noiseless {
        let a = alpha.ok_or_else(|| Error::validation("noiseless runs need an explicit alpha"))?;
        return noiseless_params(m, n, sigma, a);
    }
    match c_alpha {
        Some(c) => derive_params(m, n, sigma, cell.epsilon, *beta, *c),
        None => {
            let c = feasible_c_alpha(m, n, sigma, cell.epsilon, *beta, 1.0)?;
            compute_params(m, n, sigma, cell.epsilon, *beta, c)
        }
    }
}

/// Random games are redrawn per trial, so their schedule is recomputed per
/// trial; the cell-level schedule comes from a template drawn on a reserved
/// stream and decides whether the cell is skipped.
fn pbr_setup(config: &ExperimentConfig, cell: &Cell, n: usize) -> Result<Setup> {
    let ExperimentMechanism::Pbr { init, .. } = &config.mechanism else {
        unreachable!("caller matched the mechanism")
    };
    let template = build_game(config, n, &mut derived_rng(cell.seed(config.seed), u64::MAX))?;
    let params = pbr_params_for(config, cell, n, &template.game)?;
    Ok(Setup::Pbr { params, init: *init })
}

fn nr_setup(config: &ExperimentConfig, cell: &Cell, n: usize) -> Result<Setup> {
    let ExperimentMechanism::Nrlaplace { delta, beta, rounds, .. } = &config.mechanism else {
        unreachable!("caller matched the mechanism")
    };
    let rounds = match cell.rounds.or(*rounds) {
        Some(t) => t,
        None => {
            let template = build_game(config, n, &mut derived_rng(cell.seed(config.seed), u64::MAX))?;
            let k = max_actions(&template);
            max_feasible_rounds(template.game.largeness(), n, k, cell.epsilon, *delta, *beta)?
        }
    };
    Ok(Setup::Nr { rounds })
}

fn max_actions(inst: &Instance<AnyGame>) -> usize {
    inst.types.iter().enumerate().map(|(i, &t)| inst.game.num_actions(i, t)).max().unwrap_or(1)
}

fn base_row(config: &ExperimentConfig, cell: &Cell, n: usize) -> Row {
    let (mechanism, beta, delta) = match &config.mechanism {
        ExperimentMechanism::Pbr { beta, .. } => ("pbr", *beta, None),
        ExperimentMechanism::Nrlaplace { beta, delta, .. } => ("nrlaplace", *beta, Some(*delta)),
    };
    Row {
        cell: cell.index,
        trial: None,
        mechanism: mechanism.into(),
        n,
        epsilon: cell.epsilon,
        beta,
        delta,
        rounds: cell.rounds,
        alpha: None,
        eta_hat: None,
        bound: None,
        regret: None,
        moves: None,
        failed: false,
        skipped: false,
        note: String::new(),
        wall_ms: None,
    }
}

fn run_trial(config: &ExperimentConfig, cell: &Cell, n: usize, setup: &Setup, trial: usize) -> Result<Row> {
    let mut rng = derived_rng(cell.seed(config.seed), trial as u64);
    let inst = build_game(config, n, &mut rng)?;
    let mut row = base_row(config, cell, n);
    row.trial = Some(trial);
    match setup {
        Setup::Pbr { params, init } => {
            let g = inst.game.as_congestion().expect("checked in setup");
            let redrawn;
            let params = if matches!(config.game, ExperimentGame::RandomCongestion { .. }) {
                match pbr_params_for(config, cell, n, &inst.game) {
                    Ok(p) => {
                        redrawn = p;
                        &redrawn
                    }
                    Err(Error::Infeasible(msg)) => {
                        row.skipped = true;
                        row.note = format!("infeasible: {msg}");
                        return Ok(row);
                    }
                    Err(e) => return Err(e),
                }
            } else {
                params
            };
            let out = run_pbr(g, &inst.types, params, &PbrConfig { init: *init, record_trace: false }, &mut rng)?;
            row.rounds = Some(params.t_rounds);
            row.alpha = Some(params.alpha);
            row.bound = Some(eta_bound(params));
            row.moves = Some(out.total_moves());
            match &out.result {
                Some(profile) => row.eta_hat = Some(check_pure_nash(g, &inst.types, profile)?.eta),
                None => {
                    row.failed = true;
                    row.note = format!("player {} exceeded p = {}", out.failed_player.unwrap_or(0), params.p);
                }
            }
        }
        Setup::Nr { rounds } => {
            let ExperimentMechanism::Nrlaplace { delta, beta, family, noiseless, force, .. } = &config.mechanism else {
                unreachable!("setup matches the mechanism")
            };
            let k = max_actions(&inst);
            let lambda = inst.game.largeness();
            let params = nr_params(lambda, n, k, cell.epsilon, *delta, *beta, *rounds, *family)?;
            let nr_config = NrConfig { evaluator: Evaluator::Auto, noiseless: *noiseless, force: *force, fixed: Vec::new() };
            let seed = child_seed(&mut rng);
            let out = run_nr_laplace(&inst.game, &inst.types, &params, &nr_config, seed)?;
            let dist = CorrelatedDistribution::from_sequences(&out.sequences)?;
            let report = match family {
                Family::Swap => check_correlated(&inst.game, &inst.types, &dist)?,
                Family::Fixed => check_coarse(&inst.game, &inst.types, &dist)?,
            };
            row.rounds = Some(*rounds);
            row.eta_hat = Some(report.eta);
            let rho = (0..n)
                .map(|i| regret(&out.sequences[i], &out.true_losses[i], *family))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            row.regret = Some(rho);
            let b = if *noiseless { 0.0 } else { params.b };
            match regret_bounds(b, k, *rounds, *beta, !*noiseless) {
                Ok(rb) => {
                    let r = if *family == Family::Swap { rb.swap } else { rb.fixed };
                    row.bound = Some(inst.game.utility_bound() * r);
                }
                Err(e) => row.note = e.to_string(),
            }
            if out.range_violations > 0 {
                if !row.note.is_empty() {
                    row.note.push_str("; ");
                }
                row.note.push_str(&format!("{} noisy losses outside [0, 1]", out.range_violations));
            }
        }
    }
    Ok(row)
}

/// Runs every cell and trial. Infeasible cells become one skipped row each;
/// other errors abort. With `timing`, rows carry wall-clock times and the
/// output is no longer reproducible.
pub fn run_experiment(config: &ExperimentConfig, timing: bool) -> Result<Vec<Row>> {
    config.validate()?;
    if config.trials == 0 {
        return Err(Error::validation("at least one trial per cell is required"));
    }
    let cells = config.cells();
    let per_cell: Vec<Result<Vec<Row>>> = cells
        .par_iter()
        .map(|cell| {
            let n = sized_n(cell, &config.game)?;
            let setup = match config.mechanism {
                ExperimentMechanism::Pbr { .. } => pbr_setup(config, cell, n),
                ExperimentMechanism::Nrlaplace { .. } => nr_setup(config, cell, n),
            };
            let setup = match setup {
                Ok(s) => s,
                Err(Error::Infeasible(msg)) => {
                    let mut row = base_row(config, cell, n);
                    row.skipped = true;
                    row.note = format!("infeasible: {msg}");
                    return Ok(vec![row]);
                }
                Err(e) => return Err(e),
            };
            (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let start = timing.then(std::time::Instant::now);
                    let row = run_trial(config, cell, n, &setup, t);
                    row.map(|mut r| {
                        r.wall_ms = start.map(|s| s.elapsed().as_secs_f64() * 1e3);
                        r
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_cell {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Output format for [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(Error::validation(format!("unknown output format {other:?}"))),
        }
    }
}

pub const CSV_COLUMNS: [&str; 17] = [
    "cell", "trial", "mechanism", "n", "epsilon", "beta", "delta", "rounds", "alpha", "eta_hat", "bound",
    "regret", "moves", "failed", "skipped", "note", "wall_ms",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn opt_int(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_record(r: &Row) -> Vec<String> {
    vec![
        r.cell.to_string(),
        opt_int(r.trial),
        r.mechanism.clone(),
        r.n.to_string(),
        format_float(r.epsilon),
        format_float(r.beta),
        opt_float(r.delta),
        opt_int(r.rounds),
        opt_float(r.alpha),
        opt_float(r.eta_hat),
        opt_float(r.bound),
        opt_float(r.regret),
        opt_int(r.moves),
        r.failed.to_string(),
        r.skipped.to_string(),
        r.note.clone(),
        opt_float(r.wall_ms),
    ]
}

/// Writes RFC 4180 CSV preceded by a schema comment line, or JSON lines
/// preceded by a schema object.
pub fn emit<W: Write>(rows: &[Row], format: Format, mut out: W) -> Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_SCHEMA}")?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for r in rows {
                w.write_record(csv_record(r))?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            writeln!(out, "{}", serde_json::json!({ "schema": SCHEMA_NAME, "version": SCHEMA_VERSION }))?;
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::validation(format!("cannot parse field {s:?}")))
}

fn parse_req<T: std::str::FromStr>(s: &str) -> Result<T> {
    parse_opt(s)?.ok_or_else(|| Error::validation("missing required field"))
}

/// Reads rows written by [`emit`] in CSV form.
pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let body = text
        .strip_prefix(CSV_SCHEMA)
        .and_then(|t| t.strip_prefix('\n'))
        .ok_or_else(|| Error::validation("missing schema line"))?;
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        rows.push(Row {
            cell: parse_req(f(0))?,
            trial: parse_opt(f(1))?,
            mechanism: f(2).to_string(),
            n: parse_req(f(3))?,
            epsilon: parse_req(f(4))?,
            beta: parse_req(f(5))?,
            delta: parse_opt(f(6))?,
            rounds: parse_opt(f(7))?,
            alpha: parse_opt(f(8))?,
            eta_hat: parse_opt(f(9))?,
            bound: parse_opt(f(10))?,
            regret: parse_opt(f(11))?,
            moves: parse_opt(f(12))?,
            failed: parse_req(f(13))?,
            skipped: parse_req(f(14))?,
            note: f(15).to_string(),
            wall_ms: parse_opt(f(16))?,
        });
    }
    Ok(rows)
}

/// Median of the finite `eta_hat` values per cell, in cell order.
pub fn median_eta_by_cell(rows: &[Row]) -> Vec<(usize, Option<f64>)> {
    let mut cells: Vec<usize> = rows.iter().map(|r| r.cell).collect();
    cells.dedup();
    cells
        .into_iter()
        .map(|c| {
            let mut v: Vec<f64> = rows.iter().filter(|r| r.cell == c).filter_map(|r| r.eta_hat).collect();
            v.sort_by(f64::total_cmp);
            let med = match v.len() {
                0 => None,
                l if l % 2 == 1 => Some(v[l / 2]),
                l => Some(0.5 * (v[l / 2 - 1] + v[l / 2])),
            };
            (c, med)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn links_config(ns: Vec<usize>, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            name: "links".into(),
            game: ExperimentGame::ParallelLinks { links: 2 },
            mechanism: ExperimentMechanism::Pbr {
                epsilon: 1.0,
                beta: 0.1,
                c_alpha: None,
                noiseless: false,
                alpha: None,
                init: InitPolicy::Random,
            },
            sweep: Sweep { n: Some(ns), ..Sweep::default() },
            trials,
            seed: 7,
        }
    }

    #[test]
    fn same_seed_gives_identical_csv() {
        let cfg = links_config(vec![8, 16], 3);
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit(&run_experiment(&cfg, false).unwrap(), Format::Csv, &mut a).unwrap();
        emit(&run_experiment(&cfg, false).unwrap(), Format::Csv, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let rows = run_experiment(&links_config(vec![], 3), false).unwrap();
        assert!(rows.is_empty());
        let mut out = Vec::new();
        emit(&rows, Format::Csv, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn csv_round_trips() {
        let rows = run_experiment(&links_config(vec![8], 2), false).unwrap();
        let mut out = Vec::new();
        emit(&rows, Format::Csv, &mut out).unwrap();
        let parsed = parse_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(parsed, rows);
        let mut again = Vec::new();
        emit(&parsed, Format::Csv, &mut again).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn jsonl_lines_parse_independently() {
        let rows = run_experiment(&links_config(vec![8], 2), false).unwrap();
        let mut out = Vec::new();
        emit(&rows, Format::Jsonl, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        let head: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(head["version"], 1);
        for (line, row) in lines.zip(&rows) {
            let r: Row = serde_json::from_str(line).unwrap();
            assert_eq!(&r, row);
        }
    }

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI * 1e-300, 123456.789e200] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn adding_cells_keeps_existing_draws() {
        let small = run_experiment(&links_config(vec![16], 2), false).unwrap();
        let large = run_experiment(&links_config(vec![8, 16], 2), false).unwrap();
        let tail: Vec<Row> = large
            .into_iter()
            .filter(|r| r.n == 16)
            .map(|mut r| {
                r.cell = 0;
                r
            })
            .collect();
        assert_eq!(small, tail);
    }

    #[test]
    fn infeasible_cells_are_skipped() {
        let mut cfg = links_config(vec![8], 2);
        cfg.mechanism = ExperimentMechanism::Pbr {
            epsilon: 1.0,
            beta: 0.1,
            c_alpha: Some(1.0),
            noiseless: false,
            alpha: None,
            init: InitPolicy::First,
        };
        let rows = run_experiment(&cfg, false).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].skipped);
    }
}
