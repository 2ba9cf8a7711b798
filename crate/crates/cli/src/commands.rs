use std::collections::BTreeMap;
use std::fmt::Display;

use serde_json::{json, Value};

use revjuggle_core::imrjmc::ImrjmcChain;
use revjuggle_core::irjmc::IrjmcChain;
use revjuggle_core::matrixmodel::empirical_projection_check;
use revjuggle_core::mrjmc::{partition_factors, MrjmcChain};
use revjuggle_core::numerics::{seeded_rng, Rational};
use revjuggle_core::oracle::{build_matrix, EXACT_STATE_CAP, FLOAT_STATE_CAP};
use revjuggle_core::rjmc::RjmcChain;
use revjuggle_core::{
    simulate, BallTuple, BinaryWord, Error, FiniteChain, LabeledConfig,
    Multipermutation, Scalar, StationaryLaw,
};

use crate::args::{ChainKind, Format, Mode};
use crate::config::{ChainParams, Echo, RunConfig, DEFAULT_STEPS};
use crate::error::{usage, CliResult};
use crate::output::{csv_text, json_text, scalar};

/// Steps of the matrix model when `--steps` is absent.
pub const MATRIX_MODEL_STEPS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

/// A finished command: the document to write and whether it passed.
pub struct Outcome {
    pub text: String,
    pub status: Status,
}

impl Outcome {
    fn pass(text: String) -> Self {
        Self {
            text,
            status: Status::Pass,
        }
    }
}

pub fn convert<S: Scalar>(values: &[Rational]) -> Vec<S> {
    values.iter().map(S::from_rational).collect()
}

fn cap_for<S: Scalar>(cfg: &RunConfig) -> usize {
    cfg.cap
        .unwrap_or(if S::EXACT { EXACT_STATE_CAP } else { FLOAT_STATE_CAP })
}

fn check_cap(states: usize, cap: usize) -> CliResult<()> {
    if states > cap {
        return Err(Error::StateSpaceTooLarge { states, cap }.into());
    }
    Ok(())
}

fn finite_count<S: Scalar, C: FiniteChain<S>>(chain: &C, cap: usize) -> CliResult<()> {
    check_cap(chain.state_count(), cap)
}

// ---------------------------------------------------------------- stationary

struct Table {
    rows: Vec<(String, Value)>,
    /// Mass beyond the cutoff, for chains on the half-line.
    tail: Option<Value>,
    total: Value,
}

fn finite_table<S, C>(chain: &C, cap: usize) -> CliResult<Table>
where
    S: Scalar,
    C: FiniteChain<S> + StationaryLaw<S>,
{
    finite_count(chain, cap)?;
    let mut total = S::zero();
    let mut rows = Vec::new();
    for state in chain.states() {
        let p = chain.stationary(&state)?;
        total = total + p.clone();
        rows.push((state.to_string(), scalar(&p)));
    }
    Ok(Table {
        rows,
        tail: None,
        total: scalar(&total),
    })
}

fn stationary_table<S: Scalar>(params: &ChainParams, cfg: &RunConfig) -> CliResult<Table> {
    let cap = cap_for::<S>(cfg);
    let cutoff = cfg.cutoff();
    match params {
        ChainParams::Rjmc { m, b, x } => finite_table(&RjmcChain::<S>::new(*m, *b, convert(x))?, cap),
        ChainParams::Mrjmc { content, s, alpha } => finite_table(
            &MrjmcChain::<S>::new(content.clone(), convert(s), convert(alpha))?,
            cap,
        ),
        ChainParams::Irjmc { x } => {
            let chain = IrjmcChain::<S>::new(convert(x))?;
            let states = chain.window_states(cutoff);
            check_cap(states.len(), cap)?;
            let truncated = chain.truncated_partition(cutoff)?;
            let tail = truncated.tail / chain.partition()?;
            half_line_table(&chain, states, tail)
        }
        ChainParams::Imrjmc { content, x, alpha } => {
            let chain = ImrjmcChain::<S>::new(content.clone(), convert(x), convert(alpha))?;
            let states = chain.window_states(cutoff);
            check_cap(states.len(), cap)?;
            let truncated = chain.truncated_partition(cutoff)?;
            let tail = truncated.tail / chain.partition()?;
            half_line_table(&chain, states, tail)
        }
        ChainParams::MatrixModel { .. } => {
            usage("the matrix model has no closed form here; use the matrixmodel command")
        }
    }
}

fn half_line_table<S, C>(chain: &C, states: Vec<C::State>, tail: S) -> CliResult<Table>
where
    S: Scalar,
    C: StationaryLaw<S>,
{
    let mut total = tail.clone();
    let mut rows = Vec::with_capacity(states.len());
    for state in states {
        let p = chain.stationary(&state)?;
        total = total + p.clone();
        rows.push((state.to_string(), scalar(&p)));
    }
    Ok(Table {
        rows,
        tail: Some(scalar(&tail)),
        total: scalar(&total),
    })
}

pub fn stationary(cfg: &RunConfig) -> CliResult<Outcome> {
    let params = cfg.chain_params()?;
    let mode = cfg.mode(Mode::Exact);
    let table = match mode {
        Mode::Exact => stationary_table::<Rational>(&params, cfg)?,
        Mode::Float => stationary_table::<f64>(&params, cfg)?,
    };
    let mut echo = Echo::new("stationary", Some(&params));
    echo.mode = Some(mode);
    if table.tail.is_some() {
        echo.cutoff = Some(cfg.cutoff());
    }
    let text = match cfg.format(Format::Json) {
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|(s, p)| json!({ "state": s, "probability": p }))
                .collect();
            let mut doc = json!({
                "config": echo.to_value(),
                "states": rows.len(),
                "rows": rows,
                "total": table.total,
            });
            if let Some(tail) = &table.tail {
                doc["tail"] = tail.clone();
            }
            json_text(&doc)?
        }
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|(s, p)| vec![s.clone(), value_text(p)])
                .collect();
            if let Some(tail) = &table.tail {
                rows.push(vec![format!("beyond {}", cfg.cutoff()), value_text(tail)]);
            }
            csv_text(&["state", "probability"], &rows)?
        }
    };
    Ok(Outcome::pass(text))
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

// ----------------------------------------------------------------- partition

fn partition_doc<S: Scalar>(params: &ChainParams) -> CliResult<(Vec<(String, Value)>, Value, Vec<(&'static str, Value)>)> {
    match params {
        ChainParams::Irjmc { x } => {
            let chain = IrjmcChain::<S>::new(convert(x))?;
            let factors = chain
                .partition_factors()?
                .iter()
                .enumerate()
                .map(|(i, f)| (format!("1/zbar_{i}"), scalar(f)))
                .collect();
            Ok((factors, scalar(&chain.partition()?), vec![]))
        }
        ChainParams::Mrjmc { content, s, alpha } => {
            let chain = MrjmcChain::<S>::new(content.clone(), convert(s), convert(alpha))?;
            let factors = partition_factors(content, chain.alpha())
                .iter()
                .map(|f| (format!("Z_{{{},{}}}", f.smaller, f.count), scalar(&f.value)))
                .collect();
            Ok((factors, scalar(&chain.partition()), vec![]))
        }
        ChainParams::Imrjmc { content, x, alpha } => {
            let chain = ImrjmcChain::<S>::new(content.clone(), convert(x), convert(alpha))?;
            let split = chain.partition_split()?;
            let mut factors: Vec<(String, Value)> = split
                .content_factors
                .iter()
                .map(|f| (format!("Z_{{{},{}}}", f.smaller, f.count), scalar(&f.value)))
                .collect();
            factors.extend(
                split
                    .position_factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| (format!("1/zbar_{i}"), scalar(f))),
            );
            let parts = vec![
                ("content_part", scalar(&split.content_part())),
                ("position_part", scalar(&split.position_part())),
            ];
            Ok((factors, scalar(&split.total()), parts))
        }
        ChainParams::Rjmc { .. } => {
            usage("the rjmc stationary formula is already normalized; partition applies to irjmc, mrjmc and imrjmc")
        }
        ChainParams::MatrixModel { .. } => usage("partition applies to irjmc, mrjmc and imrjmc"),
    }
}

pub fn partition(cfg: &RunConfig) -> CliResult<Outcome> {
    let params = cfg.chain_params()?;
    let mode = cfg.mode(Mode::Exact);
    let (factors, value, parts) = match mode {
        Mode::Exact => partition_doc::<Rational>(&params)?,
        Mode::Float => partition_doc::<f64>(&params)?,
    };
    let mut echo = Echo::new("partition", Some(&params));
    echo.mode = Some(mode);
    let text = match cfg.format(Format::Json) {
        Format::Json => {
            let mut doc = json!({
                "config": echo.to_value(),
                "value": value,
                "factors": factors
                    .iter()
                    .map(|(n, v)| json!({ "factor": n, "value": v }))
                    .collect::<Vec<_>>(),
            });
            for (name, v) in parts {
                doc[name] = v;
            }
            json_text(&doc)?
        }
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = factors
                .iter()
                .map(|(n, v)| vec![n.clone(), value_text(v)])
                .collect();
            rows.push(vec!["total".into(), value_text(&value)]);
            csv_text(&["factor", "value"], &rows)?
        }
    };
    Ok(Outcome::pass(text))
}

// -------------------------------------------------------------------- matrix

fn matrix_text<S, C>(chain: &C, cap: usize, format: Format, echo: &Echo) -> CliResult<String>
where
    S: Scalar,
    C: FiniteChain<S>,
{
    finite_count(chain, cap)?;
    let m = build_matrix(chain, cap)?;
    match format {
        Format::Csv => Ok(m.to_csv()?),
        Format::Json => {
            let entries: Vec<Value> = m
                .rows()
                .iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().map(move |(j, p)| json!([i, j, scalar(p)])))
                .collect();
            let doc = json!({
                "config": echo.to_value(),
                "states": m.states().iter().map(ToString::to_string).collect::<Vec<_>>(),
                "nonzeros": m.nonzeros(),
                "entries": entries,
            });
            json_text(&doc)
        }
    }
}

fn matrix_for<S: Scalar>(params: &ChainParams, cfg: &RunConfig, echo: &Echo) -> CliResult<String> {
    let cap = cap_for::<S>(cfg);
    let format = cfg.format(Format::Csv);
    match params {
        ChainParams::Rjmc { m, b, x } => {
            matrix_text(&RjmcChain::<S>::new(*m, *b, convert(x))?, cap, format, echo)
        }
        ChainParams::Mrjmc { content, s, alpha } => matrix_text(
            &MrjmcChain::<S>::new(content.clone(), convert(s), convert(alpha))?,
            cap,
            format,
            echo,
        ),
        _ => usage("matrix export needs a finite chain (rjmc or mrjmc)"),
    }
}

pub fn matrix(cfg: &RunConfig) -> CliResult<Outcome> {
    let params = cfg.chain_params()?;
    let mode = cfg.mode(Mode::Exact);
    let mut echo = Echo::new("matrix", Some(&params));
    echo.mode = Some(mode);
    let text = match mode {
        Mode::Exact => matrix_for::<Rational>(&params, cfg, &echo)?,
        Mode::Float => matrix_for::<f64>(&params, cfg, &echo)?,
    };
    Ok(Outcome::pass(text))
}

// ------------------------------------------------------------------ simulate

struct Run<'a> {
    steps: usize,
    burnin: usize,
    seed: u64,
    format: Format,
    echo: &'a Echo,
}

/// Samples a trajectory; the JSON summary compares occupancy after the
/// burn-in with the stationary law. The total variation distance counts
/// the law's mass outside the listed states in full.
fn simulate_chain<S, C>(
    chain: &C,
    initial: C::State,
    listed: Vec<C::State>,
    run: &Run<'_>,
) -> CliResult<String>
where
    S: Scalar,
    C: StationaryLaw<S>,
    C::State: Display,
{
    let path = simulate(chain, initial, run.steps, &mut seeded_rng(run.seed))?;
    if run.format == Format::Csv {
        let rows: Vec<Vec<String>> = path
            .iter()
            .enumerate()
            .map(|(i, s)| vec![i.to_string(), s.to_string()])
            .collect();
        return csv_text(&["step", "state"], &rows);
    }
    let kept = &path[run.burnin + 1..];
    let samples = kept.len() as i64;
    let mut counts: BTreeMap<C::State, i64> = listed.into_iter().map(|s| (s, 0)).collect();
    for s in kept {
        *counts.entry(s.clone()).or_insert(0) += 1;
    }
    // the law is unavailable for chains built only for simulation
    let comparable = counts
        .keys()
        .next()
        .map(|s| chain.stationary(s).is_ok())
        .unwrap_or(false);
    let mut rows = Vec::with_capacity(counts.len());
    let mut distance = S::zero();
    let mut covered = S::zero();
    for (state, &count) in &counts {
        let freq = S::from_ratio(count, samples);
        let mut row = json!({ "state": state.to_string(), "count": count, "frequency": scalar(&freq) });
        if comparable {
            let p = chain.stationary(state)?;
            distance = distance + (freq - p.clone()).abs_value();
            covered = covered + p.clone();
            row["stationary"] = scalar(&p);
        }
        rows.push(row);
    }
    let mut doc = json!({
        "config": run.echo.to_value(),
        "samples": samples,
        "visited": counts.values().filter(|&&c| c > 0).count(),
        "distribution": rows,
    });
    if comparable {
        let outside = S::one() - covered;
        let tv = (distance + outside) / S::from_int(2);
        doc["tv_distance"] = scalar(&tv);
    }
    json_text(&doc)
}

fn simulate_for<S: Scalar>(params: &ChainParams, cfg: &RunConfig, run: &Run<'_>) -> CliResult<String> {
    let cap = cap_for::<S>(cfg);
    let listed = |count: usize| count <= cap;
    match params {
        ChainParams::Rjmc { m, b, x } => {
            let chain = RjmcChain::<S>::new(*m, *b, convert(x))?;
            let all = if listed(chain.state_count()) { chain.states() } else { vec![] };
            simulate_chain(&chain, BinaryWord::zeros(*m), all, run)
        }
        ChainParams::Mrjmc { content, s, alpha } => {
            let chain = MrjmcChain::<S>::new(content.clone(), convert(s), convert(alpha))?;
            let all = if listed(chain.state_count()) { chain.states() } else { vec![] };
            simulate_chain(&chain, Multipermutation::sorted(content), all, run)
        }
        ChainParams::Irjmc { x } => {
            let chain = IrjmcChain::<S>::for_simulation(convert(x))?;
            simulate_chain(&chain, BallTuple::packed(chain.b()), vec![], run)
        }
        ChainParams::Imrjmc { content, x, alpha } => {
            let chain = ImrjmcChain::<S>::permissive(content.clone(), convert(x), convert(alpha))?;
            let initial = LabeledConfig::new(
                Multipermutation::sorted(content),
                BallTuple::packed(content.size()),
            )?;
            simulate_chain(&chain, initial, vec![], run)
        }
        ChainParams::MatrixModel { .. } => unreachable!("handled by the matrix model command"),
    }
}

pub fn simulate_cmd(cfg: &RunConfig) -> CliResult<Outcome> {
    let params = cfg.chain_params()?;
    if params.kind() == ChainKind::Matrixmodel {
        return matrix_model(cfg);
    }
    let mode = cfg.mode(Mode::Float);
    let steps = cfg.steps.unwrap_or(DEFAULT_STEPS);
    let burnin = cfg.burnin.unwrap_or(0);
    if burnin >= steps {
        return usage(format!("--burnin {burnin} must be below --steps {steps}"));
    }
    let mut echo = Echo::new("simulate", Some(&params));
    echo.mode = Some(mode);
    echo.seed = Some(cfg.seed());
    echo.steps = Some(steps);
    echo.burnin = Some(burnin);
    let run = Run {
        steps,
        burnin,
        seed: cfg.seed(),
        format: cfg.format(Format::Json),
        echo: &echo,
    };
    let text = match mode {
        Mode::Exact => simulate_for::<Rational>(&params, cfg, &run)?,
        Mode::Float => simulate_for::<f64>(&params, cfg, &run)?,
    };
    Ok(Outcome::pass(text))
}

// -------------------------------------------------------------- matrix model

pub fn matrix_model(cfg: &RunConfig) -> CliResult<Outcome> {
    let params = cfg.chain_params_for(ChainKind::Matrixmodel)?;
    let ChainParams::MatrixModel { b, q } = params else {
        unreachable!("resolved as a matrix model");
    };
    let steps = cfg.steps.unwrap_or(MATRIX_MODEL_STEPS);
    let report = empirical_projection_check(b, q, steps, cfg.seed())?;
    let mut echo = Echo::new("matrixmodel", Some(&params));
    echo.seed = Some(cfg.seed());
    echo.steps = Some(steps);
    let passed = report.passed();
    let text = match cfg.format(Format::Json) {
        Format::Json => json_text(&json!({
            "config": echo.to_value(),
            "passed": passed,
            "report": report,
        }))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .checks()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.observed.to_string(),
                        c.trials.to_string(),
                        c.expected.clone(),
                        format!("{:.4}", c.z),
                    ]
                })
                .collect();
            csv_text(&["check", "observed", "trials", "expected", "z"], &rows)?
        }
    };
    Ok(Outcome {
        text,
        status: if passed { Status::Pass } else { Status::Fail },
    })
}
