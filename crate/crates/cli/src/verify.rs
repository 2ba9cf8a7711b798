//! The `verify` command: exact checks of every closed form against the
//! kernels it describes.
//!
//! With `--perturb` the closed forms are evaluated at altered parameters
//! while the kernels keep the real ones, so every formula check must fail.

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use revjuggle_core::imrjmc::{
    frozen_labels_match_single_species, knutson_chain, knutson_stationary as labeled_knutson,
    packed_class_labels_match_finite, ImrjmcChain,
};
use revjuggle_core::irjmc::{knutson_stationary, knutson_weights, IrjmcChain};
use revjuggle_core::mrjmc::{partition, partition_brute_force, q_multinomial, MrjmcChain};
use revjuggle_core::numerics::{draw, seeded_rng, Rational, SeededRng};
use revjuggle_core::oracle::{build_matrix, solve_stationary, EXACT_STATE_CAP};
use revjuggle_core::rjmc::RjmcChain;
use revjuggle_core::states::compositions;
use revjuggle_core::{Content, FiniteChain, Scalar, StationaryLaw};

use crate::args::{ChainKind, Format, Mode};
use crate::commands::{Outcome, Status};
use crate::config::{ChainParams, Echo, NumberList, RunConfig};
use crate::error::{usage, CliResult};
use crate::output::{csv_text, json_text, rational};

/// Largest rjmc state space for which matrix powers are computed.
pub const ULTRAFAST_STATE_CAP: usize = 2000;
/// Largest enriched state space for the lumping check.
pub const LUMPING_STATE_CAP: usize = 5000;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub parameters: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_residual: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

struct Checks {
    parameters: String,
    list: Vec<Check>,
}

impl Checks {
    fn new(parameters: String) -> Self {
        Self {
            parameters,
            list: Vec::new(),
        }
    }

    fn residual(&mut self, name: &str, residual: Rational) {
        self.list.push(Check {
            name: name.into(),
            parameters: self.parameters.clone(),
            passed: residual == Rational::zero(),
            max_residual: Some(rational(&residual)),
            detail: None,
        });
    }

    fn flag(&mut self, name: &str, passed: bool, detail: Option<String>) {
        self.list.push(Check {
            name: name.into(),
            parameters: self.parameters.clone(),
            passed,
            max_residual: None,
            detail,
        });
    }
}

fn max_abs<I: IntoIterator<Item = Rational>>(values: I) -> Rational {
    values
        .into_iter()
        .map(|v| v.abs_value())
        .fold(Rational::zero(), |a, v| if v > a { v } else { a })
}

fn cap(cfg: &RunConfig) -> usize {
    cfg.cap.unwrap_or(EXACT_STATE_CAP)
}

// ------------------------------------------------------------- perturbation

/// Moves half of `x_0` to `x_b`, or half of `x_b` to `x_0` when `x_0 = 0`.
fn perturb_x(x: &[Rational]) -> Vec<Rational> {
    let mut y = x.to_vec();
    let b = y.len() - 1;
    if b == 0 {
        return y;
    }
    let half = Rational::from_ratio(1, 2);
    let (from, to) = if y[0] > Rational::zero() { (0, b) } else { (b, 0) };
    let moved = y[from].clone() * half;
    y[from] = y[from].clone() - moved.clone();
    y[to] = y[to].clone() + moved;
    y
}

fn perturb_alpha(alpha: &[Rational]) -> Vec<Rational> {
    let mut a = alpha.to_vec();
    if let Some(first) = a.first_mut() {
        *first = first.clone() * Rational::from_ratio(1, 2);
    }
    a
}

/// The parameters at which closed forms are evaluated.
fn candidate(params: &ChainParams, perturb: bool) -> ChainParams {
    if !perturb {
        return params.clone();
    }
    match params {
        ChainParams::Rjmc { m, b, x } => ChainParams::Rjmc {
            m: *m,
            b: *b,
            x: perturb_x(x),
        },
        ChainParams::Irjmc { x } => ChainParams::Irjmc { x: perturb_x(x) },
        ChainParams::Mrjmc { content, s, alpha } => ChainParams::Mrjmc {
            content: content.clone(),
            s: s.clone(),
            alpha: perturb_alpha(alpha),
        },
        ChainParams::Imrjmc { content, x, alpha } if alpha.is_empty() => ChainParams::Imrjmc {
            content: content.clone(),
            x: perturb_x(x),
            alpha: alpha.clone(),
        },
        ChainParams::Imrjmc { content, x, alpha } => ChainParams::Imrjmc {
            content: content.clone(),
            x: x.clone(),
            alpha: perturb_alpha(alpha),
        },
        ChainParams::MatrixModel { .. } => params.clone(),
    }
}

// ------------------------------------------------------------ finite chains

/// Formula against the oracle's solve, the balance equations and the
/// normalization, with the closed form taken from `law`.
fn finite_checks<C, L>(checks: &mut Checks, prefix: &str, chain: &C, law: &L, cap: usize) -> CliResult<()>
where
    C: FiniteChain<Rational>,
    L: StationaryLaw<Rational, State = C::State>,
{
    let matrix = build_matrix(chain, cap)?;
    let oracle = solve_stationary(&matrix)?;
    let formula: Vec<Rational> = matrix
        .states()
        .iter()
        .map(|s| law.stationary(s))
        .collect::<revjuggle_core::Result<_>>()?;
    checks.residual(
        &format!("{prefix}.formula_vs_oracle"),
        max_abs(formula.iter().zip(oracle.weights()).map(|(f, o)| f.clone() - o.clone())),
    );
    let image = matrix.left_multiply(&formula);
    checks.residual(
        &format!("{prefix}.master_equation"),
        max_abs(image.into_iter().zip(&formula).map(|(a, f)| a - f.clone())),
    );
    let total = formula.iter().fold(Rational::zero(), |a, f| a + f.clone());
    checks.residual(&format!("{prefix}.normalization"), total - Rational::one());
    Ok(())
}

fn rjmc_checks(params: &ChainParams, cand: &ChainParams, cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let (ChainParams::Rjmc { m, b, x }, ChainParams::Rjmc { x: x_law, .. }) = (params, cand) else {
        unreachable!("rjmc parameters");
    };
    let chain = RjmcChain::new(*m, *b, x.clone())?;
    let law = RjmcChain::new(*m, *b, x_law.clone())?;
    let mut checks = Checks::new(params.summary());
    finite_checks(&mut checks, "rjmc", &chain, &law, cap(cfg))?;
    let states = chain.state_count();
    if states <= ULTRAFAST_STATE_CAP {
        let report = chain.verify_ultrafast(ULTRAFAST_STATE_CAP)?;
        checks.flag(
            "rjmc.ultrafast",
            report.passed(),
            Some(format!(
                "M^{} = M^{}: {}; rows equal: {}; rows equal the law: {}",
                report.steps + 1,
                report.steps,
                report.idempotent,
                report.rows_equal,
                report.rows_match_stationary
            )),
        );
    }
    let enriched = (*b as f64 + 1.0).powi(*m as i32);
    if *b >= 1 && enriched <= LUMPING_STATE_CAP as f64 {
        let report = chain.verify_lumping(LUMPING_STATE_CAP)?;
        log::info!(
            "lumping {} enriched states onto {}",
            report.enriched_states,
            report.states
        );
        checks.residual(
            "rjmc.lumping",
            max_abs([report.kernel_residual.clone(), report.stationary_residual.clone()]),
        );
    }
    if x[0] > Rational::zero() {
        let mut worst = Rational::zero();
        for v in chain.states().iter().filter(|v| v.bits()[0] == 0) {
            let pair = law.sum_pair_identity(v)?;
            worst = max_abs([worst, pair.lhs - pair.rhs]);
        }
        checks.residual("rjmc.pair_identity", worst);
    }
    Ok(checks.list)
}

fn mrjmc_checks(params: &ChainParams, cand: &ChainParams, cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let (ChainParams::Mrjmc { content, s, alpha }, ChainParams::Mrjmc { alpha: alpha_law, .. }) = (params, cand)
    else {
        unreachable!("mrjmc parameters");
    };
    let chain = MrjmcChain::new(content.clone(), s.clone(), alpha.clone())?;
    let law = MrjmcChain::new(content.clone(), s.clone(), alpha_law.clone())?;
    let mut checks = Checks::new(params.summary());
    finite_checks(&mut checks, "mrjmc", &chain, &law, cap(cfg))?;

    let index = chain.refinement_index()?;
    let b = content.size();
    let mut per_start = Rational::zero();
    let mut per_jump = Rational::zero();
    for tau in chain.states() {
        let table = law.refinement_table(&tau)?;
        for t in 1..=b {
            let mut total = Rational::zero();
            for r in 1..=t {
                let group = index.group(&tau, t, r);
                per_jump = max_abs([per_jump, group.clone() - table[t - 1][r - 1].clone()]);
                total = total + group;
            }
            let target = s[t - 1].clone() * law.weight(&tau)?;
            per_start = max_abs([per_start, total - target]);
        }
    }
    checks.residual("mrjmc.refinement_per_start", per_start);
    checks.residual("mrjmc.refinement_per_jump", per_jump);

    checks.residual(
        "mrjmc.partition_recursion",
        partition(content, alpha_law) - partition_brute_force(content, alpha)?,
    );
    for q in [2i64, 3] {
        let qs = vec![Rational::from_int(q); content.alpha_len()];
        checks.residual(
            &format!("mrjmc.q_multinomial_q{q}"),
            partition(content, &qs) - q_multinomial(content, &Rational::from_int(q)),
        );
    }

    // the law does not depend on s: rotate it and solve again
    if b >= 2 {
        let mut rotated = s.clone();
        rotated.rotate_left(1);
        if rotated[b - 1] > Rational::zero() {
            let other = MrjmcChain::new(content.clone(), rotated, alpha.clone())?;
            let first = solve_stationary(&build_matrix(&chain, cap(cfg))?)?;
            let second = solve_stationary(&build_matrix(&other, cap(cfg))?)?;
            checks.residual(
                "mrjmc.s_independence",
                max_abs(
                    first
                        .weights()
                        .iter()
                        .zip(second.weights())
                        .map(|(a, b)| a.clone() - b.clone()),
                ),
            );
        }
    }
    Ok(checks.list)
}

// -------------------------------------------------------- half-line chains

fn irjmc_checks(params: &ChainParams, cand: &ChainParams, cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let (ChainParams::Irjmc { x }, ChainParams::Irjmc { x: x_law }) = (params, cand) else {
        unreachable!("irjmc parameters");
    };
    let window = cfg.cutoff();
    let chain = IrjmcChain::new(x.clone())?;
    let law = IrjmcChain::new(x_law.clone())?;
    let mut checks = Checks::new(format!("{} window={window}", params.summary()));
    checks.residual(
        "irjmc.master_equation",
        max_abs(chain.master_residuals_of(&law, window)?.into_iter().map(|(_, r)| r)),
    );
    checks.residual(
        "irjmc.truncated_partition",
        chain.truncated_partition(window)?.total() - law.partition()?,
    );
    let starts = chain.window_states(chain.b() as u32 + 2);
    let mut worst = Rational::zero();
    for start in starts.iter().take(6) {
        worst = max_abs([worst, chain.return_probability(start)? - law.return_probability_formula()]);
    }
    checks.residual("irjmc.return_probability", worst);
    if chain.b() >= 2 {
        let prefix_chain = chain.forget_last_ball()?;
        let mut worst = Rational::zero();
        for prefix in prefix_chain.window_states(window.saturating_sub(1)) {
            worst = max_abs([
                worst,
                prefix_chain.stationary(&prefix)? - law.marginal_without_last(&prefix)?,
            ]);
        }
        checks.residual("irjmc.forget_last_ball", worst);
    }
    Ok(checks.list)
}

fn imrjmc_checks(params: &ChainParams, cand: &ChainParams, cfg: &RunConfig) -> CliResult<Vec<Check>> {
    let (ChainParams::Imrjmc { content, x, alpha }, ChainParams::Imrjmc { x: x_law, alpha: alpha_law, .. }) =
        (params, cand)
    else {
        unreachable!("imrjmc parameters");
    };
    let window = cfg.cutoff().min(content.size() as u32 + 5);
    let chain = ImrjmcChain::new(content.clone(), x.clone(), alpha.clone())?;
    let law = ImrjmcChain::new(content.clone(), x_law.clone(), alpha_law.clone())?;
    let mut checks = Checks::new(format!("{} window={window}", params.summary()));
    checks.residual(
        "imrjmc.master_equation",
        max_abs(chain.master_residuals_of(&law, window)?.into_iter().map(|(_, r)| r)),
    );
    checks.residual(
        "imrjmc.truncated_partition",
        chain.truncated_partition(window)?.total() - law.partition()?,
    );
    let split = law.partition_split()?;
    checks.residual(
        "imrjmc.partition_split",
        max_abs([
            split.content_part() - partition(content, alpha),
            split.position_part() - chain.positions()?.partition()?,
        ]),
    );
    let reduction_window = content.size() as u32 + 3;
    checks.flag(
        "imrjmc.frozen_labels",
        frozen_labels_match_single_species(content, x, reduction_window)?,
        None,
    );
    let rest = Rational::one() - x[0].clone();
    let s: Vec<Rational> = x[1..].iter().map(|v| v.clone() / rest.clone()).collect();
    checks.flag(
        "imrjmc.packed_class_labels",
        packed_class_labels_match_finite(content, &s, alpha, reduction_window)?,
        None,
    );
    Ok(checks.list)
}

// ------------------------------------------------------------------ Knutson

fn knutson_checks(q: u32, b: usize, window: u32, perturb: bool) -> CliResult<Vec<Check>> {
    let mut checks = Checks::new(format!("q={q} b={b} window={window}"));
    // a perturbed run evaluates the closed forms at q + 1
    let q_law = if perturb { q + 1 } else { q };
    let chain = IrjmcChain::new(knutson_weights::<Rational>(q, b)?.into_inner())?;
    checks.residual(
        "irjmc.knutson",
        max_abs(
            chain
                .window_states(window)
                .iter()
                .map(|n| Ok(chain.stationary(n)? - knutson_stationary::<Rational>(q_law, n)))
                .collect::<revjuggle_core::Result<Vec<_>>>()?,
        ),
    );
    let labeled = knutson_chain::<Rational>(q, b)?;
    let labeled_window = window.min(b as u32 + 4);
    let states = labeled.window_states(labeled_window);
    checks.residual(
        "imrjmc.knutson",
        max_abs(
            states
                .iter()
                .map(|c| Ok(labeled.stationary(c)? - labeled_knutson::<Rational>(q_law, c)))
                .collect::<revjuggle_core::Result<Vec<_>>>()?,
        ),
    );
    Ok(checks.list)
}

// -------------------------------------------------------------------- suite

fn checks_for(params: &ChainParams, cfg: &RunConfig, perturb: bool) -> CliResult<Vec<Check>> {
    let cand = candidate(params, perturb);
    match params.kind() {
        ChainKind::Rjmc => rjmc_checks(params, &cand, cfg),
        ChainKind::Irjmc => irjmc_checks(params, &cand, cfg),
        ChainKind::Mrjmc => mrjmc_checks(params, &cand, cfg),
        ChainKind::Imrjmc => imrjmc_checks(params, &cand, cfg),
        ChainKind::Matrixmodel => usage("the matrix model is checked by the matrixmodel command"),
    }
}

fn rjmc_params(rng: &mut SeededRng, m: usize, b: usize) -> ChainParams {
    ChainParams::Rjmc {
        m,
        b,
        x: draw::distribution(rng, b + 1),
    }
}

/// Small instances of every chain with parameters drawn from the seed.
fn default_suite(seed: u64) -> CliResult<Vec<ChainParams>> {
    let mut rng = seeded_rng(seed);
    let mut chains = Vec::new();
    for m in 1..=5 {
        for b in 0..=m.min(3) {
            chains.push(rjmc_params(&mut rng, m, b));
        }
    }
    for b in 1..=3 {
        chains.push(ChainParams::Irjmc {
            x: draw::distribution(&mut rng, b + 1),
        });
    }
    for b in 1..=3 {
        for counts in compositions(b) {
            let content = Content::new(counts)?;
            chains.push(ChainParams::Mrjmc {
                s: draw::distribution(&mut rng, b),
                alpha: draw::open_unit_vec(&mut rng, content.alpha_len()),
                content: content.clone(),
            });
            chains.push(ChainParams::Imrjmc {
                x: draw::distribution(&mut rng, b + 1),
                alpha: draw::open_unit_vec(&mut rng, content.alpha_len()),
                content,
            });
        }
    }
    Ok(chains)
}

fn list_text(values: &[Rational]) -> NumberList {
    NumberList::Text(values.iter().map(Scalar::to_text).collect::<Vec<_>>().join(","))
}

/// Draws whichever of `x`, `s` and `alpha` the configuration leaves out.
fn fill_missing(cfg: &RunConfig, kind: ChainKind) -> CliResult<RunConfig> {
    let mut filled = cfg.clone();
    let mut rng = seeded_rng(cfg.seed());
    let needs_x = filled.x.is_none() && !filled.knutson();
    match kind {
        ChainKind::Rjmc | ChainKind::Irjmc if needs_x => {
            let Some(b) = cfg.b else {
                return usage("--b is required when --x is absent");
            };
            filled.x = Some(list_text(&draw::distribution(&mut rng, b + 1)));
        }
        ChainKind::Mrjmc | ChainKind::Imrjmc => {
            let Some(content) = cfg.content()? else {
                return usage("--content is required");
            };
            let b = content.size();
            if kind == ChainKind::Mrjmc && filled.s.is_none() {
                filled.s = Some(list_text(&draw::distribution(&mut rng, b)));
            }
            if kind == ChainKind::Imrjmc && needs_x {
                filled.x = Some(list_text(&draw::distribution(&mut rng, b + 1)));
            }
            if filled.alpha.is_none() && !filled.knutson() {
                filled.alpha = Some(list_text(&draw::open_unit_vec(&mut rng, content.alpha_len())));
            }
        }
        _ => {}
    }
    Ok(filled)
}

pub fn verify(cfg: &RunConfig, perturb: bool) -> CliResult<Outcome> {
    if cfg.mode(Mode::Exact) == Mode::Float {
        return usage("verify runs in exact arithmetic only");
    }
    let mut checks = Vec::new();
    let echo = match cfg.chain {
        Some(kind) => {
            let params = fill_missing(cfg, kind)?.chain_params_for(kind)?;
            checks.extend(checks_for(&params, cfg, perturb)?);
            if cfg.knutson() && matches!(kind, ChainKind::Irjmc | ChainKind::Imrjmc) {
                let b = match &params {
                    ChainParams::Irjmc { x } => x.len() - 1,
                    ChainParams::Imrjmc { content, .. } => content.size(),
                    _ => unreachable!("half-line chain"),
                };
                let q = cfg.q.unwrap_or(2);
                if is_knutson(&params, q) {
                    checks.extend(knutson_checks(q, b, cfg.cutoff(), perturb)?);
                }
            }
            Echo::new("verify", Some(&params))
        }
        None => {
            for params in default_suite(cfg.seed())? {
                checks.extend(checks_for(&params, cfg, perturb)?);
            }
            for q in [2, 3] {
                for b in 1..=3 {
                    checks.extend(knutson_checks(q, b, cfg.cutoff(), perturb)?);
                }
            }
            Echo::new("verify", None)
        }
    };
    let mut echo = echo;
    echo.seed = Some(cfg.seed());
    echo.cutoff = Some(cfg.cutoff());
    let mut config = echo.to_value();
    config["perturb"] = json!(perturb);

    let failures = checks.iter().filter(|c| !c.passed).count();
    for c in checks.iter().filter(|c| !c.passed) {
        log::warn!("check {} failed at {}", c.name, c.parameters);
    }
    let passed = failures == 0;
    let text = match cfg.format(Format::Json) {
        Format::Json => json_text(&json!({
            "config": config,
            "checks": checks,
            "total": checks.len(),
            "failures": failures,
            "passed": passed,
        }))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.parameters.clone(),
                        c.passed.to_string(),
                        c.max_residual
                            .as_ref()
                            .map(|v| v.as_str().unwrap_or_default().to_string())
                            .unwrap_or_default(),
                        c.detail.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_text(&["check", "parameters", "passed", "max_residual", "detail"], &rows)?
        }
    };
    Ok(Outcome {
        text,
        status: if passed { Status::Pass } else { Status::Fail },
    })
}

/// True when the chain uses the matrix-model parameters for `q`.
fn is_knutson(params: &ChainParams, q: u32) -> bool {
    let weights = |b: usize| knutson_weights::<Rational>(q, b).map(|w| w.into_inner()).ok();
    match params {
        ChainParams::Irjmc { x } => weights(x.len() - 1).as_ref() == Some(x),
        ChainParams::Imrjmc { content, x, alpha } => {
            content.counts().iter().all(|&c| c == 1)
                && weights(content.size()).as_ref() == Some(x)
                && alpha.iter().all(|a| *a == Rational::from_ratio(1, i64::from(q)))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perturbed_x_stays_a_distribution() {
        let x = vec![Rational::from_ratio(1, 2), Rational::from_ratio(1, 2)];
        let y = perturb_x(&x);
        assert_eq!(y, vec![Rational::from_ratio(1, 4), Rational::from_ratio(3, 4)]);
        let z = perturb_x(&[Rational::zero(), Rational::one()]);
        assert_eq!(z, vec![Rational::from_ratio(1, 2), Rational::from_ratio(1, 2)]);
    }

    #[test]
    fn suite_is_reproducible() {
        let a: Vec<String> = default_suite(7).unwrap().iter().map(ChainParams::summary).collect();
        let b: Vec<String> = default_suite(7).unwrap().iter().map(ChainParams::summary).collect();
        assert_eq!(a, b);
        assert!(a.len() > 20);
    }
}
