//! Run configuration: a JSON file overlaid with flags, resolved into a
//! validated chain description.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use revjuggle_core::irjmc::knutson_weights;
use revjuggle_core::numerics::{parse_rational, parse_rational_list, Rational};
use revjuggle_core::{Content, Scalar};

use crate::args::{ChainKind, CommonArgs, Format, Mode};
use crate::error::{usage, CliResult};
use crate::output::rational;

pub const DEFAULT_CUTOFF: u32 = 10;
pub const DEFAULT_STEPS: usize = 100_000;

/// A list of numbers given as `"1/2,1/3"` or as a JSON array of strings
/// and numbers.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberList {
    Text(String),
    Items(Vec<NumberItem>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberItem {
    Text(String),
    Number(serde_json::Number),
}

impl NumberList {
    fn parse(&self) -> CliResult<Vec<Rational>> {
        Ok(match self {
            NumberList::Text(t) => parse_rational_list(t)?,
            NumberList::Items(items) => items
                .iter()
                .map(|i| match i {
                    NumberItem::Text(t) => parse_rational(t),
                    NumberItem::Number(n) => parse_rational(&n.to_string()),
                })
                .collect::<revjuggle_core::Result<_>>()?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ContentInput {
    Text(String),
    Counts(Vec<u32>),
}

/// The options accepted in a config file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: Option<ChainKind>,
    pub m: Option<usize>,
    pub b: Option<usize>,
    pub content: Option<ContentInput>,
    pub x: Option<NumberList>,
    pub s: Option<NumberList>,
    pub alpha: Option<NumberList>,
    pub q: Option<u32>,
    pub knutson: Option<bool>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub burnin: Option<usize>,
    pub cutoff: Option<u32>,
    pub format: Option<Format>,
    pub cap: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Loads `--config` when given and lets every flag override it.
    pub fn from_args(args: &CommonArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(v) = &args.$field {
                    cfg.$field = Some(v.clone().into());
                })*
            };
        }
        overlay!(chain, m, b, q, mode, seed, steps, burnin, cutoff, format, cap);
        if let Some(v) = &args.content {
            cfg.content = Some(ContentInput::Text(v.clone()));
        }
        if let Some(v) = &args.x {
            cfg.x = Some(NumberList::Text(v.clone()));
        }
        if let Some(v) = &args.s {
            cfg.s = Some(NumberList::Text(v.clone()));
        }
        if let Some(v) = &args.alpha {
            cfg.alpha = Some(NumberList::Text(v.clone()));
        }
        if args.knutson {
            cfg.knutson = Some(true);
        }
        Ok(cfg)
    }

    pub fn content(&self) -> CliResult<Option<Content>> {
        Ok(match &self.content {
            None => None,
            Some(ContentInput::Text(t)) => Some(Content::parse(t)?),
            Some(ContentInput::Counts(c)) => Some(Content::new(c.clone())?),
        })
    }

    fn numbers(list: &Option<NumberList>) -> CliResult<Option<Vec<Rational>>> {
        list.as_ref().map(NumberList::parse).transpose()
    }

    pub fn knutson(&self) -> bool {
        self.knutson.unwrap_or(false)
    }

    fn require_q(&self) -> CliResult<u32> {
        match self.q {
            Some(q) if q >= 2 => Ok(q),
            Some(q) => usage(format!("--q must be at least 2, got {q}")),
            None => usage("--knutson needs --q"),
        }
    }

    /// Resolves the chain parameters. Missing parameters are an error.
    pub fn chain_params(&self) -> CliResult<ChainParams> {
        let Some(kind) = self.chain else {
            return usage("--chain is required");
        };
        self.chain_params_for(kind)
    }

    pub fn chain_params_for(&self, kind: ChainKind) -> CliResult<ChainParams> {
        let x = Self::numbers(&self.x)?;
        let s = Self::numbers(&self.s)?;
        let alpha = Self::numbers(&self.alpha)?;
        let content = self.content()?;
        let knutson_x = |b: usize| -> CliResult<Vec<Rational>> {
            Ok(knutson_weights::<Rational>(self.require_q()?, b)?.into_inner())
        };
        let positions_x = |b: Option<usize>| -> CliResult<Vec<Rational>> {
            match (&x, self.knutson(), b) {
                (Some(x), false, _) if x.is_empty() => usage("--x is empty"),
                (Some(x), false, _) => Ok(x.clone()),
                (Some(_), true, _) => usage("give either --x or --knutson, not both"),
                (None, true, Some(b)) => knutson_x(b),
                (None, true, None) => usage("--knutson needs --b or --content"),
                (None, false, _) => usage("--x is required"),
            }
        };
        let params = match kind {
            ChainKind::Rjmc => {
                let Some(m) = self.m else {
                    return usage("--m is required for rjmc");
                };
                let x = positions_x(self.b)?;
                let b = x.len() - 1;
                if self.b.is_some_and(|given| given != b) {
                    return usage(format!("--b {} does not match {} jump probabilities", self.b.unwrap_or(0), x.len()));
                }
                ChainParams::Rjmc { m, b, x }
            }
            ChainKind::Irjmc => {
                let x = positions_x(self.b)?;
                if self.b.is_some_and(|given| given + 1 != x.len()) {
                    return usage("--b does not match the number of jump probabilities");
                }
                ChainParams::Irjmc { x }
            }
            ChainKind::Mrjmc => {
                if self.knutson() {
                    return usage("--knutson applies to rjmc, irjmc, imrjmc and matrixmodel");
                }
                let Some(content) = content else {
                    return usage("--content is required for mrjmc");
                };
                let (Some(s), Some(alpha)) = (s, alpha) else {
                    return usage("--s and --alpha are required for mrjmc");
                };
                ChainParams::Mrjmc { content, s, alpha }
            }
            ChainKind::Imrjmc => {
                let content = match (content, self.b, self.knutson()) {
                    (Some(c), _, _) => c,
                    (None, Some(b), true) => Content::new(vec![1; b])?,
                    _ => return usage("--content is required for imrjmc"),
                };
                let x = positions_x(Some(content.size()))?;
                let alpha = match (alpha, self.knutson()) {
                    (Some(a), _) => a,
                    (None, true) => {
                        vec![Rational::from_ratio(1, i64::from(self.require_q()?)); content.alpha_len()]
                    }
                    (None, false) => return usage("--alpha is required for imrjmc"),
                };
                ChainParams::Imrjmc { content, x, alpha }
            }
            ChainKind::Matrixmodel => {
                let (Some(b), Some(q)) = (self.b, self.q) else {
                    return usage("--b and --q are required for matrixmodel");
                };
                ChainParams::MatrixModel { b, q }
            }
        };
        Ok(params)
    }

    pub fn mode(&self, default: Mode) -> Mode {
        self.mode.unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff.unwrap_or(DEFAULT_CUTOFF)
    }

    pub fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

/// Validated parameters of one chain. Values are exact; float runs convert
/// them once.
#[derive(Debug, Clone)]
pub enum ChainParams {
    Rjmc { m: usize, b: usize, x: Vec<Rational> },
    Irjmc { x: Vec<Rational> },
    Mrjmc { content: Content, s: Vec<Rational>, alpha: Vec<Rational> },
    Imrjmc { content: Content, x: Vec<Rational>, alpha: Vec<Rational> },
    MatrixModel { b: usize, q: u32 },
}

impl ChainParams {
    pub fn kind(&self) -> ChainKind {
        match self {
            ChainParams::Rjmc { .. } => ChainKind::Rjmc,
            ChainParams::Irjmc { .. } => ChainKind::Irjmc,
            ChainParams::Mrjmc { .. } => ChainKind::Mrjmc,
            ChainParams::Imrjmc { .. } => ChainKind::Imrjmc,
            ChainParams::MatrixModel { .. } => ChainKind::Matrixmodel,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind() {
            ChainKind::Rjmc => "rjmc",
            ChainKind::Irjmc => "irjmc",
            ChainKind::Mrjmc => "mrjmc",
            ChainKind::Imrjmc => "imrjmc",
            ChainKind::Matrixmodel => "matrixmodel",
        }
    }

    /// The parameters as JSON, values as exact strings.
    pub fn describe(&self) -> Value {
        let list = |v: &[Rational]| Value::Array(v.iter().map(rational).collect());
        let mut out = Map::new();
        out.insert("chain".into(), json!(self.name()));
        match self {
            ChainParams::Rjmc { m, b, x } => {
                out.insert("m".into(), json!(m));
                out.insert("b".into(), json!(b));
                out.insert("x".into(), list(x));
            }
            ChainParams::Irjmc { x } => {
                out.insert("b".into(), json!(x.len() - 1));
                out.insert("x".into(), list(x));
            }
            ChainParams::Mrjmc { content, s, alpha } => {
                out.insert("content".into(), json!(content.counts()));
                out.insert("s".into(), list(s));
                out.insert("alpha".into(), list(alpha));
            }
            ChainParams::Imrjmc { content, x, alpha } => {
                out.insert("content".into(), json!(content.counts()));
                out.insert("x".into(), list(x));
                out.insert("alpha".into(), list(alpha));
            }
            ChainParams::MatrixModel { b, q } => {
                out.insert("b".into(), json!(b));
                out.insert("q".into(), json!(q));
            }
        }
        Value::Object(out)
    }

    /// One-line parameter summary for reports.
    pub fn summary(&self) -> String {
        let list = |v: &[Rational]| v.iter().map(Scalar::to_text).collect::<Vec<_>>().join(",");
        match self {
            ChainParams::Rjmc { m, b, x } => format!("m={m} b={b} x={}", list(x)),
            ChainParams::Irjmc { x } => format!("b={} x={}", x.len() - 1, list(x)),
            ChainParams::Mrjmc { content, s, alpha } => {
                format!("content={content} s={} alpha={}", list(s), list(alpha))
            }
            ChainParams::Imrjmc { content, x, alpha } => {
                format!("content={content} x={} alpha={}", list(x), list(alpha))
            }
            ChainParams::MatrixModel { b, q } => format!("b={b} q={q}"),
        }
    }
}

/// The resolved run settings echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct Echo {
    pub command: &'static str,
    #[serde(flatten)]
    pub chain: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u32>,
}

impl Echo {
    pub fn new(command: &'static str, params: Option<&ChainParams>) -> Self {
        Self {
            command,
            chain: params.map(ChainParams::describe),
            mode: None,
            seed: None,
            steps: None,
            burnin: None,
            cutoff: None,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("echo serializes")
    }
}
