//! The turbine's parameter universe.
//!
//! Parameters are grouped into IEC 61850-style logical nodes. The catalog is
//! loaded from a plain-text table (see `data/catalog.tsv`); the built-in table
//! ships with the crate and can be replaced at startup with [`Catalog::from_file`].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_TABLE: &str = include_str!("../data/catalog.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LogicalNode {
    Wmet,
    Wrot,
    Wyaw,
    Wtow,
    Wtrm,
    Wtur,
    Wgen,
    Wcnv,
    Wtrf,
    Wstr,
    Wppd,
    Wavl,
}

impl LogicalNode {
    pub const ALL: [LogicalNode; 12] = [
        LogicalNode::Wmet,
        LogicalNode::Wrot,
        LogicalNode::Wyaw,
        LogicalNode::Wtow,
        LogicalNode::Wtrm,
        LogicalNode::Wtur,
        LogicalNode::Wgen,
        LogicalNode::Wcnv,
        LogicalNode::Wtrf,
        LogicalNode::Wstr,
        LogicalNode::Wppd,
        LogicalNode::Wavl,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LogicalNode::Wmet => "WMET",
            LogicalNode::Wrot => "WROT",
            LogicalNode::Wyaw => "WYAW",
            LogicalNode::Wtow => "WTOW",
            LogicalNode::Wtrm => "WTRM",
            LogicalNode::Wtur => "WTUR",
            LogicalNode::Wgen => "WGEN",
            LogicalNode::Wcnv => "WCNV",
            LogicalNode::Wtrf => "WTRF",
            LogicalNode::Wstr => "WSTR",
            LogicalNode::Wppd => "WPPD",
            LogicalNode::Wavl => "WAVL",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            LogicalNode::Wmet => "met-ocean conditions: wind, waves, temperature",
            LogicalNode::Wrot => "rotor: blade pitch and rotor speed",
            LogicalNode::Wyaw => "yaw angle and yaw system status",
            LogicalNode::Wtow => "six degree-of-freedom tower motion",
            LogicalNode::Wtrm => "drive train: shaft bearing, brakes, gearbox oil",
            LogicalNode::Wtur => "turbine production, temperatures and operation codes",
            LogicalNode::Wgen => "generator status and speed",
            LogicalNode::Wcnv => "converter: generator frequency",
            LogicalNode::Wtrf => "transformer currents, voltages, oil and windings",
            LogicalNode::Wstr => "floating structure: ballast depth",
            LogicalNode::Wppd => "control system status",
            LogicalNode::Wavl => "availability counters, energy and status messages",
        }
    }
}

impl fmt::Display for LogicalNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LogicalNode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogicalNode::ALL
            .into_iter()
            .find(|n| n.code() == s)
            .ok_or_else(|| format!("unknown logical node `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Continuous,
    Status,
}

/// Dense index of a parameter inside one [`Catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub u16);

impl ParamId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub id: String,
    pub node: LogicalNode,
    pub unit: String,
    pub kind: ParamKind,
    /// For status parameters this is the smallest code.
    pub lower_bound: f64,
    /// For status parameters this is the largest code.
    pub upper_bound: f64,
    /// Allowed codes; empty for continuous parameters.
    pub codes: Vec<i64>,
    /// Position in the default forecast set, 1-based.
    pub forecast_rank: Option<u32>,
}

impl ParameterDef {
    pub fn forecastable(&self) -> bool {
        self.forecast_rank.is_some()
    }

    pub fn is_physical(&self, value: f64) -> bool {
        match self.kind {
            ParamKind::Continuous => value >= self.lower_bound && value <= self.upper_bound,
            ParamKind::Status => {
                value.fract() == 0.0 && self.codes.iter().any(|&c| c as f64 == value)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Catalog {
    params: Vec<ParameterDef>,
    index: HashMap<String, ParamId>,
    forecast: Vec<ParamId>,
}

impl Catalog {
    /// The catalog table shipped with the crate, parsed once.
    pub fn builtin() -> Arc<Catalog> {
        static BUILTIN: OnceLock<Arc<Catalog>> = OnceLock::new();
        BUILTIN
            .get_or_init(|| Arc::new(Catalog::parse(BUILTIN_TABLE).expect("built-in catalog parses")))
            .clone()
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Catalog> {
        Catalog::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Catalog> {
        let mut params = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::CatalogFormat {
                line: lineno + 1,
                message,
            };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 6 {
                return Err(bad(format!("expected 6 columns, found {}", cols.len())));
            }
            let node: LogicalNode = cols[1].parse().map_err(bad)?;
            if !cols[0].starts_with(&format!("{}.", node.code())) {
                return Err(bad(format!("id `{}` is not prefixed by its node", cols[0])));
            }
            let kind = match cols[3] {
                "continuous" => ParamKind::Continuous,
                "status" => ParamKind::Status,
                other => return Err(bad(format!("unknown kind `{other}`"))),
            };
            let (lower_bound, upper_bound, codes) = match kind {
                ParamKind::Continuous => {
                    let (lo, hi) = cols[4]
                        .split_once("..")
                        .ok_or_else(|| bad(format!("bounds `{}` are not lo..hi", cols[4])))?;
                    let lo: f64 = lo.parse().map_err(|_| bad(format!("bad lower bound `{lo}`")))?;
                    let hi: f64 = hi.parse().map_err(|_| bad(format!("bad upper bound `{hi}`")))?;
                    if !(lo < hi) {
                        return Err(bad(format!("lower bound {lo} is not below upper bound {hi}")));
                    }
                    (lo, hi, Vec::new())
                }
                ParamKind::Status => {
                    let body = cols[4]
                        .strip_prefix('{')
                        .and_then(|s| s.strip_suffix('}'))
                        .ok_or_else(|| bad(format!("code set `{}` is not {{a,b,..}}", cols[4])))?;
                    let mut codes = body
                        .split(',')
                        .map(|c| c.trim().parse::<i64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad(format!("bad status code: {e}")))?;
                    codes.sort_unstable();
                    codes.dedup();
                    if codes.is_empty() {
                        return Err(bad("empty code set".into()));
                    }
                    (codes[0] as f64, codes[codes.len() - 1] as f64, codes)
                }
            };
            let forecast_rank = match cols[5] {
                "-" => None,
                r => Some(r.parse::<u32>().map_err(|_| bad(format!("bad forecast rank `{r}`")))?),
            };
            if forecast_rank.is_some() && kind == ParamKind::Status {
                return Err(bad("status parameters cannot be forecast".into()));
            }
            params.push(ParameterDef {
                id: cols[0].to_string(),
                node,
                unit: cols[2].to_string(),
                kind,
                lower_bound,
                upper_bound,
                codes,
                forecast_rank,
            });
        }
        Catalog::from_defs(params)
    }

    pub fn from_defs(params: Vec<ParameterDef>) -> Result<Catalog> {
        if params.len() > u16::MAX as usize {
            return Err(Error::CatalogFormat {
                line: 0,
                message: "too many parameters".into(),
            });
        }
        let mut index = HashMap::with_capacity(params.len());
        for (i, p) in params.iter().enumerate() {
            if index.insert(p.id.clone(), ParamId(i as u16)).is_some() {
                return Err(Error::CatalogFormat {
                    line: 0,
                    message: format!("duplicate parameter id `{}`", p.id),
                });
            }
        }
        let mut ranked: Vec<(u32, ParamId)> = params
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.forecast_rank.map(|r| (r, ParamId(i as u16))))
            .collect();
        ranked.sort();
        if ranked.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::CatalogFormat {
                line: 0,
                message: "duplicate forecast rank".into(),
            });
        }
        Ok(Catalog {
            forecast: ranked.into_iter().map(|(_, id)| id).collect(),
            params,
            index,
        })
    }

    /// Replaces the default forecast set, keeping the given order.
    pub fn with_forecast_set(&self, ids: &[&str]) -> Result<Catalog> {
        let chosen = self.resolve(ids)?;
        let mut params = self.params.clone();
        for p in &mut params {
            p.forecast_rank = None;
        }
        for (rank, id) in chosen.iter().enumerate() {
            let p = &mut params[id.index()];
            if p.kind != ParamKind::Continuous {
                return Err(Error::CatalogFormat {
                    line: 0,
                    message: format!("`{}` is a status parameter and cannot be forecast", p.id),
                });
            }
            p.forecast_rank = Some(rank as u32 + 1);
        }
        Catalog::from_defs(params)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[ParameterDef] {
        &self.params
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        (0..self.params.len()).map(|i| ParamId(i as u16))
    }

    pub fn lookup(&self, id: &str) -> Result<&ParameterDef> {
        self.id(id).map(|pid| &self.params[pid.index()])
    }

    pub fn id(&self, id: &str) -> Result<ParamId> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownParameter(id.to_string()))
    }

    pub fn resolve<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<ParamId>> {
        ids.iter().map(|s| self.id(s.as_ref())).collect()
    }

    pub fn def(&self, id: ParamId) -> &ParameterDef {
        &self.params[id.index()]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.index()].id
    }

    pub fn contains(&self, id: ParamId) -> bool {
        id.index() < self.params.len()
    }

    pub fn is_physical(&self, id: &str, value: f64) -> Result<bool> {
        self.lookup(id).map(|p| p.is_physical(value))
    }

    pub fn is_physical_id(&self, id: ParamId, value: f64) -> bool {
        self.def(id).is_physical(value)
    }

    /// Default forecast parameters in rank order.
    pub fn forecast_set(&self) -> Vec<&str> {
        self.forecast.iter().map(|&id| self.name(id)).collect()
    }

    pub fn forecast_ids(&self) -> &[ParamId] {
        &self.forecast
    }

    pub fn node_params(&self, node: LogicalNode) -> impl Iterator<Item = ParamId> + '_ {
        self.ids().filter(move |&id| self.def(id).node == node)
    }

    /// Renders the catalog in the same table format [`Catalog::parse`] reads.
    pub fn to_table(&self) -> String {
        let mut out = String::from("# id node unit kind bounds forecast\n");
        for p in &self.params {
            let bounds = match p.kind {
                ParamKind::Continuous => format!("{}..{}", p.lower_bound, p.upper_bound),
                ParamKind::Status => {
                    let codes: Vec<String> = p.codes.iter().map(|c| c.to_string()).collect();
                    format!("{{{}}}", codes.join(","))
                }
            };
            let kind = match p.kind {
                ParamKind::Continuous => "continuous",
                ParamKind::Status => "status",
            };
            let rank = p
                .forecast_rank
                .map(|r| r.to_string())
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                p.id, p.node, p.unit, kind, bounds, rank
            ));
        }
        out
    }
}
