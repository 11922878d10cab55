//! Instance files: TOML with a `horizon`, a `[prices]` table and one
//! `[[timestep]]` table per step.
//!
//! ```toml
//! horizon = 1
//!
//! [prices]
//! ev = 0.25
//! buy = 0.4
//! sell = 0.1
//!
//! [[timestep]]
//! j_bits = 2
//! j_offset = 0
//! recourse_bits = 2
//! dist = { 1 = 0.2, 2 = 0.5, 3 = 0.3 }
//! ```
//!
//! `p_bits` and `p_offset` optionally fix the scenario register; by default
//! it starts at 0 and is as narrow as the support allows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{FirstStageVar, InstanceSpec, Prices, ScenarioDistribution, Timestep};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRepr {
    horizon: usize,
    prices: PricesRepr,
    #[serde(default)]
    timestep: Vec<TimestepRepr>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PricesRepr {
    ev: f64,
    buy: f64,
    sell: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimestepRepr {
    j_bits: u32,
    #[serde(default)]
    j_offset: i64,
    recourse_bits: u32,
    dist: BTreeMap<String, f64>,
    p_bits: Option<u32>,
    p_offset: Option<i64>,
}

/// Parses an instance from TOML text and validates it.
pub fn parse_instance(text: &str) -> Result<InstanceSpec> {
    let repr: FileRepr = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut steps = Vec::with_capacity(repr.timestep.len());
    for (t, ts) in repr.timestep.into_iter().enumerate() {
        let mut support = Vec::with_capacity(ts.dist.len());
        for (key, p) in ts.dist {
            let v: i64 = key.trim().parse().map_err(|_| Error::Parse {
                line: 0,
                message: format!("timestep[{t}].dist: key {key:?} is not an integer"),
            })?;
            support.push((v, p));
        }
        support.sort_by_key(|&(v, _)| v);
        let offset = ts.p_offset.unwrap_or(0);
        let scenarios = match ts.p_bits {
            Some(bits) => ScenarioDistribution::with_register(support, bits, offset),
            None => ScenarioDistribution::with_offset(support, offset),
        };
        steps.push(Timestep {
            first_stage: FirstStageVar::new(ts.j_bits, ts.j_offset),
            scenarios,
            recourse_bits: ts.recourse_bits,
        });
    }
    let instance = InstanceSpec {
        horizon: repr.horizon,
        prices: Prices::new(repr.prices.ev, repr.prices.buy, repr.prices.sell),
        steps,
    };
    instance.validate()?;
    Ok(instance)
}

pub fn load_instance(path: &Path) -> Result<InstanceSpec> {
    parse_instance(&std::fs::read_to_string(path)?)
}

/// Writes `instance` in the file format read by [`parse_instance`].
pub fn render_instance(instance: &InstanceSpec) -> String {
    let p = &instance.prices;
    let mut out = format!(
        "horizon = {}\n\n[prices]\nev = {:?}\nbuy = {:?}\nsell = {:?}\n",
        instance.horizon, p.ev_price, p.intraday_buy, p.intraday_sell
    );
    for step in &instance.steps {
        let d = &step.scenarios;
        let dist: Vec<String> = d
            .support()
            .iter()
            .map(|(v, p)| format!("{v} = {p:?}"))
            .collect();
        out.push_str(&format!(
            "\n[[timestep]]\nj_bits = {}\nj_offset = {}\nrecourse_bits = {}\np_bits = {}\np_offset = {}\ndist = {{ {} }}\n",
            step.first_stage.bit_width,
            step.first_stage.offset,
            step.recourse_bits,
            d.register_bits(),
            d.register_offset(),
            dist.join(", ")
        ));
    }
    out
}

/// 1-based line containing byte `offset`.
fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}
