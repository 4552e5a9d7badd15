//! Plot-ready summaries of a witness log or of `detect` output.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use anyhow::{bail, Context};
use serde_json::Value;

use super::Format;
use crate::ast::Dialect;
use crate::differential::{summarize, Observation, Observed, SubjectResult, Witness, WitnessKind};

pub fn report(text: &str, format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let lines: Vec<Value> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("line {}", i + 1)))
        .collect::<anyhow::Result<_>>()?;
    match lines.first() {
        None => bail!("input is empty"),
        Some(v) if v.get("subjects").is_some() => witness_report(&lines, format, out),
        Some(v) if v.get("prediction").is_some() || v.get("error").is_some() => {
            verdict_report(&lines, format, out)
        }
        Some(_) => bail!("neither a witness log nor detect output"),
    }
}

fn span(v: &Value) -> Option<(usize, usize)> {
    let a = v.as_array()?;
    Some((a.first()?.as_u64()? as usize, a.get(1)?.as_u64()? as usize))
}

fn witness_report(lines: &[Value], format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut names = std::collections::BTreeSet::new();
    let mut witnesses = Vec::new();
    for l in lines {
        let subjects = l["subjects"]
            .as_object()
            .context("`subjects` is not an object")?;
        let observations = subjects
            .iter()
            .map(|(name, o)| {
                names.insert(name.clone());
                let result = match o.get("matched").and_then(Value::as_bool) {
                    Some(matched) => SubjectResult::Ok(Observed {
                        matched,
                        span: span(&o["span"]),
                        captures: o["captures"]
                            .as_array()
                            .map_or(Vec::new(), |c| c.iter().map(span).collect()),
                        elapsed: Duration::ZERO,
                    }),
                    None => SubjectResult::Failure(
                        o["status"].as_str().unwrap_or("failure").to_string(),
                    ),
                };
                Observation {
                    subject: name.clone(),
                    dialect: Dialect::PortableCore,
                    result,
                }
            })
            .collect();
        witnesses.push(Witness {
            regex: l["regex"].as_str().unwrap_or_default().to_string(),
            input: l["input"].as_str().unwrap_or_default().to_string(),
            kind: WitnessKind::Match,
            observations,
            causes: Vec::new(),
        });
    }
    let names: Vec<String> = names.into_iter().collect();
    let summary = summarize(&witnesses, &names);
    match format {
        Format::Csv => write!(out, "{}", summary.to_csv())?,
        Format::Json => {
            let mut cells = Vec::new();
            for (i, a) in names.iter().enumerate() {
                for b in &names[i + 1..] {
                    let [m, s, c] = summary.get(a, b);
                    cells.push(serde_json::json!({
                        "subject_a": a, "subject_b": b, "match": m, "substring": s, "capture": c
                    }));
                }
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&cells)?)?
        }
    }
    Ok(())
}

/// Counts and proportions of predicted complexity, the variant that
/// exposed it, and the validated family.
fn verdict_report(lines: &[Value], format: Format, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut counts: BTreeMap<(&str, String), usize> = BTreeMap::new();
    let total = lines.len();
    for l in lines {
        let Some(p) = l.get("prediction") else {
            *counts.entry(("verdict", "parse-error".into())).or_default() += 1;
            continue;
        };
        let verdict = p["verdict"]["kind"]
            .as_str()
            .unwrap_or("unknown")
            .to_string();
        *counts.entry(("verdict", verdict)).or_default() += 1;
        let via = p["via_variant"].as_str().unwrap_or("none").to_string();
        *counts.entry(("via_variant", via)).or_default() += 1;
        if let Some(family) = l
            .get("validation")
            .and_then(|v| v["family"]["family"].as_str())
        {
            *counts
                .entry(("validation", family.to_string()))
                .or_default() += 1;
        }
    }
    let proportion = |n: usize| {
        if total == 0 {
            0.0
        } else {
            n as f64 / total as f64
        }
    };
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["metric", "value", "count", "proportion"])?;
            for ((metric, value), n) in &counts {
                w.write_record([
                    metric.to_string(),
                    value.clone(),
                    n.to_string(),
                    format!("{:.4}", proportion(*n)),
                ])?;
            }
            out.write_all(&w.into_inner()?)?;
        }
        Format::Json => {
            let rows: Vec<Value> = counts
                .iter()
                .map(|((metric, value), n)| {
                    serde_json::json!({"metric": metric, "value": value, "count": n, "proportion": proportion(*n)})
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?
        }
    }
    Ok(())
}
