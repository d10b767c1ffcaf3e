use std::io::Write;

use serde::{Serialize, Serializer};

use super::{IterationRecord, StepKind};

fn join_indices(idx: &[usize]) -> String {
    idx.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(";")
}

fn real_text(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:?}")
    }
}

/// One line of the CSV trace. Indices are 1-based, `alpha` is
/// semicolon-joined, infinite lengths are written as `inf` and lengths that
/// do not apply are left empty.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceCsvRow {
    pub iter: usize,
    pub step_kind: &'static str,
    pub p: Option<usize>,
    pub k: Option<usize>,
    pub t1: String,
    pub t2: String,
    pub t: String,
    pub f: String,
    pub alpha: String,
}

impl From<&IterationRecord> for TraceCsvRow {
    fn from(r: &IterationRecord) -> Self {
        TraceCsvRow {
            iter: r.iter,
            step_kind: r.kind.as_str(),
            p: r.p.map(|i| i + 1),
            k: r.k.map(|i| i + 1),
            t1: real_text(r.t1),
            t2: real_text(r.t2),
            t: real_text(r.t),
            f: real_text(r.f),
            alpha: join_indices(&r.alpha),
        }
    }
}

pub fn write_trace_csv(trace: &[IterationRecord], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(TraceCsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

fn ser_real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_none()
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

fn one_based<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|i| i + 1))
}

fn one_based_opt<S: Serializer>(v: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(i) => s.serialize_some(&(i + 1)),
        None => s.serialize_none(),
    }
}

#[derive(Serialize)]
struct JsonRow<'a> {
    iter: usize,
    z: &'a [f64],
    s: &'a [f64],
    #[serde(serialize_with = "ser_real")]
    f: f64,
    #[serde(serialize_with = "one_based")]
    alpha: &'a [usize],
    u: &'a [f64],
    #[serde(serialize_with = "one_based_opt")]
    p: Option<usize>,
    d: &'a [f64],
    r: &'a [f64],
    #[serde(serialize_with = "ser_real")]
    t1: f64,
    #[serde(serialize_with = "ser_real")]
    t2: f64,
    #[serde(serialize_with = "ser_real")]
    t: f64,
    #[serde(serialize_with = "one_based_opt")]
    k: Option<usize>,
    step_kind: StepKind,
    remark: String,
}

/// Verbose trace with every vector, one object per iteration.
pub fn write_trace_json(trace: &[IterationRecord], out: impl Write) -> serde_json::Result<()> {
    let rows: Vec<JsonRow> = trace
        .iter()
        .map(|r| JsonRow {
            iter: r.iter,
            z: &r.z,
            s: &r.s,
            f: r.f,
            alpha: &r.alpha,
            u: &r.u,
            p: r.p,
            d: &r.d,
            r: &r.r,
            t1: r.t1,
            t2: r.t2,
            t: r.t,
            k: r.k,
            step_kind: r.kind,
            remark: remark(r),
        })
        .collect();
    serde_json::to_writer_pretty(out, &rows)
}

/// Remark in the style of a hand-worked solution path.
pub fn remark(r: &IterationRecord) -> String {
    let one = |i: Option<usize>| i.map_or_else(|| "?".to_string(), |i| (i + 1).to_string());
    match r.kind {
        StepKind::Full => format!("full step: add constraint {}", one(r.p)),
        StepKind::Partial | StepKind::DualOnly => {
            format!("partial step: drop constraint {}", one(r.k))
        }
        StepKind::Stop => "stop: all constraints satisfied".to_string(),
        StepKind::Infeasible => "stop: subproblem infeasible".to_string(),
    }
}

/// Small-denominator fraction when `v` is within `1e-9` of one, otherwise a
/// short decimal.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "-".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v.abs() < 1e-12 {
        return "0".to_string();
    }
    for den in 1..=1000u32 {
        let num = (v * den as f64).round();
        if (num / den as f64 - v).abs() <= 1e-9 * (1.0 + v.abs()) {
            return if den == 1 {
                format!("{}", num as i64)
            } else {
                format!("{}/{}", num as i64, den)
            };
        }
    }
    format!("{v:.6e}")
}

fn format_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_real(*x)).collect();
    format!("({})", parts.join(", "))
}

/// Plain-text table with the state at the start of each iteration and the
/// quantities computed during it.
pub fn format_table(trace: &[IterationRecord]) -> String {
    let header = [
        "iter", "z", "s", "f", "alpha", "u", "p", "d", "r", "t1", "t2", "k", "remarks",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for r in trace {
        let alpha: Vec<String> = r.alpha.iter().map(|i| (i + 1).to_string()).collect();
        let active = !matches!(r.kind, StepKind::Stop);
        rows.push(vec![
            r.iter.to_string(),
            format_vec(&r.z),
            format_vec(&r.s),
            format_real(r.f),
            format!("{{{}}}", alpha.join(", ")),
            format_vec(&r.u),
            r.p.map_or_else(String::new, |i| (i + 1).to_string()),
            if active { format_vec(&r.d) } else { String::new() },
            if active && !r.r.is_empty() {
                format_vec(&r.r)
            } else if active {
                "-".to_string()
            } else {
                String::new()
            },
            if active { format_real(r.t1) } else { String::new() },
            if active { format_real(r.t2) } else { String::new() },
            r.k.map_or_else(|| if active { "-".into() } else { String::new() }, |i| (i + 1).to_string()),
            remark(r),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::solver::{solve, SelectionRule, SolveOptions};

    #[test]
    fn fractions_are_recognized() {
        assert_eq!(format_real(97.0 / 2.0), "97/2");
        assert_eq!(format_real(-29.0 / 12.0), "-29/12");
        assert_eq!(format_real(3.0), "3");
        assert_eq!(format_real(f64::INFINITY), "inf");
        assert_eq!(format_real(std::f64::consts::PI), "3.141593e0");
    }

    #[test]
    fn csv_trace_of_example1() {
        let p = fixtures::example1();
        let out = solve(&p, &SolveOptions::with_rule(SelectionRule::MostViolated)).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&out.trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iter,step_kind,p,k,t1,t2,t,f,alpha");
        assert_eq!(lines[1], "1,full,3,,inf,2.0,2.0,48.5,");
        assert!(lines[2].starts_with("2,stop,,,,,,"));
        assert!(lines[2].ends_with(",3"));
    }

    #[test]
    fn json_trace_round_trips_through_serde_value() {
        let p = fixtures::example1();
        let out = solve(&p, &SolveOptions::with_rule(SelectionRule::MostViolated)).unwrap();
        let mut buf = Vec::new();
        write_trace_json(&out.trace, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["t1"], "inf");
        assert_eq!(v[0]["p"], 3);
        assert_eq!(v[1]["alpha"][0], 3);
        assert_eq!(v[0]["remark"], "full step: add constraint 3");
    }

    #[test]
    fn table_has_one_line_per_row() {
        let p = fixtures::example1();
        let out = solve(&p, &SolveOptions::with_rule(SelectionRule::MostViolated)).unwrap();
        let table = format_table(&out.trace);
        assert_eq!(table.lines().count(), 2 + out.trace.len());
        assert!(table.contains("97/2"));
        assert!(table.contains("13/2"));
    }
}
