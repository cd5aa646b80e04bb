//! Rendering of evaluation reports as text tables, JSON or CSV.

use std::fmt::Write;
use std::str::FromStr;

use super::{Counts, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format `{other}` (expected text, json or csv)")),
        }
    }
}

pub const CSV_HEADER: &str = "section,key,asked,correct,behavioral_correct";

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

pub fn coverage_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => text(report),
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => csv(report),
    }
}

fn table_row(out: &mut String, key: &str, c: &Counts) {
    let _ = writeln!(out, "{key:<22}{:>7}{:>9}{:>12}", c.asked, c.correct, c.behavioral_correct);
}

fn text(r: &EvalReport) -> String {
    let mut out = String::new();
    let header = |out: &mut String, first: &str| {
        let _ = writeln!(out, "{first:<22}{:>7}{:>9}{:>12}", "asked", "correct", "behavioral");
    };
    let rows = r.total > 0;
    header(&mut out, "intent");
    if rows {
        for (intent, c) in &r.per_intent {
            table_row(&mut out, intent.as_str(), c);
        }
    }
    out.push('\n');
    header(&mut out, "user");
    if rows {
        for (user, c) in &r.per_user {
            table_row(&mut out, user, c);
        }
    }
    out.push('\n');
    let _ = writeln!(out, "{:<22}{:>7}", "miss reason", "count");
    for (reason, n) in &r.misses_by_reason {
        let _ = writeln!(out, "{reason:<22}{n:>7}");
    }
    if rows {
        out.push('\n');
        let _ = writeln!(
            out,
            "{} asked / {} unique / {} correct ({})",
            r.total,
            r.unique_count,
            r.correct,
            pct(r.accuracy)
        );
        let _ = writeln!(
            out,
            "unique questions: {} of {} correct ({})",
            r.unique_correct,
            r.unique_count,
            pct(r.unique_accuracy)
        );
        let _ = writeln!(
            out,
            "behavioral: {} of {} ({}), {} answered",
            r.behavioral_correct,
            r.total,
            pct(r.behavioral_accuracy),
            r.answered
        );
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn csv(r: &EvalReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    if r.total == 0 {
        return out;
    }
    for (intent, c) in &r.per_intent {
        let _ = writeln!(out, "intent,{intent},{},{},{}", c.asked, c.correct, c.behavioral_correct);
    }
    for (user, c) in &r.per_user {
        let _ = writeln!(out, "user,{},{},{},{}", csv_field(user), c.asked, c.correct, c.behavioral_correct);
    }
    for (reason, n) in &r.misses_by_reason {
        let _ = writeln!(out, "miss,{reason},{n},,");
    }
    let _ = writeln!(out, "total,all,{},{},{}", r.total, r.correct, r.behavioral_correct);
    let _ = writeln!(out, "total,unique,{},{},", r.unique_count, r.unique_correct);
    out
}
