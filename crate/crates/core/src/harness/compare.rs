use std::fmt::Write as _;

use super::eval::EvalReport;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "rank,policy,n_episodes,mean,std,min,max,config_hash";

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Reports best-first by mean return; equal means keep their input order.
    pub ranked: Vec<EvalReport>,
    /// Non-fatal problems, e.g. reports from different environment configs.
    pub warnings: Vec<String>,
}

pub fn compare(reports: &[EvalReport]) -> Result<Comparison> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("compare needs at least two reports".into()));
    }
    let mut warnings = Vec::new();
    let first = &reports[0].config_hash;
    for r in &reports[1..] {
        if &r.config_hash != first {
            warnings.push(format!(
                "{} was evaluated under config {} but {} under {}; scores are not comparable",
                r.policy, r.config_hash, reports[0].policy, first
            ));
        }
    }
    let mut ranked = reports.to_vec();
    ranked.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    Ok(Comparison { ranked, warnings })
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let width = self.ranked.iter().map(|r| r.policy.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "rank  {:<width$}  episodes        mean        std         min         max", "policy");
        for (i, r) in self.ranked.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>8}  {:>10.2}  {:>9.2}  {:>10.2}  {:>10.2}",
                i + 1,
                r.policy,
                r.n_episodes,
                r.mean,
                r.std,
                r.min,
                r.max
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, r) in self.ranked.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                csv_field(&r.policy),
                r.n_episodes,
                r.mean,
                r.std,
                r.min,
                r.max,
                r.config_hash
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
