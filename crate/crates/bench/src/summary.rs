use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::CaseResult;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub case: String,
    pub resolution: u32,
    pub hd: f64,
    pub cd_pred_to_gt: f64,
    pub cd_gt_to_pred: f64,
    pub f1: f64,
    pub ncd: Option<f64>,
    pub anc: f64,
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Stat> {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub resolution: u32,
    pub cases: usize,
    pub hd: Stat,
    pub cd_pred_to_gt: Stat,
    pub cd_gt_to_pred: Stat,
    pub f1: Stat,
    /// Over the cases that have a defined NCD.
    pub ncd: Option<Stat>,
    pub anc: Stat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub aggregates: Vec<Aggregate>,
    pub failures: usize,
}

pub fn summarize(results: &[CaseResult]) -> Summary {
    let rows: Vec<SummaryRow> = results
        .iter()
        .filter_map(|r| {
            let m = r.metrics.as_ref()?;
            Some(SummaryRow {
                case: r.case.clone(),
                resolution: r.resolution,
                hd: m.hd,
                cd_pred_to_gt: m.cd_pred_to_gt,
                cd_gt_to_pred: m.cd_gt_to_pred,
                f1: m.f1,
                ncd: m.ncd,
                anc: m.anc,
            })
        })
        .collect();
    let mut by_res: BTreeMap<u32, Vec<&SummaryRow>> = BTreeMap::new();
    for r in &rows {
        by_res.entry(r.resolution).or_default().push(r);
    }
    let aggregates = by_res
        .into_iter()
        .map(|(resolution, rs)| {
            let stat = |f: fn(&SummaryRow) -> f64| Stat::of(rs.iter().map(|r| f(r))).expect("group is nonempty");
            Aggregate {
                resolution,
                cases: rs.len(),
                hd: stat(|r| r.hd),
                cd_pred_to_gt: stat(|r| r.cd_pred_to_gt),
                cd_gt_to_pred: stat(|r| r.cd_gt_to_pred),
                f1: stat(|r| r.f1),
                ncd: Stat::of(rs.iter().filter_map(|r| r.ncd)),
                anc: stat(|r| r.anc),
            }
        })
        .collect();
    Summary {
        rows,
        aggregates,
        failures: results.iter().filter(|r| !r.is_ok()).count(),
    }
}

/// Aligned text table, HD scaled by 1e2 and CD by 1e4.
pub fn format_table(summary: &Summary) -> String {
    let mut s = String::new();
    let header = format!(
        "{:<20} {:>5} {:>10} {:>10} {:>10} {:>8} {:>10} {:>8}\n",
        "case", "R", "HD e-2", "CD_PG e-4", "CD_GP e-4", "F1", "NCD", "ANC"
    );
    s.push_str(&header);
    s.push_str(&"-".repeat(header.len() - 1));
    s.push('\n');
    for r in &summary.rows {
        let ncd = r.ncd.map_or("-".to_string(), |v| format!("{v:.2e}"));
        let _ = writeln!(
            s,
            "{:<20} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>8.3} {:>10} {:>8.5}",
            r.case,
            r.resolution,
            r.hd * 1e2,
            r.cd_pred_to_gt * 1e4,
            r.cd_gt_to_pred * 1e4,
            r.f1,
            ncd,
            r.anc
        );
    }
    s.push('\n');
    let _ = writeln!(s, "{:<8} {:>5}  mean ± std", "R", "cases");
    for a in &summary.aggregates {
        let pm = |st: &Stat, k: f64| format!("{:.4} ± {:.4}", st.mean * k, st.std * k);
        let _ = writeln!(
            s,
            "{:<8} {:>5}  HD {}  CD_PG {}  CD_GP {}  F1 {}  NCD {}  ANC {}",
            a.resolution,
            a.cases,
            pm(&a.hd, 1e2),
            pm(&a.cd_pred_to_gt, 1e4),
            pm(&a.cd_gt_to_pred, 1e4),
            pm(&a.f1, 1.0),
            a.ncd.map_or("-".to_string(), |st| format!("{:.2e} ± {:.2e}", st.mean, st.std)),
            pm(&a.anc, 1.0)
        );
    }
    if summary.failures > 0 {
        let _ = writeln!(s, "\n{} case(s) failed; see summary.json", summary.failures);
    }
    s
}
