//! CSV writers for benchmark output.
//!
//! Floats are printed with `Display`, the shortest representation that parses
//! back exactly, so a repeated run produces byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use j3s_core::Result;

use crate::runner::{AblationOutcome, RunReport};

/// Per-probe rows: `repeat,sample_id,true_label,predicted,e_class_<id>...,iterations`.
///
/// Error columns follow ascending class id; `iterations` sums the solver
/// iterations spent across class blocks. A missing true label renders as an
/// empty field.
pub fn render_report_csv(report: &RunReport) -> String {
    let mut s = String::from("repeat,sample_id,true_label,predicted");
    for id in &report.class_ids {
        let _ = write!(s, ",e_class_{id}");
    }
    s.push_str(",iterations\n");
    for row in &report.rows {
        let p = &row.prediction;
        let true_label = p.true_label.map(|l| l.to_string()).unwrap_or_default();
        let _ = write!(s, "{},{},{},{}", row.repeat, p.sample_id, true_label, p.predicted);
        for id in &report.class_ids {
            match p.class_errors.get(id) {
                Some(e) => {
                    let _ = write!(s, ",{e}");
                }
                None => s.push(','),
            }
        }
        let iterations: usize = p.per_class_iterations.values().sum();
        let _ = writeln!(s, ",{iterations}");
    }
    s
}

/// `repeat,accuracy` rows plus `mean`/`std` footer rows.
pub fn render_summary_csv(report: &RunReport) -> String {
    let mut s = String::from("repeat,accuracy\n");
    for (r, acc) in report.per_repeat_accuracy.iter().enumerate() {
        let _ = writeln!(s, "{r},{acc}");
    }
    let _ = writeln!(s, "mean,{}", report.mean_accuracy);
    let _ = writeln!(s, "std,{}", report.std_accuracy);
    s
}

/// One row per recorded solver iteration: `repeat,sample_id,class_id,iter,loss`.
pub fn render_traces_csv(report: &RunReport) -> String {
    let mut s = String::from("repeat,sample_id,class_id,iter,loss\n");
    for t in &report.traces {
        for (i, loss) in t.losses.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                t.repeat,
                t.sample_id,
                t.class_id,
                i + 1,
                loss
            );
        }
    }
    s
}

/// One row per (swept value, repeat): `param,value,repeat,accuracy`.
pub fn render_ablation_csv(outcomes: &[AblationOutcome]) -> String {
    let mut s = String::from("param,value,repeat,accuracy\n");
    for o in outcomes {
        for (r, acc) in o.report.per_repeat_accuracy.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", o.param, o.value, r, acc);
        }
    }
    s
}

pub fn write_report_csv(path: &Path, report: &RunReport) -> Result<()> {
    fs::write(path, render_report_csv(report))?;
    Ok(())
}

pub fn write_summary_csv(path: &Path, report: &RunReport) -> Result<()> {
    fs::write(path, render_summary_csv(report))?;
    Ok(())
}

pub fn write_traces_csv(path: &Path, report: &RunReport) -> Result<()> {
    fs::write(path, render_traces_csv(report))?;
    Ok(())
}

pub fn write_ablation_csv(path: &Path, outcomes: &[AblationOutcome]) -> Result<()> {
    fs::write(path, render_ablation_csv(outcomes))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{ReportRow, RunReport, Timings, TraceRecord};
    use j3s_core::PredictionReport;
    use std::collections::BTreeMap;

    fn toy_report() -> RunReport {
        let prediction = PredictionReport {
            sample_id: "c0_s1".into(),
            predicted: 2,
            true_label: Some(0),
            class_errors: BTreeMap::from([(0, 0.5), (2, 0.25)]),
            per_class_iterations: BTreeMap::from([(0, 3), (2, 4)]),
        };
        RunReport {
            class_ids: vec![0, 2],
            per_repeat_accuracy: vec![0.5, 1.0],
            mean_accuracy: 0.75,
            std_accuracy: 0.25f64.sqrt() * 0.5f64.sqrt(), // sqrt(0.125)
            rows: vec![ReportRow { repeat: 1, prediction }],
            traces: vec![TraceRecord {
                repeat: 0,
                sample_id: "c0_s1".into(),
                class_id: 2,
                losses: vec![1.5, 0.75],
            }],
            timings: Timings::default(),
        }
    }

    #[test]
    fn report_csv_layout() {
        let csv = render_report_csv(&toy_report());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "repeat,sample_id,true_label,predicted,e_class_0,e_class_2,iterations"
        );
        assert_eq!(lines.next().unwrap(), "1,c0_s1,0,2,0.5,0.25,7");
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn missing_true_label_is_an_empty_field() {
        let mut report = toy_report();
        report.rows[0].prediction.true_label = None;
        let csv = render_report_csv(&report);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,c0_s1,,2,"));
    }

    #[test]
    fn summary_csv_has_mean_and_std_footer() {
        let csv = render_summary_csv(&toy_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "repeat,accuracy");
        assert_eq!(lines[1], "0,0.5");
        assert_eq!(lines[2], "1,1");
        assert_eq!(lines[3], "mean,0.75");
        assert!(lines[4].starts_with("std,0.35355339059327"));
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn traces_csv_numbers_iterations_from_one() {
        let csv = render_traces_csv(&toy_report());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "repeat,sample_id,class_id,iter,loss");
        assert_eq!(lines[1], "0,c0_s1,2,1,1.5");
        assert_eq!(lines[2], "0,c0_s1,2,2,0.75");
    }

    #[test]
    fn ablation_csv_one_row_per_value_and_repeat() {
        let outcomes = vec![crate::runner::AblationOutcome {
            param: "theta".into(),
            value: "0.3".into(),
            report: toy_report(),
        }];
        let csv = render_ablation_csv(&outcomes);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "param,value,repeat,accuracy");
        assert_eq!(lines[1], "theta,0.3,0,0.5");
        assert_eq!(lines[2], "theta,0.3,1,1");
        assert_eq!(lines.len(), 3);
    }
}
