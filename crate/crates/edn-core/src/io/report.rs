//! CSV report assembly. All numbers print with 6 decimal places; Rust's
//! fixed-precision formatting rounds half to even.

use crate::metrics::{MetricsReport, MetricsRow};

pub fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

pub const EVAL_HEADER: &str = "image,mae,f_max,f_weighted,s_measure,e_max,e_mean";

fn eval_row(name: &str, r: &MetricsRow) -> String {
    format!(
        "{name},{},{},{},{},{},{}",
        fmt6(r.mae),
        fmt6(r.f_max),
        fmt6(r.f_weighted),
        fmt6(r.s_measure),
        fmt6(r.e_max),
        fmt6(r.e_mean)
    )
}

/// Per-image rows in input order (skipped images print NaN), then `ALL`.
pub fn eval_csv(report: &MetricsReport) -> String {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    let nan_row = MetricsRow {
        mae: f64::NAN,
        f_max: f64::NAN,
        f_weighted: f64::NAN,
        s_measure: f64::NAN,
        e_max: f64::NAN,
        e_mean: f64::NAN,
    };
    for (name, row) in &report.per_image {
        out.push_str(&eval_row(name, row.as_ref().unwrap_or(&nan_row)));
        out.push('\n');
    }
    out.push_str(&eval_row("ALL", &report.aggregate));
    out.push('\n');
    out
}

/// Per-region MAE columns for one image and two prediction sets; NaN marks
/// an undefined value (empty region or zero base).
#[derive(Debug, Clone, Copy)]
pub struct RegionColumns {
    pub mae_a: f64,
    pub mae_b: f64,
    pub rel_impv: f64,
}

impl RegionColumns {
    pub fn nan() -> Self {
        RegionColumns {
            mae_a: f64::NAN,
            mae_b: f64::NAN,
            rel_impv: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PartitionRow {
    pub center: RegionColumns,
    pub boundary: RegionColumns,
    pub other: RegionColumns,
}

pub const PARTITION_HEADER: &str = "image,center_mae_a,center_mae_b,center_rel_impv,boundary_mae_a,boundary_mae_b,boundary_rel_impv,other_mae_a,other_mae_b,other_rel_impv";

fn partition_row(name: &str, r: &PartitionRow) -> String {
    let cols = [r.center, r.boundary, r.other]
        .iter()
        .map(|c| format!("{},{},{}", fmt6(c.mae_a), fmt6(c.mae_b), fmt6(c.rel_impv)))
        .collect::<Vec<_>>()
        .join(",");
    format!("{name},{cols}")
}

pub fn partition_csv(rows: &[(String, PartitionRow)], aggregate: &PartitionRow) -> String {
    let mut out = String::from(PARTITION_HEADER);
    out.push('\n');
    for (name, row) in rows {
        out.push_str(&partition_row(name, row));
        out.push('\n');
    }
    out.push_str(&partition_row("ALL", aggregate));
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricsReport;

    #[test]
    fn fixed_precision_rounds_half_to_even() {
        assert_eq!(fmt6(0.1015625), "0.101562");
        assert_eq!(fmt6(1.0), "1.000000");
        assert_eq!(fmt6(f64::NAN), "NaN");
    }

    #[test]
    fn eval_csv_schema_is_stable() {
        let row = MetricsRow {
            mae: 0.0,
            f_max: 1.0,
            f_weighted: 1.0,
            s_measure: 1.0,
            e_max: 1.0,
            e_mean: 0.875,
        };
        let report = MetricsReport {
            per_image: vec![("a".into(), Some(row)), ("b".into(), None)],
            aggregate: row,
        };
        let csv = eval_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], EVAL_HEADER);
        assert_eq!(
            lines[1],
            "a,0.000000,1.000000,1.000000,1.000000,1.000000,0.875000"
        );
        assert!(lines[2].starts_with("b,NaN,"));
        assert!(lines[3].starts_with("ALL,0.000000,"));
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn partition_csv_layout() {
        let cols = RegionColumns {
            mae_a: 0.084,
            mae_b: 0.062,
            rel_impv: 26.190476190476193,
        };
        let row = PartitionRow {
            center: cols,
            boundary: RegionColumns::nan(),
            other: cols,
        };
        let csv = partition_csv(&[("img".into(), row)], &row);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], PARTITION_HEADER);
        assert!(lines[1].starts_with("img,0.084000,0.062000,26.190476,NaN,NaN,NaN,"));
        assert!(lines[2].starts_with("ALL,"));
    }
}
