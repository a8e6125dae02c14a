use std::fmt::Write;

use super::{GapReport, PropernessReport};

/// One line per rule: deviation, worst belief, gap, verdict.
pub fn render_properness_table(reports: &[PropernessReport]) -> String {
    let width = reports.iter().map(|r| r.rule.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>12}  {:>12}  {:>12}  {:>12}  {:>6}",
        "rule", "report_step", "max_dev", "worst_belief", "gap", "result"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12.6}  {:>12.6}  {:>12.4}  {:>12.3e}  {:>6}",
            r.rule,
            r.report_step,
            r.max_argmax_deviation,
            r.worst_belief,
            r.incentive_gap,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    out
}

pub fn render_gap_table(reports: &[GapReport]) -> String {
    let width = reports.iter().map(|r| r.rule.len()).max().unwrap_or(4).max(4);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>23}  {:>12}  {:>23}  {:>12}  {:>12}  {:>10}",
        "rule", "honest [L, U]", "honest_E", "best [L, U]", "best_E", "gap", "quad_tol"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<width$}  {:>23}  {:>12.6}  {:>23}  {:>12.6}  {:>12.6}  {:>10.2e}",
            r.rule,
            format!("[{:.4}, {:.4}]", r.honest.lower, r.honest.upper),
            r.honest_value,
            format!("[{:.4}, {:.4}]", r.best.lower, r.best.upper),
            r.best_value,
            r.gap,
            r.quadrature_tolerance
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::properness::{verify_choice_properness, BeliefGrid};
    use crate::scoring::rules::QuadraticRule;

    #[test]
    fn properness_table_has_aligned_rows() {
        let grid = BeliefGrid::span(0.1, 0.9, 0.1, 0.01).unwrap();
        let a = verify_choice_properness("quadratic", &QuadraticRule, &grid);
        let b = verify_choice_properness("q", &QuadraticRule, &grid);
        let text = render_properness_table(&[a, b]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.len() == lines[1].len()));
        assert!(lines[1].ends_with("PASS"));
    }
}
