//! Experiment harnesses behind the evaluation commands.

pub mod activity;
pub mod fall;
pub mod prior;

pub use activity::{
    activity_features, eval_activity, ActivityCell, ActivityEvalConfig, ActivityReport, CellOutcome, LabelledFeatures,
};
pub use fall::{calibrate_fall, eval_fall, fall_corpus, FallCorpus, FallEvalConfig, FallEvalReport, LabelledSeries};
pub use prior::{
    default_scenarios, eval_prior, parse_scenarios, resolve_recording, scenario_recording, scenarios_to_text,
    PriorEvalReport, PriorRow, RecordingRef, Scenario, ScenarioOutcome,
};

/// Renders rows as left-aligned, space-padded columns.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Parses delimited text back into rows.
pub(crate) fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_columns() {
        let t = aligned(&csv_rows("a,bb\nccc,d\n"));
        assert_eq!(t, "a    bb\nccc  d\n");
    }
}
