use std::fmt::Write as _;

use super::{EvalReport, Score};

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table: headline row, per-role rows, then error counts.
    pub fn to_table(&self) -> String {
        self.to_table_with(true, true)
    }

    pub fn to_table_with(&self, per_role: bool, errors: bool) -> String {
        let mut rows: Vec<(String, Score)> = vec![("overall".to_string(), self.micro())];
        if per_role {
            rows.extend(self.per_role.iter().map(|(role, s)| (role.canonical(), *s)));
        }
        let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0).max(4);

        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>5}  {:>5}  {:>5}",
            "role", "P", "R", "F1", "tp", "fp", "fn"
        );
        for (name, s) in &rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7.4}  {:>7.4}  {:>7.4}  {:>5}  {:>5}  {:>5}",
                name, s.precision, s.recall, s.f1, s.tp, s.fp, s.fn_
            );
        }
        if errors {
            let e = &self.errors;
            let _ = writeln!(
                out,
                "\nerrors: discontinuity={} boundary={} wrong_label={} spurious={} missing={}",
                e.discontinuity, e.boundary, e.wrong_label, e.spurious, e.missing
            );
        }
        if let Some(sense) = &self.sense_accuracy {
            let _ = writeln!(out, "sense accuracy: {:.4} ({}/{})", sense.accuracy, sense.correct, sense.total);
        }
        out
    }

    pub fn per_role_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["role", "precision", "recall", "f1", "tp", "fp", "fn", "count"])
            .expect("in-memory write");
        for (role, s) in &self.per_role {
            w.write_record([
                role.canonical(),
                format!("{:.6}", s.precision),
                format!("{:.6}", s.recall),
                format!("{:.6}", s.f1),
                s.tp.to_string(),
                s.fp.to_string(),
                s.fn_.to_string(),
                s.count().to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
