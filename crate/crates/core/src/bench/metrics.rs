use serde::{Deserialize, Serialize};

/// Accuracies in percent and the gaps derived from them. Values are kept
/// unrounded; [`round_display`] is for presentation only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub id_acc: f64,
    pub ood_acc: f64,
    pub delta: f64,
    pub avg: f64,
    pub unconfounded_acc: Option<f64>,
    pub overall: Option<f64>,
}

pub fn compute_metrics(id_acc: f64, ood_acc: f64, unconfounded_acc: Option<f64>) -> Metrics {
    let avg = (id_acc + ood_acc) / 2.0;
    Metrics {
        id_acc,
        ood_acc,
        delta: (id_acc - ood_acc).abs(),
        avg,
        unconfounded_acc,
        overall: unconfounded_acc.map(|u| (avg + u) / 2.0),
    }
}

/// Half-up rounding to one decimal.
pub fn round_display(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{:.1}", round_display(v)))
}

impl Metrics {
    /// Display cells: ID, OOD, Δ, Avg, Unconfd, Overall.
    pub fn display_cells(&self) -> [String; 6] {
        [
            cell(Some(self.id_acc)),
            cell(Some(self.ood_acc)),
            cell(Some(self.delta)),
            cell(Some(self.avg)),
            cell(self.unconfounded_acc),
            cell(self.overall),
        ]
    }

    /// `ID / OOD / Δ / Avg` as printed in result rows.
    pub fn headline(&self) -> String {
        let c = self.display_cells();
        format!("{} / {} / {} / {}", c[0], c[1], c[2], c[3])
    }
}

/// Fixed-width table of named metric rows.
pub fn format_table(rows: &[(String, Metrics)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<width$} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}\n",
        "method", "ID", "OOD", "Δ", "Avg", "Unconfd", "Overall"
    );
    for (name, m) in rows {
        let c = m.display_cells();
        out.push_str(&format!(
            "{:<width$} {:>7} {:>7} {:>7} {:>7} {:>8} {:>8}\n",
            name, c[0], c[1], c[2], c[3], c[4], c[5]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headline_row() {
        let m = compute_metrics(89.7, 58.8, Some(73.1));
        assert_eq!(m.headline(), "89.7 / 58.8 / 30.9 / 74.3");
        assert_eq!(m.display_cells()[5], "73.7");
    }

    #[test]
    fn equal_accuracies() {
        let m = compute_metrics(61.5, 61.5, None);
        assert_eq!((m.delta, m.avg, m.overall), (0.0, 61.5, None));
    }

    #[test]
    fn half_up() {
        assert_eq!(round_display(74.25), 74.3);
        assert_eq!(round_display(0.05), 0.1);
        assert_eq!(round_display(12.34), 12.3);
    }

    #[test]
    fn table_has_all_rows() {
        let t = format_table(&[("probe".into(), compute_metrics(100.0, 0.0, None))]);
        assert_eq!(t.lines().count(), 2);
        assert!(t.contains("100.0"));
    }
}
