//! Run summaries and report rendering: markdown tables, figure data as CSV,
//! self-contained SVG line plots, and a manifest tying outputs to the seed
//! and a hash of the effective configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::FitReport;
use crate::diagnostics::{
    DeviationReport, MetricsReport, PeReport, SaturationReport, SensitivityRow,
};
use crate::error::{CpsgError, Result};
use crate::scenario::StateVector;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Hash of the canonical JSON form of any serializable configuration.
/// JSON maps serialize with sorted keys, so the digest is stable.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub scenario: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Input file path -> sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, scenario: &str, seed: u64, config_sha256: String) -> Self {
        Manifest {
            command: command.into(),
            scenario: scenario.into(),
            seed,
            config_sha256,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| CpsgError::read(path, e))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

/// Everything a single CLI run wants to persist about itself; the `report`
/// command merges these across runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: String,
    pub scenario: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_loop: Option<MetricsReport>,
    /// Online training trajectory (probing included), when it differs from
    /// the headline closed-loop rollout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<DeviationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pe: Option<PeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<SaturationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Vec<SensitivityRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<FitReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn new(kind: &str, scenario: &str, seed: u64) -> Self {
        RunSummary {
            kind: kind.into(),
            scenario: scenario.into(),
            seed,
            label: None,
            metrics: None,
            open_loop: None,
            training: None,
            deviation: None,
            pe: None,
            saturation: None,
            sensitivity: None,
            calibration: None,
            notes: Vec::new(),
        }
    }

    pub fn display_label(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("{} ({})", self.kind, self.scenario),
        }
    }
}

/// Accepts either a summary file or a run directory containing
/// `summary.json`.
pub fn load_summary(path: &Path) -> Result<RunSummary> {
    let file = if path.is_dir() { path.join("summary.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|e| CpsgError::read(&file, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CpsgError::write(parent, e))?;
    }
    fs::write(path, content).map_err(|e| CpsgError::write(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_string(path, &text)
}

fn f4(v: f64) -> String {
    format!("{v:.4}")
}

fn opt_pct(v: Option<f64>) -> String {
    match v {
        Some(p) => format!("{p:.2}"),
        None => "-".into(),
    }
}

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

pub fn metrics_table(rows: &[(String, &MetricsReport)]) -> String {
    let mut out = String::new();
    out.push_str(
        "| run | mean fear | fear red. % | power def. | health def. | EMS def. | fake news | effort | J1 | J2 | J3 | total J |\n",
    );
    out.push_str("|---|---|---|---|---|---|---|---|---|---|---|---|\n");
    for (label, m) in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            label,
            f4(m.mean_fear),
            opt_pct(m.fear_reduction_pct),
            f4(m.power_deficit),
            f4(m.health_deficit),
            f4(m.ems_deficit),
            f4(m.fake_news),
            f4(m.effort),
            f4(m.per_player_cost[0]),
            f4(m.per_player_cost[1]),
            f4(m.per_player_cost[2]),
            f4(m.total_cost),
        );
    }
    out
}

pub fn deviation_table(report: &DeviationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} isotropic directions per player, seed {}.\n",
        report.n_directions, report.seed
    );
    out.push_str("| player | base cost | scale | min cost | mean cost | max cost | exploitability % |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for p in &report.players {
        for s in &p.scales {
            let _ = writeln!(
                out,
                "| P{} | {} | {} | {} | {} | {} | {:.3} |",
                p.player,
                f4(p.base_cost),
                s.scale,
                f4(s.min_cost),
                f4(s.mean_cost),
                f4(s.max_cost),
                s.exploitability_pct,
            );
        }
    }
    out
}

pub fn sensitivity_table(rows: &[SensitivityRow]) -> String {
    let mut out = String::new();
    out.push_str("| variant | mean fear | fear red. % | effort | total J | final |eps| |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {:.2} | {} | {} | {:.6} |",
            r.label,
            f4(r.mean_fear),
            r.fear_reduction_pct,
            f4(r.effort),
            f4(r.total_cost),
            r.final_residual_inf,
        );
    }
    out
}

pub fn pe_section(report: &PeReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Normalized regressor Gram matrix over {} steps (basis dimension {}).\n",
        report.steps, report.basis_dim
    );
    let _ = writeln!(
        out,
        "- effective rank: {} (threshold {:.3e})",
        report.effective_rank, report.rank_threshold
    );
    let _ = writeln!(out, "- largest eigenvalue: {:.6e}", report.max_eig);
    let _ = writeln!(out, "- final minimum eigenvalue: {:.6e}", report.final_min_eig);
    let _ = writeln!(
        out,
        "- minimum eigenvalue over excitation window ({} steps): {:.6e}",
        report.excitation_steps, report.windowed_min_eig
    );
    out
}

pub fn saturation_section(report: &SaturationReport) -> String {
    let mut out = String::new();
    out.push_str("| player | raw < 0 | raw > cap | applied = 0 |\n|---|---|---|---|\n");
    for i in 0..3 {
        let _ = writeln!(
            out,
            "| P{} | {:.3} | {:.3} | {:.3} |",
            i + 1,
            report.below_zero[i],
            report.above_max[i],
            report.at_zero[i],
        );
    }
    let hits: Vec<String> = report
        .state_clamp_fraction
        .iter()
        .enumerate()
        .filter(|(_, f)| **f > 0.0)
        .map(|(i, f)| format!("x{} {:.3}", i + 1, f))
        .collect();
    if hits.is_empty() {
        out.push_str("\nNo state component hit the box projection.\n");
    } else {
        let _ = writeln!(out, "\nBox-projection hit fractions: {}.", hits.join(", "));
    }
    out
}

pub fn calibration_section(report: &FitReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "- final loss {:.6e} (residual {:.6e}, lambda {})",
        report.final_loss, report.residual, report.lambda
    );
    let _ = writeln!(
        out,
        "- iterations {} (converged: {})",
        report.iterations, report.converged
    );
    let _ = writeln!(out, "- derivative RMSE {:.6e}", report.derivative_rmse);
    if report.degenerate_data {
        out.push_str("- WARNING: observed trajectory carried no derivative information\n");
    }
    for w in &report.warnings {
        let _ = writeln!(out, "- note: {w}");
    }
    out
}

/// Merge any number of run summaries into a single markdown report.
pub fn render_report(summaries: &[RunSummary]) -> String {
    let mut out = String::from("# Run report\n");
    let metric_rows: Vec<(String, &MetricsReport)> = summaries
        .iter()
        .filter_map(|s| s.metrics.as_ref().map(|m| (s.display_label(), m)))
        .collect();
    let training_rows: Vec<(String, &MetricsReport)> = summaries
        .iter()
        .filter_map(|s| {
            s.training
                .as_ref()
                .map(|m| (format!("{} [training]", s.display_label()), m))
        })
        .collect();
    let open_rows: Vec<(String, &MetricsReport)> = summaries
        .iter()
        .filter_map(|s| {
            s.open_loop
                .as_ref()
                .map(|m| (format!("{} [open loop]", s.display_label()), m))
        })
        .collect();
    if !metric_rows.is_empty() || !open_rows.is_empty() {
        out.push_str("\n## Outcome metrics\n\n");
        let mut rows = metric_rows;
        rows.extend(training_rows);
        rows.extend(open_rows);
        out.push_str(&metrics_table(&rows));
    }
    for s in summaries {
        if let Some(dev) = &s.deviation {
            let _ = writeln!(out, "\n## Unilateral deviations — {}\n", s.display_label());
            out.push_str(&deviation_table(dev));
        }
    }
    for s in summaries {
        if let Some(pe) = &s.pe {
            let _ = writeln!(out, "\n## Excitation diagnostics — {}\n", s.display_label());
            out.push_str(&pe_section(pe));
        }
    }
    for s in summaries {
        if let Some(sat) = &s.saturation {
            let _ = writeln!(out, "\n## Saturation — {}\n", s.display_label());
            out.push_str(&saturation_section(sat));
        }
    }
    for s in summaries {
        if let Some(rows) = &s.sensitivity {
            let _ = writeln!(out, "\n## Design sensitivity — {}\n", s.display_label());
            out.push_str(&sensitivity_table(rows));
        }
    }
    for s in summaries {
        if let Some(cal) = &s.calibration {
            let _ = writeln!(out, "\n## Calibration — {}\n", s.display_label());
            out.push_str(&calibration_section(cal));
        }
    }
    let noted: Vec<&RunSummary> = summaries.iter().filter(|s| !s.notes.is_empty()).collect();
    if !noted.is_empty() {
        out.push_str("\n## Notes\n\n");
        for s in noted {
            for n in &s.notes {
                let _ = writeln!(out, "- {}: {}", s.display_label(), n);
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Figure data (CSV)
// ---------------------------------------------------------------------------

/// Side-by-side state trajectories: `t, a_x1..a_x10, b_x1..b_x10`.
pub fn states_csv(a: &[StateVector], b: &[StateVector], dt: f64, a_name: &str, b_name: &str) -> String {
    let mut out = String::from("t");
    for i in 1..=10 {
        let _ = write!(out, ",{a_name}_x{i}");
    }
    for i in 1..=10 {
        let _ = write!(out, ",{b_name}_x{i}");
    }
    out.push('\n');
    let len = a.len().min(b.len());
    for k in 0..len {
        let _ = write!(out, "{}", k as f64 * dt);
        for i in 0..10 {
            let _ = write!(out, ",{}", a[k][i]);
        }
        for i in 0..10 {
            let _ = write!(out, ",{}", b[k][i]);
        }
        out.push('\n');
    }
    out
}

pub fn pe_csv(report: &PeReport) -> String {
    let mut out = String::from("step,min_eig\n");
    for (k, v) in report.min_eig_series.iter().enumerate() {
        let _ = writeln!(out, "{},{}", k + 1, v);
    }
    out
}

pub fn deviation_csv(report: &DeviationReport) -> String {
    let mut out =
        String::from("player,scale,base_cost,min_cost,mean_cost,max_cost,exploitability_pct\n");
    for p in &report.players {
        for s in &p.scales {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                p.player, s.scale, p.base_cost, s.min_cost, s.mean_cost, s.max_cost,
                s.exploitability_pct
            );
        }
    }
    out
}

pub fn sensitivity_csv(rows: &[SensitivityRow]) -> String {
    let mut out = String::from("label,mean_fear,fear_reduction_pct,effort,total_cost,final_residual_inf\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.label, r.mean_fear, r.fear_reduction_pct, r.effort, r.total_cost, r.final_residual_inf
        );
    }
    out
}

// ---------------------------------------------------------------------------
// SVG line plots
// ---------------------------------------------------------------------------

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Minimal dependency-free line plot. `series` pairs a legend label with
/// `(x, y)` points.
pub fn line_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let width = 720.0;
    let height = 420.0;
    let (ml, mr, mt, mb) = (62.0, 20.0, 34.0, 44.0);
    let pw = width - ml - mr;
    let ph = height - mt - mb;

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() {
                xmin = xmin.min(x);
                xmax = xmax.max(x);
                ymin = ymin.min(y);
                ymax = ymax.max(y);
            }
        }
    }
    if !xmin.is_finite() {
        xmin = 0.0;
        xmax = 1.0;
        ymin = 0.0;
        ymax = 1.0;
    }
    if (xmax - xmin).abs() < 1e-12 {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin).abs() < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let pad = 0.04 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    let sx = move |x: f64| ml + (x - xmin) / (xmax - xmin) * pw;
    let sy = move |y: f64| mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        title
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(svg, "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>", mt + ph);
    for k in 0..=4 {
        let fx = xmin + (xmax - xmin) * k as f64 / 4.0;
        let fy = ymin + (ymax - ymin) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.3}</text>",
            sx(fx),
            mt + ph + 16.0,
            fx
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            ml - 6.0,
            sy(fy) + 3.0,
            fy
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{ml}\" y1=\"{0:.1}\" x2=\"{1}\" y2=\"{0:.1}\" stroke=\"#dddddd\"/>",
            sy(fy),
            ml + pw
        );
    }
    for (idx, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in pts {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            path.trim_end()
        );
        let ly = mt + 14.0 * idx as f64 + 4.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            ml + pw - 110.0,
            ml + pw - 90.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            ml + pw - 84.0,
            ly + 3.0,
            label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Convenience: one series per state component from a trajectory.
pub fn states_series(states: &[StateVector], dt: f64, components: &[usize]) -> Vec<(String, Vec<(f64, f64)>)> {
    components
        .iter()
        .map(|&i| {
            let pts = states
                .iter()
                .enumerate()
                .map(|(k, x)| (k as f64 * dt, x[i]))
                .collect();
            (format!("x{}", i + 1), pts)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_key_order_independent() {
        let a: serde_json::Value = serde_json::from_str(r#"{"b": 1, "a": 2}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"a": 2, "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(sha256_hex(b"").len(), 64);
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn summary_roundtrip_without_optionals() {
        let s = RunSummary::new("train", "harvey_synth", 42);
        let text = serde_json::to_string(&s).unwrap();
        assert!(!text.contains("metrics"));
        let back: RunSummary = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kind, "train");
        assert_eq!(back.display_label(), "train (harvey_synth)");
    }

    #[test]
    fn metrics_table_shape() {
        let m = MetricsReport {
            mean_fear: 0.3,
            fear_reduction_pct: Some(42.0),
            power_deficit: 0.2,
            health_deficit: 0.1,
            ems_deficit: 0.15,
            fake_news: 0.4,
            effort: 10.0,
            per_player_cost: [1.0, 2.0, 3.0],
            total_cost: 6.0,
            rmse_vs_observed: None,
        };
        let table = metrics_table(&[("run".into(), &m)]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("| run | 0.3000 | 42.00 |"));
    }

    #[test]
    fn svg_smoke() {
        let series = vec![
            ("a".to_string(), vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]),
            ("b".to_string(), vec![(0.0, 1.0), (2.0, 0.0)]),
        ];
        let svg = line_svg("demo", &series);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
        // Degenerate input should not panic or divide by zero.
        let flat = line_svg("flat", &[("c".to_string(), vec![(1.0, 3.0)])]);
        assert!(flat.contains("</svg>"));
        let empty = line_svg("empty", &[]);
        assert!(empty.contains("</svg>"));
    }

    #[test]
    fn states_csv_columns() {
        let a = vec![StateVector([0.1; 10]), StateVector([0.2; 10])];
        let b = vec![StateVector([0.3; 10]), StateVector([0.4; 10])];
        let csv = states_csv(&a, &b, 0.5, "open", "closed");
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(header.split(',').count(), 21);
        assert!(header.contains("open_x1"));
        assert!(header.contains("closed_x10"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("0,0.1"));
    }
}
