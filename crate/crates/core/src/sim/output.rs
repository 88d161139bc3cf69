use std::fmt::Write as _;

/// One aggregated metric at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Rows of `(snr_db, label, mean, stderr, trials)` plus free-form `#` notes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// Header of the label column, e.g. `estimator`.
    pub label_column: String,
    /// Prefix of the mean and stderr columns, e.g. `nmse_db`.
    pub metric: String,
    pub rows: Vec<ResultRow>,
    pub notes: Vec<String>,
}

impl ResultTable {
    pub fn new(label_column: &str, metric: &str) -> Self {
        Self {
            label_column: label_column.into(),
            metric: metric.into(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn header(&self) -> String {
        format!(
            "snr_db,{},{m}_mean,{m}_stderr,trials",
            self.label_column,
            m = self.metric
        )
    }

    /// Notes first as `# ` lines, then the header and rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(out, "{}", self.header());
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.snr_db, r.label, r.mean, r.stderr, r.trials);
        }
        out
    }

    pub fn labels(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for r in &self.rows {
            if !seen.contains(&r.label) {
                seen.push(r.label.clone());
            }
        }
        seen
    }

    pub fn get(&self, snr_db: f64, label: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.snr_db == snr_db && r.label == label)
    }

    /// `(snr, mean)` pairs of one label, in row order.
    pub fn series(&self, label: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.label == label)
            .map(|r| (r.snr_db, r.mean))
            .collect()
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Minimal SVG line chart of every label in the table against SNR. With
/// `log_y`, non-positive values are dropped and the axis is base-10.
pub fn line_plot_svg(table: &ResultTable, title: &str, log_y: bool) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let series: Vec<(String, Vec<(f64, f64)>)> = table
        .labels()
        .into_iter()
        .map(|l| {
            let pts = table
                .series(&l)
                .into_iter()
                .filter(|(_, v)| v.is_finite() && (!log_y || *v > 0.0))
                .map(|(x, v)| (x, if log_y { v.log10() } else { v }))
                .collect();
            (l, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#,
        w / 2.0
    );
    if all.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| all.iter().map(pick).fold(init, f);
    let (x0, x1) = (
        fold(f64::min, f64::INFINITY, |p| p.0),
        fold(f64::max, f64::NEG_INFINITY, |p| p.0),
    );
    let (mut y0, mut y1) = (
        fold(f64::min, f64::INFINITY, |p| p.1),
        fold(f64::max, f64::NEG_INFINITY, |p| p.1),
    );
    if log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    }
    if y1 - y0 < 1e-12 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let xs = if x1 > x0 { (w - 2.0 * pad) / (x1 - x0) } else { 0.0 };
    let ys = (h - 2.0 * pad) / (y1 - y0);
    let px = |x: f64| pad + (x - x0) * xs;
    let py = |y: f64| h - pad - (y - y0) * ys;
    let _ = writeln!(
        svg,
        r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for k in 0..=4 {
        let yv = y0 + (y1 - y0) * k as f64 / 4.0;
        let text = if log_y {
            format!("1e{yv:.1}")
        } else {
            format!("{yv:.1}")
        };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{text}</text>"#,
            pad - 4.0,
            py(yv) + 4.0
        );
        let xv = x0 + (x1 - x0) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{xv:.1}</text>"#,
            px(xv),
            h - pad + 16.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">SNR (dB)</text>"#,
        w / 2.0,
        h - 16.0
    );
    for (k, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        );
        let ly = pad + 14.0 + 16.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly}" fill="{color}">{label}</text>"#,
            w - pad - 120.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
