//! CSV tables and a minimal SVG line chart.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::engine::SimReport;
use crate::error::{Error, Result};

/// Bumped whenever a column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

/// Columns written for every simulation row.
pub const SIM_COLUMNS: &[&str] = &[
    "schema_version",
    "label",
    "params",
    "seed",
    "workload_id",
    "policy",
    "tracker",
    "alpha",
    "trh",
    "flips",
    "first_flip_row",
    "first_flip_time",
    "max_peak_charge",
    "demand_acts",
    "mitigative_acts",
    "mitigations",
    "rfm_count",
    "refresh_count",
    "elapsed_ticks",
    "mitigation_ticks",
    "rfm_ticks",
    "slowdown",
];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn new(columns: &[&str]) -> Self {
        ReportTable { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Schema(format!(
                "row has {} fields, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c == name).ok_or_else(|| Error::Schema(format!("no column '{name}'")))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let columns: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            rows.push(rec?.iter().map(str::to_string).collect());
        }
        Ok(ReportTable { columns, rows })
    }
}

/// Context printed next to the counters of one simulation row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RowContext {
    pub label: String,
    pub params: String,
    pub policy: String,
    pub tracker: String,
    pub alpha: String,
    pub trh: String,
}

pub fn sim_row(ctx: &RowContext, r: &SimReport) -> Vec<String> {
    let first = r.first_flip();
    vec![
        SCHEMA_VERSION.to_string(),
        ctx.label.clone(),
        ctx.params.clone(),
        r.seed.to_string(),
        format!("{:016x}", r.workload_id),
        ctx.policy.clone(),
        ctx.tracker.clone(),
        ctx.alpha.clone(),
        ctx.trh.clone(),
        r.flips.len().to_string(),
        first.map_or(String::new(), |f| f.row.to_string()),
        first.map_or(String::new(), |f| f.time.to_string()),
        r.max_peak().to_string(),
        r.demand_acts.to_string(),
        r.mitigative_acts.to_string(),
        r.mitigations.to_string(),
        r.rfm_count.to_string(),
        r.refresh_count.to_string(),
        r.elapsed.to_string(),
        r.mitigation_ticks.to_string(),
        r.rfm_ticks.to_string(),
        format!("{:.9}", r.slowdown()),
    ]
}

const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];

/// Line chart of `y` against `x`, one line per distinct value of `series`.
/// Output depends only on the table contents.
pub fn plot_svg(table: &ReportTable, x: &str, y: &str, series: Option<&str>) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::Schema("table has no rows to plot".into()));
    }
    let xi = table.column(x)?;
    let yi = table.column(y)?;
    let si = series.map(|s| table.column(s)).transpose()?;
    let parse = |row: usize, col: usize| -> Result<f64> {
        let v = &table.rows[row][col];
        v.parse::<f64>().map_err(|_| {
            Error::Schema(format!("row {}: '{}' in column '{}' is not a number", row + 1, v, table.columns[col]))
        })
    };
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in 0..table.rows.len() {
        let name = si.map_or(String::new(), |c| table.rows[r][c].clone());
        let pt = (parse(r, xi)?, parse(r, yi)?);
        match groups.iter_mut().find(|g| g.0 == name) {
            Some(g) => g.1.push(pt),
            None => groups.push((name, vec![pt])),
        }
    }
    for g in &mut groups {
        g.1.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all = groups.iter().flat_map(|g| g.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(px, py) in all {
        x0 = x0.min(px);
        x1 = x1.max(px);
        y0 = y0.min(py);
        y1 = y1.max(py);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let (w, h, m) = (640.0, 400.0, 60.0);
    let sx = |v: f64| m + (v - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |v: f64| h - m - (v - y0) / (y1 - y0) * (h - 2.0 * m);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r##"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="#333"/>"##, b = h - m, r = w - m);
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            sx(fx),
            h - m + 16.0,
            fmt_tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
            m - 6.0,
            sy(fy) + 4.0,
            fmt_tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
        w / 2.0,
        h - 12.0,
        escape(x)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y)
    );
    for (i, (name, pts)) in groups.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(px, py)| format!("{:.2},{:.2}", sx(px), sy(py))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        for &(px, py) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(px), sy(py));
        }
        if !name.is_empty() {
            let ly = m + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{}</text>"#,
                w - m + 4.0,
                ly,
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    let t = format!("{v:.4}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ReportTable {
        let mut t = ReportTable::new(&["k", "slowdown", "tracker"]);
        for (k, v, s) in [(0, 0.04, "para"), (10, 0.02, "para"), (0, 0.008, "graphene"), (10, 0.008, "graphene")] {
            t.push(vec![k.to_string(), v.to_string(), s.to_string()]).unwrap();
        }
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = table();
        let text = t.to_csv_string().unwrap();
        assert_eq!(ReportTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn svg_is_stable_and_validates_input() {
        let t = table();
        let a = plot_svg(&t, "k", "slowdown", Some("tracker")).unwrap();
        assert_eq!(a, plot_svg(&t, "k", "slowdown", Some("tracker")).unwrap());
        assert!(a.starts_with("<svg") && a.contains("polyline"));
        assert!(matches!(plot_svg(&ReportTable::new(&["k"]), "k", "k", None), Err(Error::Schema(_))));
        assert!(matches!(plot_svg(&t, "k", "missing", None), Err(Error::Schema(_))));
        assert!(matches!(plot_svg(&t, "tracker", "k", None), Err(Error::Schema(_))));
    }
}
