//! Minimal static SVG line plots. Output depends only on the input table
//! and options, so identical inputs give identical bytes.

use std::fmt::Write;

use gem_core::table::Table;

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: Option<String>,
    pub loglog: bool,
}

#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 * hi.abs().max(1e-300) {
            let pad = if hi == 0.0 { 1.0 } else { 0.5 * hi.abs() };
            lo -= if log { 0.5 } else { pad };
            hi += if log { 0.5 } else { pad };
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Some(Self { lo, hi, log })
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data units.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i32..=self.hi as i32).map(|e| 10f64.powi(e)).collect();
        }
        let span = self.hi - self.lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| span / s <= 6.0)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        let s = format!("{v:.2e}");
        match s.split_once('e') {
            Some((m, e)) => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
            None => s,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Plots every column after the first against the first. Under `loglog`
/// columns named `log10_*` are skipped and non-positive points dropped.
pub fn render_svg(table: &Table, options: &PlotOptions) -> Result<String> {
    if table.columns.len() < 2 {
        return Err(CliError::Validation(format!(
            "plot needs at least two columns, found {}",
            table.columns.len()
        )));
    }
    let x = &table.columns[0];
    let keep = |v: f64| v.is_finite() && (!options.loglog || v > 0.0);
    let series: Vec<(&str, Vec<(f64, f64)>)> = table
        .headers
        .iter()
        .zip(&table.columns)
        .skip(1)
        .filter(|(name, _)| !(options.loglog && name.starts_with("log10_")))
        .map(|(name, ys)| {
            let pts = x
                .iter()
                .zip(ys)
                .filter(|(a, b)| keep(**a) && keep(**b))
                .map(|(a, b)| (*a, *b))
                .collect();
            (name.as_str(), pts)
        })
        .collect();
    let all = || series.iter().flat_map(|(_, p)| p.iter());
    let xs = Scale::fit(all().map(|p| p.0), options.loglog);
    let ys = Scale::fit(all().map(|p| p.1), options.loglog);
    let (Some(xs), Some(ys)) = (xs, ys) else {
        return Err(CliError::Validation("plot: no plottable points".into()));
    };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + xs.unit(v) * pw;
    let py = |v: f64| TOP + (1.0 - ys.unit(v)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(t) = &options.title {
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + 0.5 * pw,
            escape(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for t in xs.ticks() {
        let x = px(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{TOP}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            label(t)
        );
    }
    for t in ys.ticks() {
        let y = py(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 16.0,
        escape(&table.headers[0])
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts
                .iter()
                .map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b)))
                .collect();
            let _ = writeln!(
                w,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            if pts.len() <= 40 {
                for &(a, b) in pts {
                    let _ = writeln!(
                        w,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                        px(a),
                        py(b)
                    );
                }
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table::from_columns(
            &["storage_time_s", "efficiency_a", "log10_efficiency_a"],
            vec![vec![2e-5, 4e-5, 8e-5], vec![0.8, 0.6, 0.4], vec![-0.1, -0.2, -0.4]],
        )
    }

    #[test]
    fn rendering_is_deterministic() {
        let opts = PlotOptions {
            title: Some("decay <fit>".into()),
            loglog: false,
        };
        let a = render_svg(&table(), &opts).unwrap();
        assert_eq!(a, render_svg(&table(), &opts).unwrap());
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("decay &lt;fit&gt;"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn loglog_uses_decade_ticks_and_skips_log_columns() {
        let svg = render_svg(&table(), &PlotOptions { title: None, loglog: true }).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">1e-5<") && svg.contains(">1e-4<"), "{svg}");
    }

    #[test]
    fn single_column_is_rejected() {
        let t = Table::from_columns(&["x"], vec![vec![1.0]]);
        assert!(render_svg(&t, &PlotOptions::default()).is_err());
    }

    #[test]
    fn tick_labels_are_compact() {
        assert_eq!(label(0.5), "0.5");
        assert_eq!(label(2e-5), "2e-5");
        assert_eq!(label(100.0), "100");
    }
}
