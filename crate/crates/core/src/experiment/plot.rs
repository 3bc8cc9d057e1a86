//! Minimal SVG output: line charts and grids of bar panels.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_x: bool,
    pub log_y: bool,
}

/// Linear or log10 mapping from data range to pixel range.
#[derive(Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, from: f64, to: f64) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite() && (!log || *v > 0.0))
            .map(|v| if log { v.log10() } else { v })
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log, from, to }
    }

    fn map(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite()
            .then(|| self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            return (self.lo.ceil() as i32..=self.hi.floor() as i32)
                .map(|e| (self.map(10f64.powi(e)).expect("positive"), format!("1e{e}")))
                .collect();
        }
        (0..=4)
            .map(|i| {
                let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                (self.map(v).expect("finite"), format!("{v:.3}"))
            })
            .collect()
    }
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl LineChart {
    pub fn render(&self) -> String {
        let mut out = String::new();
        header(&mut out, WIDTH, HEIGHT, &self.title);
        let points = || self.series.iter().flat_map(|s| s.points.iter());
        let x = Axis::new(points().map(|p| p.0), self.log_x, MARGIN, WIDTH - MARGIN / 2.0);
        let y = Axis::new(points().map(|p| p.1), self.log_y, HEIGHT - MARGIN, MARGIN / 2.0 + 8.0);
        let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{x0} {:.1} V{y0} H{:.1}" stroke="black" fill="none"/>"#,
            MARGIN / 2.0 + 8.0,
            WIDTH - MARGIN / 2.0
        );
        for (px, label) in x.ticks() {
            let _ = writeln!(out, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, y0 + 14.0);
        }
        for (py, label) in y.ticks() {
            let _ = writeln!(out, r#"<text x="{:.1}" y="{py:.1}" text-anchor="end">{label}</text>"#, x0 - 4.0);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (x0 + WIDTH - MARGIN / 2.0) / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let path: Vec<String> = s
                .points
                .iter()
                .filter_map(|&(px, py)| Some(format!("{:.1},{:.1}", x.map(px)?, y.map(py)?)))
                .collect();
            if !path.is_empty() {
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    path.join(" ")
                );
            }
            let ly = MARGIN / 2.0 + 12.0 + 14.0 * i as f64;
            let lx = WIDTH - MARGIN / 2.0 - 150.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                lx + 18.0,
                lx + 22.0,
                ly + 4.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// One histogram: bar `(x, height)` pairs plus an optional vertical marker.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BarPanel {
    pub bars: Vec<(f64, f64)>,
    pub marker: Option<f64>,
}

/// Panels laid out by row and column, sharing the x range `[0, 1]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BarGrid {
    pub title: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub panels: Vec<Vec<Option<BarPanel>>>,
}

impl BarGrid {
    pub fn render(&self) -> String {
        const CELL_W: f64 = 260.0;
        const CELL_H: f64 = 170.0;
        const LEFT: f64 = 70.0;
        const TOP: f64 = 52.0;
        let rows = self.row_labels.len();
        let cols = self.col_labels.len();
        let width = LEFT + CELL_W * cols as f64 + 16.0;
        let height = TOP + CELL_H * rows as f64 + 24.0;
        let mut out = String::new();
        header(&mut out, width, height, &self.title);
        for (c, label) in self.col_labels.iter().enumerate() {
            let cx = LEFT + CELL_W * (c as f64 + 0.5);
            let _ = writeln!(out, r#"<text x="{cx:.1}" y="40" text-anchor="middle">{}</text>"#, escape(label));
        }
        for (r, label) in self.row_labels.iter().enumerate() {
            let cy = TOP + CELL_H * (r as f64 + 0.5);
            let _ = writeln!(out, r#"<text x="8" y="{cy:.1}">{}</text>"#, escape(label));
            for c in 0..cols {
                let Some(Some(panel)) = self.panels.get(r).and_then(|row| row.get(c)) else {
                    continue;
                };
                let x0 = LEFT + CELL_W * c as f64 + 10.0;
                let y0 = TOP + CELL_H * (r + 1) as f64 - 22.0;
                let w = CELL_W - 24.0;
                let h = CELL_H - 40.0;
                render_panel(&mut out, panel, x0, y0, w, h);
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn render_panel(out: &mut String, panel: &BarPanel, x0: f64, y0: f64, w: f64, h: f64) {
    let top = panel.bars.iter().map(|b| b.1).fold(0.0, f64::max).max(1e-12);
    let _ = writeln!(out, r#"<path d="M{x0:.1} {:.1} V{y0:.1} H{:.1}" stroke="black" fill="none"/>"#, y0 - h, x0 + w);
    let bar_w = (w / (panel.bars.len().max(1) as f64 * 2.5)).clamp(2.0, 24.0);
    for &(x, value) in &panel.bars {
        let bh = value / top * h;
        let px = x0 + x.clamp(0.0, 1.0) * w - bar_w / 2.0;
        let _ = writeln!(
            out,
            r#"<rect x="{px:.1}" y="{:.1}" width="{bar_w:.1}" height="{bh:.1}" fill="{}"/>"#,
            y0 - bh,
            PALETTE[0]
        );
    }
    if let Some(m) = panel.marker {
        let px = x0 + m.clamp(0.0, 1.0) * w;
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{:.1}" x2="{px:.1}" y2="{y0:.1}" stroke="{}" stroke-dasharray="4 3"/>"#,
            y0 - h,
            PALETTE[1]
        );
    }
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            x0 + v * w,
            y0 + 13.0
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let chart = LineChart {
            title: "loss <log>".into(),
            series: vec![Series {
                label: "a".into(),
                points: vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.0)],
            }],
            log_y: true,
            ..LineChart::default()
        };
        let svg = chart.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;log&gt;"));
        // the zero point cannot sit on a log axis and is dropped
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg, chart.render());
    }

    #[test]
    fn grid_draws_one_rect_per_bar() {
        let panel = BarPanel {
            bars: vec![(0.0, 1.0), (0.5, 3.0), (1.0, 0.0)],
            marker: Some(0.45),
        };
        let grid = BarGrid {
            title: "t".into(),
            row_labels: vec!["ideal".into()],
            col_labels: vec!["n=3".into(), "n=4".into()],
            panels: vec![vec![Some(panel.clone()), Some(panel)]],
        };
        let svg = grid.render();
        assert_eq!(svg.matches("<rect").count(), 1 + 6);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
    }
}
