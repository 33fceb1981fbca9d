//! Minimal SVG charts. Coordinates are printed at fixed precision so the
//! files are byte-stable.

use std::fmt::Write as _;

use crashlab_core::fmt::sig;

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 48.0;
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Padded data range; degenerate ranges are widened.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        lo -= pad;
        hi += pad;
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// One plotting area placed at `(ox, oy)` within a document.
struct Panel {
    ox: f64,
    oy: f64,
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.ox + MARGIN_L + (x - self.x.0) / (self.x.1 - self.x.0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi, v) = if self.log_y {
            (self.y.0.log10(), self.y.1.log10(), y.log10())
        } else {
            (self.y.0, self.y.1, y)
        };
        self.oy + PANEL_H - MARGIN_B - (v - lo) / (hi - lo) * (PANEL_H - MARGIN_T - MARGIN_B)
    }

    fn frame(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (x0, x1) = (self.ox + MARGIN_L, self.ox + PANEL_W - MARGIN_R);
        let (y0, y1) = (self.oy + MARGIN_T, self.oy + PANEL_H - MARGIN_B);
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y1 - y0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            (x0 + x1) / 2.0,
            self.oy + 22.0,
            esc(title)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            (x0 + x1) / 2.0,
            self.oy + PANEL_H - 8.0,
            esc(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="{0:.2}" y="{1:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {0:.2} {1:.2})">{2}</text>"#,
            self.ox + 14.0,
            (y0 + y1) / 2.0,
            esc(ylabel)
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
                self.px(xv),
                y1 + 14.0,
                sig(xv, 3)
            );
            let yv = if self.log_y {
                10f64.powf(self.y.0.log10() + f * (self.y.1.log10() - self.y.0.log10()))
            } else {
                self.y.0 + f * (self.y.1 - self.y.0)
            };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
                x0 - 4.0,
                self.py(yv) + 3.0,
                sig(yv, 3)
            );
        }
    }

    fn polyline(&self, s: &mut String, xs: &[f64], ys: &[f64], color: &str) {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
    }

    fn dots(&self, s: &mut String, xs: &[f64], ys: &[f64], color: &str) {
        for (&x, &y) in xs.iter().zip(ys) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}" fill-opacity="0.7"/>"#,
                self.px(x),
                self.py(y)
            );
        }
    }

    fn legend(&self, s: &mut String, names: &[&str]) {
        for (i, name) in names.iter().enumerate() {
            let (x, y) = (self.ox + MARGIN_L + 8.0, self.oy + MARGIN_T + 14.0 + 14.0 * i as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="3" fill="{}"/>"#,
                y - 4.0,
                PALETTE[i % PALETTE.len()]
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" font-size="10">{}</text>"#,
                x + 14.0,
                esc(name)
            );
        }
    }
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

/// True-versus-predicted scatter with the diagonal and an R² label.
pub fn parity(title: &str, unit: &str, y_true: &[f64], y_pred: &[f64], r2: f64) -> String {
    let r = range(y_true.iter().chain(y_pred).copied());
    let p = Panel {
        ox: 0.0,
        oy: 0.0,
        x: r,
        y: r,
        log_y: false,
    };
    let mut s = String::new();
    p.frame(
        &mut s,
        title,
        &format!("simulated {unit}"),
        &format!("predicted {unit}"),
    );
    p.polyline(&mut s, &[r.0, r.1], &[r.0, r.1], "#999");
    p.dots(&mut s, y_true, y_pred, PALETTE[0]);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="13">R² = {r2:.3}</text>"#,
        MARGIN_L + 10.0,
        MARGIN_T + 18.0
    );
    document(PANEL_W, PANEL_H, &s)
}

/// One horizontal-bar panel per group, stacked vertically.
pub fn bars(title: &str, groups: &[(String, Vec<(String, f64)>)]) -> String {
    let row_h = 16.0;
    let label_w = 150.0;
    let bar_w = PANEL_W - label_w - 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        PANEL_W / 2.0,
        esc(title)
    );
    let mut y = 40.0;
    for (gi, (group, items)) in groups.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="8" y="{:.2}" font-size="12" font-weight="bold">{}</text>"#,
            y + 12.0,
            esc(group)
        );
        y += 18.0;
        let max = items.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        for (name, v) in items {
            let w = if max > 0.0 { v / max * bar_w } else { 0.0 };
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
                label_w - 6.0,
                y + 11.0,
                esc(name)
            );
            let _ = writeln!(
                s,
                r#"<rect x="{label_w:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}"/>"#,
                y + 2.0,
                row_h - 4.0,
                PALETTE[gi % PALETTE.len()]
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-size="10">{v:.3}</text>"#,
                label_w + w + 4.0,
                y + 11.0
            );
            y += row_h;
        }
        y += 8.0;
    }
    document(PANEL_W, y + 8.0, &s)
}

/// One panel: y-axis label and its named series.
pub type SeriesPanel<'a> = (&'a str, Vec<(&'a str, &'a [f64])>);

/// Line series sharing an x axis, one panel per entry of `panels`.
pub fn lines(title: &str, xlabel: &str, x: &[f64], panels: &[SeriesPanel]) -> String {
    let mut s = String::new();
    for (i, (ylabel, series)) in panels.iter().enumerate() {
        let p = Panel {
            ox: 0.0,
            oy: i as f64 * PANEL_H,
            x: range(x.iter().copied()),
            y: range(series.iter().flat_map(|(_, ys)| ys.iter().copied())),
            log_y: false,
        };
        p.frame(&mut s, if i == 0 { title } else { "" }, xlabel, ylabel);
        for (j, (_, ys)) in series.iter().enumerate() {
            p.polyline(&mut s, x, ys, PALETTE[j % PALETTE.len()]);
        }
        let names: Vec<&str> = series.iter().map(|(n, _)| *n).collect();
        p.legend(&mut s, &names);
    }
    document(PANEL_W, PANEL_H * panels.len() as f64, &s)
}

/// Complexity against holdout MAE (log scale) as a step line with markers.
pub fn pareto(title: &str, complexity: &[f64], mae: &[f64]) -> String {
    let floor = mae.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    let shown: Vec<f64> = mae.iter().map(|&v| v.max(floor * 0.1)).collect();
    let (lo, hi) = shown
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let (lo, hi) = if lo.is_finite() {
        (lo / 2.0, hi * 2.0)
    } else {
        (0.1, 10.0)
    };
    let p = Panel {
        ox: 0.0,
        oy: 0.0,
        x: range(complexity.iter().copied()),
        y: (lo, hi),
        log_y: true,
    };
    let mut s = String::new();
    p.frame(&mut s, title, "complexity (nodes)", "holdout MAE");
    let mut sx = Vec::new();
    let mut sy = Vec::new();
    for (i, (&c, &m)) in complexity.iter().zip(&shown).enumerate() {
        if i > 0 {
            sx.push(c);
            sy.push(shown[i - 1]);
        }
        sx.push(c);
        sy.push(m);
    }
    p.polyline(&mut s, &sx, &sy, PALETTE[1]);
    p.dots(&mut s, complexity, &shown, PALETTE[1]);
    document(PANEL_W, PANEL_H, &s)
}
