//! Minimal SVG renderer for rejection-curve plots.

use stepuq_core::types::EvalReport;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 168.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 52.0;

const PALETTE: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22",
];

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Scale {
    fn x(&self, coverage: f64) -> f64 {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (coverage - self.x0) / (self.x1 - self.x0) * plot_w
    }

    fn y(&self, f1: f64) -> f64 {
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        HEIGHT - MARGIN_BOTTOM - (f1 - self.y0) / (self.y1 - self.y0) * plot_h
    }
}

/// Render Rejection-F1 over the displayed coverage band, one polyline per
/// estimator, with the unfiltered F1 as a dashed reference line.
pub fn rejection_curve_svg(report: &EvalReport, display: &[f64]) -> String {
    let lo = display.first().copied().unwrap_or(0.6);
    let hi = display.last().copied().unwrap_or(1.0);
    let mut y_max: f64 = report.global.verification_f1;
    for est in &report.estimators {
        for p in &est.rejection_curve {
            if p.coverage >= lo - 1e-9 && p.coverage <= hi + 1e-9 {
                y_max = y_max.max(p.f1);
            }
        }
    }
    let scale = Scale {
        x0: lo,
        x1: hi,
        y0: 0.0,
        y1: (y_max * 1.15).max(0.1),
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Axes.
    let x_axis_y = scale.y(0.0);
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        scale.x(lo),
        x_axis_y,
        scale.x(hi),
        x_axis_y
    ));
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        scale.x(lo),
        scale.y(scale.y1),
        scale.x(lo),
        x_axis_y
    ));

    // X ticks at the displayed coverages.
    for &c in display {
        let x = scale.x(c);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            x_axis_y,
            x_axis_y + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}%</text>\n",
            x_axis_y + 20.0,
            (c * 100.0).round() as i64
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">coverage (most confident X%)</text>\n",
        (scale.x(lo) + scale.x(hi)) / 2.0,
        HEIGHT - 12.0
    ));

    // Y ticks.
    for i in 0..=5 {
        let f1 = scale.y1 * i as f64 / 5.0;
        let y = scale.y(f1);
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            scale.x(lo) - 5.0,
            scale.x(lo)
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{f1:.2}</text>\n",
            scale.x(lo) - 9.0,
            y + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">Rejection-F1</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));

    // Unfiltered-F1 reference.
    let ref_y = scale.y(report.global.verification_f1);
    out.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{ref_y:.2}\" x2=\"{:.2}\" y2=\"{ref_y:.2}\" stroke=\"#999999\" stroke-dasharray=\"6 4\"/>\n",
        scale.x(lo),
        scale.x(hi)
    ));

    // One polyline per estimator over the displayed points.
    for (i, est) in report.estimators.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = est
            .rejection_curve
            .iter()
            .filter(|p| p.coverage >= lo - 1e-9 && p.coverage <= hi + 1e-9)
            .filter(|p| {
                let pct = (p.coverage * 100.0).round() as i64;
                display.iter().any(|d| (d * 100.0).round() as i64 == pct)
            })
            .map(|p| format!("{:.2},{:.2}", scale.x(p.coverage), scale.y(p.f1)))
            .collect();
        if points.is_empty() {
            continue;
        }
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
            points.join(" ")
        ));

        // Legend entry.
        let ly = MARGIN_TOP + 8.0 + i as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT + 14.0;
        out.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            lx + 18.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{}</text>\n",
            lx + 24.0,
            ly + 4.0,
            est.estimator
        ));
    }

    out.push_str("</svg>\n");
    out
}
