//! Hand-emitted SVG plots for the diagnostic outputs: the class-occupancy
//! trace, autocorrelation stems, and marginal comparison bars. Everything is
//! plain string assembly on a fixed 800x500 canvas so the files are small,
//! deterministic, and diffable.

use super::acf::Acf;
use super::compare::MarginalComparison;
use crate::util::fmt_g6;
use crate::{Error, Result};
use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const PLOT_LEFT: f64 = 70.0;
const PLOT_RIGHT: f64 = 780.0;
const PLOT_TOP: f64 = 20.0;
const PLOT_BOTTOM: f64 = 450.0;
const TICKS: usize = 5;

const OBSERVED_COLOR: &str = "#333333";
const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1",
    "#ff9da7", "#9c755f", "#bab0ac",
];

pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Linear map from a data interval onto a pixel interval. A degenerate data
/// interval is widened so every value lands mid-plot instead of dividing by
/// zero.
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Scale {
        let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        Scale { lo, hi, px_lo, px_hi }
    }

    fn x(lo: f64, hi: f64) -> Scale {
        Scale::new(lo, hi, PLOT_LEFT, PLOT_RIGHT)
    }

    fn y(lo: f64, hi: f64) -> Scale {
        Scale::new(lo, hi, PLOT_BOTTOM, PLOT_TOP)
    }

    fn px(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..TICKS)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (TICKS - 1) as f64)
            .collect()
    }
}

fn document(body: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" ",
            "font-family=\"sans-serif\" font-size=\"12\">\n",
            "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "{body}</svg>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        body = body
    )
}

fn frame(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#888888\"/>",
        PLOT_LEFT,
        PLOT_TOP,
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"14\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        xml_escape(title)
    );
}

fn x_ticks(out: &mut String, scale: &Scale) {
    for t in scale.ticks() {
        let px = scale.px(t);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#888888\"/>",
            PLOT_BOTTOM,
            PLOT_BOTTOM + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            PLOT_BOTTOM + 18.0,
            xml_escape(&fmt_g6(t))
        );
    }
}

fn y_ticks(out: &mut String, scale: &Scale) {
    for t in scale.ticks() {
        let py = scale.px(t);
        let _ = writeln!(
            out,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#888888\"/>",
            PLOT_LEFT - 5.0,
            PLOT_LEFT
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            PLOT_LEFT - 9.0,
            py + 4.0,
            xml_escape(&fmt_g6(t))
        );
    }
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    if !x_label.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            (PLOT_LEFT + PLOT_RIGHT) / 2.0,
            HEIGHT - 10.0,
            xml_escape(x_label)
        );
    }
    let mid = (PLOT_TOP + PLOT_BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{mid:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {mid:.2})\">{}</text>",
        xml_escape(y_label)
    );
}

/// Line plot of the number of occupied classes at each kept sweep.
pub fn kstar_trace_svg(kstar: &[u32], title: &str) -> Result<String> {
    if kstar.is_empty() {
        return Err(Error::Data("the trace holds no kept sweeps to plot".into()));
    }
    let lo = *kstar.iter().min().unwrap() as f64;
    let hi = *kstar.iter().max().unwrap() as f64;
    let xs = Scale::x(1.0, kstar.len() as f64);
    let ys = Scale::y(lo, hi);

    let mut body = String::new();
    frame(&mut body, title);
    x_ticks(&mut body, &xs);
    y_ticks(&mut body, &ys);
    axis_labels(&mut body, "kept sweep", "occupied classes");

    let mut points = String::new();
    for (i, &k) in kstar.iter().enumerate() {
        if i > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{:.2},{:.2}", xs.px((i + 1) as f64), ys.px(k as f64));
    }
    let _ = writeln!(
        body,
        "<polyline points=\"{points}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
        PALETTE[0]
    );
    Ok(document(&body))
}

/// Stem plot of autocorrelations by lag. The vertical axis is pinned to
/// [-1, 1] so plots of different chains are comparable at a glance.
pub fn acf_svg(acf: &Acf, title: &str) -> Result<String> {
    if acf.values.is_empty() {
        return Err(Error::Data("no autocorrelations to plot".into()));
    }
    let xs = Scale::x(0.0, acf.max_lag() as f64);
    let ys = Scale::y(-1.0, 1.0);

    let mut body = String::new();
    frame(&mut body, title);
    x_ticks(&mut body, &xs);
    y_ticks(&mut body, &ys);
    axis_labels(&mut body, "lag", "autocorrelation");

    let zero = ys.px(0.0);
    let _ = writeln!(
        body,
        "<line x1=\"{:.2}\" y1=\"{zero:.2}\" x2=\"{:.2}\" y2=\"{zero:.2}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>",
        PLOT_LEFT, PLOT_RIGHT
    );
    for (lag, &r) in acf.values.iter().enumerate() {
        let px = xs.px(lag as f64);
        let py = ys.px(r.clamp(-1.0, 1.0));
        let _ = writeln!(
            body,
            "<line x1=\"{px:.2}\" y1=\"{zero:.2}\" x2=\"{px:.2}\" y2=\"{py:.2}\" stroke=\"{}\"/>",
            PALETTE[0]
        );
        let _ = writeln!(
            body,
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.5\" fill=\"{}\"/>",
            PALETTE[0]
        );
    }
    if acf.zero_variance {
        let _ = writeln!(
            body,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" fill=\"#aa3333\">series is constant</text>",
            (PLOT_LEFT + PLOT_RIGHT) / 2.0,
            (PLOT_TOP + PLOT_BOTTOM) / 2.0 - 10.0
        );
    }
    Ok(document(&body))
}

/// Grouped bar chart of one variable's marginal: the observed bar leads each
/// group, followed by one bar per released dataset.
pub fn comparison_svg(cmp: &MarginalComparison) -> Result<String> {
    if cmp.levels.is_empty() {
        return Err(Error::Data("the comparison has no levels to plot".into()));
    }
    if cmp.per_dataset_pct.is_empty() {
        return Err(Error::Data("the comparison has no released datasets to plot".into()));
    }
    let m = cmp.per_dataset_pct.len();
    let prefix = cmp.kind.column_prefix();
    let max_pct = cmp
        .observed_pct
        .iter()
        .chain(cmp.per_dataset_pct.iter().flatten())
        .fold(0.0f64, |a, &b| a.max(b));
    let top = if max_pct > 0.0 { max_pct * 1.08 } else { 1.0 };
    let ys = Scale::y(0.0, top);

    let mut body = String::new();
    frame(&mut body, &format!("{} marginal, observed vs released", cmp.var));
    y_ticks(&mut body, &ys);
    axis_labels(&mut body, "", "percent");

    let n_groups = cmp.levels.len();
    let group_w = (PLOT_RIGHT - PLOT_LEFT) / n_groups as f64;
    let bars_per_group = m + 1;
    // Bars fill 80% of each group slot; the rest is the gap between groups.
    let bar_w = group_w * 0.8 / bars_per_group as f64;

    for (l, level) in cmp.levels.iter().enumerate() {
        let group_left = PLOT_LEFT + l as f64 * group_w + group_w * 0.1;
        let center = PLOT_LEFT + (l as f64 + 0.5) * group_w;
        for s in 0..bars_per_group {
            let (pct, color, series) = if s == 0 {
                (cmp.observed_pct[l], OBSERVED_COLOR, "observed".to_string())
            } else {
                (
                    cmp.per_dataset_pct[s - 1][l],
                    PALETTE[(s - 1) % PALETTE.len()],
                    format!("{prefix}{s}"),
                )
            };
            let y = ys.px(pct);
            let _ = writeln!(
                body,
                "<rect series=\"{}\" x=\"{:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{:.2}\" fill=\"{color}\"/>",
                xml_escape(&series),
                group_left + s as f64 * bar_w,
                PLOT_BOTTOM - y
            );
        }
        let _ = writeln!(
            body,
            "<text x=\"{center:.2}\" y=\"{:.2}\" text-anchor=\"end\" transform=\"rotate(-30 {center:.2} {:.2})\">{}</text>",
            PLOT_BOTTOM + 16.0,
            PLOT_BOTTOM + 16.0,
            xml_escape(level)
        );
    }

    // Legend in the top-right corner of the plot area.
    let legend_x = PLOT_RIGHT - 120.0;
    let mut legend_y = PLOT_TOP + 12.0;
    for s in 0..bars_per_group {
        let (color, name) = if s == 0 {
            (OBSERVED_COLOR, "observed".to_string())
        } else {
            (PALETTE[(s - 1) % PALETTE.len()], format!("{prefix}{s}"))
        };
        let _ = writeln!(
            body,
            "<rect x=\"{legend_x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            legend_y - 9.0
        );
        let _ = writeln!(
            body,
            "<text x=\"{:.2}\" y=\"{legend_y:.2}\">{}</text>",
            legend_x + 15.0,
            xml_escape(&name)
        );
        legend_y += 16.0;
    }
    Ok(document(&body))
}
