//! Static SVG figures rendered from analysis output. Rendering reads only the
//! analysis bundle, never the models, and output is plain deterministic text.

use std::fmt::Write as _;

use crate::analysis::{AnalysisBundle, BucketShares, ChangeStability, Overview, SpecCurve, TimeCurve};
use crate::outcomes::OutcomeBucket;

/// Fixed bucket colours, shared by every figure.
pub fn color(bucket: OutcomeBucket) -> &'static str {
    match bucket {
        OutcomeBucket::FullReplication => "#1b9e77",
        OutcomeBucket::UnconfirmedResults => "#e6ab02",
        OutcomeBucket::OppositeResults => "#d95f02",
        OutcomeBucket::ModelFitFailure => "#7570b3",
    }
}

// Greys for the change-stability histogram, one per distinct-outcome count.
const DISTINCT_COLORS: [&str; 4] = ["#d9d9d9", "#969696", "#525252", "#000000"];

const FONT: &str = "font-family=\"sans-serif\" font-size=\"11\"";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Svg {
        Svg { body: String::new(), width, height }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>"
        );
    }

    fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str) {
        let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{r:.2}\" fill=\"{fill}\"/>");
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"#444\" stroke-width=\"0.5\"/>"
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, text: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\" {FONT}>{}</text>",
            escape(text)
        );
    }

    fn legend(&mut self, x: f64, y: f64) {
        for (i, b) in OutcomeBucket::ALL.iter().enumerate() {
            let lx = x + i as f64 * 150.0;
            self.rect(lx, y - 9.0, 10.0, 10.0, color(*b));
            self.text(lx + 14.0, y, "start", b.label());
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn stacked_bar(svg: &mut Svg, x: f64, y: f64, width: f64, height: f64, shares: &BucketShares) {
    let mut offset = 0.0;
    for b in OutcomeBucket::ALL {
        let w = shares.proportions[&b].0 * width;
        if w > 0.0 {
            svg.rect(x + offset, y, w, height, color(b));
        }
        offset += w;
    }
}

/// Bucket shares for the whole study and for each dependent variable.
pub fn overview_svg(overview: &Overview) -> String {
    let rows: Vec<(&str, &BucketShares)> = std::iter::once(("study", &overview.study))
        .chain(overview.dvs.iter().map(|(k, v)| (k.as_str(), v)))
        .collect();
    let (left, bar_w, row_h) = (170.0, 560.0, 28.0);
    let mut svg = Svg::new(left + bar_w + 30.0, 60.0 + rows.len() as f64 * row_h + 30.0);
    svg.text(10.0, 20.0, "start", &format!("Outcome buckets across {} universes", overview.universes));
    for (i, (name, shares)) in rows.iter().enumerate() {
        let y = 40.0 + i as f64 * row_h;
        svg.text(left - 8.0, y + 15.0, "end", name);
        stacked_bar(&mut svg, left, y, bar_w, row_h - 8.0, shares);
        let full = shares.proportions[&OutcomeBucket::FullReplication].0;
        svg.text(left + bar_w + 4.0, y + 15.0, "start", &format!("{:.1}%", 100.0 * full));
    }
    svg.legend(10.0, 60.0 + rows.len() as f64 * row_h + 15.0);
    svg.finish()
}

/// Match count per universe (top) above the decision value each universe used (bottom).
pub fn spec_curve_svg(curve: &SpecCurve) -> String {
    let n = curve.universes.len().max(1);
    let (left, plot_w, top_h, value_h) = (190.0, 900.0, 220.0, 11.0);
    let decisions: Vec<(String, Vec<String>)> = match curve.universes.first() {
        Some(first) => first
            .assignment
            .keys()
            .map(|d| {
                let mut values: Vec<String> = Vec::new();
                for p in &curve.universes {
                    let v = &p.assignment[d];
                    if !values.contains(v) {
                        values.push(v.clone());
                    }
                }
                values.sort();
                (d.clone(), values)
            })
            .collect(),
        None => Vec::new(),
    };
    let rows: usize = decisions.iter().map(|(_, v)| v.len() + 1).sum();
    let height = 40.0 + top_h + 20.0 + rows as f64 * value_h + 40.0;
    let mut svg = Svg::new(left + plot_w + 20.0, height);
    let x_of = |rank: usize| left + (rank as f64 + 0.5) / n as f64 * plot_w;
    let max = curve.max_match_count.max(1) as f64;
    let y_of = |m: usize| 30.0 + top_h - m as f64 / max * top_h;
    svg.text(10.0, 20.0, "start", "Specification curve: confirmed hypotheses per universe");
    svg.line(left, 30.0, left, 30.0 + top_h);
    svg.line(left, 30.0 + top_h, left + plot_w, 30.0 + top_h);
    for m in [0, curve.max_match_count / 2, curve.max_match_count] {
        svg.text(left - 6.0, y_of(m) + 4.0, "end", &m.to_string());
    }
    let r = (plot_w / n as f64 / 2.0).clamp(0.4, 3.0);
    for p in &curve.universes {
        svg.circle(x_of(p.rank), y_of(p.match_count), r, color(p.study));
    }
    let mut y = 30.0 + top_h + 30.0;
    for (decision, values) in &decisions {
        svg.text(left - 6.0, y, "end", decision);
        y += value_h;
        for v in values {
            svg.text(left - 6.0, y, "end", v);
            for p in curve.universes.iter().filter(|p| &p.assignment[decision] == v) {
                svg.rect(x_of(p.rank) - r, y - 7.0, 2.0 * r, 6.0, color(p.study));
            }
            y += value_h;
        }
    }
    svg.legend(10.0, height - 12.0);
    svg.finish()
}

/// Per decision, the share of groups by number of distinct outcomes, with the flip rate.
pub fn change_stability_svg(cs: &ChangeStability) -> String {
    let (left, bar_w, row_h) = (170.0, 500.0, 28.0);
    let mut svg = Svg::new(left + bar_w + 150.0, 60.0 + cs.decisions.len() as f64 * row_h + 30.0);
    svg.text(10.0, 20.0, "start", "Distinct study buckets when only one decision changes");
    for (i, d) in cs.decisions.iter().enumerate() {
        let y = 40.0 + i as f64 * row_h;
        svg.text(left - 8.0, y + 15.0, "end", &d.decision);
        let total: usize = d.histogram.values().sum();
        let mut offset = 0.0;
        for (&distinct, &count) in &d.histogram {
            let w = count as f64 / total.max(1) as f64 * bar_w;
            svg.rect(left + offset, y, w, row_h - 8.0, DISTINCT_COLORS[(distinct.max(1) - 1).min(3)]);
            offset += w;
        }
        let label = d.flip_rate.map_or("flip n/a".to_string(), |f| format!("flip {:.1}%", 100.0 * f));
        svg.text(left + bar_w + 6.0, y + 15.0, "start", &label);
    }
    let ly = 60.0 + cs.decisions.len() as f64 * row_h + 15.0;
    for (k, c) in DISTINCT_COLORS.iter().enumerate() {
        let lx = 10.0 + k as f64 * 120.0;
        svg.rect(lx, ly - 9.0, 10.0, 10.0, c);
        svg.text(lx + 14.0, ly, "start", &format!("{} distinct", k + 1));
    }
    svg.finish()
}

/// Study bucket shares per total studied timeframe.
pub fn time_curve_svg(tc: &TimeCurve) -> String {
    let (left, bar_w, row_h) = (90.0, 560.0, 22.0);
    let mut svg = Svg::new(left + bar_w + 30.0, 60.0 + tc.timeframes.len() as f64 * row_h + 30.0);
    svg.text(10.0, 20.0, "start", "Study outcome by studied timeframe (days)");
    for (i, t) in tc.timeframes.iter().enumerate() {
        let y = 40.0 + i as f64 * row_h;
        svg.text(left - 8.0, y + 12.0, "end", &format!("{}", t.days));
        stacked_bar(&mut svg, left, y, bar_w, row_h - 6.0, &t.study);
    }
    svg.legend(10.0, 60.0 + tc.timeframes.len() as f64 * row_h + 15.0);
    svg.finish()
}

/// The four figures as `(file name, contents)`.
pub fn render(bundle: &AnalysisBundle) -> Vec<(&'static str, String)> {
    vec![
        ("overview.svg", overview_svg(&bundle.overview)),
        ("spec_curve.svg", spec_curve_svg(&bundle.spec_curve)),
        ("change_stability.svg", change_stability_svg(&bundle.change_stability)),
        ("time_curve.svg", time_curve_svg(&bundle.time_curve)),
    ]
}
