//! Deterministic SVG renderers: the interval plot (one vertical interval
//! per covariate, grouped by class) and the model-bound progression chart
//! (class bands stacked by confidence level). Output is a pure function of
//! the inputs: no timestamps, no generated ids.

use ssci_core::ssci::{Class, McbResult, SsciResult};

pub const DEFAULT_WIDTH: u32 = 960;
pub const DEFAULT_HEIGHT: u32 = 540;
/// Per-covariate labels are dropped above this count in favor of group
/// totals.
pub const LABEL_LIMIT: usize = 60;

/// How covariates are arranged along the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRule {
    /// Significant-positive at the left end, significant-negative at the
    /// right end, plausible (widest first) then unimportant in the middle.
    Grouped,
    /// Original data order.
    Original,
}

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub width_px: u32,
    pub height_px: u32,
    pub order: OrderRule,
    pub show_bootstrap_lines: bool,
    /// True coefficients to overlay as red markers.
    pub truth_overlay: Option<Vec<f64>>,
    /// Retained bootstrap coefficient vectors, drawn as light lines when
    /// `show_bootstrap_lines` is set.
    pub bootstrap_draws: Option<Vec<Vec<f64>>>,
    /// Covariate labels; positional 1-based names are used when absent.
    pub names: Option<Vec<String>>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            width_px: DEFAULT_WIDTH,
            height_px: DEFAULT_HEIGHT,
            order: OrderRule::Grouped,
            show_bootstrap_lines: false,
            truth_overlay: None,
            bootstrap_draws: None,
            names: None,
        }
    }
}

/// The x-axis arrangement as a pure function of classes and interval signs:
/// positive significant (descending midpoint), plausible (descending
/// width), unimportant (data order), negative significant (descending
/// midpoint, so the most negative sits at the far right).
pub fn ordered_indices(result: &SsciResult, rule: OrderRule) -> Vec<usize> {
    let p = result.lower.len();
    if rule == OrderRule::Original {
        return (0..p).collect();
    }
    let mid = |j: usize| 0.5 * (result.lower[j] + result.upper[j]);
    let width = |j: usize| result.upper[j] - result.lower[j];

    let mut sig_pos = Vec::new();
    let mut sig_neg = Vec::new();
    let mut plausible = Vec::new();
    let mut unimportant = Vec::new();
    for j in 0..p {
        match result.classes[j] {
            Class::Significant => {
                if result.lower[j] > 0.0 {
                    sig_pos.push(j);
                } else {
                    sig_neg.push(j);
                }
            }
            Class::Plausible => plausible.push(j),
            Class::Unimportant => unimportant.push(j),
        }
    }
    sig_pos.sort_by(|a, b| mid(*b).total_cmp(&mid(*a)).then(a.cmp(b)));
    sig_neg.sort_by(|a, b| mid(*b).total_cmp(&mid(*a)).then(a.cmp(b)));
    plausible.sort_by(|a, b| width(*b).total_cmp(&width(*a)).then(a.cmp(b)));

    let mut order = sig_pos;
    order.extend(plausible);
    order.extend(unimportant);
    order.extend(sig_neg);
    order
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

fn trim_num(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    w: f64,
    h: f64,
    ml: f64,
    mt: f64,
    pw: f64,
    ph: f64,
}

impl Frame {
    fn new(plot: &PlotSpec) -> Frame {
        let w = plot.width_px as f64;
        let h = plot.height_px as f64;
        let (ml, mr, mt, mb) = (64.0, 16.0, 40.0, 56.0);
        Frame {
            w,
            h,
            ml,
            mt,
            pw: w - ml - mr,
            ph: h - mt - mb,
        }
    }
}

fn svg_open(f: &Frame) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect class=\"bg\" x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n",
        w = px(f.w),
        h = px(f.h)
    )
}

/// Contiguous runs of positions whose ordered class matches `class`.
fn class_runs(result: &SsciResult, order: &[usize], class: Class) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &j) in order.iter().enumerate() {
        if result.classes[j] == class {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            runs.push((s, i - 1));
        }
    }
    if let Some(s) = start {
        runs.push((s, order.len() - 1));
    }
    runs
}

fn class_color(class: Class) -> &'static str {
    match class {
        Class::Significant => "#c43c3c",
        Class::Plausible => "#4a4a4a",
        Class::Unimportant => "#2f6db3",
    }
}

/// Renders the interval plot: one vertical interval per covariate at its
/// ordered position, shaded bands behind the plausible (grey) and
/// unimportant (blue) groups, optional retained-draw lines and a red truth
/// overlay.
pub fn render_ssci_svg(result: &SsciResult, plot: &PlotSpec) -> String {
    let p = result.lower.len();
    assert!(p > 0, "nothing to plot");
    if let Some(names) = &plot.names {
        assert_eq!(names.len(), p, "label count must match covariate count");
    }
    let order = ordered_indices(result, plot.order);
    let f = Frame::new(plot);
    let step = f.pw / p as f64;

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..p {
        lo = lo.min(result.lower[j]);
        hi = hi.max(result.upper[j]);
    }
    if let Some(truth) = &plot.truth_overlay {
        for v in truth {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if plot.show_bootstrap_lines {
        if let Some(draws) = &plot.bootstrap_draws {
            for draw in draws {
                for v in draw {
                    lo = lo.min(*v);
                    hi = hi.max(*v);
                }
            }
        }
    }
    lo = lo.min(0.0);
    hi = hi.max(0.0);
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    let y = |v: f64| f.mt + (hi - v) / (hi - lo) * f.ph;
    let x = |i: usize| f.ml + (i as f64 + 0.5) * step;

    let label = |j: usize| match &plot.names {
        Some(names) => names[j].clone(),
        None => format!("x{}", j + 1),
    };

    let mut svg = svg_open(&f);
    svg.push_str(
        "<metadata>order=grouped:sig-pos,plausible,unimportant,sig-neg;\
         sig=desc-midpoint;plausible=desc-width;unimportant=data-order</metadata>\n",
    );

    for (a, b) in class_runs(result, &order, Class::Plausible) {
        svg.push_str(&format!(
            "<rect class=\"band-plausible\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
             fill=\"#b8b8b8\" fill-opacity=\"0.35\"/>\n",
            px(f.ml + a as f64 * step),
            px(f.mt),
            px((b - a + 1) as f64 * step),
            px(f.ph)
        ));
    }
    for (a, b) in class_runs(result, &order, Class::Unimportant) {
        svg.push_str(&format!(
            "<rect class=\"band-unimportant\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
             fill=\"#5b8fd9\" fill-opacity=\"0.28\"/>\n",
            px(f.ml + a as f64 * step),
            px(f.mt),
            px((b - a + 1) as f64 * step),
            px(f.ph)
        ));
    }

    // Axis: frame, zero line, five value ticks.
    svg.push_str(&format!(
        "<line class=\"axis\" x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"#333333\"/>\n",
        x0 = px(f.ml),
        y0 = px(f.mt),
        y1 = px(f.mt + f.ph)
    ));
    for k in 0..5 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        svg.push_str(&format!(
            "<line class=\"tick\" x1=\"{}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" stroke=\"#333333\"/>\n\
             <text class=\"ylabel\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            px(f.ml - 4.0),
            px(f.ml),
            px(f.ml - 8.0),
            px(y(v) + 4.0),
            trim_num(v),
            yy = px(y(v))
        ));
    }
    svg.push_str(&format!(
        "<text class=\"ytitle\" x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 {x} {y})\">coefficient</text>\n",
        x = px(18.0),
        y = px(f.mt + f.ph / 2.0)
    ));
    svg.push_str(&format!(
        "<line class=\"zero\" x1=\"{}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" \
         stroke=\"#777777\" stroke-dasharray=\"4 3\"/>\n",
        px(f.ml),
        px(f.ml + f.pw),
        yy = px(y(0.0))
    ));

    if plot.show_bootstrap_lines {
        if let Some(draws) = &plot.bootstrap_draws {
            for draw in draws {
                assert_eq!(draw.len(), p, "draw length must match covariate count");
                let points: Vec<String> = order
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| format!("{},{}", px(x(i)), px(y(draw[j]))))
                    .collect();
                svg.push_str(&format!(
                    "<polyline class=\"draw\" points=\"{}\" fill=\"none\" \
                     stroke=\"#8c8c8c\" stroke-opacity=\"0.25\"/>\n",
                    points.join(" ")
                ));
            }
        }
    }

    for (i, &j) in order.iter().enumerate() {
        let color = class_color(result.classes[j]);
        let xc = x(i);
        let cap = (step * 0.3).clamp(1.5, 5.0);
        svg.push_str(&format!(
            "<g class=\"interval\" data-cov=\"{name}\">\
             <line x1=\"{xc}\" y1=\"{yu}\" x2=\"{xc}\" y2=\"{yl}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <line x1=\"{xa}\" y1=\"{yu}\" x2=\"{xb}\" y2=\"{yu}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <line x1=\"{xa}\" y1=\"{yl}\" x2=\"{xb}\" y2=\"{yl}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             </g>\n",
            name = escape_xml(&label(j)),
            xc = px(xc),
            xa = px(xc - cap),
            xb = px(xc + cap),
            yu = px(y(result.upper[j])),
            yl = px(y(result.lower[j])),
        ));
    }

    if let Some(truth) = &plot.truth_overlay {
        assert_eq!(truth.len(), p, "truth length must match covariate count");
        for (i, &j) in order.iter().enumerate() {
            svg.push_str(&format!(
                "<circle class=\"truth\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#ff2222\"/>\n",
                px(x(i)),
                px(y(truth[j]))
            ));
        }
    }

    let counts = {
        let mut sig = 0;
        let mut plaus = 0;
        let mut unimp = 0;
        for c in &result.classes {
            match c {
                Class::Significant => sig += 1,
                Class::Plausible => plaus += 1,
                Class::Unimportant => unimp += 1,
            }
        }
        (sig, plaus, unimp)
    };
    if p <= LABEL_LIMIT {
        for (i, &j) in order.iter().enumerate() {
            let xc = x(i);
            let yb = f.mt + f.ph + 14.0;
            svg.push_str(&format!(
                "<text class=\"xlabel\" x=\"{x}\" y=\"{y}\" text-anchor=\"end\" \
                 transform=\"rotate(-60 {x} {y})\">{}</text>\n",
                escape_xml(&label(j)),
                x = px(xc),
                y = px(yb)
            ));
        }
    } else {
        svg.push_str(&format!(
            "<text class=\"summary\" x=\"{}\" y=\"{}\">{} covariates: {} significant, \
             {} plausible, {} unimportant</text>\n",
            px(f.ml),
            px(f.mt - 12.0),
            p,
            counts.0,
            counts.1,
            counts.2
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

/// Renders the model-bound progression: one band row per confidence level
/// (ascending upward), red for the significant (lower-model) share, grey
/// for plausible, blue for unimportant. Covariates are ordered once by how
/// persistently they stay significant across levels, so nested sweeps
/// produce contiguous, monotone bands.
pub fn render_mcb_progression_svg(
    sweep: &[(f64, SsciResult, McbResult)],
    plot: &PlotSpec,
) -> String {
    assert!(!sweep.is_empty(), "nothing to plot");
    assert!(
        sweep.windows(2).all(|w| w[0].0 >= w[1].0),
        "sweep must be sorted by ascending confidence level"
    );
    let p = sweep[0].1.lower.len();
    let levels = sweep.len();
    let f = Frame::new(plot);
    let step = f.pw / p as f64;
    let row_h = f.ph / levels as f64;

    let mut svg = svg_open(&f);
    svg.push_str(
        "<metadata>rows=confidence-ascending;columns=significance-persistence</metadata>\n",
    );

    for (k, (alpha, result, mcb)) in sweep.iter().enumerate() {
        let nsig = mcb.lower_model.len();
        let nunimp = result
            .classes
            .iter()
            .filter(|c| **c == Class::Unimportant)
            .count();
        let nplaus = p - nsig - nunimp;
        let yt = f.mt + f.ph - (k + 1) as f64 * row_h;

        let mut x0 = f.ml;
        for (count, class_name, fill) in [
            (nsig, "band-significant", "#d64545"),
            (nplaus, "band-plausible", "#b0b0b0"),
            (nunimp, "band-unimportant", "#5b8fd9"),
        ] {
            if count == 0 {
                continue;
            }
            let w = count as f64 * step;
            svg.push_str(&format!(
                "<rect class=\"{class_name}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" \
                 fill=\"{fill}\" fill-opacity=\"0.85\"/>\n",
                px(x0),
                px(yt),
                px(w),
                px(row_h)
            ));
            x0 += w;
        }
        svg.push_str(&format!(
            "<text class=\"level\" x=\"{}\" y=\"{}\" text-anchor=\"end\">{}%</text>\n",
            px(f.ml - 8.0),
            px(yt + row_h / 2.0 + 4.0),
            trim_num((1.0 - alpha) * 100.0)
        ));
    }

    svg.push_str(&format!(
        "<text class=\"xtitle\" x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} covariates, \
         most persistent first</text>\n",
        px(f.ml + f.pw / 2.0),
        px(f.mt + f.ph + 24.0),
        p
    ));
    svg.push_str(&format!(
        "<text class=\"ytitle\" x=\"{x}\" y=\"{y}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 {x} {y})\">confidence level</text>\n",
        x = px(18.0),
        y = px(f.mt + f.ph / 2.0)
    ));
    svg.push_str("</svg>\n");
    svg
}
