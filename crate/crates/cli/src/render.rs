//! Minimal SVG 1.1 charts. Layouts are fixed functions of the data: dots are
//! stacked, never jittered.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use disclosure_core::model::{Evaluator, GroupKey, Interval, ModelRep, RepKind, Representation, SummaryRep, Table};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    Dotplot,
    Histogram,
    Heatmap,
    ContourBand,
    Scatter,
}

impl ChartKind {
    pub fn name(self) -> &'static str {
        match self {
            ChartKind::Dotplot => "dotplot",
            ChartKind::Histogram => "histogram",
            ChartKind::Heatmap => "heatmap",
            ChartKind::ContourBand => "contour-band",
            ChartKind::Scatter => "scatter",
        }
    }

    /// Chart kinds that can draw `rep`.
    pub fn compatible(rep: &Representation) -> Vec<ChartKind> {
        [
            ChartKind::Dotplot,
            ChartKind::Histogram,
            ChartKind::Heatmap,
            ChartKind::ContourBand,
            ChartKind::Scatter,
        ]
        .into_iter()
        .filter(|k| marks(rep, *k, &[]).is_ok())
        .collect()
    }
}

impl FromStr for ChartKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dotplot" => ChartKind::Dotplot,
            "histogram" => ChartKind::Histogram,
            "heatmap" => ChartKind::Heatmap,
            "contour-band" => ChartKind::ContourBand,
            "scatter" => ChartKind::Scatter,
            _ => bail!("unknown chart kind `{s}` (dotplot, histogram, heatmap, contour-band, scatter)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub dot_radius: f64,
    pub fill: String,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            width: 640.0,
            height: 400.0,
            margin: 48.0,
            dot_radius: 3.0,
            fill: "#3b6ea5".into(),
        }
    }
}

/// One drawable layer: a representation and how to draw it.
pub struct Layer<'a> {
    pub rep: &'a Representation,
    pub kind: ChartKind,
    /// Columns to encode; the first numeric ones when empty.
    pub columns: Vec<String>,
}

enum Mark {
    /// Data-space centre; the y of a stacked dot is its stack height.
    Dot { x: f64, y: f64 },
    StackDot { x: f64 },
    Rect { x0: f64, x1: f64, y0: f64, y1: f64, shade: f64 },
    Region { cells: Vec<[f64; 4]>, shade: f64 },
}

struct Marks {
    x_label: String,
    y_label: String,
    x: [f64; 2],
    y: [f64; 2],
    items: Vec<Mark>,
}

fn numeric_columns(t: &Table, wanted: &[String], n: usize) -> Result<Vec<String>> {
    let cols: Vec<String> = if wanted.is_empty() {
        t.columns
            .iter()
            .filter(|c| c.kind.is_numeric() && c.bins.is_none())
            .map(|c| c.name.clone())
            .take(n)
            .collect()
    } else {
        wanted.to_vec()
    };
    if cols.len() < n {
        bail!("needs {n} numeric column(s)");
    }
    for c in &cols {
        t.numeric_column(c)?;
    }
    Ok(cols)
}

fn extent(vals: impl Iterator<Item = f64>) -> [f64; 2] {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return [0.0, 1.0];
    }
    if lo == hi {
        return [lo - 0.5, hi + 0.5];
    }
    [lo, hi]
}

fn interval_keys(s: &SummaryRep, n: usize) -> Result<Vec<Vec<Interval>>> {
    if s.key_columns.len() != n {
        bail!("needs a summary over {n} interval key(s), found {}", s.key_columns.len());
    }
    s.groups
        .iter()
        .map(|g| {
            g.keys
                .iter()
                .map(|k| k.interval().ok_or_else(|| anyhow!("summary keys are not intervals")))
                .collect()
        })
        .collect()
}

/// The statistic drawn for a group: mass when present, else count, else the
/// first statistic.
fn group_weight(s: &SummaryRep) -> Result<usize> {
    s.stat_index("mass")
        .or_else(|| s.stat_index("count"))
        .or(if s.stat_names.is_empty() { None } else { Some(0) })
        .ok_or_else(|| anyhow!("summary has no statistic to draw"))
}

fn density_1d(m: &ModelRep) -> Result<Marks> {
    if m.evaluator != Evaluator::DensityGrid || m.axes.len() != 1 {
        bail!("needs a summary over one interval key or a 1-D density");
    }
    let a = &m.axes[0];
    let half = a.step() / 2.0;
    let items: Vec<Mark> = (0..a.n)
        .map(|i| Mark::Rect {
            x0: a.point(i) - half,
            x1: a.point(i) + half,
            y0: 0.0,
            y1: m.grid[i].max(0.0),
            shade: 1.0,
        })
        .collect();
    Ok(Marks {
        x_label: a.name.clone(),
        y_label: "density".into(),
        x: [a.lo - half, a.hi + half],
        y: [0.0, extent(m.grid.iter().copied())[1].max(f64::MIN_POSITIVE)],
        items,
    })
}

fn marks(rep: &Representation, kind: ChartKind, columns: &[String]) -> Result<Marks> {
    match (kind, &rep.kind) {
        (ChartKind::Dotplot, RepKind::Sample(t)) => {
            let c = numeric_columns(t, columns, 1)?.remove(0);
            let v = t.column(&c)?.present_f64();
            Ok(Marks {
                x: extent(v.iter().copied()),
                y: [0.0, 1.0],
                x_label: c,
                y_label: String::new(),
                items: v.into_iter().map(|x| Mark::StackDot { x }).collect(),
            })
        }
        (ChartKind::Scatter, RepKind::Sample(t)) => {
            let cols = numeric_columns(t, columns, 2)?;
            let xs = &t.column(&cols[0])?.cells;
            let ys = &t.column(&cols[1])?.cells;
            let pts: Vec<(f64, f64)> = xs
                .iter()
                .zip(ys)
                .filter_map(|(x, y)| Some((x.as_f64()?, y.as_f64()?)))
                .collect();
            Ok(Marks {
                x: extent(pts.iter().map(|p| p.0)),
                y: extent(pts.iter().map(|p| p.1)),
                x_label: cols[0].clone(),
                y_label: cols[1].clone(),
                items: pts.into_iter().map(|(x, y)| Mark::Dot { x, y }).collect(),
            })
        }
        (ChartKind::Histogram, RepKind::Model(m)) => density_1d(m),
        (ChartKind::Histogram, RepKind::Summary(s)) => {
            let keys = interval_keys(s, 1)?;
            let w = group_weight(s)?;
            let items: Vec<Mark> = keys
                .iter()
                .zip(&s.groups)
                .map(|(k, g)| {
                    let iv = k[0];
                    let width = if iv.width() > 0.0 { iv.width() } else { 1.0 };
                    Mark::Rect {
                        x0: iv.lo,
                        x1: iv.hi,
                        y0: 0.0,
                        y1: g.stats[w].unwrap_or(0.0) / width,
                        shade: 1.0,
                    }
                })
                .collect();
            let top = items
                .iter()
                .map(|m| if let Mark::Rect { y1, .. } = m { *y1 } else { 0.0 })
                .fold(0.0, f64::max);
            Ok(Marks {
                x: extent(keys.iter().flat_map(|k| [k[0].lo, k[0].hi])),
                y: [0.0, if top > 0.0 { top } else { 1.0 }],
                x_label: s.key_columns[0].clone(),
                y_label: format!("{} per unit", s.stat_names[w]),
                items,
            })
        }
        (ChartKind::Heatmap, RepKind::Summary(s)) => {
            let keys = interval_keys(s, 2)?;
            let w = group_weight(s)?;
            let max = s.groups.iter().filter_map(|g| g.stats[w]).fold(0.0, f64::max);
            let items = keys
                .iter()
                .zip(&s.groups)
                .map(|(k, g)| Mark::Rect {
                    x0: k[0].lo,
                    x1: k[0].hi,
                    y0: k[1].lo,
                    y1: k[1].hi,
                    shade: if max > 0.0 { g.stats[w].unwrap_or(0.0) / max } else { 0.0 },
                })
                .collect();
            Ok(Marks {
                x: extent(keys.iter().flat_map(|k| [k[0].lo, k[0].hi])),
                y: extent(keys.iter().flat_map(|k| [k[1].lo, k[1].hi])),
                x_label: s.key_columns[0].clone(),
                y_label: s.key_columns[1].clone(),
                items,
            })
        }
        (ChartKind::ContourBand, RepKind::Summary(s)) => {
            let axes = s
                .grid
                .as_ref()
                .ok_or_else(|| anyhow!("needs a summary banded from a density"))?;
            if axes.len() != 2 {
                bail!("needs a 2-D density band");
            }
            let (ax, ay) = (&axes[0], &axes[1]);
            let (hx, hy) = (ax.step() / 2.0, ay.step() / 2.0);
            let n = s.groups.len().max(1) as f64;
            let mut items = Vec::new();
            for (gi, g) in s.groups.iter().enumerate() {
                let Some(GroupKey::Region { cells, .. }) = g.keys.first() else {
                    bail!("needs region keys");
                };
                let rects = cells
                    .iter()
                    .map(|&c| {
                        let (i, j) = (c / ay.n, c % ay.n);
                        let (x, y) = (ax.point(i), ay.point(j));
                        [x - hx, x + hx, y - hy, y + hy]
                    })
                    .collect();
                items.push(Mark::Region {
                    cells: rects,
                    shade: (gi as f64 + 1.0) / n,
                });
            }
            Ok(Marks {
                x: [ax.lo - hx, ax.hi + hx],
                y: [ay.lo - hy, ay.hi + hy],
                x_label: ax.name.clone(),
                y_label: ay.name.clone(),
                items,
            })
        }
        (k, _) => bail!(
            "{} cannot draw a {} representation",
            k.name(),
            disclosure_core::pipeline::rep_kind_name(&rep.kind)
        ),
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Draws `layers` on shared axes.
pub fn render_layers(layers: &[Layer], style: &Style) -> Result<String> {
    let mut all = Vec::with_capacity(layers.len());
    for l in layers {
        let m = marks(l.rep, l.kind, &l.columns).map_err(|e| {
            let ok: Vec<&str> = ChartKind::compatible(l.rep).iter().map(|k| k.name()).collect();
            anyhow!("{e}; compatible chart kinds: {}", if ok.is_empty() { "none".into() } else { ok.join(", ") })
        })?;
        all.push(m);
    }
    let x = extent(all.iter().flat_map(|m| m.x));
    let y = extent(all.iter().flat_map(|m| m.y));
    let (w, h, pad) = (style.width, style.height, style.margin);
    let sx = |v: f64| pad + (v - x[0]) / (x[1] - x[0]) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v - y[0]) / (y[1] - y[0]) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r##"<g class="axes" stroke="#333333" stroke-width="1" font-family="sans-serif" font-size="11">"##);
    let _ = writeln!(s, r#"<line x1="{pad:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, h - pad, w - pad, h - pad);
    let _ = writeln!(s, r#"<line x1="{pad:.2}" y1="{pad:.2}" x2="{pad:.2}" y2="{:.2}"/>"#, h - pad);
    let stacked = all.iter().any(|m| m.items.iter().any(|i| matches!(i, Mark::StackDot { .. })));
    let _ = writeln!(s, r#"<text x="{pad:.2}" y="{:.2}" stroke="none">{}</text>"#, h - pad + 16.0, fmt_tick(x[0]));
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="end">{}</text>"#, w - pad, h - pad + 16.0, fmt_tick(x[1]));
    if !stacked {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="end">{}</text>"#, pad - 4.0, h - pad, fmt_tick(y[0]));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="end">{}</text>"#, pad - 4.0, pad + 8.0, fmt_tick(y[1]));
    }
    if let Some(m) = all.first() {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" stroke="none" text-anchor="middle">{}</text>"#, w / 2.0, h - 8.0, esc(&m.x_label));
        if !m.y_label.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="12.00" y="{:.2}" stroke="none" text-anchor="middle" transform="rotate(-90 12.00 {:.2})">{}</text>"#,
                h / 2.0,
                h / 2.0,
                esc(&m.y_label)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let r = style.dot_radius;
    let fill = esc(&style.fill);
    for (li, m) in all.iter().enumerate() {
        let _ = writeln!(s, r#"<g class="layer-{li}" fill="{fill}">"#);
        // stacked dots: columns one diameter wide, filled bottom-up in value order
        let mut stacks: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
        let mut dots: Vec<f64> = m
            .items
            .iter()
            .filter_map(|i| if let Mark::StackDot { x } = i { Some(*x) } else { None })
            .collect();
        dots.sort_by(f64::total_cmp);
        for xv in dots {
            let px = sx(xv);
            let col = ((px - pad) / (2.0 * r)).floor() as i64;
            let k = stacks.entry(col).or_insert(0);
            let cx = pad + (col as f64 + 0.5) * 2.0 * r;
            let cy = h - pad - r - 2.0 * r * *k as f64;
            *k += 1;
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{r:.2}"/>"#);
        }
        for item in &m.items {
            match item {
                Mark::StackDot { .. } => {}
                Mark::Dot { x, y } => {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill-opacity="0.7"/>"#, sx(*x), sy(*y));
                }
                Mark::Rect { x0, x1, y0, y1, shade } => {
                    let (px0, px1) = (sx(*x0), sx(*x1));
                    let (py0, py1) = (sy(*y1), sy(*y0));
                    let _ = writeln!(
                        s,
                        r##"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill-opacity="{shade:.2}" stroke="#ffffff" stroke-width="0.5"/>"##,
                        (px1 - px0).max(0.0),
                        (py1 - py0).max(0.0)
                    );
                }
                Mark::Region { cells, shade } => {
                    let mut d = String::new();
                    for [x0, x1, y0, y1] in cells {
                        let (px0, px1, py0, py1) = (sx(*x0), sx(*x1), sy(*y1), sy(*y0));
                        let _ = write!(d, "M{px0:.2} {py0:.2}H{px1:.2}V{py1:.2}H{px0:.2}Z");
                    }
                    let _ = writeln!(s, r#"<path d="{d}" fill-opacity="{:.2}"/>"#, 0.25 + 0.5 * shade);
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn render_svg(rep: &Representation, kind: ChartKind, columns: &[String], style: &Style) -> Result<String> {
    render_layers(
        &[Layer {
            rep,
            kind,
            columns: columns.to_vec(),
        }],
        style,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use disclosure_core::model::Column;
    use disclosure_core::tactics::{aggregate, band, classify, smooth_kde, BandLevels, Bandwidth, BinSpec, GridSpec, StatSpec};

    fn sample(v: &[f64]) -> Representation {
        Representation::sample(Table::new(vec![Column::numeric("x", v)], "t").unwrap())
    }

    fn count(svg: &str, tag: &str) -> usize {
        svg.matches(&format!("<{tag} ")).count()
    }

    #[test]
    fn histogram_one_rect_per_bin() {
        let b = classify(&sample(&[1.0, 2.0, 3.0, 4.0, 5.0, 9.0]), "x", &BinSpec::EqualWidth(3)).unwrap();
        let h = aggregate(&b, &["x__bin".into()], &[StatSpec::count()]).unwrap();
        let svg = render_svg(&h, ChartKind::Histogram, &[], &Style::default()).unwrap();
        assert_eq!(count(&svg, "rect"), 3);
    }

    #[test]
    fn empty_dotplot() {
        let svg = render_svg(&sample(&[]), ChartKind::Dotplot, &[], &Style::default()).unwrap();
        assert_eq!(count(&svg, "circle"), 0);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn dots_stack_not_jitter() {
        let svg = render_svg(&sample(&[1.0, 1.0, 1.0, 5.0]), ChartKind::Dotplot, &[], &Style::default()).unwrap();
        assert_eq!(count(&svg, "circle"), 4);
        assert!(svg.contains(r#"cy="349.00""#) && svg.contains(r#"cy="343.00""#) && svg.contains(r#"cy="337.00""#));
        let again = render_svg(&sample(&[1.0, 1.0, 1.0, 5.0]), ChartKind::Dotplot, &[], &Style::default()).unwrap();
        assert_eq!(svg, again);
    }

    #[test]
    fn incompatible_pairing_suggests() {
        let e = render_svg(&sample(&[1.0]), ChartKind::Heatmap, &[], &Style::default()).unwrap_err().to_string();
        assert!(e.contains("compatible chart kinds: dotplot"), "{e}");
    }

    #[test]
    fn contour_band_one_path_per_region() {
        let t = Table::new(
            vec![Column::numeric("x", &[0.0, 0.1, 0.2, 3.0, 3.1]), Column::numeric("y", &[0.0, 0.2, 0.1, 3.0, 2.9])],
            "t",
        )
        .unwrap();
        let k = smooth_kde(
            &Representation::sample(t),
            &["x".into(), "y".into()],
            &[Bandwidth::Fixed(0.3), Bandwidth::Fixed(0.3)],
            &[GridSpec { n: 16, range: None }, GridSpec { n: 16, range: None }],
        )
        .unwrap();
        let b = band(&k, None, &BandLevels::Mass(vec![0.5, 0.85])).unwrap();
        let svg = render_svg(&b, ChartKind::ContourBand, &[], &Style::default()).unwrap();
        assert_eq!(count(&svg, "path"), 2);
    }
}
