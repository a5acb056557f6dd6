use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    Axis, Evaluator, GroupKey, Interval, ModelRep, RepKind, Representation, SummaryRep, Table,
};
use crate::tactics::{self, quantile_sorted, Bandwidth, GridSpec};

use super::spec::{Connectivity, SignalKind, SignalSpec};

const SAMPLE_GRID_1D: usize = 256;
const SAMPLE_GRID_2D: usize = 64;

/// One connected region of a highest-density set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Mass-weighted centre, one coordinate per axis.
    pub centroid: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Share of the grid's total mass.
    pub mass: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalValue {
    Scalar {
        value: f64,
        /// Interval known to contain the answer when the representation only
        /// brackets it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<[f64; 2]>,
        /// Smallest non-empty group, for occupancy checks.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_occupancy: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        passes: Option<bool>,
    },
    Clusters {
        clusters: Vec<Cluster>,
    },
    Unanswerable {
        reason: String,
    },
}

impl SignalValue {
    pub fn scalar(value: f64) -> Self {
        SignalValue::Scalar {
            value,
            bound: None,
            min_occupancy: None,
            passes: None,
        }
    }

    fn bounded(value: f64, lo: f64, hi: f64) -> Self {
        SignalValue::Scalar {
            value,
            bound: Some([lo, hi]),
            min_occupancy: None,
            passes: None,
        }
    }

    pub fn unanswerable(reason: impl Into<String>) -> Self {
        SignalValue::Unanswerable {
            reason: reason.into(),
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            SignalValue::Scalar { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn bound(&self) -> Option<[f64; 2]> {
        match self {
            SignalValue::Scalar { bound, .. } => *bound,
            _ => None,
        }
    }

    pub fn is_unanswerable(&self) -> bool {
        matches!(self, SignalValue::Unanswerable { .. })
    }
}

/// Evaluates a signal on any representation kind. `aux` is the original table,
/// needed only for nearest-neighbour re-identification of a perturbed sample.
/// Information absent by construction yields `Unanswerable`, not an error.
pub fn eval_signal(
    s: &SignalSpec,
    rep: &Representation,
    aux: Option<&Table>,
) -> Result<SignalValue> {
    s.validate()?;
    match (&s.kind, &rep.kind) {
        (SignalKind::Exceedance { threshold }, RepKind::Sample(t)) => {
            let v = t.numeric_column(&s.columns[0])?.present_f64();
            if v.is_empty() {
                return Ok(SignalValue::unanswerable("no values"));
            }
            let above = v.iter().filter(|&&x| x > *threshold).count();
            Ok(SignalValue::scalar(above as f64 / v.len() as f64))
        }
        (SignalKind::Exceedance { threshold }, RepKind::Summary(sum)) => {
            match histogram(sum, &s.columns[0]) {
                Some(h) => Ok(h.exceedance(*threshold)),
                None => Ok(SignalValue::unanswerable(
                    "no interval masses for the target",
                )),
            }
        }
        (SignalKind::Exceedance { threshold }, RepKind::Model(m)) => {
            match marginal(m, &s.columns[0]) {
                Some((axis, masses)) => Ok(SignalValue::scalar(grid_mass_above(
                    &axis, &masses, *threshold,
                ))),
                None => Ok(SignalValue::unanswerable(
                    "model carries no density over the target",
                )),
            }
        }

        (SignalKind::Quantile { p }, RepKind::Sample(t)) => {
            let v = tactics_sorted(&t.numeric_column(&s.columns[0])?.present_f64());
            Ok(match quantile_sorted(&v, *p) {
                Some(q) => SignalValue::scalar(q),
                None => SignalValue::unanswerable("no values"),
            })
        }
        (SignalKind::Quantile { p }, RepKind::Summary(sum)) => {
            Ok(summary_quantile(sum, &s.columns[0], *p))
        }
        (SignalKind::Quantile { p }, RepKind::Model(m)) => match marginal(m, &s.columns[0]) {
            Some((axis, masses)) => Ok(SignalValue::scalar(grid_quantile(&axis, &masses, *p))),
            None => Ok(SignalValue::unanswerable(
                "model carries no density over the target",
            )),
        },

        (SignalKind::ModeCount { prominence }, RepKind::Sample(_)) => {
            let m = sample_density(s, rep, &s.columns[..1], SAMPLE_GRID_1D)?;
            Ok(SignalValue::scalar(count_modes(&m.grid, *prominence) as f64))
        }
        (SignalKind::ModeCount { prominence }, RepKind::Summary(sum)) => {
            if sum.stat_index("p_lo").is_some() {
                return Ok(SignalValue::unanswerable("quantile band carries no shape"));
            }
            match histogram(sum, &s.columns[0]) {
                Some(h) => {
                    let dens: Vec<f64> = h
                        .bins
                        .iter()
                        .map(|(iv, w)| w / iv.width().max(f64::MIN_POSITIVE))
                        .collect();
                    Ok(SignalValue::scalar(count_modes(&dens, *prominence) as f64))
                }
                None => Ok(SignalValue::unanswerable(
                    "no interval masses for the target",
                )),
            }
        }
        (SignalKind::ModeCount { prominence }, RepKind::Model(m)) => {
            match marginal(m, &s.columns[0]) {
                Some((_, masses)) => {
                    Ok(SignalValue::scalar(count_modes(&masses, *prominence) as f64))
                }
                None => Ok(SignalValue::unanswerable(
                    "model carries no density over the target",
                )),
            }
        }

        (SignalKind::ClusterCount { mass } | SignalKind::ClusterSummary { mass }, _) => {
            let clusters = match &rep.kind {
                RepKind::Sample(_) => {
                    let n = if s.columns.len() == 1 {
                        SAMPLE_GRID_1D
                    } else {
                        SAMPLE_GRID_2D
                    };
                    let m = sample_density(s, rep, &s.columns, n)?;
                    Some(density_clusters(&m, *mass, s.connectivity))
                }
                RepKind::Model(m) if m.evaluator == Evaluator::DensityGrid && m.axes.len() <= 2 => {
                    Some(density_clusters(m, *mass, s.connectivity))
                }
                RepKind::Model(_) => None,
                RepKind::Summary(sum) => summary_clusters(sum, &s.columns, *mass, s.connectivity),
            };
            Ok(match clusters {
                None => SignalValue::unanswerable("no grid of masses to threshold"),
                Some(c) if matches!(s.kind, SignalKind::ClusterCount { .. }) => {
                    SignalValue::scalar(c.len() as f64)
                }
                Some(c) => SignalValue::Clusters { clusters: c },
            })
        }

        (SignalKind::ReidentificationRisk { k }, RepKind::Summary(sum)) => {
            Ok(occupancy_risk(sum, *k))
        }
        (SignalKind::ReidentificationRisk { .. }, RepKind::Sample(t)) => {
            let orig = aux.unwrap_or(t);
            nearest_neighbour_risk(orig, t, &s.columns)
        }
        (SignalKind::ReidentificationRisk { .. }, RepKind::Model(_)) => Ok(
            SignalValue::unanswerable("a model retains no individual records"),
        ),
    }
}

fn tactics_sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Interval masses of a summary over one target, ordered by position.
struct Histogram {
    bins: Vec<(Interval, f64)>,
}

fn key_for<'a>(sum: &'a SummaryRep, target: &str) -> Option<usize> {
    sum.key_index(target)
        .or_else(|| sum.key_index(&format!("{target}__bin")))
        .or_else(|| (sum.key_columns.len() == 1 && target.is_empty()).then_some(0))
}

fn histogram(sum: &SummaryRep, target: &str) -> Option<Histogram> {
    let ki = key_for(sum, target)?;
    let si = sum.stat_index("mass").or_else(|| sum.stat_index("count"))?;
    let mut acc: Vec<(Interval, f64)> = Vec::new();
    for g in &sum.groups {
        let iv = g.keys[ki].interval()?;
        let w = g.stats[si].unwrap_or(0.0);
        match acc.iter_mut().find(|(i, _)| *i == iv) {
            Some(slot) => slot.1 += w,
            None => acc.push((iv, w)),
        }
    }
    let total: f64 = acc.iter().map(|b| b.1).sum();
    if !(total > 0.0) {
        return None;
    }
    acc.iter_mut().for_each(|b| b.1 /= total);
    acc.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
    Some(Histogram { bins: acc })
}

impl Histogram {
    /// Bins wholly above `t`, plus a linear share of any bin containing `t`.
    fn exceedance(&self, t: f64) -> SignalValue {
        let (mut above, mut straddle, mut share) = (0.0, 0.0, 0.0);
        for (iv, w) in &self.bins {
            if iv.lo > t {
                above += w;
            } else if t < iv.hi {
                straddle += w;
                let frac = if iv.width() > 0.0 {
                    (iv.hi - t) / iv.width()
                } else {
                    0.0
                };
                share += w * frac;
            }
        }
        SignalValue::bounded(above + share, above, above + straddle)
    }
}

fn summary_quantile(sum: &SummaryRep, target: &str, p: f64) -> SignalValue {
    let Some(ki) = key_for(sum, target) else {
        return SignalValue::unanswerable("no intervals over the target");
    };
    if let (Some(lo_i), Some(hi_i)) = (sum.stat_index("p_lo"), sum.stat_index("p_hi")) {
        for g in &sum.groups {
            let (Some(iv), Some(plo), Some(phi)) =
                (g.keys[ki].interval(), g.stats[lo_i], g.stats[hi_i])
            else {
                continue;
            };
            if p == plo {
                return SignalValue::scalar(iv.lo);
            }
            if p == phi {
                return SignalValue::scalar(iv.hi);
            }
            if plo < p && p < phi {
                let v = iv.lo + (p - plo) / (phi - plo) * iv.width();
                return SignalValue::bounded(v, iv.lo, iv.hi);
            }
        }
        return SignalValue::unanswerable("level outside the band");
    }
    let Some(h) = histogram(sum, target) else {
        return SignalValue::unanswerable("no interval masses for the target");
    };
    let mut cum = 0.0;
    for (iv, w) in &h.bins {
        if *w > 0.0 && cum + w >= p {
            let v = iv.lo + ((p - cum) / w).clamp(0.0, 1.0) * iv.width();
            return SignalValue::bounded(v, iv.lo, iv.hi);
        }
        cum += w;
    }
    let last = h.bins.last().unwrap().0;
    SignalValue::bounded(last.hi, last.lo, last.hi)
}

/// Normalized masses along one axis of a density grid, summing out the rest.
fn marginal(m: &ModelRep, target: &str) -> Option<(Axis, Vec<f64>)> {
    if m.evaluator != Evaluator::DensityGrid {
        return None;
    }
    let a = m
        .axis_index(target)
        .or_else(|| (m.axes.len() == 1).then_some(0))?;
    let shape = m.shape();
    let inner: usize = shape[a + 1..].iter().product();
    let mut out = vec![0.0; shape[a]];
    for (flat, d) in m.grid.iter().enumerate() {
        out[(flat / inner) % shape[a]] += d.max(0.0);
    }
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    out.iter_mut().for_each(|x| *x /= total);
    Some((m.axes[a].clone(), out))
}

/// Mass above `t`, each point's mass spread over a centred cell.
fn grid_mass_above(axis: &Axis, masses: &[f64], t: f64) -> f64 {
    let h = axis.step();
    masses
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let (lo, hi) = (axis.point(i) - h / 2.0, axis.point(i) + h / 2.0);
            let frac = if t <= lo {
                1.0
            } else if t >= hi {
                0.0
            } else {
                (hi - t) / h
            };
            w * frac
        })
        .sum()
}

fn grid_quantile(axis: &Axis, masses: &[f64], p: f64) -> f64 {
    let half = axis.step() / 2.0;
    let mut prev = 0.0;
    for (i, w) in masses.iter().enumerate() {
        let cum = prev + w;
        if cum >= p && *w > 0.0 {
            let frac = ((p - prev) / w).clamp(0.0, 1.0);
            return (axis.point(i) - half + frac * 2.0 * half).clamp(axis.lo, axis.hi);
        }
        prev = cum;
    }
    axis.hi
}

fn sample_density(
    s: &SignalSpec,
    rep: &Representation,
    cols: &[String],
    n: usize,
) -> Result<ModelRep> {
    let bw = match s.bandwidth {
        Some(h) => Bandwidth::Fixed(h),
        None => Bandwidth::Auto,
    };
    let grid = GridSpec {
        n: s.grid_n.unwrap_or(n),
        range: None,
    };
    let m = tactics::smooth_kde(rep, cols, &[bw], &[grid])?;
    Ok(m.as_model()?.clone())
}

/// Local maxima (plateaus count once) whose topographic prominence is at
/// least `rel` times the highest value. Values beyond both ends count as 0.
pub fn count_modes(v: &[f64], rel: f64) -> usize {
    let n = v.len();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if n == 0 || !(top > 0.0) {
        return 0;
    }
    let at = |i: isize| {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            v[i as usize]
        }
    };
    let mut count = 0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        let h = v[i];
        if h > 0.0 && at(i as isize - 1) < h && at(j as isize + 1) < h {
            // lowest point on each side before the terrain rises above h
            let mut k = i as isize - 1;
            let mut lmin = h;
            while k >= -1 {
                let x = at(k);
                if x > h {
                    break;
                }
                lmin = lmin.min(x);
                k -= 1;
            }
            let mut k = j as isize + 1;
            let mut rmin = h;
            while k <= n as isize {
                let x = at(k);
                if x > h {
                    break;
                }
                rmin = rmin.min(x);
                k += 1;
            }
            if h - lmin.max(rmin) >= rel * top {
                count += 1;
            }
        }
        i = j + 1;
    }
    count
}

fn components(cells: &[usize], shape: &[usize], conn: Connectivity) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    let mut member = vec![false; total];
    for &c in cells {
        member[c] = true;
    }
    let (rows, cols) = match shape {
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => unreachable!("clusters on 1-D or 2-D grids"),
    };
    let mut seen = vec![false; total];
    let mut out = Vec::new();
    for &start in cells {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(c) = stack.pop() {
            let (r, k) = ((c / cols) as i64, (c % cols) as i64);
            for dr in -1i64..=1 {
                for dk in -1i64..=1 {
                    if (dr == 0 && dk == 0) || (conn == Connectivity::Four && dr != 0 && dk != 0) {
                        continue;
                    }
                    let (nr, nk) = (r + dr, k + dk);
                    if nr < 0 || nk < 0 || nr >= rows as i64 || nk >= cols as i64 {
                        continue;
                    }
                    let nb = nr as usize * cols + nk as usize;
                    if member[nb] && !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                        stack.push(nb);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Greedy highest-mass cell set reaching `level` of the total.
fn hdr_cells(masses: &[f64], level: f64) -> Vec<usize> {
    let total: f64 = masses.iter().map(|m| m.max(0.0)).sum();
    if !(total > 0.0) {
        return vec![];
    }
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| masses[b].total_cmp(&masses[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut cells = Vec::new();
    for i in order {
        if cum >= level {
            break;
        }
        cum += masses[i].max(0.0) / total;
        cells.push(i);
    }
    cells.sort_unstable();
    cells
}

/// Clusters from cell sets over per-axis coordinates; largest mass first.
fn summarize(comps: Vec<Vec<usize>>, coords: &[Vec<f64>], masses: &[f64]) -> Vec<Cluster> {
    let total: f64 = masses
        .iter()
        .map(|m| m.max(0.0))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let cols = coords.last().map_or(1, Vec::len);
    let mut out: Vec<(usize, Cluster)> = comps
        .into_iter()
        .map(|comp| {
            let d = coords.len();
            let mut c = Cluster {
                centroid: vec![0.0; d],
                lo: vec![f64::INFINITY; d],
                hi: vec![f64::NEG_INFINITY; d],
                mass: 0.0,
                cells: comp.len(),
            };
            for &cell in &comp {
                let idx = if d == 1 {
                    vec![cell]
                } else {
                    vec![cell / cols, cell % cols]
                };
                let w = masses[cell].max(0.0);
                c.mass += w;
                for a in 0..d {
                    let x = coords[a][idx[a]];
                    c.centroid[a] += w * x;
                    c.lo[a] = c.lo[a].min(x);
                    c.hi[a] = c.hi[a].max(x);
                }
            }
            for a in 0..d {
                c.centroid[a] = if c.mass > 0.0 {
                    c.centroid[a] / c.mass
                } else {
                    (c.lo[a] + c.hi[a]) / 2.0
                };
            }
            c.mass /= total;
            (comp[0], c)
        })
        .collect();
    out.sort_by(|a, b| b.1.mass.total_cmp(&a.1.mass).then(a.0.cmp(&b.0)));
    out.into_iter().map(|(_, c)| c).collect()
}

fn density_clusters(m: &ModelRep, level: f64, conn: Connectivity) -> Vec<Cluster> {
    let cells = tactics::highest_density_region(m, level);
    let coords: Vec<Vec<f64>> = m.axes.iter().map(Axis::points).collect();
    summarize(components(&cells, &m.shape(), conn), &coords, &m.grid)
}

fn summary_clusters(
    sum: &SummaryRep,
    cols: &[String],
    level: f64,
    conn: Connectivity,
) -> Option<Vec<Cluster>> {
    // a mass band over a density grid carries its regions
    if let (Some(axes), Some(ri)) = (&sum.grid, sum.key_index("region")) {
        let g = sum.groups.iter().find(|g| {
            matches!(&g.keys[ri], GroupKey::Region { level: l, .. } if (l - level).abs() < 1e-12)
        })?;
        let GroupKey::Region { cells, .. } = &g.keys[ri] else {
            unreachable!()
        };
        let shape: Vec<usize> = axes.iter().map(|a| a.n).collect();
        if shape.len() > 2 {
            return None;
        }
        let coords: Vec<Vec<f64>> = axes.iter().map(Axis::points).collect();
        let uniform = vec![1.0; shape.iter().product()];
        return Some(summarize(
            components(cells, &shape, conn),
            &coords,
            &uniform,
        ));
    }
    // histogram or heatmap: threshold the bin masses
    let key_idx: Vec<usize> = cols
        .iter()
        .map(|c| key_for(sum, c))
        .collect::<Option<_>>()?;
    let si = sum.stat_index("mass").or_else(|| sum.stat_index("count"))?;
    let mut edges: Vec<Vec<Interval>> = vec![Vec::new(); key_idx.len()];
    for g in &sum.groups {
        for (a, &ki) in key_idx.iter().enumerate() {
            let iv = g.keys[ki].interval()?;
            if !edges[a].contains(&iv) {
                edges[a].push(iv);
            }
        }
    }
    for e in &mut edges {
        e.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    }
    let shape: Vec<usize> = edges.iter().map(Vec::len).collect();
    let mut masses = vec![0.0; shape.iter().product()];
    for g in &sum.groups {
        let mut flat = 0;
        for (a, &ki) in key_idx.iter().enumerate() {
            let iv = g.keys[ki].interval()?;
            flat = flat * shape[a] + edges[a].iter().position(|e| *e == iv)?;
        }
        masses[flat] += g.stats[si].unwrap_or(0.0);
    }
    let cells = hdr_cells(&masses, level);
    let coords: Vec<Vec<f64>> = edges
        .iter()
        .map(|e| e.iter().map(|iv| (iv.lo + iv.hi) / 2.0).collect())
        .collect();
    Some(summarize(
        components(&cells, &shape, conn),
        &coords,
        &masses,
    ))
}

/// Share of records in groups smaller than `k`, and the smallest non-empty
/// group.
fn occupancy_risk(sum: &SummaryRep, k: usize) -> SignalValue {
    let Some(ci) = sum.stat_index("count") else {
        return SignalValue::unanswerable("summary carries no record counts");
    };
    let counts: Vec<f64> = sum
        .groups
        .iter()
        .filter_map(|g| g.stats[ci])
        .filter(|&c| c > 0.0)
        .collect();
    let total: f64 = counts.iter().sum();
    if counts.is_empty() {
        return SignalValue::unanswerable("no occupied groups");
    }
    let at_risk: f64 = counts.iter().filter(|&&c| c < k as f64).fold(0.0, |a, c| a + c);
    let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
    SignalValue::Scalar {
        value: at_risk / total,
        bound: None,
        min_occupancy: Some(min),
        passes: Some(min >= k as f64),
    }
}

/// Share of original rows whose nearest disclosed row (Euclidean, after
/// scaling each axis by the original's range) is strictly their own image.
/// Rows correspond by position.
fn nearest_neighbour_risk(orig: &Table, disclosed: &Table, cols: &[String]) -> Result<SignalValue> {
    let cols: Vec<String> = if cols.is_empty() {
        disclosed
            .columns
            .iter()
            .filter(|c| c.kind.is_numeric() && c.bins.is_none() && orig.has_column(&c.name))
            .map(|c| c.name.clone())
            .collect()
    } else {
        cols.to_vec()
    };
    if cols.is_empty() {
        return Ok(SignalValue::unanswerable("no shared numeric columns"));
    }
    if orig.n_rows() != disclosed.n_rows() {
        return Ok(SignalValue::unanswerable("row correspondence lost"));
    }
    let n = orig.n_rows();
    if n == 0 {
        return Ok(SignalValue::unanswerable("no rows"));
    }
    let mut o = Vec::new();
    let mut d = Vec::new();
    for c in &cols {
        let oc = orig.numeric_column(c)?;
        let dc = disclosed.numeric_column(c)?;
        if oc.cells.iter().chain(&dc.cells).any(|x| x.is_missing()) {
            return Ok(SignalValue::unanswerable(
                "missing values break row correspondence",
            ));
        }
        let ov = oc.present_f64();
        let lo = ov.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ov.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { hi - lo } else { 1.0 };
        o.push(ov.iter().map(|x| x / scale).collect::<Vec<_>>());
        d.push(
            dc.present_f64()
                .iter()
                .map(|x| x / scale)
                .collect::<Vec<_>>(),
        );
    }
    let dist = |i: usize, j: usize| -> f64 {
        o.iter()
            .zip(&d)
            .map(|(oc, dc)| (oc[i] - dc[j]).powi(2))
            .sum()
    };
    let hits = (0..n)
        .filter(|&i| {
            let own = dist(i, i);
            (0..n).all(|j| j == i || dist(i, j) > own)
        })
        .count();
    Ok(SignalValue::scalar(hits as f64 / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Column, Table};
    use crate::tactics::{aggregate, band, classify, BandLevels, BinSpec, StatSpec};

    fn rep(x: &[f64]) -> Representation {
        Representation::sample(Table::new(vec![Column::numeric("x", x)], "t").unwrap())
    }

    fn ex(t: f64) -> SignalSpec {
        SignalSpec::new(SignalKind::Exceedance { threshold: t }, &["x"])
    }

    #[test]
    fn exceedance_sample() {
        let v = eval_signal(&ex(1000.0), &rep(&[900.0, 1100.0, 1200.0]), None).unwrap();
        assert!((v.value().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exceedance_straddling_bin() {
        let r = rep(&[900.0, 960.0, 990.0, 1010.0, 1060.0, 1100.0]);
        let h = band(
            &r,
            Some("x"),
            &BandLevels::Cuts(vec![850.0, 950.0, 1050.0, 1150.0]),
        )
        .unwrap();
        let v = eval_signal(&ex(1000.0), &h, None).unwrap();
        let [lo, hi] = v.bound().unwrap();
        // [950, 1050) holds 3 of 6 values
        assert!((hi - lo - 0.5).abs() < 1e-12);
        assert!((lo - 2.0 / 6.0).abs() < 1e-12);
        assert!((v.value().unwrap() - (2.0 / 6.0 + 0.25)).abs() < 1e-12);
        let exact = eval_signal(&ex(1000.0), &r, None).unwrap().value().unwrap();
        assert!(lo <= exact && exact <= hi);
    }

    #[test]
    fn quantile_on_five_number_band() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let b = band(
            &rep(&v),
            Some("x"),
            &BandLevels::Quantiles(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
        )
        .unwrap();
        let q = SignalSpec::new(SignalKind::Quantile { p: 0.5 }, &["x"]);
        assert_eq!(eval_signal(&q, &b, None).unwrap().value(), Some(5.0));
        assert_eq!(eval_signal(&q, &rep(&v), None).unwrap().value(), Some(5.0));
        let modes = SignalSpec::new(SignalKind::ModeCount { prominence: 0.1 }, &["x"]);
        assert!(eval_signal(&modes, &b, None).unwrap().is_unanswerable());
    }

    #[test]
    fn mode_counting() {
        assert_eq!(count_modes(&[0.0, 1.0, 0.0, 2.0, 0.0], 0.1), 2);
        assert_eq!(count_modes(&[0.0, 1.0, 0.95, 2.0, 0.0], 0.1), 1);
        assert_eq!(count_modes(&[1.0, 1.0, 1.0], 0.0), 1);
        assert_eq!(count_modes(&[3.0, 2.0, 1.0], 0.5), 1);
        assert_eq!(count_modes(&[], 0.5), 0);
    }

    #[test]
    fn bimodal_sample_modes() {
        let mut v: Vec<f64> = (0..50).map(|i| i as f64 * 0.02).collect();
        v.extend((0..50).map(|i| 10.0 + i as f64 * 0.02));
        let s = SignalSpec::new(SignalKind::ModeCount { prominence: 0.2 }, &["x"]);
        assert_eq!(eval_signal(&s, &rep(&v), None).unwrap().value(), Some(2.0));
    }

    fn blob_grid(centres: &[(usize, usize)]) -> ModelRep {
        let n = 20;
        let mut grid = vec![0.0; n * n];
        for &(cr, cc) in centres {
            for r in 0..n {
                for c in 0..n {
                    let d2 = (r as f64 - cr as f64).powi(2) + (c as f64 - cc as f64).powi(2);
                    grid[r * n + c] += (-d2 / 2.0).exp();
                }
            }
        }
        let axis = |name: &str| Axis {
            name: name.into(),
            lo: 0.0,
            hi: 19.0,
            n,
        };
        ModelRep {
            axes: vec![axis("x"), axis("y")],
            evaluator: Evaluator::DensityGrid,
            param_names: vec![],
            params: vec![],
            grid,
        }
    }

    #[test]
    fn two_blobs_two_clusters() {
        let m = Representation::model(blob_grid(&[(4, 4), (15, 15)]), vec![]);
        let s = SignalSpec::new(SignalKind::ClusterCount { mass: 0.85 }, &["x", "y"]);
        assert_eq!(eval_signal(&s, &m, None).unwrap().value(), Some(2.0));
        let banded = band(&m, None, &BandLevels::Mass(vec![0.85])).unwrap();
        assert_eq!(eval_signal(&s, &banded, None).unwrap().value(), Some(2.0));
        let summary = SignalSpec::new(SignalKind::ClusterSummary { mass: 0.85 }, &["x", "y"]);
        match eval_signal(&summary, &m, None).unwrap() {
            SignalValue::Clusters { clusters } => {
                assert_eq!(clusters.len(), 2);
                assert!(
                    (clusters[0].centroid[0] - 4.0).abs() < 0.5
                        || (clusters[0].centroid[0] - 15.0).abs() < 0.5
                );
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn occupancy() {
        let r = rep(&[0.0, 0.1, 0.2, 5.0, 9.0, 9.5]);
        let c = classify(&r, "x", &BinSpec::EqualWidth(3)).unwrap();
        let a = aggregate(&c, &["x__bin".into()], &[StatSpec::count()]).unwrap();
        let s = SignalSpec::new(SignalKind::ReidentificationRisk { k: 2 }, &[]);
        match eval_signal(&s, &a, None).unwrap() {
            SignalValue::Scalar {
                value,
                min_occupancy,
                passes,
                ..
            } => {
                assert!((value - 1.0 / 6.0).abs() < 1e-12);
                assert_eq!(min_occupancy, Some(1.0));
                assert_eq!(passes, Some(false));
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn nearest_neighbour() {
        let orig = Table::new(vec![Column::numeric("x", &[0.0, 1.0, 2.0, 3.0])], "t").unwrap();
        let swapped = Table::new(vec![Column::numeric("x", &[1.0, 0.0, 2.0, 3.0])], "t").unwrap();
        let s = SignalSpec::new(SignalKind::ReidentificationRisk { k: 1 }, &["x"]);
        let own = eval_signal(&s, &Representation::sample(orig.clone()), None).unwrap();
        assert_eq!(own.value(), Some(1.0));
        let v = eval_signal(&s, &Representation::sample(swapped), Some(&orig)).unwrap();
        assert_eq!(v.value(), Some(0.5));
    }
}
