//! Convergence indicators derived from panels: income-group shares per
//! period, growth rates, gap ratios between groups, bellwether dominance,
//! and (as an extension) the Gini coefficient over countries.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::aggregate::{saliency_ratio, AttributionMode, CellSelector, Period};
use crate::collab::CollabCell;
use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::regions::{IncomeGroup, Region, RegionTable};
use crate::stats::gini;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    PubCount,
    CitationCount,
    Saliency,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::PubCount, Metric::CitationCount, Metric::Saliency];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::PubCount => "pub_count",
            Metric::CitationCount => "citation_count",
            Metric::Saliency => "saliency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendPoint {
    pub period: String,
    pub value: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendSeries {
    pub metric: Metric,
    pub subject: String,
    pub baseline: String,
    pub field: String,
    pub points: Vec<TrendPoint>,
}

/// Period-over-period growth in percent; `None` where the base value is 0.
pub fn growth_rates(values: &[f64]) -> Vec<Option<f64>> {
    values
        .windows(2)
        .map(|w| (w[0] != 0.0).then(|| (w[1] - w[0]) / w[0] * 100.0))
        .collect()
}

pub fn decade_growth(series: &TrendSeries) -> Vec<Option<f64>> {
    let values: Vec<f64> = series.points.iter().map(|p| p.value).collect();
    growth_rates(&values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Converging,
    Diverging,
    Mixed,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Converging => "converging",
            Trend::Diverging => "diverging",
            Trend::Mixed => "mixed",
        })
    }
}

/// Converging if the gap ratio strictly decreases over at least three
/// periods, diverging if it strictly increases, mixed otherwise.
pub fn classify(ratios: &[Option<f64>]) -> Trend {
    let Some(values) = ratios.iter().copied().collect::<Option<Vec<f64>>>() else {
        return Trend::Mixed;
    };
    if values.len() < 3 {
        return Trend::Mixed;
    }
    if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Converging
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Diverging
    } else {
        Trend::Mixed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub subject: String,
    pub growth_pct: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSeries {
    pub high: String,
    pub low: String,
    pub ratios: Vec<Option<f64>>,
    pub trend: Trend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellwetherSeries {
    pub subject: String,
    pub group: String,
    pub ratios: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricTrends {
    pub metric: Metric,
    pub shares: Vec<TrendSeries>,
    pub growth: Vec<GrowthSeries>,
    pub gaps: Vec<GapSeries>,
    pub bellwethers: Vec<BellwetherSeries>,
    /// Gini over country-level values per period, an extra concentration
    /// indicator alongside the gap ratios.
    pub gini_extension: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldTrends {
    pub field: String,
    pub metrics: Vec<MetricTrends>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    pub periods: Vec<String>,
    pub saliency_mode: Option<AttributionMode>,
    pub fields: Vec<FieldTrends>,
    /// Regions or fields the report needed but the panel lacked.
    pub missing: Vec<String>,
}

impl TrendReport {
    pub fn field(&self, name: &str) -> Option<&FieldTrends> {
        self.fields.iter().find(|f| f.field == name)
    }
}

impl FieldTrends {
    pub fn metric(&self, m: Metric) -> Option<&MetricTrends> {
        self.metrics.iter().find(|x| x.metric == m)
    }
}

impl MetricTrends {
    pub fn gap(&self, high: &str, low: &str) -> Option<&GapSeries> {
        self.gaps.iter().find(|g| g.high == high && g.low == low)
    }

    pub fn share(&self, subject: &str) -> Option<&TrendSeries> {
        self.shares.iter().find(|s| s.subject == subject)
    }
}

/// Panel value of one metric summed over a period, `None` when the region,
/// field or metric is absent.
pub fn period_value(panel: &Panel, metric: Metric, field: &str, region: &Region, period: Period) -> Option<f64> {
    let f = panel.field_index(field)?;
    let r = panel.region_index(region)?;
    let mut total = 0.0;
    for y in period.years() {
        if !panel.years.contains(&y) {
            return None;
        }
        let o = panel.offset(f, r, y);
        total += match metric {
            Metric::PubCount => panel.pub_count[o] as f64,
            Metric::CitationCount => panel.citation_count[o] as f64,
            Metric::Saliency => panel.saliency.as_ref()?.1[o],
        };
    }
    Some(total)
}

fn group_regions() -> Vec<Region> {
    IncomeGroup::ALL.iter().map(|&g| Region::Group(g)).collect()
}

pub fn convergence_report(
    panel: &Panel,
    table: &RegionTable,
    fields: &[String],
    periods: &[Period],
    bellwethers: &[(Region, Region)],
) -> TrendReport {
    let mut missing = Vec::new();
    let mut note = |s: String| {
        if !missing.contains(&s) {
            missing.push(s);
        }
    };
    let mut share_subjects = group_regions();
    share_subjects.push(Region::Unknown);
    for r in share_subjects.iter().chain([&Region::World]) {
        if panel.region_index(r).is_none() {
            note(format!("region {r}"));
        }
    }
    let metrics: Vec<Metric> = Metric::ALL
        .into_iter()
        .filter(|&m| m != Metric::Saliency || panel.saliency.is_some())
        .collect();
    let countries: Vec<&Region> = panel
        .regions
        .iter()
        .filter(|r| matches!(r, Region::Country(_)))
        .collect();

    let mut out = Vec::new();
    for field in fields {
        if panel.field_index(field).is_none() {
            note(format!("field {field}"));
            continue;
        }
        let mut per_metric = Vec::new();
        for &metric in &metrics {
            let value = |r: &Region, p: Period| period_value(panel, metric, field, r, p);
            let world: Vec<Option<f64>> = periods.iter().map(|&p| value(&Region::World, p)).collect();

            let mut shares = Vec::new();
            let mut growth = Vec::new();
            for r in &share_subjects {
                let Some(values) = periods.iter().map(|&p| value(r, p)).collect::<Option<Vec<f64>>>() else {
                    continue;
                };
                let points = periods
                    .iter()
                    .zip(&values)
                    .zip(&world)
                    .map(|((p, &v), w)| TrendPoint {
                        period: p.to_string(),
                        value: v,
                        share: match w {
                            Some(w) if *w > 0.0 => v / w,
                            _ => 0.0,
                        },
                    })
                    .collect();
                let series = TrendSeries {
                    metric,
                    subject: r.to_string(),
                    baseline: Region::World.to_string(),
                    field: field.clone(),
                    points,
                };
                growth.push(GrowthSeries {
                    subject: r.to_string(),
                    growth_pct: decade_growth(&series),
                });
                shares.push(series);
            }

            let groups = group_regions();
            let mut gaps = Vec::new();
            for (i, high) in groups.iter().enumerate() {
                for low in &groups[i + 1..] {
                    if panel.region_index(high).is_none() || panel.region_index(low).is_none() {
                        continue;
                    }
                    let ratios: Vec<Option<f64>> = periods
                        .iter()
                        .map(|&p| match (value(high, p), value(low, p)) {
                            (Some(h), Some(l)) if l > 0.0 => Some(h / l),
                            _ => None,
                        })
                        .collect();
                    gaps.push(GapSeries {
                        high: high.to_string(),
                        low: low.to_string(),
                        trend: classify(&ratios),
                        ratios,
                    });
                }
            }

            let mut bells = Vec::new();
            for (b, g) in bellwethers {
                if panel.region_index(b).is_none() || panel.region_index(g).is_none() {
                    note(format!("bellwether {b} in {g}"));
                    continue;
                }
                if !table.is_subset(b, g).unwrap_or(false) {
                    note(format!("bellwether {b} not contained in {g}"));
                    continue;
                }
                let ratios = periods
                    .iter()
                    .map(|&p| {
                        if metric == Metric::Saliency && panel.mode() == Some(AttributionMode::Probabilistic) {
                            let num = CellSelector::new(field, b.clone(), p);
                            let den = CellSelector::new(field, g.clone(), p);
                            saliency_ratio(&num, &den, panel, table).ok()
                        } else {
                            match (value(b, p), value(g, p)) {
                                (Some(x), Some(y)) if y > 0.0 => Some(x / y),
                                (Some(_), Some(_)) => Some(0.0),
                                _ => None,
                            }
                        }
                    })
                    .collect();
                bells.push(BellwetherSeries {
                    subject: b.to_string(),
                    group: g.to_string(),
                    ratios,
                });
            }

            let gini_extension = periods
                .iter()
                .map(|&p| {
                    if countries.is_empty() {
                        return None;
                    }
                    let vals: Option<Vec<f64>> = countries.iter().map(|c| value(c, p)).collect();
                    vals.map(|v| gini(&v))
                })
                .collect();

            per_metric.push(MetricTrends {
                metric,
                shares,
                growth,
                gaps,
                bellwethers: bells,
                gini_extension,
            });
        }
        out.push(FieldTrends {
            field: field.clone(),
            metrics: per_metric,
        });
    }
    TrendReport {
        periods: periods.iter().map(|p| p.to_string()).collect(),
        saliency_mode: panel.mode(),
        fields: out,
        missing,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Flattened report:
/// `field,metric,indicator,subject,baseline,period,value,share,classification`.
pub fn write_trends_csv<W: Write>(report: &TrendReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "field",
        "metric",
        "indicator",
        "subject",
        "baseline",
        "period",
        "value",
        "share",
        "classification",
    ])?;
    for f in &report.fields {
        for m in &f.metrics {
            let metric = m.metric.to_string();
            let mut row = |ind: &str, subj: &str, base: &str, period: &str, value: String, share: String, class: &str| {
                out.write_record([&f.field, &metric, ind, subj, base, period, &value, &share, class])
            };
            for s in &m.shares {
                for p in &s.points {
                    row("share", &s.subject, &s.baseline, &p.period, p.value.to_string(), p.share.to_string(), "")?;
                }
            }
            for g in &m.growth {
                for (i, v) in g.growth_pct.iter().enumerate() {
                    row("growth_pct", &g.subject, "", &report.periods[i + 1], opt(*v), String::new(), "")?;
                }
            }
            for g in &m.gaps {
                let class = g.trend.to_string();
                for (p, v) in report.periods.iter().zip(&g.ratios) {
                    row("gap_ratio", &g.high, &g.low, p, opt(*v), String::new(), &class)?;
                }
            }
            for b in &m.bellwethers {
                for (p, v) in report.periods.iter().zip(&b.ratios) {
                    row("bellwether_ratio", &b.subject, &b.group, p, opt(*v), String::new(), "")?;
                }
            }
            for (p, v) in report.periods.iter().zip(&m.gini_extension) {
                row("gini_extension", "countries", "", p, opt(*v), String::new(), "")?;
            }
        }
    }
    out.flush().map_err(|e| Error::io("trends.csv", e))?;
    Ok(())
}

/// Field names the per-field figures look for, in figure order.
pub const FIGURE_FIELDS: [&str; 3] = ["AI", "Medicine", "Materials Science"];

/// One plot-ready CSV per report figure, as `(file name, contents)`. Group
/// figures use `overall` as the field (e.g. `STEM` or `ALL`); collaboration
/// figures cover the last decade of `periods`.
pub fn plot_data(
    panel: &Panel,
    collab: &[CollabCell],
    overall: &str,
    periods: &[Period],
) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    let metrics: Vec<Metric> = Metric::ALL
        .into_iter()
        .filter(|&m| m != Metric::Saliency || panel.saliency.is_some())
        .collect();
    let groups = group_regions();

    let csv_of = |header: &[&str], rows: Vec<Vec<String>>| -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    };
    let region_rows = |field: &str, regions: &[Region]| -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for &m in &metrics {
            for r in regions {
                for &p in periods {
                    let (Some(v), Some(w)) = (
                        period_value(panel, m, field, r, p),
                        period_value(panel, m, field, &Region::World, p),
                    ) else {
                        continue;
                    };
                    let share = if w > 0.0 { v / w } else { 0.0 };
                    rows.push(vec![m.to_string(), r.to_string(), p.to_string(), v.to_string(), share.to_string()]);
                }
            }
        }
        rows
    };
    let header = ["metric", "region", "period", "value", "share"];

    // group shares and absolute values for the overall field
    files.push((
        "fig1_group_shares.csv".to_owned(),
        csv_of(&header, region_rows(overall, &groups))?,
    ));
    files.push((
        "fig2_group_values.csv".to_owned(),
        csv_of(&header, region_rows(overall, &groups))?,
    ));
    let mut with_bells = groups.clone();
    with_bells.push(Region::Aggregate("US".into()));
    with_bells.push(Region::Aggregate("CN".into()));
    for (i, f) in FIGURE_FIELDS.iter().enumerate() {
        let name = format!("fig{}_{}.csv", i + 3, f.to_lowercase().replace(' ', "_"));
        files.push((name, csv_of(&header, region_rows(f, &with_bells))?));
    }

    let last = periods.last().copied();
    let in_last = |y: i32| last.is_some_and(|p| p.years().contains(&y));
    let collab_fields: Vec<&str> = std::iter::once(overall).chain(FIGURE_FIELDS).collect();
    let world_saliency = |field: &str, y: i32| period_value(panel, Metric::Saliency, field, &Region::World, Period::year(y));

    let rows = collab
        .iter()
        .filter(|c| in_last(c.year) && collab_fields.contains(&c.field.as_str()))
        .map(|c| vec![c.field.clone(), format!("{}-{}", c.region_a, c.region_b), c.year.to_string(), c.pub_count.to_string()])
        .collect();
    files.push((
        "fig6_collab_output.csv".to_owned(),
        csv_of(&["field", "pair", "year", "pub_count"], rows)?,
    ));

    let rows = collab
        .iter()
        .filter(|c| in_last(c.year) && collab_fields.contains(&c.field.as_str()))
        .map(|c| {
            let ratio = match (c.saliency, world_saliency(overall, c.year)) {
                (Some(s), Some(w)) if w > 0.0 => (s / w).to_string(),
                _ => String::new(),
            };
            vec![c.field.clone(), format!("{}-{}", c.region_a, c.region_b), c.year.to_string(), ratio]
        })
        .collect();
    files.push((
        "fig7_collab_impact.csv".to_owned(),
        csv_of(&["field", "pair", "year", "saliency_ratio"], rows)?,
    ));

    let share_rows = |fields: &[&str]| -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for c in collab.iter().filter(|c| in_last(c.year) && fields.contains(&c.field.as_str())) {
            for (region, partner, out, imp) in [
                (&c.region_a, &c.region_b, c.share_out_a, c.share_imp_a),
                (&c.region_b, &c.region_a, c.share_out_b, c.share_imp_b),
            ] {
                rows.push(vec![
                    c.field.clone(),
                    region.clone(),
                    partner.clone(),
                    c.year.to_string(),
                    out.to_string(),
                    opt(imp),
                ]);
            }
        }
        rows
    };
    let header = ["field", "region", "partner", "year", "share_out", "share_imp"];
    files.push((
        "fig8_country_collab_shares.csv".to_owned(),
        csv_of(&header, share_rows(&[overall]))?,
    ));
    files.push((
        "fig9_collab_field_shares.csv".to_owned(),
        csv_of(&header, share_rows(&FIGURE_FIELDS))?,
    ));
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::Panel;

    #[test]
    fn growth_format() {
        let g = growth_rates(&[100.0, 212.6]);
        assert_eq!(g.len(), 1);
        assert!((g[0].unwrap() - 112.6).abs() < 1e-9);
        assert_eq!(growth_rates(&[5.0, 5.0, 5.0]), vec![Some(0.0), Some(0.0)]);
        assert_eq!(growth_rates(&[0.0, 3.0]), vec![None]);
        assert!(growth_rates(&[1.0]).is_empty());
    }

    #[test]
    fn classification_needs_three_strict_steps() {
        assert_eq!(classify(&[Some(4.0), Some(3.0), Some(2.0)]), Trend::Converging);
        assert_eq!(classify(&[Some(1.0), Some(2.0), Some(3.0)]), Trend::Diverging);
        assert_eq!(classify(&[Some(1.0), Some(1.0), Some(1.0)]), Trend::Mixed);
        assert_eq!(classify(&[Some(4.0), Some(3.0)]), Trend::Mixed);
        assert_eq!(classify(&[Some(4.0), None, Some(2.0)]), Trend::Mixed);
    }

    fn group_panel(values: &[[u64; 4]]) -> Panel {
        let mut regions = vec![Region::World];
        regions.extend(group_regions());
        let years = 1980..1980 + values.len() as i32;
        let mut p = Panel::empty(vec!["ALL".into()], regions, years.clone());
        for (k, row) in values.iter().enumerate() {
            let y = 1980 + k as i32;
            let mut total = 0;
            for (g, &v) in row.iter().enumerate() {
                let o = p.offset(0, g + 1, y);
                p.pub_count[o] = v;
                total += v;
            }
            let o = p.offset(0, 0, y);
            p.pub_count[o] = total;
        }
        p
    }

    #[test]
    fn equal_groups_are_mixed_with_unit_gaps() {
        let p = group_panel(&[[5, 5, 5, 5]; 3]);
        let periods: Vec<Period> = (1980..1983).map(Period::year).collect();
        let r = convergence_report(&p, &RegionTable::bundled(), &["ALL".into()], &periods, &[]);
        let m = r.field("ALL").unwrap().metric(Metric::PubCount).unwrap();
        for g in &m.gaps {
            assert_eq!(g.trend, Trend::Mixed);
            assert!(g.ratios.iter().all(|&x| x == Some(1.0)));
        }
        assert!(r.missing.contains(&"region UNKNOWN".to_string()));
    }

    #[test]
    fn classification_is_scale_invariant() {
        let base = [[100, 10, 5, 1], [120, 20, 6, 1], [130, 40, 7, 1]];
        let scaled: Vec<[u64; 4]> = base
            .iter()
            .enumerate()
            .map(|(k, r)| r.map(|v| v * (k as u64 + 3)))
            .collect();
        let periods: Vec<Period> = (1980..1983).map(Period::year).collect();
        let t = RegionTable::bundled();
        let a = convergence_report(&group_panel(&base), &t, &["ALL".into()], &periods, &[]);
        let b = convergence_report(&group_panel(&scaled), &t, &["ALL".into()], &periods, &[]);
        let ga = &a.fields[0].metrics[0].gaps;
        let gb = &b.fields[0].metrics[0].gaps;
        assert_eq!(ga.iter().map(|g| g.trend).collect::<Vec<_>>(), gb.iter().map(|g| g.trend).collect::<Vec<_>>());
        assert_eq!(a.fields[0].metrics[0].gap("HIC", "UMC").unwrap().trend, Trend::Converging);
        let shares = a.fields[0].metrics[0].share("HIC").unwrap();
        assert!((shares.points[0].share - 100.0 / 116.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = group_panel(&[[5, 4, 3, 2]; 3]);
        let periods: Vec<Period> = (1980..1983).map(Period::year).collect();
        let r = convergence_report(&p, &RegionTable::bundled(), &["ALL".into()], &periods, &[]);
        let mut buf = Vec::new();
        write_trends_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("field,metric,indicator,subject,baseline,period,value,share,classification\n"));
        assert!(text.contains("ALL,pub_count,gap_ratio,HIC,LIC,1980,2.5,,mixed"));
    }
}
