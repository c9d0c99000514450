//! Regenerates the reference figures and diffs them against the embedded data.

use rayon::prelude::*;

use crate::bounds::{CurveKind, TradeoffCurve};
use crate::combinatorics::{fmt_float, rational, to_f64, Rational};
use crate::error::{Error, Result};
use crate::inactivity::{monte_carlo_outage, outage_probability_exact, RobustConfig};
use crate::reference::{self, Figure, Panel, ReferenceSeries, FIG3_OUTAGES};

pub const FIG2_FILES: usize = 10;
pub const FIG2_USERS: usize = 30;
pub const FIG2_TOLERANCE: f64 = 1e-9;

pub const FIG3_FILES: usize = 50;
pub const FIG3_USERS: usize = 100;
pub const FIG3_T_MIN: usize = 2;
pub const FIG3_REL_TOLERANCE: f64 = 1e-6;

pub fn fig3_p() -> Rational {
    rational(1, 10)
}

/// Plotted memory grid of the first figure: `M = j/3`, `j = 3..=18`.
pub fn fig2_memory(index: usize) -> Rational {
    rational(3 + index as i64, 3)
}

#[derive(Clone, Debug)]
pub struct PointDiff {
    pub memory: f64,
    pub memory_ref: f64,
    pub load: f64,
    pub load_ref: f64,
}

impl PointDiff {
    pub fn abs_dev(&self) -> f64 {
        (self.load - self.load_ref)
            .abs()
            .max((self.memory - self.memory_ref).abs())
    }

    pub fn rel_dev(&self) -> f64 {
        let r = (self.load - self.load_ref).abs() / self.load_ref.abs().max(f64::MIN_POSITIVE);
        let m = (self.memory - self.memory_ref).abs() / self.memory_ref.abs().max(f64::MIN_POSITIVE);
        r.max(m)
    }
}

#[derive(Clone, Debug)]
pub struct SeriesDiff {
    pub series: &'static ReferenceSeries,
    pub points: Vec<PointDiff>,
    pub relative: bool,
    pub tolerance: f64,
}

impl SeriesDiff {
    pub fn max_abs(&self) -> f64 {
        self.points.iter().map(PointDiff::abs_dev).fold(0.0, f64::max)
    }

    pub fn max_rel(&self) -> f64 {
        self.points.iter().map(PointDiff::rel_dev).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        let dev = if self.relative { self.max_rel() } else { self.max_abs() };
        dev <= self.tolerance
    }

    pub fn name(&self) -> String {
        let panel = match self.series.panel {
            Panel::Worst => "worst",
            Panel::Average => "average",
        };
        match self.series.a {
            Some(a) => format!("{panel}/{}/a={a}", self.series.curve),
            None => format!("{panel}/{}", self.series.curve),
        }
    }
}

fn fig2_series(series: &'static ReferenceSeries) -> Result<SeriesDiff> {
    let kind: CurveKind = series.curve.parse()?;
    let curve = TradeoffCurve::new(kind, FIG2_FILES, FIG2_USERS)?;
    let points = series
        .points
        .iter()
        .enumerate()
        .map(|(j, &(m_ref, r_ref))| {
            let m = fig2_memory(j);
            let r = curve
                .value_at(&m)
                .ok_or_else(|| Error::InvalidScenario(format!("M = {m} outside the curve")))?;
            Ok(PointDiff {
                memory: to_f64(&m),
                memory_ref: m_ref,
                load: to_f64(&r),
                load_ref: r_ref,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SeriesDiff {
        series,
        points,
        relative: false,
        tolerance: FIG2_TOLERANCE,
    })
}

fn fig3_kind(series: &ReferenceSeries) -> Result<CurveKind> {
    Ok(match (series.curve, series.panel) {
        ("ji", Panel::Worst) => CurveKind::JiWorst,
        ("ji", Panel::Average) => CurveKind::JiAverage,
        ("proposed", Panel::Worst) => CurveKind::ProposedWorst,
        ("proposed", Panel::Average) => CurveKind::ProposedAverage,
        (other, _) => return Err(Error::Parse(format!("unknown series {other:?}"))),
    })
}

fn fig3_series(series: &'static ReferenceSeries, base: &[(CurveKind, Vec<Rational>)]) -> Result<SeriesDiff> {
    let kind = fig3_kind(series)?;
    let a = series
        .a
        .ok_or_else(|| Error::Parse("inactivity series without a".into()))?;
    let loads = &base.iter().find(|(k, _)| *k == kind).expect("base curve computed").1;
    let points = series
        .points
        .iter()
        .enumerate()
        .map(|(j, &(m_ref, r_ref))| {
            let t = FIG3_T_MIN + j;
            let cfg = RobustConfig::new(FIG3_FILES, FIG3_USERS, t, a, fig3_p())?;
            let factor = cfg.factor();
            Ok(PointDiff {
                memory: to_f64(&cfg.memory()),
                memory_ref: m_ref,
                load: to_f64(&(&loads[j] * factor)),
                load_ref: r_ref,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SeriesDiff {
        series,
        points,
        relative: true,
        tolerance: FIG3_REL_TOLERANCE,
    })
}

#[derive(Clone, Debug)]
pub struct OutageCheck {
    pub a: usize,
    pub computed: f64,
    pub legend: f64,
}

impl OutageCheck {
    /// Agreement to two significant figures.
    pub fn pass(&self) -> bool {
        format!("{:.1e}", self.computed) == format!("{:.1e}", self.legend)
    }
}

#[derive(Clone, Debug)]
pub struct MonteCarloCheck {
    pub users: usize,
    pub p: f64,
    pub a: usize,
    pub trials: u64,
    pub estimate: f64,
    pub analytic: f64,
    pub sigma: f64,
}

impl MonteCarloCheck {
    pub fn pass(&self) -> bool {
        (self.estimate - self.analytic).abs() <= 3.0 * self.sigma
    }
}

#[derive(Clone, Debug, Default)]
pub struct ReproReport {
    pub series: Vec<SeriesDiff>,
    pub outages: Vec<OutageCheck>,
    pub monte_carlo: Option<MonteCarloCheck>,
}

impl ReproReport {
    pub fn pass(&self) -> bool {
        self.series.iter().all(SeriesDiff::pass)
            && self.outages.iter().all(OutageCheck::pass)
            && self.monte_carlo.as_ref().is_none_or(MonteCarloCheck::pass)
    }

    pub fn series_for(&self, panel: Panel) -> impl Iterator<Item = &SeriesDiff> {
        self.series.iter().filter(move |s| s.series.panel == panel)
    }

    pub const POINTS_HEADER: &'static str = "series,M,M_ref,R,R_ref,abs_dev";

    /// One CSV row per plotted point.
    pub fn point_rows(&self) -> Vec<String> {
        let mut rows = Vec::new();
        for s in &self.series {
            for p in &s.points {
                rows.push(format!(
                    "{},{},{},{},{},{}",
                    s.name(),
                    fmt_float(p.memory),
                    fmt_float(p.memory_ref),
                    fmt_float(p.load),
                    fmt_float(p.load_ref),
                    fmt_float(p.abs_dev())
                ));
            }
        }
        rows
    }

    /// Human-readable per-series summary.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .series
            .iter()
            .map(|s| {
                format!(
                    "{} {}: max abs dev {}, max rel dev {} (tolerance {} {})",
                    if s.pass() { "PASS" } else { "FAIL" },
                    s.name(),
                    fmt_float(s.max_abs()),
                    fmt_float(s.max_rel()),
                    if s.relative { "rel" } else { "abs" },
                    fmt_float(s.tolerance)
                )
            })
            .collect();
        for o in &self.outages {
            lines.push(format!(
                "{} outage a={}: {:.1e} vs legend {:.1e}",
                if o.pass() { "PASS" } else { "FAIL" },
                o.a,
                o.computed,
                o.legend
            ));
        }
        if let Some(mc) = &self.monte_carlo {
            lines.push(format!(
                "{} monte carlo K={} p={} a={} trials={}: {} vs analytic {} (3 sigma = {})",
                if mc.pass() { "PASS" } else { "FAIL" },
                mc.users,
                mc.p,
                mc.a,
                mc.trials,
                fmt_float(mc.estimate),
                fmt_float(mc.analytic),
                fmt_float(3.0 * mc.sigma)
            ));
        }
        lines
    }
}

pub fn repro_fig2() -> Result<ReproReport> {
    let series: Vec<&'static ReferenceSeries> = reference::series(Figure::Fig2).collect();
    let series = series.into_par_iter().map(fig2_series).collect::<Result<Vec<_>>>()?;
    Ok(ReproReport {
        series,
        ..Default::default()
    })
}

pub const MC_USERS: usize = 20;
pub const MC_P: f64 = 0.3;
pub const MC_A: usize = 9;
pub const MC_TRIALS: u64 = 100_000;

/// Base loads per `t` for each scheme, then scaled per `a`.
pub fn repro_fig3(seed: u64) -> Result<ReproReport> {
    let kinds = [
        CurveKind::JiWorst,
        CurveKind::JiAverage,
        CurveKind::ProposedWorst,
        CurveKind::ProposedAverage,
    ];
    let count = reference::series(Figure::Fig3)
        .map(|s| s.points.len())
        .max()
        .unwrap_or(0);
    let base: Vec<(CurveKind, Vec<Rational>)> = kinds
        .into_par_iter()
        .map(|kind| {
            let loads = (0..count)
                .into_par_iter()
                .map(|j| kind.corner(FIG3_FILES, FIG3_USERS, FIG3_T_MIN + j))
                .collect();
            (kind, loads)
        })
        .collect();
    let series = reference::series(Figure::Fig3)
        .map(|s| fig3_series(s, &base))
        .collect::<Result<Vec<_>>>()?;
    let outages = FIG3_OUTAGES
        .iter()
        .map(|&(a, legend)| OutageCheck {
            a,
            computed: to_f64(&outage_probability_exact(FIG3_USERS, &fig3_p(), a)),
            legend,
        })
        .collect();
    let mc = monte_carlo_outage(MC_USERS, MC_P, MC_A, MC_TRIALS, seed)?;
    let analytic = crate::inactivity::outage_probability(MC_USERS, MC_P, MC_A);
    let monte_carlo = Some(MonteCarloCheck {
        users: MC_USERS,
        p: MC_P,
        a: MC_A,
        trials: MC_TRIALS,
        estimate: mc.estimate,
        analytic,
        sigma: (analytic * (1.0 - analytic) / MC_TRIALS as f64).sqrt(),
    });
    Ok(ReproReport {
        series,
        outages,
        monte_carlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_worst_panel_matches() {
        let report = repro_fig2().unwrap();
        for s in report.series_for(Panel::Worst) {
            assert!(s.pass(), "{} deviates by {}", s.name(), s.max_abs());
        }
        assert_eq!(fig2_memory(3), rational(2, 1));
    }

    #[test]
    fn outage_legend() {
        let report = repro_fig3(1).unwrap();
        assert!(report.outages.iter().all(OutageCheck::pass));
        assert!(report.monte_carlo.as_ref().unwrap().pass());
        for s in report.series_for(Panel::Worst) {
            assert!(s.pass(), "{} deviates by {}", s.name(), s.max_rel());
        }
    }
}
