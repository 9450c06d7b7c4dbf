//! Figure tables computed from stored sample sets.
//!
//! Every table is plain CSV preceded by `#` comment lines carrying the
//! configuration hash and code version, so a table can be traced back to
//! the run that produced it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{AnalysisConfig, BellConfig, ConditionalPdtConfig, GaussianConfig, NonclassicalityConfig};
use crate::cv::{simon_certifier, squeezing_db, threshold_shift, ThresholdOutcome};
use crate::dv::{chsh_max_over_xi, chsh_parameter, DvExperiment, DvSource};
use crate::error::{Error, Result};
use crate::nonclassicality::{first_nonnegative_crossing, selection_scan, SqueezedCoherentState};
use crate::statistics::{
    coherence_radius_with_error, conditional_pdt, exceedance, marginal_pdt, ChannelMoments, SampleSet,
};

/// One output table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    /// Extra `key=value` comment lines.
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of a numeric column; non-numeric cells become NaN.
    pub fn numeric_column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].parse().unwrap_or(f64::NAN)).collect())
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# table={}", self.name);
        let _ = writeln!(out, "# config_hash={config_hash}");
        let _ = writeln!(out, "# code_version={}", crate::VERSION);
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn write(&self, dir: &Path, config_hash: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        fs::write(&path, self.to_csv(config_hash))?;
        Ok(path)
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn radius_of(set: &SampleSet) -> f64 {
    set.meta().aperture_radius.unwrap_or(f64::NAN)
}

/// Sample set recorded behind the aperture `radius`; the first set when no
/// radius is requested.
pub fn select_set(sets: &[SampleSet], radius: Option<f64>) -> Result<&SampleSet> {
    match radius {
        None => sets.first().ok_or_else(|| Error::Config("no sample sets to analyse".into())),
        Some(r) => sets
            .iter()
            .find(|s| (radius_of(s) - r).abs() <= 1e-9 * r.abs().max(1e-3))
            .ok_or_else(|| Error::Config(format!("no sample set was recorded with aperture radius {r} m"))),
    }
}

fn sets_for<'a>(sets: &'a [SampleSet], radius: Option<f64>) -> Result<Vec<&'a SampleSet>> {
    match radius {
        None => Ok(sets.iter().collect()),
        Some(_) => Ok(vec![select_set(sets, radius)?]),
    }
}

/// Channel moments and Pearson correlation at every shift and aperture.
pub fn moments_table(sets: &[SampleSet]) -> Result<Table> {
    let mut t = Table::new(
        "moments",
        &[
            "aperture_m", "shift_m", "count", "mean0", "mean_s", "cross", "m2", "var", "pearson",
            "pearson_flagged", "se_mean0", "se_mean_s", "se_cross", "se_m2", "se_pearson",
        ],
    );
    for set in sets {
        for r in ChannelMoments::from_samples(set)?.rows {
            t.push(vec![
                num(radius_of(set)),
                num(r.shift),
                r.count.to_string(),
                num(r.mean0),
                num(r.mean_s),
                num(r.cross),
                num(r.m2),
                num(r.var),
                num(r.pearson),
                r.pearson_flagged.to_string(),
                num(r.se_mean0),
                num(r.se_mean_s),
                num(r.se_cross),
                num(r.se_m2),
                num(r.se_pearson),
            ]);
        }
    }
    Ok(t)
}

/// Conditional transmittance distributions next to the marginal ones.
pub fn conditional_pdt_table(sets: &[SampleSet], cfg: &ConditionalPdtConfig, bins: usize) -> Result<Table> {
    let mut t = Table::new(
        "fig2_conditional_pdt",
        &["aperture_m", "shift_m", "eta_min", "bin_lo", "bin_hi", "density", "marginal_density"],
    );
    for set in sets_for(sets, cfg.aperture_radius)? {
        let r = radius_of(set);
        for &eta_min in &cfg.eta_min {
            let e = exceedance(set, eta_min)?;
            t.notes.push(format!(
                "exceedance aperture_m={r} eta_min={eta_min} value={} stderr={} survivors={}",
                e.value, e.stderr, e.survivors
            ));
            for &s in set.shifts() {
                let marginal = marginal_pdt(set, s, bins)?;
                let cond = match conditional_pdt(set, eta_min, s, bins) {
                    Ok(h) => h,
                    Err(Error::EmptySelection { .. }) => {
                        log::warn!("no records exceed eta_min={eta_min} at aperture {r} m");
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                for b in 0..bins {
                    t.push(vec![
                        num(r),
                        num(s),
                        num(eta_min),
                        num(cond.edges[b]),
                        num(cond.edges[b + 1]),
                        num(cond.density[b]),
                        num(marginal.density[b]),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

/// Pearson curves and the coherence radius per aperture.
pub fn coherence_tables(sets: &[SampleSet]) -> Result<(Table, Table)> {
    let mut curve = Table::new("fig3_pearson", &["aperture_m", "shift_m", "pearson", "se_pearson"]);
    let mut radius = Table::new("fig3_coherence", &["aperture_m", "rho0_m", "lower_m", "upper_m", "note"]);
    for set in sets {
        let r = radius_of(set);
        let m = ChannelMoments::from_samples(set)?;
        for row in &m.rows {
            curve.push(vec![num(r), num(row.shift), num(row.pearson), num(row.se_pearson)]);
        }
        match coherence_radius_with_error(&m) {
            Ok(c) => radius.push(vec![num(r), num(c.rho0), opt(c.lower), opt(c.upper), String::new()]),
            Err(Error::OutOfRange { min_value }) => radius.push(vec![
                num(r),
                String::new(),
                String::new(),
                String::new(),
                format!("no crossing in range, min pearson {min_value}"),
            ]),
            Err(e) => return Err(e),
        }
    }
    Ok((curve, radius))
}

/// Simon certifier against shift for each squeezing, and threshold shifts.
pub fn gaussian_tables(sets: &[SampleSet], cfg: &GaussianConfig) -> Result<(Table, Table)> {
    let set = select_set(sets, cfg.aperture_radius)?;
    let m = ChannelMoments::from_samples(set)?;
    let mut w = Table::new(
        "fig4_gaussian",
        &["xi", "squeezing_db", "s", "W", "bracket1", "bracket2"],
    );
    let mut th = Table::new(
        "fig4_thresholds",
        &["xi", "squeezing_db", "outcome", "s_th_m", "cell_lo_m", "cell_hi_m", "extreme_w"],
    );
    w.notes.push(format!("aperture_m={}", radius_of(set)));
    for &xi in &cfg.xi {
        for row in &m.rows {
            let v = simon_certifier(row, xi, &cfg.losses)?;
            w.push(vec![num(xi), num(squeezing_db(xi)), num(row.shift), num(v.w), num(v.bracket1), num(v.bracket2)]);
        }
        let (kind, s, lo, hi, extreme) = match threshold_shift(&m, xi, &cfg.losses)? {
            ThresholdOutcome::Crossing { s_th, cell } => ("crossing", Some(s_th), Some(cell.0), Some(cell.1), None),
            ThresholdOutcome::EntangledThroughout { max_w } => ("entangled_throughout", None, None, None, Some(max_w)),
            ThresholdOutcome::NeverEntangled { min_w } => ("never_entangled", None, None, None, Some(min_w)),
            ThresholdOutcome::Degenerate => ("degenerate", None, None, None, None),
        };
        th.push(vec![num(xi), num(squeezing_db(xi)), kind.into(), opt(s), opt(lo), opt(hi), opt(extreme)]);
    }
    Ok((w, th))
}

/// CHSH parameter against shift for every memory decay rate and wind speed.
pub fn bell_table(sets: &[SampleSet], cfg: &BellConfig) -> Result<Table> {
    let set = select_set(sets, cfg.aperture_radius)?;
    let mut t = Table::new(
        "fig5_bell",
        &["source", "decay_db_per_ms", "wind_m_per_s", "tau_ms", "shift_m", "b", "stderr", "xi_star", "at_grid_edge"],
    );
    t.notes.push(format!("aperture_m={}", radius_of(set)));
    for &decay in &cfg.memory_decay_db_per_ms {
        for &v in &cfg.wind_speeds {
            let template = DvExperiment {
                source: DvSource::Bell,
                angles: cfg.angles,
                noise_mean: cfg.noise_mean,
                deterministic_db: cfg.deterministic_db,
                splitter_db: cfg.splitter_db,
                memory_decay_db_per_ms: decay,
                stored_arm: cfg.stored_arm,
                wind_v: v,
                fock_cutoff: None,
            };
            template.validate()?;
            for &s in set.shifts() {
                let tau_ms = 1e3 * s / v;
                let common = |source: &str| vec![source.to_string(), num(decay), num(v), num(tau_ms), num(s)];
                if cfg.include_bell_source {
                    let e = chsh_parameter(&template, set, s)?;
                    let mut row = common("bell");
                    row.extend([num(e.b), num(e.stderr), String::new(), String::new()]);
                    t.push(row);
                }
                if !cfg.xi_grid.is_empty() {
                    let m = chsh_max_over_xi(&template, set, s, &cfg.xi_grid)?;
                    let mut row = common("pdc");
                    row.extend([num(m.b_max), num(m.stderr), num(m.xi_star), m.at_grid_edge.to_string()]);
                    t.push(row);
                }
            }
        }
    }
    Ok(t)
}

/// Nonclassicality of the post-selected squeezed light, and the shifts
/// where each indicator is lost.
pub fn nonclassicality_tables(sets: &[SampleSet], cfg: &NonclassicalityConfig) -> Result<(Table, Table)> {
    let set = select_set(sets, cfg.aperture_radius)?;
    let state = SqueezedCoherentState::new(cfg.alpha0, cfg.xi)?;
    let t_det = crate::cv::db_to_transmittance(cfg.deterministic_db);
    let shifts = set.shifts().to_vec();
    let rows = selection_scan(&state, set, cfg.eta_min, &shifts, &cfg.detectors, t_det, &cfg.scan)?;

    let mut t = Table::new(
        "fig6_nonclassicality",
        &[
            "n_detectors", "shift_m", "survivors", "mandel_q", "mandel_q_lo", "mandel_q_hi", "binomial_q",
            "binomial_q_lo", "binomial_q_hi", "violation", "violation_lo", "violation_hi", "moment_criterion",
        ],
    );
    t.notes.push(format!(
        "aperture_m={} alpha0={} xi={} eta_min={} deterministic_db={}",
        radius_of(set),
        cfg.alpha0,
        cfg.xi,
        cfg.eta_min,
        cfg.deterministic_db
    ));
    for r in &rows {
        t.push(vec![
            r.n_detectors.to_string(),
            num(r.shift),
            r.survivors.to_string(),
            num(r.mandel_q.value),
            num(r.mandel_q.lower),
            num(r.mandel_q.upper),
            num(r.binomial_q.value),
            num(r.binomial_q.lower),
            num(r.binomial_q.upper),
            num(r.violation.value),
            num(r.violation.lower),
            num(r.violation.upper),
            num(r.moment_criterion),
        ]);
    }

    let mut th = Table::new(
        "fig6_thresholds",
        &["n_detectors", "mandel_q_m", "binomial_q_m", "witness_m", "moment_criterion_m"],
    );
    for &n in &cfg.detectors {
        let sel: Vec<_> = rows.iter().filter(|r| r.n_detectors == n).collect();
        let s: Vec<f64> = sel.iter().map(|r| r.shift).collect();
        let series = |f: &dyn Fn(&&crate::nonclassicality::ScanRow) -> f64| -> Vec<f64> { sel.iter().map(f).collect() };
        th.push(vec![
            n.to_string(),
            opt(first_nonnegative_crossing(&s, &series(&|r| r.mandel_q.value))),
            opt(first_nonnegative_crossing(&s, &series(&|r| r.binomial_q.value))),
            opt(first_nonnegative_crossing(&s, &series(&|r| -r.violation.value))),
            opt(first_nonnegative_crossing(&s, &series(&|r| r.moment_criterion))),
        ]);
    }
    Ok((t, th))
}

/// Every table requested by `cfg`.
pub fn run_analysis(sets: &[SampleSet], cfg: &AnalysisConfig) -> Result<Vec<Table>> {
    if sets.is_empty() {
        return Err(Error::Config("no sample sets to analyse".into()));
    }
    let mut out = vec![moments_table(sets)?];
    let (curve, radius) = coherence_tables(sets)?;
    out.extend([curve, radius]);
    if let Some(c) = &cfg.conditional_pdt {
        out.push(conditional_pdt_table(sets, c, cfg.histogram_bins)?);
    }
    if let Some(c) = &cfg.gaussian {
        let (a, b) = gaussian_tables(sets, c)?;
        out.extend([a, b]);
    }
    if let Some(c) = &cfg.bell {
        out.push(bell_table(sets, c)?);
    }
    if let Some(c) = &cfg.nonclassicality {
        let (a, b) = nonclassicality_tables(sets, c)?;
        out.extend([a, b]);
    }
    Ok(out)
}
