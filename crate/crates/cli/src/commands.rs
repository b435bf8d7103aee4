//! The data-producing subcommands.

use anyhow::{Context as _, Result};
use ptlab_core::analysis::{
    averaged_shape, compare, correspondence_study, epsilon_for_count, EnergySelector, StudyOptions,
};
use ptlab_core::classical::{forbidden_mask, ActionGrid};
use ptlab_core::gbwpe::{
    choose_a, default_imag_tol, evaluate_series, find_pt_region, PtRegion, SeriesConfig, SeriesResult,
};
use ptlab_core::models::{HamiltonianPair, Model, ModelRegistry};
use ptlab_core::spectral::{diagonalize, energies, load_cache, save_cache, select_state, EigenSolution};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::failure::ConfigError;
use crate::output::{float, ModelHash, OutputDir};

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub registry: ModelRegistry,
    pub out: OutputDir,
}

impl Context<'_> {
    fn model(&self) -> Result<&dyn Model> {
        self.registry.get(&self.cfg.model.name).map_err(|e| ConfigError(format!("model.name: {e}")).into())
    }

    fn build(&mut self, lambda: f64) -> Result<HamiltonianPair> {
        let spec = self.cfg.model_spec(lambda);
        let pair = self
            .registry
            .build(&spec)
            .with_context(|| format!("building {} size {} at lambda {lambda}", spec.model, spec.size))?;
        self.out.models.push(ModelHash {
            model: spec.model.clone(),
            size: spec.size,
            lambda,
            dim: pair.dim(),
            sha256: hex::encode(pair.content_hash()),
        });
        Ok(pair)
    }

    /// Full eigensolution, through the on-disk cache when enabled.
    fn eigen(&mut self, pair: &HamiltonianPair) -> Result<EigenSolution> {
        if !self.cfg.cache {
            return Ok(diagonalize(pair)?);
        }
        let hash = pair.content_hash();
        let dir = self.out.path("cache");
        std::fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.eig", hex::encode(hash)));
        if path.exists() {
            if let Some(sol) = load_cache(&path, &hash)? {
                log::info!("eigensolution from {}", path.display());
                return Ok(sol);
            }
        }
        let sol = diagonalize(pair)?;
        save_cache(&path, &hash, &sol)?;
        Ok(sol)
    }

    fn labels(&self, pair: &HamiltonianPair) -> Result<Vec<[u32; 2]>> {
        let model = self.model()?;
        Ok(pair.basis.iter().map(|b| model.cell_label(b)).collect())
    }
}

/// State indices picked by the `states` section.
pub fn select_states(cfg: &RunConfig, energies: &[f64]) -> Result<Vec<usize>> {
    let n = energies.len();
    let s = &cfg.states;
    if let Some(t) = s.target {
        return Ok(vec![select_state(energies, t)]);
    }
    if let Some(i) = s.index {
        if i >= n {
            return Err(ConfigError(format!("states.index: {i} out of range for dimension {n}")).into());
        }
        return Ok(vec![i]);
    }
    if let Some([a, b]) = s.range {
        if b > n {
            return Err(ConfigError(format!("states.range: end {b} beyond dimension {n}")).into());
        }
        return Ok((a..b).collect());
    }
    Ok(vec![n / 2])
}

/// A single-state selector; `None` for a range or the default.
fn selector(cfg: &RunConfig) -> Option<EnergySelector> {
    match (cfg.states.target, cfg.states.index) {
        (Some(t), _) => Some(EnergySelector::Target(t)),
        (_, Some(i)) => Some(EnergySelector::Index(i)),
        _ => None,
    }
}

fn study_options(cfg: &RunConfig) -> StudyOptions {
    StudyOptions {
        search: ptlab_core::gbwpe::PtSearchOptions { compute_spectrum: false, ..cfg.search_options() },
        theta: cfg.theta(),
        eta: cfg.grid.eta,
    }
}

pub fn spectrum(ctx: &mut Context) -> Result<()> {
    let mut energy_rows = Vec::new();
    let mut component_rows = Vec::new();
    let mut shape_rows = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let pair = ctx.build(lambda)?;
        let sol = ctx.eigen(&pair).with_context(|| format!("diagonalizing at lambda {lambda}"))?;
        let labels = ctx.labels(&pair)?;
        for (a, e) in sol.energies.iter().enumerate() {
            energy_rows.push(vec![float(lambda), a.to_string(), float(*e)]);
        }
        for alpha in select_states(ctx.cfg, &sol.energies)? {
            let eps = match (ctx.cfg.shape.count, ctx.cfg.shape.epsilon) {
                (Some(c), _) => {
                    epsilon_for_count(&sol.energies, alpha, c).map_err(|e| ConfigError(format!("shape.count: {e}")))?
                }
                (_, Some(e)) => e,
                _ => unreachable!("validated"),
            };
            let shape = averaged_shape(&sol, alpha, eps).with_context(|| format!("shape of state {alpha}"))?;
            for (k, l) in labels.iter().enumerate() {
                let c = sol.component(alpha, k);
                let row = vec![float(lambda), alpha.to_string(), k.to_string(), l[0].to_string(), l[1].to_string()];
                component_rows.push([row.clone(), vec![float(c), float(c * c)]].concat());
                shape_rows.push([row, vec![float(eps), shape.count.to_string(), float(shape.values[k])]].concat());
            }
        }
    }
    ctx.out.csv("energies.csv", &["lambda", "alpha", "energy"], &energy_rows)?;
    ctx.out.csv(
        "components.csv",
        &["lambda", "alpha", "k", "m1", "m2", "component", "probability"],
        &component_rows,
    )?;
    ctx.out.csv("shape.csv", &["lambda", "alpha", "k", "m1", "m2", "epsilon", "count", "shape"], &shape_rows)
}

/// PT region, shift and series of one state.
struct Solved {
    alpha: usize,
    region: PtRegion,
    a: Option<f64>,
    series: Option<SeriesResult>,
}

fn solve_state(cfg: &RunConfig, pair: &HamiltonianPair, sol: &EigenSolution, alpha: usize) -> Result<Solved> {
    let region = find_pt_region(pair, &sol.energies, alpha, &cfg.search_options())?;
    let a = match &region.spectrum {
        Some(spec) => Some(choose_a(spec, cfg.tolerances.imag_tol.unwrap_or_else(|| default_imag_tol(spec)))?),
        None => None,
    };
    let series = match a {
        Some(a) => {
            let sc = SeriesConfig {
                a,
                n_max: cfg.tolerances.n_max,
                tol: cfg.tolerances.series_tol,
                degeneracy_guard: cfg.tolerances.degeneracy_guard,
            };
            Some(evaluate_series(pair, sol, alpha, &region.partition, &sc)?)
        }
        None => None,
    };
    Ok(Solved { alpha, region, a, series })
}

fn solve_states(cfg: &RunConfig, pair: &HamiltonianPair, sol: &EigenSolution, states: &[usize]) -> Result<Vec<Solved>> {
    states
        .par_iter()
        .map(|&alpha| solve_state(cfg, pair, sol, alpha).with_context(|| format!("state {alpha}")))
        .collect()
}

#[derive(Serialize)]
struct PtRecord {
    lambda: f64,
    alpha: usize,
    e_alpha: f64,
    verdict: &'static str,
    s_size: usize,
    s_bar: Vec<usize>,
    s_bar_labels: Vec<[u32; 2]>,
    /// `[re, im]` pairs of the spectrum of `W_S`.
    eigenvalues: Option<Vec<[f64; 2]>>,
    a: Option<f64>,
    stats: ptlab_core::gbwpe::SearchStats,
}

fn opt(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn pt(ctx: &mut Context) -> Result<()> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let pair = ctx.build(lambda)?;
        let sol = ctx.eigen(&pair).with_context(|| format!("diagonalizing at lambda {lambda}"))?;
        let labels = ctx.labels(&pair)?;
        let states = select_states(ctx.cfg, &sol.energies)?;
        let cfg = ctx.cfg;
        let solved = ctx
            .out
            .timed("pt", || solve_states(cfg, &pair, &sol, &states))
            .with_context(|| format!("lambda {lambda}"))?;
        for s in solved {
            let spec = s.region.spectrum.as_ref();
            let st = &s.region.stats;
            rows.push(vec![
                float(lambda),
                s.alpha.to_string(),
                float(sol.energies[s.alpha]),
                s.region.partition.s.len().to_string(),
                s.region.partition.s_bar.len().to_string(),
                s.region.verdict.as_str().to_string(),
                opt(spec.map(|w| w.re_max)),
                opt(spec.map(|w| w.re_min)),
                opt(spec.map(|w| w.max_abs())),
                opt(spec.map(|w| w.trace_sum)),
                opt(s.a),
                opt(s.series.as_ref().map(|r| r.reconstruction_error)),
                s.series.as_ref().map(|r| r.terms_used.to_string()).unwrap_or_default(),
                st.removal_order_len.to_string(),
                st.removed.to_string(),
                st.readded.to_string(),
                st.checks.to_string(),
            ]);
            records.push(PtRecord {
                lambda,
                alpha: s.alpha,
                e_alpha: sol.energies[s.alpha],
                verdict: s.region.verdict.as_str(),
                s_size: s.region.partition.s.len(),
                s_bar_labels: s.region.partition.s_bar.iter().map(|&k| labels[k]).collect(),
                s_bar: s.region.partition.s_bar.clone(),
                eigenvalues: spec.map(|w| w.eigenvalues.iter().map(|z| [z.re, z.im]).collect()),
                a: s.a,
                stats: s.region.stats.clone(),
            });
        }
    }
    ctx.out.csv(
        "pt.csv",
        &[
            "lambda",
            "alpha",
            "e_alpha",
            "s_size",
            "s_bar_size",
            "verdict",
            "re_max",
            "re_min",
            "abs_max",
            "trace_sum",
            "a",
            "series_error",
            "series_terms",
            "removal_order_len",
            "removed",
            "readded",
            "checks",
        ],
        &rows,
    )?;
    ctx.out.json("pt.json", &records)
}

pub fn series(ctx: &mut Context) -> Result<()> {
    let mut rows = Vec::new();
    let mut history = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let pair = ctx.build(lambda)?;
        let sol = ctx.eigen(&pair).with_context(|| format!("diagonalizing at lambda {lambda}"))?;
        let states = select_states(ctx.cfg, &sol.energies)?;
        let cfg = ctx.cfg;
        let solved = ctx
            .out
            .timed("series", || solve_states(cfg, &pair, &sol, &states))
            .with_context(|| format!("lambda {lambda}"))?;
        for s in solved {
            let Some(r) = s.series else {
                return Err(ConfigError("search.compute_spectrum: the series needs the W spectrum".into()).into());
            };
            rows.push(vec![
                float(lambda),
                s.alpha.to_string(),
                opt(s.a),
                s.region.partition.s.len().to_string(),
                r.terms_used.to_string(),
                float(r.reconstruction_error),
                r.converged.to_string(),
                r.diverged.to_string(),
            ]);
            for (n, t) in r.residual_history.iter().enumerate() {
                history.push(vec![float(lambda), s.alpha.to_string(), (n + 1).to_string(), float(*t)]);
            }
        }
    }
    ctx.out.csv(
        "series.csv",
        &["lambda", "alpha", "a", "s_size", "terms", "reconstruction_error", "converged", "diverged"],
        &rows,
    )?;
    ctx.out.csv("series_history.csv", &["lambda", "alpha", "n", "term_norm"], &history)
}

pub fn classical(ctx: &mut Context) -> Result<()> {
    let mut rows = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let spec = ctx.cfg.model_spec(lambda);
        let pair = ctx.build(lambda)?;
        let e = energies(&pair).with_context(|| format!("energies at lambda {lambda}"))?;
        let model = ctx.model()?;
        let classical = model.classical(&spec)?;
        let grid = ActionGrid::quantum_matched(model, &spec)?;
        let theta = ctx.cfg.theta();
        for alpha in select_states(ctx.cfg, &e)? {
            let mask = forbidden_mask(classical.as_ref(), e[alpha], &grid, &theta, ctx.cfg.grid.eta);
            for c in &mask.cells {
                rows.push(vec![
                    float(lambda),
                    alpha.to_string(),
                    float(e[alpha]),
                    c.label[0].to_string(),
                    c.label[1].to_string(),
                    float(c.actions[0]),
                    float(c.actions[1]),
                    float(c.hmin),
                    float(c.hmax),
                    c.forbidden.to_string(),
                ]);
            }
        }
    }
    ctx.out.csv("mask.csv", &["lambda", "alpha", "energy", "m1", "m2", "I1", "I2", "Hmin", "Hmax", "forbidden"], &rows)
}

pub fn compare_cmd(ctx: &mut Context) -> Result<()> {
    let opts = study_options(ctx.cfg);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let spec = ctx.cfg.model_spec(lambda);
        let selectors: Vec<EnergySelector> = match selector(ctx.cfg) {
            Some(s) => vec![s],
            None => {
                let pair = ctx.build(lambda)?;
                let e = energies(&pair)?;
                select_states(ctx.cfg, &e)?.into_iter().map(EnergySelector::Index).collect()
            }
        };
        let registry = &ctx.registry;
        let done = selectors
            .par_iter()
            .map(|sel| compare(registry, &spec, *sel, &opts).with_context(|| format!("lambda {lambda}, {sel:?}")))
            .collect::<Result<Vec<_>>>()?;
        for c in done {
            let r = &c.row;
            rows.push(vec![
                float(lambda),
                r.alpha.to_string(),
                float(r.e_alpha),
                r.pt_size.to_string(),
                r.forbidden_count.to_string(),
                float(r.distance),
                float(r.distance_normalized),
                float(r.distance_cells),
            ]);
            let mut on_pt = vec![false; c.pt_mask.len()];
            let mut on_cl = vec![false; c.pt_mask.len()];
            for &i in &c.pt_border.cells {
                on_pt[i] = true;
            }
            for &i in &c.classical_border.cells {
                on_cl[i] = true;
            }
            for (i, m) in c.mask.cells.iter().enumerate() {
                cells.push(vec![
                    float(lambda),
                    r.alpha.to_string(),
                    m.label[0].to_string(),
                    m.label[1].to_string(),
                    float(m.actions[0]),
                    float(m.actions[1]),
                    c.pt_mask[i].to_string(),
                    m.forbidden.to_string(),
                    on_pt[i].to_string(),
                    on_cl[i].to_string(),
                ]);
            }
        }
    }
    ctx.out.csv(
        "compare.csv",
        &[
            "lambda",
            "alpha",
            "e_alpha",
            "pt_size",
            "forbidden_count",
            "distance",
            "distance_normalized",
            "distance_cells",
        ],
        &rows,
    )?;
    ctx.out.csv(
        "cells.csv",
        &["lambda", "alpha", "m1", "m2", "I1", "I2", "pt", "forbidden", "pt_border", "classical_border"],
        &cells,
    )
}

pub fn study(ctx: &mut Context) -> Result<()> {
    let sel = selector(ctx.cfg).ok_or_else(|| ConfigError("states: study needs target or index".into()))?;
    let sizes = ctx.cfg.study.sizes.clone().unwrap_or_else(|| vec![ctx.cfg.model.size]);
    let opts = study_options(ctx.cfg);
    let mut rows = Vec::new();
    for lambda in ctx.cfg.lambda.values() {
        let template = ctx.cfg.model_spec(lambda);
        let registry = &ctx.registry;
        let table = ctx
            .out
            .timed("study", || Ok(correspondence_study(registry, &template, &sizes, sel, &opts)?))
            .with_context(|| format!("lambda {lambda}"))?;
        for r in table {
            rows.push(vec![
                float(lambda),
                r.size.to_string(),
                float(r.hbar_eff),
                r.alpha.to_string(),
                float(r.e_alpha),
                r.pt_size.to_string(),
                r.forbidden_count.to_string(),
                float(r.distance),
                float(r.distance_normalized),
                float(r.distance_cells),
            ]);
        }
    }
    ctx.out.csv(
        "study.csv",
        &[
            "lambda",
            "size",
            "hbar_eff",
            "alpha",
            "e_alpha",
            "pt_size",
            "forbidden_count",
            "distance",
            "distance_normalized",
            "distance_cells",
        ],
        &rows,
    )
}
