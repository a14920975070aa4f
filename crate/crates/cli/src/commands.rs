//! One function per subcommand. Each returns the tables to write and the
//! number of excluded samples per experiment.

use std::collections::BTreeMap;

use wegner_core::experiments::{
    combes_thomas_scan, dirichlet_monotonicity, eigenvalue_proximity, ids_estimate, lifshitz_probe,
    lipschitz_modulus, msa_schedule, regularity_survey, wegner_experiment, BracketRule, MsaParams, Runner,
};
use wegner_core::geometry::{factorize_domain, mc_volume, ShearedUnion};
use wegner_core::lattice::{Site, SiteSet};
use wegner_core::model::{
    assemble_free, assemble_hamiltonian, assemble_potential, sample_disorder, sample_rng, ModelConfig,
};
use wegner_core::spectral::{bs_equivalence_check, birman_schwinger, eigenvalues, spectral_averaging_check, EnergyInterval};
use wegner_core::toeplitz::{build_system, column_sum_norm, nu_trend, symbol_sweep, system_for_config};
use wegner_core::{LabError, Result};

use crate::config::RunConfig;
use crate::plot::{emit_plot_data, PlotSource};
use crate::report::{cell, num, Table};

pub const SUBCOMMANDS: [&str; 11] = [
    "spectrum",
    "wegner",
    "ids",
    "proximity",
    "combes-thomas",
    "averaging",
    "toeplitz-check",
    "volume",
    "birman-schwinger",
    "msa",
    "lifshitz",
];

/// Sample count used when neither `--samples` nor `run.samples` is given.
pub fn default_samples(subcommand: &str) -> usize {
    match subcommand {
        "spectrum" => 1,
        "wegner" | "ids" | "proximity" => 100,
        "averaging" => 5,
        "birman-schwinger" => 20,
        "lifshitz" => 200,
        "msa" => 20,
        _ => 0,
    }
}

pub struct Context<'a> {
    pub config: &'a RunConfig,
    pub seed: u64,
    pub samples: usize,
    pub runner: &'a Runner,
}

#[derive(Default)]
pub struct Outputs {
    /// `(file name, table)` in write order.
    pub tables: Vec<(String, Table)>,
    pub excluded: BTreeMap<String, usize>,
}

impl Outputs {
    fn add(&mut self, name: &str, table: Table) {
        self.tables.push((name.to_string(), table));
    }
}

pub fn dispatch(subcommand: &str, ctx: &Context) -> Result<Outputs> {
    match subcommand {
        "spectrum" => spectrum(ctx),
        "wegner" => wegner(ctx),
        "ids" => ids(ctx),
        "proximity" => proximity(ctx),
        "combes-thomas" => combes_thomas(ctx),
        "averaging" => averaging(ctx),
        "toeplitz-check" => toeplitz_check(ctx),
        "volume" => volume(ctx),
        "birman-schwinger" => bs(ctx),
        "msa" => msa(ctx),
        "lifshitz" => lifshitz(ctx),
        other => Err(LabError::Config(format!(
            "unknown subcommand `{other}`; expected one of {}",
            SUBCOMMANDS.join(", ")
        ))),
    }
}

fn model_comments(t: &mut Table, m: &ModelConfig, seed: u64) {
    t.comment(format!(
        "d = {}, l = {}, r = {}, bc = {}, omega_plus = {}, a* = {}",
        m.d,
        m.l,
        m.r,
        m.bc.as_str(),
        num(m.omega_plus),
        num(m.site.a_star())
    ));
    t.comment(format!("seed = {seed}"));
}

fn spectrum(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let batch = ctx.runner.map_samples(ctx.samples, |i| {
        Ok(eigenvalues(&assemble_hamiltonian(&m, &sample_disorder(&m, ctx.seed, i)?)?))
    })?;
    let mut t = Table::new(&["sample", "k", "eigenvalue"]);
    model_comments(&mut t, &m, ctx.seed);
    t.comment("eigenvalues sorted ascending per sample");
    for (i, values) in &batch.values {
        for (k, v) in values.iter().enumerate() {
            t.push(vec![cell(i), cell(k), num(*v)]);
        }
    }
    let mut out = Outputs::default();
    out.add("spectrum.csv", t);
    out.excluded.insert("spectrum".into(), batch.excluded.len());
    Ok(out)
}

fn wegner(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("wegner");
    let sides = s.usize_list_or("sides", &[8, 16, 24])?;
    let center = s.f64_or("center", 1.0)?;
    let widths = s.f64_list_or("widths", &[0.2, 0.1, 0.05])?;
    let intervals = widths
        .iter()
        .map(|&w| EnergyInterval::centered(center, w))
        .collect::<Result<Vec<_>>>()?;
    let res = wegner_experiment(&m, &intervals, &sides, ctx.samples, ctx.seed, ctx.runner)?;

    let mut t = Table::new(&[
        "l", "e1", "e2", "n", "mean", "stderr", "ratio", "ratio_disorder", "ratio_toeplitz", "excluded",
    ]);
    model_comments(&mut t, &m, ctx.seed);
    t.comment("ratio = mean/(|I| l^d); ratio_disorder = ratio*omega_plus; ratio_toeplitz = ratio*(1-a*)/omega_plus");
    t.comment(format!("ratio spread (max/min) = {}", num(res.ratio_spread())));
    for r in &res.rows {
        t.push(vec![
            cell(r.l),
            num(r.e1),
            num(r.e2),
            cell(r.n),
            num(r.mean),
            num(r.stderr),
            num(r.ratio),
            num(r.ratio_disorder),
            num(r.ratio_toeplitz),
            cell(r.excluded),
        ]);
    }
    let mut fits = Table::new(&["against", "l", "e1", "e2", "slope", "intercept", "r_squared"]);
    fits.comment("least-squares lines of the mean trace against |I| (per l) and against l^d (per interval)");
    for (l, fit) in res.width_fits() {
        if let Some(f) = fit {
            fits.push(vec![cell("width"), cell(l), cell(""), cell(""), num(f.slope), num(f.intercept), num(f.r_squared)]);
        }
    }
    for ((e1, e2), fit) in res.volume_fits() {
        if let Some(f) = fit {
            fits.push(vec![cell("volume"), cell(""), num(e1), num(e2), num(f.slope), num(f.intercept), num(f.r_squared)]);
        }
    }
    let mut out = Outputs::default();
    out.add("wegner.csv", t);
    out.add("wegner_fits.csv", fits);
    out.add("plot_wegner.csv", emit_plot_data(&PlotSource::Wegner(&res), "wegner")?);
    out.excluded.insert("wegner".into(), res.excluded());
    Ok(out)
}

fn energy_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(hi > lo) {
        return Err(LabError::Config("ids grid needs e_max > e_min and at least 2 points".into()));
    }
    Ok((0..points).map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64).collect())
}

fn ids(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("ids");
    let grid = energy_grid(s.f64_or("e_min", -0.5)?, s.f64_or("e_max", 5.0)?, s.usize_or("points", 56)?)?;
    let sides = s.usize_list_or("sides", &[m.l])?;
    let eps = s.f64_or("eps", 0.1)?;
    let mut tables = Vec::new();
    let mut lip = Table::new(&["l", "eps", "modulus", "monotone", "n", "excluded"]);
    model_comments(&mut lip, &m, ctx.seed);
    lip.comment("modulus: max over grid energies E of (N(E) - N(E - eps))/eps");
    let mut excluded = 0;
    for &l in &sides {
        let tab = ids_estimate(&m.with_l(l), &grid, ctx.samples, ctx.seed, ctx.runner)?;
        lip.push(vec![
            cell(l),
            num(eps),
            num(lipschitz_modulus(&tab, eps)?),
            cell(tab.is_monotone()),
            cell(tab.n),
            cell(tab.excluded),
        ]);
        excluded += tab.excluded;
        tables.push(tab);
    }
    let mut plot = emit_plot_data(&PlotSource::Ids(&tables), "ids")?;
    plot.comments.splice(0..0, lip.comments[..2].iter().cloned());
    let mut out = Outputs::default();
    out.add("ids.csv", plot);
    out.add("ids_lipschitz.csv", lip);
    if s.has("nested_sides") {
        let nested = s.usize_list("nested_sides")?;
        let e = s.f64_or("monotonicity_energy", 1.0)?;
        let rep = dirichlet_monotonicity(&m, &nested, e, ctx.samples, ctx.seed, ctx.runner)?;
        let mut t = Table::new(&["sample", "smaller", "larger", "count_small", "count_large"]);
        t.comment(format!(
            "Dirichlet counts below E = {} over nested sides {:?}: {} samples, {} violations",
            num(e),
            rep.sides,
            rep.samples,
            rep.violations.len()
        ));
        for v in &rep.violations {
            t.push(vec![cell(v.0), cell(v.1), cell(v.2), cell(v.3), cell(v.4)]);
        }
        out.add("ids_monotonicity.csv", t);
        excluded += rep.excluded;
    }
    out.excluded.insert("ids".into(), excluded);
    Ok(out)
}

fn proximity(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("proximity");
    let e = s.f64_or("energy", 1.0)?;
    let eps = s.f64_list_or("eps", &[0.1, 0.05, 0.025])?;
    let mut t = Table::new(&["eps", "probability", "stderr", "n", "excluded", "normalized"]);
    model_comments(&mut t, &m, ctx.seed);
    t.comment(format!("probability that some eigenvalue lies within eps of E = {}", num(e)));
    t.comment("normalized = probability/(eps l^(2d))");
    let mut excluded = 0;
    for &ep in &eps {
        let p = eigenvalue_proximity(&m, e, ep, ctx.samples, ctx.seed, ctx.runner)?;
        t.push(vec![num(ep), num(p.probability), num(p.stderr), cell(p.n), cell(p.excluded), num(p.normalized)]);
        excluded += p.excluded;
    }
    let mut out = Outputs::default();
    out.add("proximity.csv", t);
    out.excluded.insert("proximity".into(), excluded);
    Ok(out)
}

fn combes_thomas(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("combes_thomas");
    let gaps = s.f64_list_or("gaps", &[0.5, 1.0, 2.0])?;
    let anchor = s.site_or("anchor", Site::new(vec![(m.l / 8) as i64; m.d]))?;
    let max_sep = s.usize_or("max_sep", m.l / 2)?;
    let index = s.u64_or("sample", 0)?;
    let scan = combes_thomas_scan(&m, ctx.seed, index, &gaps, &anchor, max_sep)?;
    let mut plot = emit_plot_data(&PlotSource::CombesThomas(&scan.fits), "combes-thomas")?;
    plot.comment(format!("sampled spectral floor = {}", num(scan.floor)));
    let mut fits = Table::new(&["gap", "rate", "intercept", "r_squared"]);
    model_comments(&mut fits, &m, ctx.seed);
    fits.comment(format!(
        "sample {index}, floor = {}, rates nondecreasing = {}",
        num(scan.floor),
        scan.rates_nondecreasing()
    ));
    for (g, f) in &scan.fits {
        fits.push(vec![num(*g), num(f.rate), num(f.intercept), num(f.r_squared)]);
    }
    let mut out = Outputs::default();
    out.add("combes_thomas.csv", plot);
    out.add("combes_thomas_fits.csv", fits);
    out.excluded.insert("combes-thomas".into(), 0);
    Ok(out)
}

fn averaging(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("averaging");
    let site = s.site_or("site", Site::new(vec![(m.l / 2) as i64; m.d]))?;
    let interval = EnergyInterval::centered(s.f64_or("center", 1.0)?, s.f64_or("width", 0.2)?)?;
    let t_param = s.f64_or("t", 0.0)?;
    if !m.in_box(&site) {
        return Err(LabError::Precondition(format!("averaging.site {site:?} is not a cell of the box")));
    }
    let nodes = m.cell_nodes(&site);
    let mut f = vec![0.0; m.dimension()];
    for &n in &nodes {
        f[n] = 1.0 / (nodes.len() as f64).sqrt();
    }
    let batch = ctx.runner.map_samples(ctx.samples, |i| {
        spectral_averaging_check(&m, &sample_disorder(&m, ctx.seed, i)?, &site, &f, &interval, t_param)
    })?;
    let mut t = Table::new(&["sample", "integral", "bound", "xi", "holds"]);
    model_comments(&mut t, &m, ctx.seed);
    t.comment(format!(
        "interval [{}, {}], site {:?}, t = {}, f = normalized indicator of the site's cell",
        num(interval.e1),
        num(interval.e2),
        site.coords(),
        num(t_param)
    ));
    for (i, r) in &batch.values {
        t.push(vec![cell(i), num(r.integral), num(r.bound), num(r.xi), cell(r.holds(0.05))]);
    }
    let mut out = Outputs::default();
    out.add("averaging.csv", t);
    out.excluded.insert("averaging".into(), batch.excluded.len());
    Ok(out)
}

fn toeplitz_check(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let conv = &m.site.conv;
    let s = ctx.config.section("toeplitz");
    let default_sizes: Vec<usize> = if m.d == 1 { (4..=64).collect() } else { (2..=10).collect() };
    let sizes = s.usize_list_or("sizes", &default_sizes)?;
    let nus = nu_trend(conv, &sizes)?;
    let mut t = Table::new(&["size", "ab_residual", "norm_b", "bound", "nu"]);
    t.comment(format!("d = {}, a* = {}", m.d, num(conv.a_star())));
    t.comment("size: box side; ab_residual = max|AB - I|; norm_b: column sum norm; bound = 1/(1 - a*); nu: smallest singular value of A");
    for (&size, (_, nu)) in sizes.iter().zip(&nus) {
        let cells = SiteSet::cube(&vec![0; m.d], &vec![size as i64 - 1; m.d]);
        let sys = build_system(conv, &cells)?;
        t.push(vec![cell(size), num(sys.inverse_residual()), num(column_sum_norm(&sys.b)), num(sys.norm_bound()), num(*nu)]);
    }
    let points = s.usize_or("symbol_points", 65)?;
    let direction = s.f64_list_or("direction", &vec![1.0; m.d])?;
    if direction.len() != m.d {
        return Err(LabError::Config(format!("toeplitz.direction must have {} entries", m.d)));
    }
    let mut sym = Table::new(&["theta", "real", "imag", "modulus"]);
    sym.comment(format!("symbol along theta * {direction:?}"));
    for p in symbol_sweep(conv, &direction, points) {
        sym.push(vec![num(p.theta), num(p.value.re), num(p.value.im), num(p.value.norm())]);
    }
    let mut out = Outputs::default();
    out.add("toeplitz.csv", t);
    out.add("symbol.csv", sym);
    Ok(out)
}

fn volume(ctx: &Context) -> Result<Outputs> {
    let s = ctx.config.section("volume");
    let shear = s.f64_list_or("t", &[0.5, -0.3])?;
    let omega_plus = if s.has("omega_plus") {
        s.f64("omega_plus")?
    } else {
        ctx.config.root().f64_or("omega_plus", 1.0)?
    };
    let n = s.usize_or("mc_samples", 1_000_000)?;
    let u = ShearedUnion::new(shear, omega_plus)?;
    let mut t = Table::new(&["region", "exact", "mc_estimate", "stderr", "n_samples"]);
    t.comment(format!("shear t = {:?}, omega_plus = {}, seed = {}", u.t, num(omega_plus), ctx.seed));
    t.comment("union: Q + shifts of Q along t; piece_k: cells of its exact decomposition");
    let est = ctx.runner.install(|| mc_volume(|x| u.contains(x), &u.bbox(), n, ctx.seed))?;
    t.push(vec![cell("union"), num(u.exact_volume()), num(est.estimate), num(est.stderr), cell(n)]);
    for (k, piece) in u.decomposition().iter().enumerate() {
        let est = ctx.runner.install(|| mc_volume(|x| piece.contains(x), &piece.bbox(), n, ctx.seed))?;
        t.push(vec![cell(format!("piece_{k}")), num(piece.volume()), num(est.estimate), num(est.stderr), cell(n)]);
    }
    if s.has("site") {
        let m = ctx.config.model()?;
        let j = s.site("site")?;
        let sys = system_for_config(&m)?;
        let f = factorize_domain(&sys, &j, m.omega_plus)?;
        let mut rng = sample_rng(ctx.seed, u64::MAX);
        let eta_less = f.sample_eta_less(&mut rng);
        let bbox = f.enlarged_bbox(&eta_less)?;
        let est = ctx.runner.install(|| mc_volume(|x| f.in_enlarged(&eta_less, x), &bbox, n, ctx.seed))?;
        t.comment(format!("enlarged: M_>+ at site {:?}, |greater| = {}", j.coords(), f.greater.len()));
        t.push(vec![cell("enlarged"), num(f.enlarged_volume()?), num(est.estimate), num(est.stderr), cell(n)]);
    }
    let mut out = Outputs::default();
    out.add("volume.csv", t);
    Ok(out)
}

fn bs(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("birman_schwinger");
    let gap = s.f64_or("gap", 0.5)?;
    let eps = s.f64_or("eps", 0.1)?;
    let h0 = assemble_free(&m)?;
    let floor = eigenvalues(&h0)[0];
    let e = floor - gap;
    let batch = ctx.runner.map_samples(ctx.samples, |i| {
        let v = assemble_potential(&m, &sample_disorder(&m, ctx.seed, i)?)?;
        let rep = bs_equivalence_check(&h0, &v, e, eps)?;
        let residual = birman_schwinger(&h0, &v, e)?.identity_residual(&h0, &v)?;
        Ok((rep, residual))
    })?;
    let mut t = Table::new(&[
        "sample",
        "distance",
        "resolvent_norm",
        "near_spectrum",
        "large_resolvent",
        "inverse_norm",
        "large_inverse",
        "gamma_distance",
        "near_minus_one",
        "trace_count",
        "equivalence",
        "chain",
        "identity_residual",
    ]);
    model_comments(&mut t, &m, ctx.seed);
    t.comment(format!(
        "E = {} (inf spec H_0 - {}), eps = {}, radius eps/gap = {}",
        num(e),
        num(gap),
        num(eps),
        num(eps / gap)
    ));
    for (i, (r, residual)) in &batch.values {
        t.push(vec![
            cell(i),
            num(r.distance),
            num(r.resolvent_norm),
            cell(r.near_spectrum),
            cell(r.large_resolvent),
            num(r.inverse_norm),
            cell(r.large_inverse),
            num(r.gamma_distance),
            cell(r.near_minus_one),
            cell(r.trace_count),
            cell(r.equivalence_holds()),
            cell(r.chain_holds()),
            num(*residual),
        ]);
    }
    let mut out = Outputs::default();
    out.add("birman_schwinger.csv", t);
    out.excluded.insert("birman-schwinger".into(), batch.excluded.len());
    Ok(out)
}

fn msa(ctx: &Context) -> Result<Outputs> {
    let s = ctx.config.section("msa");
    let rule = match s.has("rule").then(|| s.str("rule")).transpose()? {
        None | Some("strict") => BracketRule::Strict,
        Some("nonstrict") => BracketRule::NonStrict,
        Some(other) => {
            return Err(LabError::Config(format!("msa.rule must be strict or nonstrict, got `{other}`")));
        }
    };
    let l0 = s.usize_or("l0", 9)? as u128;
    let d = if s.has("d") { s.usize("d")? } else { ctx.config.root().usize_or("d", 1)? };
    let params = MsaParams {
        l0,
        zeta: s.f64_or("zeta", 1.5)?,
        m0: s.f64_or("m0", 1.0)?,
        q0: s.f64_or("q0", 1.0)?,
        c1: s.f64_or("c1", 0.0)?,
        c2: s.f64_or("c2", 0.0)?,
        c3: s.f64_or("c3", 1.0)?,
        xi: s.f64_or("xi", 1.0)?,
        d,
        steps: s.usize_or("steps", 6)?,
        rule,
    };
    let schedule = msa_schedule(&params)?;
    let mut t = emit_plot_data(&PlotSource::Msa(&schedule), "msa")?;
    t.comment(format!(
        "mass retained (m >= m0/2) = {}, probability improves = {}",
        schedule.mass_retained(),
        schedule.probability_improves()
    ));
    let mut out = Outputs::default();
    out.add("msa.csv", t);
    if s.has("energy") {
        let m = ctx.config.model()?;
        let e = s.f64("energy")?;
        let delta = s.f64_or("delta", 1.0)?;
        let rows = regularity_survey(&m, &schedule, e, delta, ctx.samples, ctx.seed, ctx.runner)?;
        let mut r = Table::new(&["scale", "l", "m", "fraction", "stderr", "n", "excluded", "skipped"]);
        model_comments(&mut r, &m, ctx.seed);
        r.comment(format!("fraction of m-regular boxes at E = {}, collar parameter {}", num(e), num(delta)));
        let mut excluded = 0;
        for row in &rows {
            excluded += row.excluded;
            r.push(vec![
                cell(row.scale),
                cell(row.l),
                num(row.m),
                num(row.fraction),
                num(row.stderr),
                cell(row.n),
                cell(row.excluded),
                cell(row.skipped.as_deref().unwrap_or("").replace(',', ";")),
            ]);
        }
        out.add("regularity.csv", r);
        out.excluded.insert("regularity".into(), excluded);
    }
    Ok(out)
}

fn lifshitz(ctx: &Context) -> Result<Outputs> {
    let m = ctx.config.model()?;
    let s = ctx.config.section("lifshitz");
    let offsets = s.f64_list_or("offsets", &[0.5, 0.35, 0.25, 0.15, 0.1])?;
    let series = lifshitz_probe(&m, &offsets, ctx.samples, ctx.seed, ctx.runner)?;
    let mut t = emit_plot_data(&PlotSource::Lifshitz(&series), "lifshitz")?;
    model_comments(&mut t, &m, ctx.seed);
    t.comment(format!(
        "all negative = {}, monotone = {}, slope vs offset = {}",
        series.all_negative(),
        series.is_monotone(),
        series.trend().map_or("nan".into(), num)
    ));
    if !series.skipped.is_empty() {
        t.comment(format!("skipped offsets (empty count): {:?}", series.skipped));
    }
    let mut out = Outputs::default();
    out.add("lifshitz.csv", t);
    out.excluded.insert("lifshitz".into(), series.excluded);
    Ok(out)
}
