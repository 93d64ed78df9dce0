use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Experiment, ExperimentConfig};
use super::output::{f17, ser_f17, ser_f17_vec, to_json};
use crate::basis::{self, valley_subspace, ValleyKind, ValleySubspace};
use crate::dirac::{self, dirac_spectral_flow, DiracFlow, Valley};
use crate::hamiltonian::{Normalization, TightBindingFamily};
use crate::linalg;
use crate::specflow::{
    certify_sampled, FlowCertificate, FlowEngine, HermitianFamily, SampledFamily,
    SubspaceProjector, TamenessReport, TAME_BOUND,
};
use crate::{Error, Result};

/// What a command wrote and how the process should exit.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    pub message: String,
}

/// Valley subspaces `L`, `L′` and their sum for one radius.
pub struct ValleyTriple {
    pub d: i64,
    pub l: ValleySubspace,
    pub l_prime: ValleySubspace,
    pub sum: SubspaceProjector,
}

impl ValleyTriple {
    pub fn new(d: i64, exp: &Experiment) -> Result<Self> {
        let q_bar = exp.flux.schedule.q_bar();
        let l = basis::valley_projector(ValleyKind::L, d, q_bar, &exp.lattice)?;
        let l_prime = basis::valley_projector(ValleyKind::LPrime, d, q_bar, &exp.lattice)?;
        let sum = l.projector.direct_sum(&l_prime.projector)?;
        Ok(ValleyTriple {
            d,
            l,
            l_prime,
            sum,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessTriple {
    #[serde(rename = "L")]
    pub l: TamenessReport,
    #[serde(rename = "Lprime")]
    pub l_prime: TamenessReport,
    #[serde(rename = "L_plus_Lprime")]
    pub sum: TamenessReport,
}

impl TamenessTriple {
    pub fn pass(&self) -> bool {
        self.l.pass && self.l_prime.pass && self.sum.pass
    }
}

fn triple_on(sampled: &SampledFamily<'_>, v: &ValleyTriple) -> Result<TamenessTriple> {
    Ok(TamenessTriple {
        l: certify_sampled(sampled, &v.l.projector)?,
        l_prime: certify_sampled(sampled, &v.l_prime.projector)?,
        sum: certify_sampled(sampled, &v.sum)?,
    })
}

/// Resolves the valley radius. A pinned `d` is used as is; otherwise the
/// smallest `d > q̄` whose three subspaces pass on the cached samples, falling
/// back to the smallest candidate when none does.
pub fn resolve_valleys(
    exp: &Experiment,
    sampled: &SampledFamily<'_>,
) -> Result<(ValleyTriple, TamenessTriple)> {
    if let Some(d) = exp.d {
        let v = ValleyTriple::new(d, exp)?;
        let r = triple_on(sampled, &v)?;
        return Ok((v, r));
    }
    let first = exp.flux.schedule.q_bar().floor() as i64 + 1;
    let mut fallback = None;
    for d in first..exp.geometry.n_bar() {
        let v = ValleyTriple::new(d, exp)?;
        let r = triple_on(sampled, &v)?;
        if r.pass() {
            return Ok((v, r));
        }
        if fallback.is_none() {
            fallback = Some((v, r));
        }
    }
    fallback.ok_or_else(|| {
        Error::Infeasible(format!(
            "no valley radius with q̄ < d < n̄ = {}",
            exp.geometry.n_bar()
        ))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RunInfo {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(serialize_with = "ser_f17")]
    pub a: f64,
    #[serde(serialize_with = "ser_f17")]
    pub q_final: f64,
    pub d: i64,
    #[serde(serialize_with = "ser_f17")]
    pub delta: f64,
}

impl RunInfo {
    fn new(exp: &Experiment, d: i64) -> Self {
        RunInfo {
            m: exp.geometry.axial_cells,
            n: exp.geometry.around_cells,
            a: exp.geometry.a,
            q_final: exp.flux.schedule.q_final,
            d,
            delta: exp.delta,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanSummary {
    #[serde(serialize_with = "ser_f17_vec")]
    pub breakpoints: Vec<f64>,
    #[serde(serialize_with = "ser_f17_vec")]
    pub fences: Vec<f64>,
    #[serde(serialize_with = "ser_f17")]
    pub margin: f64,
    pub elementary_segments: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowCertificates {
    pub total: Option<FlowCertificate>,
    #[serde(rename = "L")]
    pub l: Option<FlowCertificate>,
    #[serde(rename = "Lprime")]
    pub l_prime: Option<FlowCertificate>,
    pub perp: Option<FlowCertificate>,
}

/// Everything `flow.json` contains.
#[derive(Clone, Debug, Serialize)]
pub struct FlowReport {
    pub run: RunInfo,
    pub sf_total: Option<i64>,
    #[serde(rename = "sf_L")]
    pub sf_l: Option<i64>,
    #[serde(rename = "sf_Lprime")]
    pub sf_l_prime: Option<i64>,
    pub sf_perp: Option<i64>,
    pub pairs_created: Option<i64>,
    pub tame: bool,
    pub valleys_match: bool,
    pub tameness: TamenessTriple,
    pub certificates: FlowCertificates,
    pub plan: PlanSummary,
    /// First error hit while summing, if any.
    pub error: Option<String>,
}

/// Plans `H_t`, resolves `d`, and sums the flows along `L`, `L′`,
/// `(L ⊕ L′)^⊥` and the whole space.
pub fn run_flow(exp: &Experiment) -> Result<FlowReport> {
    let q = exp.flux.schedule.integer_flux()?;
    let family = TightBindingFamily::new(&exp.lattice, exp.flux.clone(), Normalization::DiracUnit);
    let engine = FlowEngine::new(&family, &exp.engine)?;
    let (valleys, tameness) = resolve_valleys(exp, engine.sampled())?;
    let tame = tameness.pass();
    let plan = engine.plan();
    let plan_summary = PlanSummary {
        breakpoints: plan.breakpoints.clone(),
        fences: plan.fences.clone(),
        margin: plan.margin,
        elementary_segments: plan.elementary_segments,
        samples: engine.sampled().len(),
    };
    let mut error = None;
    let mut keep = |r: Result<FlowCertificate>| match r {
        Ok(c) => Some(c),
        Err(e) => {
            error.get_or_insert(e.to_string());
            None
        }
    };
    let total = keep(engine.flow());
    let (l, l_prime, perp) = if tame {
        (
            keep(engine.flow_with(&valleys.l.projector, tameness.l.worst_epsilon)),
            keep(engine.flow_with(&valleys.l_prime.projector, tameness.l_prime.worst_epsilon)),
            keep(engine.flow_with(&valleys.sum.complement(), tameness.sum.worst_epsilon)),
        )
    } else {
        (None, None, None)
    };
    let flow = |c: &Option<FlowCertificate>| c.as_ref().map(|c| c.flow);
    let (sf_total, sf_l, sf_l_prime, sf_perp) = (flow(&total), flow(&l), flow(&l_prime), flow(&perp));
    let valleys_match = sf_total == Some(0)
        && sf_perp == Some(0)
        && sf_l == Some(-q)
        && sf_l_prime == Some(q);
    Ok(FlowReport {
        run: RunInfo::new(exp, valleys.d),
        sf_total,
        sf_l,
        sf_l_prime,
        sf_perp,
        pairs_created: sf_l_prime,
        tame,
        valleys_match,
        tameness,
        certificates: FlowCertificates {
            total,
            l,
            l_prime,
            perp,
        },
        plan: plan_summary,
        error,
    })
}

fn out_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    let dir = match (out, &cfg.output.directory) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    let mut f = BufWriter::new(fs::File::create(path)?);
    f.write_all(body)?;
    f.flush()?;
    Ok(())
}

fn t_grid(n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(1);
    (0..=n).map(move |i| i as f64 / n as f64)
}

/// Writes `lattice.csv` and `valleys.csv` for the resolved geometry.
pub fn dump_lattice(exp: &Experiment, d: i64, dir: &Path) -> Result<Vec<PathBuf>> {
    let lat_path = dir.join("lattice.csv");
    let mut buf = Vec::new();
    exp.lattice.write_csv(&mut buf)?;
    write_file(&lat_path, &buf)?;
    let val_path = dir.join("valleys.csv");
    let index = basis::enumerate_g0(&exp.geometry);
    let l = valley_subspace(ValleyKind::L, d, &exp.lattice)?;
    let lp = valley_subspace(ValleyKind::LPrime, d, &exp.lattice)?;
    let mut buf = Vec::new();
    basis::write_valley_csv(&mut buf, &index, &l, &lp)?;
    write_file(&val_path, &buf)?;
    Ok(vec![lat_path, val_path])
}

/// Eigenvalues of `H_t` on the uniform grid with their valley weights.
/// Sorted eigenvalues of `H_t` on the sample grid, with their valley weights.
#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub d: i64,
    pub t: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub weight_l: Vec<Vec<f64>>,
    pub weight_lprime: Vec<Vec<f64>>,
}

pub fn run_spectrum(exp: &Experiment) -> Result<Spectrum> {
    let family = TightBindingFamily::new(&exp.lattice, exp.flux.clone(), Normalization::DiracUnit);
    let mut sampled = SampledFamily::new(&family, exp.delta);
    let mut eigs = Vec::new();
    for t in t_grid(exp.t_samples) {
        if exp.d.is_none() {
            sampled.sample(t)?;
        }
        eigs.push((t, linalg::eigh(family.eval(t).as_ref())?));
    }
    let (valleys, _) = resolve_valleys(exp, &sampled)?;
    let weights = |p: &SubspaceProjector, v: &faer::Mat<crate::c64>| -> Vec<f64> {
        let pv = p.apply(v.as_ref());
        (0..pv.ncols())
            .map(|j| pv.col(j).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    };
    let mut out = Spectrum {
        d: valleys.d,
        t: Vec::new(),
        values: Vec::new(),
        weight_l: Vec::new(),
        weight_lprime: Vec::new(),
    };
    for (t, e) in eigs {
        out.weight_l.push(weights(&valleys.l.projector, &e.vectors));
        out.weight_lprime.push(weights(&valleys.l_prime.projector, &e.vectors));
        out.t.push(t);
        out.values.push(e.values);
    }
    Ok(out)
}

pub fn cmd_spectrum(cfg: &ExperimentConfig, out: Option<&Path>, dump: bool) -> Result<Outcome> {
    let exp = cfg.resolve()?;
    let dir = out_dir(cfg, out)?;
    let spec = run_spectrum(&exp)?;
    let mut text = String::from("t,eig_index,eigenvalue,weight_L,weight_Lprime\n");
    for (i, t) in spec.t.iter().enumerate() {
        for (j, lambda) in spec.values[i].iter().enumerate() {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                f17(*t),
                j,
                f17(*lambda),
                f17(spec.weight_l[i][j]),
                f17(spec.weight_lprime[i][j])
            ));
        }
    }
    let mut files = Vec::new();
    if cfg.output.wants("csv") {
        let path = dir.join("spectrum.csv");
        write_file(&path, text.as_bytes())?;
        files.push(path);
    }
    if dump {
        files.extend(dump_lattice(&exp, spec.d, &dir)?);
    }
    Ok(Outcome {
        files,
        exit_code: 0,
        message: format!("spectrum: {} t values, d = {}", spec.t.len(), spec.d),
    })
}

pub fn cmd_flow(cfg: &ExperimentConfig, out: Option<&Path>, dump: bool) -> Result<Outcome> {
    let exp = cfg.resolve()?;
    let dir = out_dir(cfg, out)?;
    let report = run_flow(&exp)?;
    let mut files = Vec::new();
    if cfg.output.wants("json") {
        let path = dir.join("flow.json");
        write_file(&path, to_json(&report)?.as_bytes())?;
        files.push(path);
    }
    if dump {
        files.extend(dump_lattice(&exp, report.run.d, &dir)?);
    }
    let show = |x: Option<i64>| x.map_or("n/a".to_string(), |v| v.to_string());
    let message = format!(
        "sf_total = {}, sf_L = {}, sf_Lprime = {}, sf_perp = {}, tame = {}, d = {}",
        show(report.sf_total),
        show(report.sf_l),
        show(report.sf_l_prime),
        show(report.sf_perp),
        report.tame,
        report.run.d
    );
    let exit_code = if !report.tame {
        3
    } else if report.valleys_match {
        0
    } else {
        1
    };
    Ok(Outcome {
        files,
        exit_code,
        message,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracMethods {
    #[serde(rename = "K")]
    pub k: DiracFlow,
    #[serde(rename = "Kprime")]
    pub k_prime: DiracFlow,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracReport {
    #[serde(serialize_with = "ser_f17")]
    pub q_final: f64,
    pub d: i64,
    #[serde(rename = "K")]
    pub k: i64,
    #[serde(rename = "Kprime")]
    pub k_prime: i64,
    pub agree: bool,
    pub sum_zero: bool,
    pub methods: DiracMethods,
}

/// Dirac radius: the pinned value, or `⌊q̄⌋ + 2`.
pub fn dirac_radius(exp: &Experiment) -> i64 {
    exp.d
        .unwrap_or(exp.flux.schedule.q_bar().floor() as i64 + 2)
}

pub fn run_dirac(exp: &Experiment) -> Result<DiracReport> {
    let d = dirac_radius(exp);
    let schedule = &exp.flux.schedule;
    let opts = dirac::default_options(&exp.geometry).with_coarse(exp.t_samples);
    let k = dirac_spectral_flow(Valley::K, d, &exp.geometry, schedule, &opts)?;
    let kp = dirac_spectral_flow(Valley::KPrime, d, &exp.geometry, schedule, &opts)?;
    Ok(DiracReport {
        q_final: schedule.q_final,
        d,
        k: k.engine,
        k_prime: kp.engine,
        agree: k.agree && kp.agree,
        sum_zero: k.engine + kp.engine == 0,
        methods: DiracMethods { k, k_prime: kp },
    })
}

pub fn cmd_dirac(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let exp = cfg.resolve()?;
    let dir = out_dir(cfg, out)?;
    let report = run_dirac(&exp)?;
    let mut files = Vec::new();
    if cfg.output.wants("json") {
        let path = dir.join("dirac.json");
        write_file(&path, to_json(&report)?.as_bytes())?;
        files.push(path);
    }
    let q = exp.flux.schedule.integer_flux()?;
    let ok = report.agree && report.k == -q && report.k_prime == q;
    Ok(Outcome {
        files,
        exit_code: if ok { 0 } else { 1 },
        message: format!(
            "K = {}, Kprime = {}, agree = {}, d = {}",
            report.k, report.k_prime, report.agree, report.d
        ),
    })
}

pub fn cmd_convergence(cfg: &ExperimentConfig, out: Option<&Path>, levels: usize) -> Result<Outcome> {
    if levels < 2 {
        return Err(Error::Config(format!("convergence needs at least 2 levels, got {levels}")));
    }
    let exp = cfg.resolve()?;
    let dir = out_dir(cfg, out)?;
    let d = dirac_radius(&exp);
    let geoms = dirac::doubling_sequence(exp.geometry, levels);
    let rows = dirac::convergence_check(Valley::K, d, &exp.flux.schedule, &geoms, exp.t_samples)?;
    let mut text = String::from("M,N,a,max_t_norm,ratio\n");
    for r in &rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.geometry.axial_cells,
            r.geometry.around_cells,
            f17(r.geometry.a),
            f17(r.max_t_norm),
            r.ratio.map(f17).unwrap_or_default()
        ));
    }
    let mut files = Vec::new();
    if cfg.output.wants("csv") {
        let path = dir.join("convergence.csv");
        write_file(&path, text.as_bytes())?;
        files.push(path);
    }
    let ratios: Vec<String> = rows
        .iter()
        .filter_map(|r| r.ratio)
        .map(|x| format!("{x:.4}"))
        .collect();
    dirac::check_monotone(&rows)?;
    Ok(Outcome {
        files,
        exit_code: 0,
        message: format!("ratios: [{}]", ratios.join(", ")),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubspaceTameness {
    pub name: &'static str,
    pub rank: usize,
    #[serde(serialize_with = "ser_f17")]
    pub worst_epsilon: f64,
    pub below_quarter: bool,
    pub below_block_target: bool,
    pub report: TamenessReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct TamenessFile {
    pub run: RunInfo,
    #[serde(serialize_with = "ser_f17")]
    pub bound: f64,
    #[serde(serialize_with = "ser_f17")]
    pub block_target: f64,
    pub pass: bool,
    pub subspaces: Vec<SubspaceTameness>,
}

pub fn run_tameness(exp: &Experiment) -> Result<TamenessFile> {
    let family = TightBindingFamily::new(&exp.lattice, exp.flux.clone(), Normalization::DiracUnit);
    let mut sampled = SampledFamily::new(&family, exp.delta);
    for t in t_grid(exp.t_samples) {
        sampled.sample(t)?;
    }
    let (v, _) = resolve_valleys(exp, &sampled)?;
    let q_bar = exp.flux.schedule.q_bar();
    let block_target = 1.0 / (4.0 * (4.0 * q_bar + 2.0));
    let l_perp = v.l.projector.complement();
    let lp_perp = v.l_prime.projector.complement();
    let sum_perp = v.sum.complement();
    let named: [(&'static str, &SubspaceProjector); 6] = [
        ("L", &v.l.projector),
        ("Lprime", &v.l_prime.projector),
        ("L_plus_Lprime", &v.sum),
        ("L_perp", &l_perp),
        ("Lprime_perp", &lp_perp),
        ("L_plus_Lprime_perp", &sum_perp),
    ];
    let mut subspaces = Vec::new();
    for (name, p) in named {
        let report = certify_sampled(&sampled, p)?;
        subspaces.push(SubspaceTameness {
            name,
            rank: p.rank(),
            worst_epsilon: report.worst_epsilon,
            below_quarter: report.worst_epsilon < TAME_BOUND,
            below_block_target: report.worst_epsilon < block_target,
            report,
        });
    }
    Ok(TamenessFile {
        run: RunInfo::new(exp, v.d),
        bound: TAME_BOUND,
        block_target,
        pass: subspaces.iter().all(|s| s.below_quarter),
        subspaces,
    })
}

pub fn cmd_tameness(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Outcome> {
    let exp = cfg.resolve()?;
    let dir = out_dir(cfg, out)?;
    let report = run_tameness(&exp)?;
    let mut files = Vec::new();
    if cfg.output.wants("json") {
        let path = dir.join("tameness.json");
        write_file(&path, to_json(&report)?.as_bytes())?;
        files.push(path);
    }
    let worst = report
        .subspaces
        .iter()
        .map(|s| s.worst_epsilon)
        .fold(0.0, f64::max);
    Ok(Outcome {
        files,
        exit_code: 0,
        message: format!("pass = {}, worst ε = {worst:.3e}, d = {}", report.pass, report.run.d),
    })
}
