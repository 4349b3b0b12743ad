//! One function per subcommand. Each returns the report and, where the
//! command has one, a CSV trace with fixed columns.

use std::collections::BTreeMap;

use markovia_core::counterexamples::{
    ma_shift_verdicts, parity_analysis, parity_verdicts, tail_trace, theta_shift_trace, theta_shift_verdicts,
    ParityProcessSpec, ShiftBase, ThetaShiftSpec,
};
use markovia_core::discrete::chain::{chain_pmf, dcp_variance, MarkovChainSpec, TailEvent};
use markovia_core::discrete::ising::{
    ising_conditional, ising_convergence, ising_exact, sparse_conditional_floor, sparse_ising_normalize, IsingModel,
    Regime,
};
use markovia_core::discrete::Pmf;
use markovia_core::gaussian::{
    conditional_convergence, default_order, eigen_bounds, nearest_first_order, verify_conditions, CovarianceModel,
    VerifyOptions, DEFAULT_SIZE_CAP,
};
use markovia_core::graph::{LazyGraph, VertexSet};
use markovia_core::graphoid::{
    check_axiom, check_markov, equivalence_audit, pairwise_graph, relation_from_discrete, Axiom, AxiomOptions,
    CIRelation, MarkovProperty, DEFAULT_DISCRETE_TOL,
};
use markovia_core::report::{DiagnosticReport, Section, Verdict, Witness};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;

/// Rows of a CSV trace under fixed headers.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&'static str]) -> Self {
        Table { headers: headers.to_vec(), rows: vec![] }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write(&self, path: &std::path::Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        Ok(())
    }
}

pub struct Outcome {
    pub report: DiagnosticReport,
    pub table: Option<Table>,
}

impl Outcome {
    fn plain(report: DiagnosticReport) -> Self {
        Outcome { report, table: None }
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Fallback trace for commands without one: a row per section.
pub fn section_table(r: &DiagnosticReport) -> Table {
    let mut t = Table::new(&["property", "anchor", "verdict"]);
    for s in &r.sections {
        t.push(vec![s.property.clone(), s.anchor.clone(), s.verdict.label().to_string()]);
    }
    t
}

pub fn check_graphoid(r: &CIRelation, axioms: &[Axiom], opts: &AxiomOptions) -> Result<Outcome, CliError> {
    let mut rep = DiagnosticReport::new("check-graphoid");
    for &a in axioms {
        rep.push(check_axiom(r, a, opts)?.to_section());
    }
    Ok(Outcome::plain(rep))
}

pub fn check_markov_all(r: &CIRelation, g: &LazyGraph, props: &[MarkovProperty]) -> Result<Outcome, CliError> {
    let mut rep = DiagnosticReport::new("check-markov");
    for &p in props {
        for s in check_markov(r, g, p)?.sections {
            rep.push(s);
        }
    }
    Ok(Outcome::plain(rep))
}

pub fn audit_model(r: &CIRelation, g: &LazyGraph, opts: &AxiomOptions) -> Result<Outcome, CliError> {
    Ok(Outcome::plain(equivalence_audit(r, g, opts)?))
}

const IMPLICATIONS: [&str; 3] = ["G* => L*", "L* => P*", "P* => G*"];

/// One random trial: even trials draw i.i.d. uniform weights on
/// `[0.01, 1]` and audit against their pairwise graph; odd trials draw a
/// product of random edge potentials and audit against its own graph.
fn audit_trial(n: usize, seed: u64, trial: usize, opts: &AxiomOptions, tol: f64) -> Result<DiagnosticReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let (pmf, graph) = if trial % 2 == 0 {
        let p = Pmf::random_positive((1..=n).collect(), 0.01, &mut rng)?;
        let g = pairwise_graph(&relation_from_discrete(&p, tol))?;
        (p, g)
    } else {
        let (p, edges) = Pmf::random_pairwise(n, 0.5, 0.05, &mut rng)?;
        (p, LazyGraph::explicit((1..=n).collect(), &edges)?)
    };
    Ok(equivalence_audit(&relation_from_discrete(&pmf, tol), &graph, opts)?)
}

pub fn audit_random(n: usize, trials: usize, seed: u64, tol: f64) -> Result<Outcome, CliError> {
    if !(2..=8).contains(&n) {
        return Err(CliError::Usage(format!("--n must lie in 2..=8 for random tables (got {n})")));
    }
    let opts = AxiomOptions { cap: n.max(7), seed, ..Default::default() };
    let audits: Vec<DiagnosticReport> = (0..trials)
        .into_par_iter()
        .map(|t| audit_trial(n, seed, t, &opts, tol))
        .collect::<Result<_, _>>()?;
    let mut rep = DiagnosticReport::new("audit-equivalence").with_tolerance(tol);
    let mut table = Table::new(&["trial", "verdict", "g_l", "l_p", "p_g"]);
    for (t, a) in audits.iter().enumerate() {
        let cell = |name: &str| a.section(name).map_or("missing", |s| s.verdict.label()).to_string();
        table.push(vec![t.to_string(), a.verdict.label().into(), cell(IMPLICATIONS[0]), cell(IMPLICATIONS[1]), cell(IMPLICATIONS[2])]);
    }
    for name in IMPLICATIONS {
        let mut tally: BTreeMap<Verdict, usize> = BTreeMap::new();
        let mut witnesses = vec![];
        for (t, a) in audits.iter().enumerate() {
            let v = a.section(name).map_or(Verdict::Inconclusive, |s| s.verdict);
            *tally.entry(v).or_default() += 1;
            if v == Verdict::Fail && witnesses.len() < 5 {
                witnesses.push(Witness::new(format!("trial {t}")).value("trial", t as f64));
            }
        }
        let (pass, fail, skipped) = (
            tally.get(&Verdict::Pass).copied().unwrap_or(0),
            tally.get(&Verdict::Fail).copied().unwrap_or(0),
            tally.get(&Verdict::Inconclusive).copied().unwrap_or(0),
        );
        let verdict = if fail > 0 {
            Verdict::Fail
        } else if pass == 0 {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        rep.push(
            Section::new(name, "markov-implications", verdict)
                .tolerance(tol)
                .metric("asserted_and_held", pass as f64)
                .metric("violations", fail as f64)
                .metric("not_licensed", skipped as f64)
                .witnesses(witnesses),
        );
    }
    let passes = audits.iter().filter(|a| a.verdict == Verdict::Pass).count();
    rep.push_informational(
        Section::new("trials", "markov-implications", Verdict::from_bool(passes == trials))
            .metric("trials", trials as f64)
            .metric("passes", passes as f64)
            .metric("variables", n as f64),
    );
    Ok(Outcome { report: rep.with_seed(seed), table: Some(table) })
}

pub fn gaussian_verify(m: &CovarianceModel, opts: &VerifyOptions) -> Result<Outcome, CliError> {
    let rep = verify_conditions(m, opts)?;
    let trace = eigen_bounds(m, &opts.sizes, DEFAULT_SIZE_CAP)?;
    let mut t = Table::new(&["size", "lambda_min", "lambda_max", "max_row_sum"]);
    for r in &trace.records {
        t.push(vec![r.size.to_string(), num(r.lambda_min), num(r.lambda_max), num(r.max_row_sum)]);
    }
    Ok(Outcome { report: rep, table: Some(t) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ConditioningOrder {
    /// Increasing index.
    Natural,
    /// Nearest lattice points first (lattice models only).
    Nearest,
}

pub fn gaussian_converge(
    m: &CovarianceModel,
    target: &VertexSet,
    steps: usize,
    order: ConditioningOrder,
    tol: f64,
    window: usize,
) -> Result<Outcome, CliError> {
    let b = match (order, m) {
        (ConditioningOrder::Nearest, CovarianceModel::Lattice { dim, .. }) => nearest_first_order(*dim, target, steps),
        (ConditioningOrder::Nearest, _) => {
            return Err(CliError::Usage("--order nearest needs a lattice model".into()));
        }
        (ConditioningOrder::Natural, _) => default_order(target, steps),
    };
    let b: Vec<usize> = match m.len() {
        Some(n) => b.into_iter().filter(|&i| i <= n).collect(),
        None => b,
    };
    let tr = conditional_convergence(m, target, &b, steps)?;
    let mut t = Table::new(&["n", "added", "cond_cov_00", "delta_cov", "delta_coeff"]);
    for s in &tr.steps {
        t.push(vec![s.n.to_string(), s.added.to_string(), num(s.cond_cov[0]), num(s.delta_cov), num(s.delta_coeff)]);
    }
    let settled = tr.settled(tol, window);
    let last = tr.steps.last();
    let mut rep = DiagnosticReport::new("gaussian-converge").with_tolerance(tol);
    rep.push(
        Section::new("conditional-convergence", "conditional-law-convergence", if settled { Verdict::Pass } else { Verdict::Inconclusive })
            .tolerance(tol)
            .metric("steps", tr.steps.len() as f64)
            .metric("window", window as f64)
            .metric("last_delta_cov", last.map_or(f64::NAN, |s| s.delta_cov))
            .metric("last_delta_coeff", last.map_or(f64::NAN, |s| s.delta_coeff))
            .note("a settled trace is evidence of convergence along this order, not a proof"),
    );
    Ok(Outcome { report: rep, table: Some(t) })
}

pub fn ising_exact_cmd(model: &IsingModel, n: usize, samples: usize, seed: u64, tol: f64) -> Result<Outcome, CliError> {
    let p = ising_exact(model, n)?;
    let total: f64 = p.probs().iter().sum();
    let mut rep = DiagnosticReport::new("ising-exact").with_seed(seed).with_tolerance(tol);
    rep.push(
        Section::new("normalization", "ising-partition-function", Verdict::from_bool((total - 1.0).abs() <= 1e-12 && p.min_prob() > 0.0))
            .metric("nodes", n as f64)
            .metric("min_prob", p.min_prob())
            .metric("total", total),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let j = rng.gen_range(1..=n);
        let state: usize = rng.gen_range(0..1usize << n);
        let x: BTreeMap<usize, u8> = (1..=n).filter(|&k| k != j).map(|k| (k, ((state >> (k - 1)) & 1) as u8)).collect();
        let cond: Vec<(usize, u8)> = x.iter().map(|(&k, &v)| (k, v)).collect();
        let table = p.conditional_one(j, &cond)?.unwrap_or(f64::NAN);
        let local = ising_conditional(model, j, &x)?;
        worst = worst.max((table - local).abs());
    }
    rep.push(
        Section::new("local-conditionals", "ising-conditional-law", Verdict::from_bool(worst <= tol))
            .tolerance(tol)
            .metric("samples", samples as f64)
            .metric("max_error", worst),
    );
    if n <= markovia_core::graphoid::DEFAULT_CAP {
        let r = relation_from_discrete(&p, DEFAULT_DISCRETE_TOL);
        let g = model.interaction_graph(n)?;
        for prop in MarkovProperty::ALL {
            for s in check_markov(&r, &g, prop)?.sections {
                rep.push(s);
            }
        }
    }
    let table = (n <= 16).then(|| {
        let mut t = Table::new(&["state", "prob"]);
        for (s, q) in p.probs().iter().enumerate() {
            let bits: String = (0..n).map(|k| if (s >> k) & 1 == 1 { '1' } else { '0' }).collect();
            t.push(vec![bits, num(*q)]);
        }
        t
    });
    Ok(Outcome { report: rep, table })
}

/// Largest `n` at which the ratio identity is cross-checked against the
/// enumerated table.
pub const IDENTITY_CHECK_MAX: usize = 16;

pub fn ising_converge_cmd(model: &IsingModel, m: usize, n_max: usize, tol: f64) -> Result<Outcome, CliError> {
    let c = ising_convergence(model, m, n_max)?;
    let mut rep = DiagnosticReport::new("ising-converge").with_tolerance(tol);

    let mut worst: f64 = 0.0;
    for n in m..=n_max.min(IDENTITY_CHECK_MAX) {
        let p = ising_exact(model, n)?;
        let mut exact = vec![0.0; 1 << m];
        for (s, q) in p.probs().iter().enumerate() {
            exact[s & ((1 << m) - 1)] += q;
        }
        for (vi, t) in c.traces.iter().enumerate() {
            let want = exact[vi] / exact[0];
            worst = worst.max((t.f[n - m] - want).abs() / want.max(1.0));
        }
    }
    rep.push(
        Section::new("ratio-identity", "ising-marginal-ratio", Verdict::from_bool(worst <= tol))
            .tolerance(tol)
            .metric("max_relative_error", worst)
            .metric("checked_up_to", n_max.min(IDENTITY_CHECK_MAX) as f64),
    );

    let qualifying = c.bound_ok.iter().filter(|b| b.is_some()).count();
    let alpha = Section::new("alpha-bound", "ising-ratio-convergence", if qualifying == 0 {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(c.alpha_bound_holds())
    })
    .metric("qualifying_from", c.qualifying_from as f64)
    .metric("qualifying_steps", qualifying as f64)
    .metric("max_beta_next", c.beta_next.iter().copied().fold(0.0, f64::max));
    match model.regime() {
        Regime::Summable => {
            rep.push(alpha);
            let sandwich = Section::new("marginal-sandwich", "ising-marginal-sandwich", c.sandwich_ok.map_or(Verdict::Inconclusive, Verdict::from_bool))
                .metric("c", c.sandwich_c);
            rep.push(sandwich);
            let mut lim = Section::new("limit-interval", "ising-ratio-convergence", if c.traces.iter().all(|t| t.limit.is_some()) {
                Verdict::Pass
            } else {
                Verdict::Inconclusive
            })
            .metric("tail_mass", c.tail_mass);
            let ws = c
                .traces
                .iter()
                .filter_map(|t| {
                    t.limit.map(|(lo, hi)| {
                        let label: String = t.v.iter().map(|b| char::from(b'0' + b)).collect();
                        Witness::new(format!("v = {label}")).value("lo", lo).value("hi", hi)
                    })
                })
                .collect();
            lim = lim.witnesses(ws);
            rep.push_informational(lim);
        }
        _ => {
            rep.push_informational(alpha.note("field mass is infinite in this regime; the ratio bound is not applicable"));
            let z = sparse_ising_normalize(model, 3, 60)?;
            rep.push(
                Section::new("sparse-normalizer", "sparse-ising-normalizer", Verdict::from_bool(z.upper().is_finite()))
                    .metric("partial", z.partial)
                    .metric("upper", z.upper())
                    .metric("terms", z.terms as f64)
                    .note("configurations with at most 3 ones among the first 60 nodes, plus a certified bound on the rest"),
            );
            let eps = sparse_conditional_floor(model, m)?;
            rep.push(
                Section::new("conditional-floor", "sparse-ising-positivity", Verdict::from_bool(eps > 0.0))
                    .metric("epsilon", eps)
                    .note("checked on truncations only"),
            );
        }
    }
    let mut t = Table::new(&["n", "v", "f_m", "alpha", "beta", "bound_ok"]);
    for (n, v, f, a, b, ok) in c.rows() {
        t.push(vec![n.to_string(), v, num(f), opt_num(a), if b.is_nan() { String::new() } else { num(b) }, ok.map(|x| x.to_string()).unwrap_or_default()]);
    }
    Ok(Outcome { report: rep, table: Some(t) })
}

pub struct DcpOptions {
    pub n: usize,
    pub m: usize,
    pub events: usize,
    pub tol: f64,
}

pub fn chain_dcp(specs: &[MarkovChainSpec], o: &DcpOptions, seed: u64) -> Result<Outcome, CliError> {
    if o.m == 0 || o.m + 1 > o.n {
        return Err(CliError::Usage(format!("need 1 <= m < n (got m = {}, n = {})", o.m, o.n)));
    }
    let mut t = Table::new(&["spec", "event", "m", "n_prime", "variance", "bound"]);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut witnesses = vec![];
    let mut count = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (si, c) in specs.iter().enumerate() {
        let p = chain_pmf(c, o.n)?;
        for e in 0..o.events {
            let n_prime = rng.gen_range(o.m + 1..=o.n);
            let mut support: Vec<usize> = (n_prime..=o.n).filter(|_| rng.gen_bool(0.6)).collect();
            if support.is_empty() {
                support.push(n_prime);
            }
            let event = TailEvent::random(support, &mut rng);
            let b: VertexSet = (o.m + 1..n_prime).filter(|_| rng.gen_bool(0.5)).collect();
            let xb: Vec<u8> = b.iter().map(|_| rng.gen_bool(0.5) as u8).collect();
            let v = dcp_variance(&p, &event, o.m, &b, &xb)?;
            let bound = c.product_bound(o.m, n_prime);
            worst = worst.max(v - bound);
            count += 1;
            if v > bound + o.tol && witnesses.len() < 5 {
                witnesses.push(
                    Witness::new(format!("spec {si}, event {e}"))
                        .set("conditioning", b.clone())
                        .value("variance", v)
                        .value("bound", bound),
                );
            }
            t.push(vec![si.to_string(), e.to_string(), o.m.to_string(), n_prime.to_string(), num(v), num(bound)]);
        }
    }
    let mut rep = DiagnosticReport::new("chain-dcp").with_seed(seed).with_tolerance(o.tol);
    rep.push(
        Section::new("variance-bound", "chain-decorrelation", Verdict::from_bool(witnesses.is_empty()))
            .tolerance(o.tol)
            .metric("specs", specs.len() as f64)
            .metric("events", count as f64)
            .metric("max_excess", worst)
            .witnesses(witnesses),
    );
    if let [c] = specs {
        rep.push_informational(
            Section::new("divergence-sum", "chain-decorrelation", Verdict::Pass)
                .metric("partial_sum", c.divergence_partial_sum(o.n))
                .note("a divergent sum of 1 - (p_r - t_r) drives the product bound to zero"),
        );
    }
    Ok(Outcome { report: rep, table: Some(t) })
}

pub fn random_chain_specs(count: usize, len: usize, seed: u64) -> Vec<MarkovChainSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| MarkovChainSpec::random(len, 0.05, &mut rng)).collect()
}

pub fn parity_cmd(spec: &ParityProcessSpec) -> Result<Outcome, CliError> {
    let rep = parity_verdicts(spec)?;
    let mut t = Table::new(&["truncation", "pairwise_x1", "pairwise_x2", "joint", "agreement"]);
    for m in 7..=spec.truncation {
        let s = ParityProcessSpec { truncation: m, tail: spec.tail[..m - 3].to_vec(), ..spec.clone() };
        let o = parity_analysis(&s)?;
        t.push(vec![m.to_string(), num(o.pairwise[0]), num(o.pairwise[1]), num(o.joint), num(o.agreement.0)]);
    }
    Ok(Outcome { report: rep, table: Some(t) })
}

pub fn shift_cmd(spec: &ThetaShiftSpec) -> Result<Outcome, CliError> {
    match spec.base {
        ShiftBase::Iid => {
            let rep = theta_shift_verdicts(spec)?;
            let mut t = Table::new(&["conditioners", "information", "overlap", "cond_cov"]);
            for s in theta_shift_trace(spec)? {
                t.push(vec![s.conditioners.to_string(), num(s.information), num(s.overlap), num(s.cond_cov)]);
            }
            Ok(Outcome { report: rep, table: Some(t) })
        }
        ShiftBase::MovingAverage { .. } => {
            let rep = ma_shift_verdicts(spec)?;
            let mut t = Table::new(&["start", "head_cov", "posterior_variance"]);
            for s in tail_trace(spec)? {
                t.push(vec![s.start.to_string(), num(s.head_cov), num(s.posterior_variance)]);
            }
            Ok(Outcome { report: rep, table: Some(t) })
        }
    }
}

pub fn merge(reports: &[DiagnosticReport]) -> Result<Outcome, CliError> {
    Ok(Outcome::plain(DiagnosticReport::merge(reports)?))
}
