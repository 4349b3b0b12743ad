//! Evidence for the two sufficient conditions on a covariance model:
//! uniform eigenvalue bounds on finite blocks, and finiteness of the
//! weighted sums of the decay recursion.

use crate::error::Result;
use crate::gaussian::{
    default_envelope, eigen_bounds, fourier_symbol_min, g_recursion, linalg, symbol_order,
    CovarianceModel, DecayEnvelope, DEFAULT_SIZE_CAP, LEVELS,
};
use crate::report::{DiagnosticReport, Section, Verdict, Witness};

/// Eigenvalues at or below this count as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const SYMBOL_GRID: usize = 2048;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub sizes: Vec<usize>,
    /// Falls back to [`default_envelope`] when absent.
    pub envelope: Option<DecayEnvelope>,
    pub cutoff: usize,
    pub eps: f64,
    pub tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { sizes: vec![10, 20, 40], envelope: None, cutoff: 200, eps: 0.5, tol: SANDWICH_TOL }
    }
}

/// Where a certified eigenvalue floor comes from, if anywhere.
fn eigen_floor(m: &CovarianceModel, largest: usize) -> Result<Option<(f64, String)>> {
    Ok(match m {
        CovarianceModel::Lattice { dim, alpha, scale } if *alpha == 2.0 => {
            let s = fourier_symbol_min(*dim, *scale, SYMBOL_GRID, symbol_order(*scale))?;
            s.certified.then(|| (s.m_f, "certified symbol minimum".to_string()))
        }
        CovarianceModel::Lattice { dim, alpha, scale } => {
            // Gershgorin over the whole lattice, summed shell by shell
            let s = crate::lattice::SpiralIndex::new(*dim);
            let mut off = 0.0;
            let mut rho = 1usize;
            loop {
                let shell: f64 = (s.cube_len(rho - 1) + 1..=s.cube_len(rho))
                    .map(|k| (-crate::lattice::euclidean(&s.coord(1), &s.coord(k)).powf(*alpha) / scale).exp())
                    .sum();
                off += shell;
                let count = (2 * rho + 3) as f64;
                let next = 2.0 * *dim as f64 * count.powi(*dim as i32 - 1)
                    * (-((rho + 1) as f64).powf(*alpha) / scale).exp();
                if shell < 1e-16 && next < 1e-16 {
                    // remaining shells decay faster than geometrically
                    off += 2.0 * next;
                    break;
                }
                rho += 1;
                if rho > 10_000 {
                    return Ok(None);
                }
            }
            let floor = 1.0 - off;
            (floor > 0.0).then(|| (floor, "row-sum dominance".to_string()))
        }
        CovarianceModel::DiagDominant { epsilon, .. } => {
            Some((*epsilon, "uniform diagonal dominance".to_string()))
        }
        CovarianceModel::Ar { order, delta, .. } => {
            // ||I - B||_1 ||I - B||_inf bounds the precision spectrum
            let n = *order as f64;
            let floor = 1.0 / ((1.0 + n * (1.0 - delta)) * (2.0 - delta));
            Some((floor, "precision row-sum bound".to_string()))
        }
        CovarianceModel::Explicit(x) => {
            let n = x.nrows().min(largest.max(x.nrows()));
            let (lo, _) = linalg::eigen_extremes(&x.view((0, 0), (n, n)).into_owned());
            (lo > SINGULAR_TOL).then(|| (lo, "full finite spectrum".to_string()))
        }
    })
}

/// Collects eigenvalue and decay evidence into a report. `Pass` means both
/// conditions are supported, `Fail` carries a witness block.
pub fn verify_conditions(m: &CovarianceModel, opts: &VerifyOptions) -> Result<DiagnosticReport> {
    let mut report = DiagnosticReport::new("gaussian-verify").with_tolerance(opts.tol);
    let mut sizes = opts.sizes.clone();
    if let Some(n) = m.len() {
        sizes.retain(|&s| s <= n);
        if sizes.is_empty() {
            sizes.push(n);
        }
    }
    sizes.sort_unstable();
    sizes.dedup();
    let largest = *sizes.last().unwrap_or(&1);
    let trace = eigen_bounds(m, &sizes, DEFAULT_SIZE_CAP.max(largest))?;

    let mut eig = Section::new("eigenvalue-bounds", "eigenvalue-condition", Verdict::Pass)
        .tolerance(crate::gaussian::INTERLACING_TOL);
    let mut witnesses = vec![];
    let mut singular = None;
    for r in &trace.records {
        witnesses.push(
            Witness::new(format!("size {}", r.size))
                .value("lambda_min", r.lambda_min)
                .value("lambda_max", r.lambda_max)
                .value("max_row_sum", r.max_row_sum),
        );
        if r.lambda_min <= SINGULAR_TOL && singular.is_none() {
            singular = Some(r.clone());
        }
    }
    eig = eig.witnesses(witnesses);
    if !trace.interlacing_ok || !trace.row_sum_ok {
        eig.verdict = Verdict::Fail;
        eig = eig.note("nested blocks violate interlacing or the row-sum ceiling");
    }
    if let Some(r) = &singular {
        eig.verdict = Verdict::Fail;
        eig = eig.note(format!("block of size {} is singular (lambda_min = {:e})", r.size, r.lambda_min));
    }
    report.push(eig);

    let lo = trace.records.iter().map(|r| r.lambda_min).fold(f64::INFINITY, f64::min);
    let floor = eigen_floor(m, largest)?;
    let mut fl = match &floor {
        Some((f, source)) => {
            let ok = lo >= f - opts.tol && lo > SINGULAR_TOL;
            let mut s = Section::new("eigenvalue-floor", "eigenvalue-condition", Verdict::from_bool(ok))
                .tolerance(opts.tol)
                .metric("floor", *f)
                .metric("observed_min", lo)
                .note(format!("floor from {source}"));
            if !ok {
                let r = trace.records.iter().find(|r| r.lambda_min < f - opts.tol || r.lambda_min <= SINGULAR_TOL);
                if let Some(r) = r {
                    s = s.witnesses(vec![Witness::new(format!("block 1..={}", r.size))
                        .value("lambda_min", r.lambda_min)
                        .value("floor", *f)]);
                }
            }
            s
        }
        None => {
            let v = if singular.is_some() { Verdict::Fail } else { Verdict::Inconclusive };
            Section::new("eigenvalue-floor", "eigenvalue-condition", v)
                .metric("observed_min", lo)
                .note("no certified floor for this model; finite blocks are evidence only")
        }
    };
    if let Some(r) = &singular {
        fl.verdict = Verdict::Fail;
        if fl.witnesses.is_empty() {
            fl = fl.witnesses(vec![Witness::new(format!("block 1..={}", r.size)).value("lambda_min", r.lambda_min)]);
        }
    }
    report.push(fl);

    if let CovarianceModel::Lattice { dim, alpha, scale } = m {
        if *alpha == 2.0 {
            let s = fourier_symbol_min(*dim, *scale, SYMBOL_GRID, symbol_order(*scale))?;
            let block = m.leading(largest)?;
            let mut ok = s.certified;
            let mut worst: Option<Witness> = None;
            for &size in &sizes {
                let ev = linalg::eigenvalues(&block.view((0, 0), (size, size)).into_owned());
                let (a, b) = (ev[0], ev[ev.len() - 1]);
                if a < s.m_f - opts.tol || b > s.big_m_f + opts.tol {
                    ok = false;
                    worst.get_or_insert(
                        Witness::new(format!("block 1..={size}")).value("lambda_min", a).value("lambda_max", b),
                    );
                }
            }
            let v = if !s.certified {
                Verdict::Inconclusive
            } else {
                Verdict::from_bool(ok)
            };
            let mut sec = Section::new("symbol-sandwich", "lattice-symbol-bounds", v)
                .tolerance(opts.tol)
                .metric("m_g", s.m_g)
                .metric("m_f", s.m_f)
                .metric("M_f", s.big_m_f)
                .metric("grid_n", s.grid_n as f64)
                .metric("order", s.order as f64)
                .metric("tail_bound", s.tail_bound);
            if let Some(w) = worst {
                sec = sec.witnesses(vec![w]);
            }
            if !s.certified {
                sec = sec.note("symbol minimum not certified positive at this resolution");
            }
            report.push(sec);
        }
    }

    let envelope = opts.envelope.clone().or_else(|| default_envelope(m));
    match envelope {
        None => report.push(
            Section::new("decay-recursion", "decay-condition", Verdict::Inconclusive)
                .note("no decay envelope is known for this model; supply one"),
        ),
        Some(env) => {
            let t = g_recursion(m, &env, opts.cutoff, opts.eps)?;
            let tabulated_finite = t.levels.iter().all(|l| l.iter().all(|x| x.is_finite()));
            let sums_finite = t.finite();
            let v = if !tabulated_finite {
                Verdict::Fail
            } else if sums_finite && t.monotone() {
                Verdict::Pass
            } else {
                Verdict::Inconclusive
            };
            let mut sec = Section::new("decay-recursion", "decay-condition", v)
                .metric("cutoff", t.cutoff as f64)
                .metric("eps", t.eps)
                .metric("levels", LEVELS as f64);
            for (n, b) in t.bounds.iter().enumerate() {
                sec = sec.metric(&format!("max_weighted_sum_{n}"), t.max_weighted(n));
                sec = sec.metric(&format!("envelope_c_{n}"), b.c).metric(&format!("envelope_r_{n}"), b.r);
            }
            if !sums_finite && tabulated_finite {
                sec = sec.note("tail certificate diverges; finiteness not established for this eps");
            }
            report.push(sec);
        }
    }

    if let CovarianceModel::Ar { delta, .. } = m {
        let block = m.leading(largest)?;
        let mut bound = 0.0;
        let mut ok = true;
        let mut witness = None;
        for n in 1..=largest {
            bound += (1.0 - delta).powi(2 * (n as i32 - 1));
            let v = block[(n - 1, n - 1)];
            if v > bound + 1e-10 {
                ok = false;
                witness.get_or_insert(Witness::new(format!("X_{n}")).value("var", v).value("bound", bound));
            }
        }
        let mut sec = Section::new("ar-variance", "autoregression-variance", Verdict::from_bool(ok))
            .tolerance(1e-10)
            .metric("limit", 1.0 / (1.0 - (1.0 - delta).powi(2)));
        if let Some(w) = witness {
            sec = sec.witnesses(vec![w]);
        }
        report.push(sec);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn singular_block_refuted() {
        let m = CovarianceModel::explicit(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        let opts = VerifyOptions { sizes: vec![3], ..Default::default() };
        let r = verify_conditions(&m, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(!r.section("eigenvalue-floor").unwrap().witnesses.is_empty());
    }

    #[test]
    fn identity_supported() {
        let r = verify_conditions(&CovarianceModel::identity(), &VerifyOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.to_json());
    }
}
