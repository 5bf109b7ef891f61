use std::path::PathBuf;

use num_complex::Complex64;

use qcwork::classical::{cf_classical_closed, cf_classical_mc, classical_work_moments, gong_jarzynski_check};
use qcwork::operators::{build_hamiltonian, displaced_thermal};
use qcwork::semiclassical::{fig1_table, hbar_scan_grid, Fig1Row};
use qcwork::wigner::{angular_average, angular_variance, dephase, wigner_transform, PhaseGrid};
use qcwork::workstats::{jarzynski_check, WorkDefinition, WorkProblem, DEFAULT_MERGE_FACTOR};

use crate::config::RunConfig;
use crate::output::{write_field, write_table, Cell, Table};
use crate::CliError;

const QUANTUM: [WorkDefinition; 3] = [WorkDefinition::Tpm, WorkDefinition::Fcs, WorkDefinition::Mh];
const JARZYNSKI_TOL: f64 = 1e-8;
const NEGATIVE_WEIGHT: f64 = -1e-12;
const DEPHASING_TOL: f64 = 1e-4;
const COLLAPSE_TOL: f64 = 1e-10;

type Written = Result<Vec<PathBuf>, CliError>;

fn pairwise_spread(cfs: &[qcwork::workstats::CharacteristicSamples]) -> Result<f64, CliError> {
    let mut worst = 0.0_f64;
    for i in 0..cfs.len() {
        for j in i + 1..cfs.len() {
            worst = worst.max(cfs[i].max_difference(&cfs[j])?);
        }
    }
    Ok(worst)
}

pub fn cf(cfg: &RunConfig) -> Written {
    let p = &cfg.protocol;
    let problem = WorkProblem::for_protocol(p, cfg.dimension(), cfg.steps)?;
    let etas = cfg.etas();
    let mut table = Table::new("cf/1", &["eta", "re", "im", "definition"]);
    let mut quantum = Vec::new();
    for d in QUANTUM {
        let cf = problem.characteristic(d, &etas)?;
        for (&eta, z) in cf.etas.iter().zip(&cf.values) {
            table.push(vec![eta.into(), z.re.into(), z.im.into(), d.as_str().into()]);
        }
        quantum.push(cf);
    }
    let classical = cf_classical_closed(&etas, p)?;
    for (&eta, z) in classical.etas.iter().zip(&classical.values) {
        table.push(vec![eta.into(), z.re.into(), z.im.into(), WorkDefinition::Classical.as_str().into()]);
    }
    table.summarize("dim", problem.dim());
    table.summarize("max_pairwise_quantum_deviation", pairwise_spread(&quantum)?);
    Ok(vec![write_table(cfg, "cf", &table)?])
}

pub fn dist(cfg: &RunConfig, definition: Option<WorkDefinition>) -> Written {
    let p = &cfg.protocol;
    if definition == Some(WorkDefinition::Classical) {
        return Err(CliError::Config("dist needs a quantum definition (tpm, fcs or mh)".into()));
    }
    let problem = WorkProblem::for_protocol(p, cfg.dimension(), cfg.steps)?;
    let tol = DEFAULT_MERGE_FACTOR * p.hbar * p.omega;
    let defs: Vec<WorkDefinition> = definition.map_or_else(|| QUANTUM.to_vec(), |d| vec![d]);
    let mut written = Vec::new();
    for d in defs {
        let q = problem.quasi_distribution(d, tol)?;
        let mut table = Table::new("dist/1", &["work", "weight", "definition"]);
        for (&w, &x) in q.support.iter().zip(&q.weights) {
            table.push(vec![w.into(), x.into(), d.as_str().into()]);
        }
        table.summarize("weight_sum", q.total_weight());
        table.summarize("min_weight", q.min_weight());
        table.summarize("negative_count", q.weights.iter().filter(|&&w| w < NEGATIVE_WEIGHT).count());
        table.summarize("negative_threshold", NEGATIVE_WEIGHT);
        table.summarize("negativity", q.negativity());
        table.summarize("merge_tol", tol);
        table.summarize("imag_residual", q.max_imag_residual);
        written.push(write_table(cfg, &format!("dist_{}", d.as_str()), &table)?);
    }
    Ok(written)
}

/// `Φ(−η) = conj Φ(η)` holds at every ℏ and survives the linear fit, so a
/// symmetric grid only needs its non-negative half.
fn fig1_rows(cfg: &RunConfig) -> Result<Vec<Fig1Row>, CliError> {
    let etas = cfg.etas();
    let n = etas.len();
    let symmetric = (0..n).all(|i| etas[i] == -etas[n - 1 - i]);
    if !symmetric {
        return Ok(fig1_table(&cfg.protocol, &etas, &cfg.scan)?);
    }
    let half: Vec<f64> = etas[n / 2..].to_vec();
    let rows = fig1_table(&cfg.protocol, &half, &cfg.scan)?;
    let mirror = |r: &Fig1Row| {
        let mut m = r.clone();
        m.eta = -r.eta;
        m.classical = r.classical.conj();
        m.phi0 = r.phi0.conj();
        m.fcs_second_order = r.fcs_second_order.conj();
        m.mh_second_order = r.mh_second_order.conj();
        m.phi2.eta = -r.eta;
        m.phi2.phi2_fcs = r.phi2.phi2_fcs.conj();
        m.phi2.phi2_mh = r.phi2.phi2_mh.conj();
        m.phi2.difference = r.phi2.difference.conj();
        m
    };
    let skip = usize::from(n % 2 == 1);
    let mut out: Vec<Fig1Row> = rows[skip..].iter().rev().map(mirror).collect();
    out.extend(rows);
    Ok(out)
}

pub fn fig1(cfg: &RunConfig) -> Written {
    let rows = fig1_rows(cfg)?;
    let columns = ["eta", "classical", "phi0", "fcs_second_order", "mh_second_order"];
    let mut written = Vec::new();
    for (name, part) in [("fig1_real", 0usize), ("fig1_imag", 1)] {
        let pick = |z: Complex64| if part == 0 { z.re } else { z.im };
        let mut table = Table::new("fig1/1", &columns);
        for r in &rows {
            table.push(vec![
                r.eta.into(),
                pick(r.classical).into(),
                pick(r.phi0).into(),
                pick(r.fcs_second_order).into(),
                pick(r.mh_second_order).into(),
            ]);
        }
        written.push(write_table(cfg, name, &table)?);
    }
    let mut split = Table::new(
        "phi2/1",
        &["eta", "fcs_re", "fcs_im", "mh_re", "mh_im", "difference", "uncertainty", "significant"],
    );
    for r in &rows {
        let s = &r.phi2;
        split.push(vec![
            r.eta.into(),
            s.phi2_fcs.re.into(),
            s.phi2_fcs.im.into(),
            s.phi2_mh.re.into(),
            s.phi2_mh.im.into(),
            s.difference.norm().into(),
            s.uncertainty.into(),
            s.significant.into(),
        ]);
    }
    split.summarize("significant_count", rows.iter().filter(|r| r.phi2.significant).count());
    written.push(write_table(cfg, "fig1_phi2", &split)?);
    Ok(written)
}

pub fn scan_hbar(cfg: &RunConfig) -> Written {
    let etas = cfg.etas();
    let scans = hbar_scan_grid(&etas, &cfg.protocol, &[WorkDefinition::Fcs, WorkDefinition::Mh], &cfg.scan)?;
    let mut samples = Table::new("scan-samples/1", &["eta", "definition", "hbar", "dim", "re", "im"]);
    let mut fits = Table::new("scan-fit/1", &["eta", "definition", "order", "re", "im", "uncertainty", "residual"]);
    for s in &scans {
        for ((&h, &dim), z) in s.hbars.iter().zip(&s.dims).zip(&s.values) {
            samples.push(vec![s.eta.into(), s.definition.as_str().into(), h.into(), dim.into(), z.re.into(), z.im.into()]);
        }
        for k in 0..s.fit.coefficients.len() {
            let c = s.coefficient(k);
            fits.push(vec![
                s.eta.into(),
                s.definition.as_str().into(),
                k.into(),
                c.re.into(),
                c.im.into(),
                s.uncertainty(k).into(),
                s.residual().into(),
            ]);
        }
    }
    Ok(vec![write_table(cfg, "scan_samples", &samples)?, write_table(cfg, "scan_fit", &fits)?])
}

pub fn jarzynski(cfg: &RunConfig) -> Written {
    let p = &cfg.protocol;
    let rho = displaced_thermal(p, cfg.dimension())?;
    let mut table = Table::new(
        "jarzynski/1",
        &["definition", "lhs", "rhs", "delta_f", "discrepancy", "tolerance", "pass"],
    );
    let mut all = true;
    for d in QUANTUM {
        let r = jarzynski_check(&rho, p, d, cfg.steps)?;
        let pass = r.discrepancy < JARZYNSKI_TOL;
        all &= pass;
        table.push(vec![
            d.as_str().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.delta_f.into(),
            r.discrepancy.into(),
            JARZYNSKI_TOL.into(),
            pass.into(),
        ]);
    }
    let c = gong_jarzynski_check(p, cfg.samples, cfg.seed)?;
    let tol = 3.0 * c.lhs_stderr;
    let pass = c.sigma_deviation() < 3.0;
    all &= pass;
    table.push(vec![
        WorkDefinition::Classical.as_str().into(),
        c.report.lhs.into(),
        c.report.rhs.into(),
        c.report.delta_f.into(),
        c.report.discrepancy.into(),
        tol.into(),
        pass.into(),
    ]);
    table.summarize("dim", rho.dim());
    table.summarize("classical_stderr", c.lhs_stderr);
    table.summarize("classical_sigma", c.sigma_deviation());
    if let Some(w) = &c.warning {
        table.summarize("classical_warning", w.as_str());
    }
    table.summarize("all_pass", all);
    let path = write_table(cfg, "jarzynski", &table)?;
    if !all {
        return Err(CliError::Check(format!("Jarzynski check failed; see {}", path.display())));
    }
    Ok(vec![path])
}

pub fn classical(cfg: &RunConfig) -> Written {
    let p = &cfg.protocol;
    let etas = cfg.etas();
    let closed = cf_classical_closed(&etas, p)?;
    let mc = cf_classical_mc(&etas, p, cfg.samples, cfg.seed)?;
    let mut table = Table::new("classical/1", &["eta", "re", "im", "stderr_re", "stderr_im", "source"]);
    for (&eta, z) in closed.etas.iter().zip(&closed.values) {
        table.push(vec![eta.into(), z.re.into(), z.im.into(), 0.0.into(), 0.0.into(), "closed".into()]);
    }
    for (i, (&eta, z)) in mc.samples.etas.iter().zip(&mc.samples.values).enumerate() {
        table.push(vec![
            eta.into(),
            z.re.into(),
            z.im.into(),
            mc.stderr_re[i].into(),
            mc.stderr_im[i].into(),
            "monte_carlo".into(),
        ]);
    }
    let (mean, var) = classical_work_moments(p);
    table.summarize("mean_work", mean);
    table.summarize("work_variance", var);
    table.summarize("mc_max_sigma", mc.max_sigma_deviation(&closed));
    Ok(vec![write_table(cfg, "classical", &table)?])
}

pub fn measure(cfg: &RunConfig) -> Written {
    let p = &cfg.protocol;
    let dim = cfg.dimension();
    let rho = displaced_thermal(p, dim)?;
    let dephased = dephase(&rho, &build_hamiltonian(p, 0.0, dim)?)?;
    let grid = PhaseGrid::centered(p, cfg.grid_half_width, cfg.grid_points)?;
    let before = wigner_transform(&rho, &grid, p)?;
    let after = wigner_transform(&dephased, &grid, p)?;
    let average = angular_average(&before, p)?;
    let discrepancy = after.linf_distance(&average)?;
    let change = after.linf_distance(&before)?;
    let variance = angular_variance(&dephased, p, cfg.grid_half_width * 0.75, 24);

    let problem = WorkProblem::for_state(&dephased, p, cfg.steps)?;
    let etas = cfg.etas();
    let cfs = QUANTUM
        .iter()
        .map(|&d| problem.characteristic(d, &etas))
        .collect::<qcwork::Result<Vec<_>>>()?;
    let collapse = pairwise_spread(&cfs)?;

    let mut written = vec![
        write_field(cfg, "wigner_before", &before)?,
        write_field(cfg, "wigner_dephased", &after)?,
        write_field(cfg, "wigner_average", &average)?,
    ];
    let mut table = Table::new("measure/1", &["quantity", "value", "tolerance"]);
    table.push(vec!["linf_dephased_vs_average".into(), discrepancy.into(), DEPHASING_TOL.into()]);
    table.push(vec!["linf_before_vs_dephased".into(), change.into(), Cell::Num(0.0)]);
    table.push(vec!["angular_variance_dephased".into(), variance.into(), 1e-8.into()]);
    table.push(vec!["dephased_cf_max_pairwise_deviation".into(), collapse.into(), COLLAPSE_TOL.into()]);
    table.push(vec!["integral_before".into(), before.integral().into(), Cell::Num(1.0)]);
    table.push(vec!["integral_average".into(), average.integral().into(), Cell::Num(1.0)]);
    table.summarize("dim", dim);
    written.push(write_table(cfg, "measure", &table)?);
    if collapse >= COLLAPSE_TOL {
        return Err(CliError::Check(format!("dephased CFs differ by {collapse:.3e}")));
    }
    if discrepancy >= DEPHASING_TOL {
        return Err(CliError::Accuracy(format!(
            "dephasing identity off by {discrepancy:.3e} on this grid; raise grid_points"
        )));
    }
    Ok(written)
}
