use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::Serialize;

use pinlab_core::annealed::{
    annealed_critical_point, annealed_critical_point_tilted_form, annealed_free_energy, free_energy_from,
    AnnealedCoefficients, DEFAULT_N_MAX,
};
use pinlab_core::disorder::{sample, DisorderLaw};
use pinlab_core::fractional::{certify_gap, CertifyBudget, Verdict};
use pinlab_core::gradient::{
    adjusted_partition, quenched_free_energy_mc, raw_partition_eps0, Endpoint, FreeEnergyNormalization,
    GradientParams,
};
use pinlab_core::laplacian::{
    annealed_sandwich, det_laplacian_pinned, free_energy_from_table, laplacian_critical_point,
    laplacian_integer_matrix, laplacian_partition_exact, laplacian_quenched_fe_mc, second_order_probe,
    HomogeneousTable, LaplacianParams, Normalization,
};
use pinlab_core::numerics::bareiss_determinant;
use pinlab_core::verify::verify_lemmas;
use pinlab_core::{Bracketed, Error};

use crate::record::{Quantity, RunRecord};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("usage error: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Inconsistent(_) | Error::NotPositiveDefinite { .. }) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

/// The record and whether a check inside it failed (exit status 1).
type Outcome = Result<(RunRecord, bool), CliError>;

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Run the determinant identity and monomial structure suites.
    VerifyLemmas(VerifyArgs),
    /// Gradient (tridiagonal) model.
    #[command(subcommand)]
    Gradient(GradientCommand),
    /// Laplacian (pentadiagonal) model with Gaussian charges.
    #[command(subcommand)]
    Laplacian(LaplacianCommand),
    /// Sweep a (beta, eps) grid and write one CSV row per point.
    PhaseDiagram(PhaseArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Largest matrix dimension in the random identity checks.
    #[arg(long, default_value_t = 12)]
    pub max_n: usize,
    #[arg(long, default_value_t = 500)]
    pub cases: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum GradientCommand {
    /// ln Z_N for one charge sequence.
    Partition(GradientArgs),
    /// Quenched Monte Carlo and annealed free energies.
    FreeEnergy(GradientArgs),
    /// Annealed critical point, and F^a when a reward is given.
    Annealed(AnnealedArgs),
    /// Fractional-moment gap certificate.
    Certify(CertifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum EndpointArg {
    Pinned,
    Free,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum FeNormArg {
    Ratio,
    Adjusted,
}

impl From<FeNormArg> for FreeEnergyNormalization {
    fn from(n: FeNormArg) -> Self {
        match n {
            FeNormArg::Ratio => FreeEnergyNormalization::Ratio,
            FeNormArg::Adjusted => FreeEnergyNormalization::Adjusted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum LapNormArg {
    PerContact,
    WithBoundary,
}

impl From<LapNormArg> for Normalization {
    fn from(n: LapNormArg) -> Self {
        match n {
            LapNormArg::PerContact => Normalization::PerContact,
            LapNormArg::WithBoundary => Normalization::WithBoundary,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct Reward {
    #[arg(long, conflicts_with = "delta_over_annealed")]
    pub eps: Option<f64>,
    /// Sets eps = eps_c^a(beta) e^delta.
    #[arg(long)]
    pub delta_over_annealed: Option<f64>,
}

impl Reward {
    fn resolve(&self, beta: f64, d: u32) -> Result<Option<f64>, CliError> {
        match (self.eps, self.delta_over_annealed) {
            (Some(e), _) => Ok(Some(e)),
            (None, Some(delta)) => Ok(Some(annealed_critical_point(beta, d)?.value * delta.exp())),
            (None, None) => Ok(None),
        }
    }

    fn require(&self, beta: f64, d: u32) -> Result<f64, CliError> {
        self.resolve(beta, d)?.ok_or_else(|| CliError::Usage("one of --eps or --delta-over-annealed is required".into()))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GradientArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub beta: f64,
    #[command(flatten)]
    pub reward: Reward,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replica index of the charge sequence used by `partition`.
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
    #[arg(long, value_enum, default_value_t = EndpointArg::Pinned)]
    pub endpoint: EndpointArg,
    #[arg(long, value_enum, default_value_t = FeNormArg::Ratio)]
    pub normalization: FeNormArg,
}

#[derive(Debug, Args, Serialize)]
pub struct AnnealedArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub beta: f64,
    #[command(flatten)]
    pub reward: Reward,
}

#[derive(Debug, Args, Serialize)]
pub struct CertifyArgs {
    #[arg(long)]
    pub d: u32,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub c: f64,
    /// Monte Carlo replicas per fractional-moment entry.
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Entries up to this index are enumerated exactly.
    #[arg(long, default_value_t = 14)]
    pub exact_cutoff: usize,
    #[arg(long, default_value_t = 8000)]
    pub max_k: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_truncation: usize,
    /// Allow d = 3, 4 with a relaxed choice of gamma.
    #[arg(long)]
    pub experimental: bool,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum LaplacianCommand {
    /// Determinant of the (pinned) Laplacian matrix.
    Det(LapDetArgs),
    /// ln of the adjusted partition function for one charge sequence.
    Partition(LapPartitionArgs),
    /// Free energy of the nonrandom model, optional second-order probe and
    /// quenched estimate.
    FreeEnergy(LapFreeEnergyArgs),
    /// Homogeneous lower and upper bounds around the Monte Carlo mean.
    Sandwich(LapSandwichArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct LapDetArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',')]
    pub pinned: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LapPartitionArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub replica: u64,
    #[arg(long, value_enum, default_value_t = LapNormArg::PerContact)]
    pub normalization: LapNormArg,
}

#[derive(Debug, Args, Serialize)]
pub struct LapFreeEnergyArgs {
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    /// Largest n in the exact no-double-return table.
    #[arg(long, default_value_t = 23)]
    pub n_max: usize,
    /// Offsets delta for g(delta) = f(eps_c e^delta)(-ln delta)/delta.
    #[arg(long, value_delimiter = ',')]
    pub probe: Vec<f64>,
    /// With beta > 0, also estimate (1/N) E ln Z at this N.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct LapSandwichArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ModelArg {
    Gradient,
    Laplacian,
}

#[derive(Debug, Args, Serialize)]
pub struct PhaseArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, default_value_t = 3)]
    pub d: u32,
    #[arg(long, value_delimiter = ',', required = true)]
    pub betas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CSV destination; rows are also kept in the record's details.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn echo<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("flag structs serialize")
}

pub fn run(cmd: &Command) -> Outcome {
    match cmd {
        Command::VerifyLemmas(a) => verify(a),
        Command::Gradient(g) => match g {
            GradientCommand::Partition(a) => gradient_partition(a),
            GradientCommand::FreeEnergy(a) => gradient_free_energy(a),
            GradientCommand::Annealed(a) => gradient_annealed(a),
            GradientCommand::Certify(a) => gradient_certify(a),
        },
        Command::Laplacian(l) => match l {
            LaplacianCommand::Det(a) => laplacian_det(a),
            LaplacianCommand::Partition(a) => laplacian_partition(a),
            LaplacianCommand::FreeEnergy(a) => laplacian_free_energy(a),
            LaplacianCommand::Sandwich(a) => laplacian_sandwich(a),
        },
        Command::PhaseDiagram(a) => phase_diagram(a),
    }
}

fn verify(a: &VerifyArgs) -> Outcome {
    if a.max_n == 0 {
        return Err(CliError::Usage("--max-n must be positive".into()));
    }
    let reports = verify_lemmas(a.max_n, a.cases, a.seed)?;
    let mut rec = RunRecord::new("verify-lemmas", echo(a), Some(a.seed));
    let mut failed = false;
    for r in &reports {
        let key = r.name.replace(' ', "_");
        rec.put(&format!("{key}_max_rel_err"), Quantity::exact(r.max_rel_err));
        rec.put(&format!("{key}_cases"), Quantity::exact(r.cases as f64));
        if let Some(c) = &r.counterexample {
            eprintln!("{} failed: {c}", r.name);
            failed = true;
        }
    }
    rec.details = Some(serde_json::to_value(&reports).expect("reports serialize"));
    Ok((rec, failed))
}

fn gradient_params(a: &GradientArgs) -> Result<GradientParams, CliError> {
    let eps = a.reward.require(a.beta, a.d)?;
    let endpoint = match a.endpoint {
        EndpointArg::Pinned => Endpoint::Pinned,
        EndpointArg::Free => Endpoint::Free,
    };
    let p = GradientParams { d: a.d, beta: a.beta, eps, n: a.n, endpoint };
    p.validate()?;
    Ok(p)
}

fn gradient_partition(a: &GradientArgs) -> Outcome {
    let p = gradient_params(a)?;
    let omega = sample(DisorderLaw::Rademacher, p.n, a.seed, a.replica);
    let mut rec = RunRecord::new("gradient partition", echo(a), Some(a.seed));
    rec.put("eps", Quantity::exact(p.eps));
    rec.put("ln_z", Quantity::exact(adjusted_partition(&omega, &p)?.ln()));
    rec.put("ln_z_raw_eps0", Quantity::exact(raw_partition_eps0(&omega, &p)?.ln()));
    Ok((rec, false))
}

fn gradient_free_energy(a: &GradientArgs) -> Outcome {
    let p = gradient_params(a)?;
    let q = quenched_free_energy_mc(&p, a.samples, a.seed, a.normalization.into())?;
    let mut rec = RunRecord::new("gradient free-energy", echo(a), Some(a.seed));
    rec.put("eps", Quantity::exact(p.eps));
    rec.put("f_quenched", Quantity::estimate(q));
    rec.put("f_annealed", Quantity::bracket(annealed_free_energy(p.beta, p.eps, p.d)?));
    Ok((rec, false))
}

fn gradient_annealed(a: &AnnealedArgs) -> Outcome {
    let mut rec = RunRecord::new("gradient annealed", echo(a), None);
    rec.put("eps_c_annealed", Quantity::bracket(annealed_critical_point(a.beta, a.d)?));
    if a.d >= 3 {
        rec.put("eps_c_annealed_tilted", Quantity::bracket(annealed_critical_point_tilted_form(a.beta, a.d)?));
    }
    if let Some(eps) = a.reward.resolve(a.beta, a.d)? {
        rec.put("eps", Quantity::exact(eps));
        rec.put("f_annealed", Quantity::bracket(annealed_free_energy(a.beta, eps, a.d)?));
    }
    Ok((rec, false))
}

fn gradient_certify(a: &CertifyArgs) -> Outcome {
    let budget = CertifyBudget {
        exact_s_cutoff: a.exact_cutoff,
        mc_samples: a.samples,
        seed: a.seed,
        max_k: a.max_k,
        n_truncation: a.n_truncation,
        experimental: a.experimental,
    };
    let cert = certify_gap(a.beta, a.d, a.c, budget)?;
    let mut rec = RunRecord::new("gradient certify", echo(a), Some(a.seed));
    rec.put("delta", Quantity::exact(cert.delta));
    rec.put("gamma", Quantity::exact(cert.gamma));
    rec.put("eps_c_annealed", Quantity::bracket(cert.eps_c_annealed));
    if let Some(k) = cert.k {
        rec.put("k", Quantity::exact(k as f64));
    }
    for (name, v) in [("rho", cert.rho_value), ("rho_tail", cert.rho_tail_bound), ("mc_inflation", cert.mc_inflation)] {
        if let Some(v) = v {
            rec.put(name, Quantity::exact(v));
        }
    }
    rec.put("certified", Quantity::exact(if cert.verdict == Verdict::Certified { 1.0 } else { 0.0 }));
    rec.details = Some(serde_json::to_value(&cert).expect("certificate serializes"));
    Ok((rec, false))
}

fn check_pinned(n: usize, pinned: &[usize]) -> Result<(), CliError> {
    if let Some(p) = pinned.iter().find(|&&p| p == 0 || p >= n) {
        return Err(CliError::Usage(format!("pinned site {p} outside 1..{n}")));
    }
    Ok(())
}

fn laplacian_det(a: &LapDetArgs) -> Outcome {
    LaplacianParams::new(a.beta, 0.0, a.n).validate()?;
    check_pinned(a.n, &a.pinned)?;
    let mut rec = RunRecord::new("laplacian det", echo(a), Some(a.seed));
    let det = if a.beta == 0.0 {
        // integer entries: exact fraction-free elimination
        let full = laplacian_integer_matrix(a.n);
        let kept: Vec<usize> = (0..a.n - 1).filter(|i| !a.pinned.contains(&(i + 1))).collect();
        let m: Vec<Vec<i64>> = kept.iter().map(|&i| kept.iter().map(|&j| full[i][j]).collect()).collect();
        if m.is_empty() { 1.0 } else { bareiss_determinant(&m)? as f64 }
    } else {
        let omega = sample(DisorderLaw::StandardNormal, a.n + 1, a.seed, a.replica);
        let b: Vec<f64> = omega.values.iter().map(|w| (a.beta * w).exp()).collect();
        det_laplacian_pinned(&b, &a.pinned)?
    };
    rec.put("det", Quantity::exact(det));
    Ok((rec, false))
}

fn laplacian_partition(a: &LapPartitionArgs) -> Outcome {
    let params = LaplacianParams { beta: a.beta, eps: a.eps, n: a.n, normalization: a.normalization.into() };
    params.validate()?;
    let omega = sample(DisorderLaw::StandardNormal, a.n + 1, a.seed, a.replica);
    let mut rec = RunRecord::new("laplacian partition", echo(a), Some(a.seed));
    rec.put("ln_z", Quantity::exact(laplacian_partition_exact(&omega.values, &params)?.ln()));
    Ok((rec, false))
}

fn laplacian_free_energy(a: &LapFreeEnergyArgs) -> Outcome {
    if a.eps.is_empty() && a.probe.is_empty() {
        return Err(CliError::Usage("give --eps and/or --probe".into()));
    }
    let table = HomogeneousTable::new(a.n_max)?;
    let mut rec = RunRecord::new("laplacian free-energy", echo(a), Some(a.seed));
    rec.put("eps_c", Quantity::bracket(laplacian_critical_point(&table)?));
    for (i, &e) in a.eps.iter().enumerate() {
        rec.put(&format!("f_{i}"), Quantity::bracket(free_energy_from_table(&table, e)?));
        if a.beta > 0.0 {
            let p = LaplacianParams::new(a.beta, e, a.n);
            rec.put(&format!("f_quenched_{i}"), Quantity::estimate(laplacian_quenched_fe_mc(&p, a.samples, a.seed)?));
        }
    }
    if !a.probe.is_empty() {
        let probe = second_order_probe(&a.probe, a.n_max)?;
        for (i, g) in probe.g.iter().enumerate() {
            rec.put(&format!("g_{i}"), Quantity::exact(*g));
        }
        rec.put("g_variation", Quantity::exact(probe.variation));
        rec.details = Some(serde_json::to_value(&probe).expect("probe serializes"));
    }
    Ok((rec, false))
}

fn laplacian_sandwich(a: &LapSandwichArgs) -> Outcome {
    let rows = annealed_sandwich(a.beta, &a.eps, a.n, a.samples, a.seed)?;
    let mut rec = RunRecord::new("laplacian sandwich", echo(a), Some(a.seed));
    for (i, s) in rows.iter().enumerate() {
        rec.put(&format!("lower_{i}"), Quantity::exact(s.lower));
        rec.put(&format!("mean_{i}"), Quantity::estimate(s.mean));
        rec.put(&format!("upper_{i}"), Quantity::exact(s.upper));
    }
    let holds: Vec<bool> = rows.iter().map(|s| s.holds(3.0)).collect();
    rec.details = Some(serde_json::json!({ "rows": rows, "holds_at_3se": holds }));
    Ok((rec, false))
}

#[derive(Debug, Serialize)]
pub struct PhaseRow {
    pub beta: f64,
    pub eps: f64,
    pub f_annealed: f64,
    pub f_annealed_lower: f64,
    pub f_annealed_upper: f64,
    pub f_quenched: f64,
    pub f_quenched_se: f64,
    pub eps_c_annealed_lower: Option<f64>,
    pub eps_c_annealed_upper: Option<f64>,
}

fn phase_diagram(a: &PhaseArgs) -> Outcome {
    if a.betas.is_empty() || a.eps.is_empty() {
        return Err(CliError::Usage("empty grid".into()));
    }
    let mut rows = Vec::new();
    match a.model {
        ModelArg::Gradient => {
            for &beta in &a.betas {
                let coeffs = AnnealedCoefficients::new(beta, a.d, DEFAULT_N_MAX)?;
                let eps_c = Some(annealed_critical_point(beta, a.d)?);
                for &eps in &a.eps {
                    let p = GradientParams::pinned(a.d, beta, eps, a.n);
                    p.validate()?;
                    let fa = if eps == 0.0 { Bracketed::exact(0.0) } else { free_energy_from(&coeffs, eps) };
                    let q = quenched_free_energy_mc(&p, a.samples, a.seed, FreeEnergyNormalization::Ratio)?;
                    rows.push(PhaseRow {
                        beta,
                        eps,
                        f_annealed: fa.value,
                        f_annealed_lower: fa.lower,
                        f_annealed_upper: fa.upper,
                        f_quenched: q.mean,
                        f_quenched_se: q.std_error,
                        eps_c_annealed_lower: eps_c.map(|b| b.lower),
                        eps_c_annealed_upper: eps_c.map(|b| b.upper),
                    });
                }
            }
        }
        ModelArg::Laplacian => {
            // finite-N annealed value from the Monte Carlo mean, bracketed by
            // the homogeneous bounds
            let eps_c0 = laplacian_critical_point(&HomogeneousTable::new(23)?)?;
            for &beta in &a.betas {
                let sandwich = annealed_sandwich(beta, &a.eps, a.n, a.samples, a.seed)?;
                for s in sandwich {
                    let p = LaplacianParams::new(beta, s.eps, a.n);
                    let q = laplacian_quenched_fe_mc(&p, a.samples, a.seed)?;
                    let nf = a.n as f64;
                    rows.push(PhaseRow {
                        beta,
                        eps: s.eps,
                        f_annealed: s.mean.mean.ln() / nf,
                        f_annealed_lower: s.lower.ln() / nf,
                        f_annealed_upper: s.upper.ln() / nf,
                        f_quenched: q.mean,
                        f_quenched_se: q.std_error,
                        eps_c_annealed_lower: (beta == 0.0).then_some(eps_c0.lower),
                        eps_c_annealed_upper: (beta == 0.0).then_some(eps_c0.upper),
                    });
                }
            }
        }
    }
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for r in &rows {
            w.serialize(r).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut rec = RunRecord::new("phase-diagram", echo(a), Some(a.seed));
    rec.put("rows", Quantity::exact(rows.len() as f64));
    rec.details = Some(serde_json::json!({ "rows": rows }));
    Ok((rec, false))
}
