use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entrans::deterministic::{exhaustive_branches, plan_deterministic, run_plan};
use entrans::montecarlo::{estimate_success, sample_outcome, TrialStats};
use entrans::multicopy::{
    finalize_multicopy, plan_multicopy, MultiCopyOptions, MultiCopyPlan, MULTICOPY_MESSAGE_BITS,
};
use entrans::singlecopy::{transform_single_copy, Probability};
use entrans::statecore::{overlap, schmidt_decompose, BipartitePureState, SchmidtVector, ZERO_COEFF};
use entrans::verify::{run_all, VerifyOptions};
use entrans::ComplexMatrix;

use crate::report::{Check, Json};
use crate::statefile::load;
use crate::CliError;

const UNITARY_TOL: f64 = 1e-10;
const OVERLAP_TOL: f64 = 1e-9;
const GRAM_TOL: f64 = 1e-12;
const SIGMAS: f64 = 3.0;

#[derive(Parser, Debug)]
#[command(name = "entrans", version, about = "Plan, run and verify one-sided entanglement transformations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for trial execution. Does not affect results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write the JSON report, matrices included, to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a protocol and check its algebraic invariants.
    Plan(PlanArgs),
    /// Build a protocol, evaluate every branch and sample it.
    Run(RunArgs),
    /// Run the randomized invariant suites.
    Verify(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Optimal probabilistic conversion of one copy.
    Single,
    /// Deterministic conversion of one copy with a classical message.
    Det,
    /// Deterministic conversion of several copies.
    Multi,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Single => "single",
            Kind::Det => "det",
            Kind::Multi => "multi",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    pub kind: Kind,
    /// Input state file.
    pub input: PathBuf,
    /// Target state file.
    #[arg(required_unless_present = "me")]
    pub target: Option<PathBuf>,
    /// Use the maximally entangled state of Schmidt rank M as the target.
    #[arg(long = "ME", value_name = "M", conflicts_with = "target")]
    pub me: Option<usize>,
    /// Success probability for `single` (default: the optimum).
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of copies for `multi` (default: the minimum).
    #[arg(long)]
    pub copies: Option<usize>,
    /// Rescale input files to unit norm instead of rejecting them.
    #[arg(long)]
    pub normalize: bool,
    /// Override every deterministic check tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Include planned matrices in the printed report.
    #[arg(long)]
    pub matrices: bool,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub plan: PlanArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Largest local dimension drawn.
    #[arg(long, default_value_t = 6)]
    pub size_cap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add this to one entry of every planned unitary (self-test).
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
    /// Random instances per suite.
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
}

/// Everything a command produced, before rendering.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Json,
    pub sections: Vec<(String, Json)>,
    pub matrices: Option<Json>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self, with_matrices: bool) -> Json {
        let mut j = Json::obj([("command", self.command.clone())]);
        for (k, v) in &self.sections {
            j.push(k.clone(), v.clone());
        }
        if let (true, Some(m)) = (with_matrices, &self.matrices) {
            j.push("matrices", m.clone());
        }
        j.push("checks", Json::Arr(self.checks.iter().map(Check::to_json).collect()));
        j.push("verdict", if self.passed() { "PASS" } else { "FAIL" }.into());
        j
    }
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Plan(a) => transform(a, None),
        Command::Run(r) => transform(&r.plan, Some((r.seed, r.trials))),
        Command::Verify(v) => verify(v),
    }
}

struct Session<'a> {
    args: &'a PlanArgs,
    input: BipartitePureState,
    target: BipartitePureState,
    lambda: SchmidtVector,
    sigma: SchmidtVector,
}

impl Session<'_> {
    fn tol(&self, default: f64) -> f64 {
        self.args.tol.unwrap_or(default)
    }

    fn check(&self, name: &str, value: f64, default: f64) -> Check {
        Check::new(name, value, self.tol(default))
    }

    fn spectra(&self) -> [(&'static str, Json); 2] {
        [("lambda_sq", Json::nums(&self.lambda.squares())), ("sigma_sq", Json::nums(&self.sigma.squares()))]
    }
}

fn echo(a: &PlanArgs, verb: &str, run: Option<(u64, u64)>) -> Json {
    let path = |p: &Option<PathBuf>| Json::from(p.as_ref().map(|p| p.display().to_string()));
    let mut j = Json::obj([
        ("verb", verb.into()),
        ("kind", a.kind.name().into()),
        ("input", a.input.display().to_string().into()),
        ("target", path(&a.target)),
        ("ME", a.me.into()),
        ("p", a.p.into()),
        ("copies", a.copies.into()),
        ("normalize", a.normalize.into()),
        ("tol", a.tol.into()),
    ]);
    if let Some((seed, trials)) = run {
        j.push("seed", seed.into());
        j.push("trials", trials.into());
    }
    j
}

fn open(a: &PlanArgs) -> Result<(Session<'_>, Json), CliError> {
    if a.tol.is_some_and(|t| t.is_nan() || t < 0.0) {
        return Err(CliError::Invalid("--tol must be nonnegative".into()));
    }
    let src = load(&a.input)?;
    let input = src.file.to_state(a.normalize)?;
    let mut inputs = Json::obj([(
        "input",
        Json::obj([("sha256", src.sha256.into()), ("dims", Json::ints(&src.file.dims))]),
    )]);
    let target = match (&a.target, a.me) {
        (Some(path), None) => {
            let t = load(path)?;
            inputs.push("target", Json::obj([("sha256", t.sha256.into()), ("dims", Json::ints(&t.file.dims))]));
            t.file.to_state(a.normalize)?
        }
        (None, Some(m)) => {
            let (dm, dn) = (input.dim_a(), input.dim_b());
            let me = SchmidtVector::maximally_entangled(m, dm.min(dn))?;
            inputs.push("target", Json::obj([("ME", m.into())]));
            BipartitePureState::from_schmidt(&me, dm, dn)?
        }
        _ => return Err(CliError::Invalid("give exactly one of a target file or --ME".into())),
    };
    let lambda = schmidt_decompose(&input, ZERO_COEFF)?.coefficients();
    let sigma = schmidt_decompose(&target, ZERO_COEFF)?.coefficients();
    Ok((Session { args: a, input, target, lambda, sigma }, inputs))
}

fn transform(a: &PlanArgs, run: Option<(u64, u64)>) -> Result<Outcome, CliError> {
    let (s, inputs) = open(a)?;
    let verb = if run.is_some() { "run" } else { "plan" };
    let mut out = match a.kind {
        Kind::Single => single(&s, run)?,
        Kind::Det => deterministic(&s, run)?,
        Kind::Multi => multi(&s, run)?,
    };
    out.command = echo(a, verb, run);
    out.sections.insert(0, ("inputs".into(), inputs));
    Ok(out)
}

fn sampled(weights: &[f64], seed: u64, trials: u64) -> Result<TrialStats, CliError> {
    Ok(estimate_success(|rng| sample_outcome(weights, rng), trials, seed)?)
}

/// Trial section plus one 3-sigma check per branch.
fn branch_stats(stats: &TrialStats, probs: &[f64], seed: u64, label: &str) -> (Json, Vec<Check>) {
    let n = probs.len();
    let counts: Vec<usize> = (0..n).map(|i| stats.count(i) as usize).collect();
    let freqs: Vec<f64> = (0..n).map(|i| stats.frequency(i)).collect();
    let errs: Vec<f64> = (0..n).map(|i| stats.std_errors.get(&i).copied().unwrap_or(0.0)).collect();
    let bands: Vec<f64> = probs.iter().map(|&p| stats.band(p, SIGMAS)).collect();
    let checks = (0..n)
        .map(|i| Check::new(format!("{label}_{i}_3sigma"), (freqs[i] - probs[i]).abs(), bands[i]))
        .collect();
    let j = Json::obj([
        ("trials", stats.trials.into()),
        ("seed", seed.into()),
        ("counts", Json::ints(&counts)),
        ("frequencies", Json::nums(&freqs)),
        ("std_errors", Json::nums(&errs)),
        ("analytic", Json::nums(probs)),
        ("bands_3sigma", Json::nums(&bands)),
    ]);
    (j, checks)
}

fn single(s: &Session, run: Option<(u64, u64)>) -> Result<Outcome, CliError> {
    let prob = s.args.p.map_or(Probability::Optimal, Probability::Fixed);
    let out = transform_single_copy(&s.input, &s.target, prob)?;
    let plan = &out.plan;
    let [l, g] = s.spectra();
    let plan_json = Json::obj([
        l,
        g,
        ("p_opt", plan.optimal_prob.into()),
        ("p_planned", plan.success_prob.into()),
        ("contraction", Json::nums(plan.dilation.contraction.diag())),
        ("success_weight", out.success_prob.into()),
        ("failure_weight", out.failure_weight.into()),
        ("residual_extractability", out.residual_extractability.into()),
        ("classical_bits", 0u32.into()),
    ]);
    let mut checks = vec![
        s.check("u0_unitarity", plan.dilation.u0.unitarity_defect(), UNITARY_TOL),
        s.check("success_weight", (out.success_prob - plan.success_prob).abs(), UNITARY_TOL),
        s.check("target_overlap", 1.0 - overlap(&out.success_state, &s.target)?, OVERLAP_TOL),
    ];
    let mut sections = vec![("plan".into(), plan_json)];
    if let Some((seed, trials)) = run {
        let weights = [out.success_prob, out.failure_weight];
        let stats = sampled(&weights, seed, trials)?;
        let (f, p) = (stats.frequency(0), out.success_prob);
        let band = stats.band(p, SIGMAS);
        sections.push((
            "trials".into(),
            Json::obj([
                ("trials", trials.into()),
                ("seed", seed.into()),
                ("successes", stats.count(0).into()),
                ("failures", stats.count(1).into()),
                ("frequency", f.into()),
                ("std_error", stats.std_errors.get(&0).copied().unwrap_or(0.0).into()),
                ("analytic", p.into()),
                ("band_3sigma", band.into()),
            ]),
        ));
        checks.push(Check::new("success_frequency_3sigma", (f - p).abs(), band));
    }
    let matrices = Json::obj([("u0", Json::matrix(&plan.dilation.u0))]);
    Ok(Outcome { command: Json::Null, sections, matrices: Some(matrices), checks })
}

fn deterministic(s: &Session, run: Option<(u64, u64)>) -> Result<Outcome, CliError> {
    let plan = plan_deterministic(&s.input, &s.target)?;
    let d = plan.povm.first().map_or(0, ComplexMatrix::rows);
    let completeness = plan
        .povm
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, a| &acc + &a.dagger().matmul(a))
        .max_abs_diff(&ComplexMatrix::identity(d));
    let informed = exhaustive_branches(&plan, &s.input, &s.target, true)?;
    let uninformed = exhaustive_branches(&plan, &s.input, &s.target, false)?;
    let min_overlap = |bs: &[entrans::deterministic::BranchReport]| {
        bs.iter().map(|b| b.overlap_with_target).fold(f64::INFINITY, f64::min)
    };
    let weight_gap = informed.iter().map(|b| (b.weight - b.birkhoff_weight).abs()).fold(0.0, f64::max);

    let branches = (0..plan.terms.len())
        .map(|i| {
            Json::obj([
                ("weight", plan.branch_probs[i].into()),
                ("alice_relabel", Json::ints(plan.alice_relabel[i].as_slice())),
                ("bob_correction", Json::ints(plan.bob_corrections[i].as_slice())),
                ("overlap", informed[i].overlap_with_target.into()),
                ("overlap_uninformed", uninformed[i].overlap_with_target.into()),
            ])
        })
        .collect();
    let [l, g] = s.spectra();
    let plan_json = Json::obj([
        l,
        g,
        ("branch_probs", Json::nums(&plan.branch_probs)),
        ("classical_bits", plan.classical_bits().into()),
        ("branches", Json::Arr(branches)),
        ("uninformed_min_overlap", min_overlap(&uninformed).into()),
    ]);
    let mut checks = vec![
        s.check("povm_completeness", completeness, UNITARY_TOL),
        s.check("u1_unitarity", plan.u1.unitarity_defect(), UNITARY_TOL),
        s.check("branch_overlap", 1.0 - min_overlap(&informed), OVERLAP_TOL),
        s.check("branch_weights", weight_gap, UNITARY_TOL),
    ];
    let mut sections = vec![("plan".into(), plan_json)];
    if let Some((seed, trials)) = run {
        let nb = plan.terms.len();
        let hit = 1.0 - s.tol(OVERLAP_TOL);
        let stats = estimate_success(
            |rng| {
                let t = run_plan(&plan, &s.input, &s.target, rng)?;
                Ok(if t.final_overlap_with_target >= hit { t.branch } else { nb })
            },
            trials,
            seed,
        )?;
        let (mut j, band_checks) = branch_stats(&stats, &plan.branch_probs, seed, "branch");
        let missed = stats.count(nb);
        j.push("off_target", missed.into());
        checks.push(Check::new("off_target_runs", missed as f64, 0.0));
        checks.extend(band_checks);
        sections.push(("trials".into(), j));
    }
    let matrices = Json::obj([
        ("u1", Json::matrix(&plan.u1)),
        ("povm", Json::Arr(plan.povm.iter().map(Json::matrix).collect())),
    ]);
    Ok(Outcome { command: Json::Null, sections, matrices: Some(matrices), checks })
}

fn delta_gram(plan: &MultiCopyPlan) -> f64 {
    let mut sq = plan.sigma.squares();
    sq.resize(plan.dim_a, 0.0);
    let target = ComplexMatrix::real_diag(plan.dim_a, plan.dim_a, &sq);
    plan.delta.matmul(&plan.delta.dagger()).max_abs_diff(&target)
}

fn multi(s: &Session, run: Option<(u64, u64)>) -> Result<Outcome, CliError> {
    let opts = MultiCopyOptions { copies: s.args.copies, ..Default::default() };
    let plan = plan_multicopy(&s.input, &s.target, &opts)?;
    let [l, g] = s.spectra();
    let per_copy = plan.per_copy.iter().map(|c| Json::nums(c.diag())).collect();
    let plan_json = Json::obj([
        l,
        g,
        ("p_opt", plan.p_opt.into()),
        ("n_min", plan.n_min.into()),
        ("copies", plan.copies.into()),
        ("branch_probs", Json::nums(&plan.branch_probs)),
        ("per_copy_contractions", Json::Arr(per_copy)),
        ("bob_space_dim", plan.delta.cols().into()),
        ("classical_bits", MULTICOPY_MESSAGE_BITS.into()),
    ]);
    let mut checks = vec![
        s.check("u2_unitarity", plan.u2.unitarity_defect(), UNITARY_TOL),
        s.check("delta_gram", delta_gram(&plan), GRAM_TOL),
    ];
    let mut sections = vec![("plan".into(), plan_json)];
    let mut matrices = Json::obj([("u2", Json::matrix(&plan.u2)), ("delta", Json::matrix(&plan.delta))]);
    if let Some((seed, trials)) = run {
        let res = finalize_multicopy(&plan)?;
        checks.push(s.check("rho_a_out_block", res.block_defect, UNITARY_TOL));
        checks.push(s.check("projected_weight", (res.projected_weight - 1.0).abs(), UNITARY_TOL));
        checks.push(Check::new("classical_bits", res.classical_bits as f64, 1.0));
        let stats = sampled(&plan.branch_probs, seed, trials)?;
        let (j, band_checks) = branch_stats(&stats, &plan.branch_probs, seed, "branch");
        checks.extend(band_checks);
        sections.push((
            "result".into(),
            Json::obj([
                ("block_defect", res.block_defect.into()),
                ("projected_weight", res.projected_weight.into()),
                ("rho_a_out_spectrum", Json::nums(&res.rho_a_out.spectrum())),
                ("classical_bits", res.classical_bits.into()),
            ]),
        ));
        sections.push(("trials".into(), j));
        matrices.push("rho_a_out", Json::matrix(res.rho_a_out.matrix()));
    }
    Ok(Outcome { command: Json::Null, sections, matrices: Some(matrices), checks })
}

fn verify(v: &VerifyArgs) -> Result<Outcome, CliError> {
    if v.size_cap < 2 || v.instances == 0 {
        return Err(CliError::Invalid("need --size-cap >= 2 and --instances >= 1".into()));
    }
    let opts = VerifyOptions { size_cap: v.size_cap, seed: v.seed, perturb: v.perturb, instances: v.instances };
    let checks = run_all(&opts)
        .into_iter()
        .map(|r| {
            let mut c = Check::new(r.name, r.metric.unwrap_or(f64::NAN), r.tol);
            c.passed = r.passed;
            c.detail = vec![("instances".into(), r.instances.into()), ("error".into(), r.error.into())];
            c
        })
        .collect();
    let command = Json::obj([
        ("verb", "verify".into()),
        ("size_cap", v.size_cap.into()),
        ("seed", v.seed.into()),
        ("perturb", v.perturb.into()),
        ("instances", v.instances.into()),
    ]);
    Ok(Outcome { command, sections: Vec::new(), matrices: None, checks })
}
