use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridloc::acflow::{ac_branch_flow, ac_lodf, solve_ac, AcBase, AcCase, AcOptions};
use gridloc::caseio::{
    load_config, read_matpower, to_dc_network, write_matpower, write_results, DcOptions, ExperimentConfig, Model,
    RawCase,
};
use gridloc::dcsens::{effective_susceptance, lodf, ptdf, PtdfQuery};
use gridloc::harness::{build_scenarios, run_experiment, sweep_ac, sweep_dc, verify_theorems, AcSweepOptions, PairFilter};
use gridloc::interfaces::{
    apply_interface, bipartite_bound, bipartite_bound_reverse, design_bipartite, design_for_joint, InterfaceSpec,
    TwoBusJoint,
};
use gridloc::{BusId, LineId, NetworkModel};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "gridloc", version, about = "Power-flow sensitivity factors and interface networks")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// MATPOWER case file
    #[arg(long, global = true)]
    case: Option<PathBuf>,
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Flow model; `experiment` accepts a comma-separated list
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    model: Vec<ModelArg>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// RNG seed
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// |LODF| values below this count as zero in CCDFs
    #[arg(long, global = true)]
    clip_floor: Option<f64>,
    /// Accept negative branch reactances by taking |x|
    #[arg(long, global = true)]
    abs_negative_reactance: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Dc,
    Ac,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Dc => Model::Dc,
            ModelArg::Ac => Model::Ac,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PairsArg {
    Cross,
    Within,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Case sanity report
    Parse,
    /// PTDF of a line for a source-sink transfer
    Ptdf {
        #[arg(long)]
        line: usize,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        sink: usize,
    },
    /// LODF of a monitored line for a tripped line
    Lodf {
        #[arg(long)]
        monitored: usize,
        #[arg(long)]
        tripped: usize,
        /// AC only: minimum |pre-outage flow| on the tripped line
        #[arg(long, default_value_t = 1e-3)]
        min_flow: f64,
    },
    /// Effective susceptance between two buses
    Effsus {
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
    },
    /// Replace a two-bus joint with an interface network
    ApplyInterface {
        #[command(flatten)]
        joint: JointArgs,
        /// Interface spec as JSON
        #[arg(long, conflicts_with = "spec_file")]
        spec: Option<String>,
        /// Interface spec file
        #[arg(long)]
        spec_file: Option<PathBuf>,
    },
    /// Bipartite interface that zeroes cross-sub-grid LODFs
    DesignBipartite {
        #[arg(long)]
        b1: Option<f64>,
        #[arg(long)]
        b2: Option<f64>,
        /// Chosen t-t' susceptance, outside [min(b1,b2), max(b1,b2)]
        #[arg(long)]
        tt_prime: f64,
        #[command(flatten)]
        joint: OptionalJointArgs,
    },
    /// All-pairs LODF sweep over the configured scenarios
    Sweep {
        /// Only this scenario (default: all)
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, value_enum, default_value = "all")]
        pairs: PairsArg,
    },
    /// Full experiment: sweeps, CCDFs, summaries, dominance checks
    Experiment,
    /// Randomized check of the interface guarantees
    VerifyTheorems {
        #[arg(long, default_value_t = 200)]
        count: usize,
    },
    /// Newton-Raphson AC power flow
    Acflow,
}

#[derive(Args)]
struct JointArgs {
    /// Buses of the first sub-grid (comma-separated), including both joint buses
    #[arg(long, value_delimiter = ',', required = true)]
    first: Vec<usize>,
    /// Buses of the second sub-grid (comma-separated), including both joint buses
    #[arg(long, value_delimiter = ',', required = true)]
    second: Vec<usize>,
}

#[derive(Args)]
struct OptionalJointArgs {
    #[arg(long, value_delimiter = ',')]
    first: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    second: Vec<usize>,
}

/// A randomized property check failed.
#[derive(Debug)]
struct PropertyViolation(String);

impl std::fmt::Display for PropertyViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "property violation: {}", self.0)
    }
}

impl std::error::Error for PropertyViolation {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<PropertyViolation>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<gridloc::Error>() {
            return e.exit_code() as u8;
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(jobs) = g.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    if let Some(floor) = g.clip_floor {
        if !(floor > 0.0 && floor < 1.0) {
            bail!("--clip-floor must lie in (0, 1)");
        }
    }
    match &cli.command {
        Command::Parse => parse_report(g),
        Command::Ptdf { line, source, sink } => {
            let net = dc_network(g)?;
            let q = PtdfQuery {
                monitored: LineId(*line),
                source: net.bus(*source)?,
                sink: net.bus(*sink)?,
            };
            print_json(&json!({ "line": line, "source": source, "sink": sink, "ptdf": ptdf(&net, &q)? }))
        }
        Command::Lodf {
            monitored,
            tripped,
            min_flow,
        } => lodf_command(g, LineId(*monitored), LineId(*tripped), *min_flow),
        Command::Effsus { from, to } => {
            let net = dc_network(g)?;
            let e = effective_susceptance(&net, net.bus(*from)?, net.bus(*to)?)?;
            print_json(&json!({ "from": from, "to": to, "susceptance": e.value }))
        }
        Command::ApplyInterface { joint, spec, spec_file } => {
            let text = match (spec, spec_file) {
                (Some(s), _) => s.clone(),
                (None, Some(p)) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                (None, None) => bail!("one of --spec or --spec-file is required"),
            };
            let spec: InterfaceSpec = serde_json::from_str(&text).context("parsing interface spec")?;
            apply_interface_command(g, &joint.first, &joint.second, &spec)
        }
        Command::DesignBipartite { b1, b2, tt_prime, joint } => {
            let spec = match (b1, b2) {
                (Some(b1), Some(b2)) => design_bipartite(*b1, *b2, *tt_prime)?,
                (None, None) if !joint.first.is_empty() && !joint.second.is_empty() => {
                    let j = joint_from(&dc_network(g)?, &joint.first, &joint.second)?;
                    design_for_joint(&j, *tt_prime)?
                }
                _ => bail!("give either --b1 and --b2, or --case with --first and --second"),
            };
            print_json(&json!({
                "spec": spec,
                "bound_first_to_second": bipartite_bound(&spec)?,
                "bound_second_to_first": bipartite_bound_reverse(&spec)?,
            }))
        }
        Command::Sweep { scenario, pairs } => sweep_command(g, scenario.as_deref(), *pairs),
        Command::Experiment => experiment_command(g),
        Command::VerifyTheorems { count } => {
            let report = verify_theorems(g.seed, *count)?;
            let text = serde_json::to_string_pretty(&report)?;
            match &g.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join("theorems.json"), &text)?;
                    print_json(&json!({ "seed": report.seed, "joints": report.joints, "counts": report.counts,
                                        "violations": report.violations.len() }))?;
                }
                None => print_text(&text)?,
            }
            if !report.is_clean() {
                return Err(anyhow!(PropertyViolation(format!("{} violations", report.violations.len()))));
            }
            Ok(())
        }
        Command::Acflow => acflow_command(g),
    }
}

fn print_json(v: &Value) -> Result<()> {
    print_text(&serde_json::to_string_pretty(v)?)
}

/// Writes to stdout; a closed pipe is not an error.
fn print_text(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn raw_case(g: &GlobalArgs) -> Result<RawCase> {
    let path = g.case.as_ref().ok_or_else(|| anyhow!("--case is required"))?;
    Ok(read_matpower(path)?)
}

fn dc_options(g: &GlobalArgs) -> DcOptions {
    DcOptions {
        abs_negative_reactance: g.abs_negative_reactance,
    }
}

fn dc_network(g: &GlobalArgs) -> Result<NetworkModel> {
    Ok(to_dc_network(&raw_case(g)?, dc_options(g))?)
}

fn single_model(g: &GlobalArgs) -> Result<Model> {
    match g.model.as_slice() {
        [] => Ok(Model::Dc),
        [m] => Ok((*m).into()),
        _ => bail!("this command takes a single --model"),
    }
}

fn config(g: &GlobalArgs, case: &RawCase) -> Result<ExperimentConfig> {
    let path = g.config.as_ref().ok_or_else(|| anyhow!("--config is required"))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = load_config(&text, case)?;
    if let Some(floor) = g.clip_floor {
        cfg.thresholds.clip_floor = floor;
    }
    Ok(cfg)
}

fn output_dir(g: &GlobalArgs, cfg: &ExperimentConfig) -> PathBuf {
    g.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn parse_report(g: &GlobalArgs) -> Result<()> {
    let case = raw_case(g)?;
    let net = to_dc_network(&case, dc_options(g))?;
    let in_service = case.branches.iter().filter(|b| b.status).count();
    let bridges: Vec<usize> = net.bridges().iter().map(|l| l.0).collect();
    let slack = case.buses.iter().filter(|b| b.kind == 3).map(|b| b.id).collect::<Vec<_>>();
    print_json(&json!({
        "base_mva": case.base_mva,
        "buses": case.buses.len(),
        "generators": case.gens.len(),
        "generators_in_service": case.in_service_gens(),
        "branches": case.branches.len(),
        "branches_in_service": in_service,
        "slack_buses": slack,
        "components": net.component_count(),
        "bridges": bridges,
        "total_load_mw": case.buses.iter().map(|b| b.pd).sum::<f64>(),
    }))
}

fn lodf_command(g: &GlobalArgs, monitored: LineId, tripped: LineId, min_flow: f64) -> Result<()> {
    let model = single_model(g)?;
    let case = raw_case(g)?;
    let value = match model {
        Model::Dc => lodf(&to_dc_network(&case, dc_options(g))?, monitored, tripped)?.value,
        Model::Ac => {
            let options = AcOptions::default();
            let base = AcBase::solve(AcCase::from_raw(&case)?, &options)?;
            ac_lodf(&base, monitored, tripped, min_flow, &options)?
        }
    };
    print_json(&json!({ "monitored": monitored.0, "tripped": tripped.0, "model": model.to_string(), "lodf": value }))
}

fn joint_from(net: &NetworkModel, first: &[usize], second: &[usize]) -> Result<TwoBusJoint> {
    let ids = |v: &[usize]| -> Result<BTreeSet<BusId>> { v.iter().map(|&b| Ok(net.bus(b)?)).collect() };
    Ok(TwoBusJoint::new(net.clone(), ids(first)?, ids(second)?)?)
}

fn apply_interface_command(g: &GlobalArgs, first: &[usize], second: &[usize], spec: &InterfaceSpec) -> Result<()> {
    let net = dc_network(g)?;
    let joint = joint_from(&net, first, second)?;
    let m = apply_interface(&joint, spec)?;
    let ext = |b: Option<BusId>| b.map(|b| m.net.external_id(b));
    let rows: Vec<usize> = m.net.line_specs().iter().map(|l| l.id).collect();
    let mut report = json!({
        "s": m.net.external_id(m.s),
        "t": m.net.external_id(m.t),
        "s_prime": ext(m.s_prime),
        "t_prime": ext(m.t_prime),
        "interface_lines": m.interface_lines.iter().map(|l| l.0).collect::<Vec<_>>(),
        "buses": m.net.bus_count(),
        "lines": m.net.line_count(),
    });
    if matches!(spec, InterfaceSpec::CompleteBipartite { .. }) {
        report["bound_first_to_second"] = json!(bipartite_bound(spec)?);
        report["bound_second_to_first"] = json!(bipartite_bound_reverse(spec)?);
    }
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir)?;
        let path = dir.join("interface_case.m");
        fs::write(&path, write_matpower(&RawCase::from_network(&m.net), "interface_case"))?;
        report["case_file"] = json!(path.display().to_string());
        // branch row k of the written case carries line id rows[k-1]
        report["branch_row_line_ids"] = json!(rows);
    }
    print_json(&report)
}

fn sweep_command(g: &GlobalArgs, only: Option<&str>, pairs: PairsArg) -> Result<()> {
    let model = single_model(g)?;
    let case = raw_case(g)?;
    let cfg = config(g, &case)?;
    let scenarios = build_scenarios(&case, &cfg, model == Model::Ac)?;
    if let Some(name) = only {
        if !scenarios.iter().any(|s| s.name == name) {
            bail!("no scenario named `{name}`");
        }
    }
    let filter = match pairs {
        PairsArg::Cross => PairFilter::Cross,
        PairsArg::Within => PairFilter::Within,
        PairsArg::All => PairFilter::All,
    };
    let ac = AcSweepOptions {
        min_flow: cfg.thresholds.ac_min_flow,
        ..AcSweepOptions::default()
    };
    let mut records = Vec::new();
    for sc in scenarios.iter().filter(|s| only.map_or(true, |n| s.name == n)) {
        log::info!("sweeping {} ({model})", sc.name);
        records.extend(match model {
            Model::Dc => sweep_dc(sc, filter)?,
            Model::Ac => sweep_ac(sc, filter, &ac)?,
        });
    }
    let dir = output_dir(g, &cfg);
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("sweep_{}.csv", model.to_string().to_lowercase()));
    write_results(&records, &path)?;
    print_json(&json!({ "records": records.len(), "file": path.display().to_string() }))
}

fn experiment_command(g: &GlobalArgs) -> Result<()> {
    let case = raw_case(g)?;
    let cfg = config(g, &case)?;
    let mut models: Vec<Model> = g.model.iter().map(|&m| m.into()).collect();
    if models.is_empty() {
        models.push(Model::Dc);
        if cfg.ac.enabled {
            models.push(Model::Ac);
        }
    }
    models.dedup();
    let dir = output_dir(g, &cfg);
    fs::create_dir_all(&dir)?;
    let report = run_experiment(&case, &cfg, &models, Some(Path::new(&dir)))?;
    for s in &report.summaries {
        log::info!(
            "{} {} {}: {} pairs, fraction above {:?}",
            s.scenario,
            s.model,
            s.class,
            s.pairs,
            s.fraction_above
        );
    }
    print_json(&json!({
        "name": report.name,
        "output_dir": dir.display().to_string(),
        "files": report.files,
        "dominance": report.dominance,
    }))?;
    // AC checks are informational; the DC ordering is the guaranteed one
    let failed: Vec<String> = report
        .dominance
        .iter()
        .filter(|d| d.model == Model::Dc && !d.holds)
        .map(|d| d.order.join(" >= "))
        .collect();
    if !failed.is_empty() {
        return Err(anyhow!(PropertyViolation(format!("DC CCDF ordering fails: {}", failed.join("; ")))));
    }
    Ok(())
}

fn acflow_command(g: &GlobalArgs) -> Result<()> {
    let case = AcCase::from_raw(&raw_case(g)?)?;
    let sol = solve_ac(&case, &case.flat_start(), &AcOptions::default())?;
    let flows = ac_branch_flow(&case, &sol.state);
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir)?;
        let mut bus = String::from("bus,vm,va_rad\n");
        for (k, b) in case.buses.iter().enumerate() {
            bus.push_str(&format!("{},{:.12},{:.12}\n", b.external, sol.state.vm[k], sol.state.va[k]));
        }
        fs::write(dir.join("ac_bus.csv"), bus)?;
        let mut branch = String::from("branch,pf,qf,pt,qt\n");
        for f in &flows {
            branch.push_str(&format!(
                "{},{:.12},{:.12},{:.12},{:.12}\n",
                f.id.0, f.from.re, f.from.im, f.to.re, f.to.im
            ));
        }
        fs::write(dir.join("ac_branch.csv"), branch)?;
    }
    let losses: f64 = flows.iter().map(|f| f.from.re + f.to.re).sum();
    print_json(&json!({
        "iterations": sol.iterations,
        "mismatch": sol.mismatch,
        "buses": case.buses.len(),
        "branches": flows.len(),
        "losses_pu": losses,
        "vm_min": sol.state.vm.min(),
        "vm_max": sol.state.vm.max(),
    }))
}
