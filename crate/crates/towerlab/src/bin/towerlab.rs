//! towerlab command-line interface: reproducible batch runs over the
//! library with JSON reports.
//!
//! Exit codes: 0 on success / FOUND, 1 on verification failure / NOT-FOUND,
//! 2 on usage errors.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;
use std::time::Instant;
use towerlab::afcheck;
use towerlab::amdim;
use towerlab::cantor::{CantorSystem, System, SystemSpec};
use towerlab::comparison::{self, SearchOutcome};
use towerlab::group::{FiniteGroupSet, GroupDescriptor, GroupElement, GroupKind};
use towerlab::quasitiling::{self, TileSystem};
use towerlab::rat::{format_rat, parse_rat};
use towerlab::report::{self, Report};
use towerlab::towers;
use towerlab::typesemigroup::{self, TransportOutcome};

#[derive(Parser)]
#[command(name = "towerlab", version, about = "Exact tower, tiling and comparison machinery for Cantor group actions")]
struct Cli {
    /// Omit timings so identical invocations emit byte-identical reports
    #[arg(long, global = true)]
    no_timing: bool,
    /// Cap the worker thread count
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quasitile a window of the group with an auto-built or given tile system
    Tile(TileArgs),
    /// First-return decomposition of a Z-system over a clopen base
    Decompose(DecomposeArgs),
    /// Verify castle disjointness and partition structure
    VerifyCastle(CastleArgs),
    /// Check the E-Lebesgue condition of a tower collection
    Lebesgue(LebesgueArgs),
    /// Chromatic number of a tower collection's footprints
    Chromatic(CastleArgs),
    /// Search for / verify a comparison witness A ≺_m B
    Compare(CompareArgs),
    /// Type semigroup operations
    #[command(subcommand)]
    Typesemi(TypesemiCmd),
    /// Build a simplex map from towers and measure its equivariance defect
    Amdim(AmdimArgs),
    /// Almost-finiteness certificates
    #[command(subcommand)]
    Af(AfCmd),
}

#[derive(Args)]
struct TileArgs {
    /// Group descriptor JSON file; defaults to Z
    #[arg(long)]
    group: Option<PathBuf>,
    #[arg(long)]
    beta: String,
    /// Ambient window: interval {0..w-1} (or box in Z^d)
    #[arg(long)]
    window: i64,
    /// Top tile edge length; singleton scales are padded below it
    #[arg(long, default_value_t = 7)]
    top_len: i64,
}

#[derive(Args)]
struct DecomposeArgs {
    #[arg(long)]
    system: PathBuf,
    /// Base clopen set JSON ({"resolution": r, "cells": [...]})
    #[arg(long, alias = "V")]
    v: PathBuf,
    #[arg(long, default_value_t = 64)]
    cap: u64,
}

#[derive(Args)]
struct CastleArgs {
    #[arg(long)]
    system: PathBuf,
    /// Castle JSON: [{"base": {...}, "shape": [...]}]
    #[arg(long)]
    castle: PathBuf,
}

#[derive(Args)]
struct LebesgueArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    towers: PathBuf,
    /// E as comma-separated integers, e.g. "-1,0,1"
    #[arg(long, alias = "E", allow_hyphen_values = true)]
    e: String,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long, alias = "A")]
    a: PathBuf,
    #[arg(long, alias = "B")]
    b: PathBuf,
    #[arg(long, default_value_t = 0)]
    m: u32,
    #[arg(long, default_value_t = 8)]
    radius: u32,
    #[arg(long, default_value_t = 6)]
    max_res: u32,
}

#[derive(Subcommand)]
enum TypesemiCmd {
    /// Search for an equidecomposition witness f ~ g
    Equidecomp(TypesemiArgs),
    /// Search for a subequidecomposition certifying [f] <= [g]
    Leq(TypesemiArgs),
    /// Probe almost unperforation: (n+1)f <= ng, then f <= g
    ProbeAu(ProbeArgs),
}

#[derive(Args)]
struct TypesemiArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long, default_value_t = 8)]
    radius: u32,
    #[arg(long, default_value_t = 6)]
    max_res: u32,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    base: TypesemiArgs,
    #[arg(long, default_value_t = 2)]
    n: u64,
}

#[derive(Args)]
struct AmdimArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    towers: PathBuf,
    /// F as comma-separated integers, e.g. "-1,0,1"
    #[arg(long, alias = "F", allow_hyphen_values = true)]
    f_set: String,
    #[arg(long)]
    n: u32,
}

#[derive(Subcommand)]
enum AfCmd {
    /// Verify a certificate JSON
    Verify(AfVerifyArgs),
    /// Build the canonical odometer certificate
    BuildOdometer(AfBuildArgs),
    /// Convert a certificate into an exact clopen tower decomposition
    Exactify(AfVerifyArgs),
}

#[derive(Args)]
struct AfVerifyArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    cert: PathBuf,
}

#[derive(Args)]
struct AfBuildArgs {
    /// Odometer system JSON; alternatively give --mod for the Z ladder
    #[arg(long)]
    system: Option<PathBuf>,
    /// Modulus m for the Z ladder m, m^2, ...
    #[arg(long = "mod")]
    modulus: Option<u64>,
    #[arg(long)]
    depth: usize,
    #[arg(long)]
    n: u64,
    /// K as comma-separated integers
    #[arg(long = "K", alias = "k", allow_hyphen_values = true)]
    k_set: String,
    #[arg(long)]
    delta: String,
}

enum CliError {
    /// bad arguments or malformed input files: exit 2
    Usage(String),
    /// a library-level failure during the run: exit 1
    Run(towerlab::Error),
}

impl From<towerlab::Error> for CliError {
    fn from(e: towerlab::Error) -> Self {
        CliError::Run(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed JSON in {}: {e}", path.display())))
}

fn load_system(path: &PathBuf) -> Result<System, CliError> {
    let spec: SystemSpec = read_json(path)?;
    Ok(CantorSystem::build(spec)?)
}

fn parse_z_set(s: &str) -> Result<FiniteGroupSet, String> {
    let mut v = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let n: i64 = part.parse().map_err(|e| format!("bad integer {part}: {e}"))?;
        v.push(GroupElement::Z(n));
    }
    Ok(FiniteGroupSet::new(v))
}

/// Outcome of one command: exit code plus the report.
struct Run {
    exit: i32,
    report: Report,
}

fn run(cli: &Cli) -> Result<Run, CliError> {
    match &cli.command {
        Command::Tile(args) => {
            let group = match &args.group {
                Some(p) => read_json::<GroupDescriptor>(p)?,
                None => GroupDescriptor::z(),
            };
            group.validate()?;
            let beta = parse_rat(&args.beta).map_err(CliError::Usage)?;
            let ambient = match group.kind {
                GroupKind::Z => FiniteGroupSet::z_interval(0, args.window - 1),
                GroupKind::Zd { d } => {
                    let mut cells = vec![vec![]];
                    for _ in 0..d {
                        let mut next = Vec::new();
                        for base in &cells {
                            for x in 0..args.window {
                                let mut b: Vec<i64> = base.clone();
                                b.push(x);
                                next.push(b);
                            }
                        }
                        cells = next;
                    }
                    FiniteGroupSet::new(cells.into_iter().map(GroupElement::Zd).collect())
                }
                _ => return Err(CliError::Usage("tile windows cover Z and Z^d".into())),
            };
            let top = match group.kind {
                GroupKind::Z => FiniteGroupSet::z_interval(0, args.top_len - 1),
                GroupKind::Zd { d } => {
                    let mut cells = vec![vec![]];
                    for _ in 0..d {
                        let mut next = Vec::new();
                        for base in &cells {
                            for x in 0..args.top_len {
                                let mut b: Vec<i64> = base.clone();
                                b.push(x);
                                next.push(b);
                            }
                        }
                        cells = next;
                    }
                    FiniteGroupSet::new(cells.into_iter().map(GroupElement::Zd).collect())
                }
                _ => unreachable!(),
            };
            let sys = TileSystem::padded(&group, top, beta)?;
            let tiling = quasitiling::quasitile(&group, &ambient, &sys)?;
            let validation = tiling.validate(&group)?;
            let mut report = Report::new("tile");
            report.inputs = json!({
                "group": group,
                "beta": format_rat(&beta),
                "window": args.window,
                "top_len": args.top_len,
            });
            report.budgets = json!({"scales": sys.tiles.len()});
            report.outcome = "TILED".into();
            report.artifact = json!({
                "tiling": report::tiling_to_data(&tiling),
                "coverage": validation,
            });
            Ok(Run { exit: 0, report })
        }
        Command::Decompose(args) => {
            let sys = load_system(&args.system)?;
            let v: report::ClopenSetData = read_json(&args.v)?;
            let v = v.into_set(&sys)?;
            let castle = towers::first_return_decomposition(&sys, &v, args.cap)?;
            let verification = towers::verify_castle(&castle)?;
            let mut report = Report::new("decompose");
            report.inputs = json!({"v": report::ClopenSetData::from_set(&v)});
            report.budgets = json!({"cap": args.cap});
            report.outcome = if verification.partitions_space { "DECOMPOSED" } else { "INVALID" }.into();
            report.artifact = json!({
                "castle": report::castle_to_data(&castle),
                "verification": verification,
            });
            Ok(Run { exit: i32::from(report.outcome == "INVALID"), report })
        }
        Command::VerifyCastle(args) => {
            let sys = load_system(&args.system)?;
            let data: report::CastleData = read_json(&args.castle)?;
            let castle = report::castle_from_data(&data, &sys)?;
            let verification = towers::verify_castle(&castle)?;
            let mut report = Report::new("verify-castle");
            report.inputs = json!({"towers": data.len()});
            report.outcome = if verification.valid { "VALID" } else { "INVALID" }.into();
            let exit = i32::from(!verification.valid);
            report.artifact = json!({"verification": verification});
            Ok(Run { exit, report })
        }
        Command::Lebesgue(args) => {
            let sys = load_system(&args.system)?;
            let data: report::CastleData = read_json(&args.towers)?;
            let ts = report::collection_from_data(&data, &sys)?;
            let e = parse_z_set(&args.e).map_err(CliError::Usage)?;
            let rep = towers::is_e_lebesgue(&ts, &e)?;
            let mut report = Report::new("lebesgue");
            report.inputs = json!({"e": e, "towers": data.len()});
            report.outcome = if rep.holds { "E-LEBESGUE" } else { "NOT-E-LEBESGUE" }.into();
            report.artifact = json!({
                "resolution": rep.resolution,
                "uncovered_cell": rep.uncovered_cell,
                "unwitnessed_cell": rep.unwitnessed_cell,
                "witnessed_cells": rep.certificate.len(),
            });
            Ok(Run { exit: i32::from(!rep.holds), report })
        }
        Command::Chromatic(args) => {
            let sys = load_system(&args.system)?;
            let data: report::CastleData = read_json(&args.castle)?;
            let ts = report::collection_from_data(&data, &sys)?;
            let chrom = towers::chromatic_number(&ts)?;
            let mut report = Report::new("chromatic");
            report.inputs = json!({"towers": data.len()});
            report.outcome = format!("CHROMATIC {}", chrom.number);
            report.artifact = json!({"chromatic": chrom});
            Ok(Run { exit: 0, report })
        }
        Command::Compare(args) => {
            let sys = load_system(&args.system)?;
            let a: report::ClopenSetData = read_json(&args.a)?;
            let b: report::ClopenSetData = read_json(&args.b)?;
            let a = a.into_set(&sys)?;
            let b = b.into_set(&sys)?;
            let outcome = comparison::find_witness(&a, &b, args.m, args.radius, args.max_res)?;
            let mut report = Report::new("compare");
            report.inputs = json!({
                "a": report::ClopenSetData::from_set(&a),
                "b": report::ClopenSetData::from_set(&b),
                "m": args.m,
            });
            report.budgets = json!({"radius": args.radius, "max_resolution": args.max_res});
            match outcome {
                SearchOutcome::Found { witness, budget, margin_warning } => {
                    let verification = comparison::verify_witness(&a, &b, &witness)?;
                    report.outcome = "FOUND".into();
                    report.artifact = json!({
                        "witness": report::witness_to_data(&witness),
                        "verified": verification.ok,
                        "budget": budget,
                        "margin_warning": margin_warning,
                    });
                    Ok(Run { exit: 0, report })
                }
                SearchOutcome::NotFound(reason) => {
                    report.outcome = "NOT-FOUND".into();
                    report.artifact = json!({"reason": reason});
                    Ok(Run { exit: 1, report })
                }
            }
        }
        Command::Typesemi(cmd) => {
            let (args, what, n) = match cmd {
                TypesemiCmd::Equidecomp(a) => (a, "equidecomp", None),
                TypesemiCmd::Leq(a) => (a, "leq", None),
                TypesemiCmd::ProbeAu(p) => (&p.base, "probe-au", Some(p.n)),
            };
            let sys = load_system(&args.system)?;
            let f: report::TypeElementData = read_json(&args.f)?;
            let g: report::TypeElementData = read_json(&args.g)?;
            let f = report::type_element_from_data(&f, &sys)?;
            let g = report::type_element_from_data(&g, &sys)?;
            let mut report = Report::new(&format!("typesemi {what}"));
            report.inputs = json!({
                "f": report::type_element_to_data(&f),
                "g": report::type_element_to_data(&g),
            });
            report.budgets = json!({"radius": args.radius, "max_resolution": args.max_res});
            match what {
                "equidecomp" | "leq" => {
                    let outcome = if what == "equidecomp" {
                        typesemigroup::find_equidecomposition(&f, &g, args.radius, args.max_res)?
                    } else {
                        typesemigroup::leq(&f, &g, args.radius, args.max_res)?
                    };
                    match outcome {
                        TransportOutcome::Found(w) => {
                            let ok = if what == "equidecomp" {
                                w.verifies_equality(&f, &g)?
                            } else {
                                w.verifies_subequivalence(&f, &g)?
                            };
                            report.outcome = "FOUND".into();
                            report.artifact = json!({
                                "witness": report::equidecomp_to_data(&w),
                                "verified": ok,
                            });
                            Ok(Run { exit: 0, report })
                        }
                        TransportOutcome::NotFound(reason) => {
                            report.outcome = "NOT-FOUND".into();
                            report.artifact = json!({"reason": reason});
                            Ok(Run { exit: 1, report })
                        }
                    }
                }
                _ => {
                    let probe = typesemigroup::probe_almost_unperforation(
                        &f,
                        &g,
                        n.unwrap(),
                        args.radius,
                        args.max_res,
                    )?;
                    report.outcome = probe.label().to_string();
                    report.artifact = match &probe {
                        typesemigroup::UnperforationProbe::PremiseNotEstablished(r) => {
                            json!({"premise_failure": r})
                        }
                        typesemigroup::UnperforationProbe::BothHold { premise, conclusion } => json!({
                            "premise": report::equidecomp_to_data(premise),
                            "conclusion": report::equidecomp_to_data(conclusion),
                        }),
                        typesemigroup::UnperforationProbe::Inconclusive { premise, conclusion_failure } => json!({
                            "premise": report::equidecomp_to_data(premise),
                            "conclusion_failure": conclusion_failure,
                        }),
                    };
                    Ok(Run { exit: 0, report })
                }
            }
        }
        Command::Amdim(args) => {
            let sys = load_system(&args.system)?;
            let data: report::CastleData = read_json(&args.towers)?;
            let ts = report::collection_from_data(&data, &sys)?;
            let f = parse_z_set(&args.f_set).map_err(CliError::Usage)?;
            let map = amdim::build_simplex_map(&ts, &f, args.n)?;
            let defect = amdim::equivariance_defect(&map, &f)?;
            let mut report = Report::new("amdim");
            report.inputs = json!({"f": f, "n": args.n, "towers": data.len()});
            report.outcome = format!("DEFECT {}", format_rat(&defect));
            report.artifact = json!({
                "map": report::simplex_map_to_data(&map),
                "defect": format_rat(&defect),
                "support_bound": map.support_bound,
            });
            Ok(Run { exit: 0, report })
        }
        Command::Af(cmd) => match cmd {
            AfCmd::Verify(args) => {
                let sys = load_system(&args.system)?;
                let data: report::CertificateData = read_json(&args.cert)?;
                let cert = report::certificate_from_data(&data, &sys)?;
                let rep = afcheck::verify_certificate(&cert)?;
                let mut report = Report::new("af verify");
                report.inputs = json!({"towers": data.castle.len(), "n": data.n});
                report.outcome = if rep.pass { "PASS" } else { "FAIL" }.into();
                let exit = i32::from(!rep.pass);
                report.artifact = json!({"report": rep});
                Ok(Run { exit, report })
            }
            AfCmd::BuildOdometer(args) => {
                let sys = match (&args.system, args.modulus) {
                    (Some(p), _) => load_system(p)?,
                    (None, Some(m)) => CantorSystem::z_odometer(m, args.depth)?,
                    (None, None) => {
                        return Err(CliError::Usage("give --system or --mod".into()))
                    }
                };
                let k = parse_z_set(&args.k_set).map_err(CliError::Usage)?;
                let delta = parse_rat(&args.delta).map_err(CliError::Usage)?;
                let cert = afcheck::build_odometer_certificate(&sys, args.depth, args.n, &k, delta)?;
                let rep = afcheck::verify_certificate(&cert)?;
                let mut report = Report::new("af build-odometer");
                report.inputs = json!({
                    "depth": args.depth,
                    "n": args.n,
                    "K": k,
                    "delta": format_rat(&delta),
                });
                report.outcome = if rep.pass { "PASS" } else { "FAIL" }.into();
                let exit = i32::from(!rep.pass);
                report.artifact = json!({
                    "certificate": report::certificate_to_data(&cert),
                    "report": rep,
                });
                Ok(Run { exit, report })
            }
            AfCmd::Exactify(args) => {
                let sys = load_system(&args.system)?;
                let data: report::CertificateData = read_json(&args.cert)?;
                let cert = report::certificate_from_data(&data, &sys)?;
                let (castle, rep) = afcheck::exact_decomposition(&cert)?;
                let mut report = Report::new("af exactify");
                report.inputs = json!({"towers": data.castle.len(), "n": data.n});
                report.outcome = if rep.partitions_space { "EXACT" } else { "FAIL" }.into();
                let exit = i32::from(!rep.partitions_space);
                report.artifact = json!({
                    "castle": report::castle_to_data(&castle),
                    "report": rep,
                });
                Ok(Run { exit, report })
            }
        },
    }
}

fn main() {
    let cli = Cli::parse();
    towerlab::par::configure_jobs(cli.jobs);
    let started = Instant::now();
    match run(&cli) {
        Ok(mut run) => {
            if !cli.no_timing {
                run.report.timings_ms = Some(started.elapsed().as_millis());
            }
            let text = match run.report.to_json_pretty() {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("report serialization failed: {e}");
                    std::process::exit(1);
                }
            };
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("cannot write {}: {e}", path.display());
                    std::process::exit(1);
                }
            } else {
                println!("{text}");
            }
            eprintln!("{}", run.report.outcome);
            std::process::exit(run.exit);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(match e {
                CliError::Usage(_) => 2,
                CliError::Run(_) => 1,
            });
        }
    }
}
