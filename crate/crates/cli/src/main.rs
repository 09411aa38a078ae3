//! Command-line front end: rank metrics, cyclic constructions, safe
//! areas, crash-fault simulation, impossibility witnesses, and the full
//! verification suite.
//!
//! Exit status: 0 on success or a verified/applicable result, 1 on a
//! failed verdict or runtime failure, 2 on usage errors. JSON mode
//! (`--json`) emits exactly one document on standard output; identical
//! invocations produce byte-identical documents.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use arrovian::aggregation::enumerate_arrow_maps;
use arrovian::cyclic::{
    cyclic_preference_list, cyclic_profile, shuffled_cyclic_profile, BlockPartition, SystemParams,
    Synchrony,
};
use arrovian::metrics::{self, MetricKind};
use arrovian::prefs::{
    enumerate_strict, enumerate_weak, format_default, parse_default, parse_profile_default, Domain,
    Profile,
};
use arrovian::safety;
use arrovian::sim::{
    check_task, check_trace_unanimity, run_async_canonical, run_sync, CrashSchedule, ExecutionTrace,
    FloodDecide, NaiveLeader, Protocol, TaskSpec,
};
use arrovian::suite;
use arrovian::witness::{approx_witness, block_witness, kset_witness, WitnessOutcome, WitnessVerdict};
use arrovian::{parse_ratio, Error};

#[derive(Parser)]
#[command(
    name = "arrovian",
    version,
    about = "Preference aggregation under crash faults, verified at enumeration scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distance between two strict preferences, e.g. `metric --kind kt "0>1>2" "2>1>0"`.
    Metric {
        /// kt (Kendall tau) or sf (Spearman footrule)
        #[arg(long)]
        kind: String,
        first: String,
        second: String,
    },
    /// Diameter of the full strict domain on m alternatives.
    Diameter {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        m: usize,
    },
    /// The rotations of a block partition, one strict order per line.
    Cyclic {
        #[arg(long)]
        m: usize,
        /// blocks separated by `|`, alternatives (best first) by `,`
        #[arg(long)]
        blocks: String,
    },
    /// A cyclic profile over the participant slots, one entry per line.
    CyclicProfile {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long = "sync")]
        synchrony: String,
        #[arg(long)]
        blocks: String,
        /// shuffle the slot assignment with this seed (test utility)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Members of the safe area of one profile slot.
    SafeArea {
        #[arg(long)]
        t: usize,
        /// output domain: strict or weak
        #[arg(long)]
        wo: String,
        /// comma-separated preferences, one per slot
        #[arg(long)]
        profile: String,
        /// 1-based slot identity
        #[arg(long)]
        i: usize,
    },
    /// One execution of a reference protocol.
    Simulate {
        /// flood or naive-leader
        #[arg(long)]
        proto: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long = "sync")]
        synchrony: String,
        /// inputs, one per slot (participants only when asynchronous)
        #[arg(long)]
        profile: String,
        /// crash schedule `slot@round:dest|dest`, 1-based; `slot@0:` is silent
        #[arg(long)]
        schedule: Option<String>,
        /// kset:K or approx:EPS:kt|sf
        #[arg(long)]
        task: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Construct and verify an impossibility witness.
    Witness {
        /// kset or approx
        #[arg(long)]
        task: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long = "sync")]
        synchrony: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        metric: Option<String>,
        /// explicit block partition for the approximate task
        #[arg(long)]
        blocks: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive dictatorship verification at n=2, m=3.
    ArrowVerify {
        #[arg(long)]
        json: bool,
    },
    /// Run every criterion of the verification suite.
    Reproduce {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    configure_workers();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Argument(_) | Error::Parse { .. } | Error::Capacity(_) | Error::Domain(_) => 2,
                _ => 1,
            })
        }
    }
}

fn configure_workers() {
    if let Ok(value) = std::env::var("AAL_MAX_WORKERS") {
        if let Ok(workers) = value.trim().parse::<usize>() {
            if workers >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
            }
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Metric { kind, first, second } => {
            let kind: MetricKind = kind.parse()?;
            let a = parse_default(&first)?;
            let b = parse_default(&second)?;
            println!("{}", metrics::distance(kind, &a, &b)?);
            Ok(0)
        }
        Command::Diameter { kind, m } => {
            let kind: MetricKind = kind.parse()?;
            let domain = enumerate_strict(m)?;
            println!("{}", metrics::diameter(&domain, kind)?);
            Ok(0)
        }
        Command::Cyclic { m, blocks } => {
            let bp = parse_blocks(&blocks, m)?;
            for rotation in cyclic_preference_list(&bp) {
                println!("{}", format_default(&rotation));
            }
            Ok(0)
        }
        Command::CyclicProfile { n, t, synchrony, blocks, seed } => {
            let params = SystemParams::new(n, t)?;
            let synchrony: Synchrony = synchrony.parse()?;
            let bp = BlockPartition::parse(&blocks)?;
            let slots = params.participants(synchrony);
            let profile = match seed {
                Some(seed) => shuffled_cyclic_profile(&bp, slots, seed)?,
                None => cyclic_profile(&bp, slots)?,
            };
            for entry in profile.entries() {
                println!("{}", format_default(entry));
            }
            Ok(0)
        }
        Command::SafeArea { t, wo, profile, i } => {
            let profile = parse_profile_default(&profile)?;
            let w_o = output_domain(&wo, profile.m())?;
            if i < 1 || i > profile.len() {
                return Err(Error::Argument(format!(
                    "slot {i} out of range 1..={}",
                    profile.len()
                )));
            }
            let area = safety::safe_area(profile.entries(), i - 1, t, &w_o)?;
            for member in area {
                println!("{}", format_default(&member));
            }
            Ok(0)
        }
        Command::Simulate { proto, n, t, synchrony, profile, schedule, task, json } => {
            let params = SystemParams::new(n, t)?;
            let synchrony: Synchrony = synchrony.parse()?;
            let profile = parse_profile_default(&profile)?;
            let task = task.map(|t| TaskSpec::parse(&t)).transpose()?;
            let summary = match proto.as_str() {
                "flood" => {
                    let w_o = enumerate_strict(profile.m())?;
                    simulate(&FloodDecide::new(w_o), params, synchrony, &profile, schedule, task)?
                }
                "naive-leader" => {
                    simulate(&NaiveLeader, params, synchrony, &profile, schedule, task)?
                }
                other => {
                    return Err(Error::Argument(format!(
                        "unknown protocol {other:?} (expected flood or naive-leader)"
                    )))
                }
            };
            let passed = summary.passed();
            if json {
                println!("{}", summary.to_json());
            } else {
                summary.print_text();
            }
            Ok(if passed { 0 } else { 1 })
        }
        Command::Witness { task, n, t, synchrony, m, k, eps, metric, blocks, json } => {
            let params = SystemParams::new(n, t)?;
            let synchrony: Synchrony = synchrony.parse()?;
            let outcome = match task.as_str() {
                "kset" => {
                    if eps.is_some() || metric.is_some() || blocks.is_some() {
                        return Err(Error::Argument(
                            "the kset task takes --k only (no --eps, --metric, or --blocks)".into(),
                        ));
                    }
                    let k = k.ok_or_else(|| Error::Argument("the kset task needs --k".into()))?;
                    kset_witness(params, synchrony, m, k)?
                }
                "approx" => {
                    if k.is_some() {
                        return Err(Error::Argument("the approx task does not take --k".into()));
                    }
                    let eps = parse_ratio(
                        &eps.ok_or_else(|| Error::Argument("the approx task needs --eps".into()))?,
                    )?;
                    let metric: MetricKind = metric
                        .ok_or_else(|| Error::Argument("the approx task needs --metric".into()))?
                        .parse()?;
                    match blocks {
                        Some(blocks) => {
                            let bp = parse_blocks(&blocks, m)?;
                            block_witness(params, synchrony, &bp, metric, eps)?
                        }
                        None => approx_witness(params, synchrony, m, metric, eps)?,
                    }
                }
                other => {
                    return Err(Error::Argument(format!(
                        "unknown task {other:?} (expected kset or approx)"
                    )))
                }
            };
            let code = match &outcome {
                WitnessOutcome::Report(report) => match report.verdict {
                    WitnessVerdict::Verified => 0,
                    WitnessVerdict::Failed(_) => 1,
                },
                WitnessOutcome::NotApplicable { .. } => 0,
            };
            if json {
                println!("{}", outcome.to_json());
            } else {
                print_witness_text(&outcome);
            }
            Ok(code)
        }
        Command::ArrowVerify { json } => {
            let enumeration = enumerate_arrow_maps(2, 3)?;
            let valid = enumeration.survivors.len();
            let dictatorial = enumeration
                .survivors
                .iter()
                .filter(|s| s.consensus.is_k_dictatorship(1))
                .count();
            let decisive_sets: Vec<Vec<Vec<usize>>> = enumeration
                .survivors
                .iter()
                .map(|s| {
                    s.consensus
                        .find_decisive_sets()
                        .into_iter()
                        .map(|set| set.into_iter().map(|slot| slot + 1).collect())
                        .collect()
                })
                .collect();
            let passed = valid == 2 && dictatorial == 2;
            if json {
                println!(
                    "{}",
                    json!({
                        "candidates": enumeration.candidates,
                        "valid": valid,
                        "dictatorial": dictatorial,
                        "decisive_sets": decisive_sets,
                    })
                );
            } else {
                println!("candidates: {}", enumeration.candidates);
                println!("valid (unanimity + weak-order on every profile): {valid}");
                println!("dictatorial: {dictatorial}");
                for (idx, sets) in decisive_sets.iter().enumerate() {
                    println!("map {}: minimal decisive sets {:?}", idx + 1, sets);
                }
            }
            Ok(if passed { 0 } else { 1 })
        }
        Command::Reproduce { json } => {
            let outcomes = suite::run_all();
            let all_pass = outcomes.iter().all(|o| o.passed);
            if json {
                println!(
                    "{}",
                    serde_json::to_value(&outcomes).expect("criterion outcomes serialize")
                );
            } else {
                for o in &outcomes {
                    println!(
                        "criterion {}: {} [{}] ({} ms, budget {} ms) {}",
                        o.id,
                        o.label,
                        if o.passed { "PASS" } else { "FAIL" },
                        o.millis,
                        o.budget_millis,
                        o.detail,
                    );
                }
                println!("{}", if all_pass { "all criteria passed" } else { "FAILURES PRESENT" });
            }
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

fn parse_blocks(blocks: &str, m: usize) -> Result<BlockPartition, Error> {
    let bp = BlockPartition::parse(blocks)?;
    if bp.m() != m {
        return Err(Error::Argument(format!(
            "blocks cover {} alternatives but --m is {m}",
            bp.m()
        )));
    }
    Ok(bp)
}

fn output_domain(wo: &str, m: usize) -> Result<Domain, Error> {
    match wo {
        "strict" => enumerate_strict(m),
        "weak" => enumerate_weak(m),
        other => Err(Error::Argument(format!(
            "unknown output domain {other:?} (expected strict or weak)"
        ))),
    }
}

struct SimSummary {
    inputs: BTreeMap<usize, String>,
    correct: Vec<usize>,
    schedule: String,
    decisions: BTreeMap<usize, String>,
    unanimity: bool,
    kset: Option<bool>,
    approx: Option<bool>,
    agreement_detail: Option<String>,
}

impl SimSummary {
    fn passed(&self) -> bool {
        self.unanimity && self.kset.unwrap_or(true) && self.approx.unwrap_or(true)
    }

    fn to_json(&self) -> serde_json::Value {
        json!({
            "inputs": self.inputs.iter().map(|(s, p)| (s.to_string(), p)).collect::<BTreeMap<_, _>>(),
            "correct_set": self.correct,
            "schedule": self.schedule,
            "decisions": self.decisions.iter().map(|(s, p)| (s.to_string(), p)).collect::<BTreeMap<_, _>>(),
            "verdicts": {
                "unanimity": self.unanimity,
                "kset": self.kset,
                "approx": self.approx,
            },
        })
    }

    fn print_text(&self) {
        let join = |map: &BTreeMap<usize, String>| {
            map.iter().map(|(s, p)| format!("{s}:{p}")).collect::<Vec<_>>().join(" ")
        };
        println!("inputs: {}", join(&self.inputs));
        println!(
            "correct: {}",
            self.correct.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
        );
        if !self.schedule.is_empty() {
            println!("schedule: {}", self.schedule);
        }
        println!("decisions: {}", join(&self.decisions));
        println!("unanimity: {}", if self.unanimity { "pass" } else { "FAIL" });
        for (label, verdict) in [("kset", self.kset), ("approx", self.approx)] {
            if let Some(v) = verdict {
                match (&self.agreement_detail, v) {
                    (Some(detail), false) => println!("{label}: FAIL ({detail})"),
                    _ => println!("{label}: {}", if v { "pass" } else { "FAIL" }),
                }
            }
        }
    }
}

fn simulate<P: Protocol>(
    proto: &P,
    params: SystemParams,
    synchrony: Synchrony,
    profile: &Profile,
    schedule: Option<String>,
    task: Option<TaskSpec>,
) -> Result<SimSummary, Error> {
    let trace: ExecutionTrace<P::Message> = match synchrony {
        Synchrony::Sync => {
            let schedule = match schedule {
                Some(text) => CrashSchedule::parse(&text, params.n())?,
                None => CrashSchedule::none(),
            };
            run_sync(proto, params, profile, &schedule)?
        }
        Synchrony::Async => {
            let silent: BTreeSet<usize> = match schedule {
                Some(text) => {
                    let parsed = CrashSchedule::parse(&text, params.n())?;
                    if parsed.crashes().values().any(|e| e.round != 0) {
                        return Err(Error::Argument(
                            "asynchronous runs are canonical: every scheduled crash must be silent (round 0)"
                                .into(),
                        ));
                    }
                    parsed.faulty_slots()
                }
                None => (params.n() - params.t()..params.n()).collect(),
            };
            run_async_canonical(proto, params, profile, &silent)?
        }
    };

    let unanimity = check_trace_unanimity(&trace).is_satisfied();
    let mut kset = None;
    let mut approx = None;
    let mut agreement_detail = None;
    if let Some(task) = task {
        let verdict = check_task(&trace, &task)?;
        let agreed = verdict.agreement.is_satisfied();
        if let arrovian::aggregation::PropertyCheck::Violated(v) = &verdict.agreement {
            agreement_detail = Some(match v {
                arrovian::sim::TraceAgreementViolation::TooManyDecisions { distinct } => {
                    format!("{distinct} distinct decisions")
                }
                arrovian::sim::TraceAgreementViolation::TooFarApart { slots, distance } => {
                    format!("slots {} and {} are {distance} apart", slots.0 + 1, slots.1 + 1)
                }
            });
        }
        match task {
            TaskSpec::KSet { .. } => kset = Some(agreed),
            TaskSpec::Approx { .. } => approx = Some(agreed),
        }
    }

    Ok(SimSummary {
        inputs: trace.inputs.iter().map(|(&s, p)| (s + 1, format_default(p))).collect(),
        correct: trace.correct.iter().map(|&s| s + 1).collect(),
        schedule: trace.schedule.to_spec_string(),
        decisions: trace.decisions.iter().map(|(&s, p)| (s + 1, format_default(p))).collect(),
        unanimity,
        kset,
        approx,
        agreement_detail,
    })
}

fn print_witness_text(outcome: &WitnessOutcome) {
    match outcome {
        WitnessOutcome::NotApplicable { precondition } => {
            println!("not applicable: {precondition}");
        }
        WitnessOutcome::Report(report) => {
            println!(
                "verdict: {}",
                match &report.verdict {
                    WitnessVerdict::Verified => "verified".to_string(),
                    WitnessVerdict::Failed(reason) => format!("failed ({reason})"),
                }
            );
            println!("cycle: j={} ell={} blocks={}", report.cycle_len, report.min_block, report.blocks);
            println!("threshold: {}", report.threshold);
            println!(
                "profile: {}",
                report.profile.entries().iter().map(format_default).collect::<Vec<_>>().join(",")
            );
            match &report.evidence {
                arrovian::witness::WitnessEvidence::DistinctDecisions { slots, count } => {
                    println!(
                        "pinned slots {:?} hold {count} distinct outputs",
                        slots.iter().map(|s| s + 1).collect::<Vec<_>>()
                    );
                }
                arrovian::witness::WitnessEvidence::Distance { slots, distance } => {
                    println!(
                        "pinned slots {} and {} are {distance} apart",
                        slots.0 + 1,
                        slots.1 + 1
                    );
                }
            }
            for (slot, area) in report.safe_areas.iter().enumerate() {
                println!(
                    "safe area {}: {}",
                    slot + 1,
                    area.iter().map(format_default).collect::<Vec<_>>().join(",")
                );
            }
        }
    }
}
