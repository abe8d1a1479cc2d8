use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use topos_core::coverage::{CoverageError, TopologyReport, TopologyViolation};
use topos_core::io::{self, IoError, PresheafFile, SiteFile, UniverseDump};
use topos_core::mvs::{
    check_generic, default_test_objects, enumerate_mvs, indexed_family, validate_mvs, CoverMode, Member, Mvs,
};
use topos_core::names::force::literal_roots;
use topos_core::names::{build_universe, check_rst_axioms, force, parse_formula, AxiomStatus};
use topos_core::psh::SmallnessClass;
use topos_core::shf::{is_separated, is_sheaf, sheafify};
use topos_core::wty::{presheaf_wtype, sheaf_wtype};

mod report;
use report::Report;

#[derive(Parser)]
#[command(name = "topos", about = "Sheaf semantics over finite sites")]
struct Cli {
    /// include wall-clock time in the report
    #[arg(long, global = true)]
    timing: bool,
    /// run without the thread pool
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pointwise,
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Check the category laws and the topology axioms of a site file
    Validate {
        #[arg(long)]
        site: PathBuf,
    },
    /// Sheafify a presheaf and certify the result
    Sheafify {
        #[arg(long)]
        site: PathBuf,
        #[arg(long)]
        presheaf: PathBuf,
    },
    /// W-type of a morphism, by height-bounded iteration
    Wtype {
        #[arg(long)]
        site: PathBuf,
        #[arg(long)]
        morphism: PathBuf,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// build the sheaf W-type instead of the presheaf one
        #[arg(long)]
        sheaf: bool,
        /// fibre-cardinality bound for smallness
        #[arg(long)]
        bound: Option<usize>,
    },
    /// Dump the universe of names of a given rank
    Universe {
        #[arg(long)]
        site: PathBuf,
        #[arg(long, default_value_t = 3)]
        rank: usize,
    },
    /// Evaluate a formula file by forcing
    Force {
        #[arg(long)]
        site: PathBuf,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long)]
        formula: PathBuf,
        /// evaluation object; defaults to the root of the literals, or every object
        #[arg(long)]
        at: Option<String>,
    },
    /// Check instances of the set theory axioms at every object
    Axioms {
        #[arg(long)]
        site: PathBuf,
        #[arg(long, default_value_t = 3)]
        rank: usize,
    },
    /// Enumerate multi-valued sections and check genericity of a family
    Mvs {
        #[arg(long)]
        site: PathBuf,
        #[arg(long)]
        morphism: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Pointwise)]
        mode: Mode,
        /// `all` or `minimal` (mvss indexed by 1 and by each representable), else a family file
        #[arg(long, default_value = "minimal")]
        family: String,
        #[arg(long)]
        bound: Option<usize>,
    },
}

/// Errors that end the run with exit code 2.
struct UsageError(String);

impl From<IoError> for UsageError {
    fn from(e: IoError) -> UsageError {
        UsageError(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<Vec<u8>, UsageError> {
    std::fs::read(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn text(path: &PathBuf, bytes: &[u8]) -> Result<String, UsageError> {
    String::from_utf8(bytes.to_vec()).map_err(|_| UsageError(format!("{}: not UTF-8", path.display())))
}

fn with_path<T>(path: &PathBuf, r: Result<T, IoError>) -> Result<T, UsageError> {
    r.map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn class(bound: Option<usize>) -> SmallnessClass {
    bound.map_or(SmallnessClass::UNBOUNDED, SmallnessClass::bounded)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        topos_core::exec::set_mode(topos_core::exec::Mode::Sequential);
    }
    let start = Instant::now();
    match run(cli.command) {
        Ok(mut report) => {
            if cli.timing {
                report.timing_ms = Some(start.elapsed().as_millis());
            }
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            // a closed pipe downstream is not our failure
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if report.passes() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn site_of(path: &PathBuf, bytes: &[u8]) -> Result<io::Site, UsageError> {
    with_path(path, io::parse_site(&text(path, bytes)?))
}

fn run(command: Command) -> Result<Report, UsageError> {
    match command {
        Command::Validate { site } => validate(&site),
        Command::Sheafify { site, presheaf } => {
            let (sb, pb) = (read(&site)?, read(&presheaf)?);
            let s = site_of(&site, &sb)?;
            let p = Arc::new(with_path(&presheaf, io::parse_presheaf(&text(&presheaf, &pb)?, &s.category))?);
            let mut r = Report::new("sheafify", &[&sb, &pb], json!({}));
            let sh = sheafify(&p, &s.topology);
            let sep = is_separated(&sh.first.presheaf, &s.topology);
            r.check("plus_is_separated", sep.is_ok(), sep.err().map(|w| json!(w)));
            let sheaf = is_sheaf(&sh.sheaf, &s.topology);
            r.check("plus_plus_is_sheaf", sheaf.is_ok(), sheaf.err().map(|w| json!(w)));
            let uni = sh.check_universal(&sh.sheaf);
            r.check("unit_is_universal_for_itself", uni.is_ok(), uni.err().map(|w| json!(w)));
            r.output = json!({
                "sizes": sizes(&s.category, sh.sheaf.sizes()),
                "sheaf": PresheafFile::from_presheaf(&sh.sheaf),
                "unit": sh.unit.components(),
            });
            Ok(r)
        }
        Command::Wtype { site, morphism, depth, sheaf, bound } => {
            let (sb, mb) = (read(&site)?, read(&morphism)?);
            let s = site_of(&site, &sb)?;
            let f = with_path(&morphism, io::parse_morphism(&text(&morphism, &mb)?, &s.category))?;
            let cls = class(bound);
            let mut r = Report::new("wtype", &[&sb, &mb], json!({ "depth": depth, "sheaf": sheaf, "bound": bound }));
            if sheaf {
                let mut w = sheaf_wtype(&f, &s.topology, depth, cls).map_err(|e| UsageError(e.to_string()))?;
                let sep = is_separated(&w.presheaf, &s.topology);
                r.check("quotient_is_separated", sep.is_ok(), sep.err().map(|w| json!(w)));
                let reps: Vec<usize> = w.rep_trees.iter().flatten().copied().collect();
                let natural = reps.iter().all(|&t| w.forest.is_hereditarily_natural(t));
                r.check("representatives_hereditarily_natural", natural, None);
                if w.stabilized {
                    let sh = is_sheaf(&w.presheaf, &s.topology);
                    r.check("quotient_is_sheaf", sh.is_ok(), sh.err().map(|w| json!(w)));
                    let ia = w.check_initial_algebra(&f, &s.topology, cls).map_err(|e| UsageError(e.to_string()))?;
                    r.check("initial_algebra", ia.passes(), Some(json!(ia)));
                }
                r.output = json!({
                    "stabilized": w.stabilized,
                    "sizes_by_height": w.sizes_by_height.iter().map(|s| sizes_value(&f, s)).collect::<Vec<_>>(),
                    "carrier": PresheafFile::from_presheaf(&w.presheaf),
                });
            } else {
                let mut w = presheaf_wtype(&f, depth, cls).map_err(|e| UsageError(e.to_string()))?;
                let trees: Vec<usize> = w.trees.iter().flatten().copied().collect();
                let natural = trees.iter().all(|&t| w.forest.is_hereditarily_natural(&f, t));
                r.check("trees_hereditarily_natural", natural, None);
                if w.stabilized {
                    let ia = w.check_initial_algebra(&f, cls).map_err(|e| UsageError(e.to_string()))?;
                    r.check("initial_algebra", ia.passes(), Some(json!(ia)));
                }
                r.output = json!({
                    "stabilized": w.stabilized,
                    "sizes_by_height": w.sizes_by_height.iter().map(|s| sizes_value(&f, s)).collect::<Vec<_>>(),
                    "carrier": PresheafFile::from_presheaf(&w.presheaf),
                });
            }
            Ok(r)
        }
        Command::Universe { site, rank } => {
            let sb = read(&site)?;
            let s = site_of(&site, &sb)?;
            let mut r = Report::new("universe", &[&sb], json!({ "rank": rank }));
            let u = build_universe(&s.topology, rank);
            r.output = json!(UniverseDump::from_universe(&u));
            Ok(r)
        }
        Command::Force { site, rank, formula, at } => {
            let (sb, fb) = (read(&site)?, read(&formula)?);
            let s = site_of(&site, &sb)?;
            let phi =
                parse_formula(&text(&formula, &fb)?).map_err(|e| UsageError(format!("{}:{e}", formula.display())))?;
            let mut r = Report::new("force", &[&sb, &fb], json!({ "rank": rank, "at": at }));
            let u = build_universe(&s.topology, rank);
            let cat = &s.category;
            let objects: Vec<usize> = match at {
                Some(name) => {
                    vec![cat.object_by_name(&name).ok_or_else(|| UsageError(format!("unknown object {name}")))?]
                }
                None => {
                    let roots = literal_roots(&u, &phi).map_err(|e| UsageError(e.to_string()))?;
                    match roots.len() {
                        0 => cat.objects().collect(),
                        1 => roots,
                        _ => return Err(UsageError("literals are rooted at different objects".into())),
                    }
                }
            };
            let mut results = serde_json::Map::new();
            for c in objects {
                let v = force(&u, c, &phi).map_err(|e| UsageError(e.to_string()))?;
                r.summary.push(format!("forced at {}: {v}", cat.object_name(c)));
                results.insert(cat.object_name(c).to_string(), json!(v));
            }
            r.output = json!({ "formula": phi.to_string(), "forced": results });
            Ok(r)
        }
        Command::Axioms { site, rank } => {
            let sb = read(&site)?;
            let s = site_of(&site, &sb)?;
            let mut r = Report::new("axioms", &[&sb], json!({ "rank": rank }));
            let report = check_rst_axioms(&build_universe(&s.topology, rank));
            for res in &report.results {
                let witness = (!res.failures.is_empty()).then(|| json!(res.failures));
                if res.status != AxiomStatus::NotCheckable {
                    r.check(res.axiom.clone(), res.status == AxiomStatus::Forced, witness);
                }
                let status = serde_json::to_value(res.status).expect("serializable");
                r.summary.push(format!("{}: {}", res.axiom, status.as_str().unwrap_or_default()));
            }
            r.output = json!(report);
            Ok(r)
        }
        Command::Mvs { site, morphism, mode, family, bound } => {
            let (sb, mb) = (read(&site)?, read(&morphism)?);
            let family_bytes = match family.as_str() {
                "all" | "minimal" => None,
                path => Some(read(&PathBuf::from(path))?),
            };
            let s = site_of(&site, &sb)?;
            let phi = with_path(&morphism, io::parse_morphism(&text(&morphism, &mb)?, &s.category))?;
            let mode = match mode {
                Mode::Pointwise => CoverMode::Pointwise,
                Mode::Local => CoverMode::Local,
            };
            let cls = class(bound);
            let mut inputs: Vec<&[u8]> = vec![&sb, &mb];
            if let Some(b) = &family_bytes {
                inputs.push(b);
            }
            let tests = default_test_objects(&s.category);
            let mut r = Report::new(
                "mvs",
                &inputs,
                json!({ "mode": mode, "family": family, "bound": bound, "test_objects": tests }),
            );
            let all = enumerate_mvs(&phi, mode, &s.topology, cls).map_err(|e| UsageError(e.to_string()))?;
            let members: Vec<Member> = match (family.as_str(), &family_bytes) {
                ("all" | "minimal", _) => indexed_family(&phi, mode, &s.topology, cls, family == "minimal")
                    .map_err(|e| UsageError(e.to_string()))?,
                (path, Some(bytes)) => {
                    let file: io::FamilyFile = serde_json::from_slice(bytes)
                        .map_err(|e| UsageError(format!("{path}:{}:{}: {e}", e.line(), e.column())))?;
                    let built = file.build(&phi).map_err(|e| UsageError(format!("{path}: {e}")))?;
                    let mut out = Vec::new();
                    for (i, (index, of, carrier)) in built.into_iter().enumerate() {
                        let v = validate_mvs(&of, &carrier, mode, &s.topology, cls);
                        r.check(format!("member_{i}_is_mvs"), v.is_ok(), v.err().map(|e| json!(e)));
                        out.push(Member { index, mvs: Mvs { of, carrier } });
                    }
                    out
                }
                _ => unreachable!("family bytes are read for paths"),
            };
            let generic = check_generic(&members, &phi, &tests, mode, &s.topology, cls);
            r.check("generic", generic.is_ok(), generic.err().map(|w| json!(w)));
            r.output = json!({
                "mvs": all.iter().map(|m| elements_value(&phi, &m.carrier)).collect::<Vec<_>>(),
                "family": members
                    .iter()
                    .map(|m| json!({ "over": m.index.name, "elements": elements_value(&phi, &m.mvs.carrier) }))
                    .collect::<Vec<_>>(),
            });
            Ok(r)
        }
    }
}

fn validate(site: &PathBuf) -> Result<Report, UsageError> {
    let sb = read(site)?;
    let file: SiteFile = serde_json::from_str(&text(site, &sb)?)
        .map_err(|e| UsageError(format!("{}:{}:{}: {e}", site.display(), e.line(), e.column())))?;
    let mut r = Report::new("validate", &[&sb], json!({}));
    if let Err(e) = file.category.build() {
        let witness = match &e {
            IoError::Category(rep) => json!(rep.violations),
            other => json!(other.to_string()),
        };
        r.check("category", false, Some(witness));
        return Ok(r);
    }
    r.check("category", true, None);
    let violations: Vec<TopologyViolation> = match file.build() {
        Ok(s) => {
            r.output = json!({
                "objects": s.category.num_objects(),
                "arrows": s.category.num_arrows(),
                "covering_sieves": s.category.objects().map(|a| {
                    let names: Vec<Vec<String>> = s.topology.covering(a).iter()
                        .map(|&c| topos_core::coverage::arrow_names(&s.category, c)).collect();
                    (s.category.object_name(a).to_string(), json!(names))
                }).collect::<serde_json::Map<_, _>>(),
            });
            Vec::new()
        }
        Err(IoError::Topology(TopologyReport { violations }))
        | Err(IoError::Coverage(CoverageError::Invalid(TopologyReport { violations })))
        | Err(IoError::Coverage(CoverageError::GeneratedFamilyNotATopology(TopologyReport { violations }))) => {
            violations
        }
        Err(IoError::Coverage(CoverageError::NotAPoset)) => {
            r.check("dense_topology_needs_a_poset", false, None);
            return Ok(r);
        }
        Err(e) => return Err(with_path::<()>(site, Err(e)).unwrap_err()),
    };
    let mut axiom = |name: &str, pick: fn(&TopologyViolation) -> bool| {
        let found: Vec<&TopologyViolation> = violations.iter().filter(|v| pick(v)).collect();
        r.check(name, found.is_empty(), (!found.is_empty()).then(|| json!(found)));
    };
    axiom("sieves", |v| matches!(v, TopologyViolation::NotASieve { .. }));
    axiom("maximality", |v| matches!(v, TopologyViolation::MaximalityViolation { .. }));
    axiom("stability", |v| matches!(v, TopologyViolation::StabilityViolation { .. }));
    axiom("local_character", |v| matches!(v, TopologyViolation::LocalCharacterViolation { .. }));
    Ok(r)
}

fn sizes(cat: &topos_core::FiniteCategory, s: &[usize]) -> Value {
    Value::Object(cat.objects().map(|a| (cat.object_name(a).to_string(), json!(s[a]))).collect())
}

fn sizes_value(f: &topos_core::psh::Morphism, s: &[usize]) -> Value {
    sizes(f.src().category(), s)
}

fn elements_value(phi: &topos_core::psh::Morphism, carrier: &topos_core::psh::Subpresheaf) -> Value {
    let cat = phi.src().category();
    Value::Object(cat.objects().map(|a| (cat.object_name(a).to_string(), json!(carrier.elements(a)))).collect())
}
