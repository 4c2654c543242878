use std::cell::RefCell;
use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use epcount_core::classify::classify_named;
use epcount_core::count::{brute_force_count, count_ep, count_pp};
use epcount_core::equivalence::{
    counting_equivalent, joint_distinguishing_structure, logically_equivalent,
    semi_counting_equivalent, with_distinguisher, EquivalenceKind, SearchLimits, Witness,
};
use epcount_core::expansion::{plus_set, star_expansion};
use epcount_core::normalize::normalize_ep;
use epcount_core::oracle::{ep_count_from_pp_oracle, pp_count_from_ep_oracle, RecordingOracle};
use epcount_core::pp::to_structure_view;
use epcount_core::selftest::run_selftest;
use epcount_core::{
    parse_formula_file_with, parse_structures, EpFormula, Error, PpFormula, Signature, Structure,
};
use num_bigint::BigUint;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "epcount",
    version,
    about = "Answer counting for existential positive queries"
)]
struct Cli {
    /// Emit a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Largest universe of constructed witness structures.
    #[arg(
        long,
        global = true,
        env = "EPCOUNT_MAX_WITNESS_SIZE",
        default_value_t = 4096
    )]
    max_witness_size: usize,

    /// Largest structure the oracle reductions may query.
    #[arg(long, global = true, env = "EPCOUNT_MAX_QUERY_SIZE", default_value_t = 1 << 16)]
    max_query_size: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count the answers of a query on a structure.
    Count {
        formula: String,
        structure: String,
        #[arg(long, value_enum, default_value_t = Engine::Ep)]
        engine: Engine,
        /// Query to use when the file holds several.
        #[arg(long)]
        query: Option<String>,
    },
    /// Decide equivalence of the first queries of two files.
    Equiv {
        first: String,
        second: String,
        #[arg(long, value_enum, default_value_t = Mode::Counting)]
        mode: Mode,
        /// Attach a distinguishing structure to negative verdicts.
        #[arg(long)]
        witness: bool,
    },
    /// Print the inclusion-exclusion expansion of a query.
    Expand {
        formula: String,
        /// Print the plus set instead, for queries with sentence disjuncts.
        #[arg(long)]
        plus: bool,
        #[arg(long)]
        query: Option<String>,
    },
    /// Print the normalized disjunctive form.
    Normalize {
        formula: String,
        #[arg(long)]
        query: Option<String>,
    },
    /// Print the core of a primitive positive query.
    Core {
        formula: String,
        #[arg(long)]
        query: Option<String>,
    },
    /// Treewidth report over every query of the given files.
    Classify {
        #[arg(required = true)]
        formulas: Vec<String>,
        #[arg(long, default_value_t = 1)]
        width: usize,
    },
    /// Build a structure separating every query of the given files.
    Distinguish {
        #[arg(required = true)]
        formulas: Vec<String>,
    },
    /// Run an oracle reduction against an internal exact oracle and show its calls.
    OracleDemo {
        formula: String,
        structure: String,
        #[arg(long, value_enum)]
        direction: Direction,
        #[arg(long)]
        query: Option<String>,
    },
    /// Randomized cross-checks of all counting paths.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    Brute,
    Pp,
    Ep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Logical,
    Counting,
    Semi,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Ep2pp,
    Pp2ep,
}

/// Failure with the exit status it maps to.
struct Failure {
    status: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            status: 2,
            message: message.into(),
        }
    }

    fn from_error(context: &str, e: Error) -> Self {
        let status = match e {
            Error::Parse(_)
            | Error::InvalidSignature(_)
            | Error::SignatureMismatch(_)
            | Error::InvalidStructure(_)
            | Error::InvalidFormula(_) => 2,
            _ => 1,
        };
        let message = match e {
            Error::Parse(p) => format!("{context}:{p}"),
            other if context.is_empty() => other.to_string(),
            other => format!("{context}: {other}"),
        };
        Failure { status, message }
    }
}

type CliResult<T> = Result<T, Failure>;

fn lift<T>(r: epcount_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::from_error("", e))
}

fn read(path: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{path}: {e}")))
}

/// Every query of every file, parsed over the union of the files' signatures.
fn load_queries(paths: &[String]) -> CliResult<Vec<(String, EpFormula)>> {
    let texts: Vec<String> = paths.iter().map(|p| read(p)).collect::<CliResult<_>>()?;
    let mut sig = Signature::new();
    for (path, text) in paths.iter().zip(&texts) {
        let file = parse_formula_file_with(text, &Signature::new())
            .map_err(|e| Failure::from_error(path, e))?;
        sig = sig
            .merged(&file.signature)
            .map_err(|e| Failure::from_error(path, e))?;
    }
    let mut out = Vec::new();
    for (path, text) in paths.iter().zip(&texts) {
        let file = parse_formula_file_with(text, &sig).map_err(|e| Failure::from_error(path, e))?;
        for q in file.queries {
            let formula = EpFormula::new(
                sig.clone(),
                q.formula.lib().to_vec(),
                q.formula.body().clone(),
            )
            .map_err(|e| Failure::from_error(path, e))?;
            out.push((q.name, formula));
        }
    }
    Ok(out)
}

fn load_query(path: &str, name: Option<&str>) -> CliResult<(String, EpFormula)> {
    let all = load_queries(&[path.to_string()])?;
    match name {
        None => Ok(all
            .into_iter()
            .next()
            .expect("a formula file holds a query")),
        Some(n) => all
            .into_iter()
            .find(|(q, _)| q == n)
            .ok_or_else(|| Failure::usage(format!("{path}: no query named {n}"))),
    }
}

fn load_structure(path: &str, sig: &Signature) -> CliResult<(String, Structure)> {
    let text = read(path)?;
    let mut all = parse_structures(&text, sig).map_err(|e| Failure::from_error(path, e))?;
    if all.len() != 1 {
        return Err(Failure::usage(format!(
            "{path}: expected one structure, found {}",
            all.len()
        )));
    }
    Ok(all.pop().unwrap())
}

/// The query as a primitive positive formula; a disjunction is accepted when its
/// normal form has a single disjunct.
fn as_pp(name: &str, phi: &EpFormula) -> CliResult<PpFormula> {
    match to_structure_view(phi) {
        Ok(pp) => Ok(pp),
        Err(Error::NotPrimitivePositive) => {
            let normal = normalize_ep(phi);
            if normal.len() == 1 {
                Ok(normal.disjuncts()[0].clone())
            } else {
                Err(Failure::from_error(name, Error::NotPrimitivePositive))
            }
        }
        Err(e) => Err(Failure::from_error(name, e)),
    }
}

fn emit(json: bool, text: String, doc: Value) {
    if json {
        println!("{}", serde_json::to_string_pretty(&doc).unwrap());
    } else {
        print!("{text}");
        if !text.ends_with('\n') {
            println!();
        }
    }
}

/// Product constructions name elements by nested tuples; print them as indices.
fn relabel(s: &Structure) -> CliResult<Structure> {
    lift(s.renamed(|name| s.index_of(name).expect("own element").to_string()))
}

fn big(n: &BigUint) -> Value {
    Value::String(n.to_string())
}

fn run(cli: Cli) -> CliResult<bool> {
    let limits = SearchLimits {
        max_product_size: cli.max_witness_size.max(1),
        max_query_size: cli.max_query_size.max(1),
        ..SearchLimits::default()
    };
    let json = cli.json;
    match cli.command {
        Command::Count {
            formula,
            structure,
            engine,
            query,
        } => {
            let (_, phi) = load_query(&formula, query.as_deref())?;
            let (_, b) = load_structure(&structure, phi.signature())?;
            let n = match engine {
                Engine::Brute => lift(brute_force_count(&phi, &b))?,
                Engine::Pp => lift(count_pp(&as_pp(&formula, &phi)?, &b))?,
                Engine::Ep => lift(count_ep(&phi, &b))?,
            };
            emit(json, n.to_string(), json!({ "count": big(&n) }));
        }
        Command::Equiv {
            first,
            second,
            mode,
            witness,
        } => {
            let first_len = load_queries(std::slice::from_ref(&first))?.len();
            let queries = load_queries(&[first.clone(), second.clone()])?;
            let (p, q) = (&queries[0].1, &queries[first_len].1);
            let (p, q) = (as_pp(&first, p)?, as_pp(&second, q)?);
            let verdict = lift(match mode {
                Mode::Logical => logically_equivalent(&p, &q),
                Mode::Counting => counting_equivalent(&p, &q),
                Mode::Semi => semi_counting_equivalent(&p, &q),
            })?;
            let verdict = if witness {
                lift(with_distinguisher(verdict, &p, &q, &limits))?
            } else {
                verdict
            };
            let mut text = format!("{verdict}\n");
            let mut doc = json!({
                "mode": verdict.kind.to_string(),
                "equivalent": verdict.equivalent,
            });
            match &verdict.witness {
                Some(Witness::Renaming { forward, backward }) => {
                    doc["renaming"] = json!({ "forward": forward, "backward": backward });
                }
                Some(Witness::Homomorphisms { forward, backward }) if witness => {
                    let pa = p.augmented();
                    let qa = q.augmented();
                    let show = |from: &Structure,
                                to: &Structure,
                                map: &[usize]|
                     -> Vec<(String, String)> {
                        map.iter()
                            .enumerate()
                            .map(|(i, &j)| (from.element(i).to_string(), to.element(j).to_string()))
                            .collect()
                    };
                    let f = show(&pa, &qa, forward);
                    let b = show(&qa, &pa, backward);
                    for (label, m) in [("forward", &f), ("backward", &b)] {
                        let pairs: Vec<String> =
                            m.iter().map(|(a, b)| format!("{a}->{b}")).collect();
                        text.push_str(&format!("{label}: {}\n", pairs.join(" ")));
                    }
                    doc["homomorphisms"] = json!({ "forward": f, "backward": b });
                }
                Some(Witness::Distinguisher { structure, counts }) => {
                    let structure = relabel(structure)?;
                    text.push_str(&structure.to_text("D"));
                    doc["distinguisher"] = json!({
                        "structure": structure.to_text("D"),
                        "counts": [big(&counts.0), big(&counts.1)],
                    });
                }
                _ => {}
            }
            if verdict.kind == EquivalenceKind::Logical && !verdict.equivalent {
                doc["homomorphisms"] = Value::Null;
            }
            emit(json, text, doc);
        }
        Command::Expand {
            formula,
            plus,
            query,
        } => {
            let (_, phi) = load_query(&formula, query.as_deref())?;
            let normal = normalize_ep(&phi);
            if plus {
                let set = lift(plus_set(&normal))?;
                let terms: Vec<Value> = set
                    .minus_terms()
                    .iter()
                    .map(|(c, t)| json!({ "coefficient": c.to_string(), "formula": t.to_text() }))
                    .collect();
                let sentences: Vec<String> =
                    set.sentences().iter().map(|s| s.canonical_text()).collect();
                emit(
                    json,
                    set.to_text(),
                    json!({ "terms": terms, "sentences": sentences }),
                );
            } else {
                if !normal.is_all_free() {
                    return Err(Failure::from_error(
                        &formula,
                        Error::Precondition(
                            "the normalized query has sentence disjuncts; use --plus".into(),
                        ),
                    ));
                }
                let star = lift(star_expansion(&normal))?;
                let terms: Vec<Value> = star
                    .terms()
                    .iter()
                    .map(|(c, t)| json!({ "coefficient": c.to_string(), "formula": t.to_text() }))
                    .collect();
                emit(json, star.to_text(), json!({ "terms": terms }));
            }
        }
        Command::Normalize { formula, query } => {
            let (_, phi) = load_query(&formula, query.as_deref())?;
            let normal = normalize_ep(&phi);
            let disjuncts: Vec<String> = normal.disjuncts().iter().map(|d| d.to_text()).collect();
            emit(
                json,
                normal.to_text(),
                json!({ "disjuncts": disjuncts, "text": normal.to_text() }),
            );
        }
        Command::Core { formula, query } => {
            let (name, phi) = load_query(&formula, query.as_deref())?;
            let core = as_pp(&name, &phi)?.core();
            emit(
                json,
                core.to_text(),
                json!({ "core": core.to_text(), "size": core.structure().size() }),
            );
        }
        Command::Classify { formulas, width } => {
            let queries = load_queries(&formulas)?;
            let report = lift(classify_named(&queries, width))?;
            let rows: Vec<Value> = report
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "id": r.id,
                        "formula": r.formula,
                        "tw_core": r.tw_core.value,
                        "tw_contract": r.tw_contract.value,
                        "exact": r.tw_core.exact && r.tw_contract.exact,
                        "exists_components": r.exists_components,
                    })
                })
                .collect();
            emit(
                json,
                report.to_table(),
                json!({
                    "rows": rows,
                    "max_tw_core": report.max_tw_core,
                    "max_tw_contract": report.max_tw_contract,
                    "width": report.width,
                    "case": report.case,
                }),
            );
        }
        Command::Distinguish { formulas } => {
            let queries = load_queries(&formulas)?;
            let pps = queries
                .iter()
                .map(|(n, q)| as_pp(n, q))
                .collect::<CliResult<Vec<_>>>()?;
            let c = relabel(&lift(joint_distinguishing_structure(&pps, &limits))?)?;
            let mut text = c.to_text("D");
            let mut counts = serde_json::Map::new();
            for ((name, _), p) in queries.iter().zip(&pps) {
                let n = lift(count_pp(p, &c))?;
                text.push_str(&format!("# {name}: {n}\n"));
                counts.insert(name.clone(), big(&n));
            }
            emit(
                json,
                text,
                json!({ "structure": c.to_text("D"), "counts": counts }),
            );
        }
        Command::OracleDemo {
            formula,
            structure,
            direction,
            query,
        } => {
            let (name, phi) = load_query(&formula, query.as_deref())?;
            let (_, b) = load_structure(&structure, phi.signature())?;
            let normal = normalize_ep(&phi);
            let plus = lift(plus_set(&normal))?;
            let mut text = String::new();
            let mut calls_doc = Vec::new();
            match direction {
                Direction::Ep2pp => {
                    let calls = RefCell::new(Vec::new());
                    let oracle = |psi: &PpFormula, s: &Structure| {
                        let n = count_pp(psi, s)?;
                        calls
                            .borrow_mut()
                            .push((psi.to_text(), s.size(), n.clone()));
                        Ok(n)
                    };
                    let n = lift(ep_count_from_pp_oracle(&normal, &plus, &b, &oracle))?;
                    for (k, (f, size, answer)) in calls.borrow().iter().enumerate() {
                        text.push_str(&format!(
                            "call {}: {f} on {size} elements -> {answer}\n",
                            k + 1
                        ));
                        calls_doc
                            .push(json!({ "formula": f, "size": size, "answer": big(answer) }));
                    }
                    text.push_str(&format!("count {n}\n"));
                    emit(json, text, json!({ "calls": calls_doc, "count": big(&n) }));
                }
                Direction::Pp2ep => {
                    let mut recovered = Vec::new();
                    for psi in plus.formulas() {
                        let oracle =
                            RecordingOracle::new(name.clone(), |s: &Structure| count_ep(&phi, s));
                        let n = lift(pp_count_from_ep_oracle(
                            psi, &normal, &plus, &b, &oracle, &limits,
                        ))?;
                        text.push_str(&format!("{}\n", psi.to_text()));
                        for (k, call) in oracle.calls().iter().enumerate() {
                            text.push_str(&format!(
                                "  call {}: {} on {} elements, {} tuples -> {}\n",
                                k + 1,
                                call.label,
                                call.structure_size,
                                call.tuple_count,
                                call.answer
                            ));
                        }
                        text.push_str(&format!("  recovered {n}\n"));
                        let calls: Vec<Value> = oracle
                            .calls()
                            .iter()
                            .map(|c| json!({ "size": c.structure_size, "tuples": c.tuple_count, "answer": big(&c.answer) }))
                            .collect();
                        recovered.push(
                            json!({ "formula": psi.to_text(), "calls": calls, "count": big(&n) }),
                        );
                    }
                    emit(json, text, json!({ "recovered": recovered }));
                }
            }
        }
        Command::Selftest { seed, cases } => {
            let results = lift(run_selftest(seed, cases))?;
            let mut text = String::new();
            let mut ok = true;
            let mut doc = Vec::new();
            for r in &results {
                ok &= r.passed();
                let mark = if r.passed() { "PASS" } else { "FAIL" };
                text.push_str(&format!("[{mark}] {} ({} cases)\n", r.name, r.cases));
                for f in &r.failures {
                    text.push_str(&format!("    {f}\n"));
                }
                doc.push(json!({ "suite": r.name, "cases": r.cases, "failures": r.failures }));
            }
            emit(json, text, json!({ "suites": doc, "passed": ok }));
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("epcount: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
