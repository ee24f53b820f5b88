//! The `maltsev` command line: `decide`, `direct`, `verify`, `convert` and
//! `cert-check`.
//!
//! Exit codes: 0 success, 1 a chain fails or a certificate is rejected,
//! 2 bad input, 3 resource limit exceeded.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::algebra::{AlgebraError, FiniteAlgebra, DEFAULT_CAP};
use crate::cert::{replay_with_k, soundness_audit, Certificate, Mode};
use crate::chain::{verify_chain, ChainFile, ChainKind, ChainVerdict, TermChain};
use crate::deciders::{decide, DecideOptions, DeciderError, EFOptions};
use crate::engine::{
    chain_length_formula, convert_absorption_to_dj, convert_dj_to_simultaneous, convert_pixley_to_hm,
    convert_pixley_to_jonsson, direct_gumm, direct_jonsson, jonsson_symbols,
};
use crate::term::{parse_term, OpSymbol, Signature, Term};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "maltsev", version, about = "Maltsev conditions for finite algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide Jónsson, directed Jónsson, Hagemann-Mitschke, Pixley and
    /// directed Gumm terms for an algebra file.
    Decide {
        algebra: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_hm: usize,
        #[arg(long, default_value_t = 8)]
        max_pixley: usize,
        /// Decide for the clone of idempotent term operations.
        #[arg(long)]
        idempotent_reduct: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        json: bool,
    },
    /// Build directed terms from a Jónsson (or Gumm) chain of length 2k+1.
    Direct {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        gumm: bool,
        #[arg(long)]
        emit_terms: Option<PathBuf>,
        #[arg(long)]
        emit_cert: Option<PathBuf>,
    },
    /// Check a chain on an algebra.
    Verify {
        #[arg(long)]
        algebra: PathBuf,
        #[arg(long)]
        chain: PathBuf,
        /// Overrides the kind recorded in the chain file.
        #[arg(long)]
        kind: Option<String>,
        /// JSON object from chain symbols to terms over the algebra.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Convert between chain kinds.
    Convert {
        #[arg(long, value_enum)]
        from: From,
        #[arg(long, value_enum)]
        to: To,
        #[arg(long)]
        chain: PathBuf,
        /// Arity of the absorbing term (`--from abs`).
        #[arg(long)]
        arity: Option<usize>,
        /// Verify the converted chain on this algebra.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a certificate, optionally auditing it in model algebras.
    CertCheck {
        file: PathBuf,
        /// Check axiom ranges against this `k` instead of the recorded one.
        #[arg(long)]
        k: Option<usize>,
        /// Directory of algebra files interpreting `J1 .. J(2k+1)`.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum From {
    P,
    Dj,
    Dg,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum To {
    J,
    Hm,
    #[value(name = "j+dj")]
    JDj,
    Dj,
}

struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

type Outcome = Result<i32, Failure>;

/// Run the command line on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Decide {
            algebra,
            max_hm,
            max_pixley,
            idempotent_reduct,
            cap,
            json,
        } => cmd_decide(
            &algebra,
            DecideOptions {
                max_hm,
                max_pixley,
                ef: EFOptions { cap, idempotent_reduct },
            },
            json,
            out,
        ),
        Command::Direct {
            k,
            gumm,
            emit_terms,
            emit_cert,
        } => cmd_direct(k, gumm, emit_terms.as_deref(), emit_cert.as_deref(), out),
        Command::Verify {
            algebra,
            chain,
            kind,
            map,
        } => cmd_verify(&algebra, &chain, kind.as_deref(), map.as_deref(), out),
        Command::Convert {
            from,
            to,
            chain,
            arity,
            check,
            map,
            out: dest,
        } => cmd_convert(from, to, &chain, arity, check.as_deref(), map.as_deref(), dest.as_deref(), out),
        Command::CertCheck { file, k, models } => cmd_cert_check(&file, k, models.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn load_algebra(path: &Path) -> Result<FiniteAlgebra, Failure> {
    FiniteAlgebra::from_json(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> Failure {
    input(e)
}

fn cmd_decide(path: &Path, opts: DecideOptions, json: bool, out: &mut dyn Write) -> Outcome {
    let alg = load_algebra(path)?;
    let report = match decide(&alg, opts) {
        Ok(r) => r,
        Err(DeciderError::Algebra(e @ AlgebraError::NotIdempotent(_))) => {
            return Err(input(format!("{e}; pass --idempotent-reduct to decide for the idempotent reduct")))
        }
        Err(e @ DeciderError::Unsound(_)) => {
            return Err(Failure {
                code: EXIT_FAIL,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(input(e)),
    };
    if json {
        writeln!(out, "{}", report.to_json()).map_err(io)?;
    } else {
        write!(out, "{report}").map_err(io)?;
    }
    if report.resource_exceeded() {
        return Err(Failure {
            code: EXIT_RESOURCE,
            message: format!("free algebra closure exceeded {} elements", opts.ef.cap),
        });
    }
    Ok(EXIT_OK)
}

fn cmd_direct(k: usize, gumm: bool, terms: Option<&Path>, cert: Option<&Path>, out: &mut dyn Write) -> Outcome {
    if k == 0 {
        return Err(input("--k must be at least 1"));
    }
    let d = if gumm { direct_gumm(k) } else { direct_jonsson(k) };
    let m = d.chain.len();
    let rewrites = d.certificate.steps.len() - m;
    let formula = chain_length_formula(k);
    writeln!(out, "k = {k}").map_err(io)?;
    writeln!(out, "measured m = {m} ({} terms, {rewrites} rewrites)", d.chain.kind).map_err(io)?;
    writeln!(out, "formula (2k+1)(k+1)((k+1)^(k-2)-1)/k = {formula}").map_err(io)?;
    if k <= 2 {
        writeln!(out, "note: for k <= 2 the formula value is not a chain length; only the measured m is meaningful")
            .map_err(io)?;
    }
    if let Some(q) = &d.chain.tail {
        writeln!(out, "tail Q: {} nodes shared, {} as a tree", q.dag_size(), q.size()).map_err(io)?;
    }
    if let Some(p) = terms {
        write_file(p, &d.chain.to_json())?;
        writeln!(out, "terms written to {}", p.display()).map_err(io)?;
    }
    if let Some(p) = cert {
        write_file(p, &d.certificate.to_json())?;
        writeln!(out, "certificate written to {}", p.display()).map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn load_chain(path: &Path, kind: Option<&str>) -> Result<TermChain, Failure> {
    let mut file: ChainFile = serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    if let Some(k) = kind {
        file.kind = k.to_string();
    }
    TermChain::from_file(&file).map_err(|e| input(format!("{}: {e}", path.display())))
}

/// Symbols used by the chain, with their arities.
fn chain_symbols(chain: &TermChain) -> BTreeMap<String, usize> {
    let mut syms = BTreeMap::new();
    for t in chain.terms.iter().chain(chain.tail.iter()) {
        t.for_each_node(|n| {
            if let Some(op) = n.op() {
                syms.insert(op.name().to_string(), op.arity());
            }
        });
    }
    syms
}

fn load_map(path: Option<&Path>, alg: &FiniteAlgebra, chain: &TermChain) -> Result<Vec<(OpSymbol, Term)>, Failure> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let entries: BTreeMap<String, String> =
        serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let used = chain_symbols(chain);
    let mut defs = Vec::new();
    for (name, text) in entries {
        let Some(&arity) = used.get(&name) else {
            continue;
        };
        let sym = OpSymbol::new(&name, arity).map_err(input)?;
        let t = parse_term(&text, alg.signature()).map_err(|e| input(format!("map entry {name}: {e}")))?;
        defs.push((sym, t));
    }
    Ok(defs)
}

fn report_verdict(v: &ChainVerdict, out: &mut dyn Write) -> Outcome {
    writeln!(out, "{v}").map_err(io)?;
    Ok(if v.holds() { EXIT_OK } else { EXIT_FAIL })
}

fn check_chain(alg: &FiniteAlgebra, defs: &[(OpSymbol, Term)], chain: &TermChain) -> Result<ChainVerdict, Failure> {
    let used = chain_symbols(chain);
    for (name, arity) in &used {
        let known = alg.op(name).is_some_and(|o| o.symbol.arity() == *arity)
            || defs.iter().any(|(s, _)| s.name() == name);
        if !known {
            return Err(input(format!("symbol {name}/{arity} is neither an operation nor mapped")));
        }
    }
    verify_chain(alg, defs, chain).map_err(input)
}

fn cmd_verify(alg: &Path, chain: &Path, kind: Option<&str>, map: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let alg = load_algebra(alg)?;
    let chain = load_chain(chain, kind)?;
    let defs = load_map(map, &alg, &chain)?;
    let v = check_chain(&alg, &defs, &chain)?;
    report_verdict(&v, out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_convert(
    from: From,
    to: To,
    path: &Path,
    arity: Option<usize>,
    check: Option<&Path>,
    map: Option<&Path>,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Outcome {
    let converted = match (from, to) {
        (From::Abs, To::Dj) => {
            let file: ChainFile =
                serde_json::from_str(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let [text] = &file.terms[..] else {
                return Err(input("an absorption file holds exactly one term"));
            };
            let n = arity.ok_or_else(|| input("--arity is required with --from abs"))?;
            if n < 2 {
                return Err(input("--arity must be at least 2"));
            }
            let sig = Signature::infer(&[text]).map_err(input)?;
            let s = parse_term(text, &sig).map_err(input)?;
            convert_absorption_to_dj(&s, n)
        }
        (From::P, To::J) => convert_pixley_to_jonsson(&expect_kind(path, ChainKind::P)?),
        (From::P, To::Hm) => convert_pixley_to_hm(&expect_kind(path, ChainKind::P)?),
        (From::Dj, To::JDj | To::J) => convert_dj_to_simultaneous(&expect_kind(path, ChainKind::DJ)?),
        (From::Dg, To::JDj | To::J) => convert_dj_to_simultaneous(&expect_kind(path, ChainKind::DG)?),
        (f, t) => return Err(input(format!("no conversion from {f:?} to {t:?}"))),
    };
    let text = converted.to_json();
    match dest {
        Some(p) => write_file(p, &text)?,
        None => writeln!(out, "{text}").map_err(io)?,
    }
    if let Some(alg) = check {
        let alg = load_algebra(alg)?;
        let defs = load_map(map, &alg, &converted)?;
        let v = check_chain(&alg, &defs, &converted)?;
        return report_verdict(&v, out);
    }
    Ok(EXIT_OK)
}

fn expect_kind(path: &Path, kind: ChainKind) -> Result<TermChain, Failure> {
    let c = load_chain(path, None)?;
    if c.kind != kind {
        return Err(input(format!("expected a {kind} chain, found {}", c.kind)));
    }
    Ok(c)
}

/// Algebra files in `dir` (sorted by name) whose `J` operations are exactly
/// `J1 .. J(2k+1)`.
fn load_models(dir: &Path, k: usize) -> Result<Vec<(String, FiniteAlgebra)>, Failure> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| input(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let syms = jonsson_symbols(k);
    let mut models = Vec::new();
    for p in paths {
        let alg = load_algebra(&p)?;
        let extra = crate::cert::j_symbol(2 * k + 2);
        if syms.iter().all(|s| alg.op(s.name()).is_some_and(|o| o.symbol.arity() == 3)) && alg.op(extra.name()).is_none() {
            models.push((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), alg));
        }
    }
    Ok(models)
}

fn reject(out: &mut dyn Write, message: impl std::fmt::Display) -> Outcome {
    writeln!(out, "rejected: {message}").map_err(io)?;
    Ok(EXIT_FAIL)
}

fn cmd_cert_check(path: &Path, k: Option<usize>, models: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let text = read(path)?;
    let cert = match Certificate::from_json(&text) {
        Ok(c) => c,
        Err(e) => return reject(out, e),
    };
    let k = k.unwrap_or(cert.k);
    let end = match replay_with_k(&cert, k) {
        Ok(end) => end,
        Err(e) => return reject(out, e),
    };
    let mode = match cert.mode {
        Mode::Weak => "weak",
        Mode::Full => "full",
    };
    writeln!(
        out,
        "accepted: {} steps, k = {k}, {mode} mode, end {}",
        cert.steps.len(),
        if end.size() <= 200 { end.to_sexp() } else { format!("of size {}", end.size()) }
    )
    .map_err(io)?;
    if let Some(dir) = models {
        let models = load_models(dir, k)?;
        let algs: Vec<FiniteAlgebra> = models.iter().map(|(_, a)| a.clone()).collect();
        if let Err(e) = soundness_audit(&cert, &algs) {
            return reject(out, e);
        }
        let names: Vec<&str> = models.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "audited in {} models: {}", names.len(), names.join(", ")).map_err(io)?;
    }
    Ok(EXIT_OK)
}
