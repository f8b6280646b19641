//! Spec documents, the expression parser, and the `diffring` command set.
//!
//! Every command builds one JSON report. `--format=json` prints it as is;
//! the human format renders the same document as indented `key: value` text,
//! so both carry identical numbers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::coeff::{parse_scalar, CoeffError, FieldSpec, Scalar};
use crate::gb::{left_gb, quotient_dim, twosided_gb, GBasis, QuotientDim};
use crate::ideal::{
    cert_zero_principal, is_proper, iterate_powint, powint, IdealHandle, IterationReport,
    RoundReport,
};
use crate::invariant::{invariant_factorization, restrict_derivations, UniPoly};
use crate::lie::{summarize, to_ring_spec, validate_lie, LieAlgebraSpec, LieSummary};
use crate::ring::{format_terms, validate_spec, DerivationTable, Poly, Ring, RingSpec};

// ---------------------------------------------------------------------------
// Expressions

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at position {pos}: {kind}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected {found}, expected {expected}")]
    Unexpected {
        found: String,
        expected: &'static str,
    },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("fraction literal `{0}` is not allowed over a prime field")]
    FractionOverPrimeField(String),
    #[error("bad number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Num(String),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(s) => write!(f, "number `{s}`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'/' {
                i += 1;
                let den = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if den == i {
                    return Err(ParseError {
                        pos: start,
                        kind: ParseErrorKind::BadNumber(text[start..i].to_string()),
                    });
                }
            }
            out.push((start, Tok::Num(text[start..i].to_string())));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else if "+-*^()".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap();
            return Err(ParseError {
                pos: i,
                kind: ParseErrorKind::Unexpected {
                    found: format!("character `{ch}`"),
                    expected: "an expression",
                },
            });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct ExprParser<'a> {
    ring: &'a Ring,
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        ParseError {
            pos: self.pos(),
            kind: ParseErrorKind::Unexpected {
                found: self.peek().to_string(),
                expected,
            },
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly, ParseError> {
        let mut acc = self.factor()?;
        while self.eat('*') {
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    /// `^` binds tighter than unary minus: `-x1^2` is `-(x1^2)`.
    fn factor(&mut self) -> Result<Poly, ParseError> {
        if self.eat('-') {
            return Ok(-&self.factor()?);
        }
        let base = self.base()?;
        if self.eat('^') {
            let pos = self.pos();
            let Tok::Num(n) = self.peek().clone() else {
                return Err(self.unexpected("an exponent"));
            };
            let e: u32 = n.parse().map_err(|_| ParseError {
                pos,
                kind: ParseErrorKind::BadNumber(n.clone()),
            })?;
            self.at += 1;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Poly, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.at += 1;
                let field = self.ring.field();
                let c = parse_scalar(&text, field).map_err(|e| {
                    let kind = match e {
                        CoeffError::FractionOverPrimeField(..) => {
                            ParseErrorKind::FractionOverPrimeField(text.clone())
                        }
                        _ => ParseErrorKind::BadNumber(text.clone()),
                    };
                    ParseError { pos, kind }
                })?;
                Ok(Poly::constant(self.ring, c))
            }
            Tok::Ident(name) => {
                self.at += 1;
                match self.ring.var_index(&name) {
                    Some(i) => Ok(self.ring.var(i)),
                    None => Err(ParseError {
                        pos,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    }),
                }
            }
            Tok::Sym('(') => {
                self.at += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.unexpected("`)`"));
                }
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, variable or `(`")),
        }
    }
}

/// Parses `text` and returns its normal form. Products are evaluated in the
/// written order, so `x2*x1` is rewritten using the derivation table.
pub fn parse_expression(text: &str, ring: &Ring) -> Result<Poly, ParseError> {
    let mut p = ExprParser {
        ring,
        toks: tokenize(text)?,
        at: 0,
    };
    let f = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(f)
}

/// Splits a comma-separated generator list at top-level commas.
pub fn split_list(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

// ---------------------------------------------------------------------------
// Spec documents

/// A parsed spec file: a ring table or a Lie algebra.
#[derive(Debug)]
pub enum SpecDocument {
    Ring(RingSpec),
    Lie(LieAlgebraSpec),
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("malformed spec document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Schema(String),
    #[error("delta entry \"{key}\": {source}")]
    Expression { key: String, source: ParseError },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FieldDoc {
    Named(String),
    Prime {
        #[serde(rename = "Fp")]
        fp: u64,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RingDoc {
    field: FieldDoc,
    vars: Vec<String>,
    #[serde(default)]
    delta: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffDoc {
    Int(i64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LieDoc {
    field: FieldDoc,
    dim: usize,
    #[serde(default)]
    brackets: BTreeMap<String, Vec<CoeffDoc>>,
}

fn schema(msg: impl Into<String>) -> SpecError {
    SpecError::Schema(msg.into())
}

fn parse_field(doc: &FieldDoc) -> Result<FieldSpec, SpecError> {
    match doc {
        FieldDoc::Named(s) if s == "Q" => Ok(FieldSpec::Rationals),
        FieldDoc::Named(s) => Err(schema(format!(
            "unknown field \"{s}\"; use \"Q\" or {{\"Fp\": p}}"
        ))),
        FieldDoc::Prime { fp } => FieldSpec::prime(*fp).map_err(|e| schema(e.to_string())),
    }
}

/// `"i,j"` with 1-based indices; returned 0-based.
fn parse_pair(key: &str) -> Result<(usize, usize), SpecError> {
    let bad = || {
        schema(format!(
            "key \"{key}\" must have the form \"i,j\" with positive integers"
        ))
    };
    let (a, b) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = a.trim().parse().map_err(|_| bad())?;
    let j: usize = b.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn parse_ring_doc(doc: RingDoc) -> Result<RingSpec, SpecError> {
    let field = parse_field(&doc.field)?;
    let n = doc.vars.len();
    let spec_err = |e: crate::ring::RingError| schema(e.to_string());
    // Validates names up front.
    RingSpec::new(field, doc.vars.clone(), DerivationTable::new()).map_err(spec_err)?;
    let mut entries: Vec<((usize, usize), String, String)> = Vec::new();
    for (key, text) in doc.delta {
        let (i, j) = parse_pair(&key)?;
        if i >= n || j >= i {
            return Err(schema(format!(
                "delta key \"{key}\" must satisfy n >= i > j >= 1 (n = {n})"
            )));
        }
        entries.push(((i, j), key, text));
    }
    entries.sort_by_key(|e| e.0);
    // delta_i(xj) only involves x1..xj, whose products need rows below i.
    let mut table = DerivationTable::new();
    let mut current_row = usize::MAX;
    let mut partial =
        Ring::with_support_only(RingSpec::commutative(field, n).map_err(spec_err)?).unwrap();
    for ((i, j), key, text) in entries {
        if i != current_row {
            current_row = i;
            let spec = RingSpec::new(field, doc.vars.clone(), table.clone()).map_err(spec_err)?;
            partial = match Ring::with_support_only(spec) {
                Some(r) => r,
                None => Ring::with_support_only(
                    RingSpec::new(field, doc.vars.clone(), DerivationTable::new())
                        .map_err(spec_err)?,
                )
                .unwrap(),
            };
        }
        let value = parse_expression(&text, &partial)
            .map_err(|source| SpecError::Expression { key, source })?;
        table.set(i, j, value.into_terms());
    }
    RingSpec::new(field, doc.vars, table).map_err(spec_err)
}

fn parse_lie_doc(doc: LieDoc) -> Result<LieAlgebraSpec, SpecError> {
    let field = parse_field(&doc.field)?;
    let mut brackets = Vec::new();
    for (key, coeffs) in doc.brackets {
        let (i, j) = parse_pair(&key)?;
        let v = coeffs
            .iter()
            .map(|c| match c {
                CoeffDoc::Int(k) => Ok(Scalar::from_i64(field, *k)),
                CoeffDoc::Text(t) => {
                    parse_scalar(t, field).map_err(|e| schema(format!("bracket \"{key}\": {e}")))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        brackets.push(((i, j), v));
    }
    LieAlgebraSpec::new(field, doc.dim, brackets).map_err(|e| schema(e.to_string()))
}

/// Parses a ring document, or a Lie document when the object has a `dim` key.
pub fn parse_spec(text: &str) -> Result<SpecDocument, SpecError> {
    let value: Value = serde_json::from_str(text)?;
    if value.get("dim").is_some() {
        Ok(SpecDocument::Lie(parse_lie_doc(serde_json::from_value(
            value,
        )?)?))
    } else {
        Ok(SpecDocument::Ring(parse_ring_doc(serde_json::from_value(
            value,
        )?)?))
    }
}

// ---------------------------------------------------------------------------
// Command line

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Left,
    TwoSided,
}

#[derive(Parser, Debug)]
#[command(
    name = "diffring",
    version,
    about = "Exact computation in iterated differential polynomial rings"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "human", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(clap::Args, Debug)]
pub struct IdealArgs {
    /// Ring or Lie spec file.
    #[arg(long)]
    pub spec: PathBuf,
    /// Comma-separated generators.
    #[arg(long)]
    pub ideal: String,
}

#[derive(clap::Args, Debug)]
pub struct PowerArgs {
    /// Degree bound d for truncations.
    #[arg(long = "deg")]
    pub deg: u32,
    /// Largest power kmax.
    #[arg(long = "maxpow")]
    pub maxpow: u32,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a derivation table (or Lie spec) for consistency.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Normal form of an expression.
    Nf {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        expr: String,
    },
    /// Product left * right.
    Mul {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
    /// Reduced Groebner basis and quotient dimension.
    Gb {
        #[command(flatten)]
        ideal: IdealArgs,
        #[arg(long, value_enum, default_value = "two-sided")]
        side: Side,
    },
    /// Truncated powers I^k up to degree d.
    Powint {
        #[command(flatten)]
        ideal: IdealArgs,
        #[command(flatten)]
        power: PowerArgs,
    },
    /// Iterated power intersections I(m).
    Iterate {
        #[command(flatten)]
        ideal: IdealArgs,
        #[command(flatten)]
        power: PowerArgs,
        /// Maximum number of rounds mmax.
        #[arg(long)]
        iters: u32,
    },
    /// Zero certificate for a principal ideal with a normal generator.
    Cert {
        #[command(flatten)]
        ideal: IdealArgs,
    },
    /// Maximal invariant ideals of F[x1] containing (f).
    InvariantFactor {
        #[arg(long)]
        spec: PathBuf,
        /// Monic polynomial in the first variable.
        #[arg(long)]
        poly: String,
        /// Derivation indices i (2..n) to use; all by default. Comma-separated.
        #[arg(long)]
        derivations: Option<String>,
    },
    /// Structure of a Lie algebra spec.
    Lie {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Compare observed vanishing of I(m) with the theoretical bounds.
    Verify {
        #[command(flatten)]
        ideal: IdealArgs,
        #[command(flatten)]
        power: PowerArgs,
        #[arg(long)]
        iters: u32,
    },
}

/// Exit status, standard output and standard error of one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1, optionally with a report to print.
    Domain(String, Option<Report>),
}

fn domain(e: impl fmt::Display) -> Failure {
    Failure::Domain(e.to_string(), None)
}

#[derive(Debug)]
struct Report {
    doc: Value,
    /// Replaces the generic rendering in human format.
    human: Option<String>,
}

impl Report {
    fn new(doc: Value) -> Self {
        Report { doc, human: None }
    }

    fn render(&self, format: Format) -> String {
        match (format, &self.human) {
            (Format::Json, _) => serde_json::to_string_pretty(&self.doc).unwrap() + "\n",
            (Format::Human, Some(h)) => format!("{h}\n"),
            (Format::Human, None) => render_human(&self.doc),
        }
    }
}

/// Runs one command. `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(report) => Outcome {
            code: 0,
            stdout: report.render(cli.format),
            stderr: String::new(),
        },
        Err(Failure::Usage(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Domain(msg, report)) => Outcome {
            code: 1,
            stdout: report.map(|r| r.render(cli.format)).unwrap_or_default(),
            stderr: format!("error: {msg}\n"),
        },
    }
}

fn load_spec(path: &Path) -> Result<SpecDocument, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// The validated ring of a spec file, with the Lie spec when there is one.
fn load_ring(path: &Path) -> Result<(Ring, Option<LieAlgebraSpec>), Failure> {
    match load_spec(path)? {
        SpecDocument::Ring(spec) => Ok((Ring::new(spec).map_err(domain)?, None)),
        SpecDocument::Lie(lie) => {
            let report = validate_lie(&lie);
            if !report.ok {
                return Err(domain(format!("Jacobi identity fails: {report}")));
            }
            let spec = to_ring_spec(&lie).map_err(domain)?;
            Ok((Ring::new(spec).map_err(domain)?, Some(lie)))
        }
    }
}

fn parse_in(text: &str, ring: &Ring) -> Result<Poly, Failure> {
    parse_expression(text, ring).map_err(|e| Failure::Usage(format!("in \"{text}\" {e}")))
}

fn load_ideal(args: &IdealArgs) -> Result<(IdealHandle, Option<LieAlgebraSpec>), Failure> {
    let (ring, lie) = load_ring(&args.spec)?;
    let gens = split_list(&args.ideal)
        .into_iter()
        .map(|t| parse_in(t, &ring))
        .collect::<Result<Vec<_>, _>>()?;
    if gens.is_empty() {
        return Err(Failure::Usage(
            "--ideal needs at least one generator".into(),
        ));
    }
    Ok((IdealHandle::new(&ring, gens).map_err(domain)?, lie))
}

fn polys(ps: &[Poly]) -> Value {
    Value::from(ps.iter().map(|p| p.to_string()).collect::<Vec<_>>())
}

fn qdim(q: QuotientDim) -> Value {
    match q {
        QuotientDim::Finite(n) => json!(n),
        QuotientDim::Infinite => json!("infinite"),
    }
}

fn field_name(f: FieldSpec) -> String {
    f.to_string()
}

fn ring_summary(ring: &Ring) -> Value {
    let mut table = Map::new();
    for i in 0..ring.nvars() {
        for j in 0..i {
            let e = ring.delta(i, j);
            if !e.is_empty() {
                table.insert(
                    format!("{},{}", i + 1, j + 1),
                    json!(format_terms(e, ring.names())),
                );
            }
        }
    }
    json!({"field": field_name(ring.field()), "vars": ring.names(), "delta": table})
}

fn dispatch(command: &Command) -> Result<Report, Failure> {
    match command {
        Command::Validate { spec } => cmd_validate(spec),
        Command::Nf { spec, expr } => {
            let (ring, _) = load_ring(spec)?;
            let f = parse_in(expr, &ring)?;
            Ok(Report {
                doc: json!({"command": "nf", "params": {"expr": expr}, "result": f.to_string()}),
                human: Some(f.to_string()),
            })
        }
        Command::Mul { spec, left, right } => {
            let (ring, _) = load_ring(spec)?;
            let f = parse_in(left, &ring)?;
            let g = parse_in(right, &ring)?;
            let h = &f * &g;
            Ok(Report {
                doc: json!({"command": "mul", "params": {"left": left, "right": right}, "result": h.to_string()}),
                human: Some(h.to_string()),
            })
        }
        Command::Gb { ideal, side } => {
            let (i, _) = load_ideal(ideal)?;
            let gb: GBasis = match side {
                Side::Left => left_gb(i.ring(), i.generators()).map_err(domain)?,
                Side::TwoSided => twosided_gb(i.ring(), i.generators()).map_err(domain)?,
            };
            let side_name = match side {
                Side::Left => "left",
                Side::TwoSided => "two-sided",
            };
            Ok(Report::new(json!({
                "command": "gb",
                "params": {"side": side_name, "order": "deglex"},
                "basis": polys(gb.elements()),
                "quotient_dim": qdim(quotient_dim(&gb)),
            })))
        }
        Command::Powint { ideal, power } => {
            let (i, _) = load_ideal(ideal)?;
            let r = powint(&i, power.deg, power.maxpow).map_err(domain)?;
            Ok(Report::new(json!({
                "command": "powint",
                "params": {"d": power.deg, "kmax": power.maxpow},
                "ideal": polys(i.gb().map_err(domain)?.elements()),
                "k_dims": r.dims(),
                "stabilized_at": r.stabilized_at,
                "candidates": polys(&r.candidates),
                "status": r.status.to_string(),
            })))
        }
        Command::Iterate {
            ideal,
            power,
            iters,
        } => {
            let (i, _) = load_ideal(ideal)?;
            let r = iterate_powint(&i, power.deg, power.maxpow, *iters).map_err(domain)?;
            Ok(Report::new(json!({
                "command": "iterate",
                "params": {"d": power.deg, "kmax": power.maxpow, "mmax": iters},
                "proper": r.proper,
                "rounds": rounds_json(&r),
                "m_obs": r.vanishing_round,
                "status": r.status.to_string(),
                "warnings": r.warnings,
            })))
        }
        Command::Cert { ideal } => {
            let (i, _) = load_ideal(ideal)?;
            let cert = cert_zero_principal(&i).map_err(domain)?;
            Ok(Report::new(json!({
                "command": "cert",
                "params": {},
                "ideal": polys(i.gb().map_err(domain)?.elements()),
                "certificate": cert_json(&cert),
            })))
        }
        Command::InvariantFactor {
            spec,
            poly,
            derivations,
        } => cmd_invariant(spec, poly, derivations.as_deref()),
        Command::Lie { spec } => cmd_lie(spec),
        Command::Verify {
            ideal,
            power,
            iters,
        } => cmd_verify(ideal, power, *iters),
    }
}

fn cmd_validate(path: &Path) -> Result<Report, Failure> {
    match load_spec(path)? {
        SpecDocument::Ring(spec) => {
            let report = validate_spec(&spec);
            let doc = json!({
                "command": "validate",
                "params": {},
                "kind": "ring",
                "ok": report.ok,
                "filtered": spec.is_filtered(),
                "t2_shape": spec.is_t2_shape(),
                "violations": report.violations.iter().map(violation_json).collect::<Vec<_>>(),
            });
            if report.ok {
                Ok(Report::new(doc))
            } else {
                Err(Failure::Domain(
                    format!("invalid derivation table: {report}"),
                    Some(Report::new(doc)),
                ))
            }
        }
        SpecDocument::Lie(lie) => {
            let report = validate_lie(&lie);
            let doc = json!({
                "command": "validate",
                "params": {},
                "kind": "lie",
                "ok": report.ok,
                "violations": report.violations.iter().map(|v| json!({"kind": "jacobi", "triple": v.triple})).collect::<Vec<_>>(),
            });
            if report.ok {
                Ok(Report::new(doc))
            } else {
                Err(Failure::Domain(
                    format!("Jacobi identity fails: {report}"),
                    Some(Report::new(doc)),
                ))
            }
        }
    }
}

fn violation_json(v: &crate::ring::Violation) -> Value {
    use crate::ring::Violation;
    match v {
        Violation::Support { i, j, var } => json!({"kind": "support", "entry": [i, j], "var": var}),
        Violation::Leibniz { i, k, j } => json!({"kind": "leibniz", "triple": [i, k, j]}),
    }
}

fn cert_json(cert: &Result<crate::ideal::ZeroCertificate, crate::ideal::CertFailure>) -> Value {
    match cert {
        Ok(c) => json!({
            "ok": true,
            "generator": c.generator.to_string(),
            "central": c.central,
            "justification": c.justification,
        }),
        Err(f) => json!({"ok": false, "reason": f, "detail": f.to_string()}),
    }
}

fn round_json(r: &RoundReport) -> Value {
    json!({
        "round": r.round,
        "seed": polys(&r.seed),
        "heuristic": r.heuristic,
        "certificate": cert_json(&r.certificate),
        "k_dims": r.powint.dims(),
        "stabilized_at": r.powint.stabilized_at,
        "candidates": polys(&r.powint.candidates),
        "status": r.status.to_string(),
    })
}

fn rounds_json(r: &IterationReport) -> Value {
    Value::from(r.rounds.iter().map(round_json).collect::<Vec<_>>())
}

fn lie_json(s: &LieSummary) -> Value {
    serde_json::to_value(s).unwrap()
}

fn cmd_lie(path: &Path) -> Result<Report, Failure> {
    let SpecDocument::Lie(lie) = load_spec(path)? else {
        return Err(Failure::Usage(format!(
            "{} is not a Lie spec (no \"dim\" key)",
            path.display()
        )));
    };
    let report = validate_lie(&lie);
    let summary = summarize(&lie);
    let ring = if report.ok && summary.adapted_flag {
        let spec = to_ring_spec(&lie).map_err(domain)?;
        let ok = validate_spec(&spec).ok;
        let ring = Ring::new(spec).map_err(domain)?;
        json!({"validated": ok, "table": ring_summary(&ring)["delta"].clone()})
    } else {
        Value::Null
    };
    let doc = json!({
        "command": "lie",
        "params": {},
        "field": field_name(lie.field()),
        "summary": lie_json(&summary),
        "jacobi_violations": report.violations.iter().map(|v| json!(v.triple)).collect::<Vec<_>>(),
        "ring": ring,
    });
    if report.ok {
        Ok(Report::new(doc))
    } else {
        Err(Failure::Domain(
            format!("Jacobi identity fails: {report}"),
            Some(Report::new(doc)),
        ))
    }
}

fn cmd_invariant(path: &Path, text: &str, derivations: Option<&str>) -> Result<Report, Failure> {
    let (ring, _) = load_ring(path)?;
    let f = parse_in(text, &ring)?;
    if !f.uses_only_below(1) {
        return Err(domain(format!(
            "{f} is not a polynomial in {} alone",
            ring.names()[0]
        )));
    }
    let field = ring.field();
    let mut coeffs = Vec::new();
    for (m, c) in f.terms() {
        let k = m.exponents()[0] as usize;
        if coeffs.len() <= k {
            coeffs.resize(k + 1, Scalar::zero(field));
        }
        coeffs[k] = c.clone();
    }
    let u = UniPoly::new(field, coeffs);
    let all = restrict_derivations(&ring);
    let chosen: Vec<usize> = match derivations {
        None => (2..=ring.nvars()).collect(),
        Some(list) => split_list(list)
            .into_iter()
            .map(|s| match s.parse::<usize>() {
                Ok(i) if (2..=ring.nvars()).contains(&i) => Ok(i),
                _ => Err(Failure::Usage(format!(
                    "derivation index `{s}` must be in 2..{}",
                    ring.nvars()
                ))),
            })
            .collect::<Result<_, _>>()?,
    };
    let ds: Vec<_> = chosen.iter().map(|&i| all[i - 2].clone()).collect();
    let var = &ring.names()[0];
    let r = invariant_factorization(&u, &ds).map_err(domain)?;
    let factors: Vec<Value> = r
        .maximal
        .iter()
        .zip(&r.exponents)
        .map(|(g, e)| json!({"generator": g.format_with(var), "exponent": e}))
        .collect();
    Ok(Report::new(json!({
        "command": "invariant-factor",
        "params": {"derivations": chosen},
        "input": u.format_with(var),
        "maximal": factors,
        "complete": r.complete,
        "notes": r.notes,
    })))
}

/// Outcome of comparing an `I(m)` iteration with the theoretical bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Consistent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "CONSISTENT",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Theoretical bounds on the vanishing index of a proper ideal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bounds {
    /// `n` when the table is validated with entries `delta_i(xj)` linear in `xj`.
    pub dimension: Option<usize>,
    /// 2 for a finite-codimension ideal of an enveloping algebra with `[L,L]` nilpotent.
    pub codimension: Option<usize>,
}

impl Bounds {
    pub fn best(&self) -> Option<usize> {
        self.dimension.into_iter().chain(self.codimension).min()
    }
}

/// Result of the verification harness.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub ring: Ring,
    pub validated: bool,
    pub filtered: bool,
    pub t2_shape: bool,
    pub lie: Option<LieSummary>,
    pub ideal_basis: Vec<Poly>,
    pub proper: bool,
    pub quotient_dim: QuotientDim,
    pub iteration: IterationReport,
    pub m_obs: Option<usize>,
    pub bounds: Bounds,
    pub verdict: Verdict,
}

/// Runs the `I(m)` iteration and compares the observed vanishing index with
/// the theoretical bounds. Never claims a bound is violated: anything short
/// of an exact zero within the bound is INCONCLUSIVE.
pub fn verify_theorem(
    i: &IdealHandle,
    lie: Option<&LieAlgebraSpec>,
    d: u32,
    kmax: u32,
    mmax: u32,
) -> Result<VerifyReport, crate::ideal::IdealError> {
    let ring = i.ring().clone();
    let validated = validate_spec(ring.spec()).ok;
    let proper = is_proper(i)?;
    let qd = i.quotient_dim()?;
    let iteration = iterate_powint(i, d, kmax, mmax)?;
    let lie_summary = lie.map(summarize);
    let bounds = Bounds {
        dimension: (validated && ring.is_t2_shape()).then_some(ring.nvars()),
        codimension: lie_summary
            .as_ref()
            .filter(|s| s.derived_nilpotent && s.completely_solvable && qd.is_finite())
            .map(|_| 2),
    };
    let m_obs = iteration.vanishing_round;
    let verdict = match (m_obs, bounds.best()) {
        (Some(m), Some(b)) if proper && m <= b => Verdict::Consistent,
        _ => Verdict::Inconclusive,
    };
    Ok(VerifyReport {
        ideal_basis: i.gb()?.elements().to_vec(),
        ring,
        validated,
        filtered: i.ring().is_filtered(),
        t2_shape: i.ring().is_t2_shape(),
        lie: lie_summary,
        proper,
        quotient_dim: qd,
        iteration,
        m_obs,
        bounds,
        verdict,
    })
}

impl VerifyReport {
    pub fn to_json(&self, d: u32, kmax: u32, mmax: u32) -> Value {
        let it = &self.iteration;
        json!({
            "command": "verify",
            "params": {"d": d, "kmax": kmax, "mmax": mmax},
            "ring": ring_summary(&self.ring),
            "hypotheses": {
                "validated": self.validated,
                "filtered": self.filtered,
                "t2_shape": self.t2_shape,
                "lie": self.lie.as_ref().map(lie_json),
            },
            "ideal": {
                "basis": polys(&self.ideal_basis),
                "proper": self.proper,
                "quotient_dim": qdim(self.quotient_dim),
            },
            "rounds": rounds_json(it),
            "m_obs": self.m_obs,
            "bounds": {"dimension": self.bounds.dimension, "codimension": self.bounds.codimension},
            "bound": self.bounds.best(),
            "verdict": self.verdict.to_string(),
            "warnings": it.warnings,
        })
    }
}

fn cmd_verify(args: &IdealArgs, power: &PowerArgs, iters: u32) -> Result<Report, Failure> {
    let (i, lie) = load_ideal(args)?;
    let report =
        verify_theorem(&i, lie.as_ref(), power.deg, power.maxpow, iters).map_err(domain)?;
    let doc = Report::new(report.to_json(power.deg, power.maxpow, iters));
    if report.proper {
        Ok(doc)
    } else {
        Err(Failure::Domain(
            "the ideal is the whole ring; the vanishing bounds only concern proper ideals".into(),
            Some(doc),
        ))
    }
}

// ---------------------------------------------------------------------------
// Human rendering

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => Some(format!(
            "[{}]",
            a.iter()
                .map(|x| scalar_text(x).unwrap())
                .collect::<Vec<_>>()
                .join(", ")
        )),
        Value::Object(o) if o.is_empty() => Some("{}".into()),
        _ => None,
    }
}

fn render_into(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(out, x, indent + 1);
                    }
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        render_into(out, x, indent + 1);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other).unwrap())),
    }
}

/// Indented `key: value` rendering of a report document.
pub fn render_human(v: &Value) -> String {
    let mut out = String::new();
    render_into(&mut out, v, 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::tests::{abelian, q, solvable2};

    #[test]
    fn expressions() {
        let r = solvable2(q());
        assert_eq!(
            parse_expression("x2*x1", &r).unwrap().to_string(),
            "x1*x2 + x1"
        );
        assert_eq!(
            parse_expression("x1*x2 - x2*x1", &r).unwrap().to_string(),
            "-x1"
        );
        let a = abelian(q(), 2);
        assert_eq!(
            parse_expression("(x1 + 1)^2", &a).unwrap().to_string(),
            "x1^2 + 2*x1 + 1"
        );
        assert_eq!(parse_expression("-x1^2", &a).unwrap().to_string(), "-x1^2");
        assert_eq!(
            parse_expression("1/2*x2 - 3", &a).unwrap().to_string(),
            "1/2*x2 - 3"
        );
        assert_eq!(parse_expression("--x1", &a).unwrap().to_string(), "x1");
    }

    #[test]
    fn expression_errors() {
        let a = abelian(q(), 2);
        let e = parse_expression("x1 + y", &a).unwrap_err();
        assert_eq!(e.pos, 5);
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("y".into()));
        let e = parse_expression("x1 * (x2", &a).unwrap_err();
        assert_eq!(e.pos, 8);
        let e = parse_expression("x1 x2", &a).unwrap_err();
        assert_eq!(e.pos, 3);
        assert!(parse_expression("x1^", &a).is_err());
        assert!(parse_expression("", &a).is_err());
        let f5 = abelian(FieldSpec::prime(5).unwrap(), 2);
        let e = parse_expression("1/2*x1", &f5).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::FractionOverPrimeField("1/2".into()));
    }

    #[test]
    fn generator_lists() {
        assert_eq!(split_list("x1, x2"), vec!["x1", "x2"]);
        assert_eq!(
            split_list("(x1 + x2)*x1,x2^2"),
            vec!["(x1 + x2)*x1", "x2^2"]
        );
        assert!(split_list(" ").is_empty());
    }

    #[test]
    fn spec_documents() {
        let SpecDocument::Ring(spec) =
            parse_spec(r#"{"field": "Q", "vars": ["x1", "x2", "x3"], "delta": {"3,2": "x1"}}"#)
                .unwrap()
        else {
            panic!("expected a ring");
        };
        assert!(validate_spec(&spec).ok);
        assert_eq!(format_terms(spec.delta(2, 1), spec.names()), "x1");

        let SpecDocument::Ring(bad) = parse_spec(
            r#"{"field": {"Fp": 5}, "vars": ["x1","x2","x3"], "delta": {"2,1": "x1", "3,1": "1", "3,2": "0"}}"#,
        )
        .unwrap() else {
            panic!("expected a ring");
        };
        assert!(!validate_spec(&bad).ok);

        let SpecDocument::Lie(lie) =
            parse_spec(r#"{"field": {"Fp": 7}, "dim": 3, "brackets": {"3,2": [1, 0, 0]}}"#)
                .unwrap()
        else {
            panic!("expected a Lie spec");
        };
        assert!(summarize(&lie).nilpotent);

        assert!(parse_spec(r#"{"field": "R", "vars": ["x1"]}"#).is_err());
        assert!(parse_spec(r#"{"field": {"Fp": 6}, "vars": ["x1"]}"#).is_err());
        assert!(
            parse_spec(r#"{"field": "Q", "vars": ["x1","x2"], "delta": {"1,2": "x1"}}"#).is_err()
        );
        assert!(
            parse_spec(r#"{"field": "Q", "vars": ["x1","x2"], "delta": {"2,1": "x1 +"}}"#).is_err()
        );
        assert!(parse_spec(r#"{"field": "Q", "vars": ["x1","x1"]}"#).is_err());
        assert!(parse_spec("not json").is_err());
    }

    #[test]
    fn support_violation_is_parsed_then_rejected() {
        let SpecDocument::Ring(spec) =
            parse_spec(r#"{"field": "Q", "vars": ["x1","x2"], "delta": {"2,1": "x2"}}"#).unwrap()
        else {
            panic!("expected a ring");
        };
        assert!(!spec.support_ok());
        assert!(!validate_spec(&spec).ok);
    }

    #[test]
    fn human_rendering() {
        let v = json!({"a": 1, "b": [1, 2], "c": {"d": null}, "e": [{"f": "x"}]});
        assert_eq!(
            render_human(&v),
            "a: 1\nb: [1, 2]\nc:\n  d: none\ne:\n  -\n    f: x\n"
        );
    }
}
