//! Command line front end: expression parsers that round-trip the display
//! grammar of the core types, a JSON report per subcommand, and a seeded
//! self-check battery.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser as ClapParser, Subcommand};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use sc_core::{
    case_of, check_bound, check_dense, check_stage_counts, classify_weak_limit,
    closure_check_hedgehog, compactify, coord_norm_sq, counts_agree, enumerate_nodes,
    hedgehog_embed, hilbert_embed, homeo_countable, ms_invariant, normalize, oracle_van,
    parse_mult_name, random_ordinal, random_presentation, random_term, random_tree,
    rep_complexity_term, sch_height_term, sigma_embed, van_rank_term, weak_limit, ChildSpec,
    CompactForest, CtxFrame, FamilySpec, GenConfig, Multiplicity, NodeAddr, NodeStep, Ordinal,
    PresContext, PresFamily, PresFrame, Presentation, SymbolicSequence, Term, TreeCompactum,
    TreeContext, WeakLimitError,
};

/// Failures split by who is at fault: `Syntax` means the input never denoted
/// anything (exit 2), `Domain` means a well-formed input hit a semantic
/// restriction (exit 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Syntax(String),
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Syntax(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Syntax(m) | CliError::Domain(m) => m,
        }
    }
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Nat(BigUint),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Caret,
    Star,
    Plus,
    Hole,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Nat(n) => format!("number {n}"),
            Tok::Ident(s) => format!("name {s:?}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Star => "'*'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Hole => "'_'".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, CliError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let tok = match bytes[i] {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'^' => Tok::Caret,
            b'*' => Tok::Star,
            b'+' => Tok::Plus,
            b'_' => Tok::Hole,
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let n: BigUint = src[start..i].parse().expect("digits");
                toks.push((Tok::Nat(n), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                toks.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            c => {
                return Err(CliError::Syntax(format!(
                    "unexpected character {:?} at column {}",
                    c as char,
                    start + 1
                )))
            }
        };
        toks.push((tok, start));
        i += 1;
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct P {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl P {
    fn of(src: &str) -> Result<P, CliError> {
        Ok(P { toks: lex(src)?, pos: 0, end: src.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end) + 1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        self.pos += 1;
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, expected: &str) -> CliError {
        let found = match self.peek() {
            Some(t) => t.describe(),
            None => "end of input".into(),
        };
        CliError::Syntax(format!("expected {expected}, found {found} at column {}", self.col()))
    }

    fn expect(&mut self, t: Tok, expected: &str) -> Result<(), CliError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn ident_is(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(id)) if id == s)
    }

    fn take_nat(&mut self, what: &str) -> Result<BigUint, CliError> {
        match self.peek() {
            Some(Tok::Nat(_)) => match self.bump() {
                Tok::Nat(n) => Ok(n),
                _ => unreachable!(),
            },
            _ => Err(self.err(what)),
        }
    }

    fn finish(&self) -> Result<(), CliError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("end of input"))
        }
    }
}

fn parse_mult(p: &mut P) -> Result<Multiplicity, CliError> {
    match p.peek() {
        Some(Tok::Nat(n)) => {
            if n.is_zero() {
                return Err(CliError::Syntax(format!(
                    "multiplicities are positive, found 0 at column {}",
                    p.col()
                )));
            }
            match p.bump() {
                Tok::Nat(n) => Ok(Multiplicity::finite(n)),
                _ => unreachable!(),
            }
        }
        Some(Tok::Ident(s)) => match parse_mult_name(s) {
            Some(m) => {
                p.bump();
                Ok(m)
            }
            None => Err(p.err("a multiplicity")),
        },
        _ => Err(p.err("a multiplicity")),
    }
}

fn parse_ordinal(p: &mut P) -> Result<Ordinal, CliError> {
    let mut acc = parse_ord_term(p)?;
    while p.eat(&Tok::Plus) {
        acc = acc.add(&parse_ord_term(p)?);
    }
    Ok(acc)
}

fn parse_ord_term(p: &mut P) -> Result<Ordinal, CliError> {
    match p.peek() {
        Some(Tok::Nat(_)) => Ok(Ordinal::from_nat(p.take_nat("a number")?)),
        Some(Tok::Ident(s)) if s == "w" => {
            p.bump();
            let exp = if p.eat(&Tok::Caret) { parse_ord_atom(p)? } else { Ordinal::one() };
            let coeff = if p.eat(&Tok::Star) { p.take_nat("a coefficient")? } else { BigUint::one() };
            Ok(Ordinal::term(exp, coeff))
        }
        _ => Err(p.err("an ordinal term")),
    }
}

// Exponent position: a bare `w` tower or a parenthesized sum, so that in
// `w^w*2` the 2 is the coefficient of the outer term, not of the exponent.
fn parse_ord_atom(p: &mut P) -> Result<Ordinal, CliError> {
    match p.peek() {
        Some(Tok::Nat(_)) => Ok(Ordinal::from_nat(p.take_nat("a number")?)),
        Some(Tok::LParen) => {
            p.bump();
            let o = parse_ordinal(p)?;
            p.expect(Tok::RParen, "')'")?;
            Ok(o)
        }
        Some(Tok::Ident(s)) if s == "w" => {
            p.bump();
            let exp = if p.eat(&Tok::Caret) { parse_ord_atom(p)? } else { Ordinal::one() };
            Ok(Ordinal::term(exp, BigUint::one()))
        }
        _ => Err(p.err("an exponent")),
    }
}

/// A tree expression that may carry the context hole. The frames collected
/// along the hole path are ordered outermost first, matching `TreeContext`.
enum HTree {
    Pure(TreeCompactum),
    Holed(Vec<CtxFrame>),
}

fn parse_htree(p: &mut P, allow_hole: bool) -> Result<HTree, CliError> {
    match p.peek() {
        Some(Tok::Hole) if allow_hole => {
            p.bump();
            Ok(HTree::Holed(Vec::new()))
        }
        Some(Tok::Nat(n)) if n.is_one() => {
            p.bump();
            Ok(HTree::Pure(TreeCompactum::leaf()))
        }
        Some(Tok::Ident(s)) if s == "A" => {
            p.bump();
            p.expect(Tok::LParen, "'('")?;
            let mut specs = Vec::new();
            let mut hole: Option<(Multiplicity, Vec<CtxFrame>)> = None;
            loop {
                if p.ident_is("fam") {
                    specs.push(ChildSpec::Family(parse_tree_family(p)?));
                } else {
                    let item = parse_htree(p, allow_hole)?;
                    let mult =
                        if p.eat(&Tok::Caret) { parse_mult(p)? } else { Multiplicity::one() };
                    match item {
                        HTree::Pure(tree) => specs.push(ChildSpec::Concrete { tree, mult }),
                        HTree::Holed(inner) => {
                            if hole.is_some() {
                                return Err(CliError::Syntax(format!(
                                    "more than one hole before column {}",
                                    p.col()
                                )));
                            }
                            hole = Some((mult, inner));
                        }
                    }
                }
                if p.eat(&Tok::Comma) {
                    continue;
                }
                p.expect(Tok::RParen, "',' or ')'")?;
                break;
            }
            match hole {
                None => Ok(HTree::Pure(TreeCompactum::new(specs))),
                Some((hole_mult, inner)) => {
                    let mut frames = vec![CtxFrame::new(specs, hole_mult)];
                    frames.extend(inner);
                    Ok(HTree::Holed(frames))
                }
            }
        }
        _ => Err(p.err(if allow_hole { "a tree or '_'" } else { "a tree" })),
    }
}

fn parse_pure_tree(p: &mut P) -> Result<TreeCompactum, CliError> {
    match parse_htree(p, false)? {
        HTree::Pure(t) => Ok(t),
        HTree::Holed(_) => unreachable!("holes rejected"),
    }
}

fn parse_tree_family(p: &mut P) -> Result<FamilySpec, CliError> {
    p.bump(); // fam
    p.expect(Tok::LParen, "'('")?;
    let ctx = match parse_htree(p, true)? {
        HTree::Holed(frames) => TreeContext::new(frames).map_err(domain)?,
        HTree::Pure(_) => return Err(p.err("a context with one hole")),
    };
    p.expect(Tok::Comma, "','")?;
    let base = parse_pure_tree(p)?;
    p.expect(Tok::RParen, "')'")?;
    FamilySpec::new(ctx, base).map_err(domain)
}

fn parse_forest(p: &mut P) -> Result<CompactForest, CliError> {
    p.bump(); // F
    p.expect(Tok::LBracket, "'['")?;
    let mut entries = Vec::new();
    if !p.eat(&Tok::RBracket) {
        loop {
            p.expect(Tok::LParen, "'('")?;
            let t = parse_pure_tree(p)?;
            p.expect(Tok::Comma, "','")?;
            let n = p.take_nat("a count")?;
            if n.is_zero() {
                return Err(CliError::Syntax(format!(
                    "forest counts are positive, found 0 at column {}",
                    p.col()
                )));
            }
            p.expect(Tok::RParen, "')'")?;
            entries.push((t, n));
            if p.eat(&Tok::Comma) {
                continue;
            }
            p.expect(Tok::RBracket, "',' or ']'")?;
            break;
        }
    }
    Ok(CompactForest::new(entries))
}

fn parse_term(p: &mut P) -> Result<Term, CliError> {
    if p.ident_is("F") {
        Ok(Term::Forest(parse_forest(p)?))
    } else {
        Ok(Term::Tree(parse_pure_tree(p)?))
    }
}

/// Mirror of [`HTree`] for presentations.
enum HPres {
    Pure(Presentation),
    Holed(Vec<PresFrame>),
}

fn parse_hpres(p: &mut P, allow_hole: bool) -> Result<HPres, CliError> {
    match p.peek() {
        Some(Tok::Hole) if allow_hole => {
            p.bump();
            Ok(HPres::Holed(Vec::new()))
        }
        Some(Tok::Ident(s)) if s == "empty" => {
            p.bump();
            Ok(HPres::Pure(Presentation::Empty))
        }
        Some(Tok::Ident(s)) if s == "pt" => {
            p.bump();
            Ok(HPres::Pure(Presentation::Single))
        }
        Some(Tok::Ident(s)) if s == "sum" => {
            p.bump();
            p.expect(Tok::LParen, "'('")?;
            let mut parts = Vec::new();
            let mut families = Vec::new();
            let mut hole: Option<(Multiplicity, Vec<PresFrame>)> = None;
            if !p.eat(&Tok::RParen) {
                loop {
                    if p.ident_is("fam") {
                        families.push(parse_pres_family(p)?);
                    } else {
                        let item = parse_hpres(p, allow_hole)?;
                        let mult =
                            if p.eat(&Tok::Caret) { parse_mult(p)? } else { Multiplicity::one() };
                        match item {
                            HPres::Pure(q) => parts.push((q, mult)),
                            HPres::Holed(inner) => {
                                if hole.is_some() {
                                    return Err(CliError::Syntax(format!(
                                        "more than one hole before column {}",
                                        p.col()
                                    )));
                                }
                                hole = Some((mult, inner));
                            }
                        }
                    }
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    p.expect(Tok::RParen, "',' or ')'")?;
                    break;
                }
            }
            match hole {
                None => Ok(HPres::Pure(Presentation::sum(parts, families))),
                Some((hole_mult, inner)) => {
                    let mut frames = vec![PresFrame::Sum { parts, families, hole_mult }];
                    frames.extend(inner);
                    Ok(HPres::Holed(frames))
                }
            }
        }
        Some(Tok::Ident(s)) if s == "pwb" => {
            p.bump();
            p.expect(Tok::LParen, "'('")?;
            p.expect(Tok::LBracket, "'['")?;
            let mut prefix = Vec::new();
            if !matches!(p.peek(), Some(Tok::Semi)) {
                loop {
                    prefix.push(parse_hpres(p, allow_hole)?);
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    break;
                }
            }
            p.expect(Tok::Semi, "';'")?;
            let mut tail = Vec::new();
            if !matches!(p.peek(), Some(Tok::RBracket)) {
                loop {
                    tail.push(parse_hpres(p, allow_hole)?);
                    if p.eat(&Tok::Comma) {
                        continue;
                    }
                    break;
                }
            }
            p.expect(Tok::RBracket, "']'")?;
            p.expect(Tok::RParen, "')'")?;
            assemble_pwb(p, prefix, tail)
        }
        _ => Err(p.err(if allow_hole { "a presentation or '_'" } else { "a presentation" })),
    }
}

/// Splits pwb slot items around at most one holed slot; the slot kind (prefix
/// or tail) decides the frame shape, and its own multiplicity is implied.
fn assemble_pwb(p: &P, prefix: Vec<HPres>, tail: Vec<HPres>) -> Result<HPres, CliError> {
    let holes = prefix.iter().chain(&tail).filter(|h| matches!(h, HPres::Holed(_))).count();
    if holes > 1 {
        return Err(CliError::Syntax(format!("more than one hole before column {}", p.col())));
    }
    let pure = |items: Vec<HPres>| -> Vec<Presentation> {
        items
            .into_iter()
            .map(|h| match h {
                HPres::Pure(q) => q,
                HPres::Holed(_) => unreachable!("hole split off"),
            })
            .collect()
    };
    if holes == 0 {
        return Ok(HPres::Pure(Presentation::PointWithBase {
            prefix: pure(prefix),
            tail: pure(tail),
        }));
    }
    if let Some(k) = prefix.iter().position(|h| matches!(h, HPres::Holed(_))) {
        let mut prefix = prefix;
        let inner = match prefix.remove(k) {
            HPres::Holed(frames) => frames,
            HPres::Pure(_) => unreachable!(),
        };
        let after = pure(prefix.split_off(k));
        let frame =
            PresFrame::PwbPrefix { before: pure(prefix), after, tail: pure(tail) };
        let mut frames = vec![frame];
        frames.extend(inner);
        return Ok(HPres::Holed(frames));
    }
    let k = tail.iter().position(|h| matches!(h, HPres::Holed(_))).expect("hole in tail");
    let mut tail = tail;
    let inner = match tail.remove(k) {
        HPres::Holed(frames) => frames,
        HPres::Pure(_) => unreachable!(),
    };
    let after = pure(tail.split_off(k));
    let frame = PresFrame::PwbTail { prefix: pure(prefix), before: pure(tail), after };
    let mut frames = vec![frame];
    frames.extend(inner);
    Ok(HPres::Holed(frames))
}

fn parse_pure_pres(p: &mut P) -> Result<Presentation, CliError> {
    match parse_hpres(p, false)? {
        HPres::Pure(q) => Ok(q),
        HPres::Holed(_) => unreachable!("holes rejected"),
    }
}

fn parse_pres_family(p: &mut P) -> Result<PresFamily, CliError> {
    p.bump(); // fam
    p.expect(Tok::LParen, "'('")?;
    let ctx = match parse_hpres(p, true)? {
        HPres::Holed(frames) => PresContext::new(frames).map_err(domain)?,
        HPres::Pure(_) => return Err(p.err("a context with one hole")),
    };
    p.expect(Tok::Comma, "','")?;
    let base = parse_pure_pres(p)?;
    p.expect(Tok::RParen, "')'")?;
    PresFamily::new(ctx, base).map_err(domain)
}

pub fn parse_term_str(src: &str) -> Result<Term, CliError> {
    let mut p = P::of(src)?;
    let t = parse_term(&mut p)?;
    p.finish()?;
    Ok(t)
}

pub fn parse_tree_str(src: &str) -> Result<TreeCompactum, CliError> {
    let mut p = P::of(src)?;
    let t = parse_pure_tree(&mut p)?;
    p.finish()?;
    Ok(t)
}

pub fn parse_pres_str(src: &str) -> Result<Presentation, CliError> {
    let mut p = P::of(src)?;
    let q = parse_pure_pres(&mut p)?;
    p.finish()?;
    Ok(q)
}

pub fn parse_ordinal_str(src: &str) -> Result<Ordinal, CliError> {
    let mut p = P::of(src)?;
    let o = parse_ordinal(&mut p)?;
    p.finish()?;
    Ok(o)
}

/// Node addresses use their own tiny grammar: `.` is the root, otherwise
/// `/`-separated steps `spec.copy` or `spec~member`.
pub fn parse_addr_str(src: &str) -> Result<NodeAddr, CliError> {
    let s = src.trim();
    if s == "." {
        return Ok(NodeAddr::root());
    }
    let mut steps = Vec::new();
    for seg in s.split('/') {
        let step = if let Some((spec, copy)) = seg.split_once('.') {
            NodeStep::Copy {
                spec: parse_num(spec, seg)?,
                copy: parse_num(copy, seg)?,
            }
        } else if let Some((spec, member)) = seg.split_once('~') {
            NodeStep::Member {
                spec: parse_num(spec, seg)?,
                member: parse_num(member, seg)?,
            }
        } else {
            return Err(CliError::Syntax(format!(
                "address step {seg:?} is neither 'spec.copy' nor 'spec~member'"
            )));
        };
        steps.push(step);
    }
    Ok(NodeAddr::new(steps))
}

fn parse_num<T: FromStr>(s: &str, seg: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| CliError::Syntax(format!("bad number {s:?} in address step {seg:?}")))
}

// ---------------------------------------------------------------------------
// JSON helpers

fn nat_value(n: &BigUint) -> Value {
    match n.to_u64() {
        Some(v) => json!(v),
        None => json!(n.to_string()),
    }
}

/// Ordinals print canonically; a finite ordinal may instead be wanted as a
/// plain number, e.g. the rank slot of the two-part invariant.
fn ord_value_numeric(o: &Ordinal) -> Value {
    match o.as_nat() {
        Some(n) => nat_value(&n),
        None => json!(o.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Command definitions

#[derive(ClapParser)]
#[command(name = "sc", version, about = "Scattered-space calculator: ranks, canonical forms, compact encodings, embeddings")]
struct Cli {
    /// Pretty-print the JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scattered height of a tree or forest expression.
    Sch { expr: String },
    /// Derived-set rank of a tree or forest expression.
    Van {
        expr: String,
        /// Recompute through the stage-tracking oracle and report agreement.
        #[arg(long)]
        oracle: bool,
    },
    /// Rank and last-stage count, the full homeomorphism invariant.
    Ms {
        expr: String,
        /// Cross-check stage sizes against literal derived-set iteration.
        #[arg(long)]
        oracle: bool,
    },
    /// Representation complexity of a tree or forest expression.
    Com { expr: String },
    /// Canonical form with the same invariant.
    Normalize { expr: String },
    /// Decide homeomorphism of two countable compact expressions.
    Homeo { left: String, right: String },
    /// Encode a presentation as a compact tree or forest, with witness.
    Compactify { pres: String },
    /// Indicator coordinates of a node in the branch-space embedding.
    EmbedSigma { tree: String, node: String },
    /// Weighted coordinates of a node in the square-summable embedding.
    EmbedHilbert {
        tree: String,
        node: String,
        /// Decay weight, a rational in (0, 1).
        #[arg(long, default_value = "1/2")]
        weight: String,
    },
    /// Embed a point of the metric hedgehog, or audit weak closures.
    Hedgehog {
        /// Number of spines.
        #[arg(long)]
        kappa: u64,
        /// Distance parameter in [0, 1] (point mode, with --spine).
        #[arg(long)]
        t: Option<f64>,
        /// Spine index (point mode, with --t).
        #[arg(long)]
        spine: Option<u64>,
        /// Number of symbolic sequences to audit (closure mode, with --seed).
        #[arg(long)]
        trials: Option<usize>,
        /// Seed for closure mode.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Weak limit of a symbolic coordinate sequence given as JSON.
    Weaklimit {
        seq: String,
        /// Also classify the limit against the hedgehog with this many spines.
        #[arg(long)]
        kappa: Option<u64>,
    },
    /// Seeded self-check battery across every module.
    VerifyAll {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Emit `name,pass,detail` lines instead of JSON.
        #[arg(long)]
        csv: bool,
    },
}

// ---------------------------------------------------------------------------
// Command bodies

fn cmd_sch(expr: &str) -> Result<Value, CliError> {
    let t = parse_term_str(expr)?;
    Ok(json!({ "sch": sch_height_term(&t).to_string() }))
}

fn cmd_van(expr: &str, oracle: bool) -> Result<Value, CliError> {
    let t = parse_term_str(expr)?;
    let van = van_rank_term(&t);
    let mut out = json!({ "van": van.to_string() });
    if oracle {
        out["oracle_agrees"] = json!(oracle_van(&t) == van);
    }
    Ok(out)
}

fn cmd_ms(expr: &str, oracle: bool) -> Result<Value, CliError> {
    let t = parse_term_str(expr)?;
    let (rank, count) = ms_invariant(&t).map_err(domain)?;
    let mut out = json!({
        "rank": ord_value_numeric(&rank),
        "count": nat_value(&count),
    });
    if oracle {
        let agrees = check_stage_counts(&t, 4).is_ok() && counts_agree(&t, 100_000);
        out["oracle_agrees"] = json!(agrees);
    }
    Ok(out)
}

fn cmd_com(expr: &str) -> Result<Value, CliError> {
    let t = parse_term_str(expr)?;
    Ok(json!({ "com": rep_complexity_term(&t).to_string() }))
}

fn cmd_normalize(expr: &str) -> Result<Value, CliError> {
    let t = parse_term_str(expr)?;
    Ok(json!({ "normalized": normalize(&t).to_string() }))
}

fn cmd_homeo(left: &str, right: &str) -> Result<Value, CliError> {
    let a = parse_term_str(left)?;
    let b = parse_term_str(right)?;
    let same = homeo_countable(&a, &b).map_err(domain)?;
    Ok(json!({ "homeomorphic": same }))
}

fn cmd_compactify(pres: &str) -> Result<Value, CliError> {
    let p = parse_pres_str(pres)?;
    let (term, witness) = compactify(&p);
    let report = check_bound(&p, &term);
    Ok(json!({
        "tree": term.to_string(),
        "witness": serde_json::to_value(&witness).expect("witness serializes"),
        "alpha": report.alpha.to_string(),
        "n": nat_value(&report.finite_part),
        "bound": report.bound.to_string(),
        "actual": report.actual.to_string(),
        "ok": report.ok,
        "case": serde_json::to_value(case_of(&p)).expect("case serializes"),
    }))
}

fn cmd_embed_sigma(tree: &str, node: &str) -> Result<Value, CliError> {
    let t = parse_tree_str(tree)?;
    let addr = parse_addr_str(node)?;
    let v = sigma_embed(&t, &addr).map_err(domain)?;
    let coords: Map<String, Value> =
        v.iter().map(|(k, one)| (k.to_string(), json!(*one))).collect();
    Ok(json!({ "node": addr.to_string(), "coords": coords }))
}

fn cmd_embed_hilbert(tree: &str, node: &str, weight: &str) -> Result<Value, CliError> {
    let t = parse_tree_str(tree)?;
    let addr = parse_addr_str(node)?;
    let w = BigRational::from_str(weight)
        .map_err(|e| CliError::Syntax(format!("bad weight {weight:?}: {e}")))?;
    let v = hilbert_embed(&t, &addr, &w).map_err(domain)?;
    let coords: Map<String, Value> =
        v.iter().map(|(k, x)| (k.to_string(), json!(x.to_string()))).collect();
    Ok(json!({
        "node": addr.to_string(),
        "coords": coords,
        "norm_sq": v.norm_sq().to_string(),
    }))
}

fn cmd_hedgehog(
    kappa: u64,
    t: Option<f64>,
    spine: Option<u64>,
    trials: Option<usize>,
    seed: Option<u64>,
) -> Result<Value, CliError> {
    match (t, spine, trials, seed) {
        (Some(t), Some(spine), None, None) => {
            let v = hedgehog_embed(t, spine, kappa).map_err(domain)?;
            let coords: Map<String, Value> =
                v.iter().map(|(k, x)| (k.to_string(), json!(*x))).collect();
            Ok(json!({ "coords": coords, "norm_sq": coord_norm_sq(&v) }))
        }
        (None, None, Some(trials), Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = closure_check_hedgehog(kappa, trials, &mut rng);
            Ok(serde_json::to_value(report).expect("report serializes"))
        }
        _ => Err(CliError::Syntax(
            "pass either --t with --spine, or --trials with --seed".into(),
        )),
    }
}

fn cmd_weaklimit(seq: &str, kappa: Option<u64>) -> Result<Value, CliError> {
    let seq: SymbolicSequence = serde_json::from_str(seq)
        .map_err(|e| CliError::Syntax(format!("bad sequence JSON: {e}")))?;
    match weak_limit(&seq) {
        Ok(coords) => {
            let limit: Map<String, Value> =
                coords.iter().map(|(k, x)| (k.to_string(), json!(*x))).collect();
            let mut out = json!({ "limit": limit });
            if let Some(kappa) = kappa {
                let class = classify_weak_limit(&coords, kappa);
                out["class"] = serde_json::to_value(class).expect("class serializes");
            }
            Ok(out)
        }
        Err(WeakLimitError::Divergent) => Ok(json!({ "divergent": true })),
        Err(e) => Err(domain(e)),
    }
}

// ---------------------------------------------------------------------------
// Self-check battery

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn run_checks(seed: u64, trials: usize) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Ordinal arithmetic laws on random triples.
    let mut fails = 0;
    for _ in 0..trials {
        let a = random_ordinal(&mut rng, 2);
        let b = random_ordinal(&mut rng, 2);
        let c = random_ordinal(&mut rng, 2);
        if a.add(&b).add(&c) != a.add(&b.add(&c)) {
            fails += 1;
        }
        let (limit, n) = a.split_limit_finite();
        if limit.add(&Ordinal::from_nat(n)) != a {
            fails += 1;
        }
        let mut v = [a, b, c];
        v.sort();
        if !(v[0] <= v[1] && v[1] <= v[2] && v[0] <= v[2]) {
            fails += 1;
        }
    }
    checks.push(Check {
        name: "ordinal_laws",
        pass: fails == 0,
        detail: format!("{trials} triples, {fails} failures"),
    });

    // The canonical form keeps the invariant and is a fixed point.
    let cfg = GenConfig::default();
    let mut fails = 0;
    for _ in 0..trials {
        let t = random_term(&mut rng, &cfg);
        let n1 = normalize(&t);
        if rep_complexity_term(&n1) != sch_height_term(&t) || normalize(&n1) != n1 {
            fails += 1;
            continue;
        }
        if ms_invariant(&t).is_ok() && homeo_countable(&t, &n1) != Ok(true) {
            fails += 1;
        }
    }
    checks.push(Check {
        name: "normalize_laws",
        pass: fails == 0,
        detail: format!("{trials} terms, {fails} failures"),
    });

    // Closed-form stage sizes against literal derived-set iteration.
    let finite_cfg = GenConfig {
        max_depth: 3,
        mult_palette: vec![Multiplicity::one(), Multiplicity::finite(2u32)],
        family_prob: 0.0,
        ensure_infinite: false,
        max_children: 3,
    };
    let mut fails = 0;
    for _ in 0..trials {
        let t = random_term(&mut rng, &finite_cfg);
        if !counts_agree(&t, 100_000) || check_stage_counts(&t, 4).is_err() {
            fails += 1;
        }
    }
    checks.push(Check {
        name: "oracle_stages",
        pass: fails == 0,
        detail: format!("{trials} finite terms, {fails} failures"),
    });

    // Compact encodings are dense in the witness sense and meet the bound.
    let mut fails = 0;
    for _ in 0..trials {
        let q = random_presentation(&mut rng, &cfg);
        let (term, witness) = compactify(&q);
        if check_dense(&term, &witness).is_err() || !check_bound(&q, &term).ok {
            fails += 1;
        }
    }
    checks.push(Check {
        name: "compactify_dense",
        pass: fails == 0,
        detail: format!("{trials} presentations, {fails} failures"),
    });

    // Symbolic weak limits land where their construction says they should.
    let report = closure_check_hedgehog(256, trials, &mut rng);
    checks.push(Check {
        name: "hedgehog_closure",
        pass: report.mismatches == 0 && report.image > 0,
        detail: format!(
            "{} trials: {} image, {} added, {} divergent, {} mismatches",
            report.trials, report.image, report.added, report.divergent, report.mismatches
        ),
    });

    // Embedding geometry: supports, norm bound, and the root as sole origin.
    let w = BigRational::new(1.into(), 2.into());
    let norm_cap = BigRational::new(1.into(), 3.into());
    let mut fails = 0;
    let mut nodes_seen = 0usize;
    for _ in 0..trials / 10 + 1 {
        let t = random_tree(&mut rng, &cfg);
        for addr in enumerate_nodes(&t, 2, 2) {
            nodes_seen += 1;
            let sigma = sigma_embed(&t, &addr).expect("enumerated address");
            let h = hilbert_embed(&t, &addr, &w).expect("enumerated address");
            if sigma.support_size() != addr.steps().len() + 1
                || h.norm_sq() > norm_cap
                || h.is_origin() != addr.is_root()
            {
                fails += 1;
            }
        }
    }
    checks.push(Check {
        name: "embed_geometry",
        pass: fails == 0,
        detail: format!("{nodes_seen} nodes, {fails} failures"),
    });

    // Every printed expression parses back to the same value.
    let mut fails = 0;
    for _ in 0..trials {
        let t = random_term(&mut rng, &cfg);
        if parse_term_str(&t.to_string()).as_ref() != Ok(&t) {
            fails += 1;
        }
        let q = random_presentation(&mut rng, &cfg);
        if parse_pres_str(&q.to_string()).as_ref() != Ok(&q) {
            fails += 1;
        }
        let o = random_ordinal(&mut rng, 3);
        if parse_ordinal_str(&o.to_string()).as_ref() != Ok(&o) {
            fails += 1;
        }
    }
    checks.push(Check {
        name: "parse_roundtrip",
        pass: fails == 0,
        detail: format!("{trials} rounds, {fails} failures"),
    });

    checks
}

fn cmd_verify_all(
    seed: u64,
    trials: usize,
    csv: bool,
    pretty: bool,
    out: &mut dyn Write,
) -> i32 {
    let checks = run_checks(seed, trials);
    let all_pass = checks.iter().all(|c| c.pass);
    if csv {
        let mut buf = String::new();
        for c in &checks {
            // Details stay a single unquoted field.
            let _ = writeln!(buf, "{},{},{}", c.name, c.pass, c.detail.replace(',', ";"));
        }
        let _ = out.write_all(buf.as_bytes());
    } else {
        let report = json!({
            "checks": checks
                .iter()
                .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
                .collect::<Vec<_>>(),
            "all_pass": all_pass,
        });
        emit(out, pretty, &report);
    }
    if all_pass {
        0
    } else {
        1
    }
}

// ---------------------------------------------------------------------------
// Entry points

fn emit(out: &mut dyn Write, pretty: bool, v: &Value) {
    let text = if pretty {
        serde_json::to_string_pretty(v).expect("serializable")
    } else {
        serde_json::to_string(v).expect("serializable")
    };
    let _ = writeln!(out, "{text}");
}

pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    let result = match &cli.cmd {
        Cmd::Sch { expr } => cmd_sch(expr),
        Cmd::Van { expr, oracle } => cmd_van(expr, *oracle),
        Cmd::Ms { expr, oracle } => cmd_ms(expr, *oracle),
        Cmd::Com { expr } => cmd_com(expr),
        Cmd::Normalize { expr } => cmd_normalize(expr),
        Cmd::Homeo { left, right } => cmd_homeo(left, right),
        Cmd::Compactify { pres } => cmd_compactify(pres),
        Cmd::EmbedSigma { tree, node } => cmd_embed_sigma(tree, node),
        Cmd::EmbedHilbert { tree, node, weight } => cmd_embed_hilbert(tree, node, weight),
        Cmd::Hedgehog { kappa, t, spine, trials, seed } => {
            cmd_hedgehog(*kappa, *t, *spine, *trials, *seed)
        }
        Cmd::Weaklimit { seq, kappa } => cmd_weaklimit(seq, *kappa),
        Cmd::VerifyAll { seed, trials, csv } => {
            return cmd_verify_all(*seed, *trials, *csv, cli.pretty, out)
        }
    };
    match result {
        Ok(v) => {
            emit(out, cli.pretty, &v);
            0
        }
        Err(e) => {
            emit(err, cli.pretty, &json!({ "error": e.message() }));
            e.exit_code()
        }
    }
}

pub fn run_env() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(&args, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ordinal(s: &str) -> Ordinal {
        parse_ordinal_str(s).unwrap()
    }

    #[test]
    fn ordinal_grammar_accepts_human_shorthand() {
        assert_eq!(ordinal("0"), Ordinal::zero());
        assert_eq!(ordinal("5"), Ordinal::from_nat(5u32));
        assert_eq!(ordinal("w"), Ordinal::omega());
        assert_eq!(ordinal("w*3"), Ordinal::term(Ordinal::one(), 3u32.into()));
        assert_eq!(ordinal("w^2"), Ordinal::omega_power(Ordinal::from_nat(2u32)));
        assert_eq!(ordinal("w+1"), Ordinal::omega().succ());
        // The coefficient binds to the outer term, not the exponent.
        assert_eq!(ordinal("w^w*2"), Ordinal::term(Ordinal::omega(), 2u32.into()));
    }

    #[test]
    fn canonical_ordinals_round_trip() {
        for s in ["0", "w^0*1", "w^1*1 + w^0*2", "w^(w^1*1)*2", "w^(w^1*1 + w^0*1)*3"] {
            let o = ordinal(s);
            assert_eq!(o.to_string(), s);
        }
    }

    #[test]
    fn tree_grammar_round_trips_contexts_and_families() {
        for s in [
            "1",
            "A(1^w)",
            "A(1^2, A(1^w))",
            "A(fam(A(_^w), 1))",
            "A(1^3, fam(A(A(_^w)^2, 1), A(1^w)))",
            "F[]",
            "F[(1, 2), (A(1^w), 1)]",
        ] {
            let t = parse_term_str(s).unwrap();
            assert_eq!(t.to_string(), s);
        }
    }

    #[test]
    fn pres_grammar_round_trips_every_shape() {
        for s in [
            "empty",
            "pt",
            "sum()",
            "sum(pt^2, pt^w)",
            "pwb([;])",
            "pwb([pt;])",
            "pwb([; pt])",
            "pwb([pt, empty; pt, pt])",
            "sum(fam(pwb([; _]), pt))",
            "sum(fam(pwb([; _, pt]), sum(pt^2)))",
        ] {
            let q = parse_pres_str(s).unwrap();
            assert_eq!(q.to_string(), s);
        }
    }

    #[test]
    fn hole_rules_are_enforced() {
        // No hole outside a context position.
        assert!(matches!(parse_term_str("A(_^w)"), Err(CliError::Syntax(_))));
        // Exactly one hole inside a context position.
        assert!(matches!(parse_term_str("A(fam(A(1), 1))"), Err(CliError::Syntax(_))));
        assert!(matches!(parse_term_str("A(fam(A(_, _), 1))"), Err(CliError::Syntax(_))));
        // A bare hole is an empty context, which the core rejects.
        assert!(matches!(parse_term_str("A(fam(_, 1))"), Err(CliError::Domain(_))));
    }

    #[test]
    fn zero_multiplicities_are_syntax_errors() {
        assert!(matches!(parse_term_str("A(1^0)"), Err(CliError::Syntax(_))));
        assert!(matches!(parse_term_str("F[(1, 0)]"), Err(CliError::Syntax(_))));
        assert!(matches!(parse_pres_str("sum(pt^0)"), Err(CliError::Syntax(_))));
    }

    #[test]
    fn addresses_parse_both_step_kinds() {
        assert!(parse_addr_str(".").unwrap().is_root());
        let a = parse_addr_str("0.2/1~3").unwrap();
        assert_eq!(a.to_string(), "0.2/1~3");
        assert!(parse_addr_str("0-2").is_err());
        assert!(parse_addr_str("x.1").is_err());
    }
}
