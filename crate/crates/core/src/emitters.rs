//! Text emission of constraint systems (CPLEX LP and SMT-LIB2), an LP reader,
//! and the subprocess bridge to external solvers.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::encoder::{ConstraintSystem, Domain, Gadget, LinExpr, Relation, VarId, VarRole};
use crate::error::{Error, Result};
use crate::milp::{solve_milp, MilpVerdict, SolveMode, SolveStats, SolverOptions, UnknownReason, AUDIT_TOL};

const DUMMY: &str = "x_dummy";
const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Internal,
    ExternalLp,
    ExternalSmt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionDialect {
    /// `<name> <value>` lines plus a status token.
    Sol,
    /// `sat`/`unsat` followed by `(define-fun ...)` s-expressions.
    SmtModel,
}

#[derive(Debug, Clone)]
pub struct SolverBackend {
    pub kind: BackendKind,
    /// Shell command with a `{file}` placeholder and an optional `{sol}`
    /// placeholder for a solution file path.
    pub command_template: String,
    pub dialect: SolutionDialect,
    pub time_budget: Option<Duration>,
    pub keep_artifacts: bool,
}

impl SolverBackend {
    pub fn internal(time_budget: Option<Duration>) -> Self {
        SolverBackend {
            kind: BackendKind::Internal,
            command_template: String::new(),
            dialect: SolutionDialect::Sol,
            time_budget,
            keep_artifacts: false,
        }
    }

    pub fn external_lp(command_template: impl Into<String>, time_budget: Option<Duration>) -> Result<Self> {
        Self::external(BackendKind::ExternalLp, command_template.into(), SolutionDialect::Sol, time_budget)
    }

    pub fn external_smt(command_template: impl Into<String>, time_budget: Option<Duration>) -> Result<Self> {
        Self::external(BackendKind::ExternalSmt, command_template.into(), SolutionDialect::SmtModel, time_budget)
    }

    fn external(
        kind: BackendKind,
        command_template: String,
        dialect: SolutionDialect,
        time_budget: Option<Duration>,
    ) -> Result<Self> {
        if command_template.trim().is_empty() {
            return Err(Error::invalid("external backends need a command template"));
        }
        if !command_template.contains("{file}") {
            return Err(Error::invalid("command template must contain a {file} placeholder"));
        }
        Ok(SolverBackend {
            kind,
            command_template,
            dialect,
            time_budget,
            keep_artifacts: false,
        })
    }
}

fn num(v: f64) -> String {
    // Display gives the shortest string that round-trips, never exponent form.
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

fn lp_terms(out: &mut String, terms: &[(String, f64)]) {
    for (k, (name, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let mag = c.abs();
        let sign = if *c < 0.0 { "-" } else { "+" };
        if k == 0 {
            if *c < 0.0 {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", num(mag));
        }
        out.push_str(name);
    }
}

fn named_terms(cs: &ConstraintSystem, e: &LinExpr) -> Vec<(String, f64)> {
    e.terms
        .iter()
        .filter(|(_, c)| *c != 0.0)
        .map(|(v, c)| (cs.var(*v).name.clone(), *c))
        .collect()
}

/// CPLEX LP text. Deterministic: declaration order throughout.
pub fn emit_lp(cs: &ConstraintSystem) -> String {
    let mut out = String::new();
    let mut need_dummy = false;
    out.push_str("\\ ensemble robustness encoding\n");
    match &cs.objective {
        Some(obj) => {
            out.push_str("Maximize\n obj: ");
            let terms = named_terms(cs, obj);
            if terms.is_empty() {
                out.push_str("0 x_dummy");
                need_dummy = true;
            } else {
                lp_terms(&mut out, &terms);
            }
            out.push('\n');
            if obj.constant != 0.0 {
                let _ = writeln!(out, "\\ objective constant {}", num(obj.constant));
            }
        }
        None => {
            out.push_str("Minimize\n obj: 0 x_dummy\n");
            need_dummy = true;
        }
    }
    out.push_str("Subject To\n");
    for c in cs.constraints() {
        let _ = write!(out, " {}: ", c.name);
        let terms = named_terms(cs, &c.lhs);
        if terms.is_empty() {
            out.push_str("0 x_dummy");
            need_dummy = true;
        } else {
            lp_terms(&mut out, &terms);
        }
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", num(-c.lhs.constant));
    }
    out.push_str("Bounds\n");
    for v in cs.vars() {
        if let Domain::Continuous { lo, hi } = v.domain {
            let n = &v.name;
            if lo == hi {
                let _ = writeln!(out, " {n} = {}", num(lo));
            } else {
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => {
                        let _ = writeln!(out, " {} <= {n} <= {}", num(lo), num(hi));
                    }
                    (true, false) if lo == 0.0 => {}
                    (true, false) => {
                        let _ = writeln!(out, " {n} >= {}", num(lo));
                    }
                    (false, true) => {
                        let _ = writeln!(out, " -inf <= {n} <= {}", num(hi));
                    }
                    (false, false) => {
                        let _ = writeln!(out, " {n} free");
                    }
                }
            }
        }
    }
    if need_dummy {
        let _ = writeln!(out, " {DUMMY} = 0");
    }
    let binaries: Vec<&str> = cs.binaries().map(|b| cs.var(b).name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for b in binaries {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

fn smt_symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace('|', "_"))
    }
}

fn smt_num(v: f64) -> String {
    if v < 0.0 {
        format!("(- {})", num(-v))
    } else {
        num(v)
    }
}

struct Smt<'a> {
    cs: &'a ConstraintSystem,
}

impl Smt<'_> {
    fn v(&self, id: VarId) -> String {
        smt_symbol(&self.cs.var(id).name)
    }

    fn term(&self, id: VarId, c: f64) -> String {
        if c == 1.0 {
            self.v(id)
        } else if c == -1.0 {
            format!("(- {})", self.v(id))
        } else {
            format!("(* {} {})", smt_num(c), self.v(id))
        }
    }

    fn sum(&self, terms: &[(VarId, f64)]) -> String {
        let parts: Vec<String> = terms.iter().filter(|t| t.1 != 0.0).map(|&(v, c)| self.term(v, c)).collect();
        match parts.len() {
            0 => "0".to_string(),
            1 => parts.into_iter().next().unwrap(),
            _ => format!("(+ {})", parts.join(" ")),
        }
    }

    fn diff(&self, a: VarId, b: VarId) -> String {
        format!("(- {} {})", self.v(a), self.v(b))
    }
}

/// SMT-LIB2 (QF_LRA) script. Big-M linearisations recorded as gadgets are
/// replaced by their `ite` definitions.
pub fn emit_smtlib(cs: &ConstraintSystem) -> String {
    let s = Smt { cs };
    let mut out = String::new();
    out.push_str("(set-logic QF_LRA)\n(set-option :produce-models true)\n");
    for v in cs.vars() {
        let _ = writeln!(out, "(declare-fun {} () Real)", smt_symbol(&v.name));
    }
    for (j, v) in cs.vars().iter().enumerate() {
        let name = s.v(VarId(j));
        match v.domain {
            Domain::Binary => {
                let _ = writeln!(out, "(assert (or (= {name} 0) (= {name} 1)))");
            }
            Domain::Continuous { lo, hi } if lo == hi => {
                let _ = writeln!(out, "(assert (= {name} {}))", smt_num(lo));
            }
            Domain::Continuous { lo, hi } => {
                if lo.is_finite() {
                    let _ = writeln!(out, "(assert (<= {} {name}))", smt_num(lo));
                }
                if hi.is_finite() {
                    let _ = writeln!(out, "(assert (<= {name} {}))", smt_num(hi));
                }
            }
        }
    }
    let mut replaced = vec![false; cs.constraints().len()];
    for g in cs.gadgets() {
        for &c in g.replaced_constraints() {
            replaced[c] = true;
        }
    }
    for (c, is_replaced) in cs.constraints().iter().zip(&replaced) {
        if *is_replaced {
            continue;
        }
        let op = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, "(assert ({op} {} {}))", s.sum(&c.lhs.terms), smt_num(-c.lhs.constant));
    }
    for g in cs.gadgets() {
        match g {
            Gadget::Relu { out: y, input, phase, .. } => {
                let (y, z, b) = (s.v(*y), s.v(*input), s.v(*phase));
                let _ = writeln!(out, "(assert (= {y} (ite (>= {z} 0) {z} 0)))");
                let _ = writeln!(out, "(assert (= {b} (ite (>= {z} 0) 1 0)))");
            }
            Gadget::Max {
                out: y, inputs, select, ..
            } => {
                let mut acc = s.v(inputs[0]);
                for &z in &inputs[1..] {
                    let z = s.v(z);
                    acc = format!("(ite (>= {z} {acc}) {z} {acc})");
                }
                let y = s.v(*y);
                let _ = writeln!(out, "(assert (= {y} {acc}))");
                for (k, &b) in select.iter().enumerate() {
                    let mut conds = vec![format!("(= {y} {})", s.v(inputs[k]))];
                    conds.extend(inputs[..k].iter().map(|&z| format!("(not (= {y} {}))", s.v(z))));
                    let cond = if conds.len() == 1 {
                        conds.pop().unwrap()
                    } else {
                        format!("(and {})", conds.join(" "))
                    };
                    let _ = writeln!(out, "(assert (= {} (ite {cond} 1 0)))", s.v(b));
                }
            }
            Gadget::Abs { out: t, input, .. } => {
                let (t, d) = (s.v(*t), s.v(*input));
                let _ = writeln!(out, "(assert (= {t} (ite (>= {d} 0) {d} (- {d}))))");
            }
            Gadget::Product { out: q, prob, binary, .. } => {
                let _ = writeln!(
                    out,
                    "(assert (= {} (ite (= {} 1) {} 0)))",
                    s.v(*q),
                    s.v(*binary),
                    s.v(*prob)
                );
            }
            Gadget::Loss {
                loss,
                outputs,
                truth,
                correct_gap,
                loss_gap,
                witnesses,
                ..
            } => {
                let yt = outputs[*truth];
                let mut conds: Vec<String> = (0..outputs.len())
                    .filter(|k| k != truth)
                    .map(|k| format!("(>= {} {})", s.diff(yt, outputs[k]), smt_num(*correct_gap)))
                    .collect();
                let cond = if conds.len() == 1 {
                    conds.pop().unwrap()
                } else {
                    format!("(and {})", conds.join(" "))
                };
                let _ = writeln!(out, "(assert (= {} (ite {cond} 0 1)))", s.v(*loss));
                for &(k, w) in witnesses {
                    let _ = writeln!(
                        out,
                        "(assert (= {} (ite (<= {} {}) 1 0)))",
                        s.v(w),
                        s.diff(yt, outputs[k]),
                        smt_num(*loss_gap)
                    );
                }
            }
        }
    }
    out.push_str("(check-sat)\n(get-model)\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

fn lex(line: &str) -> std::result::Result<Vec<Tok>, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                while j < chars.len() && "<>=".contains(chars[j]) {
                    j += 1;
                }
                let op: String = chars[i..j].iter().collect();
                let rel = match op.as_str() {
                    "<" | "<=" | "=<" => Relation::Le,
                    ">" | ">=" | "=>" => Relation::Ge,
                    "=" => Relation::Eq,
                    _ => return Err(format!("unknown operator {op}")),
                };
                toks.push(Tok::Rel(rel));
                i = j;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        j = k;
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text: String = chars[i..j].iter().collect();
                toks.push(Tok::Num(text.parse().map_err(|_| format!("bad number {text}"))?));
                i = j;
            }
            _ => {
                let mut j = i;
                while j < chars.len() && !chars[j].is_whitespace() && !"+-:<>=".contains(chars[j]) {
                    j += 1;
                }
                toks.push(Tok::Ident(chars[i..j].iter().collect()));
                i = j;
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective { maximize: bool },
    Constraints,
    Bounds,
    Binary,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    Some(match l.as_str() {
        "maximize" | "maximise" | "maximum" | "max" => Section::Objective { maximize: true },
        "minimize" | "minimise" | "minimum" | "min" => Section::Objective { maximize: false },
        "subject to" | "such that" | "st" | "s.t." => Section::Constraints,
        "bounds" | "bound" => Section::Bounds,
        "binary" | "binaries" | "bin" => Section::Binary,
        "end" => Section::End,
        _ => return None,
    })
}

struct LpReader {
    cs: ConstraintSystem,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LpReader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(v) = self.cs.lookup(name) {
            return v;
        }
        self.lower.push(0.0);
        self.upper.push(f64::INFINITY);
        self.cs
            .add_var(name.to_string(), Domain::Continuous { lo: 0.0, hi: f64::INFINITY }, VarRole::Free)
            .expect("fresh name")
    }

    /// Parses `[name:] expr` and returns the name and the expression; stops
    /// at the first relation token.
    fn expr(&mut self, toks: &[Tok]) -> std::result::Result<(Option<String>, LinExpr, usize), String> {
        let mut i = 0;
        let mut name = None;
        if let (Some(Tok::Ident(n)), Some(Tok::Colon)) = (toks.first(), toks.get(1)) {
            name = Some(n.clone());
            i = 2;
        }
        let mut e = LinExpr::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        while i < toks.len() {
            match &toks[i] {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                Tok::Num(v) => coef = Some(coef.unwrap_or(1.0) * v),
                Tok::Ident(n) => {
                    let v = self.var(n);
                    e.add(v, sign * coef.unwrap_or(1.0));
                    sign = 1.0;
                    coef = None;
                }
                Tok::Rel(_) => break,
                Tok::Colon => return Err("unexpected ':'".into()),
            }
            i += 1;
        }
        if let Some(c) = coef {
            e.constant += sign * c;
        }
        Ok((name, e, i))
    }

    fn bound_value(toks: &[Tok]) -> std::result::Result<f64, String> {
        let (sign, rest) = match toks.first() {
            Some(Tok::Minus) => (-1.0, &toks[1..]),
            Some(Tok::Plus) => (1.0, &toks[1..]),
            _ => (1.0, toks),
        };
        match rest {
            [Tok::Num(v)] => Ok(sign * v),
            [Tok::Ident(s)] if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => Ok(sign * f64::INFINITY),
            _ => Err("expected a bound value".into()),
        }
    }

    fn bound_line(&mut self, toks: &[Tok]) -> std::result::Result<(), String> {
        let rels: Vec<usize> = toks
            .iter()
            .enumerate()
            .filter(|(_, t)| matches!(t, Tok::Rel(_)))
            .map(|(i, _)| i)
            .collect();
        let ident_at = |i: usize| match toks.get(i) {
            Some(Tok::Ident(n)) => Some(n.clone()),
            _ => None,
        };
        match rels.as_slice() {
            [] => match (toks.first(), toks.get(1)) {
                (Some(Tok::Ident(n)), Some(Tok::Ident(kw))) if kw.eq_ignore_ascii_case("free") => {
                    let v = self.var(n).0;
                    self.lower[v] = f64::NEG_INFINITY;
                    self.upper[v] = f64::INFINITY;
                    Ok(())
                }
                _ => Err("unrecognised bound".into()),
            },
            [r] => {
                let Tok::Rel(rel) = toks[*r] else { unreachable!() };
                if let Some(n) = ident_at(0).filter(|_| *r == 1) {
                    let val = Self::bound_value(&toks[2..])?;
                    let v = self.var(&n).0;
                    match rel {
                        Relation::Le => self.upper[v] = val,
                        Relation::Ge => self.lower[v] = val,
                        Relation::Eq => {
                            self.lower[v] = val;
                            self.upper[v] = val;
                        }
                    }
                    Ok(())
                } else if let Some(n) = ident_at(r + 1).filter(|_| r + 2 == toks.len()) {
                    let val = Self::bound_value(&toks[..*r])?;
                    let v = self.var(&n).0;
                    match rel {
                        Relation::Le => self.lower[v] = val,
                        Relation::Ge => self.upper[v] = val,
                        Relation::Eq => {
                            self.lower[v] = val;
                            self.upper[v] = val;
                        }
                    }
                    Ok(())
                } else {
                    Err("unrecognised bound".into())
                }
            }
            [a, b] if *b == a + 2 => {
                let n = ident_at(a + 1).ok_or("expected a variable name")?;
                let lo = Self::bound_value(&toks[..*a])?;
                let hi = Self::bound_value(&toks[b + 1..])?;
                let v = self.var(&n).0;
                let (Tok::Rel(r1), Tok::Rel(r2)) = (&toks[*a], &toks[*b]) else { unreachable!() };
                let (lo, hi) = match (r1, r2) {
                    (Relation::Le, Relation::Le) => (lo, hi),
                    (Relation::Ge, Relation::Ge) => (hi, lo),
                    _ => return Err("mixed relations in a double bound".into()),
                };
                self.lower[v] = lo;
                self.upper[v] = hi;
                Ok(())
            }
            _ => Err("unrecognised bound".into()),
        }
    }
}

/// Reads CPLEX LP text back into a constraint system. Minimisation
/// objectives are negated; an all-zero objective is dropped.
pub fn parse_lp(text: &str) -> Result<ConstraintSystem> {
    let err = |line: usize, message: String| Error::Parse {
        path: format!("line {line}").into(),
        message,
    };
    let mut rd = LpReader {
        cs: ConstraintSystem::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    let mut section = Section::Preamble;
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;
    let mut objective: Option<(bool, LinExpr)> = None;
    let mut binaries = Vec::new();
    let mut anon = 0usize;

    let flush = |rd: &mut LpReader,
                 section: Section,
                 pending: &mut Vec<Tok>,
                 objective: &mut Option<(bool, LinExpr)>,
                 anon: &mut usize,
                 line: usize|
     -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let toks = std::mem::take(pending);
        match section {
            Section::Objective { maximize } => {
                let (_, e, _) = rd.expr(&toks).map_err(|m| err(line, m))?;
                *objective = Some((maximize, e));
            }
            Section::Constraints => {
                let (name, mut e, i) = rd.expr(&toks).map_err(|m| err(line, m))?;
                let Some(Tok::Rel(rel)) = toks.get(i) else {
                    return Err(err(line, "constraint without a relation".into()));
                };
                let rhs = LpReader::bound_value(&toks[i + 1..]).map_err(|m| err(line, m))?;
                e.constant -= rhs;
                let name = name.unwrap_or_else(|| {
                    *anon += 1;
                    format!("r_{}", *anon)
                });
                rd.cs.add_constraint(name, e, *rel);
            }
            _ => {}
        }
        Ok(())
    };

    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(next) = section_header(line) {
            flush(&mut rd, section, &mut pending, &mut objective, &mut anon, pending_line)?;
            section = next;
            continue;
        }
        let toks = lex(line).map_err(|m| err(ln + 1, m))?;
        match section {
            Section::Preamble | Section::End => {
                return Err(err(ln + 1, "content outside of a section".into()));
            }
            Section::Objective { .. } => {
                if pending.is_empty() {
                    pending_line = ln + 1;
                }
                pending.extend(toks);
            }
            Section::Constraints => {
                // A new constraint starts at `name:` or after a completed `rel rhs`.
                let starts_new = matches!((toks.first(), toks.get(1)), (Some(Tok::Ident(_)), Some(Tok::Colon)))
                    || pending.iter().any(|t| matches!(t, Tok::Rel(_)));
                if starts_new {
                    flush(&mut rd, section, &mut pending, &mut objective, &mut anon, pending_line)?;
                    pending_line = ln + 1;
                }
                pending.extend(toks);
            }
            Section::Bounds => rd.bound_line(&toks).map_err(|m| err(ln + 1, m))?,
            Section::Binary => {
                for t in toks {
                    match t {
                        Tok::Ident(n) => binaries.push(rd.var(&n)),
                        _ => return Err(err(ln + 1, "expected variable names".into())),
                    }
                }
            }
        }
    }
    flush(&mut rd, section, &mut pending, &mut objective, &mut anon, pending_line)?;
    if section != Section::End {
        return Err(err(text.lines().count(), "missing End".into()));
    }
    let LpReader {
        mut cs, lower, upper, ..
    } = rd;
    for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
        if lo > hi {
            return Err(Error::invalid(format!("variable {} has empty bounds", cs.var(VarId(j)).name)));
        }
        cs.set_domain(VarId(j), Domain::Continuous { lo: *lo, hi: *hi });
    }
    for b in binaries {
        cs.set_domain(b, Domain::Binary);
    }
    if let Some((maximize, mut e)) = objective {
        if !maximize {
            e.constant = -e.constant;
            e.terms.iter_mut().for_each(|t| t.1 = -t.1);
        }
        e.terms.retain(|t| t.1 != 0.0);
        if !e.terms.is_empty() {
            cs.objective = Some(e);
        }
    }
    cs.validate()?;
    Ok(cs)
}

/// Outcome reported by an external solver before auditing.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverAnswer {
    Infeasible,
    Assignment(Vec<f64>),
    Unknown(String),
}

fn has_token(text: &str, words: &[&str]) -> bool {
    text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '-'))
        .any(|t| words.iter().any(|w| t.eq_ignore_ascii_case(w)))
}

/// `<name> <value>` lines. Names not in `cs` are ignored; variables without
/// a line default to 0.
pub fn parse_sol(text: &str, cs: &ConstraintSystem) -> SolverAnswer {
    if has_token(text, &["infeasible", "unsat"]) {
        return SolverAnswer::Infeasible;
    }
    let mut values = vec![0.0; cs.num_vars()];
    let mut found = 0;
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            continue;
        };
        if let (Some(v), Ok(x)) = (cs.lookup(name), val.parse::<f64>()) {
            values[v.0] = x;
            found += 1;
        }
    }
    if found == 0 && cs.num_vars() > 0 {
        if has_token(text, &["unknown", "timeout", "timelimit"]) {
            return SolverAnswer::Unknown("solver reported an unknown status".into());
        }
        return SolverAnswer::Unknown("no solution values in solver output".into());
    }
    SolverAnswer::Assignment(values)
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn parse_sexps(text: &str) -> std::result::Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced ')'")?;
                stack.last_mut().ok_or("unbalanced ')'")?.push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            _ if c.is_whitespace() => {}
            _ => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".into());
    }
    Ok(stack.pop().unwrap())
}

fn eval_sexp(e: &Sexp) -> Option<f64> {
    match e {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => {
            let (Sexp::Atom(op), args) = items.split_first()? else {
                return None;
            };
            let vals: Option<Vec<f64>> = args.iter().map(eval_sexp).collect();
            let vals = vals?;
            match (op.as_str(), vals.as_slice()) {
                ("-", [x]) => Some(-x),
                ("-", [x, rest @ ..]) => Some(rest.iter().fold(*x, |a, b| a - b)),
                ("+", _) => Some(vals.iter().sum()),
                ("*", _) => Some(vals.iter().product()),
                ("/", [a, b]) => Some(a / b),
                ("to_real", [x]) => Some(*x),
                _ => None,
            }
        }
    }
}

fn collect_defs(e: &Sexp, cs: &ConstraintSystem, values: &mut [f64], found: &mut usize) {
    if let Sexp::List(items) = e {
        if let [Sexp::Atom(head), Sexp::Atom(name), Sexp::List(_), _sort, body] = items.as_slice() {
            if head == "define-fun" {
                if let (Some(v), Some(x)) = (cs.lookup(name), eval_sexp(body)) {
                    values[v.0] = x;
                    *found += 1;
                }
                return;
            }
        }
        for it in items {
            collect_defs(it, cs, values, found);
        }
    }
}

/// `sat`/`unsat`/`unknown` followed by an SMT-LIB model.
pub fn parse_smt_model(text: &str, cs: &ConstraintSystem) -> SolverAnswer {
    let status = text
        .lines()
        .map(str::trim)
        .find(|l| matches!(*l, "sat" | "unsat" | "unknown" | "timeout"));
    match status {
        Some("unsat") => return SolverAnswer::Infeasible,
        Some("sat") => {}
        Some(other) => return SolverAnswer::Unknown(format!("solver answered {other}")),
        None => return SolverAnswer::Unknown("no sat/unsat status in solver output".into()),
    }
    let after = text.split_once("sat").map_or("", |(_, rest)| rest);
    let exprs = match parse_sexps(after) {
        Ok(e) => e,
        Err(m) => return SolverAnswer::Unknown(format!("unreadable model: {m}")),
    };
    let mut values = vec![0.0; cs.num_vars()];
    let mut found = 0;
    for e in &exprs {
        collect_defs(e, cs, &mut values, &mut found);
    }
    SolverAnswer::Assignment(values)
}

/// Maps a parsed answer to a verdict; assignments must pass the audit.
pub fn audit_answer(cs: &ConstraintSystem, answer: SolverAnswer, stats: SolveStats) -> MilpVerdict {
    match answer {
        SolverAnswer::Infeasible => MilpVerdict::Infeasible { stats },
        SolverAnswer::Unknown(m) => MilpVerdict::Unknown {
            reason: UnknownReason::Backend(m),
            incumbent: None,
            stats,
        },
        SolverAnswer::Assignment(values) => match cs.audit(&values, AUDIT_TOL) {
            Ok(()) => {
                let objective = cs.objective.as_ref().map_or(0.0, |o| o.eval(&values));
                MilpVerdict::Feasible {
                    values,
                    objective,
                    stats,
                }
            }
            Err(fail) => {
                log::warn!("external solution rejected: {fail}");
                MilpVerdict::Unknown {
                    reason: UnknownReason::Backend(format!("audit failed: {fail}")),
                    incumbent: None,
                    stats,
                }
            }
        },
    }
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', "'\\''"))
}

struct Finished {
    status: Option<std::process::ExitStatus>,
    stdout: String,
    stderr: String,
    timed_out: bool,
}

fn run_command(cmd: &str, budget: Option<Duration>) -> std::io::Result<Finished> {
    use std::os::unix::process::CommandExt;
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()?;
    let reader = |mut pipe: Box<dyn Read + Send>| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = pipe.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out = reader(Box::new(child.stdout.take().expect("piped stdout")));
    let err = reader(Box::new(child.stderr.take().expect("piped stderr")));
    let deadline = budget.map(|b| Instant::now() + b);
    let mut timed_out = false;
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break Some(st);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            // SAFETY: kill(2) on our own child's process group has no memory-safety preconditions.
            unsafe {
                libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL);
            }
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    Ok(Finished {
        status,
        stdout,
        stderr,
        timed_out,
    })
}

/// Solves `cs` with the configured backend. External answers are audited
/// against `cs` before a feasible verdict is returned.
pub fn run_external(backend: &SolverBackend, cs: &ConstraintSystem) -> MilpVerdict {
    let mode = if cs.objective.is_some() {
        SolveMode::Maximize
    } else {
        SolveMode::Feasibility
    };
    if backend.kind == BackendKind::Internal {
        let opts = SolverOptions {
            time_budget: backend.time_budget,
            node_limit: None,
        };
        return solve_milp(cs, mode, &opts);
    }
    let start = Instant::now();
    let fail = |m: String| MilpVerdict::Unknown {
        reason: UnknownReason::Backend(m),
        incumbent: None,
        stats: SolveStats {
            elapsed: start.elapsed(),
            ..Default::default()
        },
    };
    let dir = match tempfile::Builder::new().prefix("ensrob-").tempdir() {
        Ok(d) => d,
        Err(e) => return fail(format!("cannot create temp dir: {e}")),
    };
    let (file, text) = match backend.kind {
        BackendKind::ExternalLp => (dir.path().join("model.lp"), emit_lp(cs)),
        _ => (dir.path().join("model.smt2"), emit_smtlib(cs)),
    };
    let sol = dir.path().join("model.sol");
    if let Err(e) = std::fs::write(&file, text) {
        return fail(format!("cannot write {}: {e}", file.display()));
    }
    let cmd = backend
        .command_template
        .replace("{file}", &shell_quote(&file))
        .replace("{sol}", &shell_quote(&sol));
    log::info!("running external solver: {cmd}");
    let finished = run_command(&cmd, backend.time_budget);
    // The directory must outlive the solution read below.
    let (kept, _guard) = if backend.keep_artifacts {
        let p = dir.keep();
        log::info!("solver artifacts kept in {}", p.display());
        (Some(p), None)
    } else {
        (None, Some(dir))
    };
    let finished = match finished {
        Ok(f) => f,
        Err(e) => return fail(format!("cannot start solver: {e}")),
    };
    let stats = SolveStats {
        elapsed: start.elapsed(),
        ..Default::default()
    };
    if finished.timed_out {
        return MilpVerdict::Unknown {
            reason: UnknownReason::Timeout,
            incumbent: None,
            stats,
        };
    }
    let output = if backend.command_template.contains("{sol}") {
        let path = kept.as_ref().map_or(sol.clone(), |p| p.join("model.sol"));
        std::fs::read_to_string(path).unwrap_or_default() + "\n" + &finished.stdout
    } else {
        finished.stdout.clone()
    };
    let answer = match backend.dialect {
        SolutionDialect::Sol => parse_sol(&output, cs),
        SolutionDialect::SmtModel => parse_smt_model(&output, cs),
    };
    let ok_exit = finished.status.is_some_and(|s| s.success());
    match answer {
        SolverAnswer::Infeasible => MilpVerdict::Infeasible { stats },
        _ if !ok_exit => {
            let tail: String = finished.stderr.lines().rev().take(5).collect::<Vec<_>>().join(" | ");
            fail(format!("solver exited with {:?}: {tail}", finished.status))
        }
        a => audit_answer(cs, a, stats),
    }
}
