//! The `.erx` specification language.
//!
//! ```text
//! schema Author(aid: obj, name: val, dob: val, pob: val).
//! soft obj s1: Author[t1](x, n1, d, p), Author[t2](y, n2, d, p), sim(n1, n2) >= 95 => EqO(x, y).
//! hard val h1: Author[t1](a, n1, _, _), Author[t2](a, n2, _, _), sim(n1, n2) >= 95 => EqV(t1.2, t2.2).
//! dc d1: Author(a, n1, _, _), Author(a, n2, _, _), n1 != n2.
//! ```
//!
//! Tid variables go in brackets and may be omitted. `_` is a fresh
//! variable. Constants are double-quoted; their sort follows from the
//! position they occupy. `#` starts a comment.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::model::{AttrType, Attribute, RelationDecl, Schema};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn is_anonymous(&self) -> bool {
        matches!(self, Term::Var(v) if is_anonymous(v))
    }
}

fn is_anonymous(name: &str) -> bool {
    name.starts_with('_')
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelAtom {
    pub relation: String,
    pub tid: String,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    Rel(RelAtom),
    Sim { left: Term, right: Term, threshold: u8 },
    Neq(Term, Term),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Hard,
    Soft,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Head {
    /// `EqO(x, y)`
    Objects(String, String),
    /// `EqV(x_t.i, y_t.j)`
    Cells {
        left: (String, usize),
        right: (String, usize),
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub label: String,
    pub kind: RuleKind,
    pub body: Vec<Atom>,
    pub head: Head,
}

impl Rule {
    pub fn is_hard(&self) -> bool {
        self.kind == RuleKind::Hard
    }

    pub fn is_object_rule(&self) -> bool {
        matches!(self.head, Head::Objects(..))
    }

    /// Head variables: `(x, y)` or `(x_t, y_t)`.
    pub fn head_vars(&self) -> (&str, &str) {
        match &self.head {
            Head::Objects(x, y) => (x, y),
            Head::Cells { left, right } => (&left.0, &right.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Denial {
    pub label: String,
    pub body: Vec<Atom>,
}

impl Denial {
    pub fn has_inequality(&self) -> bool {
        self.body.iter().any(|a| matches!(a, Atom::Neq(..)))
    }
}

/// `Σ = <Γ_O, Γ_V, Δ>` together with the schema it is written against.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Specification {
    schema: Schema,
    object_rules: Vec<Rule>,
    value_rules: Vec<Rule>,
    denials: Vec<Denial>,
}

impl Specification {
    pub fn new(schema: Schema) -> Self {
        Specification {
            schema,
            ..Default::default()
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn object_rules(&self) -> &[Rule] {
        &self.object_rules
    }

    pub fn value_rules(&self) -> &[Rule] {
        &self.value_rules
    }

    /// Object rules followed by value rules; rule indices used elsewhere
    /// refer to this order.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.object_rules.iter().chain(&self.value_rules)
    }

    pub fn rule(&self, index: usize) -> &Rule {
        if index < self.object_rules.len() {
            &self.object_rules[index]
        } else {
            &self.value_rules[index - self.object_rules.len()]
        }
    }

    pub fn rule_count(&self) -> usize {
        self.object_rules.len() + self.value_rules.len()
    }

    pub fn denials(&self) -> &[Denial] {
        &self.denials
    }

    pub fn push_rule(&mut self, rule: Rule) {
        if rule.is_object_rule() {
            self.object_rules.push(rule);
        } else {
            self.value_rules.push(rule);
        }
    }

    pub fn push_denial(&mut self, denial: Denial) {
        self.denials.push(denial);
    }

    /// True iff no denial constraint uses an inequality atom.
    pub fn is_restricted(&self) -> bool {
        !self.denials.iter().any(Denial::has_inequality)
    }

    pub fn has_soft_rules(&self) -> bool {
        self.rules().any(|r| r.kind == RuleKind::Soft)
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Colon,
    Dot,
    Arrow,
    Neq,
    Ge,
    Underscore,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrack => f.write_str("`[`"),
            Tok::RBrack => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`=>`"),
            Tok::Neq => f.write_str("`!=`"),
            Tok::Ge => f.write_str("`>=`"),
            Tok::Underscore => f.write_str("`_`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let push = |out: &mut Vec<Spanned>, tok| {
                out.push(Spanned {
                    tok,
                    line: ln + 1,
                    column: col,
                })
            };
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '(' | ')' | '[' | ']' | ',' | ':' | '.' => {
                    let tok = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBrack,
                        ']' => Tok::RBrack,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        _ => Tok::Dot,
                    };
                    push(&mut out, tok);
                    i += 1;
                }
                '=' | '!' | '>' => {
                    let tok = match (c, chars.get(i + 1)) {
                        ('=', Some('>')) => Tok::Arrow,
                        ('!', Some('=')) => Tok::Neq,
                        ('>', Some('=')) => Tok::Ge,
                        _ => return Err(syntax(ln + 1, col, format!("unexpected character `{c}`"))),
                    };
                    push(&mut out, tok);
                    i += 2;
                }
                '"' => {
                    let mut s = String::new();
                    i += 1;
                    loop {
                        match chars.get(i) {
                            None => return Err(syntax(ln + 1, col, "unterminated string")),
                            Some('"') => {
                                i += 1;
                                break;
                            }
                            Some('\\') => {
                                match chars.get(i + 1) {
                                    Some(&e @ ('"' | '\\')) => s.push(e),
                                    Some('t') => s.push('\t'),
                                    _ => return Err(syntax(ln + 1, i + 1, "bad escape")),
                                }
                                i += 2;
                            }
                            Some(&ch) => {
                                s.push(ch);
                                i += 1;
                            }
                        }
                    }
                    push(&mut out, Tok::Str(s));
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let n = s
                        .parse::<u64>()
                        .map_err(|_| syntax(ln + 1, col, "integer too large"))?;
                    push(&mut out, Tok::Int(n));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    if s == "_" {
                        push(&mut out, Tok::Underscore);
                    } else if s.starts_with('_') {
                        return Err(syntax(ln + 1, col, format!("identifier `{s}` may not start with `_`")));
                    } else {
                        push(&mut out, Tok::Ident(s));
                    }
                }
                _ => return Err(syntax(ln + 1, col, format!("unexpected character `{c}`"))),
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    anon: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.column))
            .unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn unexpected(&self, wanted: &str) -> Error {
        match self.peek() {
            Some(t) => self.err(format!("expected {wanted}, found {t}")),
            None => self.err(format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn fresh(&mut self) -> String {
        self.anon += 1;
        format!("_{}", self.anon)
    }

    fn int(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some(Tok::Underscore) => {
                self.pos += 1;
                Ok(Term::Var(self.fresh()))
            }
            Some(Tok::Ident(_)) => Ok(Term::Var(self.ident()?)),
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(Term::Const(s))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let is_rel = matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.peek2(), Some(Tok::LParen) | Some(Tok::LBrack));
        if is_rel {
            let name = self.ident()?;
            if name == "sim" {
                self.expect(Tok::LParen)?;
                let left = self.term()?;
                self.expect(Tok::Comma)?;
                let right = self.term()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Ge)?;
                let n = self.int()?;
                if n > 100 {
                    return Err(self.err("similarity threshold must be in 0..=100"));
                }
                return Ok(Atom::Sim {
                    left,
                    right,
                    threshold: n as u8,
                });
            }
            let tid = if self.peek() == Some(&Tok::LBrack) {
                self.pos += 1;
                let t = match self.peek() {
                    Some(Tok::Underscore) => {
                        self.pos += 1;
                        self.fresh()
                    }
                    _ => self.ident()?,
                };
                self.expect(Tok::RBrack)?;
                t
            } else {
                self.fresh()
            };
            self.expect(Tok::LParen)?;
            let mut args = Vec::new();
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    args.push(self.term()?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            return Ok(Atom::Rel(RelAtom {
                relation: name,
                tid,
                args,
            }));
        }
        let left = self.term()?;
        self.expect(Tok::Neq)?;
        let right = self.term()?;
        Ok(Atom::Neq(left, right))
    }

    /// Atoms up to (not including) `=>` or the terminating `.`.
    fn body(&mut self) -> Result<Vec<Atom>> {
        let mut atoms = Vec::new();
        if matches!(self.peek(), Some(Tok::Arrow) | Some(Tok::Dot)) {
            return Ok(atoms);
        }
        loop {
            atoms.push(self.atom()?);
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                return Ok(atoms);
            }
        }
    }

    fn cell_ref(&mut self) -> Result<(String, usize)> {
        let t = self.ident()?;
        self.expect(Tok::Dot)?;
        let p = self.int()?;
        Ok((t, p as usize))
    }

    fn head(&mut self, object: bool) -> Result<Head> {
        if object {
            self.keyword("EqO")?;
            self.expect(Tok::LParen)?;
            let x = self.ident()?;
            self.expect(Tok::Comma)?;
            let y = self.ident()?;
            self.expect(Tok::RParen)?;
            Ok(Head::Objects(x, y))
        } else {
            self.keyword("EqV")?;
            self.expect(Tok::LParen)?;
            let left = self.cell_ref()?;
            self.expect(Tok::Comma)?;
            let right = self.cell_ref()?;
            self.expect(Tok::RParen)?;
            Ok(Head::Cells { left, right })
        }
    }

    fn schema_decl(&mut self) -> Result<RelationDecl> {
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut attrs = Vec::new();
        loop {
            let attr = self.ident()?;
            self.expect(Tok::Colon)?;
            let ty = match self.ident()?.as_str() {
                "obj" => AttrType::Obj,
                "val" => AttrType::Val,
                other => {
                    self.pos -= 1;
                    return Err(self.err(format!("unknown attribute type `{other}`")));
                }
            };
            attrs.push(Attribute { name: attr, ty });
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Dot)?;
        RelationDecl::new(name, attrs)
    }

    fn statement(&mut self, spec: &mut Specification) -> Result<()> {
        let (line, column) = self.here();
        self.anon = 0;
        let word = self.ident()?;
        match word.as_str() {
            "schema" => {
                let decl = self.schema_decl()?;
                spec.schema.add(decl).map_err(|e| syntax(line, column, e.to_string()))?;
            }
            "soft" | "hard" => {
                let kind = if word == "soft" {
                    RuleKind::Soft
                } else {
                    RuleKind::Hard
                };
                let object = match self.ident()?.as_str() {
                    "obj" => true,
                    "val" => false,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected `obj` or `val`"));
                    }
                };
                let label = self.ident()?;
                self.expect(Tok::Colon)?;
                let body = self.body()?;
                self.expect(Tok::Arrow)?;
                let head = self.head(object)?;
                self.expect(Tok::Dot)?;
                spec.push_rule(Rule {
                    label,
                    kind,
                    body,
                    head,
                });
            }
            "dc" => {
                let label = self.ident()?;
                self.expect(Tok::Colon)?;
                let body = self.body()?;
                self.expect(Tok::Dot)?;
                spec.push_denial(Denial { label, body });
            }
            _ => {
                return Err(syntax(
                    line,
                    column,
                    format!("expected `schema`, `soft`, `hard` or `dc`, found `{word}`"),
                ))
            }
        }
        Ok(())
    }
}

/// Parses without shape validation.
pub fn parse_spec_unchecked(text: &str, base: &Schema) -> Result<Specification> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (lines, text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1)),
        anon: 0,
    };
    let mut spec = Specification::new(base.clone());
    while p.peek().is_some() {
        p.statement(&mut spec)?;
    }
    Ok(spec)
}

/// Parses a specification whose schema statements appear in `text`.
pub fn parse_spec(text: &str) -> Result<Specification> {
    parse_spec_with_schema(text, &Schema::new())
}

/// Parses `text` on top of an already declared schema and validates every
/// rule shape; the first diagnostic becomes the error.
pub fn parse_spec_with_schema(text: &str, base: &Schema) -> Result<Specification> {
    let spec = parse_spec_unchecked(text, base)?;
    if let Some(d) = validate_rule_shapes(&spec).into_iter().next() {
        return Err(Error::Spec(d.to_string()));
    }
    Ok(spec)
}

/// Parses a file containing only `schema` statements.
pub fn parse_schema(text: &str) -> Result<Schema> {
    let spec = parse_spec_unchecked(text, &Schema::new())?;
    if spec.rule_count() > 0 || !spec.denials().is_empty() {
        return Err(Error::Schema("schema file contains rules".into()));
    }
    Ok(spec.schema)
}

// ---------------------------------------------------------------- printer

fn print_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) if is_anonymous(v) => out.push('_'),
        Term::Var(v) => out.push_str(v),
        Term::Const(c) => {
            out.push('"');
            for ch in c.chars() {
                match ch {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\t' => out.push_str("\\t"),
                    _ => out.push(ch),
                }
            }
            out.push('"');
        }
    }
}

fn print_body(body: &[Atom], out: &mut String) {
    for (i, atom) in body.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match atom {
            Atom::Rel(r) => {
                out.push_str(&r.relation);
                if !is_anonymous(&r.tid) {
                    let _ = write!(out, "[{}]", r.tid);
                }
                out.push('(');
                for (j, t) in r.args.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    print_term(t, out);
                }
                out.push(')');
            }
            Atom::Sim {
                left,
                right,
                threshold,
            } => {
                out.push_str("sim(");
                print_term(left, out);
                out.push_str(", ");
                print_term(right, out);
                let _ = write!(out, ") >= {threshold}");
            }
            Atom::Neq(a, b) => {
                print_term(a, out);
                out.push_str(" != ");
                print_term(b, out);
            }
        }
    }
}

pub fn print_schema(schema: &Schema) -> String {
    let mut out = String::new();
    for r in schema.relations() {
        let attrs: Vec<String> = r
            .attributes()
            .iter()
            .map(|a| format!("{}: {}", a.name, a.ty))
            .collect();
        let _ = writeln!(out, "schema {}({}).", r.name(), attrs.join(", "));
    }
    out
}

pub fn print_rule(rule: &Rule) -> String {
    let mut out = String::new();
    let kind = match rule.kind {
        RuleKind::Hard => "hard",
        RuleKind::Soft => "soft",
    };
    let sort = if rule.is_object_rule() { "obj" } else { "val" };
    let _ = write!(out, "{kind} {sort} {}: ", rule.label);
    print_body(&rule.body, &mut out);
    if !rule.body.is_empty() {
        out.push(' ');
    }
    match &rule.head {
        Head::Objects(x, y) => {
            let _ = write!(out, "=> EqO({x}, {y}).");
        }
        Head::Cells { left, right } => {
            let _ = write!(out, "=> EqV({}.{}, {}.{}).", left.0, left.1, right.0, right.1);
        }
    }
    out
}

pub fn print_denial(d: &Denial) -> String {
    let mut out = format!("dc {}: ", d.label);
    print_body(&d.body, &mut out);
    out.push('.');
    out
}

/// Prints rules and constraints without the schema.
pub fn print_rules(spec: &Specification) -> String {
    let mut out = String::new();
    for r in spec.rules() {
        out.push_str(&print_rule(r));
        out.push('\n');
    }
    for d in spec.denials() {
        out.push_str(&print_denial(d));
        out.push('\n');
    }
    out
}

pub fn print_spec(spec: &Specification) -> String {
    print_schema(spec.schema()) + &print_rules(spec)
}

impl fmt::Display for Specification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_spec(self))
    }
}

// ---------------------------------------------------------------- validation

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub label: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.message)
    }
}

/// Sort of a position a variable occupies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarSort {
    Tid,
    Obj,
    Val,
}

impl fmt::Display for VarSort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarSort::Tid => "tid",
            VarSort::Obj => "object",
            VarSort::Val => "value",
        })
    }
}

/// Sorts of every variable from its relational occurrences; atoms over
/// unknown relations or with the wrong arity are skipped.
pub fn variable_sorts(schema: &Schema, body: &[Atom]) -> HashMap<String, Vec<VarSort>> {
    let mut sorts: HashMap<String, Vec<VarSort>> = HashMap::new();
    for atom in body {
        if let Atom::Rel(r) = atom {
            let Some(rid) = schema.get(&r.relation) else { continue };
            let decl = schema.relation(rid);
            if decl.arity() != r.args.len() {
                continue;
            }
            sorts.entry(r.tid.clone()).or_default().push(VarSort::Tid);
            for (i, t) in r.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    let s = match decl.attributes()[i].ty {
                        AttrType::Obj => VarSort::Obj,
                        AttrType::Val => VarSort::Val,
                    };
                    sorts.entry(v.clone()).or_default().push(s);
                }
            }
        }
    }
    sorts
}

fn check_body(schema: &Schema, label: &str, body: &[Atom], diags: &mut Vec<Diagnostic>) -> HashMap<String, Vec<VarSort>> {
    let mut push = |m: String| {
        diags.push(Diagnostic {
            label: label.to_string(),
            message: m,
        })
    };
    for atom in body {
        if let Atom::Rel(r) = atom {
            match schema.get(&r.relation) {
                None => push(format!("unknown relation {}", r.relation)),
                Some(rid) => {
                    let arity = schema.relation(rid).arity();
                    if arity != r.args.len() {
                        push(format!(
                            "relation {} has arity {arity}, atom has {} arguments",
                            r.relation,
                            r.args.len()
                        ));
                    }
                }
            }
        }
    }
    let sorts = variable_sorts(schema, body);
    let mut names: Vec<&String> = sorts.keys().collect();
    names.sort();
    for v in names {
        let s = &sorts[v];
        let first = s[0];
        if let Some(other) = s.iter().find(|&&x| x != first) {
            push(format!("variable {} used as both {first} and {other}", shown(v)));
        }
    }
    for atom in body {
        let terms: Vec<&Term> = match atom {
            Atom::Rel(_) => continue,
            Atom::Sim { left, right, .. } => vec![left, right],
            Atom::Neq(a, b) => vec![a, b],
        };
        for t in terms {
            let Term::Var(v) = t else { continue };
            match sorts.get(v) {
                None => push(format!(
                    "variable {} does not occur in any relational atom",
                    shown(v)
                )),
                Some(s) => {
                    if matches!(atom, Atom::Sim { .. }) && s.iter().any(|&x| x != VarSort::Val) {
                        push(format!(
                            "similarity atom over {} which is not in a value position",
                            shown(v)
                        ));
                    }
                }
            }
        }
    }
    sorts
}

fn shown(v: &str) -> &str {
    if is_anonymous(v) {
        "_"
    } else {
        v
    }
}

/// One diagnostic per violated shape condition; empty iff the
/// specification is well-formed.
pub fn validate_rule_shapes(spec: &Specification) -> Vec<Diagnostic> {
    let schema = spec.schema();
    let mut diags = Vec::new();
    let mut seen = HashSet::new();
    let labels = spec
        .rules()
        .map(|r| &r.label)
        .chain(spec.denials().iter().map(|d| &d.label));
    for l in labels {
        if !seen.insert(l.clone()) {
            diags.push(Diagnostic {
                label: l.clone(),
                message: "duplicate label".into(),
            });
        }
    }
    for rule in spec.rules() {
        let label = &rule.label;
        let sorts = check_body(schema, label, &rule.body, &mut diags);
        let mut push = |m: String| {
            diags.push(Diagnostic {
                label: label.clone(),
                message: m,
            })
        };
        match &rule.head {
            Head::Objects(x, y) => {
                for v in [x, y] {
                    match sorts.get(v.as_str()) {
                        None => push(format!("head variable {v} does not occur in the body")),
                        Some(s) if s.iter().any(|&k| k != VarSort::Obj) => {
                            push(format!("head variable {v} occurs outside object positions"))
                        }
                        _ => {}
                    }
                    let in_check = rule.body.iter().any(|a| match a {
                        Atom::Sim { left, right, .. } | Atom::Neq(left, right) => {
                            left.as_var() == Some(v) || right.as_var() == Some(v)
                        }
                        Atom::Rel(_) => false,
                    });
                    if in_check && sorts.contains_key(v.as_str()) {
                        push(format!("head variable {v} occurs outside object positions"));
                    }
                }
            }
            Head::Cells { left, right } => {
                let same = left.0 == right.0;
                for (i, (t, pos)) in [left, right].into_iter().enumerate() {
                    if same && i == 1 {
                        // checked with the left side
                        if let Some(rel) = tid_relation(&rule.body, t) {
                            check_position(schema, rel, *pos, t, &mut push);
                        }
                        continue;
                    }
                    let tid_occ = rule
                        .body
                        .iter()
                        .filter(|a| matches!(a, Atom::Rel(r) if &r.tid == t))
                        .count();
                    let other_occ = rule
                        .body
                        .iter()
                        .map(|a| match a {
                            Atom::Rel(r) => r.args.iter().filter(|x| x.as_var() == Some(t)).count(),
                            Atom::Sim { left, right, .. } | Atom::Neq(left, right) => {
                                (left.as_var() == Some(t)) as usize + (right.as_var() == Some(t)) as usize
                            }
                        })
                        .sum::<usize>();
                    if tid_occ == 0 {
                        push(format!("head tid variable {t} does not occur in position 0 of any atom"));
                    } else if tid_occ > 1 || other_occ > 0 {
                        push(format!("tid variable {t} must occur exactly once, in position 0"));
                    }
                    if let Some(rel) = tid_relation(&rule.body, t) {
                        check_position(schema, rel, *pos, t, &mut push);
                    }
                }
            }
        }
    }
    for d in spec.denials() {
        check_body(schema, &d.label, &d.body, &mut diags);
    }
    diags
}

fn tid_relation<'a>(body: &'a [Atom], t: &str) -> Option<&'a str> {
    body.iter().find_map(|a| match a {
        Atom::Rel(r) if r.tid == t => Some(r.relation.as_str()),
        _ => None,
    })
}

fn check_position(schema: &Schema, rel: &str, pos: usize, t: &str, push: &mut impl FnMut(String)) {
    let Some(rid) = schema.get(rel) else { return };
    match schema.relation(rid).type_at(pos) {
        Some(AttrType::Val) => {}
        _ => push(format!("{t}.{pos} is not a value position of {rel}")),
    }
}
