//! Parser and serializer for the Cassandra `.pomdp` text format.
//!
//! Supported subset:
//!
//! * header statements `discount:`, `values: reward|cost`, `states:`,
//!   `actions:`, `observations:` (named or count-declared), `start:`
//!   (probability row or `uniform`; defaults to uniform when absent);
//! * `T:` statements as single entry (`T: a : s : s' p`), per-action row
//!   (`T: a : s` followed by |S| numbers), per-action matrix, `identity`,
//!   or `uniform`;
//! * `O:` statements as single entry, row, matrix, or `uniform`;
//! * `R:` statements `R: a : s : s' : o v`, `R: a : s : s' v`, and
//!   `R: a : s v`, each taking a single value;
//! * `*` wildcards in any index slot; `#` comments; LF or CRLF endings.
//!
//! Rewards richer than `R(s, a)` are collapsed through the transition and
//! observation tensors into the `|S| x |A|` matrix the model carries; later
//! statements override earlier ones on the cells they address. Unsupported
//! constructs (for example `start include:`) fail loudly with a named error
//! rather than guessing.

use crate::pomdp::{ModelError, Pomdp, ROW_SUM_TOLERANCE};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Why a file was rejected. `name()` is the stable machine-readable reason.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    ExpectedKeyword(String),
    ExpectedColon,
    ExpectedNumber(String),
    ExpectedIdentifier(String),
    BadNumber(String),
    BadDiscount(f64),
    BadProbability(f64),
    RowSum {
        table: char,
        action: usize,
        row: usize,
        sum: f64,
    },
    UndeclaredIdentifier(String),
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        count: usize,
    },
    MissingDeclaration(&'static str),
    DuplicateDeclaration(&'static str),
    UnsupportedConstruct(String),
    UnexpectedEnd,
}

impl ParseErrorKind {
    /// Stable name for the failure class.
    pub fn name(&self) -> &'static str {
        use ParseErrorKind::*;
        match self {
            ExpectedKeyword(_) => "expected-keyword",
            ExpectedColon => "expected-colon",
            ExpectedNumber(_) => "expected-number",
            ExpectedIdentifier(_) => "expected-identifier",
            BadNumber(_) => "bad-number",
            BadDiscount(_) => "bad-discount",
            BadProbability(_) => "bad-probability",
            RowSum { .. } => "row-sum",
            UndeclaredIdentifier(_) => "undeclared-identifier",
            IndexOutOfRange { .. } => "index-out-of-range",
            MissingDeclaration(_) => "missing-declaration",
            DuplicateDeclaration(_) => "duplicate-declaration",
            UnsupportedConstruct(_) => "unsupported-construct",
            UnexpectedEnd => "unexpected-end",
        }
    }

    fn detail(&self) -> String {
        use ParseErrorKind::*;
        match self {
            ExpectedKeyword(found) => format!("expected a statement keyword, found `{found}`"),
            ExpectedColon => "expected `:`".to_string(),
            ExpectedNumber(found) => format!("expected a number, found `{found}`"),
            ExpectedIdentifier(found) => format!("expected an identifier, found `{found}`"),
            BadNumber(tok) => format!("cannot parse `{tok}` as a number"),
            BadDiscount(v) => format!("discount {v} is outside [0, 1]"),
            BadProbability(v) => format!("probability {v} is outside [0, 1]"),
            RowSum {
                table,
                action,
                row,
                sum,
            } => {
                format!("{table} row (action {action}, row {row}) sums to {sum}, expected 1")
            }
            UndeclaredIdentifier(name) => format!("`{name}` was never declared"),
            IndexOutOfRange { what, index, count } => {
                format!("{what} index {index} out of range (count {count})")
            }
            MissingDeclaration(what) => format!("`{what}` must be declared first"),
            DuplicateDeclaration(what) => format!("`{what}` declared twice"),
            UnsupportedConstruct(what) => format!("unsupported construct `{what}`"),
            UnexpectedEnd => "unexpected end of file".to_string(),
        }
    }
}

/// A parse failure with its source position (1-based; 0 when the error is
/// semantic and not tied to a single token).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, col {col}: {}: {}", kind.name(), kind.detail())]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn at(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, col, kind }
    }

    fn semantic(kind: ParseErrorKind) -> Self {
        ParseError {
            line: 0,
            col: 0,
            kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Colon,
    Star,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("");
        let mut chars = line.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            let col = start + 1;
            if c.is_whitespace() {
                chars.next();
                continue;
            }
            match c {
                ':' => {
                    chars.next();
                    out.push(Token {
                        tok: Tok::Colon,
                        line: lineno + 1,
                        col,
                    });
                }
                '*' => {
                    chars.next();
                    out.push(Token {
                        tok: Tok::Star,
                        line: lineno + 1,
                        col,
                    });
                }
                c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                    let mut tok = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if c.is_ascii_digit() || "+-.eE".contains(c) {
                            tok.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    let value: f64 = tok.parse().map_err(|_| {
                        ParseError::at(lineno + 1, col, ParseErrorKind::BadNumber(tok.clone()))
                    })?;
                    out.push(Token {
                        tok: Tok::Number(value),
                        line: lineno + 1,
                        col,
                    });
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut tok = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if c.is_alphanumeric() || c == '_' || c == '-' {
                            tok.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    out.push(Token {
                        tok: Tok::Ident(tok),
                        line: lineno + 1,
                        col,
                    });
                }
                other => {
                    return Err(ParseError::at(
                        lineno + 1,
                        col,
                        ParseErrorKind::ExpectedKeyword(other.to_string()),
                    ));
                }
            }
        }
    }
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "discount",
    "values",
    "states",
    "actions",
    "observations",
    "start",
    "T",
    "O",
    "R",
];

/// Index reference inside a `T:`/`O:`/`R:` statement; `None` is the `*`
/// wildcard.
type Slot = Option<usize>;

#[derive(Debug, Clone)]
enum Statement {
    StartRow(Vec<f64>),
    StartUniform,
    Transition {
        action: Slot,
        form: TableForm,
    },
    Observation {
        action: Slot,
        form: TableForm,
    },
    Reward {
        action: Slot,
        state: Slot,
        next: Option<Slot>,
        obs: Option<Slot>,
        value: f64,
    },
}

#[derive(Debug, Clone)]
enum NameDecl {
    Count(usize),
    Names(Vec<String>),
}

#[derive(Debug, Clone)]
enum TableForm {
    Single { row: Slot, col: Slot, value: f64 },
    Row { row: Slot, values: Vec<f64> },
    Matrix(Vec<f64>),
    Identity,
    Uniform,
}

/// The resolved form of a `.pomdp` file: name tables plus the raw parsed
/// statements, before tensors are assembled and validated.
#[derive(Debug, Clone)]
pub struct PomdpSource {
    state_names: Vec<String>,
    action_names: Vec<String>,
    observation_names: Vec<String>,
    discount: f64,
    cost_values: bool,
    start: Option<Vec<f64>>,
    statements: Vec<Statement>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn fail(&self, kind: ParseErrorKind) -> ParseError {
        let (line, col) = self.here();
        ParseError::at(line, col, kind)
    }

    fn expect_colon(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Colon, ..
            }) => {
                self.next();
                Ok(())
            }
            Some(_) => Err(self.fail(ParseErrorKind::ExpectedColon)),
            None => Err(self.fail(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn eat_colon(&mut self) -> bool {
        if matches!(
            self.peek(),
            Some(Token {
                tok: Tok::Colon,
                ..
            })
        ) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_number(&mut self) -> Result<f64, ParseError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Number(v),
                ..
            }) => {
                self.next();
                Ok(v)
            }
            Some(t) => Err(ParseError::at(
                t.line,
                t.col,
                ParseErrorKind::ExpectedNumber(describe(&t.tok)),
            )),
            None => Err(self.fail(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expect_numbers(&mut self, count: usize) -> Result<Vec<f64>, ParseError> {
        (0..count).map(|_| self.expect_number()).collect()
    }

    /// An index slot: name, numeric index, or `*`.
    fn expect_slot(&mut self, names: &[String], what: &'static str) -> Result<Slot, ParseError> {
        match self.peek().cloned() {
            Some(Token { tok: Tok::Star, .. }) => {
                self.next();
                Ok(None)
            }
            Some(Token {
                tok: Tok::Number(v),
                line,
                col,
            }) => {
                self.next();
                let index = v as usize;
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(ParseError::at(
                        line,
                        col,
                        ParseErrorKind::BadNumber(v.to_string()),
                    ));
                }
                if index >= names.len() {
                    return Err(ParseError::at(
                        line,
                        col,
                        ParseErrorKind::IndexOutOfRange {
                            what,
                            index,
                            count: names.len(),
                        },
                    ));
                }
                Ok(Some(index))
            }
            Some(Token {
                tok: Tok::Ident(name),
                line,
                col,
            }) => {
                self.next();
                match names.iter().position(|n| n == &name) {
                    Some(i) => Ok(Some(i)),
                    None => Err(ParseError::at(
                        line,
                        col,
                        ParseErrorKind::UndeclaredIdentifier(name),
                    )),
                }
            }
            Some(t) => Err(ParseError::at(
                t.line,
                t.col,
                ParseErrorKind::ExpectedIdentifier(describe(&t.tok)),
            )),
            None => Err(self.fail(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expect_name_decl(&mut self) -> Result<NameDecl, ParseError> {
        match self.peek().cloned() {
            Some(Token {
                tok: Tok::Number(v),
                line,
                col,
            }) => {
                self.next();
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(ParseError::at(
                        line,
                        col,
                        ParseErrorKind::BadNumber(v.to_string()),
                    ));
                }
                Ok(NameDecl::Count(v as usize))
            }
            Some(Token {
                tok: Tok::Ident(_), ..
            }) => {
                let mut names = Vec::new();
                while let Some(Token {
                    tok: Tok::Ident(name),
                    ..
                }) = self.peek()
                {
                    if KEYWORDS.contains(&name.as_str()) {
                        break;
                    }
                    names.push(name.clone());
                    self.next();
                }
                if names.is_empty() {
                    Err(self.fail(ParseErrorKind::ExpectedIdentifier("keyword".into())))
                } else {
                    Ok(NameDecl::Names(names))
                }
            }
            Some(t) => Err(ParseError::at(
                t.line,
                t.col,
                ParseErrorKind::ExpectedIdentifier(describe(&t.tok)),
            )),
            None => Err(self.fail(ParseErrorKind::UnexpectedEnd)),
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => s.clone(),
        Tok::Number(v) => v.to_string(),
        Tok::Colon => ":".to_string(),
        Tok::Star => "*".to_string(),
    }
}

impl PomdpSource {
    /// Lexes and parses the statement structure of a file. Tensor assembly
    /// and stochasticity checks happen in [`PomdpSource::into_pomdp`].
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };

        let mut discount: Option<f64> = None;
        let mut cost_values: Option<bool> = None;
        let mut states: Option<NameDecl> = None;
        let mut actions: Option<NameDecl> = None;
        let mut observations: Option<NameDecl> = None;
        let mut start: Option<Statement> = None;
        let mut statements: Vec<Statement> = Vec::new();

        let names_of =
            |decl: &Option<NameDecl>, what: &'static str| -> Result<Vec<String>, ParseError> {
                match decl {
                    Some(NameDecl::Count(n)) => Ok((0..*n).map(|i| i.to_string()).collect()),
                    Some(NameDecl::Names(names)) => Ok(names.clone()),
                    None => Err(ParseError::semantic(ParseErrorKind::MissingDeclaration(
                        what,
                    ))),
                }
            };

        while let Some(token) = p.peek().cloned() {
            let keyword = match &token.tok {
                Tok::Ident(k) if KEYWORDS.contains(&k.as_str()) => k.clone(),
                other => {
                    return Err(ParseError::at(
                        token.line,
                        token.col,
                        ParseErrorKind::ExpectedKeyword(describe(other)),
                    ));
                }
            };
            p.next();
            // `start include:` / `start exclude:` are recognizable but out
            // of the supported subset; fail by name instead of as a stray
            // colon error
            if keyword == "start" {
                if let Some(Token {
                    tok: Tok::Ident(word),
                    line,
                    col,
                }) = p.peek().cloned()
                {
                    if word == "include" || word == "exclude" {
                        return Err(ParseError::at(
                            line,
                            col,
                            ParseErrorKind::UnsupportedConstruct(format!("start {word}")),
                        ));
                    }
                }
            }
            p.expect_colon()?;
            match keyword.as_str() {
                "discount" => {
                    if discount.is_some() {
                        return Err(ParseError::at(
                            token.line,
                            token.col,
                            ParseErrorKind::DuplicateDeclaration("discount"),
                        ));
                    }
                    let v = p.expect_number()?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(ParseError::at(
                            token.line,
                            token.col,
                            ParseErrorKind::BadDiscount(v),
                        ));
                    }
                    discount = Some(v);
                }
                "values" => {
                    if cost_values.is_some() {
                        return Err(ParseError::at(
                            token.line,
                            token.col,
                            ParseErrorKind::DuplicateDeclaration("values"),
                        ));
                    }
                    match p.next() {
                        Some(Token {
                            tok: Tok::Ident(v), ..
                        }) if v == "reward" => cost_values = Some(false),
                        Some(Token {
                            tok: Tok::Ident(v), ..
                        }) if v == "cost" => cost_values = Some(true),
                        Some(t) => {
                            return Err(ParseError::at(
                                t.line,
                                t.col,
                                ParseErrorKind::UnsupportedConstruct(format!(
                                    "values: {}",
                                    describe(&t.tok)
                                )),
                            ));
                        }
                        None => return Err(p.fail(ParseErrorKind::UnexpectedEnd)),
                    }
                }
                "states" | "actions" | "observations" => {
                    let slot = match keyword.as_str() {
                        "states" => &mut states,
                        "actions" => &mut actions,
                        _ => &mut observations,
                    };
                    if slot.is_some() {
                        let what = match keyword.as_str() {
                            "states" => "states",
                            "actions" => "actions",
                            _ => "observations",
                        };
                        return Err(ParseError::at(
                            token.line,
                            token.col,
                            ParseErrorKind::DuplicateDeclaration(what),
                        ));
                    }
                    *slot = Some(p.expect_name_decl()?);
                }
                "start" => {
                    let n = names_of(&states, "states")?.len();
                    match p.peek().cloned() {
                        Some(Token {
                            tok: Tok::Ident(word),
                            line,
                            col,
                        }) => {
                            if word == "uniform" {
                                p.next();
                                start = Some(Statement::StartUniform);
                            } else {
                                return Err(ParseError::at(
                                    line,
                                    col,
                                    ParseErrorKind::UnsupportedConstruct(format!("start {word}")),
                                ));
                            }
                        }
                        _ => {
                            start = Some(Statement::StartRow(p.expect_numbers(n)?));
                        }
                    }
                }
                "T" | "O" => {
                    let action_names = names_of(&actions, "actions")?;
                    let state_names = names_of(&states, "states")?;
                    let obs_names = names_of(&observations, "observations")?;
                    let is_t = keyword == "T";
                    let ncols = if is_t {
                        state_names.len()
                    } else {
                        obs_names.len()
                    };
                    let action = p.expect_slot(&action_names, "action")?;
                    let form = if p.eat_colon() {
                        let row = p.expect_slot(&state_names, "state")?;
                        if p.eat_colon() {
                            let col = if is_t {
                                p.expect_slot(&state_names, "state")?
                            } else {
                                p.expect_slot(&obs_names, "observation")?
                            };
                            let value = p.expect_number()?;
                            TableForm::Single { row, col, value }
                        } else {
                            TableForm::Row {
                                row,
                                values: p.expect_numbers(ncols)?,
                            }
                        }
                    } else {
                        match p.peek().cloned() {
                            Some(Token {
                                tok: Tok::Ident(word),
                                line,
                                col,
                            }) => {
                                p.next();
                                match word.as_str() {
                                    "identity" if is_t => TableForm::Identity,
                                    "uniform" => TableForm::Uniform,
                                    other => {
                                        return Err(ParseError::at(
                                            line,
                                            col,
                                            ParseErrorKind::UnsupportedConstruct(format!(
                                                "{keyword}: {other}"
                                            )),
                                        ));
                                    }
                                }
                            }
                            _ => TableForm::Matrix(p.expect_numbers(state_names.len() * ncols)?),
                        }
                    };
                    statements.push(if is_t {
                        Statement::Transition { action, form }
                    } else {
                        Statement::Observation { action, form }
                    });
                }
                "R" => {
                    let action_names = names_of(&actions, "actions")?;
                    let state_names = names_of(&states, "states")?;
                    let obs_names = names_of(&observations, "observations")?;
                    let action = p.expect_slot(&action_names, "action")?;
                    p.expect_colon()?;
                    let state = p.expect_slot(&state_names, "state")?;
                    let mut next = None;
                    let mut obs = None;
                    if p.eat_colon() {
                        next = Some(p.expect_slot(&state_names, "state")?);
                        if p.eat_colon() {
                            obs = Some(p.expect_slot(&obs_names, "observation")?);
                        }
                    }
                    let value = p.expect_number()?;
                    statements.push(Statement::Reward {
                        action,
                        state,
                        next,
                        obs,
                        value,
                    });
                }
                _ => unreachable!(),
            }
        }

        let state_names = names_of(&states, "states")?;
        let action_names = names_of(&actions, "actions")?;
        let observation_names = names_of(&observations, "observations")?;
        let discount = discount
            .ok_or_else(|| ParseError::semantic(ParseErrorKind::MissingDeclaration("discount")))?;
        let cost_values = cost_values
            .ok_or_else(|| ParseError::semantic(ParseErrorKind::MissingDeclaration("values")))?;
        let start = match start {
            Some(Statement::StartRow(row)) => Some(row),
            Some(Statement::StartUniform) | None => None,
            _ => unreachable!(),
        };

        Ok(PomdpSource {
            state_names,
            action_names,
            observation_names,
            discount,
            cost_values,
            start,
            statements,
        })
    }

    /// Assembles and validates the tensors, collapsing rewards to R(s, a).
    pub fn into_pomdp(self) -> Result<Pomdp, ParseError> {
        let ns = self.state_names.len();
        let na = self.action_names.len();
        let no = self.observation_names.len();

        let mut transition = vec![DMatrix::zeros(ns, ns); na];
        let mut observation = vec![DMatrix::zeros(ns, no); na];
        // dense R(a, s, s', o); later statements override earlier ones
        let mut reward4 = vec![0.0f64; na * ns * ns * no];
        let r4 = |a: usize, s: usize, sn: usize, o: usize| ((a * ns + s) * ns + sn) * no + o;

        let expand = |slot: Slot, count: usize| -> std::ops::Range<usize> {
            match slot {
                Some(i) => i..i + 1,
                None => 0..count,
            }
        };

        for stmt in &self.statements {
            match stmt {
                Statement::Transition { action, form }
                | Statement::Observation { action, form } => {
                    let is_t = matches!(stmt, Statement::Transition { .. });
                    let ncols = if is_t { ns } else { no };
                    for a in expand(*action, na) {
                        let target = if is_t {
                            &mut transition[a]
                        } else {
                            &mut observation[a]
                        };
                        match form {
                            TableForm::Single { row, col, value } => {
                                for r in expand(*row, ns) {
                                    for c in expand(*col, ncols) {
                                        target[(r, c)] = *value;
                                    }
                                }
                            }
                            TableForm::Row { row, values } => {
                                for r in expand(*row, ns) {
                                    for (c, v) in values.iter().enumerate() {
                                        target[(r, c)] = *v;
                                    }
                                }
                            }
                            TableForm::Matrix(values) => {
                                for r in 0..ns {
                                    for c in 0..ncols {
                                        target[(r, c)] = values[r * ncols + c];
                                    }
                                }
                            }
                            TableForm::Identity => {
                                target.fill(0.0);
                                target.fill_diagonal(1.0);
                            }
                            TableForm::Uniform => {
                                target.fill(1.0 / ncols as f64);
                            }
                        }
                    }
                }
                Statement::Reward {
                    action,
                    state,
                    next,
                    obs,
                    value,
                } => {
                    for a in expand(*action, na) {
                        for s in expand(*state, ns) {
                            for sn in expand(next.unwrap_or(None), ns) {
                                for o in expand(obs.unwrap_or(None), no) {
                                    reward4[r4(a, s, sn, o)] = *value;
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }

        // validate entries and row sums before normalizing
        for (a, t) in transition.iter().enumerate() {
            check_table(t, 'T', a)?;
        }
        for (a, w) in observation.iter().enumerate() {
            check_table(w, 'O', a)?;
        }

        // collapse R(a, s, s', o) through T and O into R(s, a)
        let sign = if self.cost_values { -1.0 } else { 1.0 };
        let mut reward = DMatrix::zeros(ns, na);
        for a in 0..na {
            for s in 0..ns {
                let mut total = 0.0;
                for sn in 0..ns {
                    let t_prob = transition[a][(s, sn)];
                    if t_prob == 0.0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for o in 0..no {
                        inner += observation[a][(sn, o)] * reward4[r4(a, s, sn, o)];
                    }
                    total += t_prob * inner;
                }
                reward[(s, a)] = sign * total;
            }
        }

        let start = match &self.start {
            Some(row) => DVector::from_vec(row.clone()),
            None => DVector::from_element(ns, 1.0 / ns as f64),
        };

        Pomdp::new(transition, observation, reward, self.discount, start)
            .map(|m| m.with_names(self.state_names, self.action_names, self.observation_names))
            .map_err(|e| ParseError::semantic(model_error_kind(e)))
    }
}

fn check_table(m: &DMatrix<f64>, table: char, action: usize) -> Result<(), ParseError> {
    for r in 0..m.nrows() {
        let mut sum = 0.0;
        for c in 0..m.ncols() {
            let v = m[(r, c)];
            if !(0.0..=1.0 + ROW_SUM_TOLERANCE).contains(&v) || v.is_nan() {
                return Err(ParseError::semantic(ParseErrorKind::BadProbability(v)));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(ParseError::semantic(ParseErrorKind::RowSum {
                table,
                action,
                row: r,
                sum,
            }));
        }
    }
    Ok(())
}

fn model_error_kind(e: ModelError) -> ParseErrorKind {
    match e {
        ModelError::TransitionRowSum { action, row, sum } => ParseErrorKind::RowSum {
            table: 'T',
            action,
            row,
            sum,
        },
        ModelError::ObservationRowSum { action, row, sum } => ParseErrorKind::RowSum {
            table: 'O',
            action,
            row,
            sum,
        },
        ModelError::StartSum(sum) => ParseErrorKind::RowSum {
            table: 's',
            action: 0,
            row: 0,
            sum,
        },
        ModelError::BadProbability { value, .. } => ParseErrorKind::BadProbability(value),
        ModelError::BadDiscount(v) => ParseErrorKind::BadDiscount(v),
        ModelError::DimensionMismatch { what, .. } => {
            ParseErrorKind::UnsupportedConstruct(what.to_string())
        }
    }
}

/// Parses `.pomdp` text into a validated model.
pub fn parse_pomdp(text: &str) -> Result<Pomdp, ParseError> {
    PomdpSource::parse(text)?.into_pomdp()
}

fn default_names(names: &[String]) -> bool {
    names.iter().enumerate().all(|(i, n)| n == &i.to_string())
}

fn fmt_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

/// Serializes a model so that `parse_pomdp(serialize_pomdp(m))` round-trips
/// all tensors exactly. Rewards are written in the collapsed `R(s, a)` form.
pub fn serialize_pomdp(m: &Pomdp) -> String {
    let mut out = String::new();
    out.push_str(&format!("discount: {}\n", m.discount()));
    out.push_str("values: reward\n");
    let decl = |names: &[String]| {
        if default_names(names) {
            names.len().to_string()
        } else {
            names.join(" ")
        }
    };
    out.push_str(&format!("states: {}\n", decl(m.state_names())));
    out.push_str(&format!("actions: {}\n", decl(m.action_names())));
    out.push_str(&format!("observations: {}\n", decl(m.observation_names())));
    out.push_str(&format!("start: {}\n", fmt_row(m.start().iter().copied())));
    for a in 0..m.num_actions() {
        out.push_str(&format!("\nT: {}\n", m.action_names()[a]));
        let t = m.transition(a);
        for r in 0..t.nrows() {
            out.push_str(&fmt_row(t.row(r).iter().copied()));
            out.push('\n');
        }
        out.push_str(&format!("O: {}\n", m.action_names()[a]));
        let w = m.observation(a);
        for r in 0..w.nrows() {
            out.push_str(&fmt_row(w.row(r).iter().copied()));
            out.push('\n');
        }
    }
    out.push('\n');
    for s in 0..m.num_states() {
        for a in 0..m.num_actions() {
            let v = m.reward()[(s, a)];
            if v != 0.0 {
                out.push_str(&format!(
                    "R: {} : {} : * : * {}\n",
                    m.action_names()[a],
                    m.state_names()[s],
                    v
                ));
            }
        }
    }
    out
}
