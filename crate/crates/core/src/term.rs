//! Sorts, typed symbol declarations, ground terms, and the s-expression
//! signature/term syntax.
//!
//! Terms are immutable trees with structural equality and hashing; symbol
//! declarations are shared behind `Arc` so cloning a term is cheap. All types
//! here are safe to move or share across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::sexpr::{self, Pos, SExpr, SyntaxError};

/// Errors from signature/term construction and parsing. Parse-time errors
/// carry the source position; programmatic construction reports without one.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TermError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}invalid identifier `{name}` (simple symbols only: letters, digits, ~!@$%^&*_-+=<>.?/ and must not start with a digit)")]
    BadIdentifier { name: String, pos: Pos },
    #[error("{pos}duplicate declaration of sort `{name}`")]
    DuplicateSort { name: String, pos: Pos },
    #[error("{pos}duplicate declaration of symbol `{name}`")]
    DuplicateSymbol { name: String, pos: Pos },
    #[error("{pos}reference to undeclared sort `{name}`")]
    UndeclaredSort { name: String, pos: Pos },
    #[error("{pos}declare-sort arity must be 0 (parametric sorts are unsupported), got `{got}`")]
    BadSortArity { got: String, pos: Pos },
    #[error("{pos}unknown symbol `{name}`")]
    UnknownSymbol { name: String, pos: Pos },
    #[error("{pos}arity mismatch for `{symbol}`: expected {expected} argument(s), got {got}")]
    ArityMismatch { symbol: String, expected: usize, got: usize, pos: Pos },
    #[error("{pos}sort mismatch at argument {index} of `{symbol}` (subterm path {path}): expected `{expected}`, got `{got}`")]
    SortMismatch {
        symbol: String,
        /// 1-based argument position within the parent application.
        index: usize,
        /// Dotted 1-based argument indices from the root to the offending subterm.
        path: String,
        expected: String,
        got: String,
        pos: Pos,
    },
    #[error("{pos}malformed declaration: {msg}")]
    Malformed { msg: String, pos: Pos },
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c)
}

/// SMT-LIB simple-symbol rule; quoted symbols `|...|` are unsupported.
pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => false,
        Some(c) if c.is_ascii_digit() || !is_symbol_char(c) => false,
        Some(_) => name.chars().all(is_symbol_char),
    }
}

/// A declared sort, identified by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sort(String);

impl Sort {
    pub fn new(name: impl Into<String>) -> Result<Self, TermError> {
        let name = name.into();
        if !is_valid_identifier(&name) {
            return Err(TermError::BadIdentifier { name, pos: Pos::default() });
        }
        Ok(Sort(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Sort {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

/// A typed function symbol; a constant is a symbol of arity 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolDecl {
    name: String,
    arg_sorts: Vec<Sort>,
    result_sort: Sort,
}

impl SymbolDecl {
    pub fn new(name: impl Into<String>, arg_sorts: Vec<Sort>, result_sort: Sort) -> Result<Self, TermError> {
        let name = name.into();
        if !is_valid_identifier(&name) {
            return Err(TermError::BadIdentifier { name, pos: Pos::default() });
        }
        Ok(SymbolDecl { name, arg_sorts, result_sort })
    }

    pub fn constant(name: impl Into<String>, sort: Sort) -> Result<Self, TermError> {
        Self::new(name, Vec::new(), sort)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn is_constant(&self) -> bool {
        self.arg_sorts.is_empty()
    }

    pub fn arg_sorts(&self) -> &[Sort] {
        &self.arg_sorts
    }

    pub fn result_sort(&self) -> &Sort {
        &self.result_sort
    }
}

impl fmt::Display for SymbolDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (", self.name)?;
        for (i, s) in self.arg_sorts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ") {}", self.result_sort)
    }
}

/// A many-sorted signature: the declared sorts and symbols. Sorts and symbol
/// names are each unique; there is no overloading.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    sorts: BTreeMap<String, Sort>,
    symbols: BTreeMap<String, Arc<SymbolDecl>>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_sort(&mut self, name: &str) -> Result<Sort, TermError> {
        self.declare_sort_at(name, Pos::default())
    }

    fn declare_sort_at(&mut self, name: &str, pos: Pos) -> Result<Sort, TermError> {
        if !is_valid_identifier(name) {
            return Err(TermError::BadIdentifier { name: name.to_string(), pos });
        }
        if self.sorts.contains_key(name) {
            return Err(TermError::DuplicateSort { name: name.to_string(), pos });
        }
        let sort = Sort(name.to_string());
        self.sorts.insert(name.to_string(), sort.clone());
        Ok(sort)
    }

    pub fn declare_fun(&mut self, name: &str, arg_sorts: &[&str], result_sort: &str) -> Result<Arc<SymbolDecl>, TermError> {
        self.declare_fun_at(name, arg_sorts, result_sort, Pos::default())
    }

    fn declare_fun_at(
        &mut self,
        name: &str,
        arg_sorts: &[&str],
        result_sort: &str,
        pos: Pos,
    ) -> Result<Arc<SymbolDecl>, TermError> {
        if !is_valid_identifier(name) {
            return Err(TermError::BadIdentifier { name: name.to_string(), pos });
        }
        if self.symbols.contains_key(name) {
            return Err(TermError::DuplicateSymbol { name: name.to_string(), pos });
        }
        let args = arg_sorts
            .iter()
            .map(|s| self.resolve_sort(s, pos))
            .collect::<Result<Vec<_>, _>>()?;
        let result = self.resolve_sort(result_sort, pos)?;
        let decl = Arc::new(SymbolDecl { name: name.to_string(), arg_sorts: args, result_sort: result });
        self.symbols.insert(name.to_string(), Arc::clone(&decl));
        Ok(decl)
    }

    fn resolve_sort(&self, name: &str, pos: Pos) -> Result<Sort, TermError> {
        self.sorts
            .get(name)
            .cloned()
            .ok_or_else(|| TermError::UndeclaredSort { name: name.to_string(), pos })
    }

    pub fn sort(&self, name: &str) -> Option<&Sort> {
        self.sorts.get(name)
    }

    pub fn symbol(&self, name: &str) -> Option<&Arc<SymbolDecl>> {
        self.symbols.get(name)
    }

    /// Declared sorts in name order.
    pub fn sorts(&self) -> impl Iterator<Item = &Sort> {
        self.sorts.values()
    }

    /// Declared symbols in name order.
    pub fn symbols(&self) -> impl Iterator<Item = &Arc<SymbolDecl>> {
        self.symbols.values()
    }

    /// True when `decl` is declared here with an identical profile.
    pub fn contains_decl(&self, decl: &SymbolDecl) -> bool {
        self.symbols.get(decl.name()).is_some_and(|d| d.as_ref() == decl)
    }

    pub fn is_empty(&self) -> bool {
        self.sorts.is_empty() && self.symbols.is_empty()
    }
}

/// A variable-free, well-sorted term: a head symbol applied to ground
/// arguments. Well-sortedness is enforced at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundTerm {
    head: Arc<SymbolDecl>,
    args: Vec<GroundTerm>,
}

impl GroundTerm {
    pub fn new(head: Arc<SymbolDecl>, args: Vec<GroundTerm>) -> Result<Self, TermError> {
        if args.len() != head.arity() {
            return Err(TermError::ArityMismatch {
                symbol: head.name().to_string(),
                expected: head.arity(),
                got: args.len(),
                pos: Pos::default(),
            });
        }
        for (i, (arg, expected)) in args.iter().zip(head.arg_sorts()).enumerate() {
            if arg.sort() != expected {
                return Err(TermError::SortMismatch {
                    symbol: head.name().to_string(),
                    index: i + 1,
                    path: (i + 1).to_string(),
                    expected: expected.name().to_string(),
                    got: arg.sort().name().to_string(),
                    pos: Pos::default(),
                });
            }
        }
        Ok(GroundTerm { head, args })
    }

    pub fn constant(head: Arc<SymbolDecl>) -> Result<Self, TermError> {
        Self::new(head, Vec::new())
    }

    pub fn head(&self) -> &Arc<SymbolDecl> {
        &self.head
    }

    pub fn args(&self) -> &[GroundTerm] {
        &self.args
    }

    pub fn sort(&self) -> &Sort {
        self.head.result_sort()
    }

    pub fn is_constant(&self) -> bool {
        self.args.is_empty()
    }

    /// Edge distance to the deepest leaf: 0 for a constant.
    pub fn depth(&self) -> u32 {
        match self.args.iter().map(GroundTerm::depth).max() {
            None => 0,
            Some(d) => d + 1,
        }
    }

    /// Number of symbol occurrences in the tree.
    pub fn node_count(&self) -> usize {
        1 + self.args.iter().map(GroundTerm::node_count).sum::<usize>()
    }

    /// Walk the tree re-checking arity and argument sorts at every node.
    pub fn validate(&self) -> Result<(), TermError> {
        GroundTerm::new(Arc::clone(&self.head), self.args.clone()).map(|_| ())?;
        for arg in &self.args {
            arg.validate()?;
        }
        Ok(())
    }
}

impl fmt::Display for GroundTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(self.head.name())
        } else {
            write!(f, "({}", self.head.name())?;
            for arg in &self.args {
                write!(f, " {arg}")?;
            }
            f.write_str(")")
        }
    }
}

impl Serialize for GroundTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Render a term in the canonical syntax accepted by [`parse_term`].
pub fn print_term(t: &GroundTerm) -> String {
    t.to_string()
}

/// The subset of `universe` whose result sort is `sort`, in input order.
pub fn symbols_of_sort<'a>(
    universe: impl IntoIterator<Item = &'a Arc<SymbolDecl>>,
    sort: &Sort,
) -> Vec<Arc<SymbolDecl>> {
    universe
        .into_iter()
        .filter(|d| d.result_sort() == sort)
        .cloned()
        .collect()
}

/// Parse a signature document: a sequence of `(declare-sort <name> 0)`,
/// `(declare-fun <name> (<sort>*) <sort>)` and `(declare-const <name> <sort>)`
/// forms. `declare-const c S` is sugar for `declare-fun c () S`.
pub fn parse_signature(text: &str) -> Result<Signature, TermError> {
    let forms = sexpr::parse_all(text)?;
    let mut sig = Signature::new();
    for form in &forms {
        parse_declaration(form, &mut sig)?;
    }
    Ok(sig)
}

/// Apply one declaration form to `sig`. Used by both the signature and trace
/// parsers.
pub(crate) fn parse_declaration(form: &SExpr, sig: &mut Signature) -> Result<(), TermError> {
    let pos = form.pos();
    let items = form
        .as_list()
        .ok_or_else(|| TermError::Malformed { msg: "expected a declaration list".into(), pos })?;
    let head = items
        .first()
        .and_then(SExpr::as_atom)
        .ok_or_else(|| TermError::Malformed { msg: "expected a declaration keyword".into(), pos })?;
    match head {
        "declare-sort" => {
            let (name, name_pos) = atom_at(items, 1, pos, "declare-sort expects a sort name")?;
            let (arity, arity_pos) = atom_at(items, 2, pos, "declare-sort expects an arity")?;
            if items.len() != 3 {
                return Err(TermError::Malformed { msg: "declare-sort takes exactly a name and an arity".into(), pos });
            }
            if arity != "0" {
                return Err(TermError::BadSortArity { got: arity.to_string(), pos: arity_pos });
            }
            sig.declare_sort_at(name, name_pos)?;
        }
        "declare-fun" => {
            let (name, name_pos) = atom_at(items, 1, pos, "declare-fun expects a symbol name")?;
            let args = items
                .get(2)
                .and_then(SExpr::as_list)
                .ok_or_else(|| TermError::Malformed { msg: "declare-fun expects an argument sort list".into(), pos })?;
            let (result, result_pos) = atom_at(items, 3, pos, "declare-fun expects a result sort")?;
            if items.len() != 4 {
                return Err(TermError::Malformed { msg: "declare-fun takes a name, argument sorts and a result sort".into(), pos });
            }
            let mut arg_names = Vec::with_capacity(args.len());
            for arg in args {
                let sort_name = arg.as_atom().ok_or_else(|| TermError::Malformed {
                    msg: "argument sorts must be plain sort names".into(),
                    pos: arg.pos(),
                })?;
                // resolve eagerly so the error points at the argument, not the form
                sig.resolve_sort(sort_name, arg.pos())?;
                arg_names.push(sort_name);
            }
            sig.resolve_sort(result, result_pos)?;
            sig.declare_fun_at(name, &arg_names, result, name_pos)?;
        }
        "declare-const" => {
            let (name, name_pos) = atom_at(items, 1, pos, "declare-const expects a symbol name")?;
            let (sort, sort_pos) = atom_at(items, 2, pos, "declare-const expects a sort")?;
            if items.len() != 3 {
                return Err(TermError::Malformed { msg: "declare-const takes exactly a name and a sort".into(), pos });
            }
            sig.resolve_sort(sort, sort_pos)?;
            sig.declare_fun_at(name, &[], sort, name_pos)?;
        }
        other => {
            return Err(TermError::Malformed { msg: format!("unknown declaration `{other}`"), pos });
        }
    }
    Ok(())
}

fn atom_at<'a>(items: &'a [SExpr], index: usize, pos: Pos, msg: &str) -> Result<(&'a str, Pos), TermError> {
    match items.get(index) {
        Some(e) => match e.as_atom() {
            Some(a) => Ok((a, e.pos())),
            None => Err(TermError::Malformed { msg: msg.to_string(), pos: e.pos() }),
        },
        None => Err(TermError::Malformed { msg: msg.to_string(), pos }),
    }
}

/// Parse one ground term over `sig`: constants written bare (`a`),
/// applications as `(f t1 ... tn)`.
pub fn parse_term(text: &str, sig: &Signature) -> Result<GroundTerm, TermError> {
    let form = sexpr::parse_one(text)?;
    term_from_sexpr(&form, sig)
}

pub(crate) fn term_from_sexpr(form: &SExpr, sig: &Signature) -> Result<GroundTerm, TermError> {
    let mut path = Vec::new();
    term_from_sexpr_at(form, sig, &mut path)
}

fn term_from_sexpr_at(form: &SExpr, sig: &Signature, path: &mut Vec<usize>) -> Result<GroundTerm, TermError> {
    match form {
        SExpr::Atom(name, pos) => {
            let decl = sig
                .symbol(name)
                .ok_or_else(|| TermError::UnknownSymbol { name: name.clone(), pos: *pos })?;
            if !decl.is_constant() {
                return Err(TermError::ArityMismatch {
                    symbol: name.clone(),
                    expected: decl.arity(),
                    got: 0,
                    pos: *pos,
                });
            }
            Ok(GroundTerm { head: Arc::clone(decl), args: Vec::new() })
        }
        SExpr::List(items, pos) => {
            let head = items
                .first()
                .and_then(SExpr::as_atom)
                .ok_or_else(|| TermError::Malformed { msg: "application must start with a symbol".into(), pos: *pos })?;
            let head_pos = items[0].pos();
            let decl = sig
                .symbol(head)
                .ok_or_else(|| TermError::UnknownSymbol { name: head.to_string(), pos: head_pos })?;
            let got = items.len() - 1;
            if got != decl.arity() {
                return Err(TermError::ArityMismatch {
                    symbol: head.to_string(),
                    expected: decl.arity(),
                    got,
                    pos: *pos,
                });
            }
            let decl = Arc::clone(decl);
            let mut args = Vec::with_capacity(got);
            for (i, (item, expected)) in items[1..].iter().zip(decl.arg_sorts()).enumerate() {
                path.push(i + 1);
                let arg = term_from_sexpr_at(item, sig, path)?;
                if arg.sort() != expected {
                    return Err(TermError::SortMismatch {
                        symbol: head.to_string(),
                        index: i + 1,
                        path: path.iter().map(usize::to_string).collect::<Vec<_>>().join("."),
                        expected: expected.name().to_string(),
                        got: arg.sort().name().to_string(),
                        pos: item.pos(),
                    });
                }
                path.pop();
                args.push(arg);
            }
            Ok(GroundTerm { head: decl, args })
        }
    }
}
