//! Line-oriented reader for the `.mcg` graph format.
//!
//! ```text
//! graph "fig" class=cm-c-dmg {
//!   cluster CX { vars X1, X2 }
//!   rvar R_CX for CX
//!   edge CX -> CY
//!   edge CZ <-> R_CY
//! }
//! ```
//!
//! `var` declares a top-level variable (variable-level classes only).
//! `rvar R for O [proxy P]` declares an indicator; its proxy is created
//! automatically and named `O*` unless `proxy` is given. `#` starts a comment.

use std::collections::BTreeMap;

use super::{Clustering, GraphBuilder, GraphClass, MixedGraph};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Comma,
    Eq,
    Arrow,
    BiArrow,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '*' | '.' | '\'')
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '"' => {
                let start = i + 1;
                let Some(len) = chars[start..].iter().position(|&c| c == '"') else {
                    return Err(parse_err(lineno, col, "unterminated string"));
                };
                i = start + len + 1;
                out.push(Spanned {
                    tok: Tok::Str(chars[start..start + len].iter().collect()),
                    col,
                });
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 2;
                out.push(Spanned { tok: Tok::Arrow, col });
                continue;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                i += 3;
                out.push(Spanned { tok: Tok::BiArrow, col });
                continue;
            }
            c if is_ident_char(c) || c == '-' => {
                // Class keywords contain hyphens; edge arrows start with one.
                let start = i;
                while i < chars.len()
                    && (is_ident_char(chars[i]) || (chars[i] == '-' && chars.get(i + 1) != Some(&'>')))
                {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    col,
                });
                continue;
            }
            other => return Err(parse_err(lineno, col, &format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { tok, col });
        i += 1;
    }
    Ok(out)
}

fn parse_err(line: usize, column: usize, message: &str) -> Error {
    Error::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |t| t.col)
    }

    fn err(&self, msg: &str) -> Error {
        parse_err(self.line, self.col(), msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        self.pos += 1;
        t
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(&format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("expected `{kw}`"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn end(&self) -> Result<()> {
        if self.done() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }
}

enum Stmt {
    Cluster(String, Vec<String>),
    Var(String),
    Rvar(String, String, Option<String>),
    Edge(String, String),
    BiEdge(String, String),
}

fn parse_stmt(c: &mut Cursor<'_>) -> Result<Stmt> {
    let kw = c.ident("a statement keyword")?;
    let stmt = match kw.as_str() {
        "cluster" => {
            let id = c.ident("cluster name")?;
            c.expect(Tok::LBrace, "`{`")?;
            let mut members = Vec::new();
            if c.peek() != Some(&Tok::RBrace) {
                c.keyword("vars")?;
                if c.peek() != Some(&Tok::RBrace) {
                    members.push(c.ident("variable name")?);
                    while c.peek() == Some(&Tok::Comma) {
                        c.next();
                        members.push(c.ident("variable name")?);
                    }
                }
            }
            c.expect(Tok::RBrace, "`}`")?;
            Stmt::Cluster(id, members)
        }
        "var" => Stmt::Var(c.ident("variable name")?),
        "rvar" => {
            let id = c.ident("indicator name")?;
            c.keyword("for")?;
            let owner = c.ident("owner name")?;
            let proxy = if c.peek() == Some(&Tok::Ident("proxy".into())) {
                c.next();
                Some(c.ident("proxy name")?)
            } else {
                None
            };
            Stmt::Rvar(id, owner, proxy)
        }
        "edge" => {
            let a = c.ident("vertex name")?;
            let bi = match c.next() {
                Some(Tok::Arrow) => false,
                Some(Tok::BiArrow) => true,
                _ => {
                    c.pos -= 1;
                    return Err(c.err("expected `->` or `<->`"));
                }
            };
            let b = c.ident("vertex name")?;
            if bi {
                Stmt::BiEdge(a, b)
            } else {
                Stmt::Edge(a, b)
            }
        }
        other => {
            c.pos -= 1;
            return Err(c.err(&format!("unknown statement `{other}`")));
        }
    };
    c.end()?;
    Ok(stmt)
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            lines: text.lines().enumerate().map(|(i, l)| (i + 1, l)).collect(),
        }
    }
}

/// Parses and validates a graph file.
pub fn parse_graph(text: &str) -> Result<MixedGraph> {
    parse_builder(text)?.build()
}

/// Parses without class validation.
pub fn parse_graph_unchecked(text: &str) -> Result<MixedGraph> {
    parse_builder(text)?.build_unchecked()
}

fn parse_builder(text: &str) -> Result<GraphBuilder> {
    let lines = Lines::new(text);
    let mut builder: Option<GraphBuilder> = None;
    let mut closed = false;
    let mut last_line = 1;
    for (lineno, line) in lines.lines {
        last_line = lineno;
        let toks = lex_line(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor {
            toks: &toks,
            pos: 0,
            line: lineno,
            eol_col: line.chars().count() + 1,
        };
        if closed {
            return Err(c.err("content after closing `}`"));
        }
        let Some(b) = builder.as_mut() else {
            c.keyword("graph")?;
            let name = match c.next() {
                Some(Tok::Str(s)) => s.clone(),
                _ => {
                    c.pos -= 1;
                    return Err(c.err("expected quoted graph name"));
                }
            };
            c.keyword("class")?;
            c.expect(Tok::Eq, "`=`")?;
            let col = c.col();
            let kw = c.ident("graph class")?;
            let class = GraphClass::from_keyword(&kw)
                .ok_or_else(|| parse_err(lineno, col, &format!("unknown graph class `{kw}`")))?;
            c.expect(Tok::LBrace, "`{`")?;
            c.end()?;
            builder = Some(GraphBuilder::new(name, class));
            continue;
        };
        if c.peek() == Some(&Tok::RBrace) {
            c.next();
            c.end()?;
            closed = true;
            continue;
        }
        match parse_stmt(&mut c)? {
            Stmt::Cluster(id, m) => b.add_cluster(id, m),
            Stmt::Var(v) => b.add_var(v),
            Stmt::Rvar(id, owner, proxy) => b.add_indicator(id, owner, proxy),
            Stmt::Edge(a, x) => b.add_edge(a, x),
            Stmt::BiEdge(a, x) => b.add_biedge(a, x),
        }
    }
    match builder {
        None => Err(parse_err(1, 1, "missing `graph` header")),
        Some(_) if !closed => Err(parse_err(last_line, 1, "missing closing `}`")),
        Some(b) => Ok(b),
    }
}

/// Reads a bare list of `cluster` statements.
pub fn parse_clustering(text: &str) -> Result<Clustering> {
    let mut clusters: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, line) in Lines::new(text).lines {
        let toks = lex_line(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor {
            toks: &toks,
            pos: 0,
            line: lineno,
            eol_col: line.chars().count() + 1,
        };
        match parse_stmt(&mut c)? {
            Stmt::Cluster(id, m) => {
                if clusters.insert(id.clone(), m).is_some() {
                    return Err(parse_err(lineno, 1, &format!("cluster `{id}` declared twice")));
                }
            }
            _ => return Err(parse_err(lineno, 1, "only `cluster` statements are allowed here")),
        }
    }
    Clustering::new(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Kind;

    const FIG2B: &str = r#"
graph "fig2b" class=cm-c-dmg {
  cluster CX { vars X1, X2 }
  cluster CY { vars Y1, Y2 }
  cluster CZ { vars Z1, Z2 }
  rvar R_CX for CX
  rvar R_CY for CY
  edge CX -> CY
  edge CZ -> CX
  edge CX -> CZ
  edge CZ -> R_CX
  edge CZ <-> R_CY
  edge CX -> CX
  edge CY -> CY
  edge CZ -> CZ
}
"#;

    #[test]
    fn parses_cm_graph_with_auto_proxies() {
        let g = parse_graph(FIG2B).unwrap();
        assert_eq!(g.indices_of_kind(Kind::Cluster).len(), 3);
        assert_eq!(g.indicators().len(), 2);
        assert_eq!(g.proxies().len(), 2);
        assert!(g.contains("CX*") && g.contains("CY*"));
    }

    #[test]
    fn empty_cluster_is_a_validation_error() {
        let src = "graph \"e\" class=c-dmg {\n  cluster CX { }\n}\n";
        match parse_graph(src) {
            Err(Error::Validation(v)) => assert_eq!(v[0].rule, "cluster must be nonempty"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn proxy_child_is_rejected() {
        let src = "graph \"p\" class=cm-c-dmg {\n cluster CX { vars X1 }\n cluster CY { vars Y1 }\n rvar R_CX for CX\n edge CX* -> CY\n}\n";
        match parse_graph(src) {
            Err(Error::Validation(v)) => assert!(v.iter().any(|x| x.rule == "proxy has child")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_line_and_column() {
        let src = "graph \"p\" class=c-dmg {\n  cluster CX { vars X1 }\n  edge CX => CX\n}\n";
        match parse_graph(src) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!((line, column), (3, 12));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_class_and_missing_brace() {
        assert!(matches!(
            parse_graph("graph \"p\" class=dag {\n}\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_graph("graph \"p\" class=admg {\n var X\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn explicit_proxy_name() {
        let src = "graph \"p\" class=m-admg {\n var X\n rvar RX for X proxy Xobs\n}\n";
        let g = parse_graph(src).unwrap();
        assert!(g.contains("Xobs") && g.contains("RX"));
    }

    #[test]
    fn clustering_file() {
        let c = parse_clustering("cluster A { vars a1, a2 }\n# note\ncluster B { vars b }\n").unwrap();
        assert_eq!(c.cluster_of("a2"), Some("A"));
        assert!(parse_clustering("var x\n").is_err());
    }
}
