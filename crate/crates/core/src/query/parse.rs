use crate::lexer::{tokenize, Pos, Tok, Token};

use super::{Literal, QueryAst, QueryError, Selection};

/// Parse one read operation: `query Name { ... }` or an anonymous `{ ... }`.
pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let tokens = tokenize(text).map_err(|e| QueryError::Syntax {
        pos: e.pos,
        message: e.message,
    })?;
    let mut p = Parser { tokens, at: 0 };
    let ast = p.operation()?;
    let t = p.peek();
    match &t.tok {
        Tok::Eof => Ok(ast),
        Tok::Name(n) if n == "fragment" => Err(subset(t.pos, "fragments")),
        _ => Err(QueryError::Syntax {
            pos: t.pos,
            message: format!("expected end of input after the operation, found {}", t.tok),
        }),
    }
}

fn subset(pos: Pos, construct: &str) -> QueryError {
    QueryError::Subset {
        pos,
        construct: construct.to_string(),
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn expected(&self, what: &str) -> QueryError {
        let t = self.peek();
        QueryError::Syntax {
            pos: t.pos,
            message: format!("expected {what}, found {}", t.tok),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), QueryError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.expected(&format!("`{c}`")))
        }
    }

    fn reject_extensions(&self) -> Result<(), QueryError> {
        let t = self.peek();
        match t.tok {
            Tok::Punct('@') => Err(subset(t.pos, "directives")),
            Tok::Punct('$') => Err(subset(t.pos, "variables")),
            Tok::Spread => Err(subset(t.pos, "fragments")),
            _ => Ok(()),
        }
    }

    fn operation(&mut self) -> Result<QueryAst, QueryError> {
        let t = self.peek().clone();
        let mut name = None;
        match &t.tok {
            Tok::Name(kw) if kw == "query" => {
                self.next();
                if let Tok::Name(n) = &self.peek().tok {
                    name = Some(n.clone());
                    self.next();
                }
                if self.peek().tok == Tok::Punct('(') {
                    return Err(subset(self.peek().pos, "variables"));
                }
                self.reject_extensions()?;
            }
            Tok::Name(kw) if kw == "mutation" || kw == "subscription" => {
                return Err(subset(t.pos, &format!("{kw} operations")));
            }
            Tok::Name(kw) if kw == "fragment" => return Err(subset(t.pos, "fragments")),
            Tok::Punct('{') => {}
            _ => return Err(self.expected("`{` or `query`")),
        }
        let selections = self.selection_set()?;
        Ok(QueryAst {
            name,
            pos: t.pos,
            selections,
        })
    }

    fn selection_set(&mut self) -> Result<Vec<Selection>, QueryError> {
        self.expect('{')?;
        let mut out = Vec::new();
        while !self.eat('}') {
            self.reject_extensions()?;
            out.push(self.selection()?);
        }
        if out.is_empty() {
            return Err(QueryError::Syntax {
                pos: self.tokens[self.at - 1].pos,
                message: "empty selection set".into(),
            });
        }
        Ok(out)
    }

    fn selection(&mut self) -> Result<Selection, QueryError> {
        let t = self.peek().clone();
        let Tok::Name(name) = t.tok else {
            return Err(self.expected("a field name"));
        };
        self.next();
        if self.peek().tok == Tok::Punct(':') {
            return Err(subset(t.pos, "aliases"));
        }
        let mut arguments = Vec::new();
        if self.eat('(') {
            while !self.eat(')') {
                let a = self.peek().clone();
                let Tok::Name(arg) = a.tok else {
                    return Err(self.expected("an argument name"));
                };
                self.next();
                self.expect(':')?;
                arguments.push((arg, self.literal()?, a.pos));
            }
            if arguments.is_empty() {
                return Err(self.expected("an argument"));
            }
        }
        self.reject_extensions()?;
        let selections = if self.peek().tok == Tok::Punct('{') {
            self.selection_set()?
        } else {
            Vec::new()
        };
        Ok(Selection {
            name,
            pos: t.pos,
            arguments,
            selections,
        })
    }

    fn literal(&mut self) -> Result<Literal, QueryError> {
        let t = self.peek().clone();
        let lit = match t.tok {
            Tok::Str(s) | Tok::BlockStr(s) => Literal::String(s),
            Tok::Int(i) => Literal::Int(i),
            Tok::Float(x) => Literal::Float(x),
            Tok::Name(n) if n == "true" => Literal::Bool(true),
            Tok::Name(n) if n == "false" => Literal::Bool(false),
            Tok::Name(n) if n == "null" => Literal::Null,
            Tok::Name(n) => Literal::Enum(n),
            Tok::Punct('$') => return Err(subset(t.pos, "variables")),
            Tok::Punct('[') | Tok::Punct('{') => {
                return Err(subset(t.pos, "list and object literals"))
            }
            _ => return Err(self.expected("a literal")),
        };
        self.next();
        Ok(lit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_model_query() {
        let ast = parse_query(
            r#"{ cpsSystemModel(projectId: "p1") { component { identity { name } } } }"#,
        )
        .unwrap();
        assert_eq!(ast.selections.len(), 1);
        let root = &ast.selections[0];
        assert_eq!(root.name, "cpsSystemModel");
        assert_eq!(root.arguments[0].0, "projectId");
        assert_eq!(root.arguments[0].1, Literal::String("p1".into()));
        assert_eq!(root.selections[0].selections[0].selections[0].name, "name");
    }

    #[test]
    fn named_operation() {
        let ast = parse_query("query Names { cpsProjects { id } }").unwrap();
        assert_eq!(ast.name.as_deref(), Some("Names"));
    }

    #[test]
    fn empty_selection_is_a_syntax_error() {
        match parse_query("{ }") {
            Err(QueryError::Syntax { pos, message }) => {
                assert_eq!(pos, Pos { line: 1, col: 3 });
                assert!(message.contains("empty"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_subset_constructs() {
        let cases = [
            ("query Q($p: ID!) { a }", "variables"),
            ("{ a(x: $p) }", "variables"),
            ("{ ...F }", "fragments"),
            ("{ a } fragment F on T { a }", "fragments"),
            ("{ a @include(if: true) }", "directives"),
            ("{ b: a }", "aliases"),
            ("mutation { a }", "mutation operations"),
            ("{ a(x: [1]) }", "list and object literals"),
        ];
        for (src, construct) in cases {
            match parse_query(src) {
                Err(QueryError::Subset { construct: c, .. }) => assert_eq!(c, construct, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn second_operation_is_rejected() {
        assert!(matches!(
            parse_query("{ a } { b }"),
            Err(QueryError::Syntax { .. })
        ));
    }
}
