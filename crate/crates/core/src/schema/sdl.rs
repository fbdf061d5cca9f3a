//! Parser for the schema-definition subset: `schema`, `type`, `input` and
//! `enum` declarations with list/non-null wrappers, field arguments,
//! comments and descriptions.

use std::collections::BTreeMap;

use super::{EnumDef, FieldDef, ObjectTypeDef, SchemaError, SchemaRoots, TypeRef};
use crate::lexer::{tokenize, Pos, Tok, Token};

/// Raw declarations in source order, before entity derivation.
#[derive(Debug, Default)]
pub(crate) struct Declarations {
    pub roots: Option<SchemaRoots>,
    pub objects: BTreeMap<String, ObjectTypeDef>,
    pub inputs: BTreeMap<String, ObjectTypeDef>,
    pub enums: BTreeMap<String, EnumDef>,
}

const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "interface",
    "union",
    "scalar",
    "directive",
    "extend",
    "fragment",
    "query",
    "mutation",
    "subscription",
];

pub(crate) fn parse(src: &str) -> Result<Declarations, SchemaError> {
    let tokens = tokenize(src).map_err(|e| SchemaError::Syntax {
        pos: e.pos,
        message: e.message,
    })?;
    let mut p = Parser { tokens, at: 0 };
    let mut decls = Declarations::default();
    let mut seen: BTreeMap<String, Pos> = BTreeMap::new();

    loop {
        let description = p.description();
        let tok = p.peek().clone();
        match &tok.tok {
            Tok::Eof => {
                if description.is_some() {
                    return Err(p.expected("a declaration after description"));
                }
                return Ok(decls);
            }
            Tok::Name(kw) if kw == "schema" => {
                p.next();
                if decls.roots.is_some() {
                    return Err(SchemaError::Syntax {
                        pos: tok.pos,
                        message: "duplicate `schema` block".into(),
                    });
                }
                decls.roots = Some(p.schema_block()?);
            }
            Tok::Name(kw) if kw == "type" || kw == "input" || kw == "enum" => {
                let kw = kw.clone();
                p.next();
                let (name, name_pos) = p.name()?;
                if let Some(first) = seen.get(&name) {
                    return Err(SchemaError::DuplicateType {
                        name,
                        pos: name_pos,
                        first: *first,
                    });
                }
                seen.insert(name.clone(), name_pos);
                p.reject_unsupported_suffix()?;
                match kw.as_str() {
                    "enum" => {
                        let values = p.enum_body()?;
                        decls.enums.insert(
                            name.clone(),
                            EnumDef {
                                name,
                                description,
                                values,
                            },
                        );
                    }
                    _ => {
                        let fields = p.fields_body(kw == "type")?;
                        let def = ObjectTypeDef {
                            name: name.clone(),
                            description,
                            fields,
                        };
                        if kw == "type" {
                            decls.objects.insert(name, def);
                        } else {
                            decls.inputs.insert(name, def);
                        }
                    }
                }
            }
            Tok::Name(kw) if UNSUPPORTED_KEYWORDS.contains(&kw.as_str()) => {
                return Err(SchemaError::Unsupported {
                    pos: tok.pos,
                    construct: format!("`{kw}` declarations"),
                });
            }
            _ => return Err(p.expected("`schema`, `type`, `input` or `enum`")),
        }
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

    fn expected(&self, what: &str) -> SchemaError {
        let t = self.peek();
        SchemaError::Syntax {
            pos: t.pos,
            message: format!("expected {what}, found {}", t.tok),
        }
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if self.peek().tok == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> Result<Pos, SchemaError> {
        let pos = self.peek().pos;
        if self.eat_punct(c) {
            Ok(pos)
        } else {
            Err(self.expected(&format!("`{c}`")))
        }
    }

    fn name(&mut self) -> Result<(String, Pos), SchemaError> {
        match self.peek().tok.clone() {
            Tok::Name(n) => {
                let pos = self.next().pos;
                Ok((n, pos))
            }
            _ => Err(self.expected("a name")),
        }
    }

    fn description(&mut self) -> Option<String> {
        match self.peek().tok.clone() {
            Tok::Str(s) | Tok::BlockStr(s) => {
                self.next();
                Some(s.trim().to_string())
            }
            _ => None,
        }
    }

    /// After a type name: `implements` or a directive.
    fn reject_unsupported_suffix(&self) -> Result<(), SchemaError> {
        let t = self.peek();
        match &t.tok {
            Tok::Name(n) if n == "implements" => Err(SchemaError::Unsupported {
                pos: t.pos,
                construct: "`implements` clauses".into(),
            }),
            _ => self.reject_directive(),
        }
    }

    fn reject_directive(&self) -> Result<(), SchemaError> {
        let t = self.peek();
        match &t.tok {
            Tok::Punct('@') => Err(SchemaError::Unsupported {
                pos: t.pos,
                construct: "directives".into(),
            }),
            _ => Ok(()),
        }
    }

    fn schema_block(&mut self) -> Result<SchemaRoots, SchemaError> {
        self.expect_punct('{')?;
        let mut roots = SchemaRoots::default();
        let mut any = false;
        while !self.eat_punct('}') {
            let (op, pos) = self.name()?;
            self.expect_punct(':')?;
            let (ty, _) = self.name()?;
            let slot = match op.as_str() {
                "query" => &mut roots.query,
                "mutation" => &mut roots.mutation,
                "subscription" => {
                    return Err(SchemaError::Unsupported {
                        pos,
                        construct: "subscription roots".into(),
                    })
                }
                _ => {
                    return Err(SchemaError::Syntax {
                        pos,
                        message: format!("expected `query` or `mutation`, found name `{op}`"),
                    })
                }
            };
            if slot.replace(ty).is_some() {
                return Err(SchemaError::Syntax {
                    pos,
                    message: format!("duplicate `{op}` root"),
                });
            }
            any = true;
        }
        if !any {
            return Err(self.expected("a root operation type"));
        }
        Ok(roots)
    }

    fn enum_body(&mut self) -> Result<Vec<String>, SchemaError> {
        self.expect_punct('{')?;
        let mut values: Vec<String> = Vec::new();
        loop {
            self.description();
            if self.eat_punct('}') {
                break;
            }
            let (v, pos) = self.name()?;
            if matches!(v.as_str(), "true" | "false" | "null") {
                return Err(SchemaError::Syntax {
                    pos,
                    message: format!("`{v}` is not a valid enum value"),
                });
            }
            if values.contains(&v) {
                return Err(SchemaError::Syntax {
                    pos,
                    message: format!("duplicate enum value `{v}`"),
                });
            }
            self.reject_directive()?;
            values.push(v);
        }
        if values.is_empty() {
            return Err(self.expected("at least one enum value"));
        }
        Ok(values)
    }

    fn fields_body(&mut self, allow_args: bool) -> Result<Vec<FieldDef>, SchemaError> {
        self.expect_punct('{')?;
        let mut fields = Vec::new();
        loop {
            let description = self.description();
            if self.eat_punct('}') {
                break;
            }
            let (name, _) = self.name()?;
            let mut arguments = Vec::new();
            if self.peek().tok == Tok::Punct('(') {
                if !allow_args {
                    return Err(self.expected("`:`"));
                }
                self.next();
                while !self.eat_punct(')') {
                    let arg_desc = self.description();
                    let (arg, _) = self.name()?;
                    self.expect_punct(':')?;
                    let ty = self.type_ref()?;
                    self.reject_default()?;
                    arguments.push(FieldDef {
                        name: arg,
                        description: arg_desc,
                        ty,
                        arguments: Vec::new(),
                    });
                }
                if arguments.is_empty() {
                    return Err(self.expected("an argument"));
                }
            }
            self.expect_punct(':')?;
            let ty = self.type_ref()?;
            self.reject_default()?;
            self.reject_directive()?;
            fields.push(FieldDef {
                name,
                description,
                ty,
                arguments,
            });
        }
        if fields.is_empty() {
            return Err(self.expected("at least one field"));
        }
        Ok(fields)
    }

    fn reject_default(&self) -> Result<(), SchemaError> {
        let t = self.peek();
        if t.tok == Tok::Punct('=') {
            return Err(SchemaError::Unsupported {
                pos: t.pos,
                construct: "default values".into(),
            });
        }
        Ok(())
    }

    fn type_ref(&mut self) -> Result<TypeRef, SchemaError> {
        let inner = if self.eat_punct('[') {
            let item = self.type_ref()?;
            self.expect_punct(']')?;
            TypeRef::List(Box::new(item))
        } else {
            TypeRef::Named(self.name()?.0)
        };
        Ok(if self.eat_punct('!') {
            TypeRef::NonNull(Box::new(inner))
        } else {
            inner
        })
    }
}
