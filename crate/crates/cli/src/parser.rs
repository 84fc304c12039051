//! Tiny expression grammar.
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' INT)?
//! atom   := INT | '-' INT | 'g' | 't' ('^' exp)? | NAME | FUNC '(' expr ')' | '(' expr ')'
//! exp    := INT | '-' INT | '(' '-'? INT ('/' INT)? ')'
//! ```
//!
//! Names are `w`, `s`, `x` and the polynomial variable `W`; functions are
//! `inv`, `frob` and `proot`. Token positions are 1-based.

use vallab::Exp;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("integer {n}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Name {
    W,
    S,
    X,
    /// The polynomial variable `W`.
    Var,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Inv,
    Frob,
    Proot,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    Int(i64),
    Gen,
    TPow(Exp),
    Name(Name),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u64),
    Call(Func, Box<Expr>),
}

/// A parsed node with the position of its first token.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub pos: usize,
    pub kind: Kind,
}

fn parse_err(token: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        token,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> CliResult<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '/' => Tok::Slash,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            d if d.is_ascii_digit() => {
                let start = i;
                while i + 1 < chars.len() && chars[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..=i].iter().collect();
                let n = text
                    .parse()
                    .map_err(|_| parse_err(out.len() + 1, format!("integer {text} too large")))?;
                Tok::Int(n)
            }
            a if a.is_ascii_alphabetic() => {
                let start = i;
                while i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric() {
                    i += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(parse_err(out.len() + 1, format!("unexpected character '{other}'"))),
        };
        out.push(tok);
        i += 1;
    }
    out.push(Tok::Eof);
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at]
    }

    fn pos(&self) -> usize {
        self.at + 1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].clone();
        if t != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected<T>(&self, wanted: &str) -> CliResult<T> {
        Err(parse_err(
            self.pos(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        ))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> CliResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn int(&mut self) -> CliResult<i64> {
        match self.peek() {
            Tok::Int(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => self.unexpected("an integer"),
        }
    }

    fn signed_int(&mut self) -> CliResult<i64> {
        if *self.peek() == Tok::Minus {
            self.bump();
            Ok(-self.int()?)
        } else {
            self.int()
        }
    }

    fn expr(&mut self) -> CliResult<Expr> {
        let mut lhs = self.term()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.term()?;
            lhs = Expr {
                pos: lhs.pos,
                kind: Kind::Add(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> CliResult<Expr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr {
                pos: lhs.pos,
                kind: Kind::Mul(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> CliResult<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let n = self.int()?;
        Ok(Expr {
            pos: base.pos,
            kind: Kind::Pow(Box::new(base), n as u64),
        })
    }

    fn exponent(&mut self) -> CliResult<Exp> {
        if *self.peek() != Tok::LParen {
            return Ok(Exp::from_int(self.signed_int()?));
        }
        self.bump();
        let num = self.signed_int()?;
        let mut den = 1;
        if *self.peek() == Tok::Slash {
            self.bump();
            let at = self.pos();
            den = self.int()?;
            if den == 0 {
                return Err(parse_err(at, "zero denominator"));
            }
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(Exp::new(num, den))
    }

    fn atom(&mut self) -> CliResult<Expr> {
        let pos = self.pos();
        let kind = match self.bump() {
            Tok::Int(n) => Kind::Int(n),
            Tok::Minus => Kind::Int(-self.int()?),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                return Ok(inner);
            }
            Tok::Ident(id) => match id.as_str() {
                "g" => Kind::Gen,
                "t" => {
                    if *self.peek() == Tok::Caret {
                        self.bump();
                        Kind::TPow(self.exponent()?)
                    } else {
                        Kind::TPow(Exp::one())
                    }
                }
                "w" => Kind::Name(Name::W),
                "s" => Kind::Name(Name::S),
                "x" => Kind::Name(Name::X),
                "W" => Kind::Name(Name::Var),
                "inv" | "frob" | "proot" => {
                    let f = match id.as_str() {
                        "inv" => Func::Inv,
                        "frob" => Func::Frob,
                        _ => Func::Proot,
                    };
                    self.expect(Tok::LParen, "'('")?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    Kind::Call(f, Box::new(arg))
                }
                _ => return Err(parse_err(pos, format!("unknown name '{id}'"))),
            },
            other => {
                return Err(parse_err(
                    pos,
                    format!("expected an operand, found {}", other.describe()),
                ))
            }
        };
        Ok(Expr { pos, kind })
    }
}

pub fn parse(src: &str) -> CliResult<Expr> {
    let mut p = Parser {
        toks: tokenize(src)?,
        at: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.unexpected("'+', '*' or end of input");
    }
    Ok(e)
}
