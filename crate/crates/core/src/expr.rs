//! A small infix language for time-dependent rates, e.g. `2*(sin(t) + 1)`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?          right-associative
//! atom  := number | 't' | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! `log` is the natural logarithm.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain {
        subexpr: String,
        reason: &'static str,
    },
    #[error("non-finite value {value} from `{subexpr}`")]
    NonFinite { subexpr: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Tanh,
    Cosh,
    Sinh,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Tanh,
        Func::Cosh,
        Func::Sinh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Tanh => "tanh",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

const ATOM_PRECEDENCE: u8 = 5;
const NEG_PRECEDENCE: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Whether the expression is free of `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Time => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if v.is_sign_negative() => NEG_PRECEDENCE,
            Expr::Num(_) | Expr::Time | Expr::Call(..) => ATOM_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        x / y
                    }
                    BinOp::Pow => {
                        let v = x.powf(y);
                        if v.is_nan() {
                            return Err(self.domain("negative base with non-integer exponent"));
                        }
                        v
                    }
                }
            }
            Expr::Call(f, arg) => {
                let x = arg.eval(t)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Tanh => x.tanh(),
                    Func::Cosh => x.cosh(),
                    Func::Sinh => x.sinh(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain("logarithm of a non-positive number"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain("square root of a negative number"));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite {
                subexpr: self.to_string(),
                value: v,
            })
        }
    }

    fn domain(&self, reason: &'static str) -> EvalError {
        EvalError::Domain {
            subexpr: self.to_string(),
            reason,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Time => f.write_str("t"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, e.precedence() < NEG_PRECEDENCE)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (a.precedence() <= p, b.precedence() < NEG_PRECEDENCE)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                write_child(f, a, left_paren)?;
                f.write_str(op.symbol())?;
                write_child(f, b, right_paren)
            }
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let e = parser.expr(0)?;
    match parser.peek() {
        None => Ok(e),
        Some(tok) => Err(ParseError::Syntax {
            offset: tok.offset,
            message: format!("unexpected {}", tok.kind.describe()),
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                tokens.push(Token {
                    kind: TokenKind::Op(c as char),
                    offset: start,
                });
                i += 1;
            }
            b'(' => {
                tokens.push(Token {
                    kind: TokenKind::LParen,
                    offset: start,
                });
                i += 1;
            }
            b')' => {
                tokens.push(Token {
                    kind: TokenKind::RParen,
                    offset: start,
                });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lit}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("number `{lit}` is out of range"),
                    });
                }
                tokens.push(Token {
                    kind: TokenKind::Num(value),
                    offset: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(tokens)
}

/// Nesting bound; keeps pathological inputs from exhausting the stack.
const MAX_DEPTH: usize = 200;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn check_depth(&self, depth: usize) -> Result<(), ParseError> {
        if depth > MAX_DEPTH {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: format!("expression nested deeper than {MAX_DEPTH} levels"),
            })
        } else {
            Ok(())
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Expr, ParseError> {
        self.check_depth(depth)?;
        let mut lhs = self.term(depth)?;
        while let Some(c @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term(depth)?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut lhs = self.unary(depth + 1)?;
        while let Some(c @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary(depth + 1)?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        self.check_depth(depth)?;
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Expr::neg(self.unary(depth + 1)?));
        }
        self.power(depth)
    }

    fn power(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let base = self.atom(depth)?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary(depth + 1)?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let Some(tok) = self.next() else {
            return Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".to_string(),
            });
        };
        match tok.kind {
            TokenKind::Num(v) => Ok(Expr::Num(v)),
            TokenKind::Ident(name) if name == "t" => Ok(Expr::Time),
            TokenKind::Ident(name) => {
                let Some(func) = Func::from_name(&name) else {
                    return Err(ParseError::UnknownIdentifier { offset, name });
                };
                self.expect_lparen(&name)?;
                let arg = self.expr(depth + 1)?;
                self.expect_rparen()?;
                Ok(Expr::call(func, arg))
            }
            TokenKind::LParen => {
                let e = self.expr(depth + 1)?;
                self.expect_rparen()?;
                Ok(e)
            }
            other => Err(ParseError::Syntax {
                offset,
                message: format!("expected a value, found {}", other.describe()),
            }),
        }
    }

    fn expect_lparen(&mut self, func: &str) -> Result<(), ParseError> {
        let offset = self.offset();
        match self.next() {
            Some(Token {
                kind: TokenKind::LParen,
                ..
            }) => Ok(()),
            _ => Err(ParseError::Syntax {
                offset,
                message: format!("expected `(` after function `{func}`"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        let offset = self.offset();
        match self.next() {
            Some(Token {
                kind: TokenKind::RParen,
                ..
            }) => Ok(()),
            _ => Err(ParseError::Syntax {
                offset,
                message: "expected `)`".to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar_examples() {
        let e = parse("2*(sin(t)+1)").unwrap();
        let expected = Expr::binary(
            BinOp::Mul,
            Expr::num(2.0),
            Expr::binary(
                BinOp::Add,
                Expr::call(Func::Sin, Expr::Time),
                Expr::num(1.0),
            ),
        );
        assert_eq!(e, expected);

        assert_eq!(
            parse("-tanh(t)").unwrap(),
            Expr::neg(Expr::call(Func::Tanh, Expr::Time))
        );
    }

    #[test]
    fn syntax_error_offset() {
        let err = parse("1 + * 2").unwrap_err();
        assert!(
            matches!(err, ParseError::Syntax { offset: 4, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_identifier_is_named() {
        let err = parse("2*foo(t)").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownIdentifier {
                offset: 2,
                name: "foo".into()
            }
        );
        assert!(err.to_string().contains("foo"));
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus
        assert_eq!(parse("-2^2").unwrap().eval(0.0).unwrap(), -4.0);
        // right-associative power
        assert_eq!(parse("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
        assert_eq!(parse("2^-1").unwrap().eval(0.0).unwrap(), 0.5);
        assert_eq!(parse("8/4/2").unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(parse("1-2-3").unwrap().eval(0.0).unwrap(), -4.0);
        assert_eq!(parse("1+2*3").unwrap().eval(0.0).unwrap(), 7.0);
        assert_eq!(parse("(1+2)*3").unwrap().eval(0.0).unwrap(), 9.0);
        assert_eq!(parse("1.5e1 + 2E-1").unwrap().eval(0.0).unwrap(), 15.2);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(parse("2*(sin(t)+1)").unwrap().eval(0.0).unwrap(), 2.0);
        assert_eq!(parse("-tanh(t)").unwrap().eval(0.0).unwrap(), 0.0);
        let err = parse("sqrt(t-1)").unwrap().eval(0.0).unwrap_err();
        match err {
            EvalError::Domain { subexpr, .. } => assert_eq!(subexpr, "sqrt(t - 1)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(
            parse("1/(t-1)").unwrap().eval(1.0),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            parse("log(t)").unwrap().eval(0.0),
            Err(EvalError::Domain { .. })
        ));
        assert!(matches!(
            parse("exp(t)").unwrap().eval(1000.0),
            Err(EvalError::NonFinite { .. })
        ));
        assert!(matches!(
            parse("(0-2)^0.5").unwrap().eval(0.0),
            Err(EvalError::Domain { .. })
        ));
    }

    #[test]
    fn pretty_print_minimal_parens() {
        for (src, printed) in [
            ("2*(sin(t)+1)", "2*(sin(t) + 1)"),
            ("-tanh(t)", "-tanh(t)"),
            ("(-2)^2", "(-2)^2"),
            ("-(2^2)", "-2^2"),
            ("1-(2-3)", "1 - (2 - 3)"),
            ("(1-2)-3", "1 - 2 - 3"),
            ("2^(3^2)", "2^3^2"),
            ("(2^3)^2", "(2^3)^2"),
            ("a", ""),
        ] {
            if printed.is_empty() {
                assert!(parse(src).is_err());
                continue;
            }
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }

    #[test]
    fn deep_nesting_is_an_error_not_a_crash() {
        let deep = "(".repeat(5000) + "1" + &")".repeat(5000);
        assert!(matches!(parse(&deep), Err(ParseError::Syntax { .. })));
        let negs = "-".repeat(5000) + "1";
        assert!(parse(&negs).is_err());
    }

    #[test]
    fn trailing_and_missing_tokens() {
        assert!(matches!(
            parse(""),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse("sin t"),
            Err(ParseError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse("(1+2"),
            Err(ParseError::Syntax { offset: 4, .. })
        ));
        assert!(matches!(
            parse("1 2"),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(matches!(
            parse("1 $ 2"),
            Err(ParseError::Syntax { offset: 2, .. })
        ));
        assert!(parse("1e999").is_err());
    }
}
