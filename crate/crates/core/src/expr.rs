//! Coefficient expressions for time-dependent Hamiltonian terms.
//!
//! Grammar (highest precedence first):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right associative
//! primary := number | 't' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp' | 'sqrt'
//! ```
//!
//! `-2^2` is `-(2^2)`, `2^3^2` is `2^(3^2)` and `2^-1` is `2^(-1)`.
//! Numbers are decimal literals with an optional exponent (`1.5e-3`).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at byte {offset}: expected {expected}, found {found}")]
    Parse {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    Name { offset: usize, name: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation failed at t = {t}: {reason}")]
pub struct EvalError {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Time,
    Pi,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Time => t,
            Expr::Pi => std::f64::consts::PI,
            Expr::Neg(e) => -e.eval(t)?,
            Expr::Call(f, e) => f.apply(e.eval(t)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError {
                                t,
                                reason: "division by zero".into(),
                            });
                        }
                        x / y
                    }
                    BinOp::Pow => x.powf(y),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError {
                t,
                reason: format!("non-finite value in `{self}`"),
            })
        }
    }

    pub fn depends_on_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Pi => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on_time(),
            Expr::Binary(_, a, b) => a.depends_on_time() || b.depends_on_time(),
        }
    }
}

// Fully parenthesised, so printing then parsing gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Time => f.write_str("t"),
            Expr::Pi => f.write_str("pi"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Binary(op, a, b) => {
                let sym = match op {
                    BinOp::Add => '+',
                    BinOp::Sub => '-',
                    BinOp::Mul => '*',
                    BinOp::Div => '/',
                    BinOp::Pow => '^',
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

/// A parsed coefficient function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffFn {
    source: String,
    ast: Expr,
}

impl CoeffFn {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        self.ast.eval(t)
    }

    /// Value of a time-independent expression, `None` if it depends on `t`
    /// or fails to evaluate.
    pub fn constant_value(&self) -> Option<f64> {
        if self.ast.depends_on_time() {
            None
        } else {
            self.ast.eval(0.0).ok()
        }
    }
}

impl fmt::Display for CoeffFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

impl std::str::FromStr for CoeffFn {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

pub fn parse(source: &str) -> Result<CoeffFn, ExprError> {
    let tokens = lex(source)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        src_len: source.len(),
    };
    let ast = p.expr()?;
    if let Some(tok) = p.peek() {
        return Err(ExprError::Parse {
            offset: tok.offset,
            expected: "operator or end of input".into(),
            found: tok.kind.describe(),
        });
    }
    Ok(CoeffFn {
        source: source.to_owned(),
        ast,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Num(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Caret => "`^`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        let single = match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            out.push(Token { kind, offset: start });
            i += 1;
        } else if b.is_ascii_digit() || b == b'.' {
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
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ExprError::Parse {
                offset: start,
                expected: "number".into(),
                found: format!("`{text}`"),
            })?;
            out.push(Token {
                kind: TokenKind::Num(value),
                offset: start,
            });
        } else if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Ident(src[start..i].to_owned()),
                offset: start,
            });
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ExprError::Parse {
                offset: start,
                expected: "expression".into(),
                found: format!("`{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    src_len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn error(&self, expected: &str) -> ExprError {
        match self.peek() {
            Some(tok) => ExprError::Parse {
                offset: tok.offset,
                expected: expected.into(),
                found: tok.kind.describe(),
            },
            None => ExprError::Parse {
                offset: self.src_len,
                expected: expected.into(),
                found: "end of input".into(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<(), ExprError> {
        if self.peek_kind() == Some(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_kind() == Some(&TokenKind::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek_kind() == Some(&TokenKind::Caret) {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("number, `t`, `pi`, function or `(`"));
        };
        match tok.kind {
            TokenKind::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "t" => return Ok(Expr::Time),
                    "pi" => return Ok(Expr::Pi),
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "exp" => Func::Exp,
                    "sqrt" => Func::Sqrt,
                    _ => {
                        return Err(ExprError::Name {
                            offset: tok.offset,
                            name,
                        })
                    }
                };
                self.expect(TokenKind::LParen, &format!("`(` after `{name}`"))?;
                let arg = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.error("number, `t`, `pi`, function or `(`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn ev(src: &str, t: f64) -> f64 {
        parse(src).unwrap().eval(t).unwrap()
    }

    #[test]
    fn basic_values() {
        assert_eq!(ev("0.5*cos(2*t)", 0.0), 0.5);
        assert!((ev("sin(2*t)", PI / 4.0) - 1.0).abs() < 1e-15);
        assert_eq!(ev("3", 12.5), 3.0);
        assert_eq!(ev("exp(0)", 0.0), 1.0);
        assert!((ev("2*pi", 0.0) - 2.0 * PI).abs() < 1e-15);
        assert_eq!(ev("1.5e-3*2", 0.0), 3e-3);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("5-3-1", 0.0), 1.0);
        assert_eq!(ev("1+2*3", 0.0), 7.0);
        assert_eq!(ev("-t*2", 3.0), -6.0);
        assert_eq!(ev("--t", 3.0), 3.0);
    }

    #[test]
    fn double_star_is_rejected() {
        match parse("2**t") {
            Err(ExprError::Parse { offset, found, .. }) => {
                assert_eq!(offset, 2);
                assert_eq!(found, "`*`");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_name() {
        assert_eq!(
            parse("1 + omega*t"),
            Err(ExprError::Name {
                offset: 4,
                name: "omega".into()
            })
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse("sin(t").unwrap_err();
        assert!(matches!(err, ExprError::Parse { offset: 5, .. }));
        assert!(err.to_string().contains("`)`"));
        assert!(matches!(parse(""), Err(ExprError::Parse { offset: 0, .. })));
        assert!(matches!(parse("3 4"), Err(ExprError::Parse { offset: 2, .. })));
        assert!(matches!(parse("sin t"), Err(ExprError::Parse { offset: 4, .. })));
        assert!(matches!(parse("1 $ 2"), Err(ExprError::Parse { offset: 2, .. })));
    }

    #[test]
    fn eval_errors() {
        let f = parse("1/t").unwrap();
        let err = f.eval(0.0).unwrap_err();
        assert_eq!(err.t, 0.0);
        assert!(parse("sqrt(0-1)").unwrap().eval(0.0).is_err());
        assert!(parse("exp(1000)").unwrap().eval(0.0).is_err());
    }

    #[test]
    fn constant_detection() {
        assert_eq!(parse("2*pi").unwrap().constant_value(), Some(2.0 * PI));
        assert_eq!(parse("0").unwrap().constant_value(), Some(0.0));
        assert_eq!(parse("cos(t)").unwrap().constant_value(), None);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0f64..100.0).prop_map(Expr::Num),
            Just(Expr::Time),
            Just(Expr::Pi),
        ];
        leaf.prop_recursive(5, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Sqrt)
                    ],
                    inner
                )
                    .prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(e in arb_expr(), ts in prop::collection::vec(-3.0f64..3.0, 10)) {
            let rendered = e.to_string();
            let reparsed = parse(&rendered).expect("rendered expression must parse");
            prop_assert_eq!(reparsed.ast(), &e);
            for t in ts {
                match (e.eval(t), reparsed.eval(t)) {
                    (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0)),
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false, "disagreement {:?} vs {:?}", a, b),
                }
            }
        }

        #[test]
        fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
            let s = String::from_utf8_lossy(&bytes);
            let _ = parse(&s);
        }

        #[test]
        fn parser_never_panics_on_grammar_soup(s in "[0-9t+*/^() .eE-]{0,40}|(sin|cos|pi|sqrt|exp|[(])*") {
            let _ = parse(&s);
        }
    }
}
