//! Random forcing fields that are affine in the parameters,
//! `f(t, x, y) = f0(t, x) + sum_n s_n c_n(t, x) y_n`, where every term is a
//! sum of separable products of `exp(a t)`, `sin(b pi x1)` and `sin(b pi x2)`.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// A point of the parameter domain `[0, 1]^r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterPoint(pub Vec<f64>);

impl ParameterPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &ParameterPoint) -> f64 {
        euclidean(&self.0, &other.0)
    }
}

impl From<Vec<f64>> for ParameterPoint {
    fn from(v: Vec<f64>) -> Self {
        ParameterPoint(v)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    /// `exp(rate * t)`
    Exp(f64),
    /// `sin(freq * pi * x1)`
    SinX1(f64),
    /// `sin(freq * pi * x2)`
    SinX2(f64),
}

/// `coeff * prod(factors)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn constant(c: f64) -> Self {
        Term {
            coeff: c,
            factors: Vec::new(),
        }
    }

    /// Combined exponential rate of the time factors.
    pub fn time_rate(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Exp(a) => *a,
                _ => 0.0,
            })
            .sum()
    }

    /// Spatial part, including the coefficient.
    pub fn space(&self, x: [f64; 2]) -> f64 {
        self.factors.iter().fold(self.coeff, |acc, f| match f {
            Factor::Exp(_) => acc,
            Factor::SinX1(b) => acc * (b * PI * x[0]).sin(),
            Factor::SinX2(b) => acc * (b * PI * x[1]).sin(),
        })
    }

    pub fn eval(&self, t: f64, x: [f64; 2]) -> f64 {
        (self.time_rate() * t).exp() * self.space(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Expansion {
    pub terms: Vec<Term>,
}

impl Expansion {
    pub fn new(terms: Vec<Term>) -> Self {
        Expansion { terms }
    }

    pub fn zero() -> Self {
        Expansion::default()
    }

    pub fn eval(&self, t: f64, x: [f64; 2]) -> f64 {
        self.terms.iter().map(|term| term.eval(t, x)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeff == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMode {
    pub scaling: f64,
    pub field: Expansion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineForcing {
    pub base: Expansion,
    pub modes: Vec<AffineMode>,
}

impl AffineForcing {
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn eval(&self, t: f64, x: [f64; 2], y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.modes.len());
        self.base.eval(t, x)
            + self
                .modes
                .iter()
                .zip(y)
                .map(|(m, yn)| m.scaling * m.field.eval(t, x) * yn)
                .sum::<f64>()
    }

    /// Forcing identically zero, with `r` parameters.
    pub fn zero(r: usize) -> Self {
        AffineForcing {
            base: Expansion::zero(),
            modes: (0..r)
                .map(|_| AffineMode {
                    scaling: 1.0,
                    field: Expansion::zero(),
                })
                .collect(),
        }
    }
}

/// `f = 10 + e^t sum_{n=1}^{r} y_n sin(n pi x1)`.
pub fn paper_forcing(r: usize) -> AffineForcing {
    AffineForcing {
        base: Expansion::new(vec![Term::constant(10.0)]),
        modes: (1..=r)
            .map(|n| AffineMode {
                scaling: 1.0,
                field: Expansion::new(vec![Term {
                    coeff: 1.0,
                    factors: vec![Factor::Exp(1.0), Factor::SinX1(n as f64)],
                }]),
            })
            .collect(),
    }
}

/// Squared `L2((0,1)^2)` norm of `g`, by tensor Gauss-Legendre quadrature.
pub fn l2_norm_sq_unit_square(g: impl Fn([f64; 2]) -> f64, points_per_dir: usize) -> f64 {
    let gl = GaussLegendre::new(NonZeroUsize::new(points_per_dir).expect("need at least one point"));
    let pairs: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut acc = 0.0;
    for &(x1, w1) in &pairs {
        for &(x2, w2) in &pairs {
            let v = g([x1, x2]);
            acc += w1 * w2 * v * v;
        }
    }
    acc
}

/// Upper bound on the Lipschitz constant of `y -> f(y)` in
/// `C(0, T; L2(D))`: `(sum_n s_n^2 max_t ||c_n(t)||^2)^(1/2)`, with the
/// maximum taken over `times`.
pub fn lipschitz_bound(forcing: &AffineForcing, times: &[f64]) -> f64 {
    forcing
        .modes
        .iter()
        .map(|m| {
            let sup = times
                .iter()
                .map(|&t| l2_norm_sq_unit_square(|x| m.field.eval(t, x), 48))
                .fold(0.0, f64::max);
            m.scaling * m.scaling * sup
        })
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for factor in &self.factors {
            match factor {
                Factor::Exp(a) => write!(f, " * exp({a} t)")?,
                Factor::SinX1(b) => write!(f, " * sin({b} pi x1)")?,
                Factor::SinX2(b) => write!(f, " * sin({b} pi x2)")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token::Num(s.parse().map_err(|_| format!("bad number `{s}`"))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "()*+-".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> std::result::Result<(), String> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(format!("expected `{c}`"))
        }
    }

    fn expect_ident(&mut self, name: &str) -> std::result::Result<(), String> {
        match self.bump() {
            Some(Token::Ident(s)) if s == name => Ok(()),
            _ => Err(format!("expected `{name}`")),
        }
    }

    /// Optional signed coefficient followed by an optional `*`.
    fn coefficient(&mut self) -> f64 {
        let mut sign = 1.0;
        if self.eat_sym('-') {
            sign = -1.0;
        } else {
            self.eat_sym('+');
        }
        if let Some(Token::Num(v)) = self.peek().cloned() {
            self.pos += 1;
            self.eat_sym('*');
            sign * v
        } else {
            sign
        }
    }

    fn expansion(&mut self) -> std::result::Result<Expansion, String> {
        let mut terms = vec![self.term(1.0)?];
        loop {
            if self.eat_sym('+') {
                terms.push(self.term(1.0)?);
            } else if self.eat_sym('-') {
                terms.push(self.term(-1.0)?);
            } else {
                break;
            }
        }
        Ok(Expansion::new(terms))
    }

    fn term(&mut self, sign: f64) -> std::result::Result<Term, String> {
        let mut term = Term {
            coeff: sign,
            factors: Vec::new(),
        };
        while let Some(Token::Sym(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            if c == '-' {
                term.coeff = -term.coeff;
            }
        }
        loop {
            match self.bump() {
                Some(Token::Num(v)) => term.coeff *= v,
                Some(Token::Ident(name)) if name == "exp" => {
                    self.expect_sym('(')?;
                    let a = self.coefficient();
                    self.expect_ident("t")?;
                    self.expect_sym(')')?;
                    term.factors.push(Factor::Exp(a));
                }
                Some(Token::Ident(name)) if name == "sin" => {
                    self.expect_sym('(')?;
                    let b = self.coefficient();
                    self.expect_ident("pi")?;
                    self.eat_sym('*');
                    let factor = match self.bump() {
                        Some(Token::Ident(v)) if v == "x1" => Factor::SinX1(b),
                        Some(Token::Ident(v)) if v == "x2" => Factor::SinX2(b),
                        _ => return Err("expected `x1` or `x2`".into()),
                    };
                    self.expect_sym(')')?;
                    term.factors.push(factor);
                }
                Some(other) => return Err(format!("unexpected token {other:?}")),
                None => return Err("unexpected end of expression".into()),
            }
            if !self.eat_sym('*') {
                return Ok(term);
            }
        }
    }
}

/// Parses expressions such as `10 + 2.5 * exp(-1 t) * sin(3 pi x1) * sin(pi x2)`.
pub fn parse_expansion(src: &str) -> Result<Expansion> {
    let tokens = tokenize(src).map_err(|m| Error::config("forcing", m))?;
    if tokens.is_empty() {
        return Err(Error::config("forcing", "empty expression"));
    }
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expansion().map_err(|m| Error::config("forcing", format!("{m} in `{src}`")))?;
    if p.pos != p.tokens.len() {
        return Err(Error::config("forcing", format!("trailing input in `{src}`")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn paper_forcing_values() {
        let f = paper_forcing(4);
        for y in [[0.0; 4], [1.0; 4], [0.3, 0.9, 0.1, 0.5]] {
            assert_eq!(f.eval(0.0, [0.0, 0.7], &y), 10.0);
        }
        assert!((f.eval(0.0, [0.5, 0.2], &[1.0; 4]) - 10.0).abs() < 1e-14);
        let e = std::f64::consts::E;
        assert!((f.eval(1.0, [0.5, 0.9], &[1.0, 0.0, 0.0, 0.0]) - (10.0 + e)).abs() < 1e-14);
    }

    #[test]
    fn lipschitz_bounds() {
        let times: Vec<f64> = (0..=10).map(|m| m as f64 * 0.1).collect();
        assert_eq!(lipschitz_bound(&AffineForcing::zero(3), &times), 0.0);

        let e = std::f64::consts::E;
        let single = AffineForcing {
            base: Expansion::zero(),
            modes: vec![AffineMode {
                scaling: 1.0,
                field: Expansion::new(vec![Term {
                    coeff: 1.0,
                    factors: vec![Factor::Exp(1.0), Factor::SinX1(1.0)],
                }]),
            }],
        };
        assert!((lipschitz_bound(&single, &times) - e / 2f64.sqrt()).abs() < 1e-12);
        assert!((lipschitz_bound(&paper_forcing(4), &times) - e * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn parses_forcing_expressions() {
        let e = parse_expansion("10 + exp(t) * sin(1 pi x1) - 0.5*exp(-2*t)*sin(3*pi*x2)").unwrap();
        assert_eq!(e.terms.len(), 3);
        assert_eq!(e.terms[0], Term::constant(10.0));
        assert_eq!(e.terms[1].factors, vec![Factor::Exp(1.0), Factor::SinX1(1.0)]);
        assert_eq!(e.terms[2].coeff, -0.5);
        assert_eq!(e.terms[2].factors, vec![Factor::Exp(-2.0), Factor::SinX2(3.0)]);

        let again = parse_expansion(&e.to_string()).unwrap();
        assert_eq!(again, e);

        assert!(parse_expansion("").is_err());
        assert!(parse_expansion("cos(pi x1)").is_err());
        assert!(parse_expansion("sin(pi x3)").is_err());
        assert!(parse_expansion("1 +").is_err());
    }

    proptest! {
        #[test]
        fn forcing_is_affine(
            y in proptest::collection::vec(0.0..1.0f64, 4),
            z in proptest::collection::vec(0.0..1.0f64, 4),
            alpha in 0.0..1.0f64,
            t in 0.0..1.0f64,
            x1 in 0.0..1.0f64,
            x2 in 0.0..1.0f64,
        ) {
            let f = paper_forcing(4);
            let mix: Vec<f64> = y.iter().zip(&z).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let lhs = f.eval(t, [x1, x2], &mix);
            let rhs = alpha * f.eval(t, [x1, x2], &y) + (1.0 - alpha) * f.eval(t, [x1, x2], &z);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn lipschitz_bound_holds(
            y in proptest::collection::vec(0.0..1.0f64, 4),
            z in proptest::collection::vec(0.0..1.0f64, 4),
        ) {
            let f = paper_forcing(4);
            let times: Vec<f64> = (0..=10).map(|m| m as f64 * 0.1).collect();
            let bound = lipschitz_bound(&f, &times);
            let sup = times
                .iter()
                .map(|&t| l2_norm_sq_unit_square(|x| f.eval(t, x, &y) - f.eval(t, x, &z), 48).sqrt())
                .fold(0.0, f64::max);
            prop_assert!(sup <= bound * euclidean(&y, &z) + 1e-12);
        }
    }
}
