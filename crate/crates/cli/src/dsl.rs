//! Text form of sequence specs.
//!
//! ```text
//! spec     := call
//! call     := name "(" [arg ("," arg)*] ")"
//! name     := const | pow | geom | linear | neg | square | affine | interleave | runlen | prefix
//! arg      := rational | spec
//! rational := ["-"] digits ["/" digits]
//! ```

use aar_core::num::{render_rational, Rational};
use aar_core::seq::{Generator, RunMultiplicity, RunRule, RunValue, SequenceSpec};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at byte {offset}: expected {expected}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
}

const NAMES: [&str; 10] = ["const", "pow", "geom", "linear", "neg", "square", "affine", "interleave", "runlen", "prefix"];

enum Arg {
    Num(Rational, usize),
    Spec(SequenceSpec, usize),
}

impl Arg {
    fn offset(&self) -> usize {
        match self {
            Arg::Num(_, o) | Arg::Spec(_, o) => *o,
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, expected: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { offset, expected: expected.into() })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(self.pos, format!("`{c}`"))
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        let len = self.src[start..].find(|c: char| !f(c)).unwrap_or(self.src.len() - start);
        self.pos += len;
        &self.src[start..start + len]
    }

    fn digits(&mut self) -> Result<BigInt, ParseError> {
        let at = self.pos;
        let d = self.take_while(|c| c.is_ascii_digit());
        if d.is_empty() {
            return self.err(at, "digits");
        }
        Ok(d.parse().expect("ascii digits"))
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        self.skip_ws();
        let negative = self.src[self.pos..].starts_with('-');
        if negative {
            self.pos += 1;
        }
        let p = self.digits()?;
        let p = if negative { -p } else { p };
        if self.peek() != Some('/') {
            return Ok(Rational::from_integer(p));
        }
        self.pos += 1;
        self.skip_ws();
        let at = self.pos;
        let q = self.digits()?;
        if !q.is_positive() {
            return self.err(at, "a positive denominator");
        }
        Ok(Rational::new(p, q))
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        match self.peek() {
            Some(c) if c == '-' || c.is_ascii_digit() => {
                let at = self.pos;
                Ok(Arg::Num(self.rational()?, at))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                Ok(Arg::Spec(self.call()?, at))
            }
            _ => self.err(self.pos, "a number or a sequence"),
        }
    }

    fn call(&mut self) -> Result<SequenceSpec, ParseError> {
        self.skip_ws();
        let at = self.pos;
        let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if !NAMES.contains(&name) {
            return self.err(at, format!("one of {}", NAMES.join(", ")));
        }
        self.eat('(')?;
        let mut args = Vec::new();
        if self.peek() == Some(')') {
            self.pos += 1;
        } else {
            loop {
                args.push(self.arg()?);
                match self.peek() {
                    Some(',') => self.pos += 1,
                    Some(')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.err(self.pos, "`,` or `)`"),
                }
            }
        }
        build(name, args, at)
    }
}

fn build(name: &str, args: Vec<Arg>, at: usize) -> Result<SequenceSpec, ParseError> {
    let fail = |offset: usize, expected: String| Err(ParseError { offset, expected });
    let arity = |shape: &str| ParseError { offset: at, expected: format!("{name}({shape})") };
    let small = |r: &Rational, offset: usize| -> Result<u32, ParseError> {
        if r.is_integer() {
            if let Some(k) = r.to_integer().to_u32() {
                return Ok(k);
            }
        }
        Err(ParseError { offset, expected: "a small nonnegative integer".into() })
    };
    let invalid = |e: aar_core::seq::SeqError| ParseError { offset: at, expected: format!("a valid {name} ({e})") };
    let mut it = args.into_iter();
    let spec = match (name, it.len()) {
        ("const", 1) => match it.next() {
            Some(Arg::Num(v, _)) => SequenceSpec::constant(v),
            _ => return Err(arity("number")),
        },
        ("pow", 1) => match it.next() {
            Some(Arg::Num(k, o)) => SequenceSpec::power(small(&k, o)?).map_err(invalid)?,
            _ => return Err(arity("positive integer")),
        },
        ("geom", 1) => match it.next() {
            Some(Arg::Num(d, _)) => SequenceSpec::geometric(d).map_err(invalid)?,
            _ => return Err(arity("number > 1")),
        },
        ("linear", 0) => SequenceSpec::linear(),
        ("neg" | "square", 1) => match it.next() {
            Some(Arg::Spec(s, _)) if name == "neg" => SequenceSpec::negate(s),
            Some(Arg::Spec(s, _)) => SequenceSpec::square(s),
            _ => return Err(arity("sequence")),
        },
        ("affine", 3) => match (it.next(), it.next(), it.next()) {
            (Some(Arg::Spec(s, _)), Some(Arg::Num(a, _)), Some(Arg::Num(b, _))) => SequenceSpec::affine(s, a, b),
            _ => return Err(arity("sequence, scale, shift")),
        },
        ("interleave", 2) => match (it.next(), it.next()) {
            (Some(Arg::Spec(a, _)), Some(Arg::Spec(b, _))) => SequenceSpec::interleave(a, b),
            _ => return Err(arity("sequence, sequence")),
        },
        ("runlen", 2) => match (it.next(), it.next()) {
            (Some(Arg::Num(v, vo)), Some(Arg::Num(m, mo))) => {
                let value = RunValue::from_code(small(&v, vo)?);
                let multiplicity = RunMultiplicity::from_code(small(&m, mo)?);
                match (value, multiplicity) {
                    (Some(value), Some(multiplicity)) => SequenceSpec::run_length(RunRule { value, multiplicity }),
                    (None, _) => return fail(vo, "a value rule code 1..=3".into()),
                    (_, None) => return fail(mo, "a multiplicity rule code 1..=4".into()),
                }
            }
            _ => return Err(arity("value code, multiplicity code")),
        },
        ("prefix", n) if n >= 2 => {
            let mut args: Vec<Arg> = it.collect();
            let Some(Arg::Spec(tail, _)) = args.pop() else {
                return Err(arity("number, ..., sequence"));
            };
            let mut values = Vec::with_capacity(args.len());
            for a in args {
                match a {
                    Arg::Num(v, _) => values.push(v),
                    other => return fail(other.offset(), "a number".into()),
                }
            }
            SequenceSpec::prefix(values, tail).map_err(invalid)?
        }
        _ => {
            let shape = match name {
                "linear" => "",
                "const" | "pow" | "geom" => "number",
                "neg" | "square" => "sequence",
                "affine" => "sequence, scale, shift",
                "interleave" => "sequence, sequence",
                "runlen" => "value code, multiplicity code",
                _ => "number, ..., sequence",
            };
            return Err(arity(shape));
        }
    };
    Ok(spec)
}

pub fn parse_spec(text: &str) -> Result<SequenceSpec, ParseError> {
    let mut p = Parser { src: text, pos: 0 };
    if p.peek().is_none() {
        return p.err(p.pos, "a sequence");
    }
    let spec = p.call()?;
    if p.peek().is_some() {
        return p.err(p.pos, "end of input");
    }
    Ok(spec)
}

/// Canonical text; `parse_spec(&render(s)) == Ok(s)` for parser-built specs.
pub fn render(spec: &SequenceSpec) -> String {
    let r = render_rational;
    match spec.generator() {
        Generator::Constant(v) => format!("const({})", r(v)),
        Generator::PowerOfIndex(k) => format!("pow({k})"),
        Generator::Geometric(d) => format!("geom({})", r(d)),
        Generator::Linear => "linear()".into(),
        Generator::NegLinear => "neg(linear())".into(),
        Generator::RunLength(rule) => format!("runlen({}, {})", rule.value.code(), rule.multiplicity.code()),
        Generator::ExplicitPrefix(values, tail) => {
            let mut parts: Vec<String> = values.iter().map(r).collect();
            parts.push(render(tail));
            format!("prefix({})", parts.join(", "))
        }
        Generator::Affine { base, scale, shift } => format!("affine({}, {}, {})", render(base), r(scale), r(shift)),
        Generator::PointwiseSquare(base) => format!("square({})", render(base)),
        Generator::Negate(base) => format!("neg({})", render(base)),
        Generator::Interleave(a, b) => format!("interleave({}, {})", render(a), render(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use aar_core::num::rat;

    #[test]
    fn examples() {
        let s = parse_spec("interleave(const(0), pow(2))").unwrap();
        assert_eq!(s, SequenceSpec::interleave(SequenceSpec::constant(rat(0)), SequenceSpec::power(2).unwrap()));
        let g = SequenceSpec::geometric(rat(2)).unwrap();
        let s = parse_spec("interleave(neg(geom(2)), interleave(const(0), geom(2)))").unwrap();
        let want = SequenceSpec::interleave(
            SequenceSpec::negate(g.clone()),
            SequenceSpec::interleave(SequenceSpec::constant(rat(0)), g),
        );
        assert_eq!(s, want);
        assert_eq!(parse_spec(" neg ( linear ( ) ) ").unwrap(), SequenceSpec::neg_linear());
    }

    #[test]
    fn diagnostics() {
        let e = parse_spec("geom(1/2)").unwrap_err();
        assert_eq!(e.offset, 0);
        assert!(e.expected.contains("geom"));
        assert_eq!(parse_spec("const(1").unwrap_err().offset, 7);
        assert_eq!(parse_spec("foo(1)").unwrap_err().offset, 0);
        assert_eq!(parse_spec("const(1/0)").unwrap_err().offset, 8);
        assert_eq!(parse_spec("interleave(const(1), 2)").unwrap_err().offset, 0);
        assert_eq!(parse_spec("runlen(2, 9)").unwrap_err().offset, 10);
        assert_eq!(parse_spec("linear() x").unwrap_err().offset, 9);
        assert_eq!(parse_spec("").unwrap_err().offset, 0);
    }

    #[test]
    fn render_round_trip() {
        for text in [
            "prefix(3, 1, -2/7, affine(linear(), 1, 3))",
            "runlen(3, 3)",
            "square(neg(pow(3)))",
            "interleave(neg(linear()), runlen(2, 4))",
        ] {
            assert_eq!(render(&parse_spec(text).unwrap()), text);
        }
    }
}
