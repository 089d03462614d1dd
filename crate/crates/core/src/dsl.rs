//! Line-oriented circuit description format.
//!
//! ```text
//! modes 6
//! label 0 C0              # optional, defaults to m<idx>
//! bs 2 3 R=1/2
//! hwp 0 1 theta=22.5      # degrees, modes are (H, V)
//! qwp 0 1 theta=45
//! pbs 0 1 2 3             # railA-H railA-V railB-H railB-V
//! phase 1 phi=3.14159     # radians
//! input control 0 1
//! input target 2 3
//! output control 0 1
//! output target 2 3
//! ```
//!
//! Numbers may be written as simple fractions (`1/3`). Everything after `#` is
//! a comment.

use std::fmt::Write as _;

use crate::elements::OpticalElement;
use crate::error::{Error, Result};
use crate::gate::{Circuit, Qubit, QubitMap, RailPair};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(Token {
                    text: &content[s..i],
                    column: content[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(Token {
            text: &content[s..],
            column: content[..s].chars().count() + 1,
        });
    }
    tokens
}

fn err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn parse_number(text: &str) -> Option<f64> {
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num.trim().parse().ok()?;
        let d: f64 = den.trim().parse().ok()?;
        if d == 0.0 {
            return None;
        }
        return Some(n / d);
    }
    text.parse().ok().filter(|v: &f64| v.is_finite())
}

struct LineCtx<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    modes: Option<usize>,
}

impl<'a> LineCtx<'a> {
    fn expect_args(&self, n: usize, usage: &str) -> Result<()> {
        if self.tokens.len() != n + 1 {
            let col = self.tokens.get(n + 1).map_or(self.tokens[0].column, |t| t.column);
            return Err(err(self.line, col, format!("expected `{usage}`")));
        }
        Ok(())
    }

    fn mode(&self, idx: usize) -> Result<usize> {
        let tok = &self.tokens[idx];
        let total = self
            .modes
            .ok_or_else(|| err(self.line, self.tokens[0].column, "no modes declared"))?;
        let m: usize = tok
            .text
            .parse()
            .map_err(|_| err(self.line, tok.column, format!("invalid mode index {:?}", tok.text)))?;
        if m >= total {
            return Err(err(
                self.line,
                tok.column,
                format!("mode {m} out of range for {total} modes"),
            ));
        }
        Ok(m)
    }

    fn keyed(&self, idx: usize, key: &str) -> Result<f64> {
        let tok = &self.tokens[idx];
        let value = tok
            .text
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| err(self.line, tok.column, format!("expected {key}=<value>")))?;
        parse_number(value).ok_or_else(|| err(self.line, tok.column, format!("invalid number {value:?}")))
    }

    fn qubit(&self, idx: usize) -> Result<Qubit> {
        let tok = &self.tokens[idx];
        match tok.text {
            "control" | "c" | "0" => Ok(Qubit::Control),
            "target" | "t" | "1" => Ok(Qubit::Target),
            other => Err(err(self.line, tok.column, format!("unknown qubit {other:?}"))),
        }
    }

    /// Attach this line's position to a validation failure.
    fn check_element(&self, element: &OpticalElement, value_col: Option<usize>) -> Result<()> {
        let total = self.modes.expect("mode count checked before elements");
        element.validate(total).map_err(|e| {
            let col = match e {
                Error::Reflectivity(_) => value_col.unwrap_or(self.tokens[0].column),
                Error::DuplicateMode(m) => self
                    .tokens
                    .iter()
                    .skip(1)
                    .filter(|t| t.text.parse::<usize>().ok() == Some(m))
                    .nth(1)
                    .map_or(self.tokens[0].column, |t| t.column),
                _ => value_col.unwrap_or(self.tokens[0].column),
            };
            err(self.line, col, e.to_string())
        })
    }
}

#[derive(Default)]
struct PairSlots {
    control: Option<RailPair>,
    target: Option<RailPair>,
}

impl PairSlots {
    fn set(&mut self, q: Qubit, pair: RailPair) -> bool {
        let slot = match q {
            Qubit::Control => &mut self.control,
            Qubit::Target => &mut self.target,
        };
        let fresh = slot.is_none();
        *slot = Some(pair);
        fresh
    }
}

pub fn parse_circuit_dsl(text: &str) -> Result<Circuit> {
    let mut modes: Option<usize> = None;
    let mut labels: Vec<String> = Vec::new();
    let mut elements = Vec::new();
    let mut inputs = PairSlots::default();
    let mut outputs = PairSlots::default();
    let mut last_line = 1;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let ctx = LineCtx { line, tokens, modes };
        let directive = ctx.tokens[0].text;
        if directive != "modes" && modes.is_none() {
            return Err(err(line, ctx.tokens[0].column, "no modes declared"));
        }
        match directive {
            "modes" => {
                ctx.expect_args(1, "modes <n>")?;
                if modes.is_some() {
                    return Err(err(line, ctx.tokens[0].column, "modes declared twice"));
                }
                let tok = &ctx.tokens[1];
                let n: usize = tok
                    .text
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| err(line, tok.column, format!("invalid mode count {:?}", tok.text)))?;
                modes = Some(n);
                labels = (0..n).map(|k| format!("m{k}")).collect();
            }
            "label" => {
                ctx.expect_args(2, "label <idx> <name>")?;
                let m = ctx.mode(1)?;
                labels[m] = ctx.tokens[2].text.to_string();
            }
            "bs" => {
                ctx.expect_args(3, "bs <i> <j> R=<r>")?;
                let e = OpticalElement::bs(ctx.mode(1)?, ctx.mode(2)?, ctx.keyed(3, "R")?);
                ctx.check_element(&e, Some(ctx.tokens[3].column))?;
                elements.push(e);
            }
            "hwp" | "qwp" => {
                ctx.expect_args(3, &format!("{directive} <iH> <iV> theta=<deg>"))?;
                let (h, v, theta) = (ctx.mode(1)?, ctx.mode(2)?, ctx.keyed(3, "theta")?);
                let e = if directive == "hwp" {
                    OpticalElement::hwp(h, v, theta)
                } else {
                    OpticalElement::qwp(h, v, theta)
                };
                ctx.check_element(&e, Some(ctx.tokens[3].column))?;
                elements.push(e);
            }
            "pbs" => {
                ctx.expect_args(4, "pbs <iH> <iV> <jH> <jV>")?;
                let e = OpticalElement::pbs(ctx.mode(1)?, ctx.mode(2)?, ctx.mode(3)?, ctx.mode(4)?);
                ctx.check_element(&e, None)?;
                elements.push(e);
            }
            "phase" => {
                ctx.expect_args(2, "phase <i> phi=<rad>")?;
                let e = OpticalElement::phase(ctx.mode(1)?, ctx.keyed(2, "phi")?);
                ctx.check_element(&e, Some(ctx.tokens[2].column))?;
                elements.push(e);
            }
            "input" | "output" => {
                ctx.expect_args(3, &format!("{directive} <qubit> <i0> <i1>"))?;
                let q = ctx.qubit(1)?;
                let pair = RailPair::new(ctx.mode(2)?, ctx.mode(3)?);
                if pair.zero == pair.one {
                    return Err(err(line, ctx.tokens[3].column, format!("duplicate mode {}", pair.one)));
                }
                let slots = if directive == "input" {
                    &mut inputs
                } else {
                    &mut outputs
                };
                if !slots.set(q, pair) {
                    return Err(err(
                        line,
                        ctx.tokens[0].column,
                        format!("{directive} for {} given twice", q.name()),
                    ));
                }
            }
            other => return Err(err(line, ctx.tokens[0].column, format!("unknown directive {other:?}"))),
        }
    }

    let Some(mode_count) = modes else {
        return Err(err(1, 1, "no modes declared"));
    };
    let missing = |dir: &str, q: Qubit| err(last_line, 1, format!("missing {dir} map for {}", q.name()));
    let inputs = QubitMap {
        control: inputs.control.ok_or_else(|| missing("input", Qubit::Control))?,
        target: inputs.target.ok_or_else(|| missing("input", Qubit::Target))?,
    };
    let outputs = QubitMap {
        control: outputs.control.ok_or_else(|| missing("output", Qubit::Control))?,
        target: outputs.target.ok_or_else(|| missing("output", Qubit::Target))?,
    };
    Circuit::new(mode_count, labels, elements, inputs, outputs).map_err(|e| err(last_line, 1, e.to_string()))
}

/// Render a circuit in the DSL. Numbers use Rust's shortest round-trip
/// formatting, so `parse_circuit_dsl(&to_dsl(c)) == c`.
pub fn to_dsl(circuit: &Circuit) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "modes {}", circuit.mode_count());
    for (i, label) in circuit.labels().iter().enumerate() {
        if *label != format!("m{i}") {
            let _ = writeln!(s, "label {i} {label}");
        }
    }
    for e in circuit.elements() {
        let _ = match e {
            OpticalElement::Bs { modes, reflectivity } => writeln!(s, "bs {} {} R={reflectivity:?}", modes.0, modes.1),
            OpticalElement::Hwp { modes, theta_deg } => {
                writeln!(s, "hwp {} {} theta={theta_deg:?}", modes.0, modes.1)
            }
            OpticalElement::Qwp { modes, theta_deg } => {
                writeln!(s, "qwp {} {} theta={theta_deg:?}", modes.0, modes.1)
            }
            OpticalElement::Pbs { modes } => {
                writeln!(s, "pbs {} {} {} {}", modes[0], modes[1], modes[2], modes[3])
            }
            OpticalElement::Phase { mode, phi_rad } => writeln!(s, "phase {mode} phi={phi_rad:?}"),
        };
    }
    for (dir, map) in [("input", circuit.inputs()), ("output", circuit.outputs())] {
        for q in [Qubit::Control, Qubit::Target] {
            let p = map.get(q);
            let _ = writeln!(s, "{dir} {} {} {}", q.name(), p.zero, p.one);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{build_conceptual_cnot, build_experimental_cnot, ExperimentalParams};

    fn parse_err(text: &str) -> (usize, usize, String) {
        match parse_circuit_dsl(text).unwrap_err() {
            Error::Parse { line, column, message } => (line, column, message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file() {
        let (line, _, msg) = parse_err("");
        assert_eq!(line, 1);
        assert_eq!(msg, "no modes declared");
        let (_, _, msg) = parse_err("# only a comment\n\n");
        assert_eq!(msg, "no modes declared");
    }

    #[test]
    fn reflectivity_out_of_range() {
        let (line, col, msg) = parse_err("bs 0 1 R=1.5");
        assert_eq!(line, 1);
        assert_eq!(col, 1);
        assert_eq!(msg, "no modes declared");

        let (line, col, msg) = parse_err("modes 2\nbs 0 1 R=1.5\n");
        assert_eq!((line, col), (2, 8));
        assert!(msg.contains("reflectivity 1.5"));
    }

    #[test]
    fn assorted_errors() {
        let (line, col, msg) = parse_err("modes 2\nmirror 0 1\n");
        assert_eq!((line, col), (2, 1));
        assert!(msg.contains("unknown directive"));

        let (line, col, msg) = parse_err("modes 2\n  bs 0 5 R=0.5\n");
        assert_eq!((line, col), (2, 8));
        assert!(msg.contains("out of range"));

        let (_, _, msg) = parse_err("modes 4\ninput control 0 1\ninput target 2 3\noutput control 0 1\n");
        assert_eq!(msg, "missing output map for target");

        let (line, col, msg) = parse_err("modes 4\npbs 0 1 1 3\n");
        assert_eq!((line, col), (2, 9));
        assert!(msg.contains("duplicate mode 1"));

        let (_, col, msg) = parse_err("modes 2\nhwp 0 1 angle=3\n");
        assert_eq!(col, 9);
        assert!(msg.contains("theta="));
    }

    #[test]
    fn fractions_and_comments() {
        let text = "modes 4  # four modes\nbs 0 1 R=1/3\ninput c 0 1\ninput t 2 3\noutput c 0 1\noutput t 2 3\n";
        let c = parse_circuit_dsl(text).unwrap();
        assert_eq!(c.elements()[0], OpticalElement::bs(0, 1, 1.0 / 3.0));
    }

    #[test]
    fn builders_round_trip() {
        for c in [
            build_conceptual_cnot(),
            build_experimental_cnot(ExperimentalParams::default()),
        ] {
            let text = to_dsl(&c);
            assert_eq!(parse_circuit_dsl(&text).unwrap(), c);
        }
    }

    #[test]
    fn shipped_files_match_builders() {
        let conceptual = include_str!("../circuits/conceptual_cnot.circ");
        assert_eq!(parse_circuit_dsl(conceptual).unwrap(), build_conceptual_cnot());
        let experimental = include_str!("../circuits/experimental_cnot.circ");
        assert_eq!(
            parse_circuit_dsl(experimental).unwrap(),
            build_experimental_cnot(ExperimentalParams::default())
        );
    }
}
