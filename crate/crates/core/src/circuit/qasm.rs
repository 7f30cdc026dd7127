use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{Circuit, CircuitError, Gate, GateKind};

/// Parses the supported OpenQASM 2.0 subset: one `qreg`, optional `creg`,
/// and the gates of [`GateKind`]. Register-wide operands are broadcast for
/// single-qubit gates, `measure` and `barrier`.
pub fn parse_qasm(source: &str) -> Result<Circuit, CircuitError> {
    let mut parser = Parser::default();
    for (line, stmt) in statements(source)? {
        parser.statement(line, &stmt)?;
    }
    parser.finish()
}

/// Writes a circuit in the same subset [`parse_qasm`] reads.
pub fn serialize_qasm(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\n");
    out.push_str("include \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.num_qubits);
    if circuit.num_clbits > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.num_clbits);
    }
    for g in circuit.gates() {
        out.push_str(g.kind.name());
        if !g.params.is_empty() {
            let ps: Vec<String> = g.params.iter().map(|p| format!("{p:?}")).collect();
            let _ = write!(out, "({})", ps.join(","));
        }
        let args: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let _ = write!(out, " {}", args.join(","));
        if let Some(c) = g.clbit {
            let _ = write!(out, " -> c[{c}]");
        }
        out.push_str(";\n");
    }
    out
}

/// Splits the source into `;`-terminated statements with the line number
/// where each starts. Comments run from `//` to end of line.
fn statements(source: &str) -> Result<Vec<(usize, String)>, CircuitError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start_line = 0;
    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let code = match raw.find("//") {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        for piece in code.split_inclusive(';') {
            let (body, terminated) = match piece.strip_suffix(';') {
                Some(b) => (b, true),
                None => (piece, false),
            };
            if current.trim().is_empty() && !body.trim().is_empty() {
                start_line = line_no;
            }
            current.push_str(body);
            current.push(' ');
            if terminated {
                let stmt = current.trim().to_string();
                if stmt.is_empty() {
                    return Err(CircuitError::Syntax { line: line_no, msg: "empty statement".into() });
                }
                out.push((start_line, stmt));
                current.clear();
            }
        }
    }
    if !current.trim().is_empty() {
        return Err(CircuitError::Syntax { line: start_line, msg: "missing `;`".into() });
    }
    Ok(out)
}

#[derive(Default)]
struct Parser {
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    gates: Vec<Gate>,
    seen_header: bool,
    seen_statement: bool,
}

enum Operand {
    Single(usize),
    Register,
}

impl Parser {
    fn statement(&mut self, line: usize, stmt: &str) -> Result<(), CircuitError> {
        let syntax = |msg: &str| CircuitError::Syntax { line, msg: msg.to_string() };

        if let Some(rest) = stmt.strip_prefix("OPENQASM") {
            if self.seen_header || self.seen_statement {
                return Err(syntax("OPENQASM header must come first"));
            }
            if rest.trim() != "2.0" {
                return Err(syntax("only OPENQASM 2.0 is supported"));
            }
            self.seen_header = true;
            return Ok(());
        }
        self.seen_statement = true;
        if let Some(rest) = stmt.strip_prefix("include") {
            let name = rest.trim();
            if name.len() < 2 || !name.starts_with('"') || !name.ends_with('"') {
                return Err(syntax("include expects a quoted file name"));
            }
            return Ok(());
        }
        if let Some(rest) = stmt.strip_prefix("qreg ") {
            if self.qreg.is_some() {
                return Err(syntax("only one qreg is supported"));
            }
            self.qreg = Some(register_decl(rest).ok_or_else(|| syntax("malformed qreg"))?);
            return Ok(());
        }
        if let Some(rest) = stmt.strip_prefix("creg ") {
            if self.creg.is_some() {
                return Err(syntax("only one creg is supported"));
            }
            self.creg = Some(register_decl(rest).ok_or_else(|| syntax("malformed creg"))?);
            return Ok(());
        }

        let name_end = stmt.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(stmt.len());
        let name = &stmt[..name_end];
        if name.is_empty() {
            return Err(syntax("expected a gate name"));
        }
        let kind =
            GateKind::from_name(name).ok_or_else(|| CircuitError::UnsupportedGate { line, name: name.to_string() })?;
        let mut rest = stmt[name_end..].trim_start();

        let mut params = Vec::new();
        if let Some(after) = rest.strip_prefix('(') {
            let close = matching_paren(after).ok_or_else(|| syntax("unbalanced parentheses"))?;
            for expr in split_top_level(&after[..close]) {
                let v = eval_angle(expr).map_err(|m| syntax(&m))?;
                params.push(v);
            }
            rest = after[close + 1..].trim_start();
        }
        if params.len() != kind.num_params() {
            return Err(syntax(&format!("{} expects {} parameter(s), got {}", kind, kind.num_params(), params.len())));
        }

        let (qreg_name, qsize) = self.qreg.clone().ok_or_else(|| syntax("gate before qreg declaration"))?;

        if kind == GateKind::MEASURE {
            let (lhs, rhs) = rest.split_once("->").ok_or_else(|| syntax("measure expects `->`"))?;
            let q = self.operand(line, lhs.trim(), &qreg_name, qsize)?;
            let (creg_name, csize) = self.creg.clone().ok_or_else(|| syntax("measure without creg"))?;
            let c = self.operand(line, rhs.trim(), &creg_name, csize)?;
            match (q, c) {
                (Operand::Single(q), Operand::Single(c)) => self.emit(Gate::measure(q, c)),
                (Operand::Register, Operand::Register) => {
                    if qsize > csize {
                        return Err(syntax("creg smaller than qreg in register-wide measure"));
                    }
                    for q in 0..qsize {
                        self.emit(Gate::measure(q, q));
                    }
                }
                _ => return Err(syntax("measure operands must both be bits or both registers")),
            }
            return Ok(());
        }

        let operands = split_top_level(rest)
            .into_iter()
            .map(|a| self.operand(line, a, &qreg_name, qsize))
            .collect::<Result<Vec<_>, _>>()?;
        if operands.is_empty() {
            return Err(syntax("missing operands"));
        }

        match kind {
            GateKind::BARRIER => {
                let mut qs = Vec::new();
                for op in operands {
                    match op {
                        Operand::Single(q) => qs.push(q),
                        Operand::Register => qs.extend(0..qsize),
                    }
                }
                let mut seen = Vec::new();
                qs.retain(|q| {
                    let fresh = !seen.contains(q);
                    seen.push(*q);
                    fresh
                });
                self.emit(Gate::barrier(qs));
            }
            k if k.is_two_qubit() => {
                let qs = operands
                    .into_iter()
                    .map(|op| match op {
                        Operand::Single(q) => Ok(q),
                        Operand::Register => Err(syntax("register broadcast is not supported for two-qubit gates")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let g = Gate::new(kind, qs, params).map_err(|e| syntax(&e.to_string()))?;
                self.emit(g);
            }
            _ => {
                if operands.len() != 1 {
                    return Err(syntax(&format!("{kind} expects one operand")));
                }
                let targets: Vec<usize> = match operands[0] {
                    Operand::Single(q) => vec![q],
                    Operand::Register => (0..qsize).collect(),
                };
                for q in targets {
                    self.emit(Gate::new(kind, vec![q], params.clone()).expect("arity checked"));
                }
            }
        }
        Ok(())
    }

    fn operand(&self, line: usize, text: &str, reg: &str, size: usize) -> Result<Operand, CircuitError> {
        let text = text.trim();
        if text == reg {
            return Ok(Operand::Register);
        }
        let bad = || CircuitError::Syntax { line, msg: format!("bad operand `{text}`") };
        let open = text.find('[').ok_or_else(bad)?;
        if text[..open].trim() != reg || !text.ends_with(']') {
            return Err(bad());
        }
        let index: usize = text[open + 1..text.len() - 1].trim().parse().map_err(|_| bad())?;
        if index >= size {
            return Err(CircuitError::QubitOutOfRange { line, index, size });
        }
        Ok(Operand::Single(index))
    }

    fn emit(&mut self, mut g: Gate) {
        g.index = self.gates.len();
        self.gates.push(g);
    }

    fn finish(self) -> Result<Circuit, CircuitError> {
        let (_, n) = self.qreg.ok_or(CircuitError::Syntax { line: 0, msg: "no qreg declared".into() })?;
        let mut c = Circuit::new("", n);
        if let Some((_, m)) = self.creg {
            c.num_clbits = m;
        }
        for g in self.gates {
            c.push(g)?;
        }
        Ok(c)
    }
}

fn register_decl(text: &str) -> Option<(String, usize)> {
    let text = text.trim();
    let open = text.find('[')?;
    let name = text[..open].trim();
    if name.is_empty() || !text.ends_with(']') {
        return None;
    }
    let size = text[open + 1..text.len() - 1].trim().parse().ok()?;
    Some((name.to_string(), size))
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' if depth == 0 => return Some(i),
            ')' => depth -= 1,
            _ => {}
        }
    }
    None
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    parts
}

/// Evaluates a constant angle: numbers, `pi`, `+ - * /`, unary minus and parentheses.
fn eval_angle(expr: &str) -> Result<f64, String> {
    let tokens = tokenize(expr)?;
    let mut pos = 0;
    let v = parse_sum(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("unexpected trailing input in `{expr}`"));
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "+-*/()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit()
                    || chars[i] == '.'
                    || chars[i] == 'e'
                    || chars[i] == 'E'
                    || ((chars[i] == '-' || chars[i] == '+') && matches!(chars[i - 1], 'e' | 'E')))
            {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Tok::Num(text.parse().map_err(|_| format!("bad number `{text}`"))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "pi" => out.push(Tok::Num(PI)),
                _ => return Err(format!("symbolic angle `{word}` is not supported")),
            }
        } else {
            return Err(format!("unexpected character `{c}` in angle"));
        }
    }
    Ok(out)
}

fn parse_sum(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    let mut v = parse_product(t, pos)?;
    while let Some(Tok::Op(op @ ('+' | '-'))) = t.get(*pos) {
        *pos += 1;
        let rhs = parse_product(t, pos)?;
        if *op == '+' {
            v += rhs
        } else {
            v -= rhs
        }
    }
    Ok(v)
}

fn parse_product(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    let mut v = parse_unary(t, pos)?;
    while let Some(Tok::Op(op @ ('*' | '/'))) = t.get(*pos) {
        *pos += 1;
        let rhs = parse_unary(t, pos)?;
        if *op == '*' {
            v *= rhs
        } else {
            v /= rhs
        }
    }
    Ok(v)
}

fn parse_unary(t: &[Tok], pos: &mut usize) -> Result<f64, String> {
    match t.get(*pos) {
        Some(Tok::Op('-')) => {
            *pos += 1;
            Ok(-parse_unary(t, pos)?)
        }
        Some(Tok::Op('+')) => {
            *pos += 1;
            parse_unary(t, pos)
        }
        Some(Tok::Num(v)) => {
            *pos += 1;
            Ok(*v)
        }
        Some(Tok::Op('(')) => {
            *pos += 1;
            let v = parse_sum(t, pos)?;
            if t.get(*pos) != Some(&Tok::Op(')')) {
                return Err("missing `)`".into());
            }
            *pos += 1;
            Ok(v)
        }
        _ => Err("incomplete angle expression".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cx() {
        let c = parse_qasm("qreg q[2]; cx q[0],q[1];").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.len(), 1);
        assert!(c.gates()[0].same_op(&Gate::cx(0, 1)));
    }

    #[test]
    fn out_of_range_operand() {
        let err = parse_qasm("qreg q[2];\ncx q[0],q[5];").unwrap_err();
        assert_eq!(err, CircuitError::QubitOutOfRange { line: 2, index: 5, size: 2 });
    }

    #[test]
    fn unsupported_gate_reports_line() {
        let err = parse_qasm("OPENQASM 2.0;\nqreg q[3];\n\nccx q[0],q[1],q[2];").unwrap_err();
        assert_eq!(err, CircuitError::UnsupportedGate { line: 4, name: "ccx".into() });
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_qasm("qreg q[2];\nh q[0]\n").unwrap_err();
        assert!(matches!(err, CircuitError::Syntax { line: 2, .. }), "{err:?}");
        let err = parse_qasm("qreg q[2];\nrx q[0];").unwrap_err();
        assert!(matches!(err, CircuitError::Syntax { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn angles_and_directives() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\ncreg c[3];\n\
                   rz(-pi/4) q[0]; // t-dagger\nrx(2*pi/3) q[1];\nry(1.5e-1) q[2];\n\
                   barrier q;\nmeasure q[2] -> c[0];\nmeasure q -> c;\n";
        let c = parse_qasm(src).unwrap();
        assert!((c.gates()[0].params[0] + PI / 4.0).abs() < 1e-15);
        assert!((c.gates()[1].params[0] - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((c.gates()[2].params[0] - 0.15).abs() < 1e-15);
        assert_eq!(c.gates()[3].qubits, vec![0, 1, 2]);
        assert_eq!(c.gates()[4].clbit, Some(0));
        assert_eq!(c.count_kind(GateKind::MEASURE), 4);
        assert_eq!(c.num_clbits, 3);
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let src = "qreg q[3];\ncreg c[1];\nh q[0];\nrz(0.1) q[1];\ncx q[0],q[2];\nswap q[1],q[2];\n\
                   cz q[2],q[0];\nbarrier q[0],q[1];\nmeasure q[1] -> c[0];";
        let c = parse_qasm(src).unwrap();
        let again = parse_qasm(&serialize_qasm(&c)).unwrap();
        assert_eq!(c.gates(), again.gates());
    }
}
