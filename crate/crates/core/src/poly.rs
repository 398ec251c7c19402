//! Curve specifications: monic polynomials in `x` and explicit root lists.

use num_complex::Complex64 as C;

use crate::{Error, Result};

/// Dense polynomial with real coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: C) -> C {
        self.coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `(p(x), p'(x))` by Horner.
    pub fn eval_with_derivative(&self, x: C) -> (C, C) {
        let mut p = C::new(0.0, 0.0);
        let mut dp = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// All roots by Aberth-Ehrlich simultaneous iteration, each polished
    /// by Newton's method until the step falls below `1e-13` relative.
    pub fn roots(&self) -> Result<Vec<C>> {
        let n = self.degree();
        if n == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[n];
        let bound = 1.0 + self.coeffs[..n].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
        let mut z: Vec<C> = (0..n)
            .map(|k| C::from_polar(0.5 * bound, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
            .collect();
        let mut converged = false;
        for _ in 0..500 {
            let mut biggest: f64 = 0.0;
            for k in 0..n {
                let (p, dp) = self.eval_with_derivative(z[k]);
                if p == C::new(0.0, 0.0) {
                    continue;
                }
                let ratio = p / dp;
                let repulsion: C = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
                let step = ratio / (C::new(1.0, 0.0) - ratio * repulsion);
                z[k] -= step;
                biggest = biggest.max(step.norm() / z[k].norm().max(1.0));
            }
            if biggest < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged && z.iter().any(|&r| !r.is_finite()) {
            return Err(Error::Parse("root finder did not converge".into()));
        }
        let mut roots: Vec<C> = z.into_iter().map(|r| self.polish(r)).collect();
        roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(roots)
    }

    fn polish(&self, mut z: C) -> C {
        for _ in 0..50 {
            let (p, dp) = self.eval_with_derivative(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            z -= step;
            if step.norm() <= 1e-13 * z.norm().max(1.0) {
                break;
            }
        }
        z
    }
}

/// Parses a monic polynomial in `x`, e.g. `x^6 - 1` or `x^4 - 5/2*x^2 + 0.5x + 1`.
/// Coefficients are decimals or fractions; implicit multiplication is
/// accepted.
pub fn parse_polynomial(src: &str) -> Result<Polynomial> {
    let s: String = src.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut coeffs: Vec<f64> = Vec::new();
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let mut sign = 1.0;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            if bytes[i] == b'-' {
                sign = -1.0;
            }
            i += 1;
        } else if i > 0 {
            return Err(Error::Parse(format!("expected '+' or '-' at offset {i} in {src:?}")));
        }
        let start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'/') {
            i += 1;
        }
        let coef = if i > start { parse_number(&s[start..i])? } else { 1.0 };
        if i < bytes.len() && bytes[i] == b'*' {
            i += 1;
            if i >= bytes.len() || bytes[i] != b'x' {
                return Err(Error::Parse(format!("expected 'x' after '*' in {src:?}")));
            }
        }
        let mut power = 0usize;
        if i < bytes.len() && bytes[i] == b'x' {
            i += 1;
            power = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let p0 = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                power = s[p0..i]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {src:?}")))?;
            }
        } else if i == start {
            return Err(Error::Parse(format!("empty term at offset {start} in {src:?}")));
        }
        if power > 64 {
            return Err(Error::Parse(format!("degree {power} too large")));
        }
        if coeffs.len() <= power {
            coeffs.resize(power + 1, 0.0);
        }
        coeffs[power] += sign * coef;
    }
    let poly = Polynomial::new(coeffs);
    let lead = poly.coeffs()[poly.degree()];
    if lead != 1.0 {
        return Err(Error::Parse(format!("polynomial {src:?} is not monic (leading coefficient {lead})")));
    }
    Ok(poly)
}

fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("bad number {s:?}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let n: f64 = num.parse().map_err(|_| bad())?;
            let d: f64 = den.parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

/// Parses a comma separated list of complex numbers such as
/// `1, -1, 2+3i, -0.5i`.
pub fn parse_roots(src: &str) -> Result<Vec<C>> {
    src.split(',').map(|t| parse_complex(t.trim())).collect()
}

pub fn parse_complex(s: &str) -> Result<C> {
    let bad = || Error::Parse(format!("bad complex number {s:?}"));
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| C::new(re, 0.0)).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(k, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k)
        .last();
    let imag = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(C::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(C::new(0.0, imag(body)?)),
    }
}
