//! The step symbols `<m>`, `<m; x> = floor(<m> / log x)` and the digit
//! positions `a_m = <m; s_m>`, `b_m = <m+1; s_m>`.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::arith::{certified_floor, format_rational, parse_rational, rational_serde, Expr, Rational};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    /// `<m> = floor(e^{sqrt m} + 2 s1 m^3)`
    Paper { s1: u64 },
    /// `<m> = floor(e^{m^c})`, `0 < c < 1`
    Power {
        #[serde(with = "rational_serde")]
        c: Rational,
    },
    /// explicit `<1>, <2>, ...` for desk-scale runs
    Toy { symbols: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub precision_cap: u32,
}

impl Schedule {
    pub fn paper(s1: u64, precision_cap: u32) -> Self {
        Self { kind: ScheduleKind::Paper { s1 }, precision_cap }
    }

    pub fn power(c: Rational, precision_cap: u32) -> Result<Self> {
        if c <= Rational::from_integer(0.into()) || c >= Rational::from_integer(1.into()) {
            return Err(Error::Invalid(format!(
                "power schedule exponent must lie in (0, 1), got {}",
                format_rational(&c)
            )));
        }
        Ok(Self { kind: ScheduleKind::Power { c }, precision_cap })
    }

    pub fn toy(symbols: Vec<u64>, precision_cap: u32) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Invalid("toy schedule needs at least one symbol".into()));
        }
        if symbols.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("toy schedule symbols must be strictly increasing".into()));
        }
        Ok(Self { kind: ScheduleKind::Toy { symbols }, precision_cap })
    }

    /// Parses `paper`, `power:C` or `toy:FILE`. The toy file holds either a
    /// JSON object `{"symbols": [...]}` or whitespace/comma separated integers.
    pub fn parse(spec: &str, s1: u64, precision_cap: u32) -> Result<Self> {
        if spec == "paper" {
            return Ok(Self::paper(s1, precision_cap));
        }
        if let Some(c) = spec.strip_prefix("power:") {
            return Self::power(parse_rational(c)?, precision_cap);
        }
        if let Some(path) = spec.strip_prefix("toy:") {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Invalid(format!("cannot read toy schedule {path}: {e}")))?;
            return Self::toy(parse_symbols(&text)?, precision_cap);
        }
        Err(Error::Invalid(format!("unknown schedule {spec:?} (paper | power:C | toy:FILE)")))
    }

    pub fn is_toy(&self) -> bool {
        matches!(self.kind, ScheduleKind::Toy { .. })
    }

    /// The exponent `A = (1 - c) / c` of the discrepancy rate for power
    /// schedules.
    pub fn rate_exponent(&self) -> Option<Rational> {
        match &self.kind {
            ScheduleKind::Power { c } => Some((Rational::from_integer(1.into()) - c) / c),
            _ => None,
        }
    }

    /// `<m>` for `m >= 1`.
    pub fn symbol(&self, m: u64) -> Result<u64> {
        if m == 0 {
            return Err(Error::Invalid("schedule symbols start at m = 1".into()));
        }
        match &self.kind {
            ScheduleKind::Toy { symbols } => symbols.get(m as usize - 1).copied().ok_or_else(|| {
                Error::Invalid(format!("toy schedule defines {} symbols, <{m}> requested", symbols.len()))
            }),
            ScheduleKind::Paper { s1 } => {
                let cube = (m as i64).pow(3);
                let e = Expr::int(m as i64)
                    .sqrt()
                    .exp()
                    .add(Expr::int(2 * *s1 as i64 * cube));
                self.floor_u64(&e)
            }
            ScheduleKind::Power { c } => {
                let e = Expr::int(m as i64).pow(Expr::rational(c.clone())).exp();
                self.floor_u64(&e)
            }
        }
    }

    /// `<m; x> = floor(<m> / log x)`.
    pub fn symbol_at(&self, m: u64, x: u64) -> Result<u64> {
        if x < 2 {
            return Err(Error::Invalid(format!("<m; x> needs x >= 2, got {x}")));
        }
        let sym = self.symbol(m)?;
        self.floor_u64(&Expr::int(sym as i64).div(Expr::int(x as i64).ln()))
    }

    /// `(a_m, b_m) = (<m; s_m>, <m+1; s_m>)`.
    pub fn digit_positions(&self, m: u64, s_m: u64) -> Result<(u64, u64)> {
        Ok((self.symbol_at(m, s_m)?, self.symbol_at(m + 1, s_m)?))
    }

    fn floor_u64(&self, e: &Expr) -> Result<u64> {
        let v = certified_floor(e, self.precision_cap)?;
        v.to_u64()
            .ok_or_else(|| Error::Invalid(format!("schedule value {e} does not fit in 64 bits")))
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ScheduleKind::Paper { s1 } => format!("paper(s1={s1}): <m> = floor(e^sqrt(m) + 2*{s1}*m^3)"),
            ScheduleKind::Power { c } => format!("power(c={}): <m> = floor(e^(m^c))", format_rational(c)),
            ScheduleKind::Toy { symbols } => format!("toy: <m> = {symbols:?}"),
        }
    }
}

fn parse_symbols(text: &str) -> Result<Vec<u64>> {
    #[derive(Deserialize)]
    struct ToyFile {
        symbols: Vec<u64>,
    }
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let f: ToyFile = serde_json::from_str(trimmed)
            .map_err(|e| Error::Invalid(format!("bad toy schedule JSON: {e}")))?;
        return Ok(f.symbols);
    }
    trimmed
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| Error::Invalid(format!("bad toy symbol {t:?}"))))
        .collect()
}
