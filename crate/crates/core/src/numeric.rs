//! Exact rational helpers: decimal parsing and formatting.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

/// Exact rational number used for every score, distance, and penalty value.
pub type Rational = Ratio<i128>;

pub fn rational(numer: i128, denom: i128) -> Rational {
    Rational::new(numer, denom)
}

pub fn int(value: i128) -> Rational {
    Rational::from_integer(value)
}

/// Parses `"4.5"`, `"-3"`, `".25"` or `"1/2"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: i128 = n.trim().parse().ok()?;
        let d: i128 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (negative, body) = match text.as_bytes()[0] {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 18 {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i128.pow(frac.len() as u32);
    let value = Rational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Exact decimal rendering when the expansion terminates within `max_places`
/// digits; otherwise rounded to `max_places`.
pub fn format_decimal(value: &Rational, max_places: u32) -> String {
    let mut denom = *value.denom();
    while denom % 2 == 0 {
        denom /= 2;
    }
    while denom % 5 == 0 {
        denom /= 5;
    }
    if denom == 1 {
        for places in 0..=max_places {
            let scaled = value * int(10i128.pow(places));
            if scaled.is_integer() {
                return render_scaled(scaled.to_integer(), places);
            }
        }
    }
    format_rounded(value, max_places)
}

/// Rounds half away from zero to `places` decimals, keeping trailing zeros.
pub fn format_rounded(value: &Rational, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = value * int(scale);
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let twice = r.abs() * 2;
    let rounded = if twice >= *scaled.denom() {
        q + scaled.numer().signum()
    } else {
        q
    };
    render_scaled(rounded, places)
}

fn render_scaled(scaled: i128, places: u32) -> String {
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    if places == 0 {
        return format!("{sign}{abs}");
    }
    let scale = 10u128.pow(places);
    format!(
        "{sign}{}.{:0width$}",
        abs / scale,
        abs % scale,
        width = places as usize
    )
}

/// Lossy conversion used only for JSON presentation.
pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i128 {
    values
        .into_iter()
        .fold(1i128, |acc, v| if v.is_zero() { acc } else { acc.lcm(v.denom()) })
}

/// Serde helpers rendering rationals exactly as strings.
pub mod exact {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use super::Rational;
    use crate::model::format_exact;

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_exact(value))
    }

    pub fn vec<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_exact(v))?;
        }
        seq.end()
    }
}

/// Presentation value: at most four decimals, as a plain JSON number.
pub fn presentation(value: &Rational) -> f64 {
    format_decimal(value, 4).parse().expect("formatted decimal parses")
}

/// Serde helpers rendering rationals as numbers with at most four decimals.
pub mod rounded {
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    use super::{presentation, Rational};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(presentation(value))
    }

    pub fn option<S: Serializer>(value: &Option<Rational>, serializer: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_f64(presentation(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn vec<S: Serializer>(values: &[Rational], serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&presentation(v))?;
        }
        seq.end()
    }
}
