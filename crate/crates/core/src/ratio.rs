//! Text encoding of exact rationals as `numerator/denominator`.

use num_rational::Ratio;
use serde::{de, Deserialize, Deserializer, Serializer};

pub(crate) fn to_text(value: &Ratio<i64>) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub(crate) fn parse(text: &str) -> Option<Ratio<i64>> {
    let text = text.trim();
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().ok()?, d.trim().parse::<i64>().ok()?),
        None => (text.parse::<i64>().ok()?, 1),
    };
    if denom == 0 {
        return None;
    }
    Some(Ratio::new(numer, denom))
}

pub(crate) fn to_f64(value: &Ratio<i64>) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

pub(crate) fn serialize<S: Serializer>(value: &Ratio<i64>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_text(value))
}

pub(crate) fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio<i64>, D::Error> {
    let text = String::deserialize(d)?;
    parse(&text).ok_or_else(|| de::Error::custom(format!("invalid rational `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let r = Ratio::new(6, 18);
        assert_eq!(to_text(&r), "1/3");
        assert_eq!(parse("1/3"), Some(r));
        assert_eq!(parse(" 0 "), Some(Ratio::from_integer(0)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(parse("x/2"), None);
    }
}
