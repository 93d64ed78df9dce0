//! Fixed-precision float formatting for CSV and JSON output.

use serde::Serializer;
use serde_json::value::RawValue;

/// Scientific notation with 17 significant digits.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `f17` inside JSON; non-finite values become `null`.
pub fn ser_f17<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(f17(*x)).map_err(serde::ser::Error::custom)?;
    s.serialize_some(&raw)
}

pub fn ser_f17_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f17(v, s),
        None => s.serialize_none(),
    }
}

pub fn ser_f17_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        let raw = if x.is_finite() {
            Some(RawValue::from_string(f17(*x)).map_err(serde::ser::Error::custom)?)
        } else {
            None
        };
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> crate::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Row {
        #[serde(serialize_with = "ser_f17")]
        x: f64,
        #[serde(serialize_with = "ser_f17")]
        y: f64,
        #[serde(serialize_with = "ser_f17_vec")]
        z: Vec<f64>,
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            let s = f17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(f17(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn json_floats() {
        let r = Row {
            x: 0.25,
            y: f64::NAN,
            z: vec![1.0, f64::INFINITY],
        };
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"x":2.5000000000000000e-1,"y":null,"z":[1.0000000000000000e0,null]}"#
        );
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.25));
    }
}
