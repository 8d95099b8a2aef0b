//! JSON polynomial format.
//!
//! ```json
//! {"n": 3, "cubic": [[1,1,1,1], [2,2,2,1], [3,3,3,-1]], "quad": [[1,2,5]], "lin": [0,0,1], "const": -2}
//! ```
//!
//! Indices are 1-based. By default `cubic` lists tensor entries `c_ijk` with
//! `i <= j <= k` and `quad` lists monomial coefficients of `x_i x_j`. With
//! `"form": "monomial"` the cubic entries are monomial coefficients instead and
//! the polynomial goes through [`symmetrize`]. Coefficients may be JSON
//! integers or decimal strings for values beyond 64 bits.

use num_bigint::BigInt;
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::error::{LabError, Result};
use crate::poly::{symmetrize, CubicPolynomial, Symmetrized};

fn field_err(field: &str, msg: impl std::fmt::Display) -> LabError {
    LabError::InvalidInput(format!("field `{field}`: {msg}"))
}

fn parse_int(v: &Value, field: &str) -> Result<BigInt> {
    match v {
        Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = num.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(field_err(field, format!("{num} is not an integer")))
            }
        }
        Value::String(s) => s
            .trim()
            .parse::<BigInt>()
            .map_err(|_| field_err(field, format!("{s:?} is not an integer"))),
        other => Err(field_err(field, format!("expected integer, found {other}"))),
    }
}

fn parse_index(v: &Value, n: usize, field: &str) -> Result<usize> {
    let i = v
        .as_u64()
        .ok_or_else(|| field_err(field, format!("index {v} is not a positive integer")))?;
    if i == 0 || i as usize > n {
        return Err(field_err(field, format!("index {i} outside 1..={n}")));
    }
    Ok(i as usize - 1)
}

fn entries<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a [Value]> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(&[]),
        Some(Value::Array(a)) => Ok(a),
        Some(other) => Err(field_err(key, format!("expected array, found {other}"))),
    }
}

/// Parse a polynomial. The returned scale is 1 unless monomial input had to be
/// multiplied by 6.
pub fn parse_polynomial(text: &str) -> Result<Symmetrized> {
    let v: Value = serde_json::from_str(text).map_err(|e| LabError::InvalidInput(format!("malformed JSON: {e}")))?;
    polynomial_from_value(&v)
}

pub fn polynomial_from_value(v: &Value) -> Result<Symmetrized> {
    let obj = v
        .as_object()
        .ok_or_else(|| LabError::InvalidInput("polynomial must be a JSON object".into()))?;
    let n = obj
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| field_err("n", "missing or not a positive integer"))? as usize;
    if n == 0 {
        return Err(field_err("n", "must be at least 1"));
    }
    let monomial = match obj.get("form").map(|f| f.as_str()) {
        None => false,
        Some(Some("tensor")) => false,
        Some(Some("monomial")) => true,
        Some(_) => return Err(field_err("form", "expected \"tensor\" or \"monomial\"")),
    };
    let mut cubic = Vec::new();
    for (t, e) in entries(obj, "cubic")?.iter().enumerate() {
        let f = format!("cubic[{t}]");
        let a = e.as_array().filter(|a| a.len() == 4).ok_or_else(|| field_err(&f, "expected [i, j, k, coeff]"))?;
        let (i, j, k) = (parse_index(&a[0], n, &f)?, parse_index(&a[1], n, &f)?, parse_index(&a[2], n, &f)?);
        if !monomial && !(i <= j && j <= k) {
            return Err(field_err(&f, "tensor entries must satisfy i <= j <= k"));
        }
        cubic.push(((i, j, k), parse_int(&a[3], &f)?));
    }
    let mut quad = Vec::new();
    for (t, e) in entries(obj, "quad")?.iter().enumerate() {
        let f = format!("quad[{t}]");
        let a = e.as_array().filter(|a| a.len() == 3).ok_or_else(|| field_err(&f, "expected [i, j, coeff]"))?;
        quad.push(((parse_index(&a[0], n, &f)?, parse_index(&a[1], n, &f)?), parse_int(&a[2], &f)?));
    }
    let lin_vals = entries(obj, "lin")?;
    if !lin_vals.is_empty() && lin_vals.len() != n {
        return Err(field_err("lin", format!("expected {n} coefficients, found {}", lin_vals.len())));
    }
    let lin = lin_vals
        .iter()
        .enumerate()
        .map(|(t, x)| parse_int(x, &format!("lin[{t}]")))
        .collect::<Result<Vec<_>>>()?;
    let constant = match obj.get("const") {
        None | Some(Value::Null) => BigInt::zero(),
        Some(c) => parse_int(c, "const")?,
    };
    if monomial {
        let mut monos: Vec<(Vec<usize>, BigInt)> = cubic.into_iter().map(|((i, j, k), c)| (vec![i, j, k], c)).collect();
        monos.extend(quad.into_iter().map(|((i, j), c)| (vec![i, j], c)));
        monos.extend(lin.into_iter().enumerate().map(|(i, c)| (vec![i], c)));
        monos.push((vec![], constant));
        symmetrize(n, &monos)
    } else {
        Ok(Symmetrized {
            poly: CubicPolynomial::from_parts(n, &cubic, &quad, &lin, constant)?,
            scale: 1,
        })
    }
}

fn int_value(v: &BigInt) -> Value {
    match i64::try_from(v) {
        Ok(i) => json!(i),
        Err(_) => json!(v.to_string()),
    }
}

/// Tensor-form JSON for a polynomial; round-trips through [`parse_polynomial`].
pub fn polynomial_to_value(p: &CubicPolynomial) -> Value {
    let cubic: Vec<Value> = p
        .cubic_entries()
        .filter(|(_, c)| !c.is_zero())
        .map(|((i, j, k), c)| json!([i + 1, j + 1, k + 1, int_value(c)]))
        .collect();
    let quad: Vec<Value> = p
        .quad_entries()
        .filter(|(_, c)| !c.is_zero())
        .map(|((i, j), c)| json!([i + 1, j + 1, int_value(c)]))
        .collect();
    let mut obj = Map::new();
    obj.insert("n".into(), json!(p.n()));
    obj.insert("cubic".into(), Value::Array(cubic));
    if !quad.is_empty() {
        obj.insert("quad".into(), Value::Array(quad));
    }
    if p.lin().iter().any(|l| !l.is_zero()) {
        obj.insert("lin".into(), Value::Array(p.lin().iter().map(int_value).collect()));
    }
    if !p.constant().is_zero() {
        obj.insert("const".into(), int_value(p.constant()));
    }
    Value::Object(obj)
}

pub fn polynomial_to_json(p: &CubicPolynomial) -> String {
    serde_json::to_string(&polynomial_to_value(p)).expect("serializable")
}
