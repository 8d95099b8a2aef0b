//! The assumption system of the circle-method argument as linear inequalities
//! between exponents of `M`, in exact rational arithmetic.
//!
//! Every quantity is written `X = M^x`. Implicit constants and `epsilon`
//! terms are dropped, so `A << B` becomes `a <= b` with slack `b - a`.
//! Exponents may depend polynomially on `n` (for `T = 292(n^2 - 1)`), so they
//! are stored as [`NPoly`].

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{decimal_string, rat_int, ratio, rational_string};
use crate::error::{LabError, Result};

/// Polynomial in `n` with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NPoly(Vec<BigRational>);

impl NPoly {
    pub fn constant(c: BigRational) -> NPoly {
        NPoly(vec![c]).trim()
    }

    pub fn int(c: i64) -> NPoly {
        NPoly::constant(rat_int(c))
    }

    pub fn frac(a: i64, b: i64) -> NPoly {
        NPoly::constant(ratio(a, b))
    }

    /// The polynomial `n`.
    pub fn n() -> NPoly {
        NPoly(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.0
    }

    fn trim(mut self) -> NPoly {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.0.len() {
            0 => Some(BigRational::zero()),
            1 => Some(self.0[0].clone()),
            _ => None,
        }
    }

    pub fn eval(&self, n: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * n + c)
    }

    pub fn eval_int(&self, n: i64) -> BigRational {
        self.eval(&rat_int(n))
    }

    pub fn scale(&self, c: &BigRational) -> NPoly {
        NPoly(self.0.iter().map(|v| v * c).collect()).trim()
    }

    pub fn add(&self, o: &NPoly) -> NPoly {
        let len = self.0.len().max(o.0.len());
        let z = BigRational::zero();
        NPoly((0..len).map(|i| self.0.get(i).unwrap_or(&z) + o.0.get(i).unwrap_or(&z)).collect()).trim()
    }

    pub fn sub(&self, o: &NPoly) -> NPoly {
        self.add(&o.scale(&-BigRational::one()))
    }

    pub fn mul(&self, o: &NPoly) -> NPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return NPoly::default();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        NPoly(out).trim()
    }

    /// `p(n0 + m)` as a polynomial in `m`.
    pub fn shift(&self, n0: i64) -> NPoly {
        let x = NPoly(vec![rat_int(n0), BigRational::one()]);
        self.0.iter().rev().fold(NPoly::default(), |acc, c| acc.mul(&x).add(&NPoly::constant(c.clone())))
    }

    /// Sufficient test for `p(n) > 0` (or `>= 0`) for every real `n >= n0`:
    /// all coefficients of `p(n0 + m)` are non-negative.
    pub fn nonnegative_from(&self, n0: i64, strict: bool) -> bool {
        let s = self.shift(n0);
        let base = s.0.first().cloned().unwrap_or_else(BigRational::zero);
        s.0.iter().all(|c| !c.is_negative()) && (!strict || base.is_positive())
    }
}

impl fmt::Display for NPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{}", rational_string(&a))?,
                _ => {
                    if !a.is_one() {
                        write!(f, "{}*", rational_string(&a))?;
                    }
                    write!(f, "n")?;
                    if i > 1 {
                        write!(f, "^{i}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl Serialize for NPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// How a tag's comparison is judged at `epsilon = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// Strict inequality: slack must be positive.
    Strict,
    /// `<=`: slack may vanish.
    NonStrict,
    /// `<<` or `>>` up to `M^epsilon`: slack must be positive unless the
    /// parameter was chosen to make this tag an equality.
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagStatus {
    Pass,
    /// Zero slack at a tag that fixes one of the parameters.
    Equality,
    Fail,
    /// The tag only involves `psi` and `psi = infinity`.
    Vacuous,
}

impl TagStatus {
    pub fn ok(self) -> bool {
        self != TagStatus::Fail
    }
}

/// Exponent assignment for one parameter choice.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentSystem {
    #[serde(rename = "T")]
    pub t: NPoly,
    pub n: NPoly,
    /// `None` means `psi = infinity`.
    #[serde(with = "crate::serde_rat_opt")]
    pub psi: Option<BigRational>,
    #[serde(with = "crate::serde_rat_opt")]
    pub delta: Option<BigRational>,
    /// Exponents of `u`, `P0`, `P`, `Q`.
    pub params: BTreeMap<&'static str, NPoly>,
    /// Exponent of `|z|` in the box construction.
    #[serde(with = "crate::serde_rat")]
    pub z: BigRational,
}

/// One inequality `lhs <= rhs` between exponents.
#[derive(Clone, Debug, Serialize)]
pub struct TagCheck {
    pub tag: &'static str,
    pub statement: &'static str,
    pub sense: Sense,
    pub psi_dependent: bool,
    pub equality_choice: bool,
    pub lhs: Option<NPoly>,
    pub rhs: Option<NPoly>,
    pub slack: Option<NPoly>,
    pub note: Option<String>,
}

/// A tag evaluated at a concrete `n`.
#[derive(Clone, Debug, Serialize)]
pub struct TagValue {
    pub tag: &'static str,
    #[serde(with = "crate::serde_rat_opt")]
    pub lhs: Option<BigRational>,
    #[serde(with = "crate::serde_rat_opt")]
    pub rhs: Option<BigRational>,
    #[serde(with = "crate::serde_rat_opt")]
    pub slack: Option<BigRational>,
    pub status: TagStatus,
}

impl TagValue {
    pub fn pass(&self) -> bool {
        self.status.ok()
    }
}

fn judge(sense: Sense, equality_choice: bool, slack: &BigRational) -> TagStatus {
    match (slack.is_positive(), slack.is_zero()) {
        (true, _) => TagStatus::Pass,
        (false, true) if sense == Sense::NonStrict => TagStatus::Pass,
        (false, true) if sense == Sense::Asymptotic && equality_choice => TagStatus::Equality,
        _ => TagStatus::Fail,
    }
}

impl TagCheck {
    pub fn at(&self, n: i64) -> TagValue {
        let (lhs, rhs, slack) = match (&self.lhs, &self.rhs) {
            (Some(l), Some(r)) => {
                let (l, r) = (l.eval_int(n), r.eval_int(n));
                let s = &r - &l;
                (Some(l), Some(r), Some(s))
            }
            _ => (None, None, None),
        };
        let status = match (&slack, &self.note) {
            (Some(s), _) => judge(self.sense, self.equality_choice, s),
            (None, Some(_)) => TagStatus::Fail,
            (None, None) => TagStatus::Vacuous,
        };
        TagValue {
            tag: self.tag,
            lhs,
            rhs,
            slack,
            status,
        }
    }

    /// Symbolic check for every `n >= n0`; `None` when the coefficient test is inconclusive.
    pub fn holds_from(&self, n0: i64) -> Option<bool> {
        match &self.slack {
            None => Some(self.note.is_none()),
            Some(s) => {
                let strict = self.sense == Sense::Strict || (self.sense == Sense::Asymptotic && !self.equality_choice);
                if s.nonnegative_from(n0, strict) {
                    Some(true)
                } else if s.degree() == 0 {
                    Some(false)
                } else {
                    None
                }
            }
        }
    }
}

/// `s = 2T + 17`.
fn s_of(t: &NPoly) -> NPoly {
    t.scale(&rat_int(2)).add(&NPoly::int(17))
}

/// `(28 s + 32) / 17`.
pub fn exp_u(t: &NPoly) -> NPoly {
    s_of(t).scale(&ratio(28, 17)).add(&NPoly::frac(32, 17))
}

/// `(50 s + 96) / 17`.
pub fn exp_p0(t: &NPoly) -> NPoly {
    s_of(t).scale(&ratio(50, 17)).add(&NPoly::frac(96, 17))
}

/// `(373 s + 640) / 34`.
pub fn exp_p(t: &NPoly) -> NPoly {
    s_of(t).scale(&ratio(373, 34)).add(&NPoly::frac(640, 34))
}

/// `11/9 exp_P - (2T + 16)/9`.
pub fn exp_q(t: &NPoly) -> NPoly {
    exp_p(t)
        .scale(&ratio(11, 9))
        .sub(&t.scale(&ratio(2, 9)).add(&NPoly::frac(16, 9)))
}

/// `T = 292 (n^2 - 1)`.
pub fn t_h14() -> NPoly {
    NPoly::n().mul(&NPoly::n()).sub(&NPoly::int(1)).scale(&rat_int(292))
}

/// The reference parameter choices for given `T`, `n`, `psi` and `delta`.
pub fn solve_parameters(t: NPoly, n: NPoly, psi: Option<BigRational>, delta: Option<BigRational>) -> Result<ExponentSystem> {
    if let Some(c) = t.as_constant() {
        if !c.is_positive() {
            return Err(LabError::InvalidInput("T must be positive".into()));
        }
    }
    if psi.as_ref().is_some_and(|p| !p.is_positive()) {
        return Err(LabError::InvalidInput("psi must be positive".into()));
    }
    let mut params = BTreeMap::new();
    params.insert("u", exp_u(&t));
    params.insert("P0", exp_p0(&t));
    params.insert("P", exp_p(&t));
    params.insert("Q", exp_q(&t));
    Ok(ExponentSystem {
        t,
        n,
        psi,
        delta,
        params,
        z: ratio(15, 4),
    })
}

/// Tags in the order of the assumption list.
pub const TAGS: [&str; 21] = [
    "M1", "M2", "M3", "S1", "S2", "S3", "S4", "I1", "m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9", "m10",
    "m11", "m12", "m13",
];

impl ExponentSystem {
    /// Concrete system with `n` fixed.
    pub fn concrete(t: i64, n: i64, psi: Option<BigRational>, delta: Option<BigRational>) -> Result<ExponentSystem> {
        solve_parameters(NPoly::int(t), NPoly::int(n), psi, delta)
    }

    pub fn param(&self, name: &str) -> &NPoly {
        &self.params[name]
    }

    /// Every tag as `lhs <= rhs`, plus the body-text encoding `S3*` of `S3`.
    pub fn checks(&self) -> Vec<TagCheck> {
        let (u, p0, p, q) = (self.param("u"), self.param("P0"), self.param("P"), self.param("Q"));
        let t = &self.t;
        let s = s_of(t);
        let c = |v: i64| NPoly::int(v);
        let r = |a: i64, b: i64| ratio(a, b);
        let psi = self.psi.as_ref().map(|v| NPoly::constant(v.clone()));
        let z2 = NPoly::constant(&self.z * rat_int(2));
        let mut out = Vec::new();
        let mut push = |tag, statement, sense, psi_dependent, equality_choice, pair: Option<(NPoly, NPoly)>, note: Option<String>| {
            let slack = pair.as_ref().map(|(l, r): &(NPoly, NPoly)| r.sub(l));
            let (lhs, rhs) = match pair {
                Some((l, r)) => (Some(l), Some(r)),
                None => (None, None),
            };
            out.push(TagCheck {
                tag,
                statement,
                sense,
                psi_dependent,
                equality_choice,
                lhs,
                rhs,
                slack,
                note,
            });
        };
        push("M1", "2 P0^2 u < P^3", Sense::Strict, false, false, Some((p0.scale(&rat_int(2)).add(u), p.scale(&rat_int(3)))), None);
        push(
            "M2",
            "u P0 M |z|^2 << P",
            Sense::Asymptotic,
            false,
            false,
            Some((u.add(p0).add(&c(1)).add(&z2), p.clone())),
            None,
        );
        push(
            "M3",
            "P0^3 u << P / M^(8.5+T)",
            Sense::Asymptotic,
            false,
            true,
            Some((p0.scale(&rat_int(3)).add(u), p.sub(t).sub(&NPoly::frac(17, 2)))),
            None,
        );
        // S1: 0 < 14/(14 - 6 delta) < 1 + 3 psi
        match (&self.psi, &self.delta) {
            (None, _) => push("S1", "0 < 14/(14-6 delta) < 1+3 psi", Sense::Strict, true, false, None, None),
            (Some(_), None) => push(
                "S1",
                "0 < 14/(14-6 delta) < 1+3 psi",
                Sense::Strict,
                true,
                false,
                None,
                Some("delta is required when psi is finite".into()),
            ),
            (Some(ps), Some(d)) => {
                let den = rat_int(14) - rat_int(6) * d;
                if den.is_positive() {
                    let lhs = NPoly::constant(rat_int(14) / den);
                    let rhs = NPoly::constant(rat_int(1) + rat_int(3) * ps);
                    push("S1", "0 < 14/(14-6 delta) < 1+3 psi", Sense::Strict, true, false, Some((lhs, rhs)), None);
                } else {
                    push(
                        "S1",
                        "0 < 14/(14-6 delta) < 1+3 psi",
                        Sense::Strict,
                        true,
                        false,
                        None,
                        Some("14 - 6 delta must be positive".into()),
                    );
                }
            }
        }
        let psi_pair = |f: &dyn Fn(&NPoly) -> (NPoly, NPoly)| psi.as_ref().map(f);
        push(
            "S2",
            "P0 <= M^(1+3 psi)",
            Sense::NonStrict,
            true,
            false,
            psi_pair(&|ps| (p0.clone(), c(1).add(&ps.scale(&rat_int(3))))),
            None,
        );
        push("S3", "psi >= 23", Sense::NonStrict, true, false, psi_pair(&|ps| (c(23), ps.clone())), None);
        // S4: P0 >> M^{(84 + 14 delta/(14 - 6 delta))/(delta - 2)}
        match (&self.psi, &self.delta) {
            (None, _) => push("S4", "P0 >> M^((84 + 14 delta/(14-6 delta))/(delta-2))", Sense::Asymptotic, true, false, None, None),
            (Some(_), None) => push(
                "S4",
                "P0 >> M^((84 + 14 delta/(14-6 delta))/(delta-2))",
                Sense::Asymptotic,
                true,
                false,
                None,
                Some("delta is required when psi is finite".into()),
            ),
            (Some(_), Some(d)) => {
                let den = rat_int(14) - rat_int(6) * d;
                let gap = d - rat_int(2);
                if den.is_positive() && gap.is_positive() {
                    let e = (rat_int(84) + rat_int(14) * d / den) / gap;
                    push(
                        "S4",
                        "P0 >> M^((84 + 14 delta/(14-6 delta))/(delta-2))",
                        Sense::Asymptotic,
                        true,
                        false,
                        Some((NPoly::constant(e), p0.clone())),
                        None,
                    );
                } else {
                    push(
                        "S4",
                        "P0 >> M^((84 + 14 delta/(14-6 delta))/(delta-2))",
                        Sense::Asymptotic,
                        true,
                        false,
                        None,
                        Some("delta must lie in (2, 7/3)".into()),
                    );
                }
            }
        }
        push("I1", "u^2 M^17 << P", Sense::Asymptotic, false, false, Some((u.scale(&rat_int(2)).add(&c(17)), p.clone())), None);
        push(
            "m1",
            "Q^2 << P^(n-3) / M^(8.5+T)",
            Sense::Asymptotic,
            false,
            false,
            Some((q.scale(&rat_int(2)), self.n.sub(&c(3)).mul(p).sub(t).sub(&NPoly::frac(17, 2)))),
            None,
        );
        push("m2", "M^(2T+17) << P^8", Sense::Asymptotic, false, false, Some((s.clone(), p.scale(&rat_int(8)))), None);
        push(
            "m3",
            "M^(2T+16) Q^2 << P^11",
            Sense::Asymptotic,
            false,
            false,
            Some((t.scale(&rat_int(2)).add(&c(16)).add(&q.scale(&rat_int(2))), p.scale(&rat_int(11)))),
            None,
        );
        push(
            "m4",
            "P^5 << M^(13 psi - 2T - 17)",
            Sense::Asymptotic,
            true,
            false,
            psi_pair(&|ps| (p.scale(&rat_int(5)), ps.scale(&rat_int(13)).sub(&s))),
            None,
        );
        push(
            "m5",
            "P^3 Q^2 << M^(14 psi - 2T - 16)",
            Sense::Asymptotic,
            true,
            false,
            psi_pair(&|ps| {
                (
                    p.scale(&rat_int(3)).add(&q.scale(&rat_int(2))),
                    ps.scale(&rat_int(14)).sub(&t.scale(&rat_int(2))).sub(&c(16)),
                )
            }),
            None,
        );
        push(
            "m6",
            "Q << P^(11/9) / M^((2T+16)/9)",
            Sense::Asymptotic,
            false,
            true,
            Some((q.clone(), p.scale(&r(11, 9)).sub(&t.scale(&r(2, 9))).sub(&NPoly::frac(16, 9)))),
            None,
        );
        push(
            "m7",
            "Q >> P^(15/13) M^((6T+64)/13)",
            Sense::Asymptotic,
            false,
            false,
            Some((p.scale(&r(15, 13)).add(&t.scale(&r(6, 13))).add(&NPoly::frac(64, 13)), q.clone())),
            None,
        );
        push(
            "m8",
            "P >> M^(91/9 (2T+17) + 440/27)",
            Sense::Asymptotic,
            false,
            false,
            Some((s.scale(&r(91, 9)).add(&NPoly::frac(440, 27)), p.clone())),
            None,
        );
        push(
            "m9",
            "P << M^(175 psi/116 - 91(2T+17)/116 - 130/116)",
            Sense::Asymptotic,
            true,
            false,
            psi_pair(&|ps| (p.clone(), ps.scale(&r(175, 116)).sub(&s.scale(&r(91, 116))).sub(&NPoly::frac(130, 116)))),
            None,
        );
        push(
            "m10",
            "P0 >> M^(50/17 (2T+17) + 96/17)",
            Sense::Asymptotic,
            false,
            true,
            Some((s.scale(&r(50, 17)).add(&NPoly::frac(96, 17)), p0.clone())),
            None,
        );
        push(
            "m11",
            "Q >> P^(12/11) M^((234(2T+17)+503)/187)",
            Sense::Asymptotic,
            false,
            false,
            Some((p.scale(&r(12, 11)).add(&s.scale(&r(234, 187))).add(&NPoly::frac(503, 187)), q.clone())),
            None,
        );
        push(
            "m12",
            "Q >> P^3 / M^(7 psi/2 - (117(2T+17)+192)/17)",
            Sense::Asymptotic,
            true,
            false,
            psi_pair(&|ps| {
                (
                    p.scale(&rat_int(3)).sub(&ps.scale(&r(7, 2))).add(&s.scale(&r(117, 17))).add(&NPoly::frac(192, 17)),
                    q.clone(),
                )
            }),
            None,
        );
        push(
            "m13",
            "u >> M^((28(2T+17)+32)/17)",
            Sense::Asymptotic,
            false,
            true,
            Some((s.scale(&r(28, 17)).add(&NPoly::frac(32, 17)), u.clone())),
            None,
        );
        push("S3*", "5n = 70 <= 1 + 3 psi", Sense::NonStrict, true, false, psi_pair(&|ps| (c(70), c(1).add(&ps.scale(&rat_int(3))))), None);
        out
    }

    /// Evaluate every tag at a concrete `n` (ignored when `n` is already fixed).
    pub fn report(&self, n: i64) -> SystemReport {
        let n = self.n.as_constant().map(|c| c.to_integer().try_into().unwrap_or(n)).unwrap_or(n);
        let tags: Vec<TagValue> = self.checks().iter().map(|c| c.at(n)).collect();
        let violated = tags
            .iter()
            .filter(|t| TAGS.contains(&t.tag) && !t.pass())
            .map(|t| t.tag.to_string())
            .collect();
        let s3 = tags.iter().find(|t| t.tag == "S3").and_then(|t| t.slack.clone());
        let s3b = tags.iter().find(|t| t.tag == "S3*").and_then(|t| t.slack.clone());
        let s3_encodings_agree = match (s3, s3b) {
            (Some(a), Some(b)) => b == a * rat_int(3),
            (None, None) => true,
            _ => false,
        };
        SystemReport {
            n,
            params: self.params.iter().map(|(k, v)| (*k, Exponent::new(v.eval_int(n)))).collect(),
            tags,
            violated,
            s3_encodings_agree,
        }
    }
}

/// An exact exponent with its 2-decimal rendering.
#[derive(Clone, Debug, Serialize)]
pub struct Exponent {
    #[serde(with = "crate::serde_rat")]
    pub exact: BigRational,
    pub decimal: String,
}

impl Exponent {
    pub fn new(exact: BigRational) -> Exponent {
        let decimal = decimal_string(&exact, 2);
        Exponent { exact, decimal }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SystemReport {
    pub n: i64,
    pub params: BTreeMap<&'static str, Exponent>,
    pub tags: Vec<TagValue>,
    /// Failing tags among the 21 of the assumption list.
    pub violated: Vec<String>,
    /// `S3` and its body-text form `S3*` are the same condition.
    pub s3_encodings_agree: bool,
}

impl SystemReport {
    pub fn all_pass(&self) -> bool {
        self.violated.is_empty()
    }

    pub fn tag(&self, name: &str) -> Option<&TagValue> {
        self.tags.iter().find(|t| t.tag == name)
    }
}

/// Minimal `psi` for one tag, or `None` if the tag does not constrain `psi` from below.
#[derive(Clone, Debug, Serialize)]
pub struct PsiBound {
    pub tag: &'static str,
    pub bound: Exponent,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiRequirement {
    /// `None` when `psi = infinity` makes every requirement vacuous.
    pub psi_min: Option<Exponent>,
    pub binding: Option<&'static str>,
    pub bounds: Vec<PsiBound>,
    /// `97 + 91 psi_min`, the height bound when the form is not psi-good.
    pub fallback_exponent: Option<Exponent>,
    pub fallback_ceiling: Option<String>,
}

/// Lower bounds on `psi` from each `psi`-dependent tag at the system's exponents.
pub fn psi_requirement(sys: &ExponentSystem, n: i64) -> PsiRequirement {
    let n = sys.n.as_constant().map(|c| c.to_integer().try_into().unwrap_or(n)).unwrap_or(n);
    let ev = |name: &str| sys.param(name).eval_int(n);
    let (p0, p, q) = (ev("P0"), ev("P"), ev("Q"));
    let t = sys.t.eval_int(n);
    let s = rat_int(2) * &t + rat_int(17);
    let mut bounds = vec![
        ("m9", (rat_int(116) * &p + rat_int(91) * &s + rat_int(130)) / rat_int(175)),
        ("m4", (rat_int(5) * &p + &s) / rat_int(13)),
        ("m5", (rat_int(3) * &p + rat_int(2) * &q + rat_int(2) * &t + rat_int(16)) / rat_int(14)),
        (
            "m12",
            ratio(2, 7) * (rat_int(3) * &p - &q + (rat_int(117) * &s + rat_int(192)) / rat_int(17)),
        ),
        ("S2", (&p0 - rat_int(1)) / rat_int(3)),
        ("S3", rat_int(23)),
    ];
    if let Some(d) = &sys.delta {
        let den = rat_int(14) - rat_int(6) * d;
        if den.is_positive() {
            bounds.push(("S1", (rat_int(14) / den - rat_int(1)) / rat_int(3)));
        }
    }
    let (binding, max) = bounds
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1))
        .map(|(t, v)| (*t, v.clone()))
        .expect("non-empty");
    let bounds: Vec<PsiBound> = bounds
        .into_iter()
        .map(|(tag, v)| PsiBound { tag, bound: Exponent::new(v) })
        .collect();
    if sys.psi.is_none() {
        return PsiRequirement {
            psi_min: None,
            binding: None,
            bounds,
            fallback_exponent: None,
            fallback_ceiling: None,
        };
    }
    let fallback = rat_int(97) + rat_int(91) * &max;
    PsiRequirement {
        psi_min: Some(Exponent::new(max)),
        binding: Some(binding),
        bounds,
        fallback_ceiling: Some(fallback.ceil().to_integer().to_string()),
        fallback_exponent: Some(Exponent::new(fallback)),
    }
}

/// `97 + 91 psi` for a chosen `psi`.
pub fn fallback_exponent(psi: &BigRational) -> BigRational {
    rat_int(97) + rat_int(91) * psi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `R >= R0`: `phi_2 <= phi_0 <= phi_1`, so every `phi` is covered.
    Covered,
    /// `R1 <= R < R0`: the window between `phi_1` and `phi_2` uses Weyl's inequality.
    WeylWindow,
    /// `R < R1`: the minor-arc condition `phi >= u/P^3` is needed as well.
    MinorArc,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdRow {
    #[serde(with = "crate::serde_rat")]
    pub r: BigRational,
    #[serde(with = "crate::serde_rat")]
    pub phi0: BigRational,
    #[serde(with = "crate::serde_rat")]
    pub phi1: BigRational,
    #[serde(with = "crate::serde_rat")]
    pub phi2: BigRational,
    pub regime: Regime,
    /// `phi_2 <= phi_0 <= phi_1` (when `R >= R0`) or the reverse order (when `R <= R0`).
    pub ordering_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdProfile {
    pub r0: Exponent,
    pub r1: Exponent,
    /// `R1` equals the exponent of `P0` chosen for `m10`.
    pub r1_matches_p0: bool,
    /// Coefficients of `R` in `phi_1 - phi_0` and `phi_0 - phi_2`; both positive.
    #[serde(with = "crate::serde_rat")]
    pub slope_10: BigRational,
    #[serde(with = "crate::serde_rat")]
    pub slope_02: BigRational,
    pub rows: Vec<ThresholdRow>,
}

impl ThresholdProfile {
    pub const CSV_HEADER: &'static str = "R,phi0,phi1,phi2,regime,ordering";

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:?},{}\n",
                decimal_string(&r.r, 2),
                decimal_string(&r.phi0, 2),
                decimal_string(&r.phi1, 2),
                decimal_string(&r.phi2, 2),
                r.regime,
                r.ordering_holds
            ));
        }
        out
    }
}

/// `phi_0 = -(4r + 31p + 2T + 30)/15`.
pub fn phi0(r: &BigRational, p: &BigRational, t: &BigRational) -> BigRational {
    -(rat_int(4) * r + rat_int(31) * p + rat_int(2) * t + rat_int(30)) / rat_int(15)
}

/// `phi_1 = 9r/10 - 3p - (2T + 20.2)`.
pub fn phi1(r: &BigRational, p: &BigRational, t: &BigRational) -> BigRational {
    ratio(9, 10) * r - rat_int(3) * p - rat_int(2) * t - ratio(101, 5)
}

/// `phi_2 = 7(2T+17)/25 - 7r/10 - 43p/25`.
pub fn phi2(r: &BigRational, p: &BigRational, t: &BigRational) -> BigRational {
    ratio(7, 25) * (rat_int(2) * t + rat_int(17)) - ratio(7, 10) * r - ratio(43, 25) * p
}

/// Exponent table for `phi_0, phi_1, phi_2` over a grid of `R` exponents.
pub fn threshold_profile(sys: &ExponentSystem, n: i64, grid: &[BigRational]) -> ThresholdProfile {
    let p = sys.param("P").eval_int(n);
    let p0 = sys.param("P0").eval_int(n);
    let t = sys.t.eval_int(n);
    let s = rat_int(2) * &t + rat_int(17);
    let r0 = ratio(4, 5) * &p + ratio(4, 5) * &s + rat_int(2);
    let r1 = ratio(50, 17) * &s + ratio(96, 17);
    let zero = BigRational::zero();
    let slope_10 = (phi1(&rat_int(1), &p, &t) - phi0(&rat_int(1), &p, &t)) - (phi1(&zero, &p, &t) - phi0(&zero, &p, &t));
    let slope_02 = (phi0(&rat_int(1), &p, &t) - phi2(&rat_int(1), &p, &t)) - (phi0(&zero, &p, &t) - phi2(&zero, &p, &t));
    let rows = grid
        .iter()
        .map(|r| {
            let (a, b, c) = (phi0(r, &p, &t), phi1(r, &p, &t), phi2(r, &p, &t));
            let regime = if r >= &r0 {
                Regime::Covered
            } else if r >= &r1 {
                Regime::WeylWindow
            } else {
                Regime::MinorArc
            };
            let ordering_holds = if r >= &r0 { c <= a && a <= b } else { b <= a && a <= c };
            ThresholdRow {
                r: r.clone(),
                phi0: a,
                phi1: b,
                phi2: c,
                regime,
                ordering_holds,
            }
        })
        .collect();
    ThresholdProfile {
        r1_matches_p0: r1 == p0,
        r0: Exponent::new(r0),
        r1: Exponent::new(r1),
        slope_10,
        slope_02,
        rows,
    }
}

/// Which bound covers a given `phi` exponent at `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiRegime {
    /// `phi <= min(phi_0, phi_1)`.
    Small,
    /// `phi >= max(phi_0, phi_2)`.
    Large,
    Weyl,
}

pub fn classify_phi(row: &ThresholdRow, phi: &BigRational) -> PhiRegime {
    let small = row.phi0.clone().min(row.phi1.clone());
    let large = row.phi0.clone().max(row.phi2.clone());
    if phi <= &small {
        PhiRegime::Small
    } else if phi >= &large {
        PhiRegime::Large
    } else {
        PhiRegime::Weyl
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheck {
    /// `exp_P` for `T = 292(n^2 - 1)`.
    pub exp_p: NPoly,
    /// `6407 n^2 - exp_P`.
    pub slack: NPoly,
    pub n_from: i64,
    pub n_to: i64,
    /// Exact check at every `n` in `n_from..=n_to`.
    pub holds_on_range: bool,
    /// Coefficient test for every real `n >= n_from`.
    pub holds_from: bool,
    pub first_failure: Option<i64>,
}

/// `exp_P(T = 292(n^2 - 1)) <= 6407 n^2`.
pub fn theorem_h14(n_from: i64, n_to: i64) -> TheoremCheck {
    let e = exp_p(&t_h14());
    let bound = NPoly::n().mul(&NPoly::n()).scale(&rat_int(6407));
    let slack = bound.sub(&e);
    let first_failure = (n_from..=n_to).find(|&n| slack.eval_int(n).is_negative());
    TheoremCheck {
        holds_from: slack.nonnegative_from(n_from, false),
        exp_p: e,
        slack,
        n_from,
        n_to,
        holds_on_range: first_failure.is_none(),
        first_failure,
    }
}

/// Smallest integer `>= x`, as a string.
pub fn ceiling(x: &BigRational) -> String {
    x.ceil().to_integer().to_string()
}
