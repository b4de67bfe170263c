//! Run configuration for the CLI: JSON in, validated parameter sets out.
//!
//! Complex numbers are accepted either as {"re": x, "im": y} objects or as
//! bare decimals (number or decimal string, taken as real); they are always
//! written back as re/im objects. Argument points carry a "kind" tag
//! selecting the plain or hatted column of the function family.

use crate::biorth::Arg;
use crate::kernel::Nome;
use crate::selberg::ParameterSet;
use crate::{rel_diff, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A complex scalar with flexible JSON input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CNum(pub Complex64);

impl CNum {
    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl From<Complex64> for CNum {
    fn from(z: Complex64) -> Self {
        CNum(z)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    fn value(&self) -> std::result::Result<f64, String> {
        match self {
            NumOrStr::Num(x) => Ok(*x),
            NumOrStr::Str(s) => s
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("cannot parse decimal string {s:?}: {e}")),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CNumRepr {
    Pair {
        re: NumOrStr,
        #[serde(default)]
        im: Option<NumOrStr>,
    },
    Scalar(NumOrStr),
}

impl<'de> Deserialize<'de> for CNum {
    fn deserialize<D>(d: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        use serde::de::Error as DeError;
        let repr = CNumRepr::deserialize(d)?;
        let z = match repr {
            CNumRepr::Pair { re, im } => Complex64::new(
                re.value().map_err(DeError::custom)?,
                im.map_or(Ok(0.0), |x| x.value()).map_err(DeError::custom)?,
            ),
            CNumRepr::Scalar(x) => Complex64::new(x.value().map_err(DeError::custom)?, 0.0),
        };
        Ok(CNum(z))
    }
}

impl Serialize for CNum {
    fn serialize<S>(&self, s: S) -> std::result::Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CNum", 2)?;
        st.serialize_field("re", &self.0.re)?;
        st.serialize_field("im", &self.0.im)?;
        st.end()
    }
}

/// The kind tag of an argument point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgKind {
    Plain,
    Hatted,
}

/// A tagged argument point for the function family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub kind: ArgKind,
    pub value: CNum,
}

impl ArgSpec {
    pub fn arg(&self) -> Arg {
        match self.kind {
            ArgKind::Plain => Arg::Plain(self.value.0),
            ArgKind::Hatted => Arg::Hatted(self.value.0),
        }
    }
}

/// Quadrature overrides; absent fields keep the per-dimension defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct QuadratureConfig {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<f64>,
    #[serde(rename = "max_N", skip_serializing_if = "Option::is_none")]
    pub max_n: Option<usize>,
}

/// A full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub p: CNum,
    pub q: CNum,
    pub m: usize,
    pub n: usize,
    pub u: Vec<CNum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<ArgSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<ArgSpec>,
    #[serde(rename = "v'", skip_serializing_if = "Option::is_none")]
    pub vp: Option<ArgSpec>,
    #[serde(rename = "w'", skip_serializing_if = "Option::is_none")]
    pub wp: Option<ArgSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn p_nome(&self) -> Result<Nome> {
        Nome::new(self.p.0)
    }

    pub fn q_nome(&self) -> Result<Nome> {
        Nome::new(self.q.0)
    }

    fn u_values(&self) -> Vec<Complex64> {
        self.u.iter().map(|c| c.0).collect()
    }

    /// Balancing defect: relative distance of q^{2n-2} prod u from
    /// (pq)^{m+1}.
    pub fn balance_defect(&self) -> f64 {
        let prod: Complex64 = self.u.iter().map(|c| c.0).product();
        let lhs = self.q.0.powi(2 * self.n as i32 - 2) * prod;
        let rhs = (self.p.0 * self.q.0).powi(self.m as i32 + 1);
        rel_diff(lhs, rhs)
    }

    /// The validated, balanced parameter set.
    pub fn parameter_set(&self) -> Result<ParameterSet> {
        let p = self.p_nome().map_err(|e| Error::Config(e.to_string()))?;
        let q = self.q_nome().map_err(|e| Error::Config(e.to_string()))?;
        let expect = 2 * self.m + 6;
        if self.u.len() != expect {
            return Err(Error::Config(format!(
                "order {} needs {} parameters, got {} (run autobalance to solve the last one)",
                self.m,
                expect,
                self.u.len()
            )));
        }
        if self.balance_defect() > 1e-10 {
            return Err(Error::Config(format!(
                "balancing violated: q^(2n-2) prod u differs from (pq)^(m+1) by {:e}",
                self.balance_defect()
            )));
        }
        ParameterSet::new(p, q, self.m, self.n, self.u_values())
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Solve the last density parameter from the balancing condition. The
    /// config must supply exactly 2m+5 parameters.
    pub fn autobalanced(&self) -> Result<RunConfig> {
        let expect = 2 * self.m + 5;
        if self.u.len() != expect {
            return Err(Error::Config(format!(
                "autobalance needs {} parameters for order {}, got {}",
                expect,
                self.m,
                self.u.len()
            )));
        }
        let prod: Complex64 = self.u.iter().map(|c| c.0).product();
        let last = (self.p.0 * self.q.0).powi(self.m as i32 + 1)
            / (self.q.0.powi(2 * self.n as i32 - 2) * prod);
        let modulus = last.norm();
        if !(0.0 < modulus && modulus < 1.0) {
            return Err(Error::Config(format!(
                "solved parameter has modulus {modulus}, outside (0, 1)"
            )));
        }
        let mut out = self.clone();
        out.u.push(CNum(last));
        Ok(out)
    }

    /// Per-suite tolerance with a fallback default.
    pub fn tolerance(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    /// The config as a JSON value, for echoing into reports.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json(u: &str) -> String {
        format!(
            r#"{{"p": "0.05", "q": {{"re": 0.08}}, "m": 0, "n": 1, "u": {u},
                "v": {{"kind": "plain", "value": {{"re": 0.5, "im": 0.1}}}},
                "seed": 7}}"#
        )
    }

    #[test]
    fn parses_mixed_complex_forms() {
        let cfg = RunConfig::from_json(&base_json("[0.3, \"0.35\", {\"re\": 0.4, \"im\": 0.0}]"))
            .unwrap();
        assert_eq!(cfg.p.0, Complex64::new(0.05, 0.0));
        assert_eq!(cfg.q.0, Complex64::new(0.08, 0.0));
        assert_eq!(cfg.u[1].0, Complex64::new(0.35, 0.0));
        assert_eq!(cfg.v.unwrap().arg(), Arg::Plain(Complex64::new(0.5, 0.1)));
        assert_eq!(cfg.seed(), 7);
    }

    #[test]
    fn autobalance_solves_last_parameter() {
        let cfg =
            RunConfig::from_json(&base_json("[0.30, 0.35, 0.40, 0.45, 0.50]")).unwrap();
        assert!(cfg.parameter_set().is_err());
        let solved = cfg.autobalanced().unwrap();
        assert_eq!(solved.u.len(), 6);
        assert!(solved.balance_defect() < 1e-14);
        assert!(solved.parameter_set().is_ok());
    }

    #[test]
    fn autobalance_rejects_invalid_modulus() {
        // Product so small the solved parameter leaves the unit disc.
        let cfg = RunConfig::from_json(&base_json("[0.01, 0.01, 0.01, 0.01, 0.01]")).unwrap();
        let err = cfg.autobalanced().unwrap_err();
        assert!(err.to_string().contains("modulus"));
    }

    #[test]
    fn unbalanced_set_is_a_config_error() {
        let cfg = RunConfig::from_json(&base_json(
            "[0.30, 0.35, 0.40, 0.45, 0.50, 0.50]",
        ))
        .unwrap();
        let err = cfg.parameter_set().unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("balancing violated"));
    }

    #[test]
    fn echo_roundtrips() {
        let cfg =
            RunConfig::from_json(&base_json("[0.30, 0.35, 0.40, 0.45, 0.50]")).unwrap();
        let echoed = cfg.echo();
        let back: RunConfig = serde_json::from_value(echoed.clone()).unwrap();
        assert_eq!(back.echo(), echoed);
    }
}
