//! Config files, value parsing and exit-code classification.

use std::fmt;
use std::path::Path;
use std::process::ExitCode;
use std::str::FromStr;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

/// A failed job. `Invalid` exits with 2, `Numerical` with 3.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
}

impl Failure {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Failure::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Failure::Numerical(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Invalid(_) => ExitCode::from(2),
            Failure::Numerical(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) => write!(f, "invalid input: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<tzlab::Error> for Failure {
    fn from(e: tzlab::Error) -> Self {
        if e.is_validation() || matches!(e, tzlab::Error::Io(_) | tzlab::Error::Json(_)) {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;

/// Overlays the flags that were given onto the config file; flags win.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> Outcome<T> {
    let mut base = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let Value::Object(map) = &mut base else {
        return Err(Failure::invalid("config must be a JSON object"));
    };
    if let Value::Object(over) = serde_json::to_value(flags)? {
        map.extend(over);
    }
    serde_json::from_value(base).map_err(|e| Failure::invalid(format!("config: {e}")))
}

pub fn is_false(b: &bool) -> bool {
    !*b
}

/// A complex number given as `"a+bi"`, a bare real, or `[re, im]` in JSON.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexArg(pub Complex64);

impl FromStr for ComplexArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let t = t.replace('j', "i");
        Complex64::from_str(&t)
            .ok()
            .filter(|z| z.re.is_finite() && z.im.is_finite())
            .map(ComplexArg)
            .ok_or_else(|| format!("cannot parse complex number {s:?} (expected e.g. 0+6.28i)"))
    }
}

impl Serialize for ComplexArg {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexArg {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Real(f64),
            Pair([f64; 2]),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Real(re) => Ok(ComplexArg(Complex64::new(re, 0.0))),
            Repr::Pair([re, im]) => Ok(ComplexArg(Complex64::new(re, im))),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn check_resolution(n: usize) -> Outcome<usize> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Failure::invalid(format!("resolution must be a power of two >= 16, got {n}")));
    }
    Ok(n)
}

pub fn check_tolerance(name: &str, tol: f64) -> Outcome<f64> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::invalid(format!("{name} must be positive, got {tol}")));
    }
    Ok(tol)
}

pub fn required<T>(value: Option<T>, name: &str) -> Outcome<T> {
    value.ok_or_else(|| Failure::invalid(format!("missing --{name} (flag or config key {:?})", name.replace('-', "_"))))
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::invalid(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::invalid(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
