//! TOML run configuration: model keys at the top level, one table per
//! subcommand, `[run]` for seed and sample count.

use std::path::Path;

use toml::{Table, Value};
use wegner_core::lattice::Site;
use wegner_core::model::{BoundaryCondition, ModelConfig, SingleSite};
use wegner_core::toeplitz::ConvolutionVector;
use wegner_core::{LabError, Result};

fn config_error(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

/// Effective configuration after file parse and overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    table: Table,
}

impl RunConfig {
    pub fn from_table(table: Table) -> Self {
        RunConfig { table }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e| config_error(format!("cannot parse config: {e}")))?;
        Ok(RunConfig { table })
    }

    /// Reads a TOML file, or the `config` field of a run manifest when the
    /// file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| config_error(format!("cannot parse manifest {}: {e}", path.display())))?;
            let embedded = manifest
                .get("config")
                .and_then(|c| c.as_str())
                .ok_or_else(|| config_error("manifest has no embedded `config`"))?;
            return Self::parse(embedded);
        }
        Self::parse(&text)
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    /// Applies `key=value` with a dotted key. The value is read as a TOML
    /// value and falls back to a plain string.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| config_error(format!("override `{spec}` is not of the form key=value")))?;
        let key = key.trim();
        let raw = raw.trim();
        if key.is_empty() {
            return Err(config_error(format!("override `{spec}` has an empty key")));
        }
        let value = parse_value(raw);
        let parts: Vec<&str> = key.split('.').collect();
        let mut table = &mut self.table;
        for part in &parts[..parts.len() - 1] {
            let entry = table
                .entry(part.to_string())
                .or_insert_with(|| Value::Table(Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| config_error(format!("override `{key}`: `{part}` is not a table")))?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: Value) {
        let _ = self.apply_value(key, value);
    }

    fn apply_value(&mut self, key: &str, value: Value) -> Option<()> {
        let parts: Vec<&str> = key.split('.').collect();
        let mut table = &mut self.table;
        for part in &parts[..parts.len() - 1] {
            table = table
                .entry(part.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()?;
        }
        table.insert(parts[parts.len() - 1].to_string(), value);
        Some(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.table).expect("a toml table always serializes")
    }

    /// Table of a subcommand; absent tables read as empty.
    pub fn section(&self, name: &str) -> Section<'_> {
        static EMPTY: std::sync::OnceLock<Table> = std::sync::OnceLock::new();
        let table = match self.table.get(name) {
            Some(Value::Table(t)) => t,
            _ => EMPTY.get_or_init(Table::new),
        };
        Section { name: name.to_string(), table }
    }

    pub fn root(&self) -> Section<'_> {
        Section { name: String::new(), table: &self.table }
    }

    pub fn model(&self) -> Result<ModelConfig> {
        model_from(&self.root())
    }
}

fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Typed access to one table, with key names in every error.
pub struct Section<'a> {
    name: String,
    table: &'a Table,
}

impl Section<'_> {
    fn path(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.table
            .get(key)
            .ok_or_else(|| config_error(format!("missing config key `{}`", self.path(key))))
    }

    fn wrong(&self, key: &str, what: &str) -> LabError {
        config_error(format!("config key `{}` must be {what}", self.path(key)))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        as_f64(self.get(key)?).ok_or_else(|| self.wrong(key, "a number"))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.has(key) { self.f64(key) } else { Ok(default) }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(self.wrong(key, "a nonnegative integer")),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.has(key) { self.usize(key) } else { Ok(default) }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(self.wrong(key, "a nonnegative integer")),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.get(key)?.as_str().ok_or_else(|| self.wrong(key, "a string"))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| self.wrong(key, "an array of numbers"))?;
        arr.iter()
            .map(|v| as_f64(v).ok_or_else(|| self.wrong(key, "an array of numbers")))
            .collect()
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        if self.has(key) { self.f64_list(key) } else { Ok(default.to_vec()) }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let arr = self.get(key)?.as_array().ok_or_else(|| self.wrong(key, "an array of integers"))?;
        arr.iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                _ => Err(self.wrong(key, "an array of nonnegative integers")),
            })
            .collect()
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        if self.has(key) { self.usize_list(key) } else { Ok(default.to_vec()) }
    }

    pub fn site(&self, key: &str) -> Result<Site> {
        int_list(self.get(key)?).map(Site::new).ok_or_else(|| self.wrong(key, "an array of integers"))
    }

    pub fn site_or(&self, key: &str, default: Site) -> Result<Site> {
        if self.has(key) { self.site(key) } else { Ok(default) }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn int_list(v: &Value) -> Option<Vec<i64>> {
    v.as_array()?.iter().map(|x| x.as_integer()).collect()
}

fn parse_bc(s: &str) -> Result<BoundaryCondition> {
    match s.to_ascii_lowercase().as_str() {
        "dirichlet" => Ok(BoundaryCondition::Dirichlet),
        "neumann" => Ok(BoundaryCondition::Neumann),
        "periodic" => Ok(BoundaryCondition::Periodic),
        other => Err(config_error(format!(
            "config key `bc` must be dirichlet, neumann or periodic, got `{other}`"
        ))),
    }
}

/// Model keys: `d`, `l`, `bc`, `omega_plus`, `a` are required; `gamma` is
/// required for `d > 1` and defaults to `[[0], [1], …]` in one dimension;
/// `r` defaults to 1, `kappa` to 1, `v0` to zeros, `w` to the step bump.
fn model_from(s: &Section) -> Result<ModelConfig> {
    let d = s.usize("d")?;
    let l = s.usize("l")?;
    let bc = parse_bc(s.str("bc")?)?;
    let omega_plus = s.f64("omega_plus")?;
    let a = s.f64_list("a")?;
    let gamma: Vec<Vec<i64>> = if s.has("gamma") {
        let arr = s.get("gamma")?.as_array().ok_or_else(|| s.wrong("gamma", "an array of integer arrays"))?;
        arr.iter()
            .map(|p| int_list(p).ok_or_else(|| s.wrong("gamma", "an array of integer arrays")))
            .collect::<Result<_>>()?
    } else if d == 1 {
        (0..a.len() as i64).map(|i| vec![i]).collect()
    } else {
        return Err(config_error("missing config key `gamma`"));
    };
    if gamma.len() != a.len() {
        return Err(config_error(format!(
            "config keys `gamma` and `a` have different lengths ({} and {})",
            gamma.len(),
            a.len()
        )));
    }
    let conv = ConvolutionVector::new(gamma.into_iter().map(Site::new).zip(a).collect())?;
    let r = s.usize_or("r", 1)?;
    let cell = r.checked_pow(d as u32).ok_or_else(|| config_error("r^d overflows"))?;
    let kappa = s.f64_or("kappa", 1.0)?;
    let w = if s.has("w") { Some(s.f64_list("w")?) } else { None };
    let v0 = s.f64_list_or("v0", &vec![0.0; cell])?;
    let cfg = ModelConfig {
        d,
        l,
        bc,
        r,
        v0,
        site: SingleSite { conv, kappa, w },
        omega_plus,
    };
    cfg.validate()?;
    Ok(cfg)
}
