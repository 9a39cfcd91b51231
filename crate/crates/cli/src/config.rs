//! Run configuration: a fixed key schema per subcommand, filled from a
//! `key = value` file and then from flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;

pub const CONFIG_HEADER: &str = "# pointgas resolved config v1";

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Choice(&'static [&'static str]),
    Path,
}

#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

const fn key(name: &'static str, default: &'static str, kind: Kind, help: &'static str) -> KeySpec {
    KeySpec { name, default, kind, help }
}

const BC: Kind = Kind::Choice(&["dirichlet", "neumann"]);

/// Keys shared by every subcommand.
pub const COMMON: &[KeySpec] = &[
    key("out", "", Kind::Path, "CSV output path (default <command>.csv); summary and resolved config go next to it"),
    key("seed", "0", Kind::Int, "seed for sampled inputs"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fermi,
    Hardy,
    Twobody,
    Spectrum2,
    Occupations,
    Ledger,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Fermi, Command::Hardy, Command::Twobody, Command::Spectrum2, Command::Occupations, Command::Ledger];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fermi => "fermi",
            Command::Hardy => "hardy",
            Command::Twobody => "twobody",
            Command::Spectrum2 => "spectrum2",
            Command::Occupations => "occupations",
            Command::Ledger => "ledger",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Command::Fermi => "free energy density of the ideal Fermi gas",
            Command::Hardy => "minimal Rayleigh quotients of the local Hardy inequalities",
            Command::Twobody => "radial two-body spectrum in a ball",
            Command::Spectrum2 => "boxed two-particle spectrum and F_g against the free gas",
            Command::Occupations => "ground-state occupation table and the Vandermonde check",
            Command::Ledger => "error-term ledger of the lower bound",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn keys(self) -> &'static [KeySpec] {
        match self {
            Command::Fermi => {
                const K: &[KeySpec] = &[
                    key("beta", "1", Kind::Float, "inverse temperature"),
                    key("rho", "1", Kind::Float, "density"),
                    key("q", "2", Kind::Int, "spin states"),
                ];
                K
            }
            Command::Hardy => {
                const K: &[KeySpec] = &[
                    key("lemma", "box", Kind::Choice(&["box", "ball"]), "cube with any point, or ball about its centre"),
                    key("ell", "1", Kind::Float, "cube side or ball radius"),
                    key("c0", "16", Kind::Float, "gradient coefficient"),
                    key("c1", "144", Kind::Float, "mass coefficient, divided by ell^2"),
                    key("samples", "20", Kind::Int, "singular points (box only)"),
                    key("resolution", "40", Kind::Int, "cells per ell"),
                    key("min-lambda", "0.95", Kind::Float, "pass threshold on lambda_min"),
                ];
                K
            }
            Command::Twobody => {
                const K: &[KeySpec] = &[
                    key("a-inv", "0", Kind::Float, "inverse scattering length, at most 0"),
                    key("radius", "1", Kind::Float, "ball radius"),
                    key("elements", "400", Kind::Int, "radial elements"),
                    key("levels", "5", Kind::Int, "eigenvalues to report"),
                    key("outer", "dirichlet", BC, "condition on the sphere"),
                ];
                K
            }
            Command::Spectrum2 => {
                const K: &[KeySpec] = &[
                    key("beta", "1", Kind::Float, "inverse temperature"),
                    key("side", "1", Kind::Float, "box side"),
                    key("q", "2", Kind::Int, "spin states"),
                    key("basis", "30", Kind::Int, "pair basis cutoff |k_a|^2 + |k_b|^2"),
                    key("bc", "dirichlet", BC, "box walls"),
                    key("weight", "interacting", Kind::Choice(&["interacting", "unit"]), "weight g, or g = 1"),
                    key("cusp", "true", Kind::Bool, "add the cusp functions to the basis"),
                    key("entropy-c", "1", Kind::Float, "counting-bound constant for the tail"),
                    key("tol", "1e-6", Kind::Float, "relative tolerance on F_g <= F"),
                    key("cache", "true", Kind::Bool, "reuse spectra from the cache directory"),
                ];
                K
            }
            Command::Occupations => {
                const K: &[KeySpec] = &[
                    key("N", "3", Kind::Int, "particles"),
                    key("m", "2", Kind::Int, "boxes per side"),
                    key("q", "2", Kind::Int, "spin states"),
                    key("side", "1", Kind::Float, "cube side"),
                    key("kappa", "1", Kind::Float, "kinetic-bound constant"),
                    key("max-rows", "100000", Kind::Int, "refuse larger tables"),
                ];
                K
            }
            Command::Ledger => {
                const K: &[KeySpec] = &[
                    key("N", "1000", Kind::Int, "particles"),
                    key("rho", "1", Kind::Float, "density"),
                    key("beta", "1", Kind::Float, "inverse temperature"),
                    key("q", "2", Kind::Int, "spin states"),
                    key("c", "1", Kind::Float, "entropy constant"),
                    key("kappa", "1", Kind::Float, "kinetic-bound constant"),
                    key("c-eta", "1", Kind::Float, "cutoff energy constant"),
                    key("c-delta", "1", Kind::Float, "delta constant"),
                ];
                K
            }
        }
    }

    pub fn all_keys(self) -> impl Iterator<Item = &'static KeySpec> {
        COMMON.iter().chain(self.keys())
    }
}

/// A fully resolved configuration: every key of the command, in schema
/// order, with values in canonical form.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    values: BTreeMap<&'static str, String>,
}

fn canonical(spec: &KeySpec, raw: &str) -> Result<String, CliError> {
    let raw = raw.trim();
    let bad = |what: &str| CliError::Config(format!("{}: {what}, got `{raw}`", spec.name));
    Ok(match spec.kind {
        Kind::Float => {
            let v: f64 = raw.parse().map_err(|_| bad("expected a number"))?;
            if !v.is_finite() {
                return Err(bad("expected a finite number"));
            }
            // shortest form that parses back to the same value
            format!("{v:?}")
        }
        Kind::Int => raw.parse::<u64>().map_err(|_| bad("expected a non-negative integer"))?.to_string(),
        Kind::Bool => match raw {
            "true" | "yes" | "1" => "true".into(),
            "false" | "no" | "0" => "false".into(),
            _ => return Err(bad("expected true or false")),
        },
        Kind::Choice(opts) => {
            if !opts.contains(&raw) {
                return Err(bad(&format!("expected one of {}", opts.join(", "))));
            }
            raw.to_string()
        }
        Kind::Path => raw.to_string(),
    })
}

/// Parses a `key = value` file. Blank lines and `#` comments are skipped; a
/// `command` line, if present, must name `command`.
pub fn parse_file(text: &str, command: Command) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "command" {
            if v != command.name() {
                return Err(CliError::Config(format!("config is for `{v}`, not `{}`", command.name())));
            }
            continue;
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, overridden by `file` entries, overridden by `flags`.
    pub fn resolve(command: Command, file: &[(String, String)], flags: &[(String, String)]) -> Result<Self, CliError> {
        let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
        for spec in command.all_keys() {
            let v = if spec.default.is_empty() { String::new() } else { canonical(spec, spec.default)? };
            values.insert(spec.name, v);
        }
        let mut seen = BTreeMap::new();
        for (k, v) in file {
            if seen.insert(k.as_str(), ()).is_some() {
                return Err(CliError::Config(format!("duplicate key `{k}` in config file")));
            }
            Self::set(command, &mut values, k, v)?;
        }
        for (k, v) in flags {
            Self::set(command, &mut values, k, v)?;
        }
        if values["out"].is_empty() {
            values.insert("out", format!("{}.csv", command.name()));
        }
        Ok(Self { command, values })
    }

    fn set(command: Command, values: &mut BTreeMap<&'static str, String>, k: &str, v: &str) -> Result<(), CliError> {
        let spec = command
            .all_keys()
            .find(|s| s.name == k)
            .ok_or_else(|| CliError::Config(format!("unknown key `{k}` for `{}`", command.name())))?;
        values.insert(spec.name, canonical(spec, v)?);
        Ok(())
    }

    pub fn get(&self, k: &str) -> &str {
        self.values.get(k).unwrap_or_else(|| panic!("key `{k}` is not in the schema"))
    }

    pub fn f64(&self, k: &str) -> f64 {
        self.get(k).parse().expect("canonical float")
    }

    pub fn u64(&self, k: &str) -> u64 {
        self.get(k).parse().expect("canonical integer")
    }

    pub fn usize(&self, k: &str) -> Result<usize, CliError> {
        usize::try_from(self.u64(k)).map_err(|_| CliError::Config(format!("{k} is too large")))
    }

    pub fn u32(&self, k: &str) -> Result<u32, CliError> {
        u32::try_from(self.u64(k)).map_err(|_| CliError::Config(format!("{k} is too large")))
    }

    pub fn bool(&self, k: &str) -> bool {
        self.get(k) == "true"
    }

    pub fn out(&self) -> &Path {
        Path::new(self.get("out"))
    }

    /// Entries in schema order.
    pub fn entries(&self) -> Vec<(&'static str, &str)> {
        self.command.all_keys().map(|s| (s.name, self.values[s.name].as_str())).collect()
    }

    /// The text form read back by [`parse_file`].
    pub fn render(&self) -> String {
        let mut s = format!("{CONFIG_HEADER}\ncommand = {}\n", self.command.name());
        for (k, v) in self.entries() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }
}
