//! JSON interchange for systems and cylinder functions.
//!
//! System files look like
//!
//! ```json
//! {"alphabet": ["0","1","2"], "dim": 2,
//!  "maps": {"0": [["1/5*sqrt(15)","0"],["0","1/15*sqrt(15)"]], ...},
//!  "energy": [["1/2","0"],["0","1/2"]], "backend": "exact"}
//! ```
//!
//! Entries may be strings (exact `p/q`, `p/q*sqrt(r)` sums, or decimal
//! floats) or JSON numbers.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::field::{Backend, Field};
use crate::linalg::Matrix;
use crate::matsys::MatrixSystem;
use crate::surd::Surd;
use crate::symbolic::{Alphabet, CylinderFunction, Word};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub alphabet: Vec<String>,
    pub dim: usize,
    pub maps: BTreeMap<String, Vec<Vec<Value>>>,
    #[serde(default)]
    pub energy: Vec<Vec<Value>>,
    #[serde(default)]
    pub backend: Option<Backend>,
}

/// A system read from disk, in whichever backend the file asked for.
#[derive(Debug, Clone)]
pub enum LoadedSystem {
    Exact(MatrixSystem<Surd>),
    Float(MatrixSystem<f64>),
}

impl LoadedSystem {
    pub fn backend(&self) -> Backend {
        match self {
            LoadedSystem::Exact(_) => Backend::Exact,
            LoadedSystem::Float(_) => Backend::Float,
        }
    }

    /// Converts to the requested backend. Going from float to exact fails.
    pub fn into_backend(self, backend: Backend) -> Result<LoadedSystem> {
        match (self, backend) {
            (LoadedSystem::Exact(s), Backend::Float) => Ok(LoadedSystem::Float(s.to_f64())),
            (LoadedSystem::Float(_), Backend::Exact) => Err(Error::Parse(
                "a floating-point system cannot be evaluated exactly".into(),
            )),
            (s, _) => Ok(s),
        }
    }
}

fn parse_exact(v: &Value) -> Result<Surd> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => return Err(Error::Parse(format!("expected a number, found {other}"))),
    };
    text.parse::<Surd>()
        .map_err(|e| Error::Parse(format!("entry `{text}`: {}", e.0)))
}

fn parse_float(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Parse(format!("entry `{n}` is not representable"))),
        Value::String(s) => match s.trim().parse::<f64>() {
            Ok(x) => Ok(x),
            Err(_) => parse_exact(v).map(|x| x.to_f64()),
        },
        other => Err(Error::Parse(format!("expected a number, found {other}"))),
    }
}

fn parse_matrix<T: Field>(
    rows: &[Vec<Value>],
    parse: impl Fn(&Value) -> Result<T>,
) -> Result<Matrix<T>> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(&parse).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(rows)
}

fn build_maps<T: Field>(
    file: &SystemFile,
    parse: impl Fn(&Value) -> Result<T> + Copy,
) -> Result<(Alphabet, Vec<Matrix<T>>)> {
    let alphabet = Alphabet::new(file.alphabet.clone())?;
    if file.maps.len() != alphabet.len() {
        return Err(Error::Parse(format!(
            "{} symbols but {} maps",
            alphabet.len(),
            file.maps.len()
        )));
    }
    let maps = alphabet
        .names()
        .iter()
        .map(|name| {
            let rows = file
                .maps
                .get(name)
                .ok_or_else(|| Error::Parse(format!("no map for symbol `{name}`")))?;
            parse_matrix(rows, parse)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((alphabet, maps))
}

fn build<T: Field>(
    file: &SystemFile,
    parse: impl Fn(&Value) -> Result<T> + Copy,
) -> Result<MatrixSystem<T>> {
    let (alphabet, maps) = build_maps(file, parse)?;
    let energy = parse_matrix(&file.energy, parse)?;
    if energy.rows() != file.dim {
        return Err(Error::DimensionMismatch(format!(
            "declared dim {} but energy form is {}x{}",
            file.dim,
            energy.rows(),
            energy.cols()
        )));
    }
    MatrixSystem::new(alphabet, maps, energy)
}

/// Parses a system document. The `backend` field defaults to exact.
pub fn read_system(text: &str) -> Result<LoadedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match file.backend.unwrap_or(Backend::Exact) {
        Backend::Exact => build(&file, parse_exact).map(LoadedSystem::Exact),
        Backend::Float => build(&file, parse_float).map(LoadedSystem::Float),
    }
}

/// Maps of a system document that need not satisfy the fixed-point
/// equations yet. Any `energy` entry is ignored.
#[derive(Debug, Clone)]
pub enum RawMaps {
    Exact(Alphabet, Vec<Matrix<Surd>>),
    Float(Alphabet, Vec<Matrix<f64>>),
}

pub fn read_raw(text: &str) -> Result<RawMaps> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let check = |n: usize| {
        if n == file.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "declared dim {} but maps are {n}x{n}",
                file.dim
            )))
        }
    };
    match file.backend.unwrap_or(Backend::Exact) {
        Backend::Exact => {
            let (a, m) = build_maps(&file, parse_exact)?;
            m.iter().try_for_each(|x| check(x.rows()))?;
            Ok(RawMaps::Exact(a, m))
        }
        Backend::Float => {
            let (a, m) = build_maps(&file, parse_float)?;
            m.iter().try_for_each(|x| check(x.rows()))?;
            Ok(RawMaps::Float(a, m))
        }
    }
}

fn matrix_json<T: Field>(m: &Matrix<T>) -> Vec<Vec<Value>> {
    (0..m.rows())
        .map(|i| {
            m.row(i)
                .iter()
                .map(|x| Value::String(x.to_scalar().to_string()))
                .collect()
        })
        .collect()
}

pub fn system_file<T: Field>(sys: &MatrixSystem<T>) -> SystemFile {
    SystemFile {
        alphabet: sys.alphabet().names().to_vec(),
        dim: sys.dim(),
        maps: sys
            .alphabet()
            .names()
            .iter()
            .zip(sys.maps())
            .map(|(n, a)| (n.clone(), matrix_json(a)))
            .collect(),
        energy: matrix_json(sys.energy()),
        backend: Some(T::BACKEND),
    }
}

pub fn write_system<T: Field>(sys: &MatrixSystem<T>) -> String {
    serde_json::to_string_pretty(&system_file(sys)).expect("system documents always serialize")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CylinderFile {
    pub depth: usize,
    pub values: BTreeMap<String, Value>,
}

/// Parses `{"depth": k, "values": {word: scalar}}`. Words left out are zero.
pub fn read_cylinder<T: Field>(text: &str, alphabet: &Alphabet) -> Result<CylinderFunction<T>> {
    let file: CylinderFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let base = alphabet.len();
    let n = base
        .checked_pow(file.depth as u32)
        .ok_or_else(|| Error::Parse("cylinder depth too large".into()))?;
    let mut values = vec![T::zero(); n];
    for (word, v) in &file.values {
        let w = alphabet.parse_word(word)?;
        if w.len() != file.depth {
            return Err(Error::Parse(format!(
                "word `{word}` has length {}, expected {}",
                w.len(),
                file.depth
            )));
        }
        values[w.index(base)] = if T::is_exact() {
            T::from_surd(&parse_exact(v)?)
        } else {
            let x = parse_float(v)?;
            let q = BigRational::from_float(x)
                .ok_or_else(|| Error::Parse(format!("entry `{v}` is not finite")))?;
            T::from_rational(&q)
        };
    }
    CylinderFunction::new(base, file.depth, values)
}

pub fn write_cylinder<T: Field>(f: &CylinderFunction<T>, alphabet: &Alphabet) -> String {
    let values: BTreeMap<String, Value> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(i, v)| {
            let w = Word::from_index(i, f.depth(), f.base());
            (
                alphabet.format_word(&w),
                Value::String(v.to_scalar().to_string()),
            )
        })
        .collect();
    serde_json::to_string_pretty(&CylinderFile {
        depth: f.depth(),
        values,
    })
    .expect("cylinder documents always serialize")
}
