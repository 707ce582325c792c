use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use kusuoka::gasket::generate_system;
use kusuoka::io::{read_cylinder, read_raw, read_system, write_system, LoadedSystem, RawMaps};
use kusuoka::matsys::DEFAULT_TOL;
use kusuoka::procspace::{dilation_check, q_decay_check};
use kusuoka::spectral::{c_k, renormalize, spectral_report, theta1, theta1_schatten, theta2};
use kusuoka::symbolic::{enumerate, DEFAULT_MAX_WORDS};
use kusuoka::{
    builtin, Backend, Budget, Error, Field, KusuokaMeasure, MatrixSystem, Scalar, SchattenP,
    ValidationReport,
};
use serde_json::{json, Map, Value};

use crate::{Command, Common, Format, EXIT_BUDGET, EXIT_CONFIG, EXIT_VALIDATION};

/// Signals a failed validation that has already been reported.
#[derive(Debug)]
struct ValidationFailed;

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("system failed validation")
    }
}

impl std::error::Error for ValidationFailed {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ValidationFailed>().is_some() {
        return EXIT_VALIDATION;
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return EXIT_CONFIG;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded { .. }) => EXIT_BUDGET,
        Some(Error::Invalid(_) | Error::NotPositiveDefinite { .. }) => EXIT_VALIDATION,
        Some(
            Error::Parse(_)
            | Error::DimensionMismatch(_)
            | Error::UnknownSymbol(_)
            | Error::InvalidArgument(_),
        ) => EXIT_CONFIG,
        _ => 1,
    }
}

fn budget(c: &Common) -> Result<Budget> {
    match c.budget_k {
        Some(0) => Err(Error::InvalidArgument("--budget-k must be positive".into()).into()),
        Some(k) => Ok(Budget::new(k)),
        None => Ok(Budget::new(DEFAULT_MAX_WORDS)),
    }
}

fn load(c: &Common) -> Result<LoadedSystem> {
    let loaded = match (&c.builtin, &c.input) {
        (Some(name), None) => LoadedSystem::Exact(builtin::by_name(name)?),
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_system(&text)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument("give --builtin NAME or --in FILE".into()).into())
        }
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let backend = c.backend.unwrap_or(loaded.backend());
    Ok(loaded.into_backend(backend)?)
}

fn emit(c: &Common, text: String) -> Result<()> {
    match &c.out {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn tagged(s: &Scalar, exact: bool) -> String {
    format!("{s} ({})", if exact { "exact" } else { "float" })
}

fn scalar(s: &Scalar) -> Value {
    Value::String(s.to_string())
}

macro_rules! with_system {
    ($loaded:expr, $sys:ident => $body:expr) => {
        match $loaded {
            LoadedSystem::Exact($sys) => $body,
            LoadedSystem::Float($sys) => $body,
        }
    };
}

pub fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Validate(w) => {
            let c = &w.common;
            let (ok, text) = with_system!(load(c)?, sys => validate(c, &sys)?);
            emit(c, text)?;
            Ok(if ok { 0 } else { EXIT_VALIDATION })
        }
        Command::Theta1 { common, p } => {
            let ps = p
                .iter()
                .map(|x| x.parse::<SchattenP>())
                .collect::<kusuoka::Result<Vec<_>>>()?;
            let text = with_system!(load(&common)?, sys => cmd_theta1(&common, &sys, &ps)?);
            emit(&common, text)?;
            Ok(0)
        }
        Command::Ck { common, k } => {
            let b = budget(&common)?;
            let text = with_system!(load(&common)?, sys => {
                let c = c_k(&checked(sys)?, k, &b)?;
                match common.format {
                    Some(Format::Json) => pretty(&serde_json::to_value(&c)?),
                    Some(Format::Csv) => format!("k,value,exact\n{},{},{}\n", c.k, c.value, c.exact),
                    None => format!("{}\n", tagged(&c.value, c.exact)),
                }
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Theta2 { common, kmax } => {
            let b = budget(&common)?;
            let text = with_system!(load(&common)?, sys => {
                let t = theta2(&checked(sys)?, kmax, &b)?;
                match common.format {
                    Some(Format::Json) => pretty(&serde_json::to_value(&t)?),
                    Some(Format::Csv) => format!(
                        "form,value\ntheorem,{}\nlemma,{}\n",
                        t.theorem, t.lemma
                    ),
                    None => {
                        let mut s = format!("theorem {}\nlemma {}\n", t.theorem, t.lemma);
                        if !t.irreducible {
                            s.push_str("irreducibility condition fails (some c_k = 0)\n");
                        }
                        s
                    }
                }
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Measure { common, depth } => {
            let b = budget(&common)?;
            let text = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let nus = m.nu_level(depth, &b)?;
                let words = enumerate(m.base(), depth, &b)?;
                let names: Vec<String> = words.iter().map(|w| m.system().alphabet().format_word(w)).collect();
                table(common.format, &["word", "nu"], names.iter().zip(&nus).map(|(w, nu)| {
                    vec![Value::String(w.clone()), scalar(&nu.to_scalar())]
                }))
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Gfun {
            common,
            word,
            depth,
        } => {
            let b = budget(&common)?;
            let text = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let alpha = m.system().alphabet().clone();
                let words = match &word {
                    Some(w) => vec![alpha.parse_word(w)?],
                    None => enumerate(m.base(), depth, &b)?,
                };
                let rows = words
                    .iter()
                    .map(|w| Ok(vec![Value::String(alpha.format_word(w)), scalar(&m.g_approx(w)?.to_scalar())]))
                    .collect::<Result<Vec<_>>>()?;
                table(common.format, &["word", "g"], rows.into_iter())
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Sample {
            common,
            length,
            count,
        } => {
            let text = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let alpha = m.system().alphabet().clone();
                let words = m.sample_many(count, length, common.seed);
                match common.format {
                    Some(Format::Json) => pretty(&json!(words.iter().map(|w| alpha.format_word(w)).collect::<Vec<_>>())),
                    _ => words.iter().fold(String::new(), |mut s, w| {
                        let _ = writeln!(s, "{}", alpha.format_word(w));
                        s
                    }),
                }
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Correlate {
            common,
            alpha,
            beta,
            nmax,
        } => {
            let text =
                with_system!(load(&common)?, sys => correlate(&common, sys, &alpha, &beta, nmax)?);
            emit(&common, text)?;
            Ok(0)
        }
        Command::MixingBound { common, k, nmax } => {
            let b = budget(&common)?;
            let (holds, text) = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let rows = m.mixing_bound_check(k, nmax, &b)?;
                let holds = rows.iter().all(|r| r.holds);
                let text = table(
                    common.format.or(Some(Format::Csv)),
                    &["n", "max_gap", "bound", "pointwise", "holds"],
                    rows.iter().map(|r| {
                        vec![json!(r.n), scalar(&r.max_gap), scalar(&r.bound), json!(r.pointwise), json!(r.holds)]
                    }),
                );
                (holds, text)
            });
            emit(&common, text)?;
            Ok(if holds { 0 } else { 1 })
        }
        Command::Gasket { common, n } => {
            let sys = generate_system(n)?;
            let text = match common.backend.unwrap_or(Backend::Exact) {
                Backend::Exact => write_system(&sys),
                Backend::Float => write_system(&sys.to_f64()),
            };
            emit(&common, text + "\n")?;
            Ok(0)
        }
        Command::Dilation {
            common,
            k,
            f,
            level,
        } => {
            let b = budget(&common)?;
            let ftext =
                fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
            let text = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let func = read_cylinder(&ftext, m.system().alphabet())?;
                let level = level.unwrap_or(func.depth() + 1);
                let r = dilation_check(&m, &func, k, level, &b)?;
                let v = json!({"k": k, "level": level, "residual": scalar(&r.to_scalar()), "exact_zero": r.is_zero()});
                match common.format {
                    Some(Format::Csv) => format!("k,level,residual\n{k},{level},{}\n", r.to_scalar()),
                    _ => pretty(&v),
                }
            });
            emit(&common, text)?;
            Ok(0)
        }
        Command::Qdecay {
            common,
            k,
            jmax,
            trials,
        } => {
            let b = budget(&common)?;
            let (holds, text) = with_system!(load(&common)?, sys => {
                let m = KusuokaMeasure::new(sys)?;
                let rows = q_decay_check(&m, k, jmax, trials, common.seed, &b)?;
                let holds = rows.iter().all(|r| r.holds);
                let text = table(
                    common.format,
                    &["j", "max_ratio", "bound", "holds"],
                    rows.iter().map(|r| vec![json!(r.j), json!(r.max_ratio), json!(r.bound), json!(r.holds)]),
                );
                (holds, text)
            });
            emit(&common, text)?;
            Ok(if holds { 0 } else { 1 })
        }
        Command::Report { common, kmax, nmax } => {
            let b = budget(&common)?;
            let source = common
                .builtin
                .clone()
                .or_else(|| common.input.as_ref().map(|p| p.display().to_string()))
                .unwrap_or_default();
            let v = with_system!(load(&common)?, sys => report(&source, sys, kmax, nmax, &b)?);
            emit(&common, pretty(&v))?;
            Ok(0)
        }
        Command::Renormalize(w) => {
            let c = &w.common;
            let path = c
                .input
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("renormalize needs --in FILE".into()))?;
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let out = match (read_raw(&text)?, c.backend) {
                (RawMaps::Exact(a, maps), Some(Backend::Float)) => {
                    let r = renormalize(a, maps.iter().map(|m| m.to_f64()).collect())?;
                    write_system(&r.system)
                }
                (RawMaps::Exact(a, maps), _) => write_system(&renormalize(a, maps)?.system),
                (RawMaps::Float(a, maps), _) => write_system(&renormalize(a, maps)?.system),
            };
            emit(c, out + "\n")?;
            Ok(0)
        }
    }
}

fn checked<T: Field>(sys: MatrixSystem<T>) -> Result<MatrixSystem<T>> {
    sys.require_valid()?;
    Ok(sys)
}

fn validation_json(r: &ValidationReport) -> Value {
    json!({
        "valid": r.passed(),
        "energy_residual": scalar(&r.energy_residual),
        "identity_residual": scalar(&r.identity_residual),
        "energy_fixed": r.energy_fixed,
        "identity_fixed": r.identity_fixed,
        "trace_one": r.trace_one,
        "energy_symmetric": r.energy_symmetric,
        "injective": r.injective,
        "symmetric_maps": r.symmetric_maps,
        "failures": r.failures(),
    })
}

fn validate<T: Field>(c: &Common, sys: &MatrixSystem<T>) -> Result<(bool, String)> {
    let (ok, v) = match sys.validate(DEFAULT_TOL) {
        Ok(r) => (r.passed(), validation_json(&r)),
        Err(Error::NotPositiveDefinite { eigenvalue }) => (
            false,
            json!({"valid": false, "failures": [format!("energy form is not positive definite (eigenvalue {eigenvalue:e})")]}),
        ),
        Err(e) => return Err(e.into()),
    };
    let text = match c.format {
        Some(Format::Json) => pretty(&v),
        Some(Format::Csv) => {
            let mut s = String::from("check,value\n");
            for (k, x) in v.as_object().expect("object") {
                if k != "failures" {
                    let _ = writeln!(
                        s,
                        "{k},{}",
                        x.as_str()
                            .map(str::to_string)
                            .unwrap_or_else(|| x.to_string())
                    );
                }
            }
            s
        }
        None if ok => "pass\n".to_string(),
        None => {
            let mut s = String::from("fail\n");
            for f in v["failures"].as_array().into_iter().flatten() {
                let _ = writeln!(s, "  {}", f.as_str().unwrap_or_default());
            }
            s
        }
    };
    Ok((ok, text))
}

fn cmd_theta1<T: Field>(c: &Common, sys: &MatrixSystem<T>, ps: &[SchattenP]) -> Result<String> {
    sys.require_valid()?;
    let t = theta1(sys)?;
    let schatten = ps
        .iter()
        .map(|p| Ok((p.to_string(), theta1_schatten(sys, *p)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(match c.format {
        Some(Format::Json) => {
            let mut v = serde_json::to_value(&t)?;
            if !schatten.is_empty() {
                let p: Map<String, Value> = schatten
                    .iter()
                    .map(|(k, x)| (k.clone(), scalar(x)))
                    .collect();
                v["theta1_p"] = Value::Object(p);
            }
            pretty(&v)
        }
        Some(Format::Csv) => {
            let mut s = format!("quantity,value\ntheta1,{}\n", t.value);
            for (p, x) in &schatten {
                let _ = writeln!(s, "theta1_p{p},{x}");
            }
            s
        }
        None => {
            let mut s = format!("{}\n", tagged(&t.value, t.exact));
            for (p, x) in &schatten {
                let _ = writeln!(s, "p={p}: {}", tagged(x, x.is_exact()));
            }
            s
        }
    })
}

fn correlate<T: Field>(
    c: &Common,
    sys: MatrixSystem<T>,
    alpha: &str,
    beta: &str,
    nmax: usize,
) -> Result<String> {
    let m = KusuokaMeasure::new(sys)?;
    let sys = m.system();
    let a = sys.alphabet().parse_word(alpha)?;
    let b = sys.alphabet().parse_word(beta)?;
    let t = theta1(sys)?;
    let d = T::from_i64(sys.dim() as i64);
    let exact_theta = t
        .value
        .as_rational()
        .filter(|_| t.exact)
        .map(|q| T::from_rational(&q));
    let rows = (0..=nmax)
        .map(|n| {
            let gap = m.correlation_gap(&a, &b, n)?;
            let bound = match &exact_theta {
                Some(th) => (d.clone() * th.pow(n as u32)).to_scalar(),
                None => Scalar::Float(sys.dim() as f64 * t.value.to_f64().powi(n as i32)),
            };
            Ok(vec![
                json!(n),
                Value::String(alpha.to_string()),
                Value::String(beta.to_string()),
                scalar(&gap.to_scalar()),
                scalar(&bound),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(table(
        c.format.or(Some(Format::Csv)),
        &["n", "alpha", "beta", "gap", "bound"],
        rows.into_iter(),
    ))
}

fn report<T: Field>(
    source: &str,
    sys: MatrixSystem<T>,
    kmax: usize,
    nmax: usize,
    b: &Budget,
) -> Result<Value> {
    let validation = sys.validate(DEFAULT_TOL)?;
    if !validation.passed() {
        eprintln!("validation failed: {}", validation.failures().join("; "));
        return Err(ValidationFailed.into());
    }
    let spectral = spectral_report(&sys, kmax, None, b)?;
    let m = KusuokaMeasure::new(sys)?;
    let alpha = m.system().alphabet().clone();
    let nu1: Map<String, Value> = enumerate(m.base(), 1, b)?
        .iter()
        .zip(m.nu_level(1, b)?)
        .map(|(w, nu)| (alpha.format_word(w), scalar(&nu.to_scalar())))
        .collect();
    let mixing = if m.system().dim() > 1 {
        let rows = m.mixing_bound_check(1, nmax, b)?;
        serde_json::to_value(rows)?
    } else {
        Value::Null
    };
    let theta2 = spectral.theta2.as_ref().map(|t| {
        json!({
            "theorem": scalar(&t.theorem),
            "lemma": scalar(&t.lemma),
            "irreducible": t.irreducible,
        })
    });
    let ck: Vec<Value> = spectral
        .theta2
        .iter()
        .flat_map(|t| &t.constants)
        .map(|c| json!({"k": c.k, "value": scalar(&c.value), "exact": c.exact}))
        .collect();
    let theta1_p: Map<String, Value> = spectral
        .theta1_p
        .iter()
        .map(|(p, x)| (p.clone(), scalar(x)))
        .collect();
    Ok(json!({
        "system": source,
        "backend": T::BACKEND,
        "dim": m.system().dim(),
        "symbols": alpha.len(),
        "validation": validation_json(&validation),
        "theta1": scalar(&spectral.theta1.value),
        "theta1_exact": spectral.theta1.exact,
        "theta1_p": theta1_p,
        "c_k": ck,
        "theta2": theta2,
        "nu_level1": nu1,
        "mixing": mixing,
    }))
}

/// Renders rows as CSV (the default) or as a JSON array of objects.
fn table(
    format: Option<Format>,
    header: &[&str],
    rows: impl Iterator<Item = Vec<Value>>,
) -> String {
    match format {
        Some(Format::Json) => {
            let arr: Vec<Value> = rows
                .map(|r| {
                    Value::Object(
                        header
                            .iter()
                            .map(|h| h.to_string())
                            .zip(r)
                            .collect::<Map<_, _>>(),
                    )
                })
                .collect();
            pretty(&Value::Array(arr))
        }
        _ => {
            let mut s = header.join(",");
            s.push('\n');
            for r in rows {
                let cells: Vec<String> = r
                    .iter()
                    .map(|v| {
                        v.as_str()
                            .map(str::to_string)
                            .unwrap_or_else(|| v.to_string())
                    })
                    .collect();
                s.push_str(&cells.join(","));
                s.push('\n');
            }
            s
        }
    }
}
