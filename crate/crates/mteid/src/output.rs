//! Files written by the command line: atomic writes, plot samples,
//! elimination traces.

use std::io::Write;
use std::path::Path;

use mteid_core::fitting::sample_points;
use mteid_core::{Assignment, MtePotential, SolveResult, Value};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// `n` evenly spaced samples of `p` along `var`, both ends included, with
/// the other variables fixed by `at`.
pub fn plot_samples(
    p: &MtePotential,
    var: &str,
    n: usize,
    at: &Assignment,
) -> Result<Vec<(f64, f64)>> {
    let v = p
        .var(var)
        .ok_or_else(|| mteid_core::MteError::Domain(format!("`{var}` is not in the potential")))?;
    let (lo, hi) = v
        .support()
        .ok_or_else(|| mteid_core::MteError::NotContinuous(var.to_string()))?;
    let xs = match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => sample_points(lo, hi, n),
    };
    xs.into_iter()
        .map(|x| {
            let mut point = at.clone();
            point.set(var, Value::Real(x));
            Ok((x, p.evaluate(&point)?))
        })
        .collect()
}

/// CSV with header `x,value`; numbers in shortest round-trip form.
pub fn samples_csv(rows: &[(f64, f64)]) -> String {
    let mut s = String::from("x,value\n");
    for (x, v) in rows {
        s.push_str(&format!("{x},{v}\n"));
    }
    s
}

/// One line per deletion: the variable, the fused domains, the result's
/// domain and size.
pub fn trace_log(r: &SolveResult) -> String {
    let mut s = String::new();
    for (i, t) in r.trace.iter().enumerate() {
        let inputs: Vec<String> = t
            .inputs
            .iter()
            .map(|d| format!("{{{}}}", d.join(",")))
            .collect();
        s.push_str(&format!(
            "{} delete {}: {} -> {{{}}} ({} pieces)\n",
            i + 1,
            t.variable,
            inputs.join(" x "),
            t.result_domain().join(","),
            t.result.piece_count()
        ));
    }
    s.push_str(&format!("meu {}\n", r.meu));
    s
}
