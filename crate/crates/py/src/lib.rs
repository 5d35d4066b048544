//! Python bindings. Every entry point builds a problem file, runs it through
//! the same dispatcher as the `nau` binary and hands back plain Python values
//! (the machine result document decoded by the `json` module).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use nominal_au::cli::{document_to_json, render, run_problem, Flags, Format};
use nominal_au::syntax::{parse_problem_with, parse_term as parse_nla_term, Decls};
use nominal_au::term::Theory;

fn overrides(items: &[String]) -> PyResult<Vec<(String, Theory)>> {
    items
        .iter()
        .map(|o| {
            let (name, th) = o.split_once('=').ok_or_else(|| PyValueError::new_err(format!("malformed override `{o}`")))?;
            let theory = Theory::parse(th.trim()).ok_or_else(|| PyValueError::new_err(format!("unknown theory `{th}`")))?;
            Ok((name.trim().to_string(), theory))
        })
        .collect()
}

struct Options {
    flags: Flags,
    overrides: Vec<(String, Theory)>,
}

fn document(text: &str, opts: &Options) -> PyResult<nominal_au::cli::ResultDocument> {
    let decls = Decls { overrides: opts.overrides.clone(), ..Decls::default() };
    let pf = parse_problem_with(text, decls).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(run_problem(&pf, &opts.flags))
}

fn to_python<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

/// Header lines declaring the signature and variables.
fn header(sig: &str, atomvars: &str, termvars: &str, fresh: &str) -> String {
    let mut out = String::new();
    for (kw, body) in [("sig", sig), ("atomvars", atomvars), ("termvars", termvars)] {
        if !body.trim().is_empty() {
            out.push_str(&format!("{kw}: {body};\n"));
        }
    }
    out.push_str(&format!("fresh: {fresh};\n"));
    out
}

fn first_result<'py>(py: Python<'py>, text: &str, opts: &Options) -> PyResult<Bound<'py, PyAny>> {
    let doc = document(text, opts)?;
    let json = document_to_json(&doc);
    to_python(py, &json["results"][0])
}

fn plain() -> Options {
    Options { flags: Flags::default(), overrides: Vec::new() }
}

/// Runs a whole problem file; returns the machine result document with an
/// added `exit_code` entry.
#[pyfunction]
#[pyo3(signature = (text, minimize=false, post_process=false, max_states=10_000, jobs=1, all_mappings=false, theory_override=Vec::new()))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    text: &str,
    minimize: bool,
    post_process: bool,
    max_states: usize,
    jobs: usize,
    all_mappings: bool,
    theory_override: Vec<String>,
) -> PyResult<Bound<'py, PyAny>> {
    let flags = Flags { minimize, post_process, max_states, jobs, all_mappings, ..Flags::default() };
    let opts = Options { flags, overrides: overrides(&theory_override)? };
    let doc = document(text, &opts)?;
    let mut json = document_to_json(&doc);
    json["exit_code"] = doc.exit_code().into();
    to_python(py, &json)
}

/// Runs a problem file and renders the result document as text or JSON.
#[pyfunction]
#[pyo3(signature = (text, format="text", minimize=false, post_process=false))]
fn render_result(text: &str, format: &str, minimize: bool, post_process: bool) -> PyResult<String> {
    let format = match format {
        "text" => Format::Text,
        "machine" | "json" => Format::Machine,
        other => return Err(PyValueError::new_err(format!("unknown format `{other}`"))),
    };
    let opts = Options { flags: Flags { minimize, post_process, ..Flags::default() }, overrides: Vec::new() };
    Ok(render(&document(text, &opts)?, format))
}

/// Generalizations of `left` and `right`, as a list of dicts with context,
/// term, store, substitution and trace.
#[pyfunction]
#[pyo3(signature = (left, right, sig="", atomvars="", termvars="", fresh="", minimize=false, post_process=false))]
#[allow(clippy::too_many_arguments)]
fn generalize<'py>(
    py: Python<'py>,
    left: &str,
    right: &str,
    sig: &str,
    atomvars: &str,
    termvars: &str,
    fresh: &str,
    minimize: bool,
    post_process: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let text = format!("{}generalize {left} =?= {right};", header(sig, atomvars, termvars, fresh));
    let opts = Options { flags: Flags { minimize, post_process, ..Flags::default() }, overrides: Vec::new() };
    first_result(py, &text, &opts)?.get_item("outcome")?.get_item("items")
}

fn judgement(text: &str) -> PyResult<bool> {
    let doc = document(text, &plain())?;
    match &doc.results[0].outcome {
        nominal_au::cli::Outcome::Judgement { holds } => Ok(*holds),
        _ => unreachable!("judgement commands yield judgements"),
    }
}

/// Decides `fresh ⊨ left ≈ right`.
#[pyfunction]
#[pyo3(signature = (left, right, sig="", atomvars="", termvars="", fresh=""))]
fn check(left: &str, right: &str, sig: &str, atomvars: &str, termvars: &str, fresh: &str) -> PyResult<bool> {
    judgement(&format!("{}check {left} ~ {right};", header(sig, atomvars, termvars, fresh)))
}

/// Decides `fresh ⊨ atom # term`.
#[pyfunction]
#[pyo3(signature = (atom, term, sig="", atomvars="", termvars="", fresh=""))]
fn check_fresh(atom: &str, term: &str, sig: &str, atomvars: &str, termvars: &str, fresh: &str) -> PyResult<bool> {
    judgement(&format!("{}checkfresh {atom} # {term};", header(sig, atomvars, termvars, fresh)))
}

/// Equivariance mappings for `[(s, t), ...]` meaning `s ⋖ t`.
#[pyfunction]
#[pyo3(signature = (equations, sig="", atomvars="", termvars="", fresh="", all_mappings=false))]
fn equiv<'py>(
    py: Python<'py>,
    equations: Vec<(String, String)>,
    sig: &str,
    atomvars: &str,
    termvars: &str,
    fresh: &str,
    all_mappings: bool,
) -> PyResult<Bound<'py, PyAny>> {
    if equations.is_empty() {
        return Err(PyValueError::new_err("no equations"));
    }
    let eqs: Vec<String> = equations.iter().map(|(l, r)| format!("{l} <~ {r}")).collect();
    let text = format!("{}equiv {};", header(sig, atomvars, termvars, fresh), eqs.join(", "));
    let opts = Options { flags: Flags { all_mappings, ..Flags::default() }, overrides: Vec::new() };
    first_result(py, &text, &opts)?.get_item("outcome")?.get_item("items")
}

/// The unique lgg of two ground terms in text form, or `None`.
#[pyfunction]
#[pyo3(signature = (left, right, sig=""))]
fn unique(left: &str, right: &str, sig: &str) -> PyResult<Option<String>> {
    let doc = document(&format!("{}unique {left} =?= {right};", header(sig, "", "", "")), &plain())?;
    match &doc.results[0].outcome {
        nominal_au::cli::Outcome::Unique { lgg, .. } => Ok(lgg.as_ref().map(|t| t.to_string())),
        _ => unreachable!("unique yields an lgg outcome"),
    }
}

/// Parses a term and returns its tree in the machine format.
#[pyfunction]
#[pyo3(signature = (text, sig="", atomvars="", termvars=""))]
fn parse_term<'py>(py: Python<'py>, text: &str, sig: &str, atomvars: &str, termvars: &str) -> PyResult<Bound<'py, PyAny>> {
    let decls = parse_problem_with(&header(sig, atomvars, termvars, ""), Decls::default())
        .map_err(|e| PyValueError::new_err(e.to_string()))?
        .decls;
    let t = parse_nla_term(text, &decls).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_python(py, &nominal_au::cli::term_to_json(&t))
}

#[pymodule]
fn nominal_au_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(render_result, m)?)?;
    m.add_function(wrap_pyfunction!(generalize, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(check_fresh, m)?)?;
    m.add_function(wrap_pyfunction!(equiv, m)?)?;
    m.add_function(wrap_pyfunction!(unique, m)?)?;
    m.add_function(wrap_pyfunction!(parse_term, m)?)?;
    Ok(())
}
