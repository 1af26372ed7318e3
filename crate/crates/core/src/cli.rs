//! Batch front end: job documents in, classification/transformation/verification reports out.

use std::fmt::Write as _;
use std::io::Read;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::algebra::{render_combination, Signature};
use crate::classify::{classify, ClassificationReport, ClassifyError};
use crate::expr::{parse, Expr, Oracle, ParseError};
use crate::linalg::Matrix;
use crate::transform::{construct_transformation, Construction, TransformError, TransformationResult};
use crate::vfield::{is_symmetry, satisfies_correspondence, Coords, FieldError, Ode, PointTransformation, VectorField};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed job at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("invalid job: {0}")]
    Invalid(String),
    #[error("{field}: {source}")]
    Syntax { field: String, source: ParseError },
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    /// Input problems exit with 2, pipeline failures with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { .. } => 1,
            _ => 2,
        }
    }

    fn stage(stage: &'static str, e: impl std::fmt::Display) -> CliError {
        CliError::Stage { stage, message: e.to_string() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Classify,
    Transform,
    #[default]
    Verify,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Classify => "classify",
            Mode::Transform => "transform",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub xi: String,
    pub eta: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSpec {
    pub order: usize,
    pub rhs: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSpec {
    pub phi: String,
    pub psi: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub points: Option<usize>,
    pub mode: Option<Mode>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub variables: Vec<String>,
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub ode: Option<OdeSpec>,
    #[serde(default)]
    pub candidate: Option<CandidateSpec>,
    #[serde(default)]
    pub options: JobOptions,
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<JobSpec, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// A job with every expression parsed and every option resolved.
#[derive(Clone, Debug)]
pub struct Job {
    pub name: Option<String>,
    pub coords: Coords,
    pub generators: [VectorField; 3],
    pub ode: Option<Ode>,
    pub candidate: Option<PointTransformation>,
    pub oracle: Oracle,
    pub mode: Mode,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_field(field: String, text: &str) -> Result<Expr, CliError> {
    parse(text).map_err(|source| CliError::Syntax { field, source })
}

/// Command-line and environment values that take precedence over the job's own options.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub points: Option<usize>,
    pub mode: Option<Mode>,
}

impl Job {
    pub fn from_spec(spec: JobSpec, overrides: &Overrides) -> Result<Job, CliError> {
        let [u, v] = <[String; 2]>::try_from(spec.variables)
            .map_err(|vars| CliError::Invalid(format!("expected two variables, found {}", vars.len())))?;
        if !is_identifier(&u) || !is_identifier(&v) || u == v {
            return Err(CliError::Invalid(format!("variables `{u}`, `{v}` must be distinct identifiers")));
        }
        let coords = Coords::new(&u, &v);
        if spec.generators.len() != 3 {
            return Err(CliError::Invalid(format!("expected three generators, found {}", spec.generators.len())));
        }
        let mut fields = Vec::with_capacity(3);
        for (k, g) in spec.generators.iter().enumerate() {
            let xi = parse_field(format!("generators[{k}].xi"), &g.xi)?;
            let eta = parse_field(format!("generators[{k}].eta"), &g.eta)?;
            for var in xi.free_vars().into_iter().chain(eta.free_vars()) {
                if var != u && var != v {
                    return Err(CliError::Invalid(format!("generators[{k}] uses unknown symbol `{var}`")));
                }
            }
            fields.push(VectorField::new(xi, eta, coords.clone()));
        }
        let generators: [VectorField; 3] = fields.try_into().expect("three generators");
        let ode = match spec.ode {
            Some(o) => {
                let rhs = parse_field("ode.rhs".into(), &o.rhs)?;
                Some(Ode::new(o.order, &u, &v, rhs).map_err(|e| CliError::Invalid(format!("ode: {e}")))?)
            }
            None => None,
        };
        let target = crate::transform::target_coords(&coords);
        let candidate = match spec.candidate {
            Some(c) => {
                let phi = parse_field("candidate.phi".into(), &c.phi)?;
                let psi = parse_field("candidate.psi".into(), &c.psi)?;
                Some(PointTransformation::new(phi, psi, coords.clone(), target))
            }
            None => None,
        };
        let defaults = Oracle::default();
        let tol = overrides.tol.or(spec.options.tol).unwrap_or(defaults.tol);
        let points = overrides.points.or(spec.options.points).unwrap_or(defaults.points);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Invalid(format!("tolerance {tol} must be positive")));
        }
        if points == 0 {
            return Err(CliError::Invalid("points must be positive".into()));
        }
        let oracle = Oracle {
            tol,
            points,
            seed: overrides.seed.or(spec.options.seed).unwrap_or(defaults.seed),
            ..defaults
        };
        let mode = overrides.mode.or(spec.options.mode).unwrap_or_default();
        Ok(Job { name: spec.name, coords, generators, ode, candidate, oracle, mode })
    }
}

/// Output of one job. Everything here is recomputed by [`run`].
#[derive(Clone, Debug)]
pub struct Report {
    pub name: Option<String>,
    pub mode: Mode,
    pub oracle: Oracle,
    pub classification: ClassificationReport,
    pub construction: Option<Construction>,
    pub verification: Option<Verification>,
    pub timings: Vec<(&'static str, f64)>,
}

#[derive(Clone, Debug)]
pub struct Verification {
    /// `is_symmetry` of each input generator, when an ODE was given.
    pub symmetries: Option<[bool; 3]>,
    /// Correspondence of the constructed map with the canonical fields.
    pub correspondence: Option<[bool; 3]>,
    /// Correspondence of the supplied candidate map.
    pub candidate: Option<CandidateCheck>,
    pub transformed: Option<Ode>,
    /// Whether the canonical fields are symmetries of the transformed ODE.
    pub canonical_form: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct CandidateCheck {
    pub nondegenerate: bool,
    pub correspondence: Vec<bool>,
}

impl Report {
    pub fn partial(&self) -> bool {
        matches!(self.construction, Some(Construction::Partial { .. }))
    }

    fn solved(&self) -> Option<&TransformationResult> {
        match &self.construction {
            Some(Construction::Solved(r)) => Some(r),
            _ => None,
        }
    }
}

pub fn run(job: &Job) -> Result<Report, CliError> {
    let oracle = &job.oracle;
    let mut timings = Vec::new();
    let clock = Instant::now();
    let classification = classify(&job.generators, oracle).map_err(|e: ClassifyError| CliError::stage("classify", e))?;
    timings.push(("classify", clock.elapsed().as_secs_f64()));
    let mut report = Report {
        name: job.name.clone(),
        mode: job.mode,
        oracle: *oracle,
        classification,
        construction: None,
        verification: None,
        timings,
    };
    if job.mode == Mode::Classify {
        return Ok(report);
    }
    let clock = Instant::now();
    let construction = construct_transformation(&report.classification, &job.generators, oracle)
        .map_err(|e: TransformError| CliError::stage("transform", e))?;
    report.timings.push(("transform", clock.elapsed().as_secs_f64()));
    report.construction = Some(construction);
    if job.mode == Mode::Transform {
        return Ok(report);
    }
    let clock = Instant::now();
    report.verification = Some(verify(job, &report)?);
    report.timings.push(("verify", clock.elapsed().as_secs_f64()));
    Ok(report)
}

fn verify(job: &Job, report: &Report) -> Result<Verification, CliError> {
    let oracle = &job.oracle;
    let field_err = |e: FieldError| CliError::stage("verify", e);
    let symmetries = match &job.ode {
        Some(ode) => {
            let mut out = [false; 3];
            for (slot, g) in out.iter_mut().zip(&job.generators) {
                *slot = is_symmetry(g, ode, oracle).map_err(field_err)?;
            }
            Some(out)
        }
        None => None,
    };
    let solved = report.solved();
    let correspondence = match solved {
        Some(r) => Some(r.certify(oracle).map_err(|e| CliError::stage("verify", e))?),
        None => None,
    };
    let candidate = match (&job.candidate, solved) {
        (Some(t), Some(r)) => {
            let nondegenerate = t.is_nondegenerate(oracle).map_err(field_err)?;
            let mut correspondence = Vec::with_capacity(3);
            for (target, source) in r.canonical.iter().zip(&r.matched) {
                correspondence.push(satisfies_correspondence(t, target, source, oracle).map_err(field_err)?);
            }
            Some(CandidateCheck { nondegenerate, correspondence })
        }
        _ => None,
    };
    let (transformed, canonical_form) = match (&job.ode, solved) {
        (Some(ode), Some(r)) => {
            let map = job.candidate.as_ref().unwrap_or(&r.transformation);
            let out = map.transform_ode(ode).map_err(field_err)?;
            let mut holds = true;
            for field in &r.canonical {
                holds &= is_symmetry(field, &out, oracle).map_err(field_err)?;
            }
            (Some(out), Some(holds))
        }
        _ => (None, None),
    };
    Ok(Verification { symmetries, correspondence, candidate, transformed, canonical_form })
}

// ----- rendering -----

fn matrix_json(m: &Matrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|q| Value::String(q.to_string())).collect()))
            .collect(),
    )
}

fn signature_json(s: &Signature) -> Value {
    json!({ "positive": s.positive, "negative": s.negative, "zero": s.zero })
}

fn field_json(f: &VectorField) -> Value {
    json!({ "xi": f.xi.to_string(), "eta": f.eta.to_string() })
}

fn classification_json(c: &ClassificationReport) -> Value {
    let bt = &c.bianchi;
    let mut params = Map::new();
    if let Some(v) = &bt.c {
        params.insert("c".into(), Value::String(v.to_string()));
    }
    if let Some(v) = &bt.cot_theta {
        params.insert("cot_theta".into(), Value::String(v.to_string()));
    }
    if let Some(e) = bt.epsilon {
        params.insert("epsilon".into(), json!(e.value()));
    }
    let d = &c.diagnostics;
    let names = ["Y1", "Y2", "Y3"];
    json!({
        "tag": bt.tag.label(),
        "params": params,
        "brackets": c.structure.to_string(),
        "diagnostics": {
            "dim_derived": d.dim_derived,
            "dim_centralizer": d.dim_centralizer,
            "rank": d.rank.map(|(of, r)| json!({ "of": of.to_string(), "value": r })),
            "adjoint": d.adjoint.as_ref().map(matrix_json),
            "eigen": d.eigen.as_ref().map(|e| e.to_string()),
            "killing_signature": signature_json(&d.killing),
        },
        "adapted_basis": c.adapted.as_ref().map(|b| json!({
            "X": render_combination(&b.x, &names),
            "Y": render_combination(&b.y, &names),
            "Z": render_combination(&b.z, &names),
        })),
    })
}

fn construction_json(c: &Construction) -> Value {
    match c {
        Construction::Solved(r) => {
            let t = &r.transformation;
            let residuals: Map<String, Value> =
                r.residuals.iter().map(|res| (res.name.clone(), Value::String(res.value.to_string()))).collect();
            json!({
                "partial": false,
                "source": [t.source.0, t.source.1],
                "target": [t.target.0, t.target.1],
                "phi": t.phi.to_string(),
                "psi": t.psi.to_string(),
                "canonical": r.canonical.iter().map(field_json).collect::<Vec<_>>(),
                "matched": r.matched.iter().map(field_json).collect::<Vec<_>>(),
                "residuals": residuals,
                "trace": r.trace,
            })
        }
        Construction::Partial { system, reason } => json!({
            "partial": true,
            "reason": reason,
            "matching_system": system.to_json(),
        }),
    }
}

fn verification_json(v: &Verification) -> Value {
    json!({
        "symmetries": v.symmetries,
        "correspondence": v.correspondence,
        "candidate": v.candidate.as_ref().map(|c| json!({
            "nondegenerate": c.nondegenerate,
            "correspondence": c.correspondence,
        })),
        "transformed_ode": v.transformed.as_ref().map(|o| json!({
            "order": o.order,
            "independent": o.independent,
            "dependent": o.dependent,
            "rhs": o.rhs.to_string(),
        })),
        "canonical_form": v.canonical_form,
    })
}

impl Report {
    /// Deterministic JSON; timings are left out so equal jobs give equal bytes.
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "mode": self.mode.as_str(),
            "options": { "seed": self.oracle.seed, "tol": self.oracle.tol, "points": self.oracle.points },
            "partial": self.partial(),
            "classification": classification_json(&self.classification),
            "transformation": self.construction.as_ref().map(construction_json),
            "verification": self.verification.as_ref().map(verification_json),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let c = &self.classification;
        if let Some(name) = &self.name {
            let _ = writeln!(out, "job: {name}");
        }
        let _ = writeln!(out, "type: {}", c.bianchi);
        let _ = writeln!(out, "brackets: {}", c.structure);
        let d = &c.diagnostics;
        let _ = write!(out, "diagnostics: dim G' = {}", d.dim_derived);
        if let Some(z) = d.dim_centralizer {
            let _ = write!(out, ", dim Z_G(G') = {z}");
        }
        if let Some((of, r)) = d.rank {
            let _ = write!(out, ", rank {of} = {r}");
        }
        if let Some(e) = &d.eigen {
            let _ = write!(out, ", eigenvalues {e}");
        }
        let _ = writeln!(out, ", Killing signature {}", d.killing);
        match &c.adapted {
            Some(b) => {
                let _ = writeln!(out, "adapted basis: {b}");
            }
            None => {
                let _ = writeln!(out, "adapted basis: none");
            }
        }
        match &self.construction {
            Some(Construction::Solved(r)) => {
                let t = &r.transformation;
                let _ = writeln!(out, "transformation: {} = {}, {} = {}", t.source.0, t.phi, t.source.1, t.psi);
                for res in &r.residuals {
                    let _ = writeln!(out, "  {} = {}", res.name, res.value);
                }
                for step in &r.trace {
                    let _ = writeln!(out, "  - {step}");
                }
            }
            Some(Construction::Partial { system, reason }) => {
                let _ = writeln!(out, "transformation: partial ({reason})");
                let _ = writeln!(out, "matching system:\n{system}");
            }
            None => {}
        }
        if let Some(v) = &self.verification {
            let flags = |b: &[bool]| b.iter().map(|&x| if x { "yes" } else { "no" }).collect::<Vec<_>>().join(", ");
            if let Some(s) = &v.symmetries {
                let _ = writeln!(out, "symmetries of the ODE: {}", flags(s));
            }
            if let Some(s) = &v.correspondence {
                let _ = writeln!(out, "correspondence: {}", flags(s));
            }
            if let Some(cand) = &v.candidate {
                let _ = writeln!(
                    out,
                    "candidate: nondegenerate {}, correspondence {}",
                    if cand.nondegenerate { "yes" } else { "no" },
                    flags(&cand.correspondence)
                );
            }
            if let Some(o) = &v.transformed {
                let _ = writeln!(out, "transformed ODE: {} = {}", crate::vfield::derivative_symbol(&o.dependent, o.order), o.rhs);
            }
            if let Some(ok) = v.canonical_form {
                let _ = writeln!(out, "canonical form: {}", if ok { "yes" } else { "no" });
            }
        }
        let times: Vec<String> = self.timings.iter().map(|(stage, s)| format!("{stage} {s:.3}s")).collect();
        let _ = writeln!(out, "time: {}", times.join(", "));
        out
    }
}

// ----- command line -----

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "bianchi", version, about = "Classify 3D Lie algebras of planar vector fields and reduce their ODEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the algebra spanned by the job's generators.
    Classify(JobArgs),
    /// Classify and construct the transformation to canonical form.
    Transform(JobArgs),
    /// Classify, transform, and check symmetries, correspondence and the transformed ODE.
    Verify(JobArgs),
}

#[derive(Debug, Args)]
pub struct JobArgs {
    /// Job file; `-` reads standard input.
    pub job: PathBuf,
    #[arg(long, env = "BIANCHI_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "BIANCHI_TOL")]
    pub tol: Option<f64>,
    #[arg(long, env = "BIANCHI_POINTS")]
    pub points: Option<usize>,
    #[arg(long, value_enum, env = "BIANCHI_FORMAT", default_value_t = Format::Text)]
    pub format: Format,
}

impl Command {
    fn parts(&self) -> (Mode, &JobArgs) {
        match self {
            Command::Classify(a) => (Mode::Classify, a),
            Command::Transform(a) => (Mode::Transform, a),
            Command::Verify(a) => (Mode::Verify, a),
        }
    }
}

fn read_job(path: &PathBuf) -> Result<String, CliError> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(io)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

/// Execute a parsed command line, returning the rendered report.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let (mode, args) = cli.command.parts();
    let spec = JobSpec::from_json(&read_job(&args.job)?)?;
    let overrides = Overrides { seed: args.seed, tol: args.tol, points: args.points, mode: Some(mode) };
    let job = Job::from_spec(spec, &overrides)?;
    let report = run(&job)?;
    Ok(match args.format {
        Format::Text => report.to_text(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("serializable report");
            s.push('\n');
            s
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const ABELIAN: &str = r#"{
        "variables": ["u", "v"],
        "generators": [{"xi": "1", "eta": "0"}, {"xi": "v", "eta": "0"}, {"xi": "v^2", "eta": "0"}],
        "options": {"mode": "classify"}
    }"#;

    #[test]
    fn job_options_fill_in_defaults() {
        let job = Job::from_spec(JobSpec::from_json(ABELIAN).unwrap(), &Overrides::default()).unwrap();
        assert_eq!(job.mode, Mode::Classify);
        assert_eq!((job.oracle.seed, job.oracle.points), (42, 50));
        assert_eq!(job.oracle.tol, 1e-8);
    }

    #[test]
    fn overrides_beat_job_options() {
        let o = Overrides { seed: Some(7), mode: Some(Mode::Verify), ..Overrides::default() };
        let job = Job::from_spec(JobSpec::from_json(ABELIAN).unwrap(), &o).unwrap();
        assert_eq!((job.oracle.seed, job.mode), (7, Mode::Verify));
    }

    #[test]
    fn malformed_generator_reports_offset() {
        let text = ABELIAN.replace("\"v^2\"", "\"v^*2\"");
        let err = Job::from_spec(JobSpec::from_json(&text).unwrap(), &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        match err {
            CliError::Syntax { field, source } => {
                assert_eq!(field, "generators[2].xi");
                assert_eq!(source.offset(), 2);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_wrong_generator_count() {
        let text = ABELIAN.replace(r#", {"xi": "v^2", "eta": "0"}"#, "");
        let err = Job::from_spec(JobSpec::from_json(&text).unwrap(), &Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Invalid(_)));
    }

    #[test]
    fn rejects_repeated_variable() {
        let text = ABELIAN.replace(r#"["u", "v"]"#, r#"["u", "u"]"#);
        assert!(Job::from_spec(JobSpec::from_json(&text).unwrap(), &Overrides::default()).is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let err = JobSpec::from_json("{\n  \"variables\": [1]\n}").unwrap_err();
        assert!(matches!(err, CliError::Json { line: 2, .. }));
    }

    #[test]
    fn classify_report_is_deterministic() {
        let job = Job::from_spec(JobSpec::from_json(ABELIAN).unwrap(), &Overrides::default()).unwrap();
        let a = run(&job).unwrap().to_json();
        let b = run(&job).unwrap().to_json();
        assert_eq!(a, b);
        assert_eq!(a["classification"]["tag"], "L3:1");
        assert_eq!(a["partial"], false);
    }
}
