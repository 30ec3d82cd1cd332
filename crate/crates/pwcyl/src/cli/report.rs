//! Machine-readable result structures and their serialization.
//!
//! JSON floats are emitted with 17 significant digits (`{:.16e}`), which
//! round-trips every f64 exactly and keeps repeated runs byte-identical.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter};

use crate::cycles::{BoundaryCase, CycleOutcome, Cylinder, PeriodicSurface};
use crate::model::{CanonicalParams, FocusCanonicalParams, TangencyReport};
use crate::oracle::OrbitTrace;
use crate::spectral::{PairInvariants, SpectralData};

/// JSON formatter with fixed-width floats; non-finite values map to `null`.
struct SigDigitFormatter;

impl Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + Write,
    {
        CompactFormatter.write_f32(writer, value)
    }
}

/// Serializes any report to the deterministic JSON form.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value
        .serialize(&mut ser)
        .expect("reports serialize infallibly");
    out.push(b'\n');
    String::from_utf8(out).expect("serializer emits UTF-8")
}

/// Classification output: per-piece spectra, pair invariants and the global
/// structure verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangency: Option<Vec<TangencyReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical: Option<CanonicalParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focus_form: Option<FocusCanonicalParams>,
    pub upper: SpectralData,
    pub lower: SpectralData,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantsReport>,
    pub structure: String,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantsReport {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_rule: String,
    pub beta_rule: String,
    pub kappa: f64,
    pub lambda: f64,
    pub root_criterion: f64,
    pub table_pair: String,
    pub swapped: bool,
}

impl InvariantsReport {
    pub fn from_invariants(inv: &PairInvariants) -> InvariantsReport {
        InvariantsReport {
            alpha: inv.alpha,
            beta: inv.beta,
            alpha_rule: inv
                .alpha_source
                .map(|r| r.to_string())
                .unwrap_or_else(|| "unavailable".into()),
            beta_rule: inv
                .beta_source
                .map(|r| r.to_string())
                .unwrap_or_else(|| "unavailable".into()),
            kappa: inv.kappa,
            lambda: inv.lambda,
            root_criterion: 1.0 + inv.alpha * inv.alpha * inv.lambda / inv.kappa,
            table_pair: format!("({}, {})", inv.table_pair.0, inv.table_pair.1),
            swapped: inv.swapped,
        }
    }
}

/// One limit cycle plus its independent closure verification.
#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub x0: f64,
    pub x1: f64,
    pub period: f64,
    pub multiplier: f64,
    /// `|end - start|` of one numerically integrated turn (NaN -> null when
    /// the oracle could not complete the turn).
    pub closure_residual: f64,
}

/// Compact continuum witness (the full grid is reproducible from the range).
#[derive(Debug, Clone, Serialize)]
pub struct ContinuumReport {
    pub nodes: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub max_abs_q: f64,
    pub perturbed_max_q: f64,
    pub breaks_under_perturbation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FocusReport {
    pub cylinders: Vec<Cylinder>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<CycleOutcome>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CyclesReport {
    pub classify: ClassifyReport,
    pub cylinders: Vec<Cylinder>,
    pub cycles: Vec<CycleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_closed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuum: Option<ContinuumReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface: Option<PeriodicSurface>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focus: Option<FocusReport>,
    pub undefined_nodes: usize,
    pub boundary_cases: Vec<BoundaryCase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectation_mismatch: Option<String>,
}

/// Orbit trace as CSV: `t,x,y,z,piece,crossing` rows plus a trailing
/// termination marker comment.
pub fn trace_to_csv(trace: &OrbitTrace) -> String {
    let mut out = String::from("t,x,y,z,piece,crossing\n");
    for p in &trace.points {
        let side = match p.side {
            crate::model::Side::Upper => '+',
            crate::model::Side::Lower => '-',
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.t,
            p.x,
            p.y,
            p.z,
            side,
            if p.crossing { 1 } else { 0 }
        ));
    }
    let marker = match trace.termination {
        crate::oracle::Termination::TimeEnd => {
            if trace.crossings.is_empty() {
                "time-end (no return)"
            } else {
                "time-end"
            }
        }
        crate::oracle::Termination::TangencyHit => "tangency-hit",
        crate::oracle::Termination::NotSewing => "not-sewing",
    };
    out.push_str(&format!("# termination: {marker}\n"));
    out
}

/// One sweep row, flattened for CSV emission.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub type_plus: String,
    pub type_minus: String,
    pub structure: String,
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub n_cylinders: usize,
    pub continuum: bool,
    pub y0: Option<f64>,
    pub period: Option<f64>,
    pub multiplier: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub parameter: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

fn opt(v: &Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_to_csv(report: &SweepReport) -> String {
    let mut out = String::from(
        "value,type_plus,type_minus,structure,kappa,lambda,alpha,beta,n_cylinders,continuum,y0,period,multiplier\n",
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.value,
            r.type_plus,
            r.type_minus,
            r.structure,
            opt(&r.kappa),
            opt(&r.lambda),
            opt(&r.alpha),
            opt(&r.beta),
            r.n_cylinders,
            if r.continuum { 1 } else { 0 },
            opt(&r.y0),
            opt(&r.period),
            opt(&r.multiplier),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_serialize_with_17_digits() {
        #[derive(Serialize)]
        struct S {
            v: f64,
        }
        let s = to_json(&S { v: 0.05 });
        assert!(s.contains("5.0000000000000003e-2"), "{s}");
        // round trip
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["v"].as_f64().unwrap(), 0.05);
    }

    #[test]
    fn non_finite_becomes_null() {
        #[derive(Serialize)]
        struct S {
            v: f64,
        }
        let s = to_json(&S { v: f64::NAN });
        assert!(s.contains("null"), "{s}");
        serde_json::from_str::<serde_json::Value>(&s).unwrap();
    }

    #[test]
    fn json_output_is_deterministic() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: Vec<f64>,
        }
        let v = S {
            a: 1.0 / 3.0,
            b: vec![0.1, 0.2],
        };
        assert_eq!(to_json(&v), to_json(&v));
    }
}
