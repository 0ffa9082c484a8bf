//! Deterministic report serialization: fixed field order and floats printed
//! with 17 significant digits so identical flags reproduce identical bytes.

use floq_core::floquet::{MultiplierReport, Outcome, StabilityVerdict, Witness};
use floq_core::orbit::PeriodicityReport;
use floq_core::system::RegularityReport;

/// 17-significant-digit float (round-trips f64 exactly).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Minimal JSON emitter with explicit structure calls. Every value method
/// works both as an object member (after `key`) and as an array item.
pub struct JsonWriter {
    buf: String,
    needs_comma: Vec<bool>,
    indent: usize,
    after_key: bool,
}

impl JsonWriter {
    pub fn new() -> Self {
        JsonWriter {
            buf: String::new(),
            needs_comma: Vec::new(),
            indent: 0,
            after_key: false,
        }
    }

    pub fn finish(mut self) -> String {
        self.buf.push('\n');
        self.buf
    }

    fn prefix(&mut self) {
        if self.after_key {
            self.after_key = false;
            return;
        }
        if let Some(needs) = self.needs_comma.last_mut() {
            if *needs {
                self.buf.push(',');
            }
            *needs = true;
            self.buf.push('\n');
            for _ in 0..self.indent {
                self.buf.push_str("  ");
            }
        }
    }

    pub fn begin_object(&mut self) -> &mut Self {
        self.prefix();
        self.buf.push('{');
        self.needs_comma.push(false);
        self.indent += 1;
        self
    }

    pub fn end_object(&mut self) -> &mut Self {
        let had_fields = self.needs_comma.pop().unwrap_or(false);
        self.indent -= 1;
        if had_fields {
            self.buf.push('\n');
            for _ in 0..self.indent {
                self.buf.push_str("  ");
            }
        }
        self.buf.push('}');
        self
    }

    pub fn begin_array(&mut self) -> &mut Self {
        self.prefix();
        self.buf.push('[');
        self.needs_comma.push(false);
        self.indent += 1;
        self
    }

    pub fn end_array(&mut self) -> &mut Self {
        let had_items = self.needs_comma.pop().unwrap_or(false);
        self.indent -= 1;
        if had_items {
            self.buf.push('\n');
            for _ in 0..self.indent {
                self.buf.push_str("  ");
            }
        }
        self.buf.push(']');
        self
    }

    pub fn key(&mut self, name: &str) -> &mut Self {
        self.prefix();
        self.buf.push('"');
        escape_into(&mut self.buf, name);
        self.buf.push_str("\": ");
        self.after_key = true;
        self
    }

    pub fn value_str(&mut self, v: &str) -> &mut Self {
        self.prefix();
        self.buf.push('"');
        escape_into(&mut self.buf, v);
        self.buf.push('"');
        self
    }

    /// Non-finite floats serialize as null.
    pub fn value_f64(&mut self, v: f64) -> &mut Self {
        self.prefix();
        if v.is_finite() {
            let s = fmt_f64(v);
            self.buf.push_str(&s);
        } else {
            self.buf.push_str("null");
        }
        self
    }

    pub fn value_usize(&mut self, v: usize) -> &mut Self {
        self.prefix();
        let s = v.to_string();
        self.buf.push_str(&s);
        self
    }

    pub fn value_bool(&mut self, v: bool) -> &mut Self {
        self.prefix();
        self.buf.push_str(if v { "true" } else { "false" });
        self
    }

    pub fn value_null(&mut self) -> &mut Self {
        self.prefix();
        self.buf.push_str("null");
        self
    }
}

fn escape_into(buf: &mut String, s: &str) {
    for ch in s.chars() {
        match ch {
            '"' => buf.push_str("\\\""),
            '\\' => buf.push_str("\\\\"),
            '\n' => buf.push_str("\\n"),
            '\r' => buf.push_str("\\r"),
            '\t' => buf.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                buf.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => buf.push(c),
        }
    }
}

pub fn write_complex_array(w: &mut JsonWriter, values: &[floq_core::Complex64]) {
    w.begin_array();
    for v in values {
        w.begin_object();
        w.key("re").value_f64(v.re);
        w.key("im").value_f64(v.im);
        w.end_object();
    }
    w.end_array();
}

pub fn write_periodicity(w: &mut JsonWriter, r: &PeriodicityReport) {
    w.begin_object();
    w.key("closure_error").value_f64(r.closure_error);
    w.key("max_residual").value_f64(r.max_residual);
    w.key("worst_time").value_f64(r.worst_time);
    w.key("tolerance").value_f64(r.tolerance);
    w.key("pass").value_bool(r.pass);
    w.end_object();
}

pub fn write_regularity(w: &mut JsonWriter, r: &RegularityReport) {
    w.begin_object();
    w.key("samples").value_usize(r.samples);
    w.key("max_conserved").value_f64(r.max_conserved);
    w.key("max_dissipated").value_f64(r.max_dissipated);
    w.key("independence_margin")
        .value_f64(r.independence_margin);
    w.key("regular_value_margin")
        .value_f64(r.regular_value_margin);
    w.key("conserved_regular_value_margin");
    match r.conserved_regular_value_margin {
        Some(v) => {
            w.value_f64(v);
        }
        None => {
            w.value_null();
        }
    }
    w.key("membership_tol").value_f64(r.options.membership_tol);
    w.key("independence_min")
        .value_f64(r.options.independence_min);
    w.key("regular_value_min")
        .value_f64(r.options.regular_value_min);
    w.key("pass").value_bool(r.pass);
    w.end_object();
}

pub fn outcome_name(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::StableOnManifold => "StableOnManifold",
        Outcome::Unstable => "Unstable",
        Outcome::Inconclusive => "Inconclusive",
    }
}

pub fn write_verdict(w: &mut JsonWriter, v: &StabilityVerdict) {
    w.key("verdict").value_str(outcome_name(v.outcome));
    w.key("witness");
    w.begin_object();
    match &v.witness {
        Witness::PositiveIntegral { index, integral } => {
            w.key("kind").value_str("positive_integral");
            w.key("index").value_usize(*index);
            w.key("integral").value_f64(*integral);
        }
        Witness::NegativeIntegrals { integrals } => {
            w.key("kind").value_str("negative_integrals");
            w.key("integrals");
            w.begin_array();
            for &v in integrals {
                w.value_f64(v);
            }
            w.end_array();
        }
        Witness::None { reason } => {
            w.key("kind").value_str("none");
            w.key("reason").value_str(reason);
        }
    }
    w.end_object();
    w.key("manifold").value_str(&v.manifold);
}

pub fn write_multiplier_body(w: &mut JsonWriter, r: &MultiplierReport) {
    w.key("period").value_f64(r.period);
    w.key("conserved_count").value_usize(r.conserved_count);
    w.key("dissipated_count").value_usize(r.dissipated_count);
    w.key("integrals");
    w.begin_array();
    for &v in &r.integrals {
        w.value_f64(v);
    }
    w.end_array();
    w.key("integral_errors");
    w.begin_array();
    for &v in &r.integral_errors {
        w.value_f64(v);
    }
    w.end_array();
    w.key("analytic");
    write_complex_array(w, &r.analytic);
    w.key("numeric");
    if r.numeric.is_empty() {
        w.value_null();
    } else {
        write_complex_array(w, &r.numeric);
    }
    w.key("reduced");
    if r.reduced.is_empty() {
        w.value_null();
    } else {
        write_complex_array(w, &r.reduced);
    }
    w.key("pairing");
    if r.pairing.is_empty() {
        w.value_null();
    } else {
        w.begin_array();
        for p in &r.pairing {
            w.begin_object();
            w.key("analytic_re").value_f64(p.analytic.re);
            w.key("analytic_im").value_f64(p.analytic.im);
            w.key("numeric_re").value_f64(p.numeric.re);
            w.key("numeric_im").value_f64(p.numeric.im);
            w.key("gap").value_f64(p.gap);
            w.end_object();
        }
        w.end_array();
    }
    w.key("max_pairing_gap");
    match r.max_pairing_gap() {
        Some(g) => {
            w.value_f64(g);
        }
        None => {
            w.value_null();
        }
    }
    w.key("unit_cluster_count");
    match r.unit_cluster_count {
        Some(c) => {
            w.value_usize(c);
        }
        None => {
            w.value_null();
        }
    }
}

/// CSV summary: one row per analytic multiplier with its paired numeric
/// value when available.
pub fn multiplier_csv(r: &MultiplierReport) -> String {
    let mut out = String::from("index,analytic_re,analytic_im,numeric_re,numeric_im,gap\n");
    if r.pairing.is_empty() {
        for (i, a) in r.analytic.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},,,\n",
                i + 1,
                fmt_f64(a.re),
                fmt_f64(a.im)
            ));
        }
    } else {
        for (i, p) in r.pairing.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                i + 1,
                fmt_f64(p.analytic.re),
                fmt_f64(p.analytic.im),
                fmt_f64(p.numeric.re),
                fmt_f64(p.numeric.im),
                fmt_f64(p.gap)
            ));
        }
    }
    out
}
