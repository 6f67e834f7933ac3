//! Machine report, its JSON encoding and the human rendering derived from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub seed: u64,
    pub model: String,
    pub n: usize,
    pub gross: GrossSection,
    pub profit_relation: ProfitRelation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_form: Option<ReducedFormSection>,
    pub bargaining: BargainingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapley: Option<ShapleySection>,
    pub oracle: Vec<OracleRow>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrossSection {
    /// `price` or `quantity` grid for demand systems, `portfolio` for the reduced form.
    pub basis: String,
    pub nodes: usize,
    pub summary: String,
    pub pairs: Vec<GrossRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrossRow {
    pub i: usize,
    pub j: usize,
    pub verdict: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitRelation {
    pub pair: [usize; 2],
    /// Second difference of the oracle at the full rest-portfolio.
    pub second_difference: f64,
    pub at_full_rest: String,
    pub over_all_rests: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedFormSection {
    pub spillovers: Vec<SpilloverRow>,
    pub loss_ratios: LossRatioRow,
    pub complementarity: ConditionRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpilloverRow {
    pub target: usize,
    /// Indexed `[x_i][x_j]`.
    pub values: [[f64; 2]; 2],
    pub second_difference: f64,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRatioRow {
    pub cl_first: f64,
    pub cl_second: f64,
    pub cl_both: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub lhs: f64,
    pub rhs: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeRow {
    pub firms: Vec<Vec<usize>>,
    pub fees: Vec<f64>,
    pub retailer: f64,
    pub surplus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonMergingRow {
    pub members: Vec<usize>,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BargainingSection {
    pub beta: f64,
    pub pair: [usize; 2],
    pub pre: FeeRow,
    pub post: FeeRow,
    pub t_pre: f64,
    pub t_post: f64,
    pub gap: f64,
    pub identity_residual: f64,
    pub identity_holds: bool,
    pub non_merging: Vec<NonMergingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleySection {
    pub pre: FeeRow,
    pub post: FeeRow,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub portfolio: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_tolerance: Option<f64>,
    pub statuses: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Pretty JSON with every float written to 17 significant digits.
struct SigFormatter<'a>(PrettyFormatter<'a>);

macro_rules! forward {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(writer $(, $arg)*)
        })*
    };
}

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    forward!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("report types always serialize");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn fees(row: &FeeRow) -> String {
    row.firms
        .iter()
        .zip(&row.fees)
        .map(|(f, v)| format!("{{{}}} {v:.6}", f.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Plain-text summary of a report.
pub fn render(r: &Report) -> String {
    let mut s = String::new();
    let [i, j] = r.bargaining.pair;
    let _ = writeln!(s, "model {} (n = {}), seed {}", r.model, r.n, r.seed);
    let _ = writeln!(s, "\ngross relations ({} basis, {} nodes): {}", r.gross.basis, r.gross.nodes, r.gross.summary);
    for p in &r.gross.pairs {
        let _ = writeln!(s, "  ({}, {}) {:<24} [{:+.6}, {:+.6}]", p.i, p.j, p.verdict, p.min, p.max);
    }
    let pr = &r.profit_relation;
    let _ = writeln!(
        s,
        "\nproducts {i} and {j} in profits: {} at the full rest (second difference {:+.6}); {} over all rests",
        pr.at_full_rest, pr.second_difference, pr.over_all_rests
    );
    if let Some(rf) = &r.reduced_form {
        for sp in &rf.spillovers {
            let _ = writeln!(s, "  spillover onto {}: second difference {:+.6} ({})", sp.target, sp.second_difference, sp.relation);
        }
        let cl = &rf.loss_ratios;
        let _ = writeln!(
            s,
            "  loss ratios: CL{i} {:.6}, CL{j} {:.6}, CL{i}{j} {:.6}, CL{i} + CL{j} − CL{i}{j} = {:+.6}",
            cl.cl_first, cl.cl_second, cl.cl_both, cl.gap
        );
        let c = &rf.complementarity;
        let _ = writeln!(s, "  condition: lhs {:.6} vs rhs {:.6} → {}", c.lhs, c.rhs, c.verdict);
    }
    let b = &r.bargaining;
    let _ = writeln!(s, "\nNash-in-Nash fees, β = {}", b.beta);
    let _ = writeln!(s, "  pre:  {}; retailer {:.6}", fees(&b.pre), b.pre.retailer);
    let _ = writeln!(s, "  post: {}; retailer {:.6}", fees(&b.post), b.post.retailer);
    let _ = writeln!(s, "  T_pre {:.6}, T_post {:.6}, gap {:+.6}", b.t_pre, b.t_post, b.gap);
    let _ = writeln!(
        s,
        "  sign identity residual {:.2e} ({})",
        b.identity_residual,
        if b.identity_holds { "ok" } else { "VIOLATED" }
    );
    if let Some(sh) = &r.shapley {
        let _ = writeln!(s, "\nShapley fees");
        let _ = writeln!(s, "  pre:  {}; retailer {:.6}", fees(&sh.pre), sh.pre.retailer);
        let _ = writeln!(s, "  post: {}; retailer {:.6}", fees(&sh.post), sh.post.retailer);
        let _ = writeln!(s, "  gap {:+.6}", sh.gap);
    }
    let _ = writeln!(s, "\noracle");
    for o in &r.oracle {
        let status = o.status.as_deref().map(|x| format!("  {x}")).unwrap_or_default();
        let _ = writeln!(s, "  {}  {:.9}{status}", o.portfolio, o.value);
    }
    if !r.diagnostics.warnings.is_empty() {
        let _ = writeln!(s, "\nwarnings");
        for w in &r.diagnostics.warnings {
            let _ = writeln!(s, "  {w}");
        }
    }
    s
}
