//! Text, JSON and CSV renderings of every report the CLI prints.

use serde::{Deserialize, Serialize};
use utcodim::codim::{
    AsymptoticTable, CodimReport, IndependenceEvidence, LowerBoundEvidence, RecurrenceEvidence,
    SandwichEvidence, WitnessReport,
};
use utcodim::groups::GroupSpec;
use utcodim::ut::{
    homogeneous_involution_map, unit_positions, ElementaryGrading, GradingFile,
    HomogeneityConflict, InvolutionAnalysis, InvolutionKind, UtError,
};

pub trait Rendered {
    fn text(&self) -> String;
    fn json(&self) -> String;
    fn csv(&self) -> Result<String, csv::Error>;
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Left-aligned columns separated by two spaces.
fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c + 1 == r.len() {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{cell:<w$}  ", w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn grading_label(g: &Option<GradingFile>) -> String {
    match g {
        None => "none".into(),
        Some(f) => {
            let group = match &f.group {
                GroupSpec::Free { rank } => format!("free({rank})"),
                GroupSpec::Cyclic { order } => format!("Z{order}"),
                GroupSpec::Table { size, .. } => format!("table({size})"),
            };
            format!("{group} [{}]", f.superdiagonal.join(", "))
        }
    }
}

fn kind_label(k: &Option<InvolutionKind>) -> String {
    k.map_or_else(|| "none".to_string(), |k| k.to_string())
}

fn yes(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

impl Rendered for CodimReport {
    fn text(&self) -> String {
        let r = &self.request;
        let mut rows = vec![
            vec!["n".into(), r.n.to_string()],
            vec!["m".into(), r.m.to_string()],
            vec!["grading".into(), grading_label(&r.grading)],
            vec!["involution".into(), kind_label(&r.involution)],
            vec!["value".into(), self.value.to_string()],
            vec!["rank mode".into(), mode_label(self.rank_mode)],
            vec!["rows".into(), self.rows.to_string()],
            vec!["columns".into(), self.columns.to_string()],
        ];
        if let Some(ms) = self.elapsed_ms {
            rows.push(vec!["elapsed ms".into(), ms.to_string()]);
        }
        let mut out = table(&rows);
        if !self.blocks.is_empty() {
            out.push('\n');
            let mut rows = vec![vec!["degrees".to_string(), "value".to_string()]];
            rows.extend(
                self.blocks
                    .iter()
                    .map(|b| vec![format!("({})", b.degrees.join(", ")), b.value.to_string()]),
            );
            out.push_str(&table(&rows));
        }
        out
    }

    fn json(&self) -> String {
        to_json(self)
    }

    fn csv(&self) -> Result<String, csv::Error> {
        let r = &self.request;
        let mut header = vec![
            "n",
            "m",
            "grading",
            "involution",
            "value",
            "rank_mode",
            "rows",
            "columns",
        ];
        let mut row = vec![
            r.n.to_string(),
            r.m.to_string(),
            grading_label(&r.grading),
            kind_label(&r.involution),
            self.value.to_string(),
            mode_label(self.rank_mode),
            self.rows.to_string(),
            self.columns.to_string(),
        ];
        if let Some(ms) = self.elapsed_ms {
            header.push("elapsed_ms");
            row.push(ms.to_string());
        }
        csv_string(&header, &[row])
    }
}

fn mode_label(mode: utcodim::linalg::RankMode) -> String {
    serde_json::to_value(mode)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// One verification outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "kebab-case")]
pub enum Evidence {
    Drensky(IndependenceEvidence),
    StarFamily(IndependenceEvidence),
    Witness(WitnessReport),
    LowerBound(LowerBoundEvidence),
    Recurrence(RecurrenceEvidence),
    Sandwich(SandwichEvidence),
}

impl Evidence {
    pub fn name(&self) -> &'static str {
        match self {
            Evidence::Drensky(_) => "drensky",
            Evidence::StarFamily(_) => "star-family",
            Evidence::Witness(_) => "witness",
            Evidence::LowerBound(_) => "lower-bound",
            Evidence::Recurrence(_) => "recurrence",
            Evidence::Sandwich(_) => "sandwich",
        }
    }

    pub fn passed(&self) -> bool {
        match self {
            Evidence::Drensky(e) | Evidence::StarFamily(e) => e.passed,
            Evidence::Witness(e) => e.passed,
            Evidence::LowerBound(e) => e.passed,
            Evidence::Recurrence(e) => e.passed,
            Evidence::Sandwich(e) => e.passed,
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Evidence::Drensky(e) | Evidence::StarFamily(e) if e.vacuous => {
                "empty family".to_string()
            }
            Evidence::Drensky(e) | Evidence::StarFamily(e) => format!(
                "rank {} of {} members, expected {} ({})",
                e.rank,
                e.family_size,
                e.expected,
                mode_label(e.rank_mode)
            ),
            Evidence::Witness(e) => format!(
                "{0}x{0} matrix, rank {1}, self-evaluations on e_1{2}: {3}, off-diagonal nonzeros {4}",
                e.size,
                e.rank,
                e.n,
                yes(e.self_evaluations_on_corner),
                e.off_diagonal_nonzeros
            ),
            Evidence::LowerBound(e) => format!("c_m = {} >= {}", e.codim, e.bound),
            Evidence::Recurrence(e) => format!("{} = {} + {}", e.codim, e.q, e.codim_smaller),
            Evidence::Sandwich(e) => format!("{} <= {} <= {}", e.ungraded, e.graded, e.fine),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub passed: bool,
    pub results: Vec<Evidence>,
}

impl VerifyOutput {
    pub fn new(results: Vec<Evidence>) -> Self {
        VerifyOutput {
            passed: results.iter().all(Evidence::passed),
            results,
        }
    }
}

fn verdict(b: bool) -> String {
    if b { "PASS" } else { "FAIL" }.to_string()
}

impl Rendered for VerifyOutput {
    fn text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .results
            .iter()
            .map(|e| vec![e.name().to_string(), verdict(e.passed()), e.summary()])
            .collect();
        table(&rows)
    }

    fn json(&self) -> String {
        to_json(self)
    }

    fn csv(&self) -> Result<String, csv::Error> {
        let rows: Vec<Vec<String>> = self
            .results
            .iter()
            .map(|e| vec![e.name().to_string(), e.passed().to_string(), e.summary()])
            .collect();
        csv_string(&["target", "passed", "summary"], &rows)
    }
}

impl Rendered for AsymptoticTable {
    fn text(&self) -> String {
        let mut rows = vec![vec![
            "m".to_string(),
            "c_m".to_string(),
            "target".to_string(),
            "ordinary".to_string(),
            "ratio".to_string(),
        ]];
        rows.extend(self.rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                r.codim.to_string(),
                r.target.clone(),
                r.ordinary_target.clone(),
                r.ratio.clone(),
            ]
        }));
        format!(
            "n {}, grading {}, involution {}\n{}",
            self.n,
            grading_label(&self.grading),
            kind_label(&self.involution),
            table(&rows)
        )
    }

    fn json(&self) -> String {
        to_json(self)
    }

    fn csv(&self) -> Result<String, csv::Error> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.m.to_string(),
                    r.codim.to_string(),
                    r.target.clone(),
                    r.ordinary_target.clone(),
                    r.ratio.clone(),
                ]
            })
            .collect();
        csv_string(&["m", "codim", "target", "ordinary_target", "ratio"], &rows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentView {
    pub degree: String,
    pub dimension: usize,
    pub units: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_image: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingInspection {
    pub grading: GradingFile,
    pub units: usize,
    pub support: Vec<String>,
    pub components: Vec<ComponentView>,
    pub involution: Option<InvolutionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conflict: Option<HomogeneityConflict>,
}

impl GradingInspection {
    pub fn new(grading: &ElementaryGrading, kind: Option<InvolutionKind>) -> Result<Self, UtError> {
        let analysis = kind
            .map(|k| homogeneous_involution_map(grading, k))
            .transpose()?;
        let cert = analysis.as_ref().and_then(InvolutionAnalysis::cert);
        let mut components = Vec::new();
        for g in grading.support() {
            let units = grading.component(&g)?;
            components.push(ComponentView {
                degree: g.to_string(),
                dimension: units.len(),
                units: units.iter().map(|(i, j)| format!("e{i}{j}")).collect(),
                psi_image: cert.and_then(|c| c.psi.get(&g)).map(ToString::to_string),
            });
        }
        let conflict = match &analysis {
            Some(InvolutionAnalysis::NotHomogeneous(c)) => Some(c.clone()),
            _ => None,
        };
        Ok(GradingInspection {
            grading: grading.to_file(),
            units: unit_positions(grading.size()).len(),
            support: grading.support().iter().map(ToString::to_string).collect(),
            components,
            involution: kind,
            homogeneous: analysis.as_ref().map(|a| a.cert().is_some()),
            conflict,
        })
    }
}

impl Rendered for GradingInspection {
    fn text(&self) -> String {
        let mut head = vec![
            vec![
                "grading".to_string(),
                grading_label(&Some(self.grading.clone())),
            ],
            vec!["units".to_string(), self.units.to_string()],
            vec!["support".to_string(), self.support.join(", ")],
            vec!["involution".to_string(), kind_label(&self.involution)],
        ];
        match (&self.homogeneous, &self.conflict) {
            (Some(true), _) => head.push(vec!["homogeneous".into(), "yes".into()]),
            (Some(false), Some(c)) => head.push(vec!["conflict".into(), c.to_string()]),
            _ => {}
        }
        let mut out = table(&head);
        out.push('\n');
        let mut rows = vec![vec![
            "degree".to_string(),
            "dim".to_string(),
            "units".to_string(),
        ]];
        if self.homogeneous == Some(true) {
            rows[0].push("psi".to_string());
        }
        for c in &self.components {
            let mut row = vec![c.degree.clone(), c.dimension.to_string(), c.units.join(" ")];
            if let Some(p) = &c.psi_image {
                row.push(p.clone());
            }
            rows.push(row);
        }
        out.push_str(&table(&rows));
        out
    }

    fn json(&self) -> String {
        to_json(self)
    }

    fn csv(&self) -> Result<String, csv::Error> {
        let rows: Vec<Vec<String>> = self
            .components
            .iter()
            .map(|c| {
                vec![
                    c.degree.clone(),
                    c.dimension.to_string(),
                    c.units.join(" "),
                    c.psi_image.clone().unwrap_or_default(),
                ]
            })
            .collect();
        csv_string(&["degree", "dimension", "units", "psi_image"], &rows)
    }
}
