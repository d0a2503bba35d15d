//! Result rows and their CSV/JSON rendering.

use serde::Serialize;

pub const CSV_HEADER: &str = "E,Noc,Nbf,H,variant,relEnergy,relL2,relH,relG,lambdaMin,wallTimeSeconds";

/// One experiment outcome. Optional fields stay empty (CSV) or null (JSON)
/// when the run did not produce them: error ratios need a fine reference,
/// decay ratios need a nonzero global corrector.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "Noc")]
    pub noc: usize,
    #[serde(rename = "Nbf")]
    pub nbf: usize,
    #[serde(rename = "H")]
    pub h: f64,
    pub variant: String,
    #[serde(rename = "relEnergy")]
    pub rel_energy: Option<f64>,
    #[serde(rename = "relL2")]
    pub rel_l2: Option<f64>,
    #[serde(rename = "relH")]
    pub rel_h: Option<f64>,
    #[serde(rename = "relG")]
    pub rel_g: Option<f64>,
    #[serde(rename = "lambdaMin")]
    pub lambda_min: Option<f64>,
    #[serde(rename = "wallTimeSeconds")]
    pub wall_time_seconds: f64,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.e,
            r.noc,
            r.nbf,
            r.h,
            r.variant,
            cell(r.rel_energy),
            cell(r.rel_l2),
            cell(r.rel_h),
            cell(r.rel_g),
            cell(r.lambda_min),
            r.wall_time_seconds,
        ));
    }
    out
}

pub fn to_json(rows: &[ReportRow]) -> String {
    serde_json::to_string_pretty(rows).expect("report rows serialize")
}
