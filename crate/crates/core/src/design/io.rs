//! Design CSV and efficiency-report JSON.

use std::io::{Read, Write};

use crate::design::efficiency::EfficiencyReport;
use crate::design::types::{Alternative, AttributeSpec, ChoiceSet, Design, Profile};
use crate::error::{Error, Result};

pub(crate) fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// One row per (choice set, alternative); opt-out rows carry zeros.
pub fn write_design_csv<W: Write>(design: &Design, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header = vec!["choice_set_id".to_string(), "alt_id".into(), "is_optout".into()];
    header.extend(design.attribute_names());
    w.write_record(&header)?;
    let zeros = design.optout_values();
    for (s, set) in design.choice_sets().iter().enumerate() {
        for (j, alt) in set.alternatives.iter().enumerate() {
            let values = alt.profile().map_or(zeros.as_slice(), Profile::values);
            let mut rec = vec![s.to_string(), j.to_string(), u8::from(alt.is_optout()).to_string()];
            rec.extend(values.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io("design csv", e))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize, what: &str) -> Result<T> {
    rec.get(i)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::Schema(format!("design csv line {line}: bad `{what}` value")))
}

/// Read a design written by [`write_design_csv`], validating the header
/// and every level against `attributes`.
pub fn read_design_csv<R: Read>(attributes: &[AttributeSpec], input: R) -> Result<Design> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.clone();
    let mut expected = vec!["choice_set_id".to_string(), "alt_id".into(), "is_optout".into()];
    expected.extend(attributes.iter().map(|a| a.name.clone()));
    let got: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    if got != expected {
        return Err(Error::Schema(format!(
            "design csv header {got:?} does not match expected {expected:?}"
        )));
    }
    let mut sets: Vec<Vec<(usize, Alternative)>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let s: usize = parse_field(&rec, 0, line, "choice_set_id")?;
        let j: usize = parse_field(&rec, 1, line, "alt_id")?;
        let optout: u8 = parse_field(&rec, 2, line, "is_optout")?;
        let values: Vec<f64> = (0..attributes.len())
            .map(|a| parse_field(&rec, 3 + a, line, &attributes[a].name))
            .collect::<Result<_>>()?;
        let alt = match optout {
            0 => Alternative::Profile(Profile(values)),
            1 => Alternative::OptOut,
            _ => return Err(Error::Schema(format!("design csv line {line}: is_optout must be 0 or 1"))),
        };
        if s >= sets.len() {
            if s != sets.len() {
                return Err(Error::Schema(format!("design csv line {line}: choice sets must be numbered consecutively")));
            }
            sets.push(Vec::new());
        }
        if s + 1 != sets.len() {
            return Err(Error::Schema(format!("design csv line {line}: rows of a choice set must be contiguous")));
        }
        if j != sets[s].len() {
            return Err(Error::Schema(format!("design csv line {line}: alt_id out of sequence")));
        }
        sets[s].push((j, alt));
    }
    let sets = sets
        .into_iter()
        .map(|alts| ChoiceSet::new(alts.into_iter().map(|(_, a)| a).collect()))
        .collect();
    let design = Design::new(attributes.to_vec(), sets)?;
    design.validate_levels()?;
    Ok(design)
}

pub fn write_report_json<W: Write>(report: &EfficiencyReport, out: W) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, report)?;
    out.write_all(b"\n").map_err(|e| Error::io("report json", e))?;
    Ok(())
}
