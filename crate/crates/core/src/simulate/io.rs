use std::io::{Read, Write};

use crate::design::io::csv_writer;
use crate::error::{Error, Result};
use crate::simulate::dataset::{ChoiceDataset, ChoiceRow, DatasetMeta};

/// `agent_id, choice_set_id, alt_id, is_optout, <attributes>, <covariates>, chosen`.
pub fn write_dataset_csv<W: Write>(data: &ChoiceDataset, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header: Vec<String> = ["agent_id", "choice_set_id", "alt_id", "is_optout"].map(String::from).to_vec();
    header.extend(data.attribute_names.iter().cloned());
    header.extend(data.covariate_names.iter().cloned());
    header.push("chosen".into());
    w.write_record(&header)?;
    let mut rec: Vec<String> = Vec::with_capacity(header.len());
    for r in &data.rows {
        rec.clear();
        rec.push(r.agent_id.to_string());
        rec.push(r.choice_set_id.to_string());
        rec.push(r.alt_id.to_string());
        rec.push(u8::from(r.is_optout).to_string());
        rec.extend(r.attributes.iter().map(f64::to_string));
        rec.extend(r.covariates.iter().map(f64::to_string));
        rec.push(u8::from(r.chosen).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("dataset csv", e))?;
    Ok(())
}

/// Parse a dataset CSV. Columns between `is_optout` and `chosen` that are
/// named in `attribute_names` are attributes, the rest covariates.
pub fn read_dataset_csv<R: Read>(input: R, attribute_names: &[String], meta: Option<DatasetMeta>) -> Result<ChoiceDataset> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let fixed = ["agent_id", "choice_set_id", "alt_id", "is_optout"];
    if header.len() < 5 || header[..4] != fixed || header.last().map(String::as_str) != Some("chosen") {
        return Err(Error::Schema(format!("dataset header {header:?} is malformed")));
    }
    let middle = &header[4..header.len() - 1];
    let n_attr = attribute_names.len();
    if middle.len() < n_attr || middle[..n_attr] != *attribute_names {
        return Err(Error::Schema(format!(
            "dataset attribute columns {:?} do not match {attribute_names:?}",
            &middle[..n_attr.min(middle.len())]
        )));
    }
    let covariate_names = middle[n_attr..].to_vec();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Schema(format!("dataset line {line}, column `{}`: not a number", header[c])))
        };
        let int = |c: usize| -> Result<usize> {
            rec.get(c)
                .and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::Schema(format!("dataset line {line}, column `{}`: not an integer", header[c])))
        };
        let flag = |c: usize| -> Result<bool> {
            match int(c)? {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::Schema(format!("dataset line {line}, column `{}`: expected 0 or 1", header[c]))),
            }
        };
        rows.push(ChoiceRow {
            agent_id: int(0)?,
            choice_set_id: int(1)?,
            alt_id: int(2)?,
            is_optout: flag(3)?,
            attributes: (4..4 + n_attr).map(num).collect::<Result<_>>()?,
            covariates: (4 + n_attr..header.len() - 1).map(num).collect::<Result<_>>()?,
            chosen: flag(header.len() - 1)?,
        });
    }
    let meta = meta.unwrap_or_else(|| {
        let agents: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.agent_id).collect();
        let sets: std::collections::BTreeSet<usize> = rows.iter().map(|r| r.choice_set_id).collect();
        let j = rows.iter().map(|r| r.alt_id + 1).max().unwrap_or(0);
        DatasetMeta {
            seed: 0,
            spec_digest: String::new(),
            n_agents: agents.len(),
            n_sets: sets.len(),
            n_alternatives: j,
            k: 0,
            design_digest: String::new(),
        }
    });
    let data = ChoiceDataset {
        attribute_names: attribute_names.to_vec(),
        covariate_names,
        rows,
        meta,
    };
    data.validate()?;
    Ok(data)
}

pub fn write_meta_json<W: Write>(meta: &DatasetMeta, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, meta)?;
    out.write_all(b"\n").map_err(|e| Error::io("dataset metadata", e))?;
    Ok(())
}
