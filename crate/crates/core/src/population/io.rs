use std::io::Write;

use crate::error::Result;
use crate::population::AgentPopulation;

/// Write `agent_id, <covariates...>[, param_<coef>...]`.
pub fn write_population_csv<W: Write>(pop: &AgentPopulation, with_params: bool, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["agent_id".to_string()];
    header.extend(pop.covariate_names.iter().cloned());
    if with_params {
        header.extend(pop.coef_names.iter().map(|c| format!("param_{c}")));
    }
    w.write_record(&header)?;
    for n in 0..pop.n() {
        let mut rec = vec![n.to_string()];
        rec.extend(pop.covariates.row(n).iter().map(|x| x.to_string()));
        if with_params {
            rec.extend(pop.params.row(n).iter().map(|x| x.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| crate::error::Error::io("population csv", e))?;
    Ok(())
}
