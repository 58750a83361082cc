//! Flat-file formats: population CSV (`id,group,uid,f1,...,fk`) and score
//! CSV (`id,score`).

use std::collections::HashMap;
use std::io::{Read, Write};

use thiserror::Error;

use crate::population::{
    apply_predictor, Individual, Population, PopulationError, ScoredPopulation,
};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
    #[error("duplicate score row for `{0}`")]
    DuplicateScore(String),
    #[error(transparent)]
    Population(#[from] PopulationError),
}

fn row_err(record: &csv::StringRecord, msg: impl Into<String>) -> CsvError {
    CsvError::Row {
        line: record.position().map_or(0, |p| p.line()),
        msg: msg.into(),
    }
}

fn parse_f64(record: &csv::StringRecord, field: &str, what: &str) -> Result<f64, CsvError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| row_err(record, format!("cannot parse {what} `{field}`")))
}

pub fn read_population<R: Read>(reader: R) -> Result<Population, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "group" || &header[2] != "uid" {
        return Err(CsvError::Header(
            "population CSV must start with `id,group,uid`".into(),
        ));
    }
    let dim = header.len() - 3;
    for (k, name) in header.iter().skip(3).enumerate() {
        if name != format!("f{}", k + 1) {
            return Err(CsvError::Header(format!(
                "expected feature column `f{}`, found `{name}`",
                k + 1
            )));
        }
    }
    let mut individuals = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let features = record
            .iter()
            .skip(3)
            .map(|f| parse_f64(&record, f, "feature"))
            .collect::<Result<Vec<_>, _>>()?;
        let uid = match &record[2] {
            "" => None,
            u => Some(u.to_string()),
        };
        individuals.push(Individual {
            id: record[0].to_string(),
            group: record[1].to_string(),
            features,
            uid,
        });
    }
    Ok(Population::with_feature_dim(dim, individuals)?)
}

pub fn write_population<W: Write>(population: &Population, writer: W) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "group".into(), "uid".into()];
    header.extend((1..=population.feature_dim()).map(|k| format!("f{k}")));
    wtr.write_record(&header)?;
    for ind in population.individuals() {
        let mut row = vec![
            ind.id.clone(),
            ind.group.clone(),
            ind.uid.clone().unwrap_or_default(),
        ];
        row.extend(ind.features.iter().map(|f| f.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads an `id,score` table. Duplicate ids are rejected.
pub fn read_scores<R: Read>(reader: R) -> Result<HashMap<String, f64>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "id" || &header[1] != "score" {
        return Err(CsvError::Header(
            "scores CSV header must be `id,score`".into(),
        ));
    }
    let mut scores = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let score = parse_f64(&record, &record[1], "score")?;
        if scores.insert(record[0].to_string(), score).is_some() {
            return Err(CsvError::DuplicateScore(record[0].to_string()));
        }
    }
    Ok(scores)
}

/// Writes scores in population order.
pub fn write_scores<W: Write>(sp: &ScoredPopulation, writer: W) -> Result<(), CsvError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "score"])?;
    for (ind, s) in sp.iter() {
        wtr.write_record([ind.id.as_str(), &s.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a population CSV and a scores CSV and joins them.
pub fn read_scored<P: Read, S: Read>(
    population: P,
    scores: S,
) -> Result<ScoredPopulation, CsvError> {
    let population = read_population(population)?;
    let scores = read_scores(scores)?;
    Ok(apply_predictor(population, &scores)?)
}
