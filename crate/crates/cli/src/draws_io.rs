//! Draws files: `chain` and `iter` columns followed by one column per
//! parameter. Reals carry 17 significant digits; undefined values are `NA`.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use tablerecon::samplers::{ChainDraws, Column, ColumnKind};
use tablerecon::DrawMatrix;

pub const UNDEFINED: &str = "NA";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_draws<W: Write>(draws: &DrawMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(draws.names().iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for (c, chain) in draws.chains().iter().enumerate() {
        for (i, iter) in chain.iterations.iter().enumerate() {
            row.clear();
            row.push((c + 1).to_string());
            row.push(iter.to_string());
            for col in &chain.columns {
                row.push(match col {
                    Column::Count(v) => v[i].to_string(),
                    Column::Real(v) => real(v[i]),
                    Column::Measure(v) => v[i].map_or_else(|| UNDEFINED.to_string(), real),
                });
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

enum Cell {
    Count(u64),
    Real(f64),
    Undefined,
}

fn parse_cell(s: &str) -> Option<Cell> {
    if s == UNDEFINED {
        Some(Cell::Undefined)
    } else if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok().map(Cell::Count)
    } else {
        s.parse().ok().map(Cell::Real)
    }
}

/// Read a draws file back. A column whose every entry is an unsigned
/// integer is a count; one containing `NA` is a derived measure.
pub fn read_draws<R: Read>(input: R) -> Result<DrawMatrix> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "chain" || header[1] != "iter" {
        bail!("draws file must start with `chain` and `iter` columns");
    }
    let names = header[2..].to_vec();
    let mut chain_ids: Vec<u64> = Vec::new();
    let mut iters: Vec<Vec<u64>> = Vec::new();
    let mut cells: Vec<Vec<Vec<Cell>>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        let chain: u64 = rec[0].parse().with_context(|| format!("row {row}: bad chain index"))?;
        let iter: u64 = rec[1].parse().with_context(|| format!("row {row}: bad iteration"))?;
        let c = match chain_ids.iter().position(|&id| id == chain) {
            Some(c) => c,
            None => {
                chain_ids.push(chain);
                iters.push(Vec::new());
                cells.push((0..names.len()).map(|_| Vec::new()).collect());
                chain_ids.len() - 1
            }
        };
        iters[c].push(iter);
        for (j, field) in rec.iter().skip(2).enumerate() {
            let cell = parse_cell(field).with_context(|| format!("row {row}, column `{}`: cannot parse {field:?}", names[j]))?;
            cells[c][j].push(cell);
        }
    }
    if chain_ids.is_empty() {
        bail!("draws file has no rows");
    }
    let kinds: Vec<ColumnKind> = (0..names.len())
        .map(|j| {
            let all = cells.iter().flat_map(|chain| chain[j].iter());
            let mut kind = ColumnKind::Count;
            for cell in all {
                match cell {
                    Cell::Undefined => return ColumnKind::Measure,
                    Cell::Real(_) => kind = ColumnKind::Real,
                    Cell::Count(_) => {}
                }
            }
            kind
        })
        .collect();
    let chains = iters
        .into_iter()
        .zip(cells)
        .map(|(iterations, cols)| {
            let columns = cols
                .into_iter()
                .zip(&kinds)
                .map(|(col, kind)| match kind {
                    ColumnKind::Count => Column::Count(
                        col.into_iter().map(|c| if let Cell::Count(v) = c { v } else { unreachable!() }).collect(),
                    ),
                    ColumnKind::Real => Column::Real(col.into_iter().map(cell_value).map(Option::unwrap).collect()),
                    ColumnKind::Measure => Column::Measure(col.into_iter().map(cell_value).collect()),
                })
                .collect();
            ChainDraws { iterations, columns }
        })
        .collect();
    Ok(DrawMatrix::new(names, chains)?)
}

fn cell_value(c: Cell) -> Option<f64> {
    match c {
        Cell::Count(v) => Some(v as f64),
        Cell::Real(v) => Some(v),
        Cell::Undefined => None,
    }
}
