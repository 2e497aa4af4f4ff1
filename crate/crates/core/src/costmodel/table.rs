use std::ops::RangeInclusive;

use super::{comm_hga, comm_hgaka, comm_kerberos, comp_hga, comp_hgaka, comp_kerberos, pcc_ms, CostError, TimingModel};
use crate::batch;

pub const CSV_HEADER: [&str; 8] = [
    "nc",
    "comm_hgaka_bits",
    "comm_hga_bits",
    "comm_m2o_total",
    "comm_kerberos",
    "pcc_hgaka_ms",
    "pcc_hga_ms",
    "pcc_kerberos_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CostRow {
    pub nc: usize,
    pub comm_hgaka_bits: u64,
    pub comm_hga_bits: u64,
    pub comm_m2o_total: u64,
    pub comm_kerberos: u64,
    pub pcc_hgaka_ms: f64,
    pub pcc_hga_ms: f64,
    pub pcc_kerberos_ms: f64,
}

fn point(nc: usize, timing: &TimingModel) -> Result<CostRow, CostError> {
    let hgaka = comm_hgaka(nc)?.bits;
    let hga = comm_hga(nc)?.bits;
    Ok(CostRow {
        nc,
        comm_hgaka_bits: hgaka,
        comm_hga_bits: hga,
        comm_m2o_total: hgaka + hga,
        comm_kerberos: comm_kerberos(nc)?.bits,
        pcc_hgaka_ms: pcc_ms(&comp_hgaka(nc)?.counts, timing)?,
        pcc_hga_ms: pcc_ms(&comp_hga(nc)?.counts, timing)?,
        pcc_kerberos_ms: pcc_ms(&comp_kerberos(nc)?.counts, timing)?,
    })
}

/// One row per group size, evaluated on the rayon pool when available.
pub fn cost_table(range: RangeInclusive<usize>, timing: &TimingModel) -> Result<Vec<CostRow>, CostError> {
    batch::map(range.collect(), |nc| point(nc, timing)).into_iter().collect()
}

pub fn cost_table_seq(range: RangeInclusive<usize>, timing: &TimingModel) -> Result<Vec<CostRow>, CostError> {
    batch::map_seq(range.collect(), |nc| point(nc, timing)).into_iter().collect()
}

/// Times are printed with six decimals so files diff cleanly.
pub fn to_csv(rows: &[CostRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("write to memory");
    for r in rows {
        w.write_record([
            r.nc.to_string(),
            r.comm_hgaka_bits.to_string(),
            r.comm_hga_bits.to_string(),
            r.comm_m2o_total.to_string(),
            r.comm_kerberos.to_string(),
            format!("{:.6}", r.pcc_hgaka_ms),
            format!("{:.6}", r.pcc_hga_ms),
            format!("{:.6}", r.pcc_kerberos_ms),
        ])
        .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}
