use std::io::Write;

use super::partition::MaximalPartition;
use super::Packing;
use crate::error::Result;
use crate::measure::AtomicMeasure;

fn coord_headers(dim: usize) -> Vec<String> {
    (0..dim).map(|k| format!("x{k}")).collect()
}

/// One row per center: `center, x0.., radius, ball_mass, cell_size, cell_mass`.
/// Cell columns are filled when a partition is given.
pub fn write_packing_csv<W: Write>(
    out: W,
    packing: &Packing,
    mu: &AtomicMeasure,
    partition: Option<&MaximalPartition>,
) -> Result<()> {
    let dim = mu.space().ambient_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["center".to_string()];
    header.extend(coord_headers(dim));
    header.extend(["radius", "ball_mass", "cell_size", "cell_mass"].map(String::from));
    w.write_record(&header)?;
    let masses = packing.center_masses(mu);
    let cell_masses = partition.map(|p| p.cell_masses(mu));
    for (j, c) in packing.centers.iter().enumerate() {
        let mut row = vec![j.to_string()];
        row.extend(c.iter().map(|v| v.to_string()));
        row.push(packing.radius.to_string());
        row.push(masses[j].to_string());
        match (partition, &cell_masses) {
            (Some(p), Some(m)) => {
                row.push(p.cells[j].len().to_string());
                row.push(m[j].to_string());
            }
            _ => {
                row.push(String::new());
                row.push(String::new());
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per atom: `atom, x0.., mass, cell`.
pub fn write_membership_csv<W: Write>(out: W, partition: &MaximalPartition, mu: &AtomicMeasure) -> Result<()> {
    let dim = mu.space().ambient_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["atom".to_string()];
    header.extend(coord_headers(dim));
    header.extend(["mass", "cell"].map(String::from));
    w.write_record(&header)?;
    for a in 0..mu.len() {
        let mut row = vec![a.to_string()];
        row.extend(mu.point(a).iter().map(|v| v.to_string()));
        row.push(mu.masses()[a].to_string());
        row.push(partition.assignment[a].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{heavy_maximal_packing, maximal_partition};
    use super::*;
    use crate::geometry::Space;

    #[test]
    fn packing_csv_layout() {
        let mu = AtomicMeasure::new(Space::euclidean(1), vec![0.0, 1.0], vec![0.5, 0.5], 1e-3).unwrap();
        let p = heavy_maximal_packing(&mu, 0.1).unwrap();
        let part = maximal_partition(&p, &mu).unwrap();
        let mut buf = Vec::new();
        write_packing_csv(&mut buf, &p, &mu, Some(&part)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "center,x0,radius,ball_mass,cell_size,cell_mass\n0,0,0.1,0.5,1,0.5\n1,1,0.1,0.5,1,0.5\n"
        );
        let mut buf = Vec::new();
        write_membership_csv(&mut buf, &part, &mu).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("atom,x0,mass,cell\n0,0,0.5,0\n"));
    }
}
