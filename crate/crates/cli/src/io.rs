//! File formats: records, configurations and flip sets as CSV.
//!
//! Every writer refuses to replace an existing file.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use pom_core::analysis::ObservableRecord;
use pom_core::symmetry::FlipSet;
use pom_core::{Angle, Site, SpinConfig, TorusLattice};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Opens `path` for writing, failing if it already exists.
pub fn create_new(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    match OpenOptions::new().write(true).create_new(true).open(path) {
        Ok(f) => Ok(BufWriter::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
            Err(CliError::new(format!("refusing to overwrite {}", path.display())))
        }
        Err(e) => Err(e.into()),
    }
}

/// Fails if any of `paths` exists, so a run never leaves partial output
/// next to an older one.
pub fn ensure_absent(paths: &[&Path]) -> Result<(), CliError> {
    for p in paths {
        if p.exists() {
            return Err(CliError::new(format!("refusing to overwrite {}", p.display())));
        }
    }
    Ok(())
}

pub fn csv_writer<W: Write>(inner: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(inner)
}

/// One row of `records.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub chain: u64,
    pub sweep: u64,
    pub q_x: f64,
    pub q_z: f64,
    pub m_x: f64,
    pub m_z: f64,
    pub e_pure_x: f64,
    pub e_pure_z: f64,
    pub e_mixed: f64,
    pub staggered: f64,
    pub n_up_plaquettes: u32,
    pub et_pure_x: f64,
    pub et_pure_z: f64,
    pub et_mixed: f64,
    pub energy: f64,
}

impl RecordRow {
    pub fn new(chain: u64, r: &ObservableRecord) -> Self {
        Self {
            chain,
            sweep: r.sweep,
            q_x: r.q_x,
            q_z: r.q_z,
            m_x: r.m_x,
            m_z: r.m_z,
            e_pure_x: r.e_pure_x,
            e_pure_z: r.e_pure_z,
            e_mixed: r.e_mixed,
            staggered: r.staggered,
            n_up_plaquettes: r.n_up,
            et_pure_x: r.et_pure_x,
            et_pure_z: r.et_pure_z,
            et_mixed: r.et_mixed,
            energy: r.energy,
        }
    }

    pub fn record(&self) -> ObservableRecord {
        ObservableRecord {
            sweep: self.sweep,
            q_x: self.q_x,
            q_z: self.q_z,
            m_x: self.m_x,
            m_z: self.m_z,
            e_pure_x: self.e_pure_x,
            e_pure_z: self.e_pure_z,
            e_mixed: self.e_mixed,
            et_pure_x: self.et_pure_x,
            et_pure_z: self.et_pure_z,
            et_mixed: self.et_mixed,
            staggered: self.staggered,
            n_up: self.n_up_plaquettes,
            energy: self.energy,
        }
    }
}

pub fn write_records(path: &Path, rows: &[RecordRow]) -> Result<(), CliError> {
    let mut w = csv_writer(create_new(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RecordRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
struct SiteAngle {
    x: usize,
    y: usize,
    angle: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Corner {
    x: usize,
    y: usize,
}

/// Writes one `x,y,angle` row per site, angle in radians.
pub fn write_config<W: Write>(out: W, lattice: &TorusLattice, config: &SpinConfig) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    for i in 0..lattice.site_count() {
        let s = lattice.site(i);
        w.serialize(SiteAngle {
            x: s.x,
            y: s.y,
            angle: config.angle(i).radians(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `x,y,angle` file; every site must appear exactly once.
pub fn read_config(path: &Path, lattice: &TorusLattice) -> Result<SpinConfig, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut angles: Vec<Option<Angle>> = vec![None; lattice.site_count()];
    for row in r.deserialize::<SiteAngle>() {
        let row = row?;
        let site = Site::new(row.x, row.y);
        lattice.check(site)?;
        let slot = &mut angles[lattice.index(site)];
        if slot.is_some() {
            return Err(CliError::new(format!("site ({}, {}) listed twice", row.x, row.y)));
        }
        *slot = Some(Angle::from_radians(row.angle));
    }
    let angles = angles
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            a.ok_or_else(|| {
                let s = lattice.site(i);
                CliError::new(format!("site ({}, {}) missing from {}", s.x, s.y, path.display()))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpinConfig::from_angles(angles))
}

pub fn write_flips<W: Write>(out: W, flips: &FlipSet) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    for c in flips.corners() {
        w.serialize(Corner { x: c.x, y: c.y })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_flips(path: &Path, lattice: &TorusLattice) -> Result<FlipSet, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut corners = Vec::new();
    for row in r.deserialize::<Corner>() {
        let row = row?;
        corners.push(Site::new(row.x, row.y));
    }
    Ok(FlipSet::from_corners(lattice, corners)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn config_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let lat = TorusLattice::new(6).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let cfg = SpinConfig::from_angles((0..36).map(|_| Angle::from_raw(rng.random())).collect());
        let path = dir.path().join("c.csv");
        write_config(create_new(&path).unwrap(), &lat, &cfg).unwrap();
        assert_eq!(read_config(&path, &lat).unwrap(), cfg);
        let head = fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("x,y,angle\n0,0,"));
        assert!(!head.contains('\r'));
    }

    #[test]
    fn flip_set_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lat = TorusLattice::new(8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let flips = FlipSet::random(&lat, &mut rng);
        let path = dir.path().join("f.csv");
        write_flips(create_new(&path).unwrap(), &flips).unwrap();
        assert_eq!(read_flips(&path, &lat).unwrap(), flips);
    }

    #[test]
    fn existing_files_are_not_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        fs::write(&path, "keep").unwrap();
        let err = create_new(&path).unwrap_err();
        assert!(err.to_string().contains("refusing to overwrite"));
        assert_eq!(fs::read_to_string(&path).unwrap(), "keep");
    }

    #[test]
    fn incomplete_configs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        fs::write(&path, "x,y,angle\n0,0,0.5\n").unwrap();
        let lat = TorusLattice::new(2).unwrap();
        assert!(read_config(&path, &lat).is_err());
    }
}
