//! Plain-text ensemble files: a `# d=<d> L=<L> seed=<s> k=<k>` header,
//! then one line of space-separated coefficients per field. Log-weights
//! go to a sidecar with extension `.logw`, one value per line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::WeightedEnsemble;
use crate::error::{Error, Result};
use crate::harmonics::SphereField;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("logw")
}

/// Writes the fields to `path` and log-weights to the `.logw` sidecar.
pub fn write_ensemble(ensemble: &WeightedEnsemble, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<fs::File>| -> std::io::Result<()> {
        writeln!(
            out,
            "# d={} L={} seed={} k={}",
            ensemble.dim(),
            ensemble.cutoff(),
            ensemble.seed(),
            ensemble.k()
        )?;
        for field in ensemble.fields() {
            let line: Vec<String> = field.coeffs().iter().map(|c| format!("{c:.17e}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| io_err(path, e))?;

    let weights = sidecar(path);
    let body: String = ensemble.log_weights().iter().map(|w| format!("{w:.17e}\n")).collect();
    fs::write(&weights, body).map_err(|e| io_err(&weights, e))
}

fn header_value(header: &str, key: &str) -> Result<u64> {
    header
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .ok_or_else(|| Error::InvalidArgument(format!("ensemble header lacks {key}")))?
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("ensemble header {key}: {e}")))
}

/// Reads an ensemble written by [`write_ensemble`]. A missing sidecar
/// means unit weights.
pub fn read_ensemble(path: &Path) -> Result<WeightedEnsemble> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is empty", path.display())))?
        .map_err(|e| io_err(path, e))?;
    if !header.starts_with('#') {
        return Err(Error::InvalidArgument("ensemble file must start with a # header".into()));
    }
    let dim = header_value(&header, "d")? as usize;
    let cutoff = header_value(&header, "L")? as usize;
    let seed = header_value(&header, "seed")?;
    let k = header_value(&header, "k")? as usize;

    let mut fields = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let coeffs = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("row {row}: {e}")))?;
        fields.push(SphereField::from_coeffs(dim, cutoff, coeffs)?);
    }

    let weights = sidecar(path);
    let log_weights = if weights.exists() {
        fs::read_to_string(&weights)
            .map_err(|e| io_err(&weights, e))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", weights.display())))?
    } else {
        vec![0.0; fields.len()]
    };
    WeightedEnsemble::from_parts(fields, log_weights, k, None, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{free_covariance, Operator};
    use crate::sampler::GaussianSampler;

    #[test]
    fn round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("qftlab-export-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ens.txt");
        let mut s = GaussianSampler::new(Operator::from(free_covariance(1.5, 1, 5).unwrap()), 9).unwrap();
        let fields = s.sample(7);
        let logw: Vec<f64> = (0..7).map(|i| -0.1 * i as f64).collect();
        let e = WeightedEnsemble::from_parts(fields, logw, 3, None, 9).unwrap();
        write_ensemble(&e, &path).unwrap();
        let back = read_ensemble(&path).unwrap();
        assert_eq!((back.dim(), back.cutoff(), back.seed(), back.k()), (1, 5, 9, 3));
        assert_eq!(back.log_weights(), e.log_weights());
        for (a, b) in back.fields().iter().zip(e.fields()) {
            assert_eq!(a.coeffs(), b.coeffs());
        }
        fs::remove_file(sidecar(&path)).unwrap();
        assert!(read_ensemble(&path).unwrap().log_weights().iter().all(|w| *w == 0.0));
        fs::remove_dir_all(&dir).unwrap();
    }
}
