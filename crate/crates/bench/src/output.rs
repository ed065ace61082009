//! CSV writing: comma separated, header row, LF endings and reals with 17
//! significant digits so every double round-trips.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use crate::error::{BenchError, Result};

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| BenchError::Output {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

pub fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| BenchError::Output {
        path: path.to_path_buf(),
        source,
    })
}
