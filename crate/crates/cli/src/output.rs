use std::fs;
use std::path::{Path, PathBuf};

use hyperwave::quadrature::QuadGrid;
use serde_json::{json, Value};

use crate::Failure;

/// Floats in CSV files carry 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn grid_summary(grid: &QuadGrid) -> Value {
    json!({
        "lower": grid.lower(),
        "upper": grid.upper(),
        "panels": grid.panel_count(),
        "nodes": grid.len(),
        "max_panel_width": grid.max_panel_width(),
    })
}

/// Collects the files of one experiment and writes them under `dir`.
pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    fn io(&self, name: &str, e: impl std::fmt::Display) -> Failure {
        Failure::Io(format!("cannot write {}: {e}", self.dir.join(name).display()))
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(|e| self.io(name, e))?;
        w.write_record(header).map_err(|e| self.io(name, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| self.io(name, e))?;
        }
        w.flush().map_err(|e| self.io(name, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| self.io(name, e))?;
        text.push('\n');
        fs::write(self.dir.join(name), text).map_err(|e| self.io(name, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}
