use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Artifacts and assertions of one command run.
pub struct Run {
    dir: PathBuf,
    pub checks: Vec<Check>,
    pub report: String,
    tables: Vec<(String, String)>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            checks: Vec::new(),
            report: String::new(),
            tables: Vec::new(),
        })
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        });
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.report.push_str(s.as_ref());
        self.report.push('\n');
    }

    /// Write `file` and remember it as a two-column-or-wider CSV for plotting.
    pub fn table(&mut self, file: &str, contents: &str) -> Result<(), CliError> {
        self.write(file, contents)?;
        self.tables.push((file.to_string(), contents.lines().find(|l| !l.starts_with('#')).unwrap_or("").into()));
        Ok(())
    }

    pub fn write(&self, file: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(file);
        fs::write(&path, contents).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
    }

    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn summary_csv(&self) -> String {
        let mut s = String::from("check,pass,detail\n");
        for c in &self.checks {
            let _ = writeln!(s, "{},{},{}", csv_field(&c.name), c.pass, csv_field(&c.detail));
        }
        s
    }

    fn gnuplot(&self) -> String {
        let mut s = String::from("set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\n");
        for (file, header) in &self.tables {
            let cols = header.split(',').count();
            if cols < 2 {
                continue;
            }
            let stem = file.trim_end_matches(".csv");
            let _ = writeln!(s, "\nset terminal pngcairo size 900,600\nset output '{stem}.png'");
            let series: Vec<String> = (2..=cols).map(|c| format!("'{file}' using 1:{c} with lines")).collect();
            let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        }
        s
    }

    /// Write report, summary and optional plot script; print the summary.
    pub fn finish(self, gnuplot: bool) -> Result<bool, CliError> {
        self.write("report.txt", &self.report)?;
        self.write("summary.csv", &self.summary_csv())?;
        if gnuplot {
            self.write("plot.gp", &self.gnuplot())?;
        }
        for c in &self.checks {
            println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let pass = self.passes();
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        println!(
            "{} of {} checks passed; artifacts in {}",
            self.checks.len() - failed,
            self.checks.len(),
            self.dir.display()
        );
        Ok(pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_are_quoted() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
