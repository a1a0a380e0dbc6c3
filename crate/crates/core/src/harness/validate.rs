use std::fmt;
use std::path::Path;

use super::HarnessError;
use crate::kernel::{DemoFile, EntryKind};
use crate::mlang::{parse_block, Origin, SourceBlock, SyntaxDiagnostic};

#[derive(Debug, Clone)]
pub struct ReplReport {
    pub name: String,
    /// Code entries that parse.
    pub statements: usize,
    /// (entry index, diagnostic) for code entries that do not.
    pub diagnostics: Vec<(usize, SyntaxDiagnostic)>,
}

#[derive(Debug, Clone, Default)]
pub struct DemoReport {
    pub repls: Vec<ReplReport>,
}

impl DemoReport {
    pub fn diagnostic_count(&self) -> usize {
        self.repls.iter().map(|r| r.diagnostics.len()).sum()
    }

    /// One line per diagnostic. Demos with syntax errors still load.
    pub fn warnings(&self) -> Vec<String> {
        self.repls
            .iter()
            .flat_map(|r| {
                r.diagnostics.iter().map(move |(i, d)| {
                    format!("warning: `{}` entry {i}, line {}: {}", r.name, d.line, d.message)
                })
            })
            .collect()
    }
}

impl fmt::Display for DemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.repls.len();
        write!(f, "{n} repl{}", if n == 1 { "" } else { "s" })?;
        if n == 0 {
            return Ok(());
        }
        writeln!(f, ", {} diagnostics", self.diagnostic_count())?;
        for r in &self.repls {
            writeln!(f, "  {}: {} statements", r.name, r.statements)?;
        }
        for w in self.warnings() {
            writeln!(f, "{w}")?;
        }
        Ok(())
    }
}

pub fn validate_demos(demos: &DemoFile) -> DemoReport {
    let repls = demos
        .repls
        .iter()
        .map(|r| {
            let mut statements = 0;
            let mut diagnostics = Vec::new();
            for (i, e) in r.entries.iter().enumerate() {
                if e.kind != EntryKind::Code {
                    continue;
                }
                match parse_block(&SourceBlock::new(e.text.clone(), Origin::Demo)) {
                    Ok(_) => statements += 1,
                    Err(d) => diagnostics.push((i, d)),
                }
            }
            ReplReport {
                name: r.name.clone(),
                statements,
                diagnostics,
            }
        })
        .collect();
    DemoReport { repls }
}

pub fn cmd_demo_validate(path: &Path) -> Result<DemoReport, HarnessError> {
    if !path.exists() {
        return Err(HarnessError::Config(format!("{} does not exist", path.display())));
    }
    Ok(validate_demos(&DemoFile::load(path)?))
}
