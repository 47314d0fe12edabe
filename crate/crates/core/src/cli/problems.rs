use std::collections::HashSet;
use std::path::Path;

use crate::structure::TargetStructure;

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub id: u64,
    pub name: String,
    pub target: TargetStructure,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemSet {
    pub entries: Vec<Problem>,
}

impl ProblemSet {
    pub fn get(&self, id: u64) -> Option<&Problem> {
        self.entries.iter().find(|p| p.id == id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parse a TSV with header `id<TAB>name<TAB>structure`. Blank lines are
/// skipped; line numbers in errors are 1-based.
pub fn parse_problems(text: &str) -> Result<ProblemSet, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "id\tname\tstructure" => {}
        _ => {
            return Err(CliError::Parse {
                line: 1,
                message: "expected header `id<TAB>name<TAB>structure`".into(),
            })
        }
    }
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(CliError::Parse {
                line,
                message: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let id: u64 = fields[0].trim().parse().map_err(|_| CliError::Parse {
            line,
            message: format!("bad problem id {:?}", fields[0]),
        })?;
        if !seen.insert(id) {
            return Err(CliError::Parse {
                line,
                message: format!("duplicate problem id {id}"),
            });
        }
        let target = TargetStructure::parse(fields[2].trim())
            .map_err(|source| CliError::InvalidStructure { id, source })?;
        entries.push(Problem {
            id,
            name: fields[1].to_string(),
            target,
        });
    }
    Ok(ProblemSet { entries })
}

pub fn load_problems(path: &Path) -> Result<ProblemSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_problems(&text)
}
