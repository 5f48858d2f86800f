//! Claim category inventory.
//!
//! Codes are stable integers; labels are free text and may be edited without
//! invalidating earlier analyses.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};

/// Code of the general "procedures" block header, never assigned.
pub const PROCEDURES_CODE: u32 = 400;
/// Synthetic catch-all category, never assigned.
pub const OTHER_CODE: u32 = 900;

/// The nuclear phase-out codebook, labels as printed.
const NUCLEAR_CATEGORIES: &[(u32, &str)] = &[
    (100, "Ausstieg"),
    (101, "Ausstieg (schnell)"),
    (102, "Ausstieg (sofort)"),
    (103, "Ausstieg (endgültig)"),
    (104, "Ausstieg (mit Deadline)"),
    (105, "Abschalten der Altmeiler"),
    (106, "endgültige Stilllegung der Altmeiler"),
    (110, "Moratorium"),
    (120, "Atom-Politik auf dem Prüfstand"),
    (130, "Laufzeitverlängerung"),
    (140, "Neubau von AKWs"),
    (150, "Atomkraft als Brückentechnologie"),
    (200, "Sicherheit"),
    (201, "Sicherheitsüberprüfung"),
    (202, "Stresstest"),
    (203, "Stresstest (EU-weit)"),
    (205, "Nachrüstung"),
    (206, "Sanierung der Zwischenlager"),
    (300, "Energiepolitik"),
    (301, "Energiewende"),
    (302, "Investition in erneuerbare Energie"),
    (305, "Energieeffizienz"),
    (310, "Stromnetzausbau"),
    (311, "Gaskraftwerke"),
    (312, "Kohlekraftwerke"),
    (400, "Verfahren"),
    (401, "Alleingang"),
    (402, "Übereiltles Handeln"),
    (403, "Konsens/Einigkeit"),
    (405, "Populismus"),
    (410, "Schadensersatz"),
    (420, "gesetzliche Basis schaffen"),
    (425, "EU-weite Regelungen"),
    (430, "Deutschland als Vorbild"),
    (440, "Verantwortungsbewusstsein"),
    (450, "Wirtschaftlichkeit"),
    (900, "Sonstiges"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    categories: BTreeMap<u32, String>,
    excluded: BTreeSet<u32>,
}

impl Codebook {
    pub fn new(
        categories: impl IntoIterator<Item = (u32, String)>,
        excluded: impl IntoIterator<Item = u32>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (code, label) in categories {
            if map.insert(code, label).is_some() {
                return Err(Error::Config(format!("duplicate category code {code}")));
            }
        }
        let excluded: BTreeSet<u32> = excluded.into_iter().collect();
        if let Some(code) = excluded.iter().find(|c| !map.contains_key(c)) {
            return Err(Error::UnknownCode(*code));
        }
        Ok(Codebook {
            categories: map,
            excluded,
        })
    }

    /// The built-in nuclear phase-out codebook with "procedures" (400) and
    /// "other" (900) excluded from assignment.
    pub fn nuclear_phase_out() -> Self {
        Codebook::new(
            NUCLEAR_CATEGORIES
                .iter()
                .map(|(code, label)| (*code, label.to_string())),
            [PROCEDURES_CODE, OTHER_CODE],
        )
        .expect("built-in codebook is valid")
    }

    /// Reads a `code<TAB>label` file. A header line starting with `code` is skipped.
    pub fn from_tsv(path: &Path, excluded: impl IntoIterator<Item = u32>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut categories = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (code, label) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected `code<TAB>label`".into(),
            })?;
            if i == 0 && code.trim().eq_ignore_ascii_case("code") {
                continue;
            }
            let code = code.trim().parse::<u32>().map_err(|_| Error::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("invalid code `{code}`"),
            })?;
            categories.push((code, label.trim().to_string()));
        }
        Codebook::new(categories, excluded)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("code\tlabel\n");
        for (code, label) in &self.categories {
            out.push_str(&format!("{code}\t{label}\n"));
        }
        out
    }

    pub fn label(&self, code: u32) -> Option<&str> {
        self.categories.get(&code).map(String::as_str)
    }

    pub fn contains(&self, code: u32) -> bool {
        self.categories.contains_key(&code)
    }

    pub fn is_excluded(&self, code: u32) -> bool {
        self.excluded.contains(&code)
    }

    /// Fails unless `code` exists and may be assigned.
    pub fn check_assignable(&self, code: u32) -> Result<()> {
        if !self.contains(code) {
            Err(Error::UnknownCode(code))
        } else if self.is_excluded(code) {
            Err(Error::ExcludedCode(code))
        } else {
            Ok(())
        }
    }

    pub fn codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.categories.keys().copied()
    }

    pub fn assignable_codes(&self) -> impl Iterator<Item = u32> + '_ {
        self.codes().filter(|c| !self.excluded.contains(c))
    }

    pub fn excluded_codes(&self) -> &BTreeSet<u32> {
        &self.excluded
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}
