use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::BibRecord;
use crate::names::{atomic_variate, normalize_name};

/// Which name forms a sample carries. Forms are never mixed within a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariateMode {
    /// Full normalized names.
    Full,
    /// Atomic name variates only.
    Anv,
}

impl VariateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            VariateMode::Full => "FULL",
            VariateMode::Anv => "ANV",
        }
    }
}

/// A co-author name in the requested form; unnormalizable names become the
/// empty sentinel.
pub fn name_form(raw: &str, mode: VariateMode) -> String {
    match normalize_name(raw) {
        Ok(n) => match mode {
            VariateMode::Full => n.render(),
            VariateMode::Anv => atomic_variate(&n).render(),
        },
        Err(_) => String::new(),
    }
}

/// The target's first-name input: the full first name, or just its initial.
pub fn first_name_form(raw: &str, mode: VariateMode) -> String {
    match normalize_name(raw) {
        Ok(n) => match mode {
            VariateMode::Full => n.first_name(),
            VariateMode::Anv => atomic_variate(&n).initial,
        },
        Err(_) => String::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub target_first_name: String,
    pub coauthor_p: String,
    pub coauthor_j: String,
    pub title: String,
    pub source: String,
    pub label: usize,
    pub variate_mode: VariateMode,
    pub record_key: String,
}

/// The 2ω samples of one target slot.
///
/// `p` walks every author position, the target's own included; `j` is drawn
/// uniformly from all positions and may coincide with `p` or the target.
/// Each sample is followed by its atomic-variate twin. A solo-author record
/// gets the empty sentinel in both co-author slots.
pub fn generate_training_samples<R: Rng + ?Sized>(
    record: &BibRecord,
    target_position: usize,
    class_index: usize,
    rng: &mut R,
) -> Vec<TrainingSample> {
    let omega = record.omega();
    assert!(target_position < omega, "target position out of range");
    let target = &record.authors[target_position].author_id.base_name;
    let name = |pos: usize, mode| name_form(&record.authors[pos].author_id.base_name, mode);

    let mut out = Vec::with_capacity(2 * omega);
    for p in 0..omega {
        let j = rng.random_range(0..omega);
        for mode in [VariateMode::Full, VariateMode::Anv] {
            let (cp, cj) = if omega == 1 {
                (String::new(), String::new())
            } else {
                (name(p, mode), name(j, mode))
            };
            out.push(TrainingSample {
                target_first_name: first_name_form(target, mode),
                coauthor_p: cp,
                coauthor_j: cj,
                title: record.title.clone(),
                source: record.source.clone(),
                label: class_index,
                variate_mode: mode,
                record_key: record.record_key.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AuthorMention, RecordKind};
    use crate::seed;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn record(names: &[&str]) -> BibRecord {
        BibRecord {
            record_key: "k".into(),
            kind: RecordKind::Article,
            title: "A title".into(),
            source: "J".into(),
            year: Some(2000),
            authors: names.iter().map(|n| AuthorMention::parse(n)).collect(),
        }
    }

    #[test]
    fn four_authors_give_eight_samples() {
        let rec = record(&["Yi Chen 0002", "Anna Bell", "Carl Dorn", "Eve Fox"]);
        let s = generate_training_samples(&rec, 0, 3, &mut seed::rng(1, "s"));
        assert_eq!(s.len(), 8);
        assert_eq!(s.iter().filter(|x| x.variate_mode == VariateMode::Full).count(), 4);
        let full: Vec<_> = s.iter().filter(|x| x.variate_mode == VariateMode::Full).collect();
        let ps: Vec<_> = full.iter().map(|x| x.coauthor_p.as_str()).collect();
        assert_eq!(ps, ["Yi Chen", "Anna Bell", "Carl Dorn", "Eve Fox"]);
        assert!(full.iter().all(|x| x.target_first_name == "Yi" && x.label == 3));
        let anv: Vec<_> = s.iter().filter(|x| x.variate_mode == VariateMode::Anv).collect();
        let ps: Vec<_> = anv.iter().map(|x| x.coauthor_p.as_str()).collect();
        assert_eq!(ps, ["Y Chen", "A Bell", "C Dorn", "E Fox"]);
        assert!(anv.iter().all(|x| x.target_first_name == "Y"));
    }

    #[test]
    fn solo_author_uses_sentinel() {
        let rec = record(&["Yi Chen"]);
        let s = generate_training_samples(&rec, 0, 0, &mut seed::rng(1, "s"));
        assert_eq!(s.len(), 2);
        assert!(s.iter().all(|x| x.coauthor_p.is_empty() && x.coauthor_j.is_empty()));
    }

    #[test]
    fn same_seed_same_draws() {
        let rec = record(&["A B", "C D", "E F", "G H", "I J"]);
        let a = generate_training_samples(&rec, 2, 0, &mut seed::rng(5, "s"));
        let b = generate_training_samples(&rec, 2, 0, &mut seed::rng(5, "s"));
        assert_eq!(a, b);
    }

    fn mode_of(name: &str) -> Option<VariateMode> {
        let toks: Vec<&str> = name.split(' ').collect();
        if name.is_empty() {
            None
        } else if toks.len() == 2 && toks[0].chars().count() == 1 {
            Some(VariateMode::Anv)
        } else {
            Some(VariateMode::Full)
        }
    }

    proptest! {
        #[test]
        fn twice_omega_and_never_mixed(omega in 1usize..8, seed_value in any::<u64>()) {
            let names: Vec<String> = (0..omega).map(|i| format!("Name{i} Last{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let rec = record(&refs);
            let target = (seed_value as usize) % omega;
            let s = generate_training_samples(&rec, target, 0, &mut seed::Rng::seed_from_u64(seed_value));
            prop_assert_eq!(s.len(), 2 * omega);
            let full = s.iter().filter(|x| x.variate_mode == VariateMode::Full).count();
            prop_assert_eq!(full, omega);
            for x in &s {
                for n in [&x.coauthor_p, &x.coauthor_j] {
                    if let Some(m) = mode_of(n) {
                        prop_assert_eq!(m, x.variate_mode);
                    }
                }
                let first_is_initial = x.target_first_name.chars().count() == 1;
                prop_assert_eq!(first_is_initial, x.variate_mode == VariateMode::Anv);
            }
        }
    }
}
