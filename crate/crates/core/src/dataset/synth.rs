//! Template-generated minimal-pair paradigms.
//!
//! Every template family is an agreement phenomenon: the grammatical and
//! ungrammatical sentence differ in exactly one token (the agreeing word).
//! Each category draws from its own lexicon, so categories never share the
//! discriminating vocabulary.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Paradigm, SentencePair};
use crate::error::{Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateFamily {
    /// Verb agrees in number with the subject noun.
    SubjectVerb,
    /// Demonstrative agrees in number with its noun.
    DeterminerNoun,
    /// Reflexive agrees in gender with its antecedent.
    Reflexive,
}

/// Word lists for one category. Agreeing words come as `[form_a, form_b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    /// Heads that carry the agreement feature, e.g. `["dog", "dogs"]`.
    pub controllers: Vec<[String; 2]>,
    /// Agreeing targets, e.g. `["barks", "bark"]`; index matches the controller form.
    pub targets: Vec<[String; 2]>,
    #[serde(default)]
    pub fillers: Vec<String>,
    #[serde(default)]
    pub modifiers: Vec<String>,
}

fn pairs(words: &[(&str, &str)]) -> Vec<[String; 2]> {
    words.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect()
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

impl Lexicon {
    pub fn default_for(family: TemplateFamily) -> Self {
        match family {
            TemplateFamily::SubjectVerb => Lexicon {
                controllers: pairs(&[
                    ("dog", "dogs"),
                    ("cat", "cats"),
                    ("bird", "birds"),
                    ("horse", "horses"),
                    ("child", "children"),
                    ("mouse", "mice"),
                ]),
                targets: pairs(&[
                    ("barks", "bark"),
                    ("sleeps", "sleep"),
                    ("runs", "run"),
                    ("sings", "sing"),
                    ("jumps", "jump"),
                    ("eats", "eat"),
                ]),
                fillers: words(&["quickly", "often", "loudly", "again"]),
                modifiers: words(&["small", "old", "happy", "quiet"]),
            },
            TemplateFamily::DeterminerNoun => Lexicon {
                controllers: pairs(&[("this", "these"), ("that", "those")]),
                targets: pairs(&[
                    ("book", "books"),
                    ("chair", "chairs"),
                    ("table", "tables"),
                    ("lamp", "lamps"),
                    ("shirt", "shirts"),
                    ("window", "windows"),
                ]),
                fillers: words(&["fell", "broke", "moved", "vanished"]),
                modifiers: words(&["yesterday", "suddenly", "today", "later"]),
            },
            TemplateFamily::Reflexive => Lexicon {
                controllers: pairs(&[
                    ("man", "woman"),
                    ("king", "queen"),
                    ("boy", "girl"),
                    ("father", "mother"),
                    ("actor", "actress"),
                ]),
                targets: pairs(&[("himself", "herself")]),
                fillers: words(&["saw", "praised", "hurt", "admired", "blamed"]),
                modifiers: words(&["clearly", "once", "twice", "gladly"]),
            },
        }
    }

    fn validate(&self, category: &str) -> Result<()> {
        if self.controllers.is_empty() || self.targets.is_empty() || self.fillers.is_empty() {
            return Err(Error::Config(format!(
                "lexicon of category `{category}` has an empty word list"
            )));
        }
        if self.modifiers.is_empty() {
            return Err(Error::Config(format!(
                "lexicon of category `{category}` has no modifiers"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCategory {
    pub name: String,
    pub family: TemplateFamily,
    #[serde(default)]
    pub lexicon: Option<Lexicon>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub categories: Vec<SynthCategory>,
    pub paradigms_per_category: usize,
    pub pairs_per_paradigm: usize,
}

impl SynthSpec {
    /// Three categories, one per template family.
    pub fn three_families(paradigms_per_category: usize, pairs_per_paradigm: usize) -> Self {
        let cat = |name: &str, family| SynthCategory {
            name: name.into(),
            family,
            lexicon: None,
        };
        Self {
            categories: vec![
                cat("subject_verb_agreement", TemplateFamily::SubjectVerb),
                cat("determiner_noun_agreement", TemplateFamily::DeterminerNoun),
                cat("anaphor_agreement", TemplateFamily::Reflexive),
            ],
            paradigms_per_category,
            pairs_per_paradigm,
        }
    }
}

const VARIANTS: usize = 4;

/// Builds one sentence of `variant` with the agreeing target chosen by `agree`.
fn render(
    family: TemplateFamily,
    variant: usize,
    lex: &Lexicon,
    pick: &Picks,
    agree: bool,
) -> String {
    let ctrl = &lex.controllers[pick.controller][pick.form];
    let target_form = if agree { pick.form } else { 1 - pick.form };
    let target = &lex.targets[pick.target][target_form];
    let filler = &lex.fillers[pick.filler];
    let modifier = &lex.modifiers[pick.modifier];
    let words: Vec<&str> = match (family, variant % VARIANTS) {
        (TemplateFamily::SubjectVerb, 0) => vec!["the", ctrl, target, "."],
        (TemplateFamily::SubjectVerb, 1) => vec!["the", modifier, ctrl, target, "."],
        (TemplateFamily::SubjectVerb, 2) => vec!["the", ctrl, target, filler, "."],
        (TemplateFamily::SubjectVerb, _) => vec!["every", "day", "the", ctrl, target, "."],
        (TemplateFamily::DeterminerNoun, 0) => vec![ctrl, target, filler, "."],
        (TemplateFamily::DeterminerNoun, 1) => vec![modifier, ctrl, target, filler, "."],
        (TemplateFamily::DeterminerNoun, 2) => vec!["we", "think", ctrl, target, filler, "."],
        (TemplateFamily::DeterminerNoun, _) => vec![ctrl, target, filler, modifier, "."],
        (TemplateFamily::Reflexive, 0) => vec!["the", ctrl, filler, target, "."],
        (TemplateFamily::Reflexive, 1) => vec!["the", ctrl, modifier, filler, target, "."],
        (TemplateFamily::Reflexive, 2) => vec!["no", ctrl, filler, target, "."],
        (TemplateFamily::Reflexive, _) => vec!["the", ctrl, filler, target, modifier, "."],
    };
    words.join(" ")
}

struct Picks {
    controller: usize,
    form: usize,
    target: usize,
    filler: usize,
    modifier: usize,
}

/// Generates `categories × paradigms_per_category` paradigms. Paradigm ids
/// are `<category>_<index>`; each paradigm uses template variant `index mod 4`.
pub fn synth_paradigms(spec: &SynthSpec, seed: u64) -> Result<Vec<Paradigm>> {
    if spec.categories.is_empty() {
        return Err(Error::Config("synthetic spec names no categories".into()));
    }
    let mut out = Vec::with_capacity(spec.categories.len() * spec.paradigms_per_category);
    for cat in &spec.categories {
        let lex = cat
            .lexicon
            .clone()
            .unwrap_or_else(|| Lexicon::default_for(cat.family));
        lex.validate(&cat.name)?;
        for p in 0..spec.paradigms_per_category {
            let id = format!("{}_{}", cat.name, p);
            let mut rng = rng_for(seed, &format!("synth/{id}"));
            let mut seen = std::collections::HashSet::new();
            let mut pairs = Vec::with_capacity(spec.pairs_per_paradigm);
            // Unique pairs while the template space allows; duplicates after that.
            let mut attempts = 0usize;
            while pairs.len() < spec.pairs_per_paradigm {
                let picks = Picks {
                    controller: rng.gen_range(0..lex.controllers.len()),
                    form: rng.gen_range(0..2),
                    target: rng.gen_range(0..lex.targets.len()),
                    filler: rng.gen_range(0..lex.fillers.len()),
                    modifier: rng.gen_range(0..lex.modifiers.len()),
                };
                let pair = SentencePair::new(
                    render(cat.family, p, &lex, &picks, true),
                    render(cat.family, p, &lex, &picks, false),
                );
                attempts += 1;
                if seen.insert(pair.clone()) || attempts > 20 * spec.pairs_per_paradigm {
                    pairs.push(pair);
                }
            }
            pairs.shuffle(&mut rng);
            out.push(Paradigm {
                id,
                category: cat.name.clone(),
                pairs,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_spec() {
        let spec = SynthSpec::three_families(4, 200);
        let ps = synth_paradigms(&spec, 1).unwrap();
        assert_eq!(ps.len(), 12);
        assert!(ps.iter().all(|p| p.pairs.len() == 200));
        let cats: std::collections::BTreeSet<_> = ps.iter().map(|p| p.category.as_str()).collect();
        assert_eq!(cats.len(), 3);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SynthSpec::three_families(2, 50);
        assert_eq!(synth_paradigms(&spec, 9).unwrap(), synth_paradigms(&spec, 9).unwrap());
        assert_ne!(synth_paradigms(&spec, 9).unwrap(), synth_paradigms(&spec, 10).unwrap());
    }

    #[test]
    fn pairs_differ_in_exactly_one_token() {
        let spec = SynthSpec::three_families(4, 300);
        for p in synth_paradigms(&spec, 3).unwrap() {
            for pair in &p.pairs {
                let g: Vec<_> = pair.good.split_whitespace().collect();
                let b: Vec<_> = pair.bad.split_whitespace().collect();
                assert_eq!(g.len(), b.len());
                let diff = g.iter().zip(&b).filter(|(x, y)| x != y).count();
                assert_eq!(diff, 1, "{} / {}", pair.good, pair.bad);
                assert!(pair.validate().is_ok());
            }
        }
    }

    #[test]
    fn empty_lexicon_is_config_error() {
        let mut spec = SynthSpec::three_families(1, 10);
        spec.categories[0].lexicon = Some(Lexicon {
            controllers: vec![],
            targets: vec![],
            fillers: vec![],
            modifiers: vec![],
        });
        assert!(matches!(synth_paradigms(&spec, 0), Err(Error::Config(_))));
    }
}
