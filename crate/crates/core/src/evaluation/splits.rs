use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataio::{Session, TrialSet};
use crate::error::{Error, Result};

/// How trials are divided into training, validation and test folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Per subject: own training session against own test session.
    Single,
    /// Every subject's training session pooled; tested per subject.
    Mixed,
    /// Leave one subject out.
    Loso,
    /// Per held-out subject: 5 random subjects train, 3 validate.
    Lawhern,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Single, Scheme::Mixed, Scheme::Loso, Scheme::Lawhern];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Single => "single",
            Scheme::Mixed => "mixed",
            Scheme::Loso => "loso",
            Scheme::Lawhern => "lawhern",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown scheme {s:?} (expected single, mixed, loso or lawhern)")))
    }
}

/// Which trials of a held-out subject form the test fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LosoTest {
    #[default]
    AllSessions,
    TestSession,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitOptions {
    pub loso_test: LosoTest,
    /// Seed of the random subject assignment of the lawhern scheme.
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { loso_test: LosoTest::AllSessions, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Option<Vec<usize>>,
    pub test: Vec<usize>,
    pub test_subject: u8,
    /// Folds with equal group share one training set and are fitted once.
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub scheme: Scheme,
    pub folds: Vec<Fold>,
}

impl SplitPlan {
    pub fn groups(&self) -> usize {
        self.folds.iter().map(|f| f.group + 1).max().unwrap_or(0)
    }

    /// Checks disjointness of train, validation and test within every fold.
    pub fn check(&self, set: &TrialSet) -> Result<()> {
        for f in &self.folds {
            let mut seen = vec![0u8; set.n_trials()];
            let parts = [Some(&f.train), f.validation.as_ref(), Some(&f.test)];
            for (tag, part) in parts.iter().enumerate() {
                for &i in part.iter().copied().flatten() {
                    if i >= set.n_trials() || seen[i] != 0 {
                        return Err(Error::invalid(format!(
                            "fold for subject {}: trial {i} repeated or out of range",
                            f.test_subject
                        )));
                    }
                    seen[i] = tag as u8 + 1;
                }
            }
            if f.train.is_empty() || f.test.is_empty() {
                return Err(Error::invalid(format!("fold for subject {} has an empty side", f.test_subject)));
            }
        }
        Ok(())
    }
}

fn trials_where(set: &TrialSet, pred: impl Fn(usize) -> bool) -> Vec<usize> {
    (0..set.n_trials()).filter(|&i| pred(i)).collect()
}

pub fn make_splits(scheme: Scheme, set: &TrialSet, opts: &SplitOptions) -> Result<SplitPlan> {
    let subjects = set.subject_ids();
    let need = match scheme {
        Scheme::Single | Scheme::Mixed => 1,
        Scheme::Loso => 2,
        Scheme::Lawhern => 9,
    };
    if subjects.len() < need {
        return Err(Error::invalid(format!(
            "the {scheme} scheme needs at least {need} subjects, the data has {}",
            subjects.len()
        )));
    }
    let of = |s: u8, session: Option<Session>| {
        trials_where(set, |i| set.subjects[i] == s && session.is_none_or(|x| set.sessions[i] == x))
    };
    let folds = match scheme {
        Scheme::Single => subjects
            .iter()
            .enumerate()
            .map(|(g, &s)| Fold {
                train: of(s, Some(Session::Train)),
                validation: None,
                test: of(s, Some(Session::Test)),
                test_subject: s,
                group: g,
            })
            .collect(),
        Scheme::Mixed => {
            let train = trials_where(set, |i| set.sessions[i] == Session::Train);
            subjects
                .iter()
                .map(|&s| Fold { train: train.clone(), validation: None, test: of(s, Some(Session::Test)), test_subject: s, group: 0 })
                .collect()
        }
        Scheme::Loso => subjects
            .iter()
            .enumerate()
            .map(|(g, &s)| {
                let test = match opts.loso_test {
                    LosoTest::AllSessions => of(s, None),
                    LosoTest::TestSession => of(s, Some(Session::Test)),
                };
                Fold { train: trials_where(set, |i| set.subjects[i] != s), validation: None, test, test_subject: s, group: g }
            })
            .collect(),
        Scheme::Lawhern => subjects
            .iter()
            .enumerate()
            .map(|(g, &s)| {
                let mut rest: Vec<u8> = subjects.iter().copied().filter(|&x| x != s).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::derive(opts.seed, &[s as u64]));
                rest.shuffle(&mut rng);
                let (tr, va) = (&rest[..5], &rest[5..8]);
                Fold {
                    train: trials_where(set, |i| tr.contains(&set.subjects[i])),
                    validation: Some(trials_where(set, |i| va.contains(&set.subjects[i]))),
                    test: of(s, None),
                    test_subject: s,
                    group: g,
                }
            })
            .collect(),
    };
    let plan = SplitPlan { scheme, folds };
    plan.check(set)?;
    Ok(plan)
}
