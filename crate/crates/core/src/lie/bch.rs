//! Dynkin form of the Baker–Campbell–Hausdorff series, truncated at the
//! nilpotency step.

use std::collections::BTreeMap;

use num_rational::Rational64;

/// A letter of a bracket word: the left (`X`) or right (`Y`) argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    X,
    Y,
}

/// Right-nested bracket word `[w_1, [w_2, ... [w_{L-1}, w_L]]]` with its
/// rational Dynkin coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct DynkinWord {
    pub letters: Vec<Letter>,
    pub coeff: Rational64,
}

/// All nonvanishing Dynkin words of length `<= step`, merged by word.
#[derive(Debug, Clone, PartialEq)]
pub struct DynkinTable {
    step: usize,
    words: Vec<DynkinWord>,
}

impl DynkinTable {
    pub fn new(step: usize) -> Self {
        let mut acc: BTreeMap<Vec<Letter>, Rational64> = BTreeMap::new();
        for n in 1..=step {
            let mut pairs = Vec::with_capacity(n);
            enumerate(n, step, &mut pairs, &mut acc);
        }
        let words = acc
            .into_iter()
            .filter(|(letters, coeff)| *coeff != Rational64::from_integer(0) && !trivially_zero(letters))
            .map(|(letters, coeff)| DynkinWord { letters, coeff })
            .collect();
        Self { step, words }
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn words(&self) -> &[DynkinWord] {
        &self.words
    }
}

// [a, a] = 0 kills any word whose last two letters agree.
fn trivially_zero(letters: &[Letter]) -> bool {
    letters.len() >= 2 && letters[letters.len() - 1] == letters[letters.len() - 2]
}

/// Enumerates sequences of `n` pairs `(r_i, s_i)` with `r_i + s_i >= 1` and
/// total length at most `max_len`, accumulating
/// `(-1)^{n-1} / (n L Π r_i! s_i!)` on the word `X^{r_1} Y^{s_1} ... X^{r_n} Y^{s_n}`.
fn enumerate(n: usize, max_len: usize, pairs: &mut Vec<(usize, usize)>, acc: &mut BTreeMap<Vec<Letter>, Rational64>) {
    let used: usize = pairs.iter().map(|(r, s)| r + s).sum();
    if pairs.len() == n {
        let len = used as i64;
        let mut denom = (n as i64) * len;
        for &(r, s) in pairs.iter() {
            denom *= factorial(r) * factorial(s);
        }
        let sign = if n % 2 == 1 { 1 } else { -1 };
        let mut word = Vec::with_capacity(used);
        for &(r, s) in pairs.iter() {
            word.extend(std::iter::repeat_n(Letter::X, r));
            word.extend(std::iter::repeat_n(Letter::Y, s));
        }
        *acc.entry(word).or_insert_with(|| Rational64::from_integer(0)) += Rational64::new(sign, denom);
        return;
    }
    let remaining_pairs = n - pairs.len() - 1;
    let budget = max_len - used;
    if budget < remaining_pairs + 1 {
        return;
    }
    for total in 1..=budget - remaining_pairs {
        for r in 0..=total {
            pairs.push((r, total - r));
            enumerate(n, max_len, pairs, acc);
            pairs.pop();
        }
    }
}

fn factorial(k: usize) -> i64 {
    (1..=k as i64).product()
}
