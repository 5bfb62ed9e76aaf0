//! Primitive substitution subshifts with exact language enumeration and a
//! frequency-count measure oracle.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

/// Substitution rules over a finite alphabet of single characters,
/// e.g. {"0": "01", "1": "10"} for Thue–Morse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionRules(pub BTreeMap<String, String>);

#[derive(Debug)]
pub struct Subshift {
    pub alphabet: Vec<char>,
    /// rules in letter-index form
    rules: Vec<Vec<u8>>,
    /// seed letter and power p such that sigma^p(seed) starts with seed
    seed: u8,
    seed_power: u32,
    /// length of the generated word used for frequency counts
    pub freq_len: usize,
    cache: Mutex<Cache>,
}

#[derive(Debug, Default)]
struct Cache {
    /// expanding prefix of the one-sided fixed point of sigma^p
    prefix: Vec<u8>,
    /// admissible words by length, sorted
    languages: BTreeMap<usize, Vec<Vec<u8>>>,
    /// occurrence counts of each admissible word in the first freq_len
    /// letters, aligned with `languages`
    counts: BTreeMap<usize, Vec<u64>>,
}

impl Subshift {
    pub fn new(rules: &SubstitutionRules, freq_len: usize) -> Result<Self> {
        let mut alphabet: Vec<char> = Vec::new();
        for k in rules.0.keys() {
            let mut chars = k.chars();
            let c = chars
                .next()
                .ok_or_else(|| Error::invalid("empty substitution key"))?;
            if chars.next().is_some() {
                return Err(Error::invalid("substitution keys must be single characters"));
            }
            alphabet.push(c);
        }
        alphabet.sort();
        alphabet.dedup();
        if alphabet.is_empty() {
            return Err(Error::invalid("empty substitution"));
        }
        let index: HashMap<char, u8> = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u8))
            .collect();
        let mut rule_vec = vec![Vec::new(); alphabet.len()];
        for (k, v) in rules.0.iter() {
            let key = index[&k.chars().next().unwrap()];
            let mut word = Vec::with_capacity(v.len());
            for c in v.chars() {
                let i = *index
                    .get(&c)
                    .ok_or_else(|| Error::invalid(format!("rule image uses unknown letter {c}")))?;
                word.push(i);
            }
            if word.is_empty() {
                return Err(Error::invalid("substitution images must be nonempty"));
            }
            rule_vec[key as usize] = word;
        }
        if rule_vec.iter().any(|w| w.is_empty()) {
            return Err(Error::invalid("every letter needs a substitution rule"));
        }
        let sub = Subshift {
            alphabet,
            rules: rule_vec,
            seed: 0,
            seed_power: 1,
            freq_len,
            cache: Mutex::new(Cache::default()),
        };
        sub.check_primitive()?;
        let (seed, power) = sub.find_seed()?;
        Ok(Subshift { seed, seed_power: power, ..sub })
    }

    /// Primitivity: some power of the incidence matrix is strictly positive.
    fn check_primitive(&self) -> Result<()> {
        let n = self.alphabet.len();
        let mut reach = vec![vec![false; n]; n];
        for (a, img) in self.rules.iter().enumerate() {
            for &b in img {
                reach[a][b as usize] = true;
            }
        }
        let mut acc = reach.clone();
        for _ in 0..2 * n + 2 {
            if acc.iter().all(|row| row.iter().all(|&x| x)) {
                return Ok(());
            }
            let mut next = vec![vec![false; n]; n];
            for a in 0..n {
                for b in 0..n {
                    if acc[a][b] {
                        for c in 0..n {
                            if reach[b][c] {
                                next[a][c] = true;
                            }
                        }
                    }
                }
            }
            acc = next;
        }
        if acc.iter().all(|row| row.iter().all(|&x| x)) {
            Ok(())
        } else {
            Err(Error::invalid("substitution is not primitive"))
        }
    }

    fn apply(&self, word: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(word.len() * 2);
        for &a in word {
            out.extend_from_slice(&self.rules[a as usize]);
        }
        out
    }

    fn find_seed(&self) -> Result<(u8, u32)> {
        for power in 1..=6u32 {
            for a in 0..self.alphabet.len() as u8 {
                let mut w = vec![a];
                for _ in 0..power {
                    w = self.apply(&w);
                }
                if w.len() > 1 && w[0] == a {
                    return Ok((a, power));
                }
            }
        }
        Err(Error::invalid("no letter generates a fixed point up to power 6"))
    }

    fn grow_prefix(cache: &mut Cache, sub: &Subshift, want: usize) -> Result<()> {
        if cache.prefix.is_empty() {
            cache.prefix = vec![sub.seed];
        }
        while cache.prefix.len() < want {
            if cache.prefix.len() > 64_000_000 {
                return Err(Error::ResourceExhausted("substitution prefix too long".into()));
            }
            let mut w = cache.prefix.clone();
            for _ in 0..sub.seed_power {
                w = sub.apply(&w);
            }
            if w.len() == cache.prefix.len() {
                return Err(Error::invalid("substitution does not expand"));
            }
            cache.prefix = w;
        }
        Ok(())
    }

    fn factors(prefix: &[u8], len: usize) -> Vec<Vec<u8>> {
        let mut set: Vec<Vec<u8>> = Vec::new();
        if prefix.len() < len {
            return set;
        }
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..=prefix.len() - len {
            seen.insert(prefix[i..i + len].to_vec());
        }
        set.extend(seen);
        set
    }

    /// Admissible words of the given length, sorted. Factor sets of the
    /// nested prefixes are nondecreasing, so we expand until one further
    /// substitution adds nothing (linear recurrence of primitive
    /// substitutions makes this exact at moderate prefix lengths).
    pub fn language(&self, len: usize) -> Result<Vec<Vec<u8>>> {
        if len == 0 {
            return Ok(vec![Vec::new()]);
        }
        let mut cache = self.cache.lock().unwrap();
        if let Some(l) = cache.languages.get(&len) {
            return Ok(l.clone());
        }
        Self::grow_prefix(&mut cache, self, 8 * len + 64)?;
        let mut current = Self::factors(&cache.prefix, len);
        loop {
            let target = cache.prefix.len() + 1;
            Self::grow_prefix(&mut cache, self, target)?;
            let next = Self::factors(&cache.prefix, len);
            if next == current {
                break;
            }
            current = next;
        }
        cache.languages.insert(len, current.clone());
        Ok(current)
    }

    /// Occurrence counts of each admissible word of the given length in the
    /// first `freq_len` letters of the fixed point; aligned with
    /// `language(len)`. The total over all words is exactly
    /// freq_len - len + 1.
    pub fn word_counts(&self, len: usize) -> Result<(Vec<Vec<u8>>, Vec<u64>, usize)> {
        let lang = self.language(len)?;
        let mut cache = self.cache.lock().unwrap();
        if let Some(c) = cache.counts.get(&len) {
            return Ok((lang, c.clone(), self.freq_len));
        }
        Self::grow_prefix(&mut cache, self, self.freq_len)?;
        let word = &cache.prefix[0..self.freq_len];
        let index: HashMap<&[u8], usize> = lang
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_slice(), i))
            .collect();
        let mut counts = vec![0u64; lang.len()];
        for i in 0..=word.len() - len {
            let w = &word[i..i + len];
            let idx = index
                .get(w)
                .copied()
                .expect("factor of the generated word is admissible");
            counts[idx] += 1;
        }
        cache.counts.insert(len, counts.clone());
        Ok((lang, counts, self.freq_len))
    }

    pub fn word_to_string(&self, w: &[u8]) -> String {
        w.iter().map(|&i| self.alphabet[i as usize]).collect()
    }
}

pub fn thue_morse() -> SubstitutionRules {
    let mut m = BTreeMap::new();
    m.insert("0".to_string(), "01".to_string());
    m.insert("1".to_string(), "10".to_string());
    SubstitutionRules(m)
}
