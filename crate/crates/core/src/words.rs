//! Free-group word algebra and the non-overlapping copy counter.
//!
//! Words are stored *always freely reduced*: every constructor reduces, so
//! holding a [`Word`] is proof that no adjacent pair of letters cancels.
//! The empty word is the identity.
//!
//! Text form: `a`..`z` denote generators 1..26 and the matching uppercase
//! letter denotes the inverse (so `abAB` is the commutator a·b·a⁻¹·b⁻¹).
//! The parser accepts exactly those 52 characters.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// One free-group letter: a generator or the inverse of a generator.
///
/// The derived ordering is `a < A < b < B < …`, i.e. generators first by
/// index, the plain letter before its inverse. All deterministic orderings
/// of words and spaces in this crate bottom out here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    /// Generator index, 0-based (`0` prints as `a`/`A`).
    pub generator: u8,
    /// True for the inverse of the generator.
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: u8, inverse: bool) -> Letter {
        Letter { generator, inverse }
    }

    /// The inverse letter (`a` ↔ `A`).
    pub fn opposite(self) -> Letter {
        Letter {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// True when `self · other` cancels freely.
    pub fn cancels(self, other: Letter) -> bool {
        self.generator == other.generator && self.inverse != other.inverse
    }

    pub fn from_char(c: char) -> Result<Letter> {
        match c {
            'a'..='z' => Ok(Letter::new(c as u8 - b'a', false)),
            'A'..='Z' => Ok(Letter::new(c as u8 - b'A', true)),
            _ => Err(Error::Parse(format!(
                "invalid word character {c:?}: expected a-z or A-Z"
            ))),
        }
    }

    pub fn to_char(self) -> char {
        let base = if self.inverse { b'A' } else { b'a' };
        (base + self.generator) as char
    }

    /// All `2 * rank` letters over generators `0..rank`, in `Ord` order.
    pub fn alphabet(rank: u8) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * rank as usize);
        for g in 0..rank {
            out.push(Letter::new(g, false));
            out.push(Letter::new(g, true));
        }
        out
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// A freely reduced word in a free group; the empty word is the identity.
///
/// The reducedness invariant is maintained by every constructor, so
/// equality of group elements is plain structural equality. Words order by
/// length first, then lexicographically by [`Letter`] order — the order in
/// which tree vertices and enumerations are emitted everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    /// The identity element (empty word).
    pub fn identity() -> Word {
        Word::default()
    }

    /// Freely reduce an arbitrary letter sequence.
    ///
    /// Idempotent; the result is the unique reduced representative of the
    /// same group element.
    pub fn reduce(raw: &[Letter]) -> Word {
        let mut letters: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            match letters.last() {
                Some(&top) if top.cancels(l) => {
                    letters.pop();
                }
                _ => letters.push(l),
            }
        }
        Word { letters }
    }

    /// Parse the text form (`""` is the identity); the input is reduced.
    pub fn parse(s: &str) -> Result<Word> {
        let raw: Vec<Letter> = s.chars().map(Letter::from_char).collect::<Result<_>>()?;
        Ok(Word::reduce(&raw))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// Reduced product `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            match letters.last() {
                Some(&top) if top.cancels(l) => {
                    letters.pop();
                }
                _ => letters.push(l),
            }
        }
        Word { letters }
    }

    /// Reduced product `self · l` (one letter). In the Cayley tree this is
    /// exactly "move to the neighbor across the edge labeled `l`".
    pub fn concat_letter(&self, l: Letter) -> Word {
        let mut letters = self.letters.clone();
        match letters.last() {
            Some(&top) if top.cancels(l) => {
                letters.pop();
            }
            _ => letters.push(l),
        }
        Word { letters }
    }

    /// Group inverse: reversed letters, each inverted. Already reduced.
    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.opposite()).collect(),
        }
    }

    /// Reduced power `self^n` (negative `n` gives inverse powers).
    pub fn pow(&self, n: i64) -> Word {
        if n < 0 {
            return self.inverse().pow(-n);
        }
        let mut acc = Word::identity();
        for _ in 0..n {
            acc = acc.concat(self);
        }
        acc
    }

    /// Split `w = conjugator · core · conjugator⁻¹` with `core` cyclically
    /// reduced (first and last letters do not cancel) and of minimal length.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut lo = 0usize;
        let mut hi = self.letters.len();
        while hi - lo >= 2 && self.letters[lo].cancels(self.letters[hi - 1]) {
            lo += 1;
            hi -= 1;
        }
        let conjugator = Word {
            letters: self.letters[..lo].to_vec(),
        };
        let core = Word {
            letters: self.letters[lo..hi].to_vec(),
        };
        (conjugator, core)
    }

    /// True when first and last letters do not cancel (identity counts).
    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.first(), self.last()) {
            (Some(f), Some(l)) => !f.cancels(l),
            _ => true,
        }
    }

    /// Exponent sum of each generator appearing in the word (abelianization
    /// image). Generators with sum zero still get an entry when present.
    pub fn exponent_sums(&self) -> BTreeMap<u8, i64> {
        let mut sums = BTreeMap::new();
        for l in &self.letters {
            *sums.entry(l.generator).or_insert(0) += if l.inverse { -1 } else { 1 };
        }
        sums
    }

    /// Largest generator index used, if any (rank compatibility checks).
    pub fn max_generator(&self) -> Option<u8> {
        self.letters.iter().map(|l| l.generator).max()
    }

    /// True when `self` and `other` commute as group elements.
    pub fn commutes_with(&self, other: &Word) -> bool {
        self.concat(other) == other.concat(self)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        Word::parse(s)
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Word) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Word) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl serde::Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Word {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Reverse a letter sequence and invert every letter.
///
/// For the label sequence of a walk this is exactly the label sequence of
/// the reversed walk, so copies of `w` correspond to copies of `w⁻¹`.
pub fn reverse_inverse(labels: &[Letter]) -> Vec<Letter> {
    labels.iter().rev().map(|l| l.opposite()).collect()
}

/// Maximal number of pairwise non-overlapping contiguous occurrences of
/// `w`'s letter sequence inside `labels`.
///
/// Left-to-right greedy: take every occurrence as soon as it appears. All
/// occurrences have the same length |w|, so among any optimal selection the
/// leftmost chosen copy can be exchanged for the leftmost occurrence
/// overall without losing room for the rest; induction makes the greedy
/// selection maximal. The tests check this against literal enumeration of
/// every non-overlapping selection.
///
/// `labels` is a raw sequence (walk labels may backtrack and need not be
/// reduced); `w` must be nonempty.
pub fn count_copies(labels: &[Letter], w: &Word) -> u32 {
    let pat = w.letters();
    assert!(!pat.is_empty(), "count_copies needs a nonempty pattern");
    let mut count = 0u32;
    let mut i = 0usize;
    while i + pat.len() <= labels.len() {
        if &labels[i..i + pat.len()] == pat {
            count += 1;
            i += pat.len();
        } else {
            i += 1;
        }
    }
    count
}
