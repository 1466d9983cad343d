//! Character-level string metrics used by the entailment features.
//!
//! All functions work on `char` slices so callers decide the unit of
//! comparison once.

/// Levenshtein distance: insertions, deletions and substitutions.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    ::strsim::generic_levenshtein(&a.to_vec(), &b.to_vec())
}

/// Unrestricted Damerau-Levenshtein distance (adjacent transpositions, with
/// later edits allowed between the transposed characters).
pub fn damerau_levenshtein(a: &[char], b: &[char]) -> usize {
    ::strsim::generic_damerau_levenshtein(a, b)
}

/// Edit distance divided by the longer length; 0 when both are empty.
pub fn normalized(distance: usize, a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        distance as f64 / longest as f64
    }
}

/// Jaro similarity in `[0, 1]`; 1 for two empty strings.
pub fn jaro(a: &[char], b: &[char]) -> f64 {
    ::strsim::generic_jaro(&a.to_vec(), &b.to_vec())
}

/// Length of the longest common contiguous substring.
pub fn longest_common_substring(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for ca in a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}
