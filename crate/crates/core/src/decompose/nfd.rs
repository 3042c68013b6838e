use unicode_normalization::UnicodeNormalization;

use super::hangul::is_syllable;

/// Canonical decomposition, except that precomposed Hangul syllables are
/// left untouched (they are handled by [`decompose_hangul`](super::decompose_hangul),
/// which targets compatibility jamo rather than conjoining jamo).
pub fn nfd_normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut run_start = 0;
    for (pos, ch) in s.char_indices() {
        if is_syllable(ch) {
            out.extend(s[run_start..pos].nfd());
            out.push(ch);
            run_start = pos + ch.len_utf8();
        }
    }
    out.extend(s[run_start..].nfd());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposes_accents() {
        assert_eq!(nfd_normalize("\u{e9}"), "e\u{301}");
        assert_eq!(nfd_normalize("a"), "a");
        assert_eq!(nfd_normalize("Ångström"), "A\u{30a}ngstro\u{308}m");
    }

    #[test]
    fn leaves_hangul_syllables() {
        assert_eq!(nfd_normalize("한é"), "한e\u{301}");
    }

    #[test]
    fn reorders_combining_marks() {
        // dot below (ccc 220) sorts before dot above (ccc 230)
        assert_eq!(nfd_normalize("q\u{307}\u{323}"), "q\u{323}\u{307}");
    }
}
