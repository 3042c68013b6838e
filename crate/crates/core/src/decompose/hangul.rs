//! Hangul syllable blocks to compatibility jamo.

pub(crate) const SYLLABLE_BASE: u32 = 0xAC00;
pub(crate) const SYLLABLE_LAST: u32 = 0xD7A3;
const MEDIAL_COUNT: u32 = 21;
const FINAL_COUNT: u32 = 28;
const BLOCK: u32 = MEDIAL_COUNT * FINAL_COUNT; // 588

// Compatibility jamo code points, in syllable index order.
const INITIALS: [u32; 19] = [
    0x3131, 0x3132, 0x3134, 0x3137, 0x3138, 0x3139, 0x3141, 0x3142, 0x3143, 0x3145, 0x3146, 0x3147,
    0x3148, 0x3149, 0x314A, 0x314B, 0x314C, 0x314D, 0x314E,
];
// Medials are contiguous: U+314F..=U+3163.
const MEDIAL_BASE: u32 = 0x314F;
// Index 0 means "no final".
const FINALS: [u32; 28] = [
    0, 0x3131, 0x3132, 0x3133, 0x3134, 0x3135, 0x3136, 0x3137, 0x3139, 0x313A, 0x313B, 0x313C,
    0x313D, 0x313E, 0x313F, 0x3140, 0x3141, 0x3142, 0x3144, 0x3145, 0x3146, 0x3147, 0x3148, 0x314A,
    0x314B, 0x314C, 0x314D, 0x314E,
];

pub fn is_syllable(ch: char) -> bool {
    (SYLLABLE_BASE..=SYLLABLE_LAST).contains(&(ch as u32))
}

/// Jamo for one syllable: initial, medial and optional final.
pub fn syllable_jamo(ch: char) -> Option<(char, char, Option<char>)> {
    if !is_syllable(ch) {
        return None;
    }
    let index = ch as u32 - SYLLABLE_BASE;
    let initial = index / BLOCK;
    let medial = (index % BLOCK) / FINAL_COUNT;
    let fin = index % FINAL_COUNT;
    let to_char = |cp: u32| char::from_u32(cp).expect("jamo table holds valid code points");
    Some((
        to_char(INITIALS[initial as usize]),
        to_char(MEDIAL_BASE + medial),
        (fin != 0).then(|| to_char(FINALS[fin as usize])),
    ))
}

/// Replaces every precomposed syllable (U+AC00..=U+D7A3) with its 2 or 3
/// compatibility jamo; everything else passes through.
pub fn decompose_hangul(s: &str) -> String {
    let mut out = String::with_capacity(s.len() * 2);
    for ch in s.chars() {
        match syllable_jamo(ch) {
            Some((i, m, f)) => {
                out.push(i);
                out.push(m);
                out.extend(f);
            }
            None => out.push(ch),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(decompose_hangul("한"), "ㅎㅏㄴ");
        assert_eq!(decompose_hangul("가"), "ㄱㅏ");
        assert_eq!(decompose_hangul("a"), "a");
        assert_eq!(decompose_hangul("힣"), "ㅎㅣㅎ");
        assert_eq!(decompose_hangul("한국어 text"), "ㅎㅏㄴㄱㅜㄱㅇㅓ text");
    }

    #[test]
    fn idempotent_on_jamo() {
        let once = decompose_hangul("읽었습니다");
        assert_eq!(decompose_hangul(&once), once);
        assert!(!once.chars().any(is_syllable));
    }
}
