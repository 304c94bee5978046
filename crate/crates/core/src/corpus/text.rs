//! Pseudo-words for rendered text.
//!
//! Ordinary words are built from syllables that never contain X, Z or Q,
//! so they can never spell one of the [`FLAG_WORDS`].

use rand::Rng;

const SYLLABLES: &[&str] = &[
    "BA", "LO", "MI", "TEN", "RU", "SA", "KE", "NO", "PI", "DA", "VEL", "TOR", "MEN", "LI", "GO",
    "FE", "RA", "SON", "TI", "WE", "HA", "PER", "CO", "DI", "NU", "BEL", "MAR", "LUN", "JO", "YU",
];

/// Invented tokens standing in for abusive vocabulary.
pub const FLAG_WORDS: &[&str] = &[
    "VORPAX", "GRIMZOL", "SKAVVIX", "ZUKTHAR", "QUELLOX", "BRAXIM",
];

const SUFFIXES: &[&str] = &[".", ",", "!", "?", ":", "'S"];

/// One word of at most `max_chars` characters.
pub fn random_word(rng: &mut impl Rng, max_chars: usize) -> String {
    let word = match rng.random_range(0..20) {
        0 => format!("{}K", rng.random_range(1..100)),
        1 => format!("{}%", rng.random_range(1..100)),
        2 => rng.random_range(1900..2100).to_string(),
        3 => format!("{}+", rng.random_range(2..20)),
        4 => format!("{}-{}", syllables(rng, 1), syllables(rng, 1)),
        5 => format!("{}/{}", syllables(rng, 1), syllables(rng, 1)),
        _ => {
            let n = rng.random_range(1..=3);
            let mut w = syllables(rng, n);
            if rng.random_bool(0.15) {
                w.push_str(SUFFIXES[rng.random_range(0..SUFFIXES.len())]);
            }
            w
        }
    };
    word.chars().take(max_chars.max(1)).collect()
}

fn syllables(rng: &mut impl Rng, n: usize) -> String {
    (0..n)
        .map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())])
        .collect()
}

/// Words separated by single spaces, at most `max_chars` long. About one
/// line in eight carries a flag word.
pub fn random_line(rng: &mut impl Rng, max_chars: usize) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut len = 0usize;
    let target = rng.random_range(max_chars / 3..=max_chars).max(1);
    loop {
        let room = if words.is_empty() {
            target
        } else {
            target.saturating_sub(len + 1)
        };
        if room == 0 {
            break;
        }
        let w = random_word(rng, room);
        if !words.is_empty() && w.len() < 2 {
            break;
        }
        len += w.len() + usize::from(!words.is_empty());
        words.push(w);
    }
    if rng.random_bool(0.125) {
        let flag = FLAG_WORDS[rng.random_range(0..FLAG_WORDS.len())];
        if flag.len() <= max_chars {
            let i = rng.random_range(0..words.len());
            words[i] = flag.to_string();
            while words.iter().map(|w| w.len() + 1).sum::<usize>() - 1 > max_chars {
                let at = words.iter().position(|w| w == flag).unwrap_or(0);
                words.remove(if at + 1 == words.len() {
                    0
                } else {
                    words.len() - 1
                });
            }
        }
    }
    words.join(" ")
}
