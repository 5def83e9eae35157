//! Restricted command language understood by the reference builder:
//!
//! ```text
//! put 2 blue blocks at (0,0,0) (1,0,0) and remove 1 block at (3,0,3)
//! ```
//!
//! Clauses start with a verb (`put`/`place`/`add` or `remove`/`break`/`delete`)
//! and may be joined by `and`, `then`, commas, semicolons or periods.
//! Coordinates are absolute build-frame cells.

use builderkit_core::voxel::{in_bounds, Coord, Palette};
use thiserror::Error;

use crate::plan::Edit;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no command found")]
    Empty,
    #[error("unexpected {0:?}")]
    Unexpected(String),
    #[error("malformed coordinate {0:?}")]
    BadCoord(String),
    #[error("coordinate {0} is outside the build area")]
    OutOfBounds(Coord),
    #[error("unknown color {0:?}")]
    UnknownColor(String),
    #[error("a put needs a color")]
    MissingColor,
    #[error("said {said} blocks but gave {given} positions")]
    CountMismatch { said: usize, given: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    At(Coord),
}

fn number_word(w: &str) -> Option<usize> {
    const WORDS: [&str; 10] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
    w.parse().ok().or_else(|| WORDS.iter().position(|x| *x == w).map(|i| i + 1))
}

fn lex(text: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, toks: &mut Vec<Tok>| {
        if !word.is_empty() {
            toks.push(Tok::Word(std::mem::take(word)));
        }
    };
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        match ch {
            '(' => {
                flush(&mut word, &mut toks);
                let inner: String = chars.by_ref().take_while(|c| *c != ')').collect();
                let parts: Vec<_> = inner
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|p| !p.is_empty())
                    .collect();
                let nums: Result<Vec<i32>, _> = parts.iter().map(|p| p.parse::<i32>()).collect();
                match nums.as_deref() {
                    Ok([x, y, z]) => toks.push(Tok::At(Coord::new(*x, *y, *z))),
                    _ => return Err(ParseError::BadCoord(inner)),
                }
            }
            ',' | ';' | '.' | '!' => flush(&mut word, &mut toks),
            c if c.is_whitespace() => flush(&mut word, &mut toks),
            c => word.extend(c.to_lowercase()),
        }
    }
    flush(&mut word, &mut toks);
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Verb {
    Put,
    Remove,
}

fn verb(w: &str) -> Option<Verb> {
    match w {
        "put" | "place" | "add" => Some(Verb::Put),
        "remove" | "break" | "delete" => Some(Verb::Remove),
        _ => None,
    }
}

/// Parses a whole message into edits, in the order they were written.
pub fn parse_command(text: &str, palette: &Palette) -> Result<Vec<Edit>, ParseError> {
    let toks = lex(text)?;
    let mut edits = Vec::new();
    let mut i = 0;
    let word = |i: usize| match toks.get(i) {
        Some(Tok::Word(w)) => Some(w.as_str()),
        _ => None,
    };
    while i < toks.len() {
        if let Some("and" | "then" | "please") = word(i) {
            i += 1;
            continue;
        }
        let v = word(i)
            .and_then(verb)
            .ok_or_else(|| ParseError::Unexpected(format!("{:?}", toks[i])))?;
        i += 1;
        let count = word(i)
            .and_then(number_word)
            .ok_or_else(|| ParseError::Unexpected(word(i).unwrap_or("<end>").to_string()))?;
        i += 1;
        let mut color = None;
        if let Some(w) = word(i).filter(|w| !matches!(*w, "block" | "blocks")) {
            color = Some(palette.id_of(w).ok_or_else(|| ParseError::UnknownColor(w.to_string()))?);
            i += 1;
        }
        if !matches!(word(i), Some("block" | "blocks")) {
            return Err(ParseError::Unexpected(word(i).unwrap_or("<end>").to_string()));
        }
        i += 1;
        if word(i) != Some("at") {
            return Err(ParseError::Unexpected(word(i).unwrap_or("<end>").to_string()));
        }
        i += 1;
        let mut coords = Vec::new();
        while let Some(Tok::At(c)) = toks.get(i) {
            if !in_bounds(*c) {
                return Err(ParseError::OutOfBounds(*c));
            }
            coords.push(*c);
            i += 1;
        }
        if coords.len() != count {
            return Err(ParseError::CountMismatch {
                said: count,
                given: coords.len(),
            });
        }
        match v {
            Verb::Put => {
                let id = color.ok_or(ParseError::MissingColor)?;
                edits.extend(coords.into_iter().map(|c| Edit::Place(c, id)));
            }
            Verb::Remove => edits.extend(coords.into_iter().map(Edit::Remove)),
        }
    }
    if edits.is_empty() {
        return Err(ParseError::Empty);
    }
    Ok(edits)
}

fn coord_text(c: Coord) -> String {
    format!("({},{},{})", c.x, c.y, c.z)
}

/// Writes edits back as a command: consecutive edits of the same kind and
/// color share a clause.
pub fn render_command(edits: &[Edit], palette: &Palette) -> Option<String> {
    let mut clauses: Vec<(String, Vec<Coord>)> = Vec::new();
    for e in edits {
        let head = match *e {
            Edit::Place(_, id) => format!("put {}", palette.name_of(id)?),
            Edit::Remove(_) => "remove".to_string(),
        };
        match clauses.last_mut() {
            Some((h, cs)) if *h == head => cs.push(e.coord()),
            _ => clauses.push((head, vec![e.coord()])),
        }
    }
    let parts: Vec<String> = clauses
        .into_iter()
        .map(|(head, cs)| {
            let noun = if cs.len() == 1 { "block" } else { "blocks" };
            let at: Vec<String> = cs.into_iter().map(coord_text).collect();
            let (verb, color) = head.split_once(' ').unwrap_or((head.as_str(), ""));
            let color = if color.is_empty() { String::new() } else { format!(" {color}") };
            format!("{verb} {}{color} {noun} at {}", at.len(), at.join(" "))
        })
        .collect();
    (!parts.is_empty()).then(|| parts.join(" and "))
}

pub fn clarifying_question(err: &ParseError) -> String {
    match err {
        ParseError::CountMismatch { said, given } => format!(
            "You said {said} blocks but I see {given} positions. Which positions did you mean?"
        ),
        ParseError::UnknownColor(c) => format!("Which color do you mean by {c:?}?"),
        ParseError::OutOfBounds(c) => format!("{} is outside the build area. Where should it go?", coord_text(*c)),
        _ => "I did not understand. Could you phrase it like \"put 1 red block at (0,0,0)\"?".to_string(),
    }
}
