//! Canonical text for observations and actions, and parsers back to structure.
//!
//! The observation grammar is line oriented, one section per line, in this order:
//!
//! ```text
//! hanabi-text v1
//! turn: viewer=0 current=0 players=2 status=playing
//! hint tokens: 8
//! life tokens: 3
//! fireworks: red=0 yellow=0 green=0 white=0 blue=0
//! player +1 hand: +1.0=red3 +1.0:hint=?? +1.0:colors=rygwb +1.0:ranks=12345 +1.0:status=later +1.0:belief=unknown ...
//! your hand: 0:hint=?? 0:colors=rygwb 0:ranks=12345 0:options=25 0:belief=unknown ...
//! deck size: 40
//! discards: red1 blue4
//! last action: player 1 hint rank 3 to player +1 touched=0,2
//! ```
//!
//! `status` says whether a visible card is playable now, already useless, or needed
//! later; `belief` is what the holder's own knowledge proves (playable, useless or
//! unknown). Both are implied by the rest of the line and checked on parse.
//!
//! The `discards` line appears only when the observation carries the discard pile.
//! Before the first move the final line reads `last action: none`. Legal actions are
//! never rendered; the parser recomputes them from the table.

mod action_text;

pub use action_text::{parse_action, render_action};

use std::fmt::Write;

use thiserror::Error;

use crate::engine::{
    Action, BitSet16, Card, CardKnowledge, GameConfig, HandCard, LastAction, Observation, Outcome, Rules,
    COLOR_NAMES,
};
use action_text::{color_index, parse_action_words, parse_uint};

const PARTNER_WORDS: usize = 6;
const OWN_WORDS: usize = 5;

/// Version tag of the only grammar this build reads and writes.
pub const TEMPLATE_VERSION: &str = "hanabi-text v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unsupported template version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },
    #[error("invalid observation: {0}")]
    Validation(String),
}

impl CodecError {
    pub(crate) fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        CodecError::Parse { line, column, message: message.into() }
    }
}

/// A versioned observation grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TextTemplate {
    #[default]
    V1,
}

impl TextTemplate {
    pub fn version(&self) -> &'static str {
        match self {
            TextTemplate::V1 => TEMPLATE_VERSION,
        }
    }

    pub fn render(&self, obs: &Observation) -> String {
        render_observation(obs)
    }

    pub fn parse(&self, text: &str, config: &GameConfig) -> Result<Observation, CodecError> {
        parse_observation(text, config)
    }
}

fn color_letter(c: u8) -> char {
    COLOR_NAMES[c as usize].as_bytes()[0] as char
}

fn hint_token(k: &CardKnowledge) -> String {
    let c = k.hinted_color.map_or('?', color_letter);
    let r = k.hinted_rank.map_or('?', |r| char::from(b'0' + r));
    format!("{c}{r}")
}

fn colors_token(k: &CardKnowledge) -> String {
    k.possible_colors.iter().map(color_letter).collect()
}

fn ranks_token(k: &CardKnowledge) -> String {
    k.possible_ranks.iter().map(|r| char::from(b'0' + r)).collect()
}

fn push_line(out: &mut String, key: &str, items: &[String]) {
    out.push('\n');
    out.push_str(key);
    out.push(':');
    for item in items {
        out.push(' ');
        out.push_str(item);
    }
}

/// Renders `obs` under the current template. Total, deterministic and byte-stable.
pub fn render_observation(obs: &Observation) -> String {
    let mut out = String::with_capacity(512);
    out.push_str(TEMPLATE_VERSION);
    let status = if obs.terminal { "over" } else { "playing" };
    let _ = write!(
        out,
        "\nturn: viewer={} current={} players={} status={status}",
        obs.viewer, obs.current_player, obs.rules.num_players
    );
    let _ = write!(out, "\nhint tokens: {}\nlife tokens: {}", obs.hint_tokens, obs.life_tokens);
    let fireworks: Vec<String> = obs
        .fireworks
        .iter()
        .enumerate()
        .map(|(c, h)| format!("{}={h}", COLOR_NAMES[c]))
        .collect();
    push_line(&mut out, "fireworks", &fireworks);
    for (o, hand) in obs.others.iter().enumerate() {
        let offset = o + 1;
        let mut items = Vec::with_capacity(hand.len() * 4);
        for (i, h) in hand.iter().enumerate() {
            let tag = format!("+{offset}.{i}");
            items.push(format!("{tag}={}", h.card.label()));
            items.push(format!("{tag}:hint={}", hint_token(&h.knowledge)));
            items.push(format!("{tag}:colors={}", colors_token(&h.knowledge)));
            items.push(format!("{tag}:ranks={}", ranks_token(&h.knowledge)));
            items.push(format!("{tag}:status={}", obs.card_status(h.card)));
            items.push(format!("{tag}:belief={}", obs.belief(&h.knowledge)));
        }
        push_line(&mut out, &format!("player +{offset} hand"), &items);
    }
    let mut own = Vec::with_capacity(obs.own.len() * 4);
    for (i, k) in obs.own.iter().enumerate() {
        own.push(format!("{i}:hint={}", hint_token(k)));
        own.push(format!("{i}:colors={}", colors_token(k)));
        own.push(format!("{i}:ranks={}", ranks_token(k)));
        own.push(format!("{i}:options={}", k.num_possibilities()));
        own.push(format!("{i}:belief={}", obs.belief(k)));
    }
    push_line(&mut out, "your hand", &own);
    let _ = write!(out, "\ndeck size: {}", obs.deck_size);
    if let Some(pile) = &obs.discard_pile {
        let items: Vec<String> = if pile.is_empty() {
            vec!["none".to_string()]
        } else {
            pile.iter().map(Card::label).collect()
        };
        push_line(&mut out, "discards", &items);
    }
    if let Some(last) = &obs.last_action {
        let mut text = format!("player {} {}", last.actor, render_action(last.action));
        match &last.outcome {
            Outcome::Play { card, success } => {
                let verdict = if *success { "success" } else { "failure" };
                let _ = write!(text, " {} {verdict}", card.label());
            }
            Outcome::Discard { card } => {
                let _ = write!(text, " {}", card.label());
            }
            Outcome::Hint { touched } => {
                let list: Vec<String> = touched.iter().map(usize::to_string).collect();
                let _ = write!(text, " touched={}", list.join(","));
            }
        }
        push_line(&mut out, "last action", &[text]);
    } else {
        out.push_str("\nlast action: none");
    }
    out
}

/// One input line split into single-space separated words with 1-based columns.
struct Line<'a> {
    no: usize,
    words: Vec<(usize, &'a str)>,
}

struct Cursor<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek_starts_with(&self, prefix: &str) -> bool {
        self.lines.get(self.pos).is_some_and(|l| l.starts_with(prefix))
    }

    /// Consumes the next line, which must start with `key:`.
    fn section(&mut self, key: &str) -> Result<Line<'a>, CodecError> {
        let no = self.pos + 1;
        let text = *self
            .lines
            .get(self.pos)
            .ok_or_else(|| CodecError::at(no, 1, format!("unexpected end of input, expected `{key}:`")))?;
        let rest = text
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(':'))
            .ok_or_else(|| CodecError::at(no, 1, format!("expected `{key}:`")))?;
        self.pos += 1;
        let mut col = key.len() + 2;
        let mut words = Vec::new();
        if !rest.is_empty() {
            let body = rest
                .strip_prefix(' ')
                .ok_or_else(|| CodecError::at(no, col, "expected a space after the colon"))?;
            col += 1;
            for w in body.split(' ') {
                if w.is_empty() {
                    return Err(CodecError::at(no, col, "empty field (double or trailing space)"));
                }
                words.push((col, w));
                col += w.len() + 1;
            }
        }
        Ok(Line { no, words })
    }
}

impl<'a> Line<'a> {
    fn err(&self, idx: usize, msg: impl Into<String>) -> CodecError {
        let col = self.words.get(idx).map_or_else(
            || self.words.last().map_or(1, |(c, w)| c + w.len()),
            |(c, _)| *c,
        );
        CodecError::at(self.no, col, msg)
    }

    fn expect_len(&self, n: usize) -> Result<(), CodecError> {
        if self.words.len() != n {
            return Err(self.err(n.min(self.words.len()), format!("expected {n} fields, found {}", self.words.len())));
        }
        Ok(())
    }

    /// Field `idx` must read `key=value`; returns the value.
    fn keyed(&self, idx: usize, key: &str) -> Result<&'a str, CodecError> {
        let (_, w) = self.words.get(idx).ok_or_else(|| self.err(idx, format!("missing `{key}=`")))?;
        w.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(idx, format!("expected `{key}=`, found {w:?}")))
    }

    fn keyed_uint(&self, idx: usize, key: &str) -> Result<usize, CodecError> {
        let v = self.keyed(idx, key)?;
        parse_uint(v).ok_or_else(|| self.err(idx, format!("expected a number, found {v:?}")))
    }

    fn single_uint(&self) -> Result<usize, CodecError> {
        self.expect_len(1)?;
        let w = self.words[0].1;
        parse_uint(w).ok_or_else(|| self.err(0, format!("expected a number, found {w:?}")))
    }
}

fn parse_card(word: &str, colors: usize, ranks: usize) -> Option<Card> {
    let split = word.len().checked_sub(1)?;
    let (name, rank) = word.split_at(split);
    let color = color_index(name, colors)?;
    let rank = parse_uint(rank).filter(|r| (1..=ranks).contains(r))?;
    Some(Card::new(color, rank as u8))
}

fn parse_knowledge(
    line: &Line<'_>,
    idx: usize,
    tag: &str,
    rules: &Rules,
) -> Result<CardKnowledge, CodecError> {
    let hint = line.keyed(idx, &format!("{tag}:hint"))?;
    let hint_bytes = hint.as_bytes();
    if hint_bytes.len() != 2 {
        return Err(line.err(idx, format!("malformed hint {hint:?}")));
    }
    let letter_to_color = |b: u8| -> Option<u8> {
        (0..rules.colors as u8).find(|&c| color_letter(c) as u8 == b)
    };
    let digit_to_rank = |b: u8| -> Option<u8> {
        let r = b.wrapping_sub(b'0');
        (1..=rules.ranks as u8).contains(&r).then_some(r)
    };
    let hinted_color = match hint_bytes[0] {
        b'?' => None,
        b => Some(letter_to_color(b).ok_or_else(|| line.err(idx, format!("bad hinted color in {hint:?}")))?),
    };
    let hinted_rank = match hint_bytes[1] {
        b'?' => None,
        b => Some(digit_to_rank(b).ok_or_else(|| line.err(idx, format!("bad hinted rank in {hint:?}")))?),
    };
    let colors = line.keyed(idx + 1, &format!("{tag}:colors"))?;
    let mut possible_colors = BitSet16::default();
    for b in colors.bytes() {
        let c = letter_to_color(b).ok_or_else(|| line.err(idx + 1, format!("bad color set {colors:?}")))?;
        possible_colors.insert(c);
    }
    let ranks = line.keyed(idx + 2, &format!("{tag}:ranks"))?;
    let mut possible_ranks = BitSet16::default();
    for b in ranks.bytes() {
        let r = digit_to_rank(b).ok_or_else(|| line.err(idx + 2, format!("bad rank set {ranks:?}")))?;
        possible_ranks.insert(r);
    }
    let k = CardKnowledge { possible_colors, possible_ranks, hinted_color, hinted_rank };
    // Sets must be written in canonical order so that parsing inverts rendering exactly.
    if colors != colors_token(&k) || ranks != ranks_token(&k) {
        return Err(line.err(idx + 1, "possibility sets not in canonical form"));
    }
    if possible_colors.is_empty() || possible_ranks.is_empty() {
        return Err(CodecError::Validation(format!("{tag}: empty possibility set")));
    }
    if hinted_color.is_some_and(|c| possible_colors != BitSet16::single(c))
        || hinted_rank.is_some_and(|r| possible_ranks != BitSet16::single(r))
    {
        return Err(CodecError::Validation(format!("{tag}: hinted value contradicts possibilities")));
    }
    Ok(k)
}

/// Parses text produced by [`render_observation`] back into an [`Observation`].
///
/// `config` supplies the rule constants the text does not repeat (color and rank
/// counts, hand size, token maxima). Legal action ids are recomputed.
pub fn parse_observation(text: &str, config: &GameConfig) -> Result<Observation, CodecError> {
    let rules = config.rules();
    let lines: Vec<&str> = text.split('\n').collect();
    if lines[0] != TEMPLATE_VERSION {
        if lines[0].starts_with("hanabi-text ") {
            return Err(CodecError::Version {
                found: lines[0].to_string(),
                expected: TEMPLATE_VERSION.to_string(),
            });
        }
        return Err(CodecError::at(1, 1, format!("expected `{TEMPLATE_VERSION}` header")));
    }
    let mut cur = Cursor { lines, pos: 1 };

    let turn = cur.section("turn")?;
    turn.expect_len(4)?;
    let viewer = turn.keyed_uint(0, "viewer")?;
    let current_player = turn.keyed_uint(1, "current")?;
    let players = turn.keyed_uint(2, "players")?;
    let terminal = match turn.keyed(3, "status")? {
        "playing" => false,
        "over" => true,
        other => return Err(turn.err(3, format!("unknown status {other:?}"))),
    };
    if players != rules.num_players {
        return Err(CodecError::Validation(format!(
            "text has {players} players, configuration has {}",
            rules.num_players
        )));
    }
    if viewer >= players || current_player >= players {
        return Err(CodecError::Validation("seat index out of range".into()));
    }

    let hint_tokens = cur.section("hint tokens")?.single_uint()?;
    if hint_tokens > rules.max_hint_tokens {
        return Err(CodecError::Validation(format!(
            "hint tokens {hint_tokens} exceed maximum {}",
            rules.max_hint_tokens
        )));
    }
    let life_tokens = cur.section("life tokens")?.single_uint()?;
    if life_tokens > rules.max_life_tokens {
        return Err(CodecError::Validation(format!(
            "life tokens {life_tokens} exceed maximum {}",
            rules.max_life_tokens
        )));
    }

    let fw = cur.section("fireworks")?;
    fw.expect_len(rules.colors)?;
    let mut fireworks = Vec::with_capacity(rules.colors);
    for c in 0..rules.colors {
        let h = fw.keyed_uint(c, COLOR_NAMES[c])?;
        if h > rules.ranks {
            return Err(CodecError::Validation(format!("firework {} at {h}", COLOR_NAMES[c])));
        }
        fireworks.push(h as u8);
    }

    // Derived tokens are checked once the fireworks are known: (word, card, tag).
    let mut statuses: Vec<(String, Option<Card>, String)> = Vec::new();
    let mut beliefs: Vec<CardKnowledge> = Vec::new();
    let mut others = Vec::with_capacity(players - 1);
    for offset in 1..players {
        let line = cur.section(&format!("player +{offset} hand"))?;
        if line.words.len() % PARTNER_WORDS != 0 || line.words.len() / PARTNER_WORDS > rules.hand_size {
            return Err(line.err(line.words.len(), "malformed hand"));
        }
        let mut hand = Vec::with_capacity(line.words.len() / PARTNER_WORDS);
        for i in 0..line.words.len() / PARTNER_WORDS {
            let base = PARTNER_WORDS * i;
            let tag = format!("+{offset}.{i}");
            let label = line.keyed(base, &tag)?;
            let card = parse_card(label, rules.colors, rules.ranks)
                .ok_or_else(|| line.err(base, format!("bad card {label:?}")))?;
            let knowledge = parse_knowledge(&line, base + 1, &tag, &rules)?;
            if !knowledge.admits(card) {
                return Err(CodecError::Validation(format!("{tag}: knowledge excludes {label}")));
            }
            statuses.push((line.keyed(base + 4, &format!("{tag}:status"))?.to_string(), Some(card), tag.clone()));
            statuses.push((line.keyed(base + 5, &format!("{tag}:belief"))?.to_string(), None, tag));
            beliefs.push(knowledge);
            hand.push(HandCard { card, knowledge });
        }
        others.push(hand);
    }

    let own_line = cur.section("your hand")?;
    if own_line.words.len() % OWN_WORDS != 0 || own_line.words.len() / OWN_WORDS > rules.hand_size {
        return Err(own_line.err(own_line.words.len(), "malformed hand"));
    }
    let mut own = Vec::with_capacity(own_line.words.len() / OWN_WORDS);
    for i in 0..own_line.words.len() / OWN_WORDS {
        let base = OWN_WORDS * i;
        let tag = i.to_string();
        let k = parse_knowledge(&own_line, base, &tag, &rules)?;
        let options = own_line.keyed_uint(base + 3, &format!("{tag}:options"))?;
        if options != k.num_possibilities() {
            return Err(CodecError::Validation(format!("{tag}: options {options} inconsistent")));
        }
        statuses.push((own_line.keyed(base + 4, &format!("{tag}:belief"))?.to_string(), None, tag));
        beliefs.push(k);
        own.push(k);
    }

    let deck_size = cur.section("deck size")?.single_uint()?;
    if deck_size > config.deck_size() {
        return Err(CodecError::Validation(format!("deck size {deck_size} too large")));
    }

    let discard_pile = if cur.peek_starts_with("discards:") {
        let line = cur.section("discards")?;
        let words: Vec<&str> = line.words.iter().map(|(_, w)| *w).collect();
        if words == ["none"] {
            Some(Vec::new())
        } else {
            let mut pile = Vec::with_capacity(words.len());
            for (i, w) in words.iter().enumerate() {
                pile.push(
                    parse_card(w, rules.colors, rules.ranks)
                        .ok_or_else(|| line.err(i, format!("bad card {w:?}")))?,
                );
            }
            if pile.is_empty() {
                return Err(line.err(0, "empty discard list must be written `none`"));
            }
            Some(pile)
        }
    } else {
        None
    };

    let line = cur.section("last action")?;
    let last_action = if line.words.len() == 1 && line.words[0].1 == "none" {
        None
    } else {
        Some(parse_last_action(&line, config)?)
    };

    if cur.pos != cur.lines.len() {
        return Err(CodecError::at(cur.pos + 1, 1, "unexpected trailing content"));
    }

    let mut obs = Observation {
        rules,
        viewer,
        current_player,
        terminal,
        others,
        own,
        fireworks,
        hint_tokens,
        life_tokens,
        deck_size,
        discard_pile,
        last_action,
        legal_action_ids: Vec::new(),
    };
    check_last_hint(&obs)?;
    let mut knowledge = beliefs.iter();
    for (word, card, tag) in &statuses {
        let expected = match card {
            Some(c) => obs.card_status(*c),
            None => obs.belief(knowledge.next().expect("one belief per card")),
        };
        if word != expected {
            return Err(CodecError::Validation(format!("{tag}: derived token {word:?}, expected {expected:?}")));
        }
    }
    obs.legal_action_ids = obs.compute_legal_ids();
    Ok(obs)
}

/// The most recent hint must agree with the target's knowledge: touched cards are
/// pinned to the hinted value and untouched cards exclude it.
fn check_last_hint(obs: &Observation) -> Result<(), CodecError> {
    let Some(LastAction { actor, action, outcome: Outcome::Hint { touched } }) = &obs.last_action else {
        return Ok(());
    };
    let (offset, pinned): (usize, Box<dyn Fn(&CardKnowledge) -> (bool, bool)>) = match *action {
        Action::HintColor { target, color } => (
            target,
            Box::new(move |k: &CardKnowledge| {
                (k.possible_colors == BitSet16::single(color), k.possible_colors.contains(color))
            }),
        ),
        Action::HintRank { target, rank } => (
            target,
            Box::new(move |k: &CardKnowledge| {
                (k.possible_ranks == BitSet16::single(rank), k.possible_ranks.contains(rank))
            }),
        ),
        _ => return Err(CodecError::Validation("touched list on a non-hint action".into())),
    };
    let seat = (actor + offset) % obs.rules.num_players;
    let knowledge = obs.knowledge_of(seat);
    for (i, k) in knowledge.iter().enumerate() {
        let (single, possible) = pinned(k);
        let ok = if touched.contains(&i) { single } else { !possible };
        if !ok {
            return Err(CodecError::Validation(format!(
                "last hint inconsistent with knowledge of slot {i}"
            )));
        }
    }
    if touched.iter().any(|&i| i >= knowledge.len()) {
        return Err(CodecError::Validation("touched slot beyond hand".into()));
    }
    Ok(())
}

fn parse_last_action(line: &Line<'_>, config: &GameConfig) -> Result<LastAction, CodecError> {
    let words: Vec<&str> = line.words.iter().map(|(_, w)| *w).collect();
    if words.len() < 3 || words[0] != "player" {
        return Err(line.err(0, "expected `player <seat> <action>`"));
    }
    let actor = parse_uint(words[1])
        .filter(|&a| a < config.num_players)
        .ok_or_else(|| line.err(1, format!("bad seat {:?}", words[1])))?;
    let space = config.action_space();
    let (action, used) = parse_action_words(&words[2..], &space, line.no, line.words[2].0)?;
    let rest = &words[2 + used..];
    let at = 2 + used;
    let card = |i: usize| -> Result<Card, CodecError> {
        let w = rest.get(i).ok_or_else(|| line.err(at + i, "missing card"))?;
        parse_card(w, config.colors, config.ranks).ok_or_else(|| line.err(at + i, format!("bad card {w:?}")))
    };
    let (outcome, n) = if action.is_hint() {
        let w = rest.first().ok_or_else(|| line.err(at, "missing touched list"))?;
        let list = w
            .strip_prefix("touched=")
            .ok_or_else(|| line.err(at, "expected `touched=`"))?;
        let mut touched = Vec::new();
        for part in list.split(',') {
            let i = parse_uint(part)
                .filter(|&i| i < config.hand_size)
                .ok_or_else(|| line.err(at, format!("bad touched list {list:?}")))?;
            if touched.last().is_some_and(|&prev| prev >= i) {
                return Err(line.err(at, "touched slots must ascend"));
            }
            touched.push(i);
        }
        (Outcome::Hint { touched }, 1)
    } else if matches!(action, Action::Play(_)) {
        let c = card(0)?;
        let success = match rest.get(1) {
            Some(&"success") => true,
            Some(&"failure") => false,
            _ => return Err(line.err(at + 1, "expected `success` or `failure`")),
        };
        (Outcome::Play { card: c, success }, 2)
    } else {
        (Outcome::Discard { card: card(0)? }, 1)
    };
    if rest.len() != n {
        return Err(line.err(at + n, "trailing input in last action"));
    }
    Ok(LastAction { actor, action, outcome })
}
