use crate::engine::{Action, ActionSpace, COLOR_NAMES};

use super::CodecError;

/// Canonical text of an action: `play 2`, `discard 4`, `hint color red to player +1`,
/// `hint rank 3 to player +2`.
pub fn render_action(action: Action) -> String {
    match action {
        Action::Play(i) => format!("play {i}"),
        Action::Discard(i) => format!("discard {i}"),
        Action::HintColor { target, color } => {
            format!("hint color {} to player +{target}", COLOR_NAMES[color as usize])
        }
        Action::HintRank { target, rank } => format!("hint rank {rank} to player +{target}"),
    }
}

pub fn parse_action(text: &str, space: &ActionSpace) -> Result<Action, CodecError> {
    let words: Vec<&str> = text.split(' ').collect();
    let (action, used) = parse_action_words(&words, space, 1, 1)?;
    if used != words.len() {
        return Err(CodecError::at(1, column_of(&words, used), "trailing input after action"));
    }
    Ok(action)
}

/// 1-based column of word `idx` in a single-space separated line starting at `base`.
pub(crate) fn column_of(words: &[&str], idx: usize) -> usize {
    1 + words[..idx.min(words.len())].iter().map(|w| w.len() + 1).sum::<usize>()
}

/// Parses an action from the front of `words`. Returns the action and the number of
/// words consumed. `line` and `col0` locate `words[0]` for error reporting.
pub(crate) fn parse_action_words(
    words: &[&str],
    space: &ActionSpace,
    line: usize,
    col0: usize,
) -> Result<(Action, usize), CodecError> {
    let err = |idx: usize, msg: String| CodecError::at(line, col0 - 1 + column_of(words, idx), msg);
    let word = |idx: usize| -> Result<&str, CodecError> {
        words
            .get(idx)
            .copied()
            .ok_or_else(|| err(idx, "unexpected end of action".to_string()))
    };
    let index = |idx: usize| -> Result<usize, CodecError> {
        let w = word(idx)?;
        let i: usize = parse_uint(w).ok_or_else(|| err(idx, format!("expected card index, found {w:?}")))?;
        if i >= space.hand_size {
            return Err(err(idx, format!("card index {i} out of range")));
        }
        Ok(i)
    };
    let target = |idx: usize| -> Result<usize, CodecError> {
        if word(idx)? != "to" || word(idx + 1)? != "player" {
            return Err(err(idx, "expected `to player +k`".to_string()));
        }
        let w = word(idx + 2)?;
        let k = w
            .strip_prefix('+')
            .and_then(parse_uint)
            .ok_or_else(|| err(idx + 2, format!("expected +offset, found {w:?}")))?;
        if k == 0 || k >= space.num_players {
            return Err(err(idx + 2, format!("target offset +{k} out of range")));
        }
        Ok(k)
    };
    match word(0)? {
        "play" => Ok((Action::Play(index(1)?), 2)),
        "discard" => Ok((Action::Discard(index(1)?), 2)),
        "hint" => match word(1)? {
            "color" => {
                let name = word(2)?;
                let color = color_index(name, space.colors)
                    .ok_or_else(|| err(2, format!("unknown color {name:?}")))?;
                Ok((Action::HintColor { target: target(3)?, color }, 6))
            }
            "rank" => {
                let w = word(2)?;
                let rank = parse_uint(w)
                    .filter(|r| (1..=space.ranks).contains(r))
                    .ok_or_else(|| err(2, format!("bad rank {w:?}")))?;
                Ok((Action::HintRank { target: target(3)?, rank: rank as u8 }, 6))
            }
            other => Err(err(1, format!("expected `color` or `rank`, found {other:?}"))),
        },
        other => Err(err(0, format!("unknown action verb {other:?}"))),
    }
}

/// Strict decimal: no sign, no leading zeros beyond a lone `0`.
pub(crate) fn parse_uint(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
        return None;
    }
    s.parse().ok()
}

pub(crate) fn color_index(name: &str, colors: usize) -> Option<u8> {
    COLOR_NAMES[..colors].iter().position(|&c| c == name).map(|i| i as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::GameConfig;

    #[test]
    fn canonical_forms() {
        assert_eq!(render_action(Action::Discard(4)), "discard 4");
        let space = GameConfig::new(2, 0).action_space();
        assert_eq!(render_action(space.action(0).unwrap()), "discard 0");
        assert_eq!(
            render_action(Action::HintColor { target: 1, color: 4 }),
            "hint color blue to player +1"
        );
        assert_eq!(render_action(Action::HintRank { target: 2, rank: 3 }), "hint rank 3 to player +2");
    }

    #[test]
    fn round_trip_every_id_every_player_count() {
        for n in 2..=5 {
            let space = GameConfig::new(n, 0).action_space();
            for id in 0..space.len() {
                let a = space.action(id).unwrap();
                let back = parse_action(&render_action(a), &space).unwrap();
                assert_eq!(back, a);
                assert_eq!(space.id(back).unwrap(), id);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let space = GameConfig::new(2, 0).action_space();
        for bad in [
            "play 5",
            "discard -1",
            "discard 01",
            "hint color purple to player +1",
            "hint color red to player +2",
            "hint rank 6 to player +1",
            "hint rank 1 to player",
            "fold",
            "play 1 now",
            "",
        ] {
            assert!(parse_action(bad, &space).is_err(), "{bad:?} parsed");
        }
        match parse_action("hint color purple to player +1", &space) {
            Err(CodecError::Parse { column, .. }) => assert_eq!(column, 12),
            other => panic!("{other:?}"),
        }
    }
}
