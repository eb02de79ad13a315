//! Line-oriented text format for game trees.
//!
//! ```text
//! efg-game 1
//! players 2
//! horizon 1
//! mode zero-sum
//! reward_mode deterministic
//! payoff_map 4 -2                      # optional
//! infoset <player> <step> <index> <actions> [name]
//! state <step> <index> <prob> root|<parent>:<joint> infosets <x..> rewards <r..>
//! ```
//!
//! Records must appear in index order. `prob` is the initial probability for
//! roots and the transition probability otherwise. Rewards are listed joint
//! action by joint action, all players per joint action. Joint actions are mixed
//! radix with player 0 varying fastest. Lines starting with `#` are comments.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::game::{
    validate_game, GameBuilder, GameError, GameMode, GameTree, PayoffMap, RewardMode, StateRef,
};

pub const MAGIC: &str = "efg-game 1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("line {line}, column {column}: {reason}")]
    Syntax {
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("line {line}: parent state {id} at step {step} is not defined")]
    DanglingParent { line: usize, step: usize, id: usize },
    #[error("game is not valid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Writes `game` in the text format. Numbers use the shortest round-trip form.
pub fn emit_game_file(game: &GameTree) -> String {
    let mut out = String::new();
    let m = game.num_players();
    let mode = match game.mode() {
        GameMode::ZeroSum => "zero-sum",
        GameMode::GeneralSum => "general-sum",
    };
    let reward_mode = match game.reward_mode() {
        RewardMode::Deterministic => "deterministic",
        RewardMode::Bernoulli => "bernoulli",
    };
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "players {m}");
    let _ = writeln!(out, "horizon {}", game.horizon());
    let _ = writeln!(out, "mode {mode}");
    let _ = writeln!(out, "reward_mode {reward_mode}");
    if let Some(map) = game.payoff_map() {
        let _ = writeln!(out, "payoff_map {} {}", map.scale, map.offset);
    }
    for p in 0..m {
        for h in 0..game.horizon() {
            for (x, info) in game.infosets(p, h).iter().enumerate() {
                let _ = write!(out, "infoset {p} {h} {x} {}", info.num_actions());
                if !info.name().is_empty() {
                    let _ = write!(out, " {}", info.name());
                }
                out.push('\n');
            }
        }
    }
    for h in 0..game.horizon() {
        for (s, state) in game.states(h).iter().enumerate() {
            let _ = write!(out, "state {h} {s} {} ", state.prob());
            match state.parent() {
                None => out.push_str("root"),
                Some((parent, joint)) => {
                    let _ = write!(out, "{parent}:{joint}");
                }
            }
            out.push_str(" infosets");
            for x in state.infosets() {
                let _ = write!(out, " {x}");
            }
            out.push_str(" rewards");
            for joint in 0..state.num_joint() {
                for r in state.mean_rewards(joint) {
                    let _ = write!(out, " {r}");
                }
            }
            out.push('\n');
        }
    }
    out
}

/// SHA-256 of the emitted text, hex encoded.
pub fn game_hash(game: &GameTree) -> String {
    hex::encode(Sha256::digest(emit_game_file(game).as_bytes()))
}

/// Parses and validates. Normalization is checked at the library tolerance,
/// with no renormalization.
pub fn parse_game_file(text: &str) -> Result<GameTree, FormatError> {
    let game = parse_game_unchecked(text)?;
    let report = validate_game(&game);
    if report.is_ok() {
        Ok(game)
    } else {
        Err(FormatError::Invalid(report.to_string()))
    }
}

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
    text: &'a str,
    pos: usize,
}

impl<'a> Line<'a> {
    fn new(number: usize, text: &'a str) -> Self {
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push((s, &text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push((s, &text[s..]));
        }
        Line {
            number,
            tokens,
            text,
            pos: 0,
        }
    }

    fn error(&self, column: usize, reason: impl Into<String>) -> FormatError {
        FormatError::Syntax {
            line: self.number,
            column: column + 1,
            reason: reason.into(),
        }
    }

    /// Byte offset of the next token, or of the line end.
    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.text.len(), |t| t.0)
    }

    fn end_column(&self) -> usize {
        self.text.len()
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        match self.tokens.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.error(self.end_column(), format!("expected {what}"))),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, FormatError> {
        let (col, tok) = self.next(what)?;
        tok.parse()
            .map_err(|_| self.error(col, format!("expected {what}, found '{tok}'")))
    }

    fn keyword(&mut self, word: &str) -> Result<(), FormatError> {
        let (col, tok) = self.next(&format!("'{word}'"))?;
        if tok == word {
            Ok(())
        } else {
            Err(self.error(col, format!("expected '{word}', found '{tok}'")))
        }
    }

    /// Remaining text from the current token on, trimmed.
    fn rest(&self) -> &'a str {
        self.tokens
            .get(self.pos)
            .map_or("", |&(col, _)| self.text[col..].trim_end())
    }

    fn finish(&self) -> Result<(), FormatError> {
        match self.tokens.get(self.pos) {
            Some(&(col, tok)) => Err(self.error(col, format!("unexpected '{tok}'"))),
            None => Ok(()),
        }
    }
}

struct Header {
    players: Option<usize>,
    horizon: Option<usize>,
    mode: Option<GameMode>,
    reward_mode: RewardMode,
    payoff_map: Option<PayoffMap>,
}

/// Parses without running [`validate_game`]; index consistency is still checked.
pub fn parse_game_unchecked(text: &str) -> Result<GameTree, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| Line::new(i + 1, l))
        .filter(|l| !l.tokens.is_empty() && !l.tokens[0].1.starts_with('#'));

    match lines.next() {
        Some(l) if l.text.trim() == MAGIC => {}
        Some(l) => return Err(l.error(0, format!("expected header '{MAGIC}'"))),
        None => {
            return Err(FormatError::Syntax {
                line: 1,
                column: 1,
                reason: format!("empty file, expected header '{MAGIC}'"),
            })
        }
    }

    let mut header = Header {
        players: None,
        horizon: None,
        mode: None,
        reward_mode: RewardMode::Deterministic,
        payoff_map: None,
    };
    let mut builder: Option<GameBuilder> = None;
    // Per step: (parent index, joint) known only for action-count lookups.
    let mut states: Vec<Vec<Vec<usize>>> = Vec::new();

    for mut line in lines {
        let (col, directive) = line.next("directive")?;
        match directive {
            "players" | "horizon" | "mode" | "reward_mode" | "payoff_map" => {
                if builder.is_some() {
                    return Err(line.error(col, format!("'{directive}' must precede records")));
                }
                match directive {
                    "players" => header.players = Some(line.number("player count")?),
                    "horizon" => header.horizon = Some(line.number("horizon")?),
                    "mode" => {
                        let (c, t) = line.next("mode")?;
                        header.mode = Some(match t {
                            "zero-sum" => GameMode::ZeroSum,
                            "general-sum" => GameMode::GeneralSum,
                            _ => return Err(line.error(c, format!("unknown mode '{t}'"))),
                        });
                    }
                    "reward_mode" => {
                        let (c, t) = line.next("reward mode")?;
                        header.reward_mode = match t {
                            "deterministic" => RewardMode::Deterministic,
                            "bernoulli" => RewardMode::Bernoulli,
                            _ => return Err(line.error(c, format!("unknown reward mode '{t}'"))),
                        };
                    }
                    _ => {
                        header.payoff_map = Some(PayoffMap {
                            scale: line.number("scale")?,
                            offset: line.number("offset")?,
                        })
                    }
                }
                line.finish()?;
            }
            "infoset" | "state" => {
                if builder.is_none() {
                    let missing = |what: &str| line.error(col, format!("'{what}' must be set first"));
                    let players = header.players.ok_or_else(|| missing("players"))?;
                    let horizon = header.horizon.ok_or_else(|| missing("horizon"))?;
                    let mode = header.mode.ok_or_else(|| missing("mode"))?;
                    let mut b =
                        GameBuilder::new(players, horizon, mode).reward_mode(header.reward_mode);
                    if let Some(map) = header.payoff_map {
                        b = b.payoff_map(map);
                    }
                    states = vec![Vec::new(); horizon];
                    builder = Some(b);
                }
                let b = builder.as_mut().expect("builder created above");
                if directive == "infoset" {
                    parse_infoset(&mut line, b)?;
                } else {
                    parse_state(&mut line, b, &mut states)?;
                }
            }
            other => return Err(line.error(col, format!("unknown directive '{other}'"))),
        }
    }
    let builder = builder.ok_or_else(|| FormatError::Syntax {
        line: text.lines().count().max(1),
        column: 1,
        reason: "no records".into(),
    })?;
    Ok(builder.build()?)
}

fn parse_infoset(line: &mut Line<'_>, b: &mut GameBuilder) -> Result<(), FormatError> {
    let pc = line.column();
    let player: usize = line.number("player")?;
    if player >= b.num_players() {
        return Err(line.error(pc, format!("player {player} out of range")));
    }
    let sc = line.column();
    let step: usize = line.number("step")?;
    if step >= b.horizon() {
        return Err(line.error(sc, format!("step {step} out of range")));
    }
    let ic = line.column();
    let index: usize = line.number("infoset index")?;
    let expected = b.num_infosets(player, step);
    if index != expected {
        return Err(line.error(ic, format!("expected infoset index {expected}, found {index}")));
    }
    let nc = line.column();
    let actions: usize = line.number("action count")?;
    if actions == 0 {
        return Err(line.error(nc, "an infoset needs at least one action"));
    }
    let name = line.rest();
    b.add_named_infoset(player, step, actions, name);
    Ok(())
}

fn parse_state(
    line: &mut Line<'_>,
    b: &mut GameBuilder,
    states: &mut [Vec<Vec<usize>>],
) -> Result<(), FormatError> {
    let m = b.num_players();
    let sc = line.column();
    let step: usize = line.number("step")?;
    if step >= b.horizon() {
        return Err(line.error(sc, format!("step {step} out of range")));
    }
    let ic = line.column();
    let index: usize = line.number("state index")?;
    if index != states[step].len() {
        return Err(line.error(
            ic,
            format!("expected state index {}, found {index}", states[step].len()),
        ));
    }
    let prob: f64 = line.number("probability")?;
    let (pc, parent) = line.next("'root' or <parent>:<joint>")?;
    let parent = if parent == "root" {
        if step != 0 {
            return Err(line.error(pc, "only step-0 states can be roots"));
        }
        None
    } else {
        let bad = || line.error(pc, format!("expected <parent>:<joint>, found '{parent}'"));
        let (id, joint) = parent.split_once(':').ok_or_else(bad)?;
        let id: usize = id.parse().map_err(|_| bad())?;
        let joint: usize = joint.parse().map_err(|_| bad())?;
        if step == 0 {
            return Err(line.error(pc, "step-0 states must be roots"));
        }
        let Some(counts) = states[step - 1].get(id) else {
            return Err(FormatError::DanglingParent {
                line: line.number,
                step: step - 1,
                id,
            });
        };
        let joints: usize = counts.iter().product();
        if joint >= joints {
            return Err(line.error(pc, format!("joint action {joint} out of range 0..{joints}")));
        }
        Some((id, joint))
    };

    line.keyword("infosets")?;
    let mut infosets = Vec::with_capacity(m);
    let mut counts = Vec::with_capacity(m);
    for player in 0..m {
        let xc = line.column();
        let x: usize = line.number("infoset index")?;
        let n = b.infoset_actions(player, step, x);
        if n == 0 {
            return Err(line.error(
                xc,
                format!("player {player} has no infoset {x} at step {step}"),
            ));
        }
        infosets.push(x);
        counts.push(n);
    }

    line.keyword("rewards")?;
    let joints: usize = counts.iter().product();
    let mut rewards = Vec::with_capacity(joints * m);
    for _ in 0..joints * m {
        rewards.push(line.number::<f64>("reward")?);
    }
    line.finish()?;

    let state = match parent {
        None => b.add_root(prob, &infosets),
        Some((id, joint)) => b.add_child_joint(
            StateRef {
                step: step - 1,
                index: id,
            },
            joint,
            prob,
            &infosets,
        ),
    };
    for (joint, r) in rewards.chunks(m).enumerate() {
        let mut rest = joint;
        let actions: Vec<usize> = counts
            .iter()
            .map(|&n| {
                let a = rest % n;
                rest /= n;
                a
            })
            .collect();
        b.set_rewards(state, &actions, r);
    }
    states[step].push(counts);
    Ok(())
}
