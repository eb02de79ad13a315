//! Builds a small custom game, writes it in the text format, reads it back
//! and validates it. The output file works with `efg validate` and in run configs.
//!
//! cargo run --example game_file -- [out.efg]

use balanced_efg::game::{validate_game, GameBuilder, GameMode, RewardMode};
use balanced_efg::games::{emit_game_file, game_hash, parse_game_file};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A guessing game: player 0 hides a coin, chance reveals it to player 1 with probability 0.7.
    let mut b = GameBuilder::new(2, 2, GameMode::ZeroSum).reward_mode(RewardMode::Deterministic);
    let hide = b.add_infoset(0, 0, 2);
    let wait = b.add_infoset(1, 0, 1);
    let root = b.add_root(1.0, &[hide, wait]);
    let idle = b.add_infoset(0, 1, 1);
    let blind = b.add_infoset(1, 1, 2);
    for coin in 0..2 {
        let idle_after = if coin == 0 { idle } else { b.add_infoset(0, 1, 1) };
        let seen = b.add_named_infoset(1, 1, 2, &format!("saw-{coin}"));
        b.set_zero_sum_reward(root, &[coin, 0], 0.0);
        for (prob, view) in [(0.7, seen), (0.3, blind)] {
            let s = b.add_child(root, &[coin, 0], prob, &[idle_after, view]);
            for guess in 0..2 {
                b.set_zero_sum_reward(s, &[0, guess], if guess == coin { 0.0 } else { 1.0 });
            }
        }
    }
    let game = b.build()?;
    println!("validation: {}", validate_game(&game));

    let text = emit_game_file(&game);
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("guess.efg").display().to_string());
    std::fs::write(&path, &text)?;
    let back = parse_game_file(&std::fs::read_to_string(&path)?)?;
    assert_eq!(back, game);
    println!("wrote {path} ({} bytes, sha256 {})", text.len(), &game_hash(&back)[..16]);
    Ok(())
}
