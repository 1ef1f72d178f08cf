//! Wordle feedback with repeated letters.

use icrl_bench::envs::wordle_feedback;

fn main() {
    for (secret, guess) in [("place", "alien"), ("apple", "paper"), ("geese", "eerie"), ("crane", "crane")] {
        let marks = wordle_feedback(secret, guess);
        println!("{secret} / {guess}: {marks:?}");
    }
}
