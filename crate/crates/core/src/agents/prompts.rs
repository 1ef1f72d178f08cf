//! Prompt texts shown to agents.
//!
//! The game prompts are reproduced verbatim, including the `\\box{}` marker
//! spelling they use. The maze prompt follows the rendered transcript form,
//! which carries the start coordinates and the `\boxed{}` marker.

/// Prefix placed on the first observation of every episode.
pub const NEW_EPISODE: &str = "New episode begins.";

const SYSTEM_PROMPT: &str = "You are solving the same task across multiple episodes with a fixed total step budget. Each episode resets the environment but keeps the task identical. Leverage information gathered from earlier episodes to succeed faster. Respond with actions inside \\\\box{} each turn.";

pub fn render_system_prompt() -> &'static str {
    SYSTEM_PROMPT
}

/// Marks an opening observation as the start of a new episode.
pub fn render_observation(observation: &str, is_new_episode: bool) -> String {
    if is_new_episode {
        format!("{NEW_EPISODE} {observation}")
    } else {
        observation.to_string()
    }
}

pub fn minesweeper_prompt(board: &str) -> String {
    format!(
        "You are playing the Minesweeper game. The objective of the game is to reveal all cells that do not contain mines. To make a move, you can either reveal a cell or place a flag on a suspected mine location using one of the following commands:
- 'reveal': Reveal the contents of a specific cell.
- 'flag': Place or remove a flag on a specific cell to mark it as a potential mine.
To submit your move, type the command followed by the row and column in \\\\box{{}} .
For example:
- \\\\box{{reveal 4 4}} to reveal the cell in Row 4, Column 4.
- \\\\box{{flag 2 2}} to place or remove a flag on the cell in Row 2, Column 2.
The current board layout is shown below. Cells that are unrevealed are represented by a dot ('.'), revealed numbers show the count of adjacent mines, and flagged cells are marked with an 'F'.
Use logic and deduction to avoid revealing cells with mines! Be mindful not to choose revealed or flagged cells.
Here is the current board layout:
{board}
Enter your guess."
    )
}

pub fn hangman_prompt(word_len: usize, turns: usize, grid: &str) -> String {
    format!(
        "You are playing Hangman.
The objective of the game is to guess the {word_len}-letter word by providing one letter guesses or the entire word.
The cells that need to be populated with letters are represented by '_'.
There are two ways you can answer. You can provide one letter guesses in the format of \\\\box{{TOE}}, or you can guess the entire word in the format of \\\\box{{Y}}.
If the given letter is in the word, it will be revealed in the grid.
If the given word is correct, you win.
As you play, the history of your choices will be appended below. Use the information to figure out the word and win.
Some rules:
1. You can only guess one letter/word at a time.
2. You have to win within {turns} turns.
Here is the current state of the Hangman grid:
{grid}
Enter your guess."
    )
}

const BLACKJACK_RULES: &str = "You are an agent playing a simplified game of Blackjack against a dealer.

Game Objective:
Your goal is to choose actions that maximize your chance of winning against the dealer.

- The objective is to get a hand value as close to 21 as possible without exceeding 21.
- If your hand value exceeds 21, you bust and immediately lose.
- After you stand, the game ends and your hand is compared with the dealer's hand.

Card Values:
- Number cards (2–10): face value
- Face cards (J, Q, K): value 10
- Ace (A): value 1 or 11, chosen to give the highest possible hand value not exceeding 21

Dealer Rules:
- The dealer has exactly two cards.
- One dealer card is visible and the other is hidden.
- The dealer does not draw any additional cards.
- The dealer's hand value is computed using the same Ace rule as the player.

Initial Observation:
At the start of the episode, you observe:

1. Dealer’s hand:
   - One visible card and one hidden card
   - Example: Dealer cards: [4, ?]

2. Your hand:
   - A list of cards currently held
   - Example: Your cards: [10, 6]

3. Deck:
   - A list of remaining cards indexed by position
   - Unknown card identities are hidden
   - Example: Deck: [0: ?, 1: ?, 2: ?, 3: ?, 4: ?, ...]

Available Actions:
At each step, you must choose exactly one of the following actions:
- Hit: draw a specific card from the deck
  hit <card_index>

- Stand: stop drawing cards and end the game
  stand

Action Output Format:
You must output your action in exactly one line, using the following format:

- Hit example: \\\\box{hit 9}

- Stand example: \\\\box{stand}

Important constraints:
- Output only the boxed action.
- Do not include explanations, reasoning, or additional text.
- Do not output multiple actions.

Now Begin:
Given the current observation, decide your next action and output it in the required format.";

pub fn blackjack_prompt(table: &str) -> String {
    format!("{BLACKJACK_RULES}\n\n{table}")
}

pub fn rps_prompt() -> String {
    "You are playing a multi-turn Rock-Paper-Scissors game against an adversary.
In each episode, at every turn, the adversary's action is sampled from a fixed (hidden) distribution determined by the seed.
Your objective is to choose the action that maximizes the probability of winning against this hidden distribution each turn.
Now let's start the game. Output your action within \\\\box{...}."
        .to_string()
}

pub fn wordle_prompt(turns: usize) -> String {
    format!(
        "You are playing Wordle.
You have to guess the secret 5-letter word within {turns} turns.
After you enter your guess, I will say mark your guess as follows:
  - G (green): correct letter in the correct position
  - Y (yellow): letter exists in the word but in the wrong position
  - X (wrong): letter is not in the word
After thinking, format your final answer inside \\\\box{{...}}, for example, CRANE.
As you play, the history of your guesses will be appended below. Use the information to complete the game before you run out of guesses."
    )
}

pub fn mastermind_prompt(turns: usize) -> String {
    format!(
        "You are playing Mastermind.
You have to guess the secret 3 digit code within {turns} turns.
The code consists of digits from 1 to 6 (inclusive).
Duplicate numbers are 'not allowed'.
After you enter your guess, I will say mark your guess with black and white pegs, where a black peg indicates a correct digit in the correct position, while a white peg indicates a correct digit in the wrong position.
After thinking, format your final answer inside \\\\box{{...}}, for example, \\\\box{{1 4 6}}.
As you play, the history of your guesses will be appended below. Use the information to complete the game before you run out of guesses.
Enter your first guess to start the game."
    )
}

/// Opening maze observation; `surroundings` is the `Around you, ...` sentence.
pub fn maze_prompt(row: usize, col: usize, surroundings: &str) -> String {
    format!(
        "You are a maze-solving agent. Your goal is to navigate from the START position to the GOAL position in the fewest turns possible. You are at the START position ({row},{col}). {surroundings} {MAZE_MOVE_REQUEST}"
    )
}

pub const MAZE_MOVE_REQUEST: &str =
    "Output your next move from up/down/left/right within \\boxed{}.";
