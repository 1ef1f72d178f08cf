//! Simplified Blackjack with an indexed, face-down deck.
//!
//! The deck order is fixed by the seed and every episode deals the same
//! opening hands, so the identity of each deck position can be learned
//! across episodes. The dealer holds exactly two cards and never draws.

use std::fmt;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

use super::{invalid_message, seeded_rng, EnvError, EnvId, Environment, StepOutcome};
use crate::agents::prompts::blackjack_prompt;

const SALT: u64 = 0x626a_6163;

static MOVE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?i)(?:hit\s+(\d+)|(stand))$").unwrap());

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BlackjackParams {}

/// Card rank, 1 = ace, 11..=13 = J, Q, K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Card(pub u8);

impl Card {
    pub fn points(self) -> u32 {
        match self.0 {
            1 => 1,
            r if r >= 10 => 10,
            r => r as u32,
        }
    }

    pub fn is_ace(self) -> bool {
        self.0 == 1
    }

    pub fn parse(s: &str) -> Option<Card> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(Card(1)),
            "J" => Some(Card(11)),
            "Q" => Some(Card(12)),
            "K" => Some(Card(13)),
            n => n
                .parse::<u8>()
                .ok()
                .filter(|v| (2..=10).contains(v))
                .map(Card),
        }
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            1 => f.write_str("A"),
            11 => f.write_str("J"),
            12 => f.write_str("Q"),
            13 => f.write_str("K"),
            r => write!(f, "{r}"),
        }
    }
}

/// Highest hand value not exceeding 21 when one exists, counting each ace
/// as 1 or 11; otherwise the all-ones total.
pub fn hand_value(cards: &[Card]) -> u32 {
    let base: u32 = cards.iter().map(|c| c.points()).sum();
    let aces = cards.iter().filter(|c| c.is_ace()).count() as u32;
    let mut value = base;
    for _ in 0..aces {
        if value + 10 <= 21 {
            value += 10;
        }
    }
    value
}

fn list(cards: &[Card]) -> String {
    cards
        .iter()
        .map(Card::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone)]
pub struct BlackjackEnv {
    player_start: [Card; 2],
    dealer: [Card; 2],
    deck: Vec<Card>,
    drawn: Vec<bool>,
    hand: Vec<Card>,
}

impl BlackjackEnv {
    pub fn generate(seed: u64, _params: &BlackjackParams, _horizon: usize) -> Result<Self, EnvError> {
        let mut rng = seeded_rng(seed, SALT);
        let mut cards: Vec<Card> = (1..=13u8)
            .flat_map(|r| std::iter::repeat_n(Card(r), 4))
            .collect();
        cards.shuffle(&mut rng);
        let player = [cards[0], cards[1]];
        let dealer = [cards[2], cards[3]];
        Ok(BlackjackEnv::with_deal(player, dealer, cards[4..].to_vec()))
    }

    pub fn with_deal(player: [Card; 2], dealer: [Card; 2], deck: Vec<Card>) -> Self {
        BlackjackEnv {
            player_start: player,
            dealer,
            drawn: vec![false; deck.len()],
            deck,
            hand: player.to_vec(),
        }
    }

    pub fn dealer_cards(&self) -> [Card; 2] {
        self.dealer
    }

    pub fn player_start(&self) -> [Card; 2] {
        self.player_start
    }

    pub fn deck(&self) -> &[Card] {
        &self.deck
    }

    pub fn hand(&self) -> &[Card] {
        &self.hand
    }

    /// Whether standing with `hand` beats the dealer.
    pub fn beats_dealer(&self, hand: &[Card]) -> bool {
        let v = hand_value(hand);
        v <= 21 && v > hand_value(&self.dealer)
    }

    pub fn render_table(&self) -> String {
        let deck: Vec<String> = self
            .drawn
            .iter()
            .enumerate()
            .filter(|(_, d)| !**d)
            .map(|(i, _)| format!("{i}: ?"))
            .collect();
        format!(
            "Dealer cards: [{}, ?]\nYour cards: [{}]\nDeck: [{}]",
            self.dealer[0],
            list(&self.hand),
            deck.join(", ")
        )
    }
}

impl Environment for BlackjackEnv {
    fn env_id(&self) -> EnvId {
        EnvId::Blackjack
    }

    fn reset(&mut self) -> String {
        self.hand = self.player_start.to_vec();
        self.drawn.fill(false);
        blackjack_prompt(&self.render_table())
    }

    fn step(&mut self, action: &str) -> StepOutcome {
        let hint = "Use 'hit <card_index>' with an index still in the deck, or 'stand'.";
        let Some(caps) = MOVE.captures(action.trim()) else {
            return StepOutcome::running(format!(
                "{}\n{}",
                invalid_message(action, hint),
                self.render_table()
            ));
        };
        if caps.get(2).is_some() {
            let mine = hand_value(&self.hand);
            let theirs = hand_value(&self.dealer);
            let text = format!(
                "You stand with {mine}. The dealer reveals [{}] for {theirs}.",
                list(&self.dealer)
            );
            return if self.beats_dealer(&self.hand) {
                StepOutcome::success(format!("{text} You win!"))
            } else {
                StepOutcome::failure(format!("{text} You lose."))
            };
        }
        let idx = caps[1].parse::<usize>().ok();
        let Some(idx) = idx.filter(|&i| i < self.deck.len() && !self.drawn[i]) else {
            return StepOutcome::running(format!(
                "{}\n{}",
                invalid_message(action, hint),
                self.render_table()
            ));
        };
        self.drawn[idx] = true;
        let card = self.deck[idx];
        self.hand.push(card);
        if hand_value(&self.hand) > 21 {
            return StepOutcome::failure(format!(
                "You drew {card} from position {idx}. Your cards: [{}] total {}. Bust! You lose.",
                list(&self.hand),
                hand_value(&self.hand)
            ));
        }
        StepOutcome::running(format!(
            "You drew {card} from position {idx}.\n{}",
            self.render_table()
        ))
    }

    fn reject(&mut self, reason: &str) -> StepOutcome {
        StepOutcome::running(format!("{reason}\n{}", self.render_table()))
    }

    fn state_key(&self) -> String {
        list(&self.hand)
    }

    fn normalize_action(&self, action: &str) -> Option<String> {
        let caps = MOVE.captures(action.trim())?;
        if caps.get(2).is_some() {
            Some("stand".into())
        } else {
            Some(format!("hit {}", caps[1].parse::<usize>().ok()?))
        }
    }
}
