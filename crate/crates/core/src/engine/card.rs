use serde::{Deserialize, Serialize};

use super::config::COLOR_NAMES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Card {
    pub color: u8,
    /// 1-based.
    pub rank: u8,
}

impl Card {
    pub fn new(color: u8, rank: u8) -> Self {
        Card { color, rank }
    }

    /// `red3`, `blue1`, ...
    pub fn label(&self) -> String {
        format!("{}{}", COLOR_NAMES[self.color as usize], self.rank)
    }
}

/// Bit set over small indices (colors, or ranks stored 1-based at bit `rank`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BitSet16(pub u16);

impl BitSet16 {
    pub fn full(range: std::ops::RangeInclusive<u8>) -> Self {
        let mut s = BitSet16(0);
        for i in range {
            s.insert(i);
        }
        s
    }

    pub fn single(i: u8) -> Self {
        BitSet16(1 << i)
    }

    #[inline]
    pub fn contains(self, i: u8) -> bool {
        self.0 & (1 << i) != 0
    }

    #[inline]
    pub fn insert(&mut self, i: u8) {
        self.0 |= 1 << i;
    }

    #[inline]
    pub fn remove(&mut self, i: u8) {
        self.0 &= !(1 << i);
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..16u8).filter(move |&i| self.contains(i))
    }
}

/// What the holder can infer about one of their cards from hints received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CardKnowledge {
    pub possible_colors: BitSet16,
    /// Bit `r` set means rank `r` (1-based) is possible.
    pub possible_ranks: BitSet16,
    pub hinted_color: Option<u8>,
    pub hinted_rank: Option<u8>,
}

impl CardKnowledge {
    pub fn unknown(colors: usize, ranks: usize) -> Self {
        CardKnowledge {
            possible_colors: BitSet16::full(0..=(colors as u8 - 1)),
            possible_ranks: BitSet16::full(1..=ranks as u8),
            hinted_color: None,
            hinted_rank: None,
        }
    }

    pub fn num_possibilities(&self) -> usize {
        self.possible_colors.len() * self.possible_ranks.len()
    }

    pub fn admits(&self, card: Card) -> bool {
        self.possible_colors.contains(card.color) && self.possible_ranks.contains(card.rank)
    }

    pub fn is_identified(&self) -> bool {
        self.num_possibilities() == 1
    }

    /// Every (color, rank) pair consistent with this knowledge.
    pub fn candidates(&self) -> impl Iterator<Item = Card> + '_ {
        self.possible_colors
            .iter()
            .flat_map(move |c| self.possible_ranks.iter().map(move |r| Card::new(c, r)))
    }

    pub fn apply_color_hint(&mut self, color: u8, touched: bool) {
        if touched {
            self.possible_colors = BitSet16::single(color);
            self.hinted_color = Some(color);
        } else {
            self.possible_colors.remove(color);
        }
    }

    pub fn apply_rank_hint(&mut self, rank: u8, touched: bool) {
        if touched {
            self.possible_ranks = BitSet16::single(rank);
            self.hinted_rank = Some(rank);
        } else {
            self.possible_ranks.remove(rank);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandCard {
    pub card: Card,
    pub knowledge: CardKnowledge,
}
