use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{fmt_real, game_seeds, play_episode, report_from_games, Agent, IllegalPolicy};
use crate::engine::GameConfig;
use crate::rng::SplitMix64;
use crate::{Error, Result};

/// Mean score of one (row agent, column agent) pairing at one player count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossplayCell {
    pub row: String,
    pub col: String,
    pub num_players: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl CrossplayCell {
    pub const CSV_HEADER: &'static str = "row,col,num_players,mean,stderr,n";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{},{}", self.row, self.col, self.num_players, fmt_real(self.mean), fmt_real(self.stderr), self.n)
    }
}

/// Every ordered pair of `agents` at every table in `tables`. In game `g` seat `s`
/// goes to the row agent when `s + g` is even and to the column agent otherwise,
/// so seats alternate round-robin; the diagonal is self-play on the same seeds as
/// [`crate::agent::eval_gameplay`].
pub fn crossplay(
    agents: &[&dyn Agent],
    tables: &[GameConfig],
    n_games: usize,
    seed: u64,
    policy: IllegalPolicy,
) -> Result<Vec<CrossplayCell>> {
    if agents.is_empty() || tables.is_empty() {
        return Err(Error::Config("cross-play needs at least one agent and one player count".into()));
    }
    for table in tables {
        for a in agents {
            a.check_compatible(table)?;
        }
    }
    let mut cells = Vec::with_capacity(agents.len() * agents.len() * tables.len());
    for table in tables {
        for row in agents {
            for col in agents {
                let games = (0..n_games as u64)
                    .into_par_iter()
                    .map(|g| {
                        let (deck, agent_seed) = game_seeds(seed, g);
                        let seats: Vec<&dyn Agent> = (0..table.num_players)
                            .map(|s| if (s as u64 + g) % 2 == 0 { *row } else { *col })
                            .collect();
                        play_episode(&seats, &table.with_seed(deck), g, policy, &mut SplitMix64::new(agent_seed))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let r = report_from_games(&games);
                cells.push(CrossplayCell {
                    row: row.name(),
                    col: col.name(),
                    num_players: table.num_players,
                    mean: r.mean_score,
                    stderr: r.stderr,
                    n: r.n_games,
                });
            }
        }
    }
    Ok(cells)
}
