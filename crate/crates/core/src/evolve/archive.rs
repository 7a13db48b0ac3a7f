//! Elite archives and the island ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strategy::Strategy;

pub const COMPLEXITY_BUCKETS: usize = 10;
pub const BEHAVIOR_BUCKETS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub id: u64,
    pub parents: Vec<u64>,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub strategy: Strategy,
    pub fitness: f64,
    /// `(complexity_bucket, behavior_bucket)`.
    pub features: (usize, usize),
    pub lineage: Lineage,
}

/// One accepted insertion, kept for auditing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub cell: (usize, usize),
    pub fitness: f64,
    pub genome_id: u64,
}

/// MAP-Elites grid: at most one genome per feature cell, replaced only by a
/// strictly fitter one.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    dims: (usize, usize),
    cells: Vec<Option<Genome>>,
    log: Vec<Insertion>,
}

impl Default for Archive {
    fn default() -> Self {
        Archive::new(COMPLEXITY_BUCKETS, BEHAVIOR_BUCKETS)
    }
}

impl Archive {
    pub fn new(complexity: usize, behavior: usize) -> Self {
        assert!(complexity > 0 && behavior > 0, "archive dimensions must be positive");
        Archive {
            dims: (complexity, behavior),
            cells: vec![None; complexity * behavior],
            log: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    fn slot(&self, cell: (usize, usize)) -> Option<usize> {
        (cell.0 < self.dims.0 && cell.1 < self.dims.1).then(|| cell.0 * self.dims.1 + cell.1)
    }

    pub fn get(&self, cell: (usize, usize)) -> Option<&Genome> {
        self.slot(cell).and_then(|s| self.cells[s].as_ref())
    }

    /// Inserts `genome` into its feature cell. Out-of-grid features and
    /// non-improving genomes are rejected.
    pub fn insert(&mut self, genome: Genome) -> bool {
        let Some(slot) = self.slot(genome.features) else {
            return false;
        };
        if let Some(incumbent) = &self.cells[slot] {
            if genome.fitness <= incumbent.fitness {
                return false;
            }
        }
        self.log.push(Insertion {
            cell: genome.features,
            fitness: genome.fitness,
            genome_id: genome.lineage.id,
        });
        self.cells[slot] = Some(genome);
        true
    }

    /// Elites in cell order.
    pub fn elites(&self) -> Vec<&Genome> {
        self.cells.iter().flatten().collect()
    }

    pub fn occupancy(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Fittest elite; ties go to the lowest genome id.
    pub fn best(&self) -> Option<&Genome> {
        self.cells.iter().flatten().fold(None, |best: Option<&Genome>, g| match best {
            Some(b) if b.fitness > g.fitness || (b.fitness == g.fitness && b.lineage.id <= g.lineage.id) => Some(b),
            _ => Some(g),
        })
    }

    pub fn insertions(&self) -> &[Insertion] {
        &self.log
    }

    /// Checks that every elite sits in its own cell with a fitness in [0, 1]
    /// and that each cell's fitness only ever rose.
    pub fn audit(&self) -> Result<()> {
        for (slot, g) in self.cells.iter().enumerate() {
            let Some(g) = g else { continue };
            let cell = (slot / self.dims.1, slot % self.dims.1);
            if g.features != cell {
                return Err(Error::Malformed(format!(
                    "genome {} with features {:?} stored in cell {cell:?}",
                    g.lineage.id, g.features
                )));
            }
            if !(0.0..=1.0).contains(&g.fitness) {
                return Err(Error::Malformed(format!("genome {} has fitness {}", g.lineage.id, g.fitness)));
            }
        }
        let mut last = vec![f64::NEG_INFINITY; self.cells.len()];
        for ins in &self.log {
            let slot = self.slot(ins.cell).expect("logged cell in grid");
            if ins.fitness <= last[slot] {
                return Err(Error::Malformed(format!("cell {:?} fitness dropped to {}", ins.cell, ins.fitness)));
            }
            last[slot] = ins.fitness;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Migration {
    pub attempts: usize,
    pub accepted: usize,
}

/// Archives arranged in a ring; island `i` sends migrants to `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IslandSet {
    pub islands: Vec<Archive>,
    pub migration_interval: usize,
}

impl IslandSet {
    pub fn new(count: usize, migration_interval: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Config("at least one island is required".into()));
        }
        if migration_interval == 0 {
            return Err(Error::Config("migration interval must be at least 1".into()));
        }
        Ok(IslandSet {
            islands: vec![Archive::default(); count],
            migration_interval,
        })
    }

    /// On generations divisible by the interval, offers each island's best
    /// elite to the next island. Migrants are chosen before any insertion.
    pub fn migrate(&mut self, generation: usize) -> Migration {
        if generation == 0 || !generation.is_multiple_of(self.migration_interval) {
            return Migration { attempts: 0, accepted: 0 };
        }
        let migrants: Vec<Option<Genome>> = self.islands.iter().map(|a| a.best().cloned()).collect();
        let count = self.islands.len();
        let mut report = Migration { attempts: 0, accepted: 0 };
        for (i, migrant) in migrants.into_iter().enumerate() {
            let Some(g) = migrant else { continue };
            report.attempts += 1;
            if self.islands[(i + 1) % count].insert(g) {
                report.accepted += 1;
            }
        }
        report
    }

    pub fn best(&self) -> Option<&Genome> {
        self.islands.iter().filter_map(Archive::best).fold(None, |best: Option<&Genome>, g| match best {
            Some(b) if b.fitness > g.fitness || (b.fitness == g.fitness && b.lineage.id <= g.lineage.id) => Some(b),
            _ => Some(g),
        })
    }

    pub fn occupancy(&self) -> usize {
        self.islands.iter().map(Archive::occupancy).sum()
    }

    pub fn mean_elite_fitness(&self) -> f64 {
        let fits: Vec<f64> = self.islands.iter().flat_map(|a| a.elites()).map(|g| g.fitness).collect();
        if fits.is_empty() {
            0.0
        } else {
            fits.iter().sum::<f64>() / fits.len() as f64
        }
    }

    pub fn audit(&self) -> Result<()> {
        self.islands.iter().try_for_each(Archive::audit)
    }
}
