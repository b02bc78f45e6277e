//! The bins-and-slots monochromatic clique game.
//!
//! There are `t` colours (bins), each split into `s = sqrt(t)` slots, and slot
//! `l` owns the adversary colour set `{l*s, ..., l*s + s - 1}`. Each new vertex
//! comes with a string over `[s]` of length `t`; it is joined to every vertex in
//! slot `string[k]` of bin `k`, for all `k`. Once the algorithm picks a bin `b`
//! the vertex lands in slot `string[b]` of that bin and receives the lowest
//! unused colour of the slot's set. The game stops as soon as a slot holds `s`
//! vertices.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use super::clique::{max_mono_clique_witness, DEFAULT_VERTEX_CAP};
use super::graph::Graph;
use crate::error::{Error, Result};

/// `sqrt(t)` when `t` is a perfect square of at least 4.
pub fn exact_sqrt(t: usize) -> Result<usize> {
    let s = (t as f64).sqrt().round() as usize;
    if t < 4 || s * s != t {
        return Err(Error::BadParams(format!(
            "{t} is not a perfect square >= 4"
        )));
    }
    Ok(s)
}

/// Where a placed vertex ended up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub vertex: usize,
    pub bin: usize,
    pub slot: usize,
    pub color: usize,
}

#[derive(Clone, Debug)]
pub struct CliqueGame {
    t: usize,
    s: usize,
    /// `occupants[bin][slot]`, in arrival order.
    occupants: Vec<Vec<Vec<usize>>>,
    graph: Graph,
    strings: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    placements: Vec<Placement>,
    full_slot: Option<(usize, usize)>,
}

impl CliqueGame {
    pub fn new(t: usize) -> Result<Self> {
        let s = exact_sqrt(t)?;
        Ok(CliqueGame {
            t,
            s,
            occupants: vec![vec![Vec::new(); s]; t],
            graph: Graph::new(0),
            strings: Vec::new(),
            adjacency: Vec::new(),
            placements: Vec::new(),
            full_slot: None,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.strings.len()
    }

    pub fn halted(&self) -> bool {
        self.full_slot.is_some() || self.vertex_count() >= self.t * self.t
    }

    /// `(bin, slot)` that filled up, once the game has stopped that way.
    pub fn full_slot(&self) -> Option<(usize, usize)> {
        self.full_slot
    }

    pub fn occupants(&self, bin: usize, slot: usize) -> &[usize] {
        &self.occupants[bin][slot]
    }

    pub fn strings(&self) -> &[Vec<usize>] {
        &self.strings
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    /// Vertex issued but not yet placed.
    pub fn pending(&self) -> Option<usize> {
        (self.strings.len() > self.placements.len()).then(|| self.strings.len() - 1)
    }

    /// Earlier vertices `v` was joined to when it was issued.
    pub fn adjacency(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// The algorithm's colouring: vertex to bin.
    pub fn bin_coloring(&self) -> Vec<usize> {
        self.placements.iter().map(|p| p.bin).collect()
    }

    /// The adversary's colouring: vertex to colour in `0..t`.
    pub fn adversary_coloring(&self) -> Vec<usize> {
        self.placements.iter().map(|p| p.color).collect()
    }

    /// Issues a vertex with adjacency string `string`.
    pub fn issue(&mut self, string: Vec<usize>) -> Result<usize> {
        if self.halted() {
            return Err(Error::BadParams("game has already stopped".into()));
        }
        if self.pending().is_some() {
            return Err(Error::BadParams("previous vertex not placed".into()));
        }
        if string.len() != self.t || string.iter().any(|&c| c >= self.s) {
            return Err(Error::BadParams(format!(
                "string must have length {} over 0..{}",
                self.t, self.s
            )));
        }
        let v = self.graph.add_vertex();
        let mut adj: Vec<usize> = (0..self.t)
            .flat_map(|k| self.occupants[k][string[k]].iter().copied())
            .collect();
        adj.sort_unstable();
        for &u in &adj {
            self.graph.add_edge(u, v);
        }
        self.strings.push(string);
        self.adjacency.push(adj);
        Ok(v)
    }

    /// Puts the pending vertex into `bin`.
    pub fn place(&mut self, bin: usize) -> Result<Placement> {
        let vertex = self
            .pending()
            .ok_or_else(|| Error::BadParams("no vertex pending".into()))?;
        if bin >= self.t {
            return Err(Error::MachineOutOfRange {
                machine: bin,
                machines: self.t,
            });
        }
        let slot = self.strings[vertex][bin];
        let members = &mut self.occupants[bin][slot];
        // Occupants carry colours slot*s + 0, 1, ... in order, so the count is the lowest unused.
        assert!(members.len() < self.s, "slot ({bin}, {slot}) already full");
        let color = slot * self.s + members.len();
        members.push(vertex);
        if members.len() == self.s {
            self.full_slot = Some((bin, slot));
        }
        let p = Placement {
            vertex,
            bin,
            slot,
            color,
        };
        self.placements.push(p);
        Ok(p)
    }

    pub fn transcript(&self, strategy: &str) -> Transcript {
        Transcript {
            t: self.t,
            strategy: strategy.to_string(),
            strings: self.strings.clone(),
            adjacency: self.adjacency.clone(),
            placements: self.placements.clone(),
            full_slot: self.full_slot,
        }
    }
}

/// Everything needed to replay or audit one game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub t: usize,
    pub strategy: String,
    pub strings: Vec<Vec<usize>>,
    pub adjacency: Vec<Vec<usize>>,
    pub placements: Vec<Placement>,
    pub full_slot: Option<(usize, usize)>,
}

impl Transcript {
    pub fn graph(&self) -> Graph {
        let mut g = Graph::new(self.adjacency.len());
        for (v, adj) in self.adjacency.iter().enumerate() {
            for &u in adj {
                g.add_edge(u, v);
            }
        }
        g
    }
}

/// Supplies adjacency strings.
pub enum StringSource {
    Random {
        rng: Xoshiro256StarStar,
    },
    Replay {
        strings: Vec<Vec<usize>>,
        pos: usize,
    },
}

impl StringSource {
    pub fn random(seed: u64) -> Self {
        StringSource::Random {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn replay(strings: Vec<Vec<usize>>) -> Self {
        StringSource::Replay { strings, pos: 0 }
    }

    /// Next string of length `t` over `[s]`, or `None` when a replay runs out.
    pub fn next_string(&mut self, t: usize, s: usize) -> Option<Vec<usize>> {
        match self {
            StringSource::Random { rng } => Some((0..t).map(|_| rng.gen_range(0..s)).collect()),
            StringSource::Replay { strings, pos } => {
                let out = strings.get(*pos).cloned();
                *pos += 1;
                out
            }
        }
    }
}

/// `t^2` uniform strings.
pub fn sample_strings(t: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let s = exact_sqrt(t)?;
    let mut src = StringSource::random(seed);
    Ok((0..t * t)
        .map(|_| src.next_string(t, s).expect("random source is endless"))
        .collect())
}

/// The algorithm side of the game: picks a bin for the pending vertex.
pub trait ColoringStrategy {
    fn name(&self) -> &'static str;
    fn choose(&mut self, game: &CliqueGame, vertex: usize) -> usize;
}

/// Bin whose target slot currently holds the fewest vertices (lowest bin on ties).
pub struct BinGreedy;

impl ColoringStrategy for BinGreedy {
    fn name(&self) -> &'static str {
        "bin-greedy"
    }

    fn choose(&mut self, game: &CliqueGame, vertex: usize) -> usize {
        let string = &game.strings()[vertex];
        (0..game.t())
            .min_by_key(|&k| (game.occupants(k, string[k]).len(), k))
            .expect("t >= 4")
    }
}

pub struct RandomBins {
    rng: Xoshiro256StarStar,
}

impl RandomBins {
    pub fn new(seed: u64) -> Self {
        RandomBins {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }
}

impl ColoringStrategy for RandomBins {
    fn name(&self) -> &'static str {
        "random"
    }

    fn choose(&mut self, game: &CliqueGame, _vertex: usize) -> usize {
        self.rng.gen_range(0..game.t())
    }
}

pub struct RoundRobin;

impl ColoringStrategy for RoundRobin {
    fn name(&self) -> &'static str {
        "round-robin"
    }

    fn choose(&mut self, game: &CliqueGame, vertex: usize) -> usize {
        vertex % game.t()
    }
}

pub struct FixedBin(pub usize);

impl ColoringStrategy for FixedBin {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn choose(&mut self, _game: &CliqueGame, _vertex: usize) -> usize {
        self.0
    }
}

/// The built-in strategies used for good-sequence verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyKind {
    BinGreedy,
    Random,
    RoundRobin,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::BinGreedy,
        StrategyKind::Random,
        StrategyKind::RoundRobin,
    ];

    pub fn build(self, seed: u64) -> Box<dyn ColoringStrategy> {
        match self {
            StrategyKind::BinGreedy => Box::new(BinGreedy),
            StrategyKind::Random => Box::new(RandomBins::new(seed)),
            StrategyKind::RoundRobin => Box::new(RoundRobin),
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bin-greedy" | "greedy" => Ok(StrategyKind::BinGreedy),
            "random" => Ok(StrategyKind::Random),
            "round-robin" => Ok(StrategyKind::RoundRobin),
            other => Err(Error::BadParams(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Plays until a slot fills or `t^2` vertices have been issued.
pub fn clique_game_play(
    t: usize,
    strategy: &mut dyn ColoringStrategy,
    source: &mut StringSource,
) -> Result<CliqueGame> {
    let mut game = CliqueGame::new(t)?;
    while !game.halted() {
        let string = source.next_string(t, game.s()).ok_or_else(|| {
            Error::BadParams(format!(
                "string source ran out after {} vertices",
                game.vertex_count()
            ))
        })?;
        let v = game.issue(string)?;
        let bin = strategy.choose(&game, v);
        game.place(bin)?;
    }
    Ok(game)
}

/// A monochromatic clique of colour `c` in slot `l` must satisfy
/// `string[later][bin[earlier]] == l` for every ordered pair of its members.
pub fn str_clique_shape_holds(game: &CliqueGame, clique: &[usize]) -> bool {
    let mut members = clique.to_vec();
    members.sort_unstable();
    let Some(&first) = members.first() else {
        return true;
    };
    let p = game.placements();
    let color = p[first].color;
    let slot = color / game.s();
    members.iter().all(|&v| p[v].color == color)
        && members.iter().enumerate().all(|(j, &vj)| {
            members[..j]
                .iter()
                .all(|&vi| game.strings()[vj][p[vi].bin] == slot)
        })
}

/// Number of strings `x` with `x[i] == q` for every `i` in `set`.
pub fn p_count(strings: &[Vec<usize>], set: &[usize], q: usize) -> usize {
    strings
        .iter()
        .filter(|x| set.iter().all(|&i| x[i] == q))
        .count()
}

/// `P(S, q)` via per-(symbol, position) bitsets over the strings.
struct PCounter {
    words: usize,
    t: usize,
    masks: Vec<u64>,
}

impl PCounter {
    fn new(strings: &[Vec<usize>], t: usize, s: usize) -> Self {
        let words = strings.len().div_ceil(64);
        let mut masks = vec![0u64; s * t * words];
        for (j, x) in strings.iter().enumerate() {
            for (i, &q) in x.iter().enumerate() {
                masks[(q * t + i) * words + j / 64] |= 1 << (j % 64);
            }
        }
        PCounter { words, t, masks }
    }

    fn count(&self, set: &[usize], q: usize) -> usize {
        (0..self.words)
            .map(|w| {
                set.iter()
                    .fold(u64::MAX, |acc, &i| {
                        acc & self.masks[(q * self.t + i) * self.words + w]
                    })
                    .count_ones() as usize
            })
            .sum()
    }
}

/// Size of the bin subsets used by the `P(S, q)` spot-check.
pub const SPOT_CHECK_SET: usize = 10;
/// Largest adversary clique a good sequence may produce.
pub const GOOD_CLIQUE_BOUND: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodSequenceCertificate {
    pub t: usize,
    pub retries: usize,
    /// Adversary clique size reached against each built-in strategy.
    pub adversary_cliques: Vec<(StrategyKind, usize)>,
    /// Algorithm clique size reached by each built-in strategy.
    pub algorithm_cliques: Vec<(StrategyKind, usize)>,
    pub max_adversary_clique: usize,
    /// Every adversary clique of size at least 3 found had the forced string shape.
    pub shape_checks_passed: bool,
    /// Number of random `(S, q)` pairs counted (zero when `t < 10`).
    pub pq_samples: usize,
    pub pq_max: Option<usize>,
    pub passed: bool,
}

/// One verification pass of `strings` against every built-in strategy.
pub fn certify_strings(
    t: usize,
    strings: &[Vec<usize>],
    seed: u64,
    pq_samples: usize,
) -> Result<GoodSequenceCertificate> {
    let s = exact_sqrt(t)?;
    let mut adversary_cliques = Vec::new();
    let mut algorithm_cliques = Vec::new();
    let mut shape = true;
    for kind in StrategyKind::ALL {
        let mut strategy = kind.build(seed);
        let game = clique_game_play(
            t,
            strategy.as_mut(),
            &mut StringSource::replay(strings.to_vec()),
        )?;
        let adv =
            max_mono_clique_witness(game.graph(), &game.adversary_coloring(), DEFAULT_VERTEX_CAP)?;
        if adv.len() >= 3 {
            shape &= str_clique_shape_holds(&game, &adv);
        }
        let alg = max_mono_clique_witness(game.graph(), &game.bin_coloring(), DEFAULT_VERTEX_CAP)?;
        adversary_cliques.push((kind, adv.len()));
        algorithm_cliques.push((kind, alg.len()));
    }
    let (pq_samples, pq_max) = if t >= SPOT_CHECK_SET && pq_samples > 0 {
        let mut rng = Xoshiro256StarStar::seed_from_u64(seed ^ 0x5157_4c45_4e43_4845);
        let counter = PCounter::new(strings, t, s);
        let max = (0..pq_samples)
            .map(|_| {
                let set = sample(&mut rng, t, SPOT_CHECK_SET).into_vec();
                let q = rng.gen_range(0..s);
                counter.count(&set, q)
            })
            .max();
        (pq_samples, max)
    } else {
        (0, None)
    };
    let max_adversary_clique = adversary_cliques.iter().map(|c| c.1).max().unwrap_or(0);
    Ok(GoodSequenceCertificate {
        t,
        retries: 0,
        adversary_cliques,
        algorithm_cliques,
        max_adversary_clique,
        shape_checks_passed: shape,
        pq_samples,
        pq_max,
        passed: max_adversary_clique <= GOOD_CLIQUE_BOUND,
    })
}

/// Samples `t^2` uniform strings and certifies them, resampling up to
/// `max_retries` times.
pub fn sample_good_sequence(
    t: usize,
    seed: u64,
    max_retries: usize,
) -> Result<(Vec<Vec<usize>>, GoodSequenceCertificate)> {
    exact_sqrt(t)?;
    for attempt in 0..=max_retries {
        let sub = seed.wrapping_add((attempt as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let strings = sample_strings(t, sub)?;
        let mut cert = certify_strings(t, &strings, sub, 10_000)?;
        if cert.passed {
            cert.retries = attempt;
            return Ok((strings, cert));
        }
    }
    Err(Error::RetriesExhausted(max_retries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::max_mono_clique;

    #[test]
    fn rejects_non_squares() {
        assert!(CliqueGame::new(8).is_err());
        assert!(CliqueGame::new(1).is_err());
        assert!(CliqueGame::new(9).is_ok());
    }

    #[test]
    fn always_bin_zero_fills_a_slot_of_bin_zero() {
        let game = clique_game_play(4, &mut FixedBin(0), &mut StringSource::random(1)).unwrap();
        let (bin, slot) = game.full_slot().unwrap();
        assert_eq!(bin, 0);
        assert_eq!(game.occupants(0, slot).len(), 2);
        assert!(game.vertex_count() <= 3);
        assert_eq!(
            max_mono_clique(game.graph(), &game.bin_coloring()).unwrap(),
            2
        );
    }

    #[test]
    fn halts_by_t_squared() {
        for seed in 0..50 {
            for kind in StrategyKind::ALL {
                let game = clique_game_play(
                    4,
                    kind.build(seed).as_mut(),
                    &mut StringSource::random(seed),
                )
                .unwrap();
                assert!(game.full_slot().is_some());
                assert!(game.vertex_count() <= 16);
            }
        }
    }

    #[test]
    fn slot_members_form_properly_colored_cliques() {
        let game = clique_game_play(9, &mut BinGreedy, &mut StringSource::random(7)).unwrap();
        for bin in 0..9 {
            for slot in 0..3 {
                let members = game.occupants(bin, slot);
                assert!(game.graph().is_clique(members));
                for (i, &v) in members.iter().enumerate() {
                    assert_eq!(game.placements()[v].color, slot * 3 + i);
                }
            }
        }
    }

    #[test]
    fn replay_is_identical() {
        let strings = sample_strings(9, 3).unwrap();
        let a = clique_game_play(
            9,
            &mut RandomBins::new(4),
            &mut StringSource::replay(strings.clone()),
        )
        .unwrap();
        let b = clique_game_play(
            9,
            &mut RandomBins::new(4),
            &mut StringSource::replay(strings),
        )
        .unwrap();
        let (ta, tb) = (a.transcript("random"), b.transcript("random"));
        assert_eq!(ta, tb);
        assert_eq!(ta.graph(), *a.graph());
    }

    #[test]
    fn replay_exhaustion_is_an_error() {
        let r = clique_game_play(
            4,
            &mut RoundRobin,
            &mut StringSource::replay(vec![vec![0, 1, 0, 1]]),
        );
        assert!(matches!(r, Err(Error::BadParams(_))));
    }

    #[test]
    fn good_sequence_small() {
        let (strings, cert) = sample_good_sequence(4, 11, 0).unwrap();
        assert_eq!(strings.len(), 16);
        assert!(cert.passed && cert.shape_checks_passed);
        assert_eq!(cert.retries, 0);
        assert_eq!(cert.pq_max, None);
        assert_eq!(sample_good_sequence(4, 11, 0).unwrap().1, cert);
    }

    #[test]
    fn p_count_counts_matching_strings() {
        let strings = vec![vec![1, 1, 0], vec![1, 1, 1], vec![0, 1, 1]];
        assert_eq!(p_count(&strings, &[0, 1], 1), 2);
        assert_eq!(p_count(&strings, &[2], 0), 1);
    }

    #[test]
    fn bitset_counter_matches_direct_count() {
        let strings = sample_strings(16, 5).unwrap();
        let counter = PCounter::new(&strings, 16, 4);
        for (set, q) in [
            (vec![0, 1], 2),
            (vec![3], 0),
            (vec![1, 5, 9, 15], 3),
            ((0..10).collect(), 1),
        ] {
            assert_eq!(counter.count(&set, q), p_count(&strings, &set, q));
        }
    }
}
