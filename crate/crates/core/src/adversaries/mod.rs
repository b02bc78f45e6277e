//! Adaptive lower-bound constructions.

mod clique;
mod clique_game;
mod encode;
mod graph;
mod pairing;

pub use clique::{max_mono_clique, max_mono_clique_witness, DEFAULT_VERTEX_CAP};
pub use clique_game::{
    certify_strings, clique_game_play, exact_sqrt, p_count, sample_good_sequence, sample_strings,
    str_clique_shape_holds, BinGreedy, CliqueGame, ColoringStrategy, FixedBin,
    GoodSequenceCertificate, Placement, RandomBins, RoundRobin, StrategyKind, StringSource,
    Transcript, GOOD_CLIQUE_BOUND, SPOT_CHECK_SET,
};
pub use encode::{
    binomial, colex_rank, colex_subsets, encode_vsmax_adaptive, encoding_dims, lr_ratio_report,
    recompute_loads, EncodedRun, RatioRow, DEFAULT_DIMS_CAP,
};
pub use graph::Graph;
pub use pairing::{vsany_u_pairing_adversary, PairingRun};
