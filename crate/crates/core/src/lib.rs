//! Symbolic toolkit for omega-scattered compacta: tree encodings, rank
//! computations, derivatives, normalization, presentations with their
//! compactifications, and metric embeddings.

pub mod cardinal;
pub mod compactify;
pub mod derive;
pub mod embed;
pub mod gen;
pub mod hedgehog;
pub mod normalize;
pub mod oracle;
pub mod ordinal;
pub mod present;
pub mod rank;
pub mod tree;

pub use cardinal::{parse_mult_name, Card, Multiplicity};
pub use compactify::{
    case_of, check_bound, check_dense, compactify, BoundReport, Case, DensityIssue,
    DensityWitness, PresPath, PresStep, SchemaPath, SchemaStep, Tag,
};
pub use derive::{derived_forest, derived_forest_steps};
pub use embed::{
    enumerate_nodes, hilbert_embed, node_at, sigma_embed, EmbedError, FsVec, NodeAddr, NodeStep,
};
pub use gen::{
    enumerate_small_trees, random_forest, random_ordinal, random_presentation, random_term,
    random_tree, GenConfig,
};
pub use hedgehog::{
    cantor_member, cantor_phi, classify_weak_limit, closure_check_hedgehog, coord_dist_sq,
    coord_norm_sq, hedgehog_coords, hedgehog_embed, weak_limit, ClosureReport, CoeffSeq,
    HedgehogError, LimitClass, SymbolicSequence, WeakLimitError,
};
pub use normalize::normalize;
pub use oracle::{
    check_stage_counts, counts_agree, literal_stage_sizes, materialize_count, oracle_family_sup,
    oracle_van, OracleError,
};
pub use ordinal::Ordinal;
pub use present::{
    pres_level, pres_point_count, pres_sch, pres_van, PresContext, PresError, PresFamily,
    PresFrame, Presentation,
};
pub use rank::{
    homeo_countable, level_size, level_size_forest, level_size_term, ms_invariant, point_count,
    point_count_term, rep_complexity, rep_complexity_forest, rep_complexity_term, sch_height,
    sch_height_forest, sch_height_term, van_rank, van_rank_forest, van_rank_term, RankError,
};
pub use tree::{
    aleksandrov, canonical_tree, ordinal_tree, ChildSpec, CompactForest, CtxFrame, FamilySpec,
    Term, TreeCompactum, TreeContext, TreeError,
};
