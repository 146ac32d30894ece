//! Expansion of piecewise-linear plane-curve germs into arboreal graphs.

pub mod constants;
pub mod corpus;
pub mod expansion;
pub mod geometry;
pub mod germ;
pub mod graph;
pub mod svg;

pub use constants::{check_ordering, draw_constants, ConstantsRanges, ConstantsReport, ExpansionConstants, StratumConstants, Violation};
pub use expansion::{
    check_constants, draw_valid_constants, expanded_arc, expanded_coray, total_expansion, truncated_cylinder, CylinderPiece,
    ExpandedPiece, GeometryTolerances, KeptArc, Mode,
};
pub use germ::{Branch, CurveGerm2D, OriginCoray, Side, Stratification};
pub use graph::{tangency_fixture, ArborealGraph, Census, ClassifyTolerances, Edge, EdgeEnd, EdgeSource, Node, NodeKind, Role};
