//! Exact rational tools for lattice Voronoi cells: lattice construction and
//! reduction, closest-vector enumeration, facet (relevant) vectors, polytope
//! conversion and slack matrices, extended formulations of Voronoi cells with
//! exact verification, and equal-norm lattice gadgets for 0/1 point sets.

pub mod enumeration;
pub mod exact;
pub mod gadgets;
pub mod lattice;
pub mod lifts;
pub mod polytope;
pub mod suite;
pub mod voronoi;
