//! Portfolio proximity, revealed comparative advantage, sectoral
//! concentration and citation matrices.

mod citations;
mod concentration;
mod portfolio;
mod rca;

pub use citations::{citation_matrix, foreign_citation_share, CitationMatrix};
pub use concentration::{concentration_ratio, concentration_table, SectorConcentration};
pub use portfolio::{
    min_complement_proximity, portfolio_vector, portfolio_vector_through, proximity_matrix, Holder, PortfolioVector,
};
pub use rca::{
    collapse_rest_of_world, rca, rca_table, read_totals, CountryPatentCounts, RcaRow, REST_OF_WORLD, WORLD,
};

/// Class prefix length used for portfolio vectors unless overridden.
pub const DEFAULT_CLASS_LEVEL: usize = 4;
/// Number of leading firms in the default concentration ratio.
pub const DEFAULT_Q: usize = 5;
