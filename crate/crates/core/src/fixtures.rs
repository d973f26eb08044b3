//! Fixture graph files, embedded at compile time.

pub const FIG1A: &str = include_str!("../fixtures/fig1a.mcg");
pub const FIG1B: &str = include_str!("../fixtures/fig1b.mcg");
pub const FIG1C: &str = include_str!("../fixtures/fig1c.mcg");
pub const FIG2A: &str = include_str!("../fixtures/fig2a.mcg");
pub const FIG2B: &str = include_str!("../fixtures/fig2b.mcg");
pub const FIG3: &str = include_str!("../fixtures/fig3.mcg");
pub const SURVEY: &str = include_str!("../fixtures/survey.mcg");

/// Clustering of fig1a onto the clusters of fig1c.
pub const FIG1_CLUSTERS: &str = include_str!("../fixtures/fig1.clusters");

/// `(name, source)` for every fixture.
pub const ALL: [(&str, &str); 7] = [
    ("fig1a", FIG1A),
    ("fig1b", FIG1B),
    ("fig1c", FIG1C),
    ("fig2a", FIG2A),
    ("fig2b", FIG2B),
    ("fig3", FIG3),
    ("survey", SURVEY),
];
