//! Least-privilege rule mining: Apriori over header-value tables, flow-rule
//! generation per edge and rule-association mining over time windows.

mod apriori;
mod association;
mod generator;
mod rules;

pub use apriori::{apriori, association_rules, AssociationRule, BinaryTable, Itemset};
pub use association::{mine_rule_associations, time_windows, RuleAssociation};
pub use generator::{
    edge_rule_matches, generate_rules, header_table, ApplicationRules, EdgeRules, MiningConfig, RuleBook, RuleIds,
};
pub use rules::{match_rule, Action, FlowRule, MatchField, RULE_PRIORITY};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("empty table")]
    EmptyTable,
    #[error("threshold {0} out of range")]
    Threshold(f64),
    #[error("duplicate column label")]
    DuplicateColumn,
    #[error("row width differs from column count")]
    RaggedRow,
    #[error("no rules to associate")]
    NoRules,
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("rule document: {0}")]
    Document(String),
}
