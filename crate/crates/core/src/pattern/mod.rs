//! Substring-pattern statistics: sliding-window frequency tables, exact
//! occurrence counting, and recurrence measures.

pub mod export;
pub mod recurrence;
pub mod search;
pub mod table;

pub use recurrence::{recurrence_stats, RecurrenceStats, DEFAULT_BUCKETS};
pub use search::{count_occurrences_bm, count_occurrences_kmp, count_occurrences_naive, SearchAlgorithm};
pub use table::{extract_aggregate, extract_frequencies, extract_per_sequence, merge_tables, FrequencyTable};
