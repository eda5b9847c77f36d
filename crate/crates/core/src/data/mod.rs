//! Event ingestion, attribute matrices, labelsets and time partitions.

mod events;
mod explicit;
mod labels;
mod matrix;
mod partition;
mod synth;

pub use events::{ingest_events, write_events, Event, EventLog, IdMap, IngestOptions, IngestReport, TableFormat};
pub use explicit::{load_explicit_edges, ExplicitLoad};
pub use labels::{derive_labels, load_label_rules, rules_to_toml, LabelRule, LabelRuleKind, LabelSet, LabelSetCollection};
pub use matrix::{Aggregation, AttributeMatrix};
pub use partition::{partition_by_time, Partition, PartitionMode, PartitionOptions, PartitionedDataset, Role};
pub use synth::{synth_generate, SynthData, SynthSpec};
