//! Shared domain types: schemas, values, transition datasets and seeding.

pub mod dataset;
pub mod schema;
pub mod seed;
pub mod value;

pub use dataset::{split_dataset, Dataset, DatasetError, TransitionRecord};
pub use schema::{DomainSchema, EnumDef, FieldDef, FieldType, RecordDef, RecordKind, SchemaError, SchemaType};
pub use value::{Grid, Value};
