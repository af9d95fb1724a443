//! Label inventories of the commodity news event dataset.

/// The 18 event types.
pub const EVENT_TYPES: [&str; 18] = [
    "cause-movement-down-loss",
    "cause-movement-up-gain",
    "civil-unrest",
    "crisis",
    "embargo",
    "geopolitical-tension",
    "grow-strong",
    "movement-down-loss",
    "movement-flat",
    "movement-up-gain",
    "negative-sentiment",
    "oversupply",
    "position-high",
    "position-low",
    "prohibiting",
    "shortage",
    "slow-weak",
    "trade-tensions",
];

/// The 19 argument roles (NONE excluded).
pub const ARGUMENT_ROLES: [&str; 19] = [
    "Attribute",
    "Item",
    "Final_value",
    "Initial_value",
    "Difference",
    "Reference_point",
    "Initial_reference_point",
    "Contract_date",
    "Duration",
    "Type",
    "Imposer",
    "Imposee",
    "Place",
    "Supplier_consumer",
    "Impacted_countries",
    "Participating_countries",
    "Forecaster",
    "Forecast",
    "Situation",
];

/// The 21 entity types.
pub const ENTITY_TYPES: [&str; 21] = [
    "COMMODITY",
    "COUNTRY",
    "DATE",
    "DURATION",
    "ECONOMIC_ITEM",
    "FINANCIAL_ATTRIBUTE",
    "FORECAST_TARGET",
    "GROUP",
    "LOCATION",
    "MONEY",
    "NATIONALITY",
    "NUMBER",
    "ORGANIZATION",
    "OTHER_ACTIVITIES",
    "PERCENTAGE",
    "PERSON",
    "PHENOMENON",
    "PRICE_UNIT",
    "PRODUCTION_UNIT",
    "QUANTITY",
    "STATE_OR_PROVINCE",
];

/// Class label shared by "no event" and "no role".
pub const NONE: &str = "NONE";

/// BIO outside tag.
pub const OUTSIDE: &str = "O";

/// Placeholder for POS tags unseen in training.
pub const UNKNOWN_POS: &str = "<UNK>";
