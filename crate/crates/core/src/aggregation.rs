//! Dataset aggregation algorithms.
