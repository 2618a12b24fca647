//! Chains of sight.
//!
//! During an epoch every user accumulates chains `owner->via/.../spotted`
//! recording direct and relayed sightings. Users exchange their knowledge with
//! every party they spot, so evidence propagates along the temporal contact
//! graph. At epoch end the per-area knowledge feeds the collusion and
//! fraud-covering detectors.

mod chain;
mod detect;
mod knowledge;

pub use chain::{direct_chain, Chain};
pub use detect::{
    collusion_candidates, detect_collusion, detect_fraud_covering, fraud_covering_candidates, Candidate,
    CollusionDetector, Detector, DetectorHistory, DetectorParams, DetectorRegistry, Flag, FraudCoveringDetector,
    COLLUSION, FRAUD_COVERING,
};
pub use knowledge::{merge_knowledge, AreaKnowledge, KnowledgeBase};
