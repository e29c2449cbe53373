//! Numerical audits: supporting planes and flat sets, the flat-set dimension
//! audit, contradiction certificates, touch tests, the Pogorelov functional
//! and the empirical modulus and `C^2` tables.

mod certificate;
mod experiments;
mod flatset;
mod plane;
mod pogorelov;
mod touch;

pub use certificate::{
    theorem1_certificate, Attempt, Certificate, CertificateOutcome, Margins, NoCertificate, Touching,
    MAX_HEIGHT_HALVINGS,
};
pub use experiments::{
    c2_at_origin, c2_at_origin_experiment, gallery_profile, modulus_experiment, random_boundary_family, solve_family,
    C2Audit, C2Bucket, C2Case, C2Row, C2Table, GalleryRow, MemberModulus, ModulusRow, ModulusTable, RandomDatum,
};
pub use flatset::{
    affine_fit, strict_2convexity_audit, sublevel_flat_set, AffineFitReport, AuditOptions, AuditReport, LevelFit,
    SampleAudit,
};
pub use plane::{supporting_plane, tol_support, SupportingPlane};
pub use pogorelov::{component_below, pogorelov_functional, PogorelovValue};
pub use touch::{tol_touch, touching_placements, viscosity_touch_test, TouchOutcome, TouchReport, TouchSense};
