//! Decoding experiments on bivariate bicycle codes: GF(2) algebra, code
//! construction, noise sampling, min-sum BP, OSD-0, the mod-w convergence
//! predictor and a discrete-event decoder pipeline.

pub mod bp;
pub mod code;
pub mod error;
pub mod gf2;
pub mod harness;
pub mod noise;
pub mod osd;
pub mod pipeline;
pub mod predictor;
pub mod record;
pub mod table;
