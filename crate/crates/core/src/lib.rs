//! First-passage-time densities for one-dimensional diffusions between two
//! absorbing boundaries, assembled from one-boundary kernels by filtration.
//!
//! Three models are supported (free diffusion, constant drift, and the
//! Ornstein-Uhlenbeck process). Every two-boundary quantity is built from the
//! one-boundary kernels in [`processes`]; [`eigen`] and [`mc`] provide
//! independent references.

pub mod curve;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod filtration;
pub mod laplace;
pub mod mc;
pub mod processes;
pub mod quad;
pub mod specfun;

pub use curve::{l1_distance, sup_distance, DensityCurve, Method, TimeGrid};
pub use eigen::{ee_biased, ee_free, ee_ou_fpt, ou_spectrum, OuEigenSystem, SpectrumEntry};
pub use error::{Error, Result};
pub use exec::Execution;
pub use filtration::{
    auto_order, f_n_laplace, filtration_terms, ftwo_laplace, ftwo_moving, ftwo_series_time, laplace_curve,
    ratio_diagnostic, series_curve, splitting_probability, terms_table, MovingResult, Order, RatioReport, Target,
    TermsTable,
};
pub use laplace::{invert_gaver_stehfest, invert_talbot, sinh_ratio_series, LaplaceKernel, SeriesValue, Status, Transform};
pub use mc::{histogram, simulate, Domain, FptSample, Histogram, McConfig, McRun};
pub use processes::{
    characteristic_time, fpt_one_boundary_laplace, fpt_one_boundary_time, moving_boundary_kernel, transition_density,
    LinearTrajectory, MovingBoundaries, OuParams, ProcessSpec, StaticBoundaries,
};
pub use specfun::{kummer_1f1, parabolic_cylinder_d, u_pm, Sign, SpecfunResult};
