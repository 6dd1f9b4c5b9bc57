//! Explicit function families: the cutoff, step functions, the mollified
//! sequence `v_j` and the blow-up family `(u_lambda, K_lambda)`.

pub mod blowup;
pub mod cutoff;
pub mod mollified;
pub mod steps;

pub use blowup::{
    choose_r, condition_a_margin, condition_b_margin, delta0_and_rescale, estimate_derivative_bounds,
    hessian_terms_at_origin, k_derivatives, k_lambda_b2, k_lambda_eval, k_lambda_general, k_tilde, k_tilde_derivatives,
    make_u_lambda, rescaled_equation_sides, BlowupFamily, DerivativeBounds, RChoice,
};
pub use cutoff::{smooth_step, SmoothStep};
pub use mollified::{
    beta, cutoff_tail_mass, f_lambda, f_limit, make_v_j, make_v_j_with_beta, make_w_lambda, MollifiedFamily,
};
pub use steps::{make_step_family, step_prescribed_function, StepFamily, StepKind};
