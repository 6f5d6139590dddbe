// Noise schedule plus the forward noising and reverse denoising recursions.
//
// The default (sqrt_mode = false) follows the recursion
//     x_t = alpha_t * x_{t-1} + beta_t * eps
// with its matching reverse mean and reverse step, where the coefficients
// multiply the terms directly. sqrt_mode = true switches to the standard
// variance-preserving sqrt parameterization for comparison runs.
//
// Class conditioning lives entirely in the distribution of eps, so
// cond_forward_step applies the identical recursion to conditional noise.
#pragma once

#include "dnada/tensor.hpp"

namespace dnada::diffusion {

struct NoiseSchedule {
  int T = 0;
  Vec alpha;      // alpha_1..alpha_T
  Vec beta;       // beta_t = 1 - alpha_t
  Vec alpha_bar;  // cumulative products
  bool sqrt_mode = false;
};

// Linear beta schedule from beta_start to beta_end over T steps.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end, bool sqrt_mode);

// x_t = alpha_t * x_prev + beta_t * eps (sqrt_mode: sqrt(alpha_t), sqrt(beta_t))
Vec forward_step(const Vec& x_prev, int t, const Vec& eps, const NoiseSchedule& sched);

// Same recursion; eps is expected to come from the class-conditioned noise
// distribution, so E[x_t | x_prev, c_a, c_u] = alpha_t*x_prev + beta_t*shift.
Vec cond_forward_step(const Vec& x_prev, int t, const Vec& eps_cond, const NoiseSchedule& sched);

// mu_tilde_t = (1/alpha_t) * (x_t - beta_t/(1 - alpha_bar_t) * eps_hat)
Vec reverse_mean(const Vec& x_t, int t, const Vec& eps_hat, const NoiseSchedule& sched);

// beta_tilde_t = beta_t * (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t), alpha_bar_0 = 1
double posterior_variance(int t, const NoiseSchedule& sched);

// x_{t-1} = mu_tilde_t + beta_tilde_t * eta (sqrt_mode: sqrt(beta_tilde_t))
Vec reverse_step(const Vec& x_t, int t, const Vec& eps_hat, const Vec& eta,
                 const NoiseSchedule& sched);

}  // namespace dnada::diffusion
