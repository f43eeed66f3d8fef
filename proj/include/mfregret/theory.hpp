#pragma once

// Closed-form constants of the regret analysis, evaluated from user-supplied
// bounds on the neuron and the data:
//
//   C_osc = (4 / beta) (C_sigma^2 + C_z C_sigma)
//   alpha = (lambda / beta) exp(-C_osc)                      (LSI constant of mu*)
//   C_PL  = (2 C_sigma^2 + beta) / (alpha beta^2 - 8 C_sigma^2 C_1^2), when positive
//   Q*    = (beta d / lambda) exp(C_osc)                     (second moment bound of mu*)
//   lambda_dc = 2 (C_sigma + C_z) ||sigma_thetatheta||_op    (displacement convexity threshold)
//
// The LSI constant of the learner's own law has no closed form, so its
// condition is reported as not machine-checkable.

#include <cstddef>
#include <optional>
#include <string>

#include "mfregret/measures.hpp"

namespace mfregret {

struct BoundSpec {
  double c_sigma = 1.0;
  double c_z = 1.0;
  double c_1 = 1.0;
  double lambda = 0.1;
  double beta = 0.02;
  std::size_t d = 5;
  // Operator-norm bound on the parameter Hessian of sigma; lambda_dc is only
  // reported when this is supplied.
  std::optional<double> hessian_op_bound;

  void validate() const;
};

struct TheoryConstants {
  double c_osc = 0.0;
  double alpha = 0.0;
  bool pl_condition_holds = false;
  std::optional<double> c_pl;
  double q_star = 0.0;
  std::optional<double> lambda_dc;
  std::optional<bool> displacement_convex;  // lambda >= lambda_dc
};

TheoryConstants compute_constants(const BoundSpec& spec);

struct MomentAudit {
  double measured = 0.0;
  double bound = 0.0;
  bool holds = false;
};

MomentAudit check_empirical_moment_bound(const WeightedMeasure& mu_hat, const BoundSpec& spec);

// JSON object with the spec, all constants and condition flags.
std::string constants_report_json(const BoundSpec& spec, const TheoryConstants& constants);

}  // namespace mfregret
