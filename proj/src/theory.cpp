#include "mfregret/theory.hpp"

#include <cmath>

#include "json.hpp"

#include "mfregret/errors.hpp"

namespace mfregret {

void BoundSpec::validate() const {
  if (!(c_sigma > 0.0) || !(c_z > 0.0) || !(c_1 > 0.0) || !(lambda > 0.0) || !(beta > 0.0)) {
    throw InputError("bound spec: C_sigma, C_z, C_1, lambda, beta must all be positive");
  }
  if (d == 0) throw InputError("bound spec: d must be >= 1");
  if (hessian_op_bound && !(*hessian_op_bound >= 0.0)) {
    throw InputError("bound spec: Hessian bound must be >= 0");
  }
}

TheoryConstants compute_constants(const BoundSpec& spec) {
  spec.validate();
  TheoryConstants c;
  const double cs2 = spec.c_sigma * spec.c_sigma;
  c.c_osc = 4.0 / spec.beta * (cs2 + spec.c_z * spec.c_sigma);
  c.alpha = spec.lambda / spec.beta * std::exp(-c.c_osc);
  const double pl_margin = c.alpha * spec.beta * spec.beta - 8.0 * cs2 * spec.c_1 * spec.c_1;
  c.pl_condition_holds = pl_margin > 0.0;
  if (c.pl_condition_holds) c.c_pl = (2.0 * cs2 + spec.beta) / pl_margin;
  c.q_star = spec.beta * static_cast<double>(spec.d) / spec.lambda * std::exp(c.c_osc);
  if (spec.hessian_op_bound) {
    c.lambda_dc = 2.0 * (spec.c_sigma + spec.c_z) * *spec.hessian_op_bound;
    c.displacement_convex = spec.lambda >= *c.lambda_dc;
  }
  return c;
}

MomentAudit check_empirical_moment_bound(const WeightedMeasure& mu_hat, const BoundSpec& spec) {
  MomentAudit audit;
  audit.measured = second_moment(mu_hat.view());
  audit.bound = compute_constants(spec).q_star;
  audit.holds = audit.measured <= audit.bound;
  return audit;
}

std::string constants_report_json(const BoundSpec& spec, const TheoryConstants& c) {
  using nlohmann::json;
  json j;
  j["bounds"] = {{"c_sigma", spec.c_sigma}, {"c_z", spec.c_z}, {"c_1", spec.c_1},
                 {"lambda", spec.lambda},   {"beta", spec.beta}, {"d", spec.d}};
  j["bounds"]["hessian_op_bound"] = spec.hessian_op_bound ? json(*spec.hessian_op_bound) : json();
  j["c_osc"] = c.c_osc;
  j["alpha"] = c.alpha;
  j["pl_condition_holds"] = c.pl_condition_holds;
  j["c_pl"] = c.c_pl ? json(*c.c_pl) : json();
  j["q_star"] = std::isfinite(c.q_star) ? json(c.q_star) : json("inf");
  j["lambda_dc"] = c.lambda_dc ? json(*c.lambda_dc) : json();
  j["displacement_convex"] = c.displacement_convex ? json(*c.displacement_convex) : json();
  j["particle_lsi_condition"] = "not machine-checkable";
  return j.dump(2);
}

}  // namespace mfregret
