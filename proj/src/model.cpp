#include "geofactor/model.hpp"

#include <cmath>

#include "geofactor/common.hpp"

namespace geofactor {

ItemConstraint ItemConstraint::all_free(int m) {
  ItemConstraint c;
  c.fixed = Eigen::VectorXd::Zero(m);
  c.active = Eigen::VectorXi::Ones(m);
  c.signs.assign(m, Sign::free);
  return c;
}

void ItemConstraint::validate() const {
  const auto m = fixed.size();
  if (active.size() != m || static_cast<Eigen::Index>(signs.size()) != m)
    throw ValidationError("constraint: field lengths differ");
  for (Eigen::Index k = 0; k < m; ++k) {
    if (active(k) != 0 && active(k) != 1)
      throw ValidationError("constraint: activation entries must be 0/1");
    if (active(k) == 0 && signs[k] != Sign::free)
      throw ValidationError(
          "constraint: a fixed entry cannot also be sign-constrained");
  }
}

Eigen::VectorXd apply_constraint(const ItemConstraint& c,
                                 const Eigen::VectorXd& a_free) {
  if (a_free.size() != c.fixed.size())
    throw ValidationError("apply_constraint: dimension mismatch");
  Eigen::VectorXd out = c.fixed;
  for (Eigen::Index k = 0; k < a_free.size(); ++k)
    if (c.active(k)) out(k) += a_free(k);
  return out;
}

Eigen::MatrixXd build_loading_matrix(const Eigen::MatrixXi& pattern,
                                     const Eigen::VectorXd& values) {
  if (values.size() != pattern.sum())
    throw ValidationError("loading matrix: value count " +
                          std::to_string(values.size()) +
                          " differs from pattern nonzeros " +
                          std::to_string(pattern.sum()));
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(pattern.rows(), pattern.cols());
  Eigen::Index next = 0;
  for (Eigen::Index c = 0; c < pattern.cols(); ++c)
    for (Eigen::Index r = 0; r < pattern.rows(); ++r)
      if (pattern(r, c)) t(r, c) = values(next++);
  return t;
}

void PriorSpec::validate() const {
  auto positive = [](const auto& v, const char* what) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (!(v(i) > 0.0))
        throw ValidationError(std::string("priors: ") + what +
                              " must be positive");
  };
  positive(c_sd, "easiness sd");
  positive(a_sd.reshaped(), "discrimination sd");
  positive(beta_sd, "fixed-effect sd");
  positive(t_log_sd, "loading log-sd");
  positive(phi_log_sd, "scale log-sd");
  if (!(lkj_eta > 0.0)) throw ValidationError("priors: eta must be positive");
}

int ModelSpec::free_a_count() const {
  int total = 0;
  for (const auto& c : constraints) total += c.active_count();
  return total;
}

std::vector<int> ModelSpec::a_offsets() const {
  std::vector<int> off(constraints.size() + 1, 0);
  for (std::size_t j = 0; j < constraints.size(); ++j)
    off[j + 1] = off[j] + constraints[j].active_count();
  return off;
}

Eigen::MatrixXd ModelSpec::resolve_discrimination(
    const Eigen::VectorXd& a_free) const {
  if (a_free.size() != free_a_count())
    throw ValidationError("resolve_discrimination: length mismatch");
  Eigen::MatrixXd a_star(q(), m);
  int next = 0;
  for (int j = 0; j < q(); ++j) {
    const auto& c = constraints[j];
    for (int k = 0; k < m; ++k)
      a_star(j, k) = c.fixed(k) + (c.active(k) ? a_free(next++) : 0.0);
  }
  return a_star;
}

Eigen::VectorXd ModelSpec::pack_free_a(const Eigen::MatrixXd& a_star) const {
  Eigen::VectorXd out(free_a_count());
  int next = 0;
  for (int j = 0; j < q(); ++j)
    for (int k = 0; k < m; ++k)
      if (constraints[j].active(k)) out(next++) = a_star(j, k) - constraints[j].fixed(k);
  return out;
}

void ModelSpec::validate() const {
  if (m < 1) throw ValidationError("spec: factor count must be >= 1");
  if (constraints.empty()) throw ValidationError("spec: no items");
  for (const auto& c : constraints) {
    if (c.fixed.size() != m)
      throw ValidationError("spec: constraint length differs from m");
    c.validate();
  }
  if (loading_pattern.rows() != m)
    throw ValidationError("spec: loading pattern must have m rows");
  if (loading_pattern.cols() > m)
    throw ValidationError("spec: more Gaussian processes than factors");
  for (Eigen::Index r = 0; r < loading_pattern.rows(); ++r)
    for (Eigen::Index c = 0; c < loading_pattern.cols(); ++c)
      if (loading_pattern(r, c) != 0 && loading_pattern(r, c) != 1)
        throw ValidationError("spec: loading pattern entries must be 0/1");
  if (residual_sd.size() != m)
    throw ValidationError("spec: residual sd length differs from m");
  for (int k = 0; k < m; ++k)
    if (!(residual_sd(k) > 0.0))
      throw ValidationError("spec: residual sds must be positive");
  if (priors.c_sd.size() != q() || priors.a_mean.rows() != q() ||
      priors.a_mean.cols() != m || priors.a_sd.rows() != q() ||
      priors.a_sd.cols() != m || priors.t_log_mean.size() != free_t_count() ||
      priors.t_log_sd.size() != free_t_count() ||
      priors.phi_log_mean.size() != g() || priors.phi_log_sd.size() != g())
    throw ValidationError("spec: prior shapes do not match the model");
  priors.validate();
}

IdentifiabilityReport validate_identifiability(const ModelSpec& spec) {
  IdentifiabilityReport rep;
  const int m = spec.m;

  // Rotation: count entries fixed at zero, and require that every pair of
  // factor columns is distinguished by an item with a structural zero in
  // one column and an active loading in the other.
  int zeros = 0;
  for (const auto& c : spec.constraints)
    for (int k = 0; k < m; ++k)
      if (!c.active(k) && c.fixed(k) == 0.0) ++zeros;
  const int needed = m * (m - 1) / 2;
  if (zeros < needed) {
    rep.ok = false;
    rep.messages.push_back(
        "rotation aliasing: " + std::to_string(zeros) +
        " entries fixed to zero, need at least " + std::to_string(needed));
  }
  for (int k = 0; k < m; ++k)
    for (int l = k + 1; l < m; ++l) {
      bool distinguished = false;
      for (const auto& c : spec.constraints) {
        const bool zk = !c.active(k) && c.fixed(k) == 0.0;
        const bool zl = !c.active(l) && c.fixed(l) == 0.0;
        if (zk != zl) {
          distinguished = true;
          break;
        }
      }
      if (!distinguished) {
        rep.ok = false;
        rep.messages.push_back("rotation aliasing: factors " +
                               std::to_string(k + 1) + " and " +
                               std::to_string(l + 1) +
                               " are not separated by any structural zero");
      }
    }

  // Reflection: each factor needs a sign-constrained or fixed-nonzero entry.
  for (int k = 0; k < m; ++k) {
    bool pinned = false;
    for (const auto& c : spec.constraints) {
      if (c.active(k) && c.signs[k] != Sign::free) pinned = true;
      if (!c.active(k) && c.fixed(k) != 0.0) pinned = true;
    }
    if (!pinned) {
      rep.ok = false;
      rep.messages.push_back(
          "reflection aliasing: factor " + std::to_string(k + 1) +
          " has no sign-constrained or fixed nonzero loading");
    }
  }

  // Scaling: handled by the fixed residual scale D.
  for (int k = 0; k < m; ++k)
    if (!(spec.residual_sd(k) > 0.0)) {
      rep.ok = false;
      rep.messages.push_back("scaling aliasing: residual sd of factor " +
                             std::to_string(k + 1) + " is not positive");
    }
  return rep;
}

PriorSpec default_priors(const ModelSpec& spec, int p) {
  PriorSpec pr;
  const int q = spec.q();
  pr.c_sd = Eigen::VectorXd::Ones(q);
  pr.a_mean = Eigen::MatrixXd::Zero(q, spec.m);
  pr.a_sd = Eigen::MatrixXd::Ones(q, spec.m);
  for (int j = 0; j < q; ++j)
    for (int k = 0; k < spec.m; ++k)
      if (spec.constraints[j].signs[k] != Sign::free) {
        pr.a_mean(j, k) =
            spec.constraints[j].signs[k] == Sign::positive ? 1.0 : -1.0;
        pr.a_sd(j, k) = 0.45;
      }
  pr.beta_sd = Eigen::VectorXd::Ones(spec.m * p);
  pr.t_log_mean =
      Eigen::VectorXd::Constant(spec.free_t_count(), std::log(0.4));
  pr.t_log_sd = Eigen::VectorXd::Constant(spec.free_t_count(), 0.4);
  pr.phi_log_mean = Eigen::VectorXd::Constant(spec.g(), std::log(160.0));
  pr.phi_log_sd = Eigen::VectorXd::Constant(spec.g(), 0.3);
  pr.lkj_eta = 1.5;
  return pr;
}

}  // namespace geofactor
