#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "conlearn/errors.hpp"

namespace conlearn::integrate {

enum class Mechanism { Static, Monotone, ProjSup, ProjCon, ProjBoth };

inline std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::Static: return "static";
    case Mechanism::Monotone: return "monotone";
    case Mechanism::ProjSup: return "proj-sup";
    case Mechanism::ProjCon: return "proj-con";
    case Mechanism::ProjBoth: return "proj-both";
  }
  return {};
}

inline Mechanism parse_mechanism(const std::string& s) {
  for (auto m : {Mechanism::Static, Mechanism::Monotone, Mechanism::ProjSup, Mechanism::ProjCon, Mechanism::ProjBoth})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown mechanism '" + s + "' (expected static, monotone, proj-sup, proj-con, proj-both)");
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ContractViolation("vector length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline constexpr double kMinRefNorm = 1e-12;

struct Projection {
  std::vector<double> v;
  bool fired = false;
  bool ref_too_small = false;
};

/// Remove from v its component along ref when the two conflict (v . ref < 0).
inline Projection project(const std::vector<double>& v, const std::vector<double>& ref) {
  const double d = dot(v, ref);
  Projection out{v, false, false};
  const double rr = dot(ref, ref);
  if (std::sqrt(rr) < kMinRefNorm) {
    out.ref_too_small = true;
    return out;
  }
  if (!(d < 0.0)) return out;
  const double c = d / rr;
  for (std::size_t i = 0; i < v.size(); ++i) out.v[i] -= c * ref[i];
  // second pass removes the rounding residue along ref (matters when v is nearly parallel to it)
  const double c2 = dot(out.v, ref) / rr;
  for (std::size_t i = 0; i < v.size(); ++i) out.v[i] -= c2 * ref[i];
  out.fired = true;
  return out;
}

struct IntegratorConfig {
  Mechanism mechanism = Mechanism::Static;
  double lambda1 = 1.0;  // supervised weight
  double lambda2 = 1.0;  // constraint weight (static and projection mechanisms)
  double eta = 0.01;     // monotone dual step
};

struct Diagnostics {
  double con_dot_sup_ref = 0.0;  // g_con . g_sup_ref before projection
  double sup_dot_con_ref = 0.0;  // g_sup . g_con_ref before projection
  bool con_projected = false;
  bool sup_projected = false;
  bool ref_too_small = false;
  double orthogonality_residual = 0.0;  // max |p.ref| / (|p||ref|) over fired projections
  double lambda = 0.0;                  // weight applied to g_con this step
};

struct CombineOutcome {
  std::vector<double> combined;
  Diagnostics diag;
};

class IntegratorState {
 public:
  IntegratorState(IntegratorConfig cfg, std::size_t params) : cfg_(cfg), sup_ref_(params, 0.0), con_ref_(params, 0.0) {
    if (cfg.eta < 0.0) throw ConfigError("monotone step size must be non-negative");
    if (cfg.mechanism == Mechanism::Static && (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0))
      throw ConfigError("static weights must be non-negative");
  }

  const IntegratorConfig& config() const { return cfg_; }
  double lambda() const { return lambda_; }
  const std::vector<double>& sup_reference() const { return sup_ref_; }
  const std::vector<double>& con_reference() const { return con_ref_; }
  std::size_t sup_updates() const { return n_sup_; }
  std::size_t con_updates() const { return n_con_; }

  /// One update direction from the two task gradients. `c_value` is the current
  /// (non-negative) constraint violation, consumed by the monotone mechanism.
  CombineOutcome combine(const std::vector<double>& g_sup, const std::vector<double>& g_con, double c_value) {
    if (g_sup.size() != sup_ref_.size() || g_con.size() != sup_ref_.size())
      throw ContractViolation("combine: gradient length " + std::to_string(g_sup.size()) + "/" +
                              std::to_string(g_con.size()) + " does not match " + std::to_string(sup_ref_.size()));
    if (!(c_value >= 0.0)) throw ContractViolation("combine: constraint value must be a non-negative number");

    CombineOutcome out;
    auto& d = out.diag;
    d.con_dot_sup_ref = dot(g_con, sup_ref_);
    d.sup_dot_con_ref = dot(g_sup, con_ref_);

    std::vector<double> sup = g_sup;
    std::vector<double> con = g_con;
    const auto m = cfg_.mechanism;
    if (m == Mechanism::ProjSup || m == Mechanism::ProjBoth) {
      auto p = project(g_con, sup_ref_);
      record(d, p, sup_ref_);
      d.con_projected = p.fired;
      con = std::move(p.v);
    }
    if (m == Mechanism::ProjCon || m == Mechanism::ProjBoth) {
      auto p = project(g_sup, con_ref_);
      record(d, p, con_ref_);
      d.sup_projected = p.fired;
      sup = std::move(p.v);
    }

    double w_sup = cfg_.lambda1;
    double w_con = cfg_.lambda2;
    if (m == Mechanism::Monotone) {
      w_sup = 1.0;
      w_con = lambda_;
    }
    d.lambda = w_con;
    out.combined.resize(sup.size());
    for (std::size_t i = 0; i < sup.size(); ++i) out.combined[i] = w_sup * sup[i] + w_con * con[i];

    if (m == Mechanism::Monotone) lambda_ += cfg_.eta * c_value;
    accumulate(sup_ref_, sup, ++n_sup_);
    accumulate(con_ref_, con, ++n_con_);
    return out;
  }

 private:
  static void record(Diagnostics& d, const Projection& p, const std::vector<double>& ref) {
    d.ref_too_small = d.ref_too_small || p.ref_too_small;
    if (!p.fired) return;
    const double denom = norm(p.v) * norm(ref);
    if (denom > 0.0) d.orthogonality_residual = std::max(d.orthogonality_residual, std::abs(dot(p.v, ref)) / denom);
  }

  static void accumulate(std::vector<double>& mean, const std::vector<double>& x, std::size_t n) {
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (x[i] - mean[i]) * inv;
  }

  IntegratorConfig cfg_;
  double lambda_ = 0.0;
  std::vector<double> sup_ref_;
  std::vector<double> con_ref_;
  std::size_t n_sup_ = 0;
  std::size_t n_con_ = 0;
};

}  // namespace conlearn::integrate
