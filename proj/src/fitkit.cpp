#include "nfmem/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <sstream>

#include "nfmem/constants.hpp"
#include "nfmem/decoherence.hpp"
#include "nfmem/eit.hpp"
#include "nfmem/ensemble.hpp"
#include "nfmem/error.hpp"

namespace nfmem::fitkit {
namespace {

constexpr double kInf = constants::infinity;
constexpr double kMHz = constants::two_pi * 1e6;

std::vector<ModelInfo> build_registry() {
  std::vector<ModelInfo> r;
  r.push_back({ModelId::saturation,
               "saturation",
               "nW",
               "transmission",
               "T = exp(-alpha0_L / (1 + P/P_sat)^k)",
               {{"alpha0_L", "", 5.0, 0.0, kInf, true},
                {"P_sat", "nW", 1.0, 0.0, kInf, true},
                {"k", "", 1.0, 0.0, kInf, true}}});
  r.push_back({ModelId::lorentzian_od,
               "lorentzian_od",
               "MHz",
               "transmission",
               "T = exp(-OD / (1 + (2 delta/Gamma)^2))",
               {{"OD", "", 2.0, 0.0, kInf, true}, {"Gamma", "MHz", 5.0, 0.0, kInf, true}}});
  r.push_back({ModelId::decay_lifetime,
               "decay_lifetime",
               "us",
               "relative efficiency",
               "eta = exp(-(t/tau_D)^2 / (1 + (t/tau_T)^2)) / (1 + (t/tau_T)^2)^2",
               {{"tau_D", "us", 5.0, 0.0, kInf, true}, {"tau_T", "us", 4.0, 0.0, kInf, true}}});
  r.push_back({ModelId::eit_spectrum,
               "eit_spectrum",
               "MHz",
               "transmission",
               "T = exp(-OD Im chi(delta; Gamma, Omega_c, gamma_gs))",
               {{"OD", "", 3.0, 0.0, kInf, true},
                {"Gamma", "MHz", 6.0, 0.0, kInf, true},
                {"Omega_c", "MHz", 10.0, 0.0, kInf, true},
                {"gamma_gs", "MHz", 0.5, 0.0, kInf, true}}});
  return r;
}

bool unweighted(double sigma) { return !(sigma > 0.0); }

// Parameter vector <-> free coordinates.
struct Transform {
  std::vector<int> free;  // indices of free parameters
  std::vector<bool> log_space;
  std::vector<Bound> bounds;
  std::vector<double> fixed;  // full parameter vector, frozen entries used as-is

  Eigen::VectorXd to_free(const std::vector<double>& p) const {
    Eigen::VectorXd q(static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
      const auto i = static_cast<std::size_t>(free[k]);
      q[static_cast<Eigen::Index>(k)] = log_space[i] ? std::log(p[i]) : p[i];
    }
    return q;
  }

  std::vector<double> to_params(const Eigen::VectorXd& q) const {
    std::vector<double> p = fixed;
    for (std::size_t k = 0; k < free.size(); ++k) {
      const auto i = static_cast<std::size_t>(free[k]);
      const double v = q[static_cast<Eigen::Index>(k)];
      p[i] = std::clamp(log_space[i] ? std::exp(v) : v, bounds[i].lower, bounds[i].upper);
    }
    return p;
  }
};

struct Objective {
  ModelId model;
  std::vector<double> x, y, w;  // w = 1/sigma

  // Returns false when the model cannot be evaluated at p.
  bool residuals(const std::vector<double>& p, Eigen::VectorXd& r) const {
    std::vector<double> f;
    try {
      f = evaluate_model(model, p, x);
    } catch (const DomainError&) {
      return false;
    }
    r.resize(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = (y[i] - f[i]) * w[i];
      if (!std::isfinite(v)) return false;
      r[static_cast<Eigen::Index>(i)] = v;
    }
    return true;
  }
};

Eigen::MatrixXd jacobian(const Objective& obj, const Transform& tr, const Eigen::VectorXd& q,
                         const Eigen::VectorXd& r0) {
  Eigen::MatrixXd J(r0.size(), q.size());
  Eigen::VectorXd r;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    double h = std::max(1e-8, 1e-6 * std::abs(q[k]));
    Eigen::VectorXd qh = q;
    qh[k] += h;
    if (!obj.residuals(tr.to_params(qh), r)) {
      h = -h;
      qh[k] = q[k] + h;
      if (!obj.residuals(tr.to_params(qh), r)) throw SolverError("Jacobian evaluation failed");
    }
    J.col(k) = (r - r0) / h;
  }
  return J;
}

}  // namespace

const std::vector<ModelInfo>& models() {
  static const std::vector<ModelInfo> registry = build_registry();
  return registry;
}

const ModelInfo& model_info(ModelId id) {
  for (const auto& m : models()) {
    if (m.id == id) return m;
  }
  throw DomainError("unknown model id");
}

ModelId model_from_string(std::string_view name) {
  for (const auto& m : models()) {
    if (m.name == name) return m.id;
  }
  throw DomainError("unknown model '" + std::string(name) + "'");
}

std::string to_string(ModelId id) { return model_info(id).name; }

std::vector<double> evaluate_model(ModelId id, const std::vector<double>& p,
                                   const std::vector<double>& x) {
  const auto& info = model_info(id);
  if (p.size() != info.parameters.size()) {
    throw DomainError(info.name + ": expected " + std::to_string(info.parameters.size()) +
                      " parameters");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& pi = info.parameters[i];
    if (!(p[i] >= pi.lower && p[i] <= pi.upper)) {
      throw DomainError(info.name + ": parameter " + pi.name + " out of bounds");
    }
  }
  std::vector<double> y;
  y.reserve(x.size());
  switch (id) {
    case ModelId::saturation: {
      ensemble::AbsorptionModel m;
      m.alpha0_L = p[0];
      m.p_sat_W = p[1] * 1e-9;
      m.k_exp = p[2];
      for (double xi : x) y.push_back(ensemble::saturation_transmission(xi * 1e-9, m));
      break;
    }
    case ModelId::lorentzian_od: {
      ensemble::AbsorptionModel m;
      m.od = p[0];
      m.gamma_rad_per_s = p[1] * kMHz;
      for (double xi : x) y.push_back(ensemble::lorentzian_transmission(xi * kMHz, m));
      break;
    }
    case ModelId::decay_lifetime:
      for (double xi : x) {
        y.push_back(decoherence::efficiency_decay(xi * 1e-6, p[0] * 1e-6, p[1] * 1e-6));
      }
      break;
    case ModelId::eit_spectrum: {
      eit::LambdaScheme scheme;
      scheme.gamma_ge_rad_per_s = p[1] * kMHz;
      scheme.gamma_gs_rad_per_s = p[3] * kMHz;
      scheme.control_dephasing_s = 0.0;
      std::vector<double> delta;
      delta.reserve(x.size());
      for (double xi : x) delta.push_back(xi * kMHz);
      y = eit::serial::eit_spectrum(p[0], scheme, p[2] * kMHz, delta);
      break;
    }
  }
  return y;
}

void FitProblem::validate() const {
  const auto& info = model_info(model);
  const std::size_t np = info.parameters.size();
  if (!initial_guess.empty() && initial_guess.size() != np) {
    throw DomainError(info.name + ": initial guess needs " + std::to_string(np) + " values");
  }
  if (!bounds.empty() && bounds.size() != np) {
    throw DomainError(info.name + ": bounds need " + std::to_string(np) + " entries");
  }
  for (const auto& name : frozen) {
    const bool known = std::any_of(info.parameters.begin(), info.parameters.end(),
                                   [&](const ParameterInfo& pi) { return pi.name == name; });
    if (!known) throw DomainError(info.name + ": unknown parameter '" + name + "'");
  }
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < np; ++i) {
    const auto& pi = info.parameters[i];
    const double g = initial_guess.empty() ? pi.default_guess : initial_guess[i];
    const Bound b = bounds.empty() ? Bound{pi.lower, pi.upper} : bounds[i];
    if (!(b.lower <= b.upper)) throw DomainError(pi.name + ": empty bounds");
    if (!(g >= b.lower && g <= b.upper)) {
      throw DomainError(pi.name + ": initial guess outside bounds");
    }
    if (b.lower < pi.lower || b.upper > pi.upper) {
      throw DomainError(pi.name + ": bounds exceed the model domain");
    }
    if (frozen.count(pi.name) == 0) {
      ++n_free;
      if (pi.log_space && !(g > 0.0)) {
        throw DomainError(pi.name + ": a free positive parameter needs a positive guess");
      }
    }
  }
  if (n_free == 0) throw DomainError("all parameters are frozen");
  const std::size_t need = std::max<std::size_t>(3, n_free + 1);
  if (data.size() < need) {
    throw DomainError("need at least " + std::to_string(need) + " data points");
  }
  const bool w0 = unweighted(data.front().sigma);
  for (const auto& d : data) {
    if (!std::isfinite(d.x) || !std::isfinite(d.y)) throw DomainError("non-finite data point");
    if (unweighted(d.sigma) != w0) throw DomainError("sigma must be given for all or none");
  }
  if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
}

FitResult fit(const FitProblem& problem) {
  problem.validate();
  const auto& info = model_info(problem.model);
  const std::size_t np = info.parameters.size();

  auto data = problem.data;
  std::sort(data.begin(), data.end(), [](const DataPoint& a, const DataPoint& b) {
    const double sa = unweighted(a.sigma) ? 1.0 : a.sigma;
    const double sb = unweighted(b.sigma) ? 1.0 : b.sigma;
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return sa < sb;
  });

  FitResult res;
  res.model = problem.model;
  res.weighted = !unweighted(data.front().sigma);

  Objective obj{problem.model, {}, {}, {}};
  for (const auto& d : data) {
    obj.x.push_back(d.x);
    obj.y.push_back(d.y);
    obj.w.push_back(res.weighted ? 1.0 / d.sigma : 1.0);
  }

  Transform tr;
  for (std::size_t i = 0; i < np; ++i) {
    const auto& pi = info.parameters[i];
    res.names.push_back(pi.name);
    res.units.push_back(pi.unit);
    tr.fixed.push_back(problem.initial_guess.empty() ? pi.default_guess
                                                     : problem.initial_guess[i]);
    tr.bounds.push_back(problem.bounds.empty() ? Bound{pi.lower, pi.upper} : problem.bounds[i]);
    tr.log_space.push_back(pi.log_space);
    const bool is_frozen = problem.frozen.count(pi.name) > 0;
    res.frozen.push_back(is_frozen);
    if (!is_frozen) tr.free.push_back(static_cast<int>(i));
  }

  Eigen::VectorXd q = tr.to_free(tr.fixed);
  Eigen::VectorXd r;
  if (!obj.residuals(tr.to_params(q), r)) {
    throw DomainError(info.name + ": model cannot be evaluated at the initial guess");
  }
  double sse = r.squaredNorm();
  res.sse_history.push_back(sse);

  double lambda = 1e-3;
  int iter = 0;
  for (; iter < problem.max_iterations && !res.converged; ++iter) {
    if (sse == 0.0) {
      res.converged = true;
      res.message = "exact fit";
      break;
    }
    const Eigen::MatrixXd J = jacobian(obj, tr, q, r);
    const Eigen::MatrixXd A = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    const double diag_floor = 1e-12 * std::max(A.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd Ad = A;
      for (Eigen::Index k = 0; k < Ad.rows(); ++k) {
        Ad(k, k) += lambda * std::max(A(k, k), diag_floor);
      }
      const Eigen::VectorXd step = Ad.ldlt().solve(-g);
      const Eigen::VectorXd q_new = q + step;
      Eigen::VectorXd r_new;
      if (step.allFinite() && obj.residuals(tr.to_params(q_new), r_new)) {
        const double sse_new = r_new.squaredNorm();
        if (sse_new <= sse) {
          const double rel_change = (sse - sse_new) / std::max(sse, 1e-300);
          const double rel_step = step.norm() / (q.norm() + 1e-10);
          q = q_new;
          r = r_new;
          sse = sse_new;
          res.sse_history.push_back(sse);
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          if (rel_change < 1e-10 || rel_step < 1e-10) {
            res.converged = true;
            res.message = rel_step < 1e-10 ? "relative step below tolerance"
                                           : "relative SSE change below tolerance";
          }
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: the current point is a minimum to working precision.
      res.converged = true;
      res.message = "no further decrease possible";
      ++iter;
      break;
    }
  }
  res.n_iterations = iter;
  if (!res.converged) res.message = "maximum iterations reached";

  res.parameters = tr.to_params(q);
  const auto f = evaluate_model(problem.model, res.parameters, obj.x);
  for (std::size_t i = 0; i < f.size(); ++i) res.residuals.push_back(obj.y[i] - f[i]);
  res.chi2 = sse;
  res.degrees_of_freedom = static_cast<int>(data.size() - tr.free.size());
  res.reduced_chi2 = sse / res.degrees_of_freedom;

  // Covariance in the free coordinates, then mapped to parameters.
  const auto nf = static_cast<Eigen::Index>(tr.free.size());
  res.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(np),
                                         static_cast<Eigen::Index>(np));
  res.uncertainties.assign(np, 0.0);
  const Eigen::MatrixXd J = jacobian(obj, tr, q, r);
  const Eigen::MatrixXd A = J.transpose() * J;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double ev_max = std::max(ev.maxCoeff(), 0.0);
  const double cutoff = ev_max * 1e-14;
  Eigen::MatrixXd cov_q = Eigen::MatrixXd::Zero(nf, nf);
  std::vector<bool> weak(tr.free.size(), false);
  for (Eigen::Index k = 0; k < nf; ++k) {
    if (ev[k] > cutoff && ev[k] > 0.0) {
      cov_q += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / ev[k];
    } else {
      for (Eigen::Index j = 0; j < nf; ++j) {
        if (std::abs(eig.eigenvectors()(j, k)) > 1e-3) weak[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  cov_q *= res.reduced_chi2;
  for (Eigen::Index a = 0; a < nf; ++a) {
    const auto ia = static_cast<std::size_t>(tr.free[static_cast<std::size_t>(a)]);
    const double da = tr.log_space[ia] ? res.parameters[ia] : 1.0;
    for (Eigen::Index b = 0; b < nf; ++b) {
      const auto ib = static_cast<std::size_t>(tr.free[static_cast<std::size_t>(b)]);
      const double db = tr.log_space[ib] ? res.parameters[ib] : 1.0;
      res.covariance(static_cast<Eigen::Index>(ia), static_cast<Eigen::Index>(ib)) =
          da * cov_q(a, b) * db;
    }
  }
  for (std::size_t k = 0; k < tr.free.size(); ++k) {
    const auto i = static_cast<std::size_t>(tr.free[k]);
    if (weak[k]) {
      res.unidentifiable.push_back(res.names[i]);
      res.uncertainties[i] = kInf;
    } else {
      const auto ii = static_cast<Eigen::Index>(i);
      res.uncertainties[i] = std::sqrt(std::max(res.covariance(ii, ii), 0.0));
    }
  }
  if (!res.unidentifiable.empty()) res.message += "; singular Jacobian";
  return res;
}

std::vector<FitResult> fit_batch(const std::vector<FitProblem>& problems) {
  std::vector<FitResult> out(problems.size());
  std::vector<std::exception_ptr> errors(problems.size());
  const auto n = static_cast<long>(problems.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i);
    try {
      out[j] = fit(problems[j]);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace serial {
std::vector<FitResult> fit_batch(const std::vector<FitProblem>& problems) {
  std::vector<FitResult> out;
  out.reserve(problems.size());
  for (const auto& p : problems) out.push_back(fit(p));
  return out;
}
}  // namespace serial

std::vector<DataPoint> read_csv(std::istream& in) {
  std::vector<DataPoint> out;
  std::string line;
  int lineno = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);

    std::vector<double> values;
    bool numeric = true;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      const auto rest = std::string(end).find_first_not_of(" \t");
      if (end == c.c_str() || rest != std::string::npos) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw DomainError("CSV line " + std::to_string(lineno) + ": non-numeric field");
    }
    header_allowed = false;
    if (values.size() < 2 || values.size() > 3) {
      throw DomainError("CSV line " + std::to_string(lineno) + ": expected x,y[,sigma]");
    }
    DataPoint d{values[0], values[1]};
    if (values.size() == 3) d.sigma = values[2];
    out.push_back(d);
  }
  return out;
}

std::vector<DataPoint> read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open data file '" + path + "'");
  return read_csv(in);
}

nlohmann::ordered_json to_json(const FitResult& r) {
  auto finite_or_null = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["model"] = to_string(r.model);
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["n_iterations"] = r.n_iterations;
  auto params = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    nlohmann::ordered_json p;
    p["name"] = r.names[i];
    p["unit"] = r.units[i];
    p["value"] = r.parameters[i];
    p["uncertainty"] = finite_or_null(r.uncertainties[i]);
    p["frozen"] = static_cast<bool>(r.frozen[i]);
    params.push_back(p);
  }
  j["parameters"] = params;
  auto cov = nlohmann::ordered_json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) {
      row.push_back(finite_or_null(r.covariance(a, b)));
    }
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["chi2"] = r.chi2;
  j["reduced_chi2"] = r.reduced_chi2;
  j["reduced_chi2_unitless"] = !r.weighted;
  j["degrees_of_freedom"] = r.degrees_of_freedom;
  j["unidentifiable"] = r.unidentifiable;
  j["residuals"] = r.residuals;
  return j;
}

}  // namespace nfmem::fitkit
