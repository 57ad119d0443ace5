#pragma once

// Damped least-squares curve fitting with a registry of the four experimental models.
//
// Models work in laboratory units:
//   saturation      x = probe power [nW]        alpha0_L, P_sat [nW], k
//   lorentzian_od   x = detuning/2pi [MHz]      OD, Gamma/2pi [MHz]
//   decay_lifetime  x = storage time [us]       tau_D [us], tau_T [us]
//   eit_spectrum    x = detuning/2pi [MHz]      OD, Gamma/2pi, Omega_c/2pi, gamma_gs/2pi [MHz]
// and convert to SI before delegating to the owning physics module.

#include <iosfwd>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace nfmem::fitkit {

enum class ModelId { saturation, lorentzian_od, decay_lifetime, eit_spectrum };

struct ParameterInfo {
  std::string name;
  std::string unit;
  double default_guess;
  double lower;
  double upper;
  bool log_space;  // strictly positive parameter, fitted as log(p)
};

struct ModelInfo {
  ModelId id;
  std::string name;
  std::string x_unit;
  std::string y_unit;
  std::string formula;
  std::vector<ParameterInfo> parameters;
};

/// All models, in registry order.
const std::vector<ModelInfo>& models();
const ModelInfo& model_info(ModelId id);
/// Throws DomainError for unknown names.
ModelId model_from_string(std::string_view name);
std::string to_string(ModelId id);

/// Pointwise evaluation, identical to calling the owning module. Throws DomainError for
/// parameters outside the model's domain.
std::vector<double> evaluate_model(ModelId id, const std::vector<double>& parameters,
                                   const std::vector<double>& x);

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  /// Non-positive or NaN means "unweighted" (sigma = 1).
  double sigma = std::numeric_limits<double>::quiet_NaN();
};

struct Bound {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct FitProblem {
  ModelId model = ModelId::lorentzian_od;
  std::vector<DataPoint> data;
  std::vector<double> initial_guess;  // empty: registry defaults
  std::vector<Bound> bounds;          // empty: registry bounds
  std::set<std::string> frozen;
  int max_iterations = 200;

  /// Throws DomainError when the problem is ill-posed (too few points, guess outside bounds,
  /// unknown frozen name, mixed weighting).
  void validate() const;
};

struct FitResult {
  ModelId model = ModelId::lorentzian_od;
  std::vector<std::string> names;
  std::vector<std::string> units;
  std::vector<double> parameters;
  std::vector<double> uncertainties;  // 1 sigma; 0 for frozen, +inf for unidentifiable
  std::vector<bool> frozen;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  int degrees_of_freedom = 0;
  bool weighted = false;
  std::vector<double> residuals;  // y - model, in the sorted data order
  std::vector<double> sse_history;  // objective after each accepted step
  bool converged = false;
  int n_iterations = 0;
  std::vector<std::string> unidentifiable;
  std::string message;
};

/// Levenberg-Marquardt with a forward-difference Jacobian. Data are sorted by (x, y, sigma)
/// first, so the result does not depend on input order. Non-convergence returns
/// converged = false rather than throwing.
FitResult fit(const FitProblem& problem);

/// Independent fits, OpenMP-parallel; results in input order.
std::vector<FitResult> fit_batch(const std::vector<FitProblem>& problems);

namespace serial {
std::vector<FitResult> fit_batch(const std::vector<FitProblem>& problems);
}

/// Columns x, y[, sigma]. Blank lines, '#' comments and a non-numeric header row are skipped.
/// Throws DomainError on malformed rows.
std::vector<DataPoint> read_csv(std::istream& in);
std::vector<DataPoint> read_csv_file(const std::string& path);

nlohmann::ordered_json to_json(const FitResult& result);

}  // namespace nfmem::fitkit
