#pragma once

// Declared run parameters. Every key carries its unit in the name (control.power_mW,
// probe.fwhm_ns); values are kept as canonical text and converted to SI by the scenarios.
//
// Resolution order: table defaults, scenario defaults, INI file, --set overrides.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nfmem::config {

enum class Kind { real, integer, choice, list };

struct ParamSpec {
  std::string key;
  Kind kind;
  std::string default_value;
  std::string unit;
  std::string doc;
  std::vector<std::string> choices;  // Kind::choice only
};

/// Stable order: the order of the table is the order of every echo.
const std::vector<ParamSpec>& parameter_table();
/// Throws DomainError for undeclared keys.
const ParamSpec& spec(std::string_view key);

/// 12 significant digits, the format used in every output.
std::string format_number(double v);

class Config {
 public:
  Config();

  /// Throws DomainError for undeclared keys or values of the wrong type.
  void set(const std::string& key, const std::string& value);
  /// "key=value".
  void set_assignment(const std::string& assignment);
  /// INI with [section] headers; "power_mW = 0.5" under [control] sets control.power_mW.
  void load_ini(const std::string& path);

  double real(std::string_view key) const;
  int integer(std::string_view key) const;
  const std::string& choice(std::string_view key) const;
  std::vector<double> list(std::string_view key) const;
  const std::string& text(std::string_view key) const;

  /// (key, canonical value) in table order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  /// FNV-1a 64 over the entries and `context`, as 16 hex digits.
  std::string digest(const std::string& context) const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace nfmem::config
