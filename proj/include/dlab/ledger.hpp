// Claim ledgers: named inequalities with the bound, the measured value and a
// pass flag. Informational entries carry values that are reported but not
// asserted.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace dlab {

/// Slack added to every claimed bound.
inline constexpr double kLedgerSlack = 1e-9;

struct Claim {
  std::string name;
  std::string formula;
  double claimed = 0.0;
  double measured = 0.0;
  bool pass = false;
};

struct InfoEntry {
  std::string name;
  double value = 0.0;
  std::string note;
};

class Ledger {
 public:
  /// Records measured <= claimed + kLedgerSlack and returns the verdict.
  bool claim(const std::string& name, const std::string& formula, double claimed, double measured);
  /// Records a claim whose verdict was decided elsewhere (exact identities).
  bool claim_flag(const std::string& name, const std::string& formula, double claimed, double measured, bool pass);
  void info(const std::string& name, double value, const std::string& note = "");

  /// Appends all entries of `other` with names prefixed by `prefix`.
  void merge(const std::string& prefix, const Ledger& other);

  bool all_pass() const;
  std::size_t failures() const;
  const std::vector<Claim>& claims() const { return claims_; }
  const std::vector<InfoEntry>& infos() const { return infos_; }

  nlohmann::ordered_json to_json() const;
  /// CSV rows "claimName,claimed,measured,pass" with a header line.
  std::string to_csv(const std::string& row_prefix_header = "", const std::string& row_prefix = "") const;

 private:
  std::vector<Claim> claims_;
  std::vector<InfoEntry> infos_;
};

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace dlab
