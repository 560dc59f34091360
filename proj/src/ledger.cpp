#include "dlab/ledger.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace dlab {

bool Ledger::claim(const std::string& name, const std::string& formula, double claimed, double measured) {
  bool pass = std::isfinite(measured) && measured <= claimed + kLedgerSlack;
  claims_.push_back({name, formula, claimed, measured, pass});
  return pass;
}

bool Ledger::claim_flag(const std::string& name, const std::string& formula, double claimed, double measured,
                        bool pass) {
  claims_.push_back({name, formula, claimed, measured, pass});
  return pass;
}

void Ledger::info(const std::string& name, double value, const std::string& note) {
  infos_.push_back({name, value, note});
}

void Ledger::merge(const std::string& prefix, const Ledger& other) {
  for (auto c : other.claims_) {
    c.name = prefix + c.name;
    claims_.push_back(std::move(c));
  }
  for (auto i : other.infos_) {
    i.name = prefix + i.name;
    infos_.push_back(std::move(i));
  }
}

bool Ledger::all_pass() const { return failures() == 0; }

std::size_t Ledger::failures() const {
  std::size_t n = 0;
  for (const auto& c : claims_) n += c.pass ? 0 : 1;
  return n;
}

nlohmann::ordered_json Ledger::to_json() const {
  nlohmann::ordered_json claims = nlohmann::ordered_json::array();
  for (const auto& c : claims_)
    claims.push_back({{"name", c.name},
                      {"formula", c.formula},
                      {"claimed", c.claimed},
                      {"measured", c.measured},
                      {"pass", c.pass}});
  nlohmann::ordered_json info = nlohmann::ordered_json::array();
  for (const auto& i : infos_) {
    nlohmann::ordered_json e = {{"name", i.name}, {"value", i.value}};
    if (!i.note.empty()) e["note"] = i.note;
    info.push_back(std::move(e));
  }
  return {{"claims", std::move(claims)}, {"info", std::move(info)}, {"allPass", all_pass()}};
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string Ledger::to_csv(const std::string& row_prefix_header, const std::string& row_prefix) const {
  std::ostringstream out;
  out << row_prefix_header << "claimName,claimed,measured,pass\n";
  for (const auto& c : claims_)
    out << row_prefix << csv_field(c.name) << ',' << format_double(c.claimed) << ',' << format_double(c.measured) << ','
        << (c.pass ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace dlab
