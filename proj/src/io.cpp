#include "dlab/io.hpp"

#include <cmath>
#include <fstream>

namespace dlab {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

std::int64_t get_int(const ojson& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<std::int64_t>();
}

double get_double(const ojson& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  double x = j.get<double>();
  if (!std::isfinite(x)) fail(where, "not finite");
  return x;
}

Rational get_rational(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) fail(where, "expected [numerator, denominator]");
  std::int64_t p = get_int(j[0], where + "[0]"), q = get_int(j[1], where + "[1]");
  if (q == 0) fail(where, "zero denominator");
  return Rational(p, q);
}

ojson rational_json(const Rational& r) { return ojson::array({r.numerator(), r.denominator()}); }

ojson cplx_json(cplx z) { return ojson::array({number(z.real()), number(z.imag())}); }

}  // namespace

ojson load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

PhaseEntry phase_entry_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object() || j.size() != 1) fail(where, "expected one of {\"rational\"}, {\"irrational\"}, {\"float\"}");
  try {
    if (j.contains("rational")) return PhaseEntry::rational(get_rational(j["rational"], where + ".rational"));
    if (j.contains("float")) return PhaseEntry::floating(get_double(j["float"], where + ".float"));
    if (j.contains("irrational")) {
      const auto& v = j["irrational"];
      const std::string w = where + ".irrational";
      if (!v.is_object() || !v.contains("tag") || !v["tag"].is_string() || !v.contains("approx"))
        fail(w, "expected {\"tag\": string, \"approx\": number}");
      const std::int64_t coeff = v.contains("coeff") ? get_int(v["coeff"], w + ".coeff") : 1;
      const Rational offset = v.contains("offset") ? get_rational(v["offset"], w + ".offset") : Rational(0);
      return PhaseEntry::irrational(v["tag"].get<std::string>(), get_double(v["approx"], w + ".approx"), coeff,
                                    offset);
    }
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
  fail(where, "unknown phase kind '" + j.begin().key() + "'");
}

ojson to_json(const PhaseEntry& e) {
  switch (e.kind) {
    case PhaseKind::Rational:
      return {{"rational", rational_json(e.offset)}};
    case PhaseKind::Irrational: {
      ojson v = {{"tag", e.tag}, {"approx", e.base}, {"coeff", e.coeff}};
      if (e.offset.numerator() != 0) v["offset"] = rational_json(e.offset);
      return {{"irrational", v}};
    }
    case PhaseKind::Float:
      return {{"float", e.value}};
  }
  return nullptr;
}

PhaseMatrix phase_matrix_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object() || !j.contains("d") || !j.contains("upper"))
    fail(where, "expected {\"d\": int, \"upper\": [...]}");
  const std::int64_t d = get_int(j["d"], where + ".d");
  if (d < 1 || d > 16) fail(where + ".d", "must lie in [1, 16]");
  const auto& up = j["upper"];
  if (!up.is_array()) fail(where + ".upper", "expected an array");
  const std::size_t expected = static_cast<std::size_t>(d * (d - 1) / 2);
  if (up.size() != expected)
    fail(where + ".upper", "expected " + std::to_string(expected) + " entries, got " + std::to_string(up.size()));
  std::vector<PhaseEntry> entries;
  for (std::size_t i = 0; i < up.size(); ++i)
    entries.push_back(phase_entry_from_json(up[i], where + ".upper[" + std::to_string(i) + "]"));
  try {
    return PhaseMatrix::from_upper(static_cast<int>(d), entries);
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

ojson to_json(const PhaseMatrix& theta) {
  ojson up = ojson::array();
  for (int k = 0; k < theta.d(); ++k)
    for (int l = k + 1; l < theta.d(); ++l) up.push_back(to_json(theta.entry(k, l)));
  return {{"d", theta.d()}, {"upper", up}};
}

CMatrix matrix_from_json(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty list of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) fail(where + "[0]", "expected a non-empty row");
  const std::size_t cols = j[0].size();
  CMatrix m(static_cast<long>(rows), static_cast<long>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string wr = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(wr, "expected " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) {
      const std::string w = wr + "[" + std::to_string(c) + "]";
      const auto& z = j[r][c];
      if (z.is_number()) {
        m(r, c) = get_double(z, w);
      } else if (z.is_array() && z.size() == 2) {
        m(r, c) = cplx(get_double(z[0], w + "[0]"), get_double(z[1], w + "[1]"));
      } else {
        fail(w, "expected a number or [re, im]");
      }
    }
  }
  return m;
}

ojson to_json(const CMatrix& m) {
  ojson rows = ojson::array();
  for (long r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(cplx_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

OperatorTuple tuple_from_json(const ojson& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty list of matrices");
  OperatorTuple t;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    t.push_back(matrix_from_json(j[i], w));
    if (t.back().rows() != t.back().cols()) fail(w, "matrix is not square");
    if (t.back().rows() != t.front().rows()) fail(w, "size differs from the first matrix");
  }
  return t;
}

ojson to_json(const OperatorTuple& t) {
  ojson out = ojson::array();
  for (const auto& m : t) out.push_back(to_json(m));
  return out;
}

ojson to_json(const Eigen::MatrixXd& m) {
  ojson rows = ojson::array();
  for (long r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(number(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

ojson to_json(const std::vector<double>& v) {
  ojson out = ojson::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

ojson to_json(const std::vector<cplx>& v) {
  ojson out = ojson::array();
  for (cplx z : v) out.push_back(cplx_json(z));
  return out;
}

ojson to_json(const StepCertificate& c) {
  return {{"m", c.m + 1},
          {"ringSize", c.ring_size},
          {"halfWidth", c.half_width},
          {"delta", number(c.delta)},
          {"defectIn", to_json(c.defect_in)},
          {"defectOut", to_json(c.defect_out)},
          {"wrap", to_json(c.wrap)},
          {"interiorMax", number(c.interior_max)},
          {"preservationMax", number(c.preservation_max)},
          {"errors", to_json(c.errors)},
          {"rawErrors", to_json(c.raw_errors)},
          {"stepError", number(c.step_error)},
          {"ledger", c.ledger.to_json()}};
}

ojson to_json(const DilationCertificate& c) {
  ojson steps = ojson::array();
  for (const auto& s : c.steps) steps.push_back(to_json(s));
  return {{"delta", number(c.delta)},
          {"halfWidth", c.half_width},
          {"ringSizes", c.ring_sizes},
          {"defectIn", to_json(c.defect_in)},
          {"defectOut", to_json(c.defect_out)},
          {"steps", steps},
          {"errorSum", number(c.error_sum)},
          {"totalError", number(c.total_error)},
          {"totalPerGenerator", to_json(c.total_per_generator)},
          {"ledger", c.ledger.to_json()}};
}

ojson to_json(const BlockDecomposition& b) {
  ojson out = ojson::array();
  for (const auto& blk : b.blocks) {
    const long dim = blk.block.empty() ? 0 : static_cast<long>(blk.block.front().total_dim());
    out.push_back({{"ell", blk.ell}, {"lambda", to_json(blk.lambda)}, {"blockDim", dim}});
  }
  return out;
}

ojson to_json(const ReverseStepResult& r) {
  ojson phases = ojson::array();
  for (const auto& p : r.phases) phases.push_back(to_json(p));
  return {{"m", r.m + 1},
          {"ring1", r.decomposition.ring1},
          {"ring2", r.decomposition.ring2},
          {"baseDim", r.decomposition.base_dim},
          {"phases", phases},
          {"deltaIn", number(r.delta_in)},
          {"halfWidth", r.half_width},
          {"errors", to_json(r.errors)},
          {"compressionError", number(r.compression_error)},
          {"blocks", to_json(r.decomposition)},
          {"ledger", r.ledger.to_json()}};
}

ojson to_json(const ErgodicityReport& r) {
  ojson out = {{"verdict", to_string(r.verdict)}};
  out["etaQ"] = r.eta_q ? number(*r.eta_q) : ojson(nullptr);
  out["witness"] = r.witness.empty() ? ojson(nullptr) : ojson(r.witness);
  out["annihilator"] = r.annihilator;
  if (!r.note.empty()) out["note"] = r.note;
  return out;
}

ojson to_json(const EpsDeltaPlan& p) {
  return {{"d", p.d},
          {"epsilon", number(p.epsilon)},
          {"eta", number(p.eta)},
          {"Neta", p.n_eta},
          {"delta", number(p.delta)},
          {"deltaGridIndex", p.delta_grid_index},
          {"budget", number(p.budget)},
          {"residual", number(p.residual)},
          {"bound", number(p.bound)}};
}

ojson to_json(const SamplingMeta& m) {
  return {{"scheme", m.scheme},
          {"directions", m.directions},
          {"resolution", m.resolution >= 0 ? number(m.resolution) : ojson(nullptr)},
          {"seed", m.seed}};
}

ojson to_json(const SeparationCertificate& c) {
  ojson dir = ojson::array();
  for (const auto& b : c.direction) dir.push_back(to_json(b));
  return {{"direction", dir},
          {"lambdaTarget", number(c.lambda_target)},
          {"lambdaSource", number(c.lambda_source)},
          {"gap", number(c.gap)},
          {"distanceBound", number(c.distance_bound)}};
}

}  // namespace dlab
