// JSON forms of phases, matrices, tuples and module results.
//
// Phase entries (turns):
//     {"rational": [p, q]}
//     {"irrational": {"tag": "golden", "approx": 0.618..., "coeff": 1, "offset": [p, q]}}
//     {"float": x}
// Phase matrices: {"d": d, "upper": [entry, ...]} with the strict upper
// triangle listed row by row. Matrices: a list of rows, each a list of
// [re, im] pairs. Non-finite numbers are written as null.

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dlab/dilation.hpp"
#include "dlab/mrange.hpp"
#include "dlab/reverse.hpp"
#include "dlab/torus.hpp"

namespace dlab {

using ojson = nlohmann::ordered_json;

/// Malformed input; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ojson load_json_file(const std::filesystem::path& path);

/// null for NaN and infinities.
ojson number(double x);

PhaseEntry phase_entry_from_json(const ojson& j, const std::string& where);
ojson to_json(const PhaseEntry& e);
PhaseMatrix phase_matrix_from_json(const ojson& j, const std::string& where);
ojson to_json(const PhaseMatrix& theta);

CMatrix matrix_from_json(const ojson& j, const std::string& where);
ojson to_json(const CMatrix& m);
OperatorTuple tuple_from_json(const ojson& j, const std::string& where);
ojson to_json(const OperatorTuple& t);

ojson to_json(const Eigen::MatrixXd& m);
ojson to_json(const std::vector<double>& v);
ojson to_json(const std::vector<cplx>& v);

ojson to_json(const StepCertificate& c);
ojson to_json(const DilationCertificate& c);
/// List of {"ell", "lambda": [[re, im], ...], "blockDim"}.
ojson to_json(const BlockDecomposition& b);
ojson to_json(const ReverseStepResult& r);

ojson to_json(const ErgodicityReport& r);
ojson to_json(const EpsDeltaPlan& p);

ojson to_json(const SamplingMeta& m);
ojson to_json(const SeparationCertificate& c);

}  // namespace dlab
