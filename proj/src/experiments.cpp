#include "dlab/experiments.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dlab/generators.hpp"
#include "dlab/parallel.hpp"
#include "dlab/random.hpp"

namespace dlab {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

const ojson& require(const ojson& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, "missing key \"" + key + "\"");
  return j[key];
}

long get_long(const ojson& j, const std::string& key, long fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) fail(where + "." + key, "expected an integer");
  return j[key].get<long>();
}

double get_number(const ojson& j, const std::string& key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number() || !std::isfinite(j[key].get<double>())) fail(where + "." + key, "expected a number");
  return j[key].get<double>();
}

std::string get_string(const ojson& j, const std::string& key, const std::string& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(where + "." + key, "expected a string");
  return j[key].get<std::string>();
}

/// Inline objects pass through; strings name a JSON file relative to the config.
ojson resolve(const ojson& j, const fs::path& base) {
  if (j.is_string()) {
    fs::path p(j.get<std::string>());
    return load_json_file(p.is_absolute() ? p : base / p);
  }
  return j;
}

PhaseMatrix read_theta(const ojson& j, const fs::path& base, const std::string& where) {
  const std::string w = j.is_string() ? j.get<std::string>() : where;
  ojson doc = resolve(j, base);
  if (doc.is_object() && doc.contains("theta") && !doc.contains("d")) doc = doc["theta"];
  return phase_matrix_from_json(doc, w);
}

CMatrix shift_diagonal_d(const PhaseEntry& r, long ring) {
  CMatrix d = CMatrix::Zero(ring, ring);
  for (long t = 0; t < ring; ++t) d(t, t) = r.power(t);
  return d;
}

OperatorTuple read_tuple(const ojson& spec, const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t stream,
                         const PhaseMatrix* theta, const std::string& where) {
  ojson s = resolve(spec, cfg.base_dir);
  if (!s.is_object()) fail(where, "expected an object");
  if (s.contains("matrices")) return tuple_from_json(s["matrices"], where + ".matrices");
  if (s.contains("file")) {
    ojson doc = resolve(s["file"], cfg.base_dir);
    const std::string w = s["file"].is_string() ? s["file"].get<std::string>() : where + ".file";
    return tuple_from_json(doc.is_object() ? require(doc, "matrices", w) : doc, w + ".matrices");
  }
  const std::string gen = get_string(s, "generator", "", where);
  const std::string w = where + "(" + gen + ")";
  try {
    if (gen == "weyl") {
      PhaseMatrix base = s.contains("base") ? read_theta(s["base"], cfg.base_dir, where + ".base")
                                            : (theta ? *theta : throw ConfigError(where + ": needs \"base\""));
      OperatorTuple t = weyl_tuple(base).matrices();
      const long k = get_long(s, "ampliation", 1, where);
      if (k < 1) fail(where + ".ampliation", "must be positive");
      for (auto& m : t) m = kron(m, identity(k));
      return t;
    }
    if (gen == "shift_diagonal") {
      PhaseEntry r = phase_entry_from_json(require(s, "r", where), where + ".r");
      if (r.kind != PhaseKind::Rational) fail(where + ".r", "must be rational");
      const long ring = get_long(s, "ring", static_cast<long>(r.offset.denominator()), where);
      if (ring < 2 || ring % r.offset.denominator() != 0)
        fail(where + ".ring", "must be a multiple of the denominator of r");
      return {shift_matrix(ring), shift_diagonal_d(r, ring)};
    }
    if (gen == "random_almost") {
      if (!theta) fail(where, "random_almost needs a target phase matrix");
      PhaseMatrix base = read_theta(require(s, "base", where), cfg.base_dir, where + ".base");
      const long dim = get_long(s, "dim", 0, where);
      const double delta = get_number(s, "delta", 0.0, where);
      Rng rng = task_rng(seed, stream);
      return random_almost_tuple(rng, base, dim, *theta, delta).matrices();
    }
    if (gen == "haar") {
      const long d = get_long(s, "d", 0, where), dim = get_long(s, "dim", 0, where);
      if (d < 1 || dim < 1) fail(where, "haar needs positive \"d\" and \"dim\"");
      Rng rng = task_rng(seed, stream);
      OperatorTuple t;
      for (long i = 0; i < d; ++i) t.push_back(haar_unitary(rng, dim));
      return t;
    }
  } catch (const std::invalid_argument& e) {
    fail(w, e.what());
  }
  fail(where, "unknown tuple source; expected matrices, file or generator");
}

UnitaryTuple as_unitary(OperatorTuple t, const ExperimentConfig& cfg, const std::string& where) {
  try {
    return UnitaryTuple(std::move(t), cfg.tol.value_or(kUnitarityTol));
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

void append_rows(std::string& out, const Ledger& lg, const std::string& seed, const std::string& step,
                 const std::string& skip_prefix = "") {
  for (const auto& c : lg.claims()) {
    if (!skip_prefix.empty() && c.name.rfind(skip_prefix, 0) == 0) continue;
    out += seed + "," + step + "," + csv_field(c.name) + "," + format_double(c.claimed) + "," +
           format_double(c.measured) + "," + (c.pass ? "true" : "false") + "\n";
  }
}

const std::string kLedgerHeader = "seed,step,claimName,claimed,measured,pass\n";

ojson config_echo(const ExperimentConfig& cfg) {
  ojson echo = cfg.raw;
  echo["seeds"] = cfg.seeds;
  if (cfg.tol) echo["tol"] = *cfg.tol;
  echo.erase("output");
  return echo;
}

Report start(const ExperimentConfig& cfg, const std::string& command) {
  Report r;
  r.command = command;
  r.json["command"] = command;
  r.json["config"] = config_echo(cfg);
  r.json["normChoice"] = kNormChoice;
  r.csv = kLedgerHeader;
  return r;
}

/// Runs fn(i) for each seed index on the worker pool; results are kept in seed
/// order and the first failure (in that order) is rethrown.
template <class Fn>
void for_each_seed(std::size_t n, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  parallel_chunks(n, [&](int, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

DilationOptions read_truncation(const ojson& raw) {
  DilationOptions opt;
  if (raw.contains("truncation")) {
    const auto& t = raw["truncation"];
    opt.ring_size = get_long(t, "L", 0, "truncation");
    opt.half_width = get_long(t, "N", -1, "truncation");
    if (opt.ring_size != 0 && opt.ring_size < 4) fail("truncation.L", "must be at least 4");
  }
  return opt;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_double(v[i]);
  return s;
}

/// The character m is an exact witness: sum_k m_k theta_{k,l} is an integer for every column.
bool witness_is_exact(const PhaseMatrix& theta, const std::vector<std::int64_t>& m) {
  if (static_cast<int>(m.size()) != theta.d()) return false;
  if (std::all_of(m.begin(), m.end(), [](std::int64_t x) { return x == 0; })) return false;
  for (int l = 0; l < theta.d(); ++l) {
    Rational off(0);
    std::int64_t coeff = 0;
    for (int k = 0; k < theta.d(); ++k) {
      const auto& e = theta.entry(k, l);
      if (e.kind == PhaseKind::Float) return false;
      off += Rational(m[k]) * e.offset;
      coeff += m[k] * e.coeff;
    }
    if (coeff != 0 || off.denominator() != 1) return false;
  }
  return true;
}

/// Independent re-check of a plan: N_eta from the word-ball distance, then the
/// three inequalities recomputed from scratch.
void check_plan(Ledger& lg, const PhaseMatrix& theta, const EpsDeltaPlan& p) {
  const double budget = p.epsilon * p.epsilon / 200.0;
  const double dm1 = theta.d() - 1;
  lg.claim_flag("plan: eta below budget", "eta < eps^2/200", budget, p.eta, p.eta < budget);
  const double used = static_cast<double>(p.n_eta) * p.delta + dm1 * std::sqrt(p.delta);
  lg.claim_flag("plan: delta budget", "N_eta delta + (d-1) sqrt(delta) < eps^2/200", budget, used, used < budget);
  const double bound = 10.0 * std::sqrt(used + p.eta);
  lg.claim_flag("plan: final bound", "10 sqrt(N_eta delta + eta + (d-1) sqrt(delta)) < eps", p.epsilon, bound,
                bound < p.epsilon);
  if (theta.d() == 2) {
    const double at = word_ball_hausdorff(theta, p.n_eta);
    const double before = p.n_eta > 0 ? word_ball_hausdorff(theta, p.n_eta - 1) : 2.0;
    lg.claim_flag("plan: N_eta reaches eta", "d_H(T^d, S_Q(N_eta)) < eta", p.eta, at, at < p.eta);
    lg.claim_flag("plan: N_eta is least", "d_H(T^d, S_Q(N_eta - 1)) >= eta", p.eta, before, before >= p.eta);
  }
}

}  // namespace

ExperimentConfig config_from_json(const std::string& command, const ojson& raw, const fs::path& base_dir) {
  if (!raw.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.command = command;
  cfg.raw = raw;
  cfg.base_dir = base_dir;
  if (raw.contains("command")) {
    if (!raw["command"].is_string() || raw["command"].get<std::string>() != command)
      fail("config.command", "does not match the subcommand '" + command + "'");
  }
  if (raw.contains("seeds")) {
    const auto& s = raw["seeds"];
    if (!s.is_array() || s.empty()) fail("config.seeds", "expected a non-empty array");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_unsigned()) fail("config.seeds[" + std::to_string(i) + "]", "expected an unsigned integer");
      cfg.seeds.push_back(s[i].get<std::uint64_t>());
    }
  } else if (raw.contains("seed")) {
    if (!raw["seed"].is_number_unsigned()) fail("config.seed", "expected an unsigned integer");
    cfg.seeds = {raw["seed"].get<std::uint64_t>()};
  }
  if (raw.contains("tol")) {
    double t = get_number(raw, "tol", 0.0, "config");
    if (!(t > 0.0)) fail("config.tol", "must be positive");
    cfg.tol = t;
  }
  if (raw.contains("output")) {
    const auto& o = raw["output"];
    if (!o.is_object()) fail("config.output", "expected an object");
    if (o.contains("dir")) cfg.out_dir = get_string(o, "dir", ".", "config.output");
    cfg.format = get_string(o, "format", cfg.format, "config.output");
  }
  if (cfg.format != "json" && cfg.format != "csv" && cfg.format != "both")
    fail("config.output.format", "expected json, csv or both");
  return cfg;
}

ExperimentConfig load_config(const std::string& command, const fs::path& path) {
  return config_from_json(command, load_json_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

// ---------------------------------------------------------------------------

Report cmd_dilate(const ExperimentConfig& cfg) {
  Report rep = start(cfg, "dilate");
  const PhaseMatrix theta = read_theta(require(cfg.raw, "theta", "config"), cfg.base_dir, "theta");
  const DilationOptions opt = read_truncation(cfg.raw);
  const ojson& spec = require(cfg.raw, "tuple", "config");

  const std::size_t n = cfg.seeds.size();
  std::vector<ojson> runs(n);
  std::vector<std::string> rows(n), summary(n);
  std::vector<char> pass(n, 1);
  for_each_seed(n, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    UnitaryTuple u = as_unitary(read_tuple(spec, cfg, seed, 0, &theta, "tuple"), cfg, "tuple");
    if (u.d() != theta.d()) fail("tuple", "has " + std::to_string(u.d()) + " generators, theta has d = " +
                                              std::to_string(theta.d()));
    FullDilation fd = dilate_full(u, theta, opt);
    const auto& c = fd.cert;
    const std::string s = std::to_string(seed);
    for (const auto& st : c.steps) append_rows(rows[i], st.ledger, s, std::to_string(st.m + 1));
    append_rows(rows[i], c.ledger, s, "total", "step ");
    std::vector<double> step_errors, rings;
    for (const auto& st : c.steps) step_errors.push_back(st.step_error);
    for (long L : c.ring_sizes) rings.push_back(static_cast<double>(L));
    pass[i] = c.ledger.all_pass();
    summary[i] = s + "," + format_double(c.delta) + "," + std::to_string(c.half_width) + "," + join(rings) + "," +
                 join(step_errors) + "," + format_double(c.error_sum) + "," + format_double(c.total_error) + "," +
                 (pass[i] ? "pass" : "fail") + "\n";
    runs[i] = {{"seed", seed}, {"theta", to_json(theta)}, {"dim", u.dim()}, {"certificate", to_json(c)}};
  });
  rep.summary_csv = "seed,delta,N,L,stepErrors,errorSum,totalError,verdict\n";
  for (std::size_t i = 0; i < n; ++i) {
    rep.csv += rows[i];
    rep.summary_csv += summary[i];
    rep.pass = rep.pass && pass[i];
  }
  rep.json["runs"] = runs;
  rep.json["allPass"] = rep.pass;
  return rep;
}

Report cmd_reverse(const ExperimentConfig& cfg) {
  Report rep = start(cfg, "reverse");
  const PhaseMatrix theta = read_theta(require(cfg.raw, "theta", "config"), cfg.base_dir, "theta");
  UtagOptions opt;
  opt.forward = read_truncation(cfg.raw);
  if (cfg.raw.contains("truncation")) opt.ring2 = get_long(cfg.raw["truncation"], "L2", 0, "truncation");
  const ojson& spec = require(cfg.raw, "tuple", "config");

  const std::size_t n = cfg.seeds.size();
  std::vector<ojson> runs(n);
  std::vector<std::string> rows(n);
  std::vector<char> pass(n, 1);
  for_each_seed(n, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    UnitaryTuple u = as_unitary(read_tuple(spec, cfg, seed, 0, &theta, "tuple"), cfg, "tuple");
    if (u.d() != theta.d()) fail("tuple", "generator count differs from theta");
    UtagResult res = utag_pipeline(u, theta, opt);
    const std::string s = std::to_string(seed);
    append_rows(rows[i], res.ledger, s, "pipeline");
    ojson steps = ojson::array();
    for (const auto& r : res.reverse) steps.push_back(to_json(r));
    runs[i] = {{"seed", seed},
               {"theta", to_json(theta)},
               {"dim", u.dim()},
               {"forward", to_json(res.forward.cert)},
               {"reverse", steps},
               {"gaugeSetSize", res.lambda.size()},
               {"forwardError", number(res.forward_error)},
               {"reverseError", number(res.reverse_error)},
               {"wrapAllowance", number(res.wrap_allowance)},
               {"ledger", res.ledger.to_json()}};
    pass[i] = res.ledger.all_pass();
  });
  for (std::size_t i = 0; i < n; ++i) {
    rep.csv += rows[i];
    rep.pass = rep.pass && pass[i];
  }
  rep.json["runs"] = runs;
  rep.json["allPass"] = rep.pass;
  return rep;
}

Report cmd_torus(const ExperimentConfig& cfg) {
  Report rep = start(cfg, "torus");
  const PhaseMatrix theta = read_theta(require(cfg.raw, "theta", "config"), cfg.base_dir, "theta");
  Ledger lg;
  ErgodicityReport er;
  try {
    er = ergodicity_test(theta);
  } catch (const std::invalid_argument& e) {
    fail("theta", e.what());
  }
  ojson out = to_json(er);
  if (er.verdict == Ergodicity::NonErgodic)
    lg.claim_flag("witness annihilates every column", "sum_k m_k theta_{k,l} in Z, m != 0", 0.0, 0.0,
                  witness_is_exact(theta, er.witness));

  out["Neta"] = nullptr;
  if (cfg.raw.contains("eta")) {
    const double eta = get_number(cfg.raw, "eta", 0.0, "config");
    if (!(eta > 0.0)) fail("config.eta", "must be positive");
    if (er.eta_q && eta <= *er.eta_q) fail("config.eta", "must exceed eta_Q = " + format_double(*er.eta_q));
    NEtaResult ne = find_N_eta(theta, eta);
    out["Neta"] = {{"eta", eta},
                   {"n", ne.n_eta},
                   {"hausdorff", number(ne.hausdorff)},
                   {"hausdorffPrev", number(ne.hausdorff_prev)},
                   {"method", ne.method}};
    lg.claim_flag("N_eta reaches eta", "d_H(T^d, S_Q(N_eta)) < eta", eta, ne.hausdorff, ne.hausdorff < eta);
    if (theta.d() <= 2 && ne.n_eta > 0) {
      const double prev = word_ball_hausdorff(theta, ne.n_eta - 1);
      lg.claim_flag("N_eta is least", "d_H(T^d, S_Q(N_eta - 1)) >= eta", eta, prev, prev >= eta);
    }
  }

  out["plan"] = nullptr;
  if (cfg.raw.contains("epsilon")) {
    const double eps = get_number(cfg.raw, "epsilon", 0.0, "config");
    if (!(eps > 0.0)) fail("config.epsilon", "must be positive");
    if (er.verdict != Ergodicity::Ergodic) {
      out["planNote"] = std::string("no plan: phase matrix is ") + to_string(er.verdict);
    } else if (eps > 2.0) {
      out["plan"] = {{"epsilon", eps}, {"trivial", true}};
      lg.claim_flag("trivial plan", "d_HR <= 2 < eps", eps, 2.0, 2.0 < eps);
    } else {
      EpsDeltaPlan p = eps_delta_plan(theta, eps);
      out["plan"] = to_json(p);
      check_plan(lg, theta, p);
    }
  }
  for (auto it = out.begin(); it != out.end(); ++it) rep.json[it.key()] = it.value();
  rep.json["ledger"] = lg.to_json();
  append_rows(rep.csv, lg, std::to_string(cfg.seeds.front()), "torus");
  rep.pass = lg.all_pass();
  rep.json["allPass"] = rep.pass;
  return rep;
}

Report cmd_mrange(const ExperimentConfig& cfg) {
  Report rep = start(cfg, "mrange");
  const auto& raw = cfg.raw;
  const std::string task = get_string(raw, "task", "membership", "config");
  const std::uint64_t seed = cfg.seeds.front();
  const OperatorTuple a = read_tuple(require(raw, "source", "config"), cfg, seed, 0, nullptr, "source");
  Ledger lg;
  ojson out;

  auto read_other = [&](const std::string& key) {
    return read_tuple(require(raw, key, "config"), cfg, seed, 1, nullptr, key);
  };

  if (task == "membership") {
    OperatorTuple x;
    const ojson& t = require(raw, "target", "config");
    if (t.is_object() && t.contains("compression")) {
      const auto& c = t["compression"];
      const long n = get_long(c, "dim", 1, "target.compression");
      if (n < 1 || n > a.front().rows()) fail("target.compression.dim", "must lie in [1, source dimension]");
      Rng rng = task_rng(seed, 1);
      CMatrix v = random_isometry(rng, a.front().rows(), n);
      for (const auto& ai : a) x.push_back(v.adjoint() * ai * v);
      if (c.contains("scaleFirstTo")) {
        const double s = get_number(c, "scaleFirstTo", 1.0, "target.compression");
        x[0] *= s / operator_norm(x[0]);
      }
    } else {
      x = read_tuple(t, cfg, seed, 1, nullptr, "target");
    }
    if (x.size() != a.size()) fail("target", "generator count differs from the source");
    const double tol = cfg.tol.value_or(kMembershipTol);
    const int max_iter = static_cast<int>(get_long(raw, "maxIter", kMembershipMaxIter, "config"));
    MembershipResult m = ucp_membership(a, x, tol, max_iter, seed);
    out["level"] = x.front().rows();
    out["status"] = to_string(m.status);
    out["residual"] = number(m.residual);
    out["iterations"] = m.iterations;
    out["certificate"] = m.has_certificate ? to_json(m.certificate) : ojson(nullptr);
    out["samplingMeta"] = {{"scheme", "certificate search by eigenvector ascent"},
                           {"directions", nullptr},
                           {"resolution", nullptr},
                           {"seed", seed}};
    if (m.status == Membership::Member) {
      lg.claim("UCP map reproduces the target", "max_i ||phi(A_i) - X_i|| <= tol", tol, m.residual);
      lg.claim_flag("map is UCP", "J >= 0 and sum_a J_aa = I within 1e-9", 1e-9,
                    std::max(-m.choi.min_eigenvalue(), m.choi.unitality_defect()), m.choi.is_ucp());
    } else if (m.status == Membership::NonMember) {
      auto again = evaluate_certificate(a, x, m.certificate.direction);
      lg.claim_flag("separation certificate", "lambda_max(B.X) - lambda_max(B.A) > 1e-8", kCertificateGap, again.gap,
                    again.gap > kCertificateGap);
    } else {
      lg.claim_flag("verdict decided", "member or certified non-member", 0.0, m.residual, false);
    }
  } else if (task == "hausdorff") {
    const OperatorTuple b = read_other("other");
    const long K = get_long(raw, "directions", 720, "config");
    W1Hausdorff w = w1_hausdorff(a, b, K);
    out["level"] = 1;
    out["status"] = "computed";
    out["value"] = number(w.value);
    out["residual"] = nullptr;
    out["certificate"] = nullptr;
    out["direction"] = to_json(w.direction);
    out["samplingMeta"] = to_json(w.meta);
    lg.claim_flag("sampled Hausdorff is finite", "0 <= value <= ||A|| + ||B||", 0.0, w.value,
                  std::isfinite(w.value) && w.value >= 0.0);
  } else if (task == "dmr" || task == "drd") {
    const OperatorTuple b = read_other("other");
    if (task == "dmr") {
      const int level = static_cast<int>(get_long(raw, "level", 1, "config"));
      const long samples = get_long(raw, "samples", 16, "config");
      OneSidedEstimate e = dmr_one_sided(a, b, level, samples, seed);
      out["level"] = e.level;
      out["status"] = "estimated";
      out["lower"] = number(e.lower);
      out["upper"] = number(e.upper);
      out["residual"] = nullptr;
      out["certificate"] = nullptr;
      out["samples"] = e.samples;
      out["samplingMeta"] = to_json(e.meta);
      lg.claim("certified lower bound below the estimate", "lower <= upper", e.upper + 1e-6, e.lower);
    } else {
      UcpDistance u = drd_estimate(a, b);
      out["level"] = a.front().rows();
      out["status"] = "estimated";
      out["value"] = number(u.value);
      out["residual"] = nullptr;
      out["certificate"] = nullptr;
      out["iterations"] = u.iterations;
      out["samplingMeta"] = nullptr;
      lg.claim_flag("returned map is UCP", "J >= 0 and sum_a J_aa = I within 1e-9", 1e-9,
                    std::max(-u.choi.min_eigenvalue(), u.choi.unitality_defect()), u.choi.is_ucp());
    }
  } else {
    fail("config.task", "expected membership, hausdorff, dmr or drd");
  }
  for (auto it = out.begin(); it != out.end(); ++it) rep.json[it.key()] = it.value();
  rep.json["ledger"] = lg.to_json();
  append_rows(rep.csv, lg, std::to_string(seed), task);
  rep.pass = lg.all_pass();
  rep.json["allPass"] = rep.pass;
  return rep;
}

// ---------------------------------------------------------------------------

Report cmd_main2_demo(const ExperimentConfig& cfg) {
  Report rep = start(cfg, "demo-main2");
  const auto& raw = cfg.raw;
  const long n = get_long(raw, "n", 34, "config");
  if (n < 2 || n > 64) fail("config.n", "must lie in [2, 64]");
  const PhaseEntry gamma = phase_entry_from_json(require(raw, "gamma", "config"), "gamma");
  const double eps = get_number(raw, "epsilon", 2.0, "config");
  if (!(eps > 0.0)) fail("config.epsilon", "must be positive");
  const std::string pair = get_string(raw, "pair", "weyl", "config");
  const long gauge_samples = get_long(raw, "gaugeSamples", 4, "config");
  const long directions = get_long(raw, "directions", 64, "config");
  const std::uint64_t seed = cfg.seeds.front();

  const PhaseMatrix theta = PhaseMatrix::pair(gamma);
  ErgodicityReport er = ergodicity_test(theta);
  if (er.verdict != Ergodicity::Ergodic)
    throw ConfigError(std::string("gamma: non-ergodic target (") + to_string(er.verdict) + ")");

  // Nearest n-th root of unity r = e^{2 pi i p/n}.
  const long p = static_cast<long>(std::llround(gamma.approx() * static_cast<double>(n))) % n;
  const PhaseEntry r = PhaseEntry::rational(p, n);
  const PhaseMatrix rtheta = PhaseMatrix::pair(r);
  OperatorTuple pair_ops;
  if (pair == "weyl") {
    pair_ops = weyl_tuple(rtheta).matrices();
    const long k = n / static_cast<long>(pair_ops.front().rows());
    for (auto& m : pair_ops) m = kron(m, identity(k));
  } else if (pair == "shift_diagonal") {
    const long ring = get_long(raw, "ring", n, "config");
    if (ring < 2 || ring > 64 || ring % r.offset.denominator() != 0)
      fail("config.ring", "must be a multiple of the denominator of r, at most 64");
    pair_ops = {shift_matrix(ring), shift_diagonal_d(r, ring)};
  } else {
    fail("config.pair", "expected weyl or shift_diagonal");
  }
  UnitaryTuple u(pair_ops);

  Ledger lg;
  const double exact = max_defect(commutation_defect(u, rtheta));
  lg.claim("pair is exactly r-commuting", "||vu - r uv|| <= 1e-12", 1e-12, exact);
  const double delta = max_defect(commutation_defect(u, theta));
  const double gap = std::abs(unit_phase(gamma.approx()) - unit_phase(r.approx()));
  lg.claim_flag("defect equals the phase gap", "| ||vu - q uv|| - |q - r| | <= 1e-12", gap, delta,
                std::abs(delta - gap) <= 1e-12);
  const double dm1 = 1.0;

  // Plan for epsilon, re-validated independently.
  ojson plan_json;
  double eta = 0.0;
  long n_eta = 0;
  bool applies = false;
  if (eps > 2.0) {
    // Every pair is within 2 of any other in d_HR, so any delta works.
    plan_json = {{"epsilon", eps}, {"trivial", true}};
    lg.claim_flag("trivial plan", "d_HR <= 2 < eps", eps, 2.0, 2.0 < eps);
    eta = 0.01;
    n_eta = find_N_eta(theta, eta).n_eta;
    applies = true;
  } else {
    EpsDeltaPlan plan = eps_delta_plan(theta, eps);
    plan_json = to_json(plan);
    check_plan(lg, theta, plan);
    eta = plan.eta;
    n_eta = plan.n_eta;
    applies = delta < plan.delta;
  }
  lg.info("plan applies to the measured delta", applies ? 1.0 : 0.0,
          "1 when the measured defect is below the planned delta");

  // Almost gauge invariance with the plan's eta, and the best eta on a grid.
  const double gauge_eps = static_cast<double>(n_eta) * delta + eta;
  const double formula = 10.0 * std::sqrt(gauge_eps + dm1 * std::sqrt(delta));
  double best_eta = eta, best_eps = gauge_eps;
  long best_n = n_eta;
  for (double e : {0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
    const long ne = find_N_eta(theta, e).n_eta;
    const double ge = static_cast<double>(ne) * delta + e;
    if (ge < best_eps) {
      best_eps = ge;
      best_eta = e;
      best_n = ne;
    }
  }
  const double best_formula = 10.0 * std::sqrt(best_eps + dm1 * std::sqrt(delta));
  lg.info("gauge epsilon N_eta delta + eta", gauge_eps);
  lg.info("final bound 10 sqrt(N_eta delta + eta + (d-1) sqrt(delta))", formula);
  lg.info("final bound at the best grid eta", best_formula);

  // Level-1 shadow of almost gauge invariance: d_H(W_1(U), W_1(lambda U)) <= d_mr(U, lambda U).
  ojson gauge = ojson::array();
  Rng rng = task_rng(seed, 7);
  std::uniform_real_distribution<double> turn(0.0, 1.0);
  double worst = 0.0;
  for (long k = 0; k < gauge_samples; ++k) {
    std::vector<cplx> lambda{unit_phase(turn(rng)), unit_phase(turn(rng))};
    if (k == 0) lambda = {-1.0, -1.0};
    W1Hausdorff w = w1_hausdorff(u.matrices(), gauge_rotate(u.matrices(), lambda), directions);
    worst = std::max(worst, w.value);
    gauge.push_back({{"lambda", to_json(lambda)}, {"w1Hausdorff", number(w.value)}, {"samplingMeta", to_json(w.meta)}});
  }
  lg.claim("level-1 gauge distance", "d_H(W_1(U), W_1(lambda U)) <= N_eta delta + eta", gauge_eps, worst);

  // Forward and reverse chains toward q.
  UtagResult res = utag_pipeline(u, theta);
  lg.merge("pipeline: ", res.ledger);
  lg.claim("forward error within the main bound", "d_rD(U -> V_Theta) < eps_gauge + (d-1) sqrt(delta)",
           gauge_eps + dm1 * std::sqrt(delta), res.forward_error);
  lg.claim("chain total", "forward + reverse <= 2 (d-1) sqrt(delta) + wraparound allowance",
           2.0 * dm1 * std::sqrt(delta) + res.wrap_allowance, res.forward_error + res.reverse_error);

  ojson steps = ojson::array();
  for (const auto& st : res.reverse) steps.push_back(to_json(st));
  const auto& fc = res.forward.cert;
  rep.json["pair"] = pair;
  rep.json["n"] = n;
  rep.json["gamma"] = to_json(gamma);
  rep.json["r"] = to_json(r);
  rep.json["delta"] = number(delta);
  rep.json["ergodicity"] = to_json(er);
  rep.json["plan"] = plan_json;
  rep.json["planApplies"] = applies;
  rep.json["gaugeEpsilon"] = {{"eta", eta}, {"Neta", n_eta}, {"value", number(gauge_eps)}};
  rep.json["formulaValue"] = number(formula);
  rep.json["bestEta"] = {{"eta", best_eta}, {"Neta", best_n}, {"gaugeEpsilon", number(best_eps)},
                         {"formulaValue", number(best_formula)}};
  rep.json["gaugeSamples"] = gauge;
  rep.json["forward"] = {{"delta", number(fc.delta)},
                         {"halfWidth", fc.half_width},
                         {"ringSizes", fc.ring_sizes},
                         {"steps", ojson::array()},
                         {"errorSum", number(fc.error_sum)},
                         {"totalError", number(fc.total_error)},
                         {"totalPerGenerator", to_json(fc.total_per_generator)}};
  for (const auto& st : fc.steps) rep.json["forward"]["steps"].push_back(to_json(st));
  rep.json["reverse"] = steps;
  rep.json["pipeline"] = {{"forwardError", number(res.forward_error)},
                          {"reverseError", number(res.reverse_error)},
                          {"wrapAllowance", number(res.wrap_allowance)},
                          {"gaugeSetSize", res.lambda.size()}};
  rep.json["ledger"] = lg.to_json();
  append_rows(rep.csv, lg, std::to_string(seed), "demo");
  rep.pass = lg.all_pass();
  rep.json["allPass"] = rep.pass;
  return rep;
}

Report run_command(const ExperimentConfig& cfg) {
  if (cfg.command == "dilate") return cmd_dilate(cfg);
  if (cfg.command == "reverse") return cmd_reverse(cfg);
  if (cfg.command == "torus") return cmd_torus(cfg);
  if (cfg.command == "mrange") return cmd_mrange(cfg);
  if (cfg.command == "demo-main2") return cmd_main2_demo(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

std::vector<std::string> write_report(const Report& report, const ExperimentConfig& cfg) {
  std::vector<std::string> log;
  std::error_code ec;
  if (!fs::exists(cfg.out_dir)) {
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError(cfg.out_dir.string() + ": cannot create output directory: " + ec.message());
    log.push_back("created output directory " + cfg.out_dir.string());
  }
  auto write = [&](const std::string& name, const std::string& text) {
    const fs::path p = cfg.out_dir / name;
    std::ofstream out(p, std::ios::binary);
    if (!out || !(out << text)) throw ConfigError(p.string() + ": cannot write");
    log.push_back("wrote " + p.string());
  };
  if (cfg.format == "json" || cfg.format == "both") write(report.command + ".json", report.json.dump(2) + "\n");
  if (cfg.format == "csv" || cfg.format == "both") {
    write(report.command + ".csv", report.csv);
    if (!report.summary_csv.empty()) write(report.command + "_summary.csv", report.summary_csv);
  }
  return log;
}

}  // namespace dlab
