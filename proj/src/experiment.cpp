#include "vrsplit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "vrsplit/baselines.hpp"
#include "vrsplit/errors.hpp"
#include "vrsplit/problems.hpp"
#include "vrsplit/prox.hpp"
#include "vrsplit/runner.hpp"
#include "vrsplit/trace_io.hpp"

namespace vrsplit {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string digest_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VRSPLIT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("VRSPLIT_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// ---------------------------------------------------------------------------
// config parsing

class Fields {
 public:
  Fields(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return number(key);
  }
  double number(const char* key) const {
    const json& v = require(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
    return d;
  }
  long long integer(const char* key, long long fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<long long>();
  }
  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    return text(key);
  }
  std::string text(const char* key) const {
    const json& v = require(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  const json& require(const char* key) const {
    if (!has(key)) throw ConfigError(where(key) + ": missing");
    return node_.at(key);
  }
  void only(std::initializer_list<const char*> keys) const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const bool known = std::any_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; });
      if (!known) throw ConfigError(where(it.key().c_str()) + ": unknown field");
    }
  }

 private:
  const json& node_;
  std::string path_;
};

enum class ProblemKind { Logistic, MatrixGame, SyntheticLinear };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Logistic;
  std::uint64_t data_seed = 0;
  // logistic
  std::string dataset;
  Index samples = 500;
  Index raw_features = 19;
  Index copies = 5;
  double copy_sigma = 0.05;
  RegKind reg = RegKind::L1;
  double reg_weight = 5e-3;
  double scad_a = 3.7;
  // matrix game
  Index p1 = 20;
  double theta = 0.8;
  double noise_sigma = std::sqrt(0.05);
  // synthetic linear
  Index dim = 20;
  double f_low = 0.0, f_high = 1.0, t_low = 0.1, t_high = 1.0;
};

enum class X0Kind { Gaussian, Zeros, UniformMass };

struct MethodEntry {
  std::string label;
  SolverKind solver = SolverKind::VfosaPlus;
  EstimatorKind estimator = EstimatorKind::Lsvrg;
  std::string schedule = "practical";
  double omega = 0.0;
  ScheduleConstants constants;
  std::optional<Index> batch;
  std::optional<double> probability;
  std::optional<double> eta_scale;
};

struct Config {
  std::string name;
  ProblemSpec problem;
  double lambda_scale = 1.0;
  double zeta_fraction = 0.0;
  bool ignore_rho = false;
  double mu = 0.95 * 2.0 / 3.0;
  std::optional<double> r;
  double beta_scale = 1.0;
  std::vector<MethodEntry> methods;
  double epochs = 200.0;
  std::vector<std::uint64_t> seeds{0};
  Index instances = 1;
  long long metric_every = 0;
  X0Kind x0 = X0Kind::Gaussian;
  double x0_scale = 0.25;
  std::string output = "out";
  std::string digest;
};

ProblemSpec parse_problem(const json& node) {
  Fields f(node, "problem");
  ProblemSpec p;
  const std::string kind = f.text("kind");
  p.data_seed = static_cast<std::uint64_t>(f.integer("data_seed", 0));
  if (kind == "logistic") {
    f.only({"kind", "data_seed", "dataset", "samples", "raw_features", "copies", "copy_sigma", "reg",
            "reg_weight", "scad_a"});
    p.kind = ProblemKind::Logistic;
    p.dataset = f.text("dataset", "");
    p.samples = f.integer("samples", 500);
    p.raw_features = f.integer("raw_features", 19);
    p.copies = f.integer("copies", 5);
    p.copy_sigma = f.number("copy_sigma", 0.05);
    try {
      p.reg = reg_kind_from_string(f.text("reg", "l1"));
    } catch (const ConfigError& e) {
      throw ConfigError(f.where("reg") + ": " + e.what());
    }
    p.reg_weight = f.number("reg_weight", 5e-3);
    p.scad_a = f.number("scad_a", 3.7);
    if (p.samples < 1) throw ConfigError(f.where("samples") + ": must be positive");
    if (p.raw_features < 1) throw ConfigError(f.where("raw_features") + ": must be positive");
    if (p.copies < 1) throw ConfigError(f.where("copies") + ": must be positive");
    if (p.copy_sigma < 0.0) throw ConfigError(f.where("copy_sigma") + ": must be nonnegative");
    if (p.reg_weight < 0.0) throw ConfigError(f.where("reg_weight") + ": must be nonnegative");
    if (!(p.scad_a > 2.0)) throw ConfigError(f.where("scad_a") + ": must exceed 2");
  } else if (kind == "matrix_game") {
    f.only({"kind", "data_seed", "p1", "samples", "theta", "noise_sigma"});
    p.kind = ProblemKind::MatrixGame;
    p.p1 = f.integer("p1", 20);
    p.samples = f.integer("samples", 100);
    p.theta = f.number("theta", 0.8);
    p.noise_sigma = f.number("noise_sigma", std::sqrt(0.05));
    if (p.p1 < 1) throw ConfigError(f.where("p1") + ": must be positive");
    if (p.samples < 1) throw ConfigError(f.where("samples") + ": must be positive");
    if (p.noise_sigma < 0.0) throw ConfigError(f.where("noise_sigma") + ": must be nonnegative");
  } else if (kind == "synthetic_linear") {
    f.only({"kind", "data_seed", "dim", "f_low", "f_high", "t_low", "t_high"});
    p.kind = ProblemKind::SyntheticLinear;
    p.dim = f.integer("dim", 20);
    p.f_low = f.number("f_low", 0.0);
    p.f_high = f.number("f_high", 1.0);
    p.t_low = f.number("t_low", 0.1);
    p.t_high = f.number("t_high", 1.0);
    if (p.dim < 2) throw ConfigError(f.where("dim") + ": must be at least 2");
    if (p.f_low < 0.0 || p.f_high < p.f_low) throw ConfigError(f.where("f_low") + ": need 0 <= f_low <= f_high");
    if (p.t_low == 0.0 || p.t_high == 0.0) throw ConfigError(f.where("t_low") + ": spectrum of T must avoid 0");
  } else {
    throw ConfigError(f.where("kind") + ": unknown problem kind '" + kind + "'");
  }
  return p;
}

MethodEntry parse_method(const json& node, std::size_t i) {
  const std::string path = "methods[" + std::to_string(i) + "]";
  Fields f(node, path);
  f.only({"label", "solver", "estimator", "schedule", "omega", "c_p", "c_b", "theta", "batch", "probability",
          "eta_scale"});
  MethodEntry m;
  try {
    m.solver = solver_kind_from_string(f.text("solver"));
  } catch (const ConfigError& e) {
    throw ConfigError(f.where("solver") + ": " + e.what());
  }
  const EstimatorKind fallback = m.solver == SolverKind::VrHalpern ? EstimatorKind::Lsarah : EstimatorKind::Lsvrg;
  if (f.has("estimator")) {
    try {
      m.estimator = estimator_kind_from_string(f.text("estimator"));
    } catch (const ConfigError& e) {
      throw ConfigError(f.where("estimator") + ": " + e.what());
    }
  } else {
    m.estimator = fallback;
  }
  m.schedule = f.text("schedule", "practical");
  if (m.schedule != "practical" && m.schedule != "halved" && m.schedule != "theory" && m.schedule != "fixed")
    throw ConfigError(f.where("schedule") + ": expected practical, halved, theory or fixed");
  m.omega = f.number("omega", 0.0);
  m.constants.c_p = f.number("c_p", m.constants.c_p);
  m.constants.c_b = f.number("c_b", m.constants.c_b);
  m.constants.theta = f.number("theta", 0.0);
  if (f.has("batch")) {
    const long long b = f.integer("batch", 1);
    if (b < 1) throw ConfigError(f.where("batch") + ": must be at least 1");
    m.batch = b;
  }
  if (f.has("probability")) {
    const double p = f.number("probability");
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(f.where("probability") + ": must lie in [0, 1]");
    m.probability = p;
  }
  if (m.schedule == "fixed" && !(m.batch && m.probability))
    throw ConfigError(path + ".schedule: fixed needs batch and probability");
  if (f.has("eta_scale")) {
    m.eta_scale = f.number("eta_scale");
    if (!(*m.eta_scale > 0.0)) throw ConfigError(f.where("eta_scale") + ": must be positive");
  }
  m.label = f.text("label", std::string(to_string(m.solver)) + "-" + to_string(m.estimator));
  if (m.label.empty()) throw ConfigError(f.where("label") + ": must not be empty");
  for (char c : m.label)
    if (c == ',' || c == '\n' || c == '"') throw ConfigError(f.where("label") + ": contains a forbidden character");
  return m;
}

Config parse_config(const json& root) {
  Fields f(root, "");
  f.only({"name", "problem", "parameters", "methods", "epochs", "seeds", "instances", "metric_every", "x0",
          "output"});
  Config c;
  c.name = f.text("name", "experiment");
  c.problem = parse_problem(f.require("problem"));

  c.lambda_scale = c.problem.kind == ProblemKind::Logistic ? 0.5 : 1.0;
  if (f.has("parameters")) {
    Fields p(root.at("parameters"), "parameters");
    p.only({"lambda_scale", "zeta_fraction", "ignore_rho", "mu", "r", "beta_scale"});
    c.lambda_scale = p.number("lambda_scale", c.lambda_scale);
    c.zeta_fraction = p.number("zeta_fraction", 0.0);
    if (p.has("ignore_rho")) {
      const json& v = root.at("parameters").at("ignore_rho");
      if (!v.is_boolean()) throw ConfigError("parameters.ignore_rho: expected true or false");
      c.ignore_rho = v.get<bool>();
    }
    c.mu = p.number("mu", c.mu);
    if (p.has("r")) c.r = p.number("r");
    c.beta_scale = p.number("beta_scale", 1.0);
    if (!(c.lambda_scale > 0.0)) throw ConfigError("parameters.lambda_scale: must be positive");
    if (c.zeta_fraction < 0.0) throw ConfigError("parameters.zeta_fraction: must be nonnegative");
    if (!(c.beta_scale > 0.0 && c.beta_scale <= 1.0))
      throw ConfigError("parameters.beta_scale: must lie in (0, 1]");
  }

  const json& methods = f.require("methods");
  if (!methods.is_array() || methods.empty()) throw ConfigError("methods: expected a nonempty list");
  for (std::size_t i = 0; i < methods.size(); ++i) {
    c.methods.push_back(parse_method(methods[i], i));
    c.methods.back().constants.mu = c.mu;
    c.methods.back().constants.r = c.r.value_or(0.0);
    for (std::size_t j = 0; j + 1 < c.methods.size(); ++j)
      if (c.methods[j].label == c.methods.back().label)
        throw ConfigError("methods[" + std::to_string(i) + "].label: duplicates methods[" + std::to_string(j) + "]");
  }

  c.epochs = f.number("epochs", 200.0);
  if (!(c.epochs > 0.0)) throw ConfigError("epochs: must be positive");
  if (f.has("seeds")) {
    const json& s = root.at("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("seeds: expected a nonempty list of integers");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
        throw ConfigError("seeds: expected nonnegative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  c.instances = f.integer("instances", 1);
  if (c.instances < 1) throw ConfigError("instances: must be at least 1");
  c.metric_every = f.integer("metric_every", 0);
  if (c.metric_every < 0) throw ConfigError("metric_every: must be nonnegative");

  if (f.has("x0")) {
    Fields x(root.at("x0"), "x0");
    x.only({"kind", "scale"});
    const std::string kind = x.text("kind");
    if (kind == "gaussian") c.x0 = X0Kind::Gaussian;
    else if (kind == "zeros") c.x0 = X0Kind::Zeros;
    else if (kind == "uniform_mass") c.x0 = X0Kind::UniformMass;
    else throw ConfigError("x0.kind: expected gaussian, zeros or uniform_mass");
    c.x0_scale = x.number("scale", 0.25);
  } else if (c.problem.kind == ProblemKind::MatrixGame) {
    c.x0 = X0Kind::UniformMass;
  }
  c.output = f.text("output", "out/" + c.name);
  c.digest = digest_hex(root.dump());
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(root);
}

// ---------------------------------------------------------------------------
// problem instances and method construction

struct Instance {
  std::unique_ptr<GeProblem> problem;
  std::string tag;
};

Instance build_instance(const ProblemSpec& spec, Index index) {
  Rng rng = make_stream(spec.data_seed, static_cast<std::uint64_t>(index));
  Instance out;
  switch (spec.kind) {
    case ProblemKind::Logistic: {
      SparseDataset data = spec.dataset.empty() ? generate_logistic_dataset(spec.samples, spec.raw_features, rng)
                                                : parse_libsvm(spec.dataset);
      preprocess(data);
      AmbiguousFeatures features = make_ambiguous(data, spec.copies, spec.copy_sigma, rng);
      LogisticMinimaxOptions opt;
      opt.reg = spec.reg;
      opt.reg_weight = spec.reg_weight;
      opt.scad_a = spec.scad_a;
      opt.L = estimate_L(to_dense(data));
      out.problem = std::make_unique<GeProblem>(build_logistic_minimax(features, data.labels, opt));
      break;
    }
    case ProblemKind::MatrixGame:
      out.problem = std::make_unique<GeProblem>(
          build_matrix_game(spec.p1, spec.samples, spec.theta, spec.noise_sigma, rng));
      break;
    case ProblemKind::SyntheticLinear: {
      std::vector<double> sf(static_cast<std::size_t>(spec.dim)), st(sf.size());
      for (Index i = 0; i < spec.dim; ++i) {
        const double w = static_cast<double>(i) / static_cast<double>(spec.dim - 1);
        sf[static_cast<std::size_t>(i)] = spec.f_low + (spec.f_high - spec.f_low) * w;
        st[static_cast<std::size_t>(i)] = spec.t_low + (spec.t_high - spec.t_low) * w;
      }
      std::normal_distribution<double> g;
      Vec q(spec.dim), s(spec.dim);
      for (Index i = 0; i < spec.dim; ++i) q[i] = g(rng);
      for (Index i = 0; i < spec.dim; ++i) s[i] = g(rng);
      out.problem = std::make_unique<GeProblem>(build_synthetic_linear(sf, st, q, s, rng));
      break;
    }
  }
  out.tag = out.problem->tag();
  if (index > 0) out.tag += "_i" + std::to_string(index);
  return out;
}

SplitConstants constants_for(const Config& c, const GeProblem& problem) {
  const double L = problem.lipschitz();
  const double rho = c.ignore_rho ? 0.0 : problem.cohypo_rho();
  const double zeta = c.zeta_fraction * L;
  return compute_split_constants(L, rho, zeta, c.lambda_scale / (L + zeta));
}

SchedulePreset preset_of(const std::string& s) {
  if (s == "theory") return SchedulePreset::Theory;
  if (s == "halved") return SchedulePreset::PracticalHalved;
  return SchedulePreset::Practical;
}

EstimatorConfig estimator_for(const MethodEntry& m, EstimatorKind kind, Index n) {
  if (kind == EstimatorKind::FullBatch) return full_batch_config();
  if (m.schedule == "fixed") return fixed_config(kind, *m.batch, *m.probability);
  EstimatorConfig cfg = build_schedule(kind, n, m.omega, m.constants, preset_of(m.schedule));
  if (m.batch) {
    const Index b = *m.batch;
    cfg.batch = [b](Index) { return b; };
    cfg.hat_batch = cfg.batch;
  }
  if (m.probability) {
    const double p = *m.probability;
    cfg.probability = [p](Index) { return p; };
  }
  return cfg;
}

double default_halpern_scale(ProblemKind kind) { return kind == ProblemKind::MatrixGame ? 0.25 : 0.5; }

MethodSpec method_for(const Config& c, const MethodEntry& m, const GeProblem& problem, const SplitConstants& sc) {
  const Index n = problem.n_components();
  const double L = problem.lipschitz();
  MethodSpec spec;
  spec.label = m.label;
  spec.solver = m.solver;
  switch (m.solver) {
    case SolverKind::VfosaPlus:
    case SolverKind::VfosaMinus: {
      const double beta = c.beta_scale * (2.0 - c.mu) * sc.beta_bar / (2.0 + c.mu);
      spec.accel = AccelParams(c.mu, c.r.value_or(2.0 + 1.0 / c.mu), beta, sc.lambda, sc.beta_bar);
      spec.estimator = estimator_for(m, m.estimator, n);
      break;
    }
    case SolverKind::Og:
    case SolverKind::Fkm:
      spec.eta = m.eta_scale.value_or(1.0) / L;
      break;
    case SolverKind::VrHalpern:
      spec.eta = m.eta_scale.value_or(default_halpern_scale(c.problem.kind)) / L;
      spec.estimator = estimator_for(m, m.estimator, n);
      break;
    case SolverKind::VrEg:
    case SolverKind::VrFrbs: {
      const EstimatorConfig svrg = estimator_for(m, EstimatorKind::Lsvrg, n);
      spec.batch = std::clamp<Index>(svrg.batch(1), 1, n);
      spec.probability = svrg.probability(1);
      if (!(spec.probability > 0.0)) throw ConfigError("methods: " + m.label + " needs a positive probability");
      const double base = m.solver == SolverKind::VrEg ? VrEg::default_eta(L, spec.probability)
                                                       : VrFrbs::default_eta(L, spec.probability);
      spec.eta = m.eta_scale.value_or(1.0) * base;
      break;
    }
  }
  return spec;
}

std::string estimator_column(const MethodEntry& m) {
  switch (m.solver) {
    case SolverKind::Og:
    case SolverKind::Fkm:
      return "full_batch";
    case SolverKind::VrEg:
    case SolverKind::VrFrbs:
      return "lsvrg";
    default:
      return to_string(m.estimator);
  }
}

Vec initial_point(const Config& c, const GeProblem& problem, std::uint64_t seed, Index instance) {
  const Index p = problem.dim();
  switch (c.x0) {
    case X0Kind::Zeros:
      return Vec::Zero(p);
    case X0Kind::UniformMass:
      return Vec::Constant(p, 2.0 / static_cast<double>(p));
    case X0Kind::Gaussian:
    default: {
      Rng rng = make_stream(seed, 1'000'003ULL + static_cast<std::uint64_t>(instance));
      std::normal_distribution<double> g;
      Vec x(p);
      for (Index i = 0; i < p; ++i) x[i] = c.x0_scale * g(rng);
      return x;
    }
  }
}

std::string file_safe(const std::string& s) {
  std::string out = s;
  for (char& ch : out)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.')) ch = '_';
  return out;
}

struct Job {
  std::size_t method = 0;
  Index instance = 0;
  std::uint64_t seed = 0;
  std::string file;
  RunTrace trace;
  std::string error;
};

}  // namespace

void validate_config_file(const std::string& path) {
  const Config c = load_config(path);
  // parameter gates need one built instance
  const Instance inst = build_instance(c.problem, 0);
  const SplitConstants sc = constants_for(c, *inst.problem);
  for (const auto& m : c.methods) (void)method_for(c, m, *inst.problem, sc);
}

int cmd_run(const RunCommandOptions& options, std::ostream& log) {
  Config c;
  std::vector<Instance> instances;
  std::vector<std::vector<MethodSpec>> specs;
  std::vector<double> lambdas;
  try {
    c = load_config(options.config_path);
    for (Index i = 0; i < c.instances; ++i) {
      instances.push_back(build_instance(c.problem, i));
      const SplitConstants sc = constants_for(c, *instances.back().problem);
      lambdas.push_back(sc.lambda);
      std::vector<MethodSpec> row;
      for (const auto& m : c.methods) row.push_back(method_for(c, m, *instances.back().problem, sc));
      specs.push_back(std::move(row));
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const fs::path out_dir = options.out_dir.value_or(c.output);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    log << "cannot create output directory " << out_dir << ": " << ec.message() << "\n";
    return kExitUsage;
  }

  for (const auto& spec : specs.front())
    for (const auto& w : spec.estimator.warnings) log << "warning: " << spec.label << ": " << w << "\n";

  std::vector<Job> jobs;
  for (Index inst = 0; inst < c.instances; ++inst)
    for (std::uint64_t seed : c.seeds)
      for (std::size_t m = 0; m < c.methods.size(); ++m) {
        Job j;
        j.method = m;
        j.instance = inst;
        j.seed = seed;
        j.file = file_safe(c.methods[m].label) + "__" + estimator_column(c.methods[m]) + "__i" +
                 std::to_string(inst) + "__s" + std::to_string(seed) + ".csv";
        jobs.push_back(std::move(j));
      }

  unsigned threads = 1;
  try {
    threads = resolve_thread_count(options.threads);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitUsage;
  }
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      Job& job = jobs[k];
      try {
        const Instance& inst = instances[static_cast<std::size_t>(job.instance)];
        const MethodSpec& spec = specs[static_cast<std::size_t>(job.instance)][job.method];
        RunOptions ro;
        ro.budget_epochs = c.epochs;
        ro.metric_every = c.metric_every;
        ro.seed = job.seed;
        ro.stream = static_cast<std::uint64_t>(job.instance);
        ro.x0 = initial_point(c, *inst.problem, job.seed, job.instance);
        ro.report_lambda = lambdas[static_cast<std::size_t>(job.instance)];
        job.trace = run_solver(*inst.problem, spec, ro);
        job.trace.estimator = estimator_column(c.methods[job.method]);
        job.trace.problem = inst.tag;
        job.trace.params_digest = c.digest;
        write_trace_csv(job.trace, (out_dir / job.file).string());
      } catch (const std::exception& e) {
        job.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json manifest;
  manifest["name"] = c.name;
  manifest["config"] = options.config_path;
  manifest["config_digest"] = c.digest;
  manifest["epochs"] = c.epochs;
  manifest["trace_header"] = kTraceHeader;
  json runs = json::array();
  int failures = 0;
  for (const auto& job : jobs) {
    json r;
    r["file"] = job.file;
    r["method"] = c.methods[job.method].label;
    r["estimator"] = estimator_column(c.methods[job.method]);
    r["instance"] = job.instance;
    r["seed"] = job.seed;
    if (job.error.empty()) {
      r["diverged"] = job.trace.diverged;
      r["iterations"] = job.trace.iterations;
      r["final_rel_residual"] = job.trace.rows.back().rel_residual;
      if (job.trace.diverged) log << "warning: " << job.file << " diverged\n";
    } else {
      r["error"] = job.error;
      log << "run failed: " << job.file << ": " << job.error << "\n";
      ++failures;
    }
    runs.push_back(std::move(r));
  }
  manifest["runs"] = std::move(runs);
  std::ofstream mf(out_dir / "manifest.json");
  mf << std::setw(2) << manifest << "\n";
  if (!mf) {
    log << "cannot write manifest in " << out_dir << "\n";
    return kExitCheckFailed;
  }
  log << "wrote " << (jobs.size() - static_cast<std::size_t>(failures)) << " traces and manifest.json to "
      << out_dir.string() << "\n";
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// validate

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

// Two-block linear test instances with known spectra.
GeProblem validation_linear(double t_min, Rng& rng) {
  const Index p = 6;
  std::vector<double> sf, st;
  for (Index i = 0; i < p; ++i) sf.push_back(static_cast<double>(i) / static_cast<double>(p - 1));
  st.push_back(t_min);
  for (Index i = 1; i < p; ++i) st.push_back(0.5 + static_cast<double>(i) / static_cast<double>(p));
  std::normal_distribution<double> g;
  Vec q(p), s(p);
  for (Index i = 0; i < p; ++i) q[i] = g(rng);
  for (Index i = 0; i < p; ++i) s[i] = g(rng);
  return build_synthetic_linear(sf, st, q, s, rng);
}

GeProblem small_finite_sum(Index n, Index p, Rng& rng) {
  std::normal_distribution<double> g;
  auto mats = std::make_shared<std::vector<Mat>>();
  auto shifts = std::make_shared<std::vector<Vec>>();
  for (Index i = 0; i < n; ++i) {
    Mat a(p, p);
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c) a(r, c) = g(rng);
    mats->push_back(a.transpose() * a);
    Vec b(p);
    for (Index r = 0; r < p; ++r) b[r] = g(rng);
    shifts->push_back(b);
  }
  double L = 0.0;
  for (const auto& m : *mats) L = std::max(L, spectral_norm_sq(m) > 0 ? std::sqrt(spectral_norm_sq(m)) : 0.0);
  GeProblem::Parts parts;
  parts.dim = p;
  parts.n_components = n;
  parts.component = [mats, shifts](Index i, const Vec& x, Vec& out) {
    out = (*mats)[static_cast<std::size_t>(i)] * x + (*shifts)[static_cast<std::size_t>(i)];
  };
  parts.lipschitz_L = L;
  parts.tag = "finite_sum";
  return GeProblem(parts);
}

// |E[F~] - Fx|_inf over all n equally likely single-index draws.
double enumeration_gap(const GeProblem& problem, EstimatorKind kind, Rng& rng) {
  const Index n = problem.n_components();
  const Index p = problem.dim();
  std::normal_distribution<double> g;
  auto point = [&] {
    Vec x(p);
    for (Index i = 0; i < p; ++i) x[i] = g(rng);
    return x;
  };
  VrEstimator est(problem, fixed_config(kind, 1, 0.0));
  est.initialize(point(), rng);
  for (int k = 0; k < 3; ++k) est.estimate(point(), rng);
  const Vec x = point();
  Vec mean = Vec::Zero(p);
  for (Index i = 0; i < n; ++i) {
    VrEstimator frozen = est;
    Draw d;
    d.k = est.step() + 1;
    d.batch = {i};
    mean += frozen.estimate_with(x, d);
  }
  mean /= static_cast<double>(n);
  return (mean - problem.full(x)).cwiseAbs().maxCoeff();
}

double scad_penalty(double t, double w, double a) {
  t = std::abs(t);
  if (t <= w) return w * t;
  if (t <= a * w) return (2.0 * a * w * t - t * t - w * w) / (2.0 * (a - 1.0));
  return w * w * (a + 1.0) / 2.0;
}

double scad_grid_min(double x, double step, double w, double a) {
  const double lo = std::min(0.0, x) - 1.0, hi = std::max(0.0, x) + 1.0;
  double best = 0.0, best_val = std::numeric_limits<double>::infinity();
  for (double t = lo; t <= hi; t += 1e-5) {
    const double v = 0.5 * (t - x) * (t - x) + step * scad_penalty(t, w, a);
    if (v < best_val) best_val = v, best = t;
  }
  return best;
}

// Simplex projection by bisection on the shift: sum max(v - s, 0) = 1.
Vec simplex_bisection(const Vec& v) {
  double lo = v.minCoeff() - 1.0, hi = v.maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((v.array() - mid).max(0.0).sum() > 1.0) lo = mid;
    else hi = mid;
  }
  return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

}  // namespace

std::vector<CheckResult> run_validation(const ValidateOptions& options) {
  std::vector<CheckResult> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::string("threw: ") + e.what());
    }
  };

  guarded("residual_inequality_monotone", [&] {
    Rng rng = make_stream(options.seed, 11);
    const GeProblem prob = validation_linear(0.25, rng);
    const SplitConstants sc = compute_split_constants(prob.lipschitz(), 0.0, kDefaultZetaFraction * prob.lipschitz(),
                                                      1.5 / prob.lipschitz());
    SamplingOptions so;
    so.seed = options.seed;
    const auto r = check_residual_inequality(prob, sc, so, sc.beta_bar * options.beta_bar_scale);
    add("residual_inequality_monotone", r.min_slack >= -1e-10, "min slack " + fmt(r.min_slack));
  });
  guarded("residual_inequality_cohypomonotone", [&] {
    Rng rng = make_stream(options.seed, 12);
    const GeProblem prob = validation_linear(-2.0, rng);
    const double L = prob.lipschitz();
    const double rho = prob.cohypo_rho();
    const SplitConstants sc = compute_split_constants(L, rho, kDefaultZetaFraction * L, 2.0 * rho);
    SamplingOptions so;
    so.seed = options.seed + 1;
    const auto r = check_residual_inequality(prob, sc, so, sc.beta_bar * options.beta_bar_scale);
    add("residual_inequality_cohypomonotone", r.min_slack >= -1e-10, "min slack " + fmt(r.min_slack));
  });
  guarded("cocoercivity", [&] {
    Rng rng = make_stream(options.seed, 13);
    const GeProblem prob = small_finite_sum(5, 4, rng);
    SamplingOptions so;
    so.seed = options.seed;
    const auto r = check_cocoercivity(prob, so);
    add("cocoercivity", r.min_margin >= -1e-10, "min margin " + fmt(r.min_margin));
  });
  guarded("resolvent_nonexpansive", [&] {
    GeProblem::Parts parts;
    parts.dim = 8;
    parts.component = [](Index, const Vec& x, Vec& out) { out = Vec::Zero(x.size()); };
    auto res = std::make_shared<BlockResolvent>(
        8, std::vector<ResolventBlock>{{0, 4, BlockKind::L1, 0.3, 3.7}, {4, 4, BlockKind::Simplex, 0.0, 3.7}});
    parts.resolvent = [res](const Vec& x, double lambda) { return res->apply(x, lambda); };
    const GeProblem prob(parts);
    SamplingOptions so;
    so.seed = options.seed;
    so.radius = 3.0;
    const auto r = check_resolvent_nonexpansive(prob, 0.7, so);
    add("resolvent_nonexpansive", r.max_ratio <= 1.0 + 1e-12, "max ratio " + fmt(r.max_ratio));
  });
  for (EstimatorKind kind : {EstimatorKind::Lsvrg, EstimatorKind::Saga}) {
    const std::string name = std::string("unbiased_") + to_string(kind);
    guarded(name, [&] {
      Rng rng = make_stream(options.seed, 14);
      const GeProblem prob = small_finite_sum(4, 3, rng);
      const double gap = enumeration_gap(prob, kind, rng);
      add(name, gap <= 1e-12, "max gap " + fmt(gap));
    });
  }
  guarded("hsgd_tau0_is_sarah", [&] {
    Rng setup = make_stream(options.seed, 15);
    const GeProblem prob = small_finite_sum(6, 3, setup);
    EstimatorConfig sarah = fixed_config(EstimatorKind::Lsarah, 2, 0.0);
    EstimatorConfig hsgd = fixed_config(EstimatorKind::Hsgd, 2, 0.0);
    hsgd.tau = [](Index) { return 0.0; };
    VrEstimator a(prob, sarah), b(prob, hsgd);
    Rng ra = make_stream(options.seed, 16), rb = make_stream(options.seed, 16);
    std::normal_distribution<double> g;
    Vec x = Vec::Ones(3);
    bool same = a.initialize(x, ra) == b.initialize(x, rb);
    for (int k = 0; k < 20 && same; ++k) {
      for (Index i = 0; i < 3; ++i) x[i] += 0.1 * g(setup);
      same = a.estimate(x, ra) == b.estimate(x, rb);
    }
    add("hsgd_tau0_is_sarah", same, same ? "bitwise equal" : "traces differ");
  });
  guarded("prox_scad_grid", [&] {
    Rng rng = make_stream(options.seed, 17);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double x = 4.0 * (uniform01(rng) - 0.5) * 2.0;
      const double w = 0.1 + uniform01(rng);
      const double a = 2.5 + 2.0 * uniform01(rng);
      const double step = 0.9 * (a - 1.0) * uniform01(rng) + 0.01;
      if (step >= a - 1.0) continue;
      const double got = prox_scad(Vec::Constant(1, x), step, w, a)[0];
      worst = std::max(worst, std::abs(got - scad_grid_min(x, step, w, a)));
    }
    add("prox_scad_grid", worst <= 2e-4, "max error " + fmt(worst));
  });
  guarded("project_simplex", [&] {
    Rng rng = make_stream(options.seed, 18);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Index p = 2 + static_cast<Index>(uniform_index(rng, 6));
      Vec v(p);
      for (Index i = 0; i < p; ++i) v[i] = 2.0 * g(rng);
      worst = std::max(worst, (project_simplex(v) - simplex_bisection(v)).cwiseAbs().maxCoeff());
    }
    add("project_simplex", worst <= 1e-6, "max error " + fmt(worst));
  });
  return out;
}

int cmd_validate(const ValidateOptions& options, std::ostream& out) {
  const auto results = run_validation(options);
  bool ok = true;
  for (const auto& r : results) {
    out << (r.pass ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.pass;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// compare

std::vector<MethodSummary> summarize_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open manifest: " + manifest_path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!manifest.contains("runs") || !manifest["runs"].is_array()) throw ConfigError("manifest: missing runs list");
  const fs::path dir = fs::path(manifest_path).parent_path();

  struct Acc {
    std::vector<double> finals, aucs, hits;
  };
  std::vector<std::pair<std::string, std::string>> order;
  std::map<std::pair<std::string, std::string>, Acc> groups;
  for (const auto& run : manifest["runs"]) {
    if (run.contains("error")) continue;
    if (!run.contains("file") || !run["file"].is_string()) throw ConfigError("manifest: run without file");
    const RunTrace t = read_trace_csv((dir / run["file"].get<std::string>()).string());
    if (t.rows.empty()) throw ParseError("trace has no rows: " + run["file"].get<std::string>(), 0);
    const auto key = std::make_pair(t.method, t.estimator);
    if (!groups.count(key)) order.push_back(key);
    Acc& acc = groups[key];
    acc.finals.push_back(t.rows.back().rel_residual);
    double auc = 0.0;
    double hit = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      if (std::isinf(hit) && t.rows[i].rel_residual <= 1e-2) hit = t.rows[i].epochs;
      if (i == 0) continue;
      const double a = std::log10(std::max(t.rows[i - 1].rel_residual, 1e-300));
      const double b = std::log10(std::max(t.rows[i].rel_residual, 1e-300));
      auc += 0.5 * (a + b) * (t.rows[i].epochs - t.rows[i - 1].epochs);
    }
    acc.aucs.push_back(auc);
    acc.hits.push_back(hit);
  }

  std::vector<MethodSummary> out;
  for (const auto& key : order) {
    const Acc& acc = groups[key];
    MethodSummary s;
    s.method = key.first;
    s.estimator = key.second;
    s.runs = static_cast<int>(acc.finals.size());
    const double m = static_cast<double>(s.runs);
    for (double v : acc.finals) s.final_mean += v / m;
    double var = 0.0;
    for (double v : acc.finals) var += (v - s.final_mean) * (v - s.final_mean) / m;
    s.final_std = std::sqrt(var);
    for (double v : acc.aucs) s.auc_log += v / m;
    for (double v : acc.hits) s.epochs_to_1e_2 += v / m;
    out.push_back(s);
  }
  return out;
}

int cmd_compare(const std::string& manifest_path, const std::optional<std::string>& csv_path, std::ostream& out) {
  std::vector<MethodSummary> rows;
  try {
    rows = summarize_manifest(manifest_path);
  } catch (const Error& e) {
    out << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  const fs::path target = csv_path ? fs::path(*csv_path) : fs::path(manifest_path).parent_path() / "summary.csv";
  std::ofstream csv(target);
  csv << kSummaryHeader << "\n";
  char line[512];
  std::snprintf(line, sizeof line, "%-24s %-12s %5s %12s %12s %12s %14s\n", "method", "estimator", "runs",
                "final_mean", "final_std", "auc_log", "epochs_to_1e-2");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %-12s %5d %12.4e %12.4e %12.4f %14.2f\n", r.method.c_str(),
                  r.estimator.c_str(), r.runs, r.final_mean, r.final_std, r.auc_log, r.epochs_to_1e_2);
    out << line;
    std::snprintf(line, sizeof line, "%s,%s,%.17g,%.17g,%.17g,%.17g\n", r.method.c_str(), r.estimator.c_str(),
                  r.final_mean, r.final_std, r.auc_log, r.epochs_to_1e_2);
    csv << line;
  }
  if (!csv) {
    out << "cannot write " << target.string() << "\n";
    return kExitCheckFailed;
  }
  out << "summary written to " << target.string() << "\n";
  return kExitOk;
}

}  // namespace vrsplit
