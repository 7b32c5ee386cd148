#include "astr/harness.hpp"

#include "astr/errors.hpp"
#include "astr/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace astr {

namespace fs = std::filesystem;

namespace {

std::mutex f_star_mutex;
std::map<std::uint64_t, FStarResult> f_star_cache;

std::uint64_t f_star_key(const FiniteSumObjective& problem, const FullBatchTrConfig& cfg, const Vector& x0,
                         long long cap) {
  detail::Fnv1a h;
  h.add(problem.fingerprint());
  h.add(cfg.tr.eta1);
  h.add(cfg.tr.eta2);
  h.add(cfg.tr.gamma1);
  h.add(cfg.tr.gamma2);
  h.add(cfg.tr.max_retries);
  h.add(cfg.delta0);
  h.add(cfg.epsilon);
  h.add(cfg.cg_tol);
  h.add(cfg.max_cg);
  h.add(cfg.min_relative_decrease);
  h.add(x0.size());
  for (Index i = 0; i < x0.size(); ++i) h.add(x0[i]);
  h.add(cap);
  return h.value();
}

}  // namespace

FStarResult compute_f_star(const FiniteSumObjective& problem, const FullBatchTrConfig& cfg, const Vector& x0,
                           long long max_iterations) {
  if (max_iterations < 1) throw ContractError("compute_f_star: max_iterations must be >= 1");
  FullBatchTrConfig run_cfg = cfg;
  if (run_cfg.min_relative_decrease == 0.0) {
    run_cfg.min_relative_decrease = 4.0 * std::numeric_limits<double>::epsilon();
  }
  const Vector start = x0.size() == 0 ? Vector::Zero(problem.dim()) : x0;
  const std::uint64_t key = f_star_key(problem, run_cfg, start, max_iterations);
  {
    std::lock_guard lock(f_star_mutex);
    if (auto it = f_star_cache.find(key); it != f_star_cache.end()) {
      FStarResult hit = it->second;
      hit.from_cache = true;
      hit.egrads = 0.0;
      return hit;
    }
  }

  CostBudget budget;
  budget.max_iterations = max_iterations;
  const RunLog log = run_fullbatch_tr(problem, run_cfg, budget, start);
  FStarResult result;
  result.value = kInf;
  for (const Record& r : log.records) result.value = std::min(result.value, r.f);
  result.iterations = log.last().nu;
  result.egrads = log.last().egrads;
  result.status = log.status;
  result.hit_iteration_cap = log.status == RunStatus::budget_exhausted;

  std::lock_guard lock(f_star_mutex);
  f_star_cache.emplace(key, result);
  return result;
}

void clear_f_star_cache() {
  std::lock_guard lock(f_star_mutex);
  f_star_cache.clear();
}

const std::vector<DatasetEntry>& dataset_catalog() {
  static const std::vector<DatasetEntry> catalog = {
      {"a9a", "a9a, a9a.t", "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#a9a"},
      {"w8a", "w8a, w8a.t", "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#w8a"},
      {"odd_even", "mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte", "http://yann.lecun.com/exdb/mnist/"},
      {"ijcnn", "ijcnn1, ijcnn1.t (pooled, 10% test)",
       "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#ijcnn1"},
      {"skin", "skin_nonskin", "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#skin_nonskin"},
      {"covertype", "covtype.libsvm.binary",
       "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#covtype.binary"},
      {"SUSY", "SUSY", "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#SUSY"},
      {"HIGGS", "HIGGS", "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary.html#HIGGS"},
      {"mnist", "mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte", "http://yann.lecun.com/exdb/mnist/"},
  };
  return catalog;
}

std::optional<fs::path> data_dir_from_env() {
  const char* dir = std::getenv("ASTR_DATA_DIR");
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return fs::path(dir);
}

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ContractError("bad value for " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

// First existing file among `name` and `name.gz` under dir.
fs::path find_file(const fs::path& dir, const std::string& name) {
  for (const fs::path& p : {dir / name, dir / (name + ".gz")}) {
    if (fs::exists(p)) return p;
  }
  throw std::runtime_error("dataset file not found: " + (dir / name).string());
}

Dataset load_mnist(const fs::path& dir, DigitLabels mapping) {
  const fs::path root = dir / "mnist";
  auto part = [&](const std::string& prefix) {
    const std::string images = read_file(find_file(root, prefix + "-images-idx3-ubyte"));
    const std::string labels = read_file(find_file(root, prefix + "-labels-idx1-ubyte"));
    return load_idx(images, labels, mapping);
  };
  return stack_train_test(part("train"), part("t10k"));
}

}  // namespace

SynthSpec parse_synth_spec(std::string_view spec) {
  constexpr std::string_view prefix = "synth:";
  if (!spec.starts_with(prefix)) throw ContractError("synthetic spec must start with 'synth:'");
  spec.remove_prefix(prefix.size());
  SynthSpec out;
  bool has_n = false;
  bool has_d = false;
  while (!spec.empty()) {
    const std::size_t comma = spec.find(',');
    const std::string_view item = spec.substr(0, comma);
    spec = comma == std::string_view::npos ? std::string_view{} : spec.substr(comma + 1);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw ContractError("bad synthetic spec item '" + std::string(item) + "'");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "n") {
      out.n = parse_number<Index>(value, key);
      has_n = true;
    } else if (key == "d") {
      out.d = parse_number<Index>(value, key);
      has_d = true;
    } else if (key == "seed") {
      out.seed = parse_number<std::uint64_t>(value, key);
    } else if (key == "test") {
      out.test_fraction = parse_number<double>(value, key);
    } else {
      throw ContractError("unknown synthetic spec key '" + std::string(key) + "'");
    }
  }
  if (!has_n || !has_d || out.n < 1 || out.d < 1) throw ContractError("synthetic spec needs n >= 1 and d >= 1");
  if (!(out.test_fraction >= 0.0 && out.test_fraction < 1.0)) {
    throw ContractError("synthetic spec: test must lie in [0, 1)");
  }
  return out;
}

Dataset resolve_dataset(std::string_view spec, const std::optional<fs::path>& data_dir, std::uint64_t split_seed) {
  if (spec.starts_with("synth:")) {
    const SynthSpec s = parse_synth_spec(spec);
    Dataset data = synth_logistic(s.n, s.d, s.seed);
    return s.test_fraction > 0.0 ? random_split(data, s.test_fraction, split_seed) : data;
  }
  const auto& catalog = dataset_catalog();
  const bool named = std::any_of(catalog.begin(), catalog.end(), [&](const DatasetEntry& e) { return e.name == spec; });
  if (!named) {
    const fs::path path(spec);
    if (!fs::exists(path)) throw ContractError("unknown dataset '" + std::string(spec) + "'");
    return random_split(load_libsvm_file(path), 0.1, split_seed);
  }
  if (!data_dir) throw ContractError("dataset '" + std::string(spec) + "' needs ASTR_DATA_DIR");
  const fs::path& dir = *data_dir;
  if (spec == "a9a" || spec == "w8a") {
    const std::string name(spec);
    return load_libsvm_pair(find_file(dir, name), find_file(dir, name + ".t"));
  }
  if (spec == "ijcnn") {
    const Dataset pooled = load_libsvm_pair(find_file(dir, "ijcnn1"), find_file(dir, "ijcnn1.t"));
    return random_split(pooled, 0.1, split_seed);
  }
  if (spec == "odd_even") return load_mnist(dir, DigitLabels::odd_even);
  if (spec == "mnist") return load_mnist(dir, DigitLabels::digits);
  const std::string file = spec == "skin" ? "skin_nonskin" : spec == "covertype" ? "covtype.libsvm.binary" : std::string(spec);
  return random_split(load_libsvm_file(find_file(dir, file)), 0.1, split_seed);
}

std::unique_ptr<FiniteSumObjective> make_problem(std::string_view kind, const Dataset& data, IndexSpan rows) {
  if (kind == "logistic") return std::make_unique<LogisticRegressionProblem>(data, rows);
  if (kind == "nls") return std::make_unique<SigmoidLeastSquaresProblem>(data, rows);
  if (kind == "nn") {
    const std::vector<int> classes = data.classes();
    if (!classes.empty() && classes.front() < 0) {
      throw ContractError("problem nn needs class labels 0..c-1 (try dataset mnist)");
    }
    return std::make_unique<TwoLayerNetProblem>(data, rows);
  }
  throw ContractError("unknown problem '" + std::string(kind) + "'");
}

Vector initial_point(Index dim, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Vector x(dim);
  for (Index i = 0; i < dim; ++i) x[i] = scale * rng.normal();
  return x;
}

const std::vector<std::string> kProblemNames = {"logistic", "nls", "nn"};
const std::vector<std::string> kMethodNames = {"astr", "tr", "sgd", "svrg", "grid:sgd", "grid:svrg"};

void print_catalog(std::ostream& out) {
  out << "problems:";
  for (const auto& p : kProblemNames) out << ' ' << p;
  out << "\nmethods:";
  for (const auto& m : kMethodNames) out << ' ' << m;
  out << "\ndatasets (under $ASTR_DATA_DIR, plain or .gz):\n";
  for (const auto& e : dataset_catalog()) out << "  " << e.name << "  [" << e.files << "]  " << e.source << '\n';
  out << "  synth:n=N,d=D[,seed=S][,test=F]  synthetic logistic data\n"
      << "  <path>  any LIBSVM file (10% random test split)\n";
}

namespace {

using nlohmann::json;

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct RunSpec {
  std::string method;  // astr | tr | sgd | svrg
  std::uint64_t seed = 0;
  double step_size = kNaN;
  double fraction = kNaN;  // SGD batch fraction or SVRG inner fraction
  std::string file;
};

struct RunOutcome {
  RunSpec spec;
  RunLog log;
};

RunLog execute(const RunSpec& spec, const ExperimentOptions& o, const FiniteSumObjective& problem,
               const CostBudget& budget, const Vector& x0, const RunHooks& hooks) {
  if (spec.method == "astr") {
    AstrConfig cfg;
    cfg.s0_fraction = o.s0_fraction;
    cfg.theta = o.theta;
    cfg.omega = o.omega;
    cfg.curvature_mode = o.curvature;
    cfg.hessian_fraction = o.hessian_fraction;
    cfg.epsilon = o.epsilon;
    cfg.seed = spec.seed;
    return run_astr(problem, cfg, budget, x0, hooks);
  }
  if (spec.method == "tr") {
    FullBatchTrConfig cfg;
    cfg.epsilon = o.epsilon;
    RunLog log = run_fullbatch_tr(problem, cfg, budget, x0, hooks);
    log.seed = spec.seed;
    return log;
  }
  if (spec.method == "sgd") {
    SgdConfig cfg;
    cfg.step_size = spec.step_size;
    cfg.batch_fraction = spec.fraction;
    cfg.seed = spec.seed;
    return run_sgd(problem, cfg, budget, x0, hooks);
  }
  SvrgConfig cfg;
  cfg.step_size = spec.step_size;
  cfg.inner_count_fraction = spec.fraction;
  cfg.seed = spec.seed;
  return run_svrg(problem, cfg, budget, x0, hooks);
}

std::vector<RunSpec> plan_runs(const ExperimentOptions& o, Index n) {
  std::vector<RunSpec> runs;
  const bool grid = o.method.starts_with("grid:");
  const std::string base = grid ? o.method.substr(5) : o.method;
  for (std::uint64_t seed : o.seeds) {
    const std::string tail = "_seed" + std::to_string(seed) + ".csv";
    if (!grid) {
      RunSpec r{base, seed, kNaN, kNaN, base + tail};
      if (base == "sgd") std::tie(r.step_size, r.fraction) = std::pair{o.step_size, o.batch_fraction};
      if (base == "svrg") std::tie(r.step_size, r.fraction) = std::pair{o.step_size, o.inner_fraction};
      runs.push_back(r);
      continue;
    }
    const std::vector<double> steps = base == "sgd" ? sgd_step_grid() : svrg_step_grid();
    const std::vector<double> fractions = base == "sgd" ? sgd_batch_fraction_grid(n) : svrg_inner_fraction_grid();
    const char tag = base == "sgd" ? 'z' : 'm';
    for (double t : steps) {
      for (double f : fractions) {
        runs.push_back({base, seed, t, f, base + "_t" + short_number(t) + "_" + tag + short_number(f) + tail});
      }
    }
  }
  return runs;
}

void validate_options(const ExperimentOptions& o) {
  if (std::find(kProblemNames.begin(), kProblemNames.end(), o.problem) == kProblemNames.end()) {
    throw ContractError("unknown problem '" + o.problem + "'");
  }
  if (std::find(kMethodNames.begin(), kMethodNames.end(), o.method) == kMethodNames.end()) {
    throw ContractError("unknown method '" + o.method + "'");
  }
  if (o.dataset.empty()) throw ContractError("--dataset is required");
  if (o.seeds.empty()) throw ContractError("at least one seed is required");
  if (o.threads < 1 || o.jobs < 1) throw ContractError("--threads and --jobs must be >= 1");
}

void write_summary(const fs::path& path, std::vector<const RunOutcome*> cells) {
  auto final_f = [](const RunOutcome* r) {
    const double f = r->log.last().f;
    return std::isnan(f) ? kInf : f;
  };
  std::stable_sort(cells.begin(), cells.end(), [&](const RunOutcome* a, const RunOutcome* b) {
    if (a->spec.seed != b->spec.seed) return a->spec.seed < b->spec.seed;
    return final_f(a) < final_f(b);
  });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "rank,method,seed,step_size,fraction,status,egrads,f,gap,file\n";
  int rank = 0;
  std::uint64_t seed = cells.empty() ? 0 : cells.front()->spec.seed;
  for (const RunOutcome* c : cells) {
    if (c->spec.seed != seed) {
      seed = c->spec.seed;
      rank = 0;
    }
    const Record& last = c->log.last();
    out << ++rank << ',' << c->spec.method << ',' << c->spec.seed << ',' << format_double(c->spec.step_size) << ','
        << format_double(c->spec.fraction) << ',' << to_string(c->log.status) << ',' << format_double(last.egrads)
        << ',' << format_double(last.f) << ',' << format_double(last.gap) << ',' << c->spec.file << '\n';
  }
}

}  // namespace

void run_experiment(const ExperimentOptions& o, std::ostream& progress) {
  validate_options(o);
  CostBudget budget{o.budget_egrads, o.budget_seconds, std::numeric_limits<long long>::max()};
  budget.validate();

  Dataset data = resolve_dataset(o.dataset, o.data_dir ? o.data_dir : data_dir_from_env(), o.split_seed);
  if (o.subsample) data = subsample_train(data, *o.subsample, o.split_seed);
  if (o.scale) data = scale_columns(data);
  if (data.n_train() < 1) throw ContractError("dataset has no training rows");

  std::unique_ptr<FiniteSumObjective> problem = make_problem(o.problem, data, data.train());
  problem->set_threads(o.threads);
  std::unique_ptr<FiniteSumObjective> test_problem;
  RunHooks hooks;
  if (data.n_test() > 0) {
    test_problem = make_problem(o.problem, data, data.test());
    test_problem->set_threads(o.threads);
    hooks.test_accuracy = [&test_problem](const Vector& x) { return test_problem->accuracy(x); };
  }
  progress << "dataset " << o.dataset << ": " << data.n_train() << " train / " << data.n_test() << " test, d = "
           << data.dim() << "; problem " << problem->name() << " with " << problem->dim() << " parameters\n";

  const Vector x0 = initial_point(problem->dim(), o.x0_seed);
  std::optional<FStarResult> f_star;
  if (!o.skip_f_star) {
    f_star = compute_f_star(*problem, {}, x0);
    progress << "F* = " << format_double(f_star->value) << " after " << f_star->iterations << " iterations"
             << (f_star->hit_iteration_cap ? " (iteration cap reached)" : "") << '\n';
  }

  const std::vector<RunSpec> plan = plan_runs(o, problem->size());
  std::vector<RunOutcome> outcomes(plan.size());
  std::vector<std::exception_ptr> errors(plan.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      try {
        outcomes[i] = {plan[i], execute(plan[i], o, *problem, budget, x0, hooks)};
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const int workers = std::min<int>(o.jobs, static_cast<int>(plan.size()));
    std::vector<std::jthread> pool;
    for (int k = 1; k < workers; ++k) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  fs::create_directories(o.out);
  json runs = json::array();
  std::vector<const RunOutcome*> cells;
  for (RunOutcome& r : outcomes) {
    if (f_star) r.log.set_reference(f_star->value);
    std::ofstream csv(o.out / r.spec.file);
    if (!csv) throw std::runtime_error("cannot write " + (o.out / r.spec.file).string());
    write_csv(csv, r.log);
    const Record& last = r.log.last();
    progress << r.spec.file << ": " << to_string(r.log.status) << ", egrads " << format_double(last.egrads)
             << ", f " << format_double(last.f) << '\n';
    json entry = {{"file", r.spec.file},
                  {"method", r.spec.method},
                  {"seed", r.spec.seed},
                  {"status", std::string(to_string(r.log.status))},
                  {"records", r.log.records.size()},
                  {"final_egrads", number_or_null(last.egrads)},
                  {"final_f", number_or_null(last.f)},
                  {"final_gap", number_or_null(last.gap)}};
    if (std::isfinite(r.spec.step_size)) {
      entry["step_size"] = r.spec.step_size;
      entry[r.spec.method == "sgd" ? "batch_fraction" : "inner_fraction"] = r.spec.fraction;
    }
    if (!r.log.snapshot_gradient_norms.empty()) entry["snapshot_gradient_norms"] = r.log.snapshot_gradient_norms;
    runs.push_back(entry);
    cells.push_back(&r);
  }
  if (o.method.starts_with("grid:")) {
    write_summary(o.out / ("grid_" + o.method.substr(5) + "_summary.csv"), cells);
  }

  json manifest = {
      {"problem", {{"name", problem->name()}, {"dim", problem->dim()}, {"fingerprint", hex(problem->fingerprint())}}},
      {"dataset",
       {{"spec", o.dataset},
        {"fingerprint", hex(fingerprint(data))},
        {"n_train", data.n_train()},
        {"n_test", data.n_test()},
        {"dim", data.dim()},
        {"scaled", o.scale},
        {"split_seed", o.split_seed},
        {"synth_generator_version", kSynthGeneratorVersion}}},
      {"config",
       {{"method", o.method},
        {"budget_egrads", number_or_null(o.budget_egrads)},
        {"budget_seconds", number_or_null(o.budget_seconds)},
        {"seeds", o.seeds},
        {"x0_seed", o.x0_seed},
        {"threads", o.threads},
        {"curvature", o.curvature == CurvatureMode::none ? "none" : "hessian"},
        {"theta", o.theta},
        {"omega", o.omega},
        {"s0_fraction", o.s0_fraction},
        {"hessian_fraction", o.hessian_fraction},
        {"epsilon", o.epsilon},
        {"step_size", o.step_size},
        {"batch_fraction", o.batch_fraction},
        {"inner_fraction", o.inner_fraction}}},
      {"f_star", f_star ? json{{"value", f_star->value},
                               {"iterations", f_star->iterations},
                               {"egrads", f_star->egrads},
                               {"hit_iteration_cap", f_star->hit_iteration_cap},
                               {"status", std::string(to_string(f_star->status))}}
                        : json(nullptr)},
      {"runs", runs},
  };
  std::ofstream out(o.out / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest");
  out << manifest.dump(2) << '\n';
}

}  // namespace astr
