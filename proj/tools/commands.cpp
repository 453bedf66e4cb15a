#include "commands.hpp"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "foagp/effects.hpp"
#include "foagp/error.hpp"
#include "foagp/fit.hpp"
#include "foagp/hdmr.hpp"
#include "foagp/io.hpp"
#include "foagp/sensitivity.hpp"
#include "foagp/simulators.hpp"
#include "json.hpp"

namespace foagp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorKind::InvalidInput, std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw Error(ErrorKind::Io, std::string(what) + " not found: " + path);
}

void require_writable(const std::string& path) {
  fs::path dir = fs::path(path).parent_path();
  if (dir.empty()) dir = ".";
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "output directory does not exist: " + dir.string());
  if (::access(dir.c_str(), W_OK) != 0) throw Error(ErrorKind::Io, "output directory not writable: " + dir.string());
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument(text);
    const double lo = std::stod(text.substr(0, comma));
    const double hi = std::stod(text.substr(comma + 1));
    if (!(lo < hi)) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidInput, "range must be 'lo,hi' with lo < hi, got '" + text + "'");
  }
}

std::vector<long> parse_sizes(const std::string& text) {
  std::vector<long> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "bad size '" + item + "'");
    }
    if (out.back() < 5) throw Error(ErrorKind::InvalidInput, "sizes must be >= 5");
  }
  if (out.empty()) throw Error(ErrorKind::InvalidInput, "empty size ladder");
  return out;
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Input files of a dataset: long CSV or the three grid files.
struct DataSource {
  std::string data;
  std::string grid_dir;
  std::string inputs, positions, responses;

  void add_options(CLI::App* app) {
    app->add_option("--data", data, "long-format CSV (x1..xd,t,y)");
    app->add_option("--grid-dir", grid_dir, "directory with inputs.csv, positions.csv, responses.csv");
    app->add_option("--inputs", inputs, "grid inputs CSV");
    app->add_option("--positions", positions, "grid positions CSV");
    app->add_option("--responses", responses, "grid responses CSV");
  }

  bool is_grid() const { return data.empty(); }

  void resolve() {
    if (!grid_dir.empty()) {
      if (inputs.empty()) inputs = (fs::path(grid_dir) / "inputs.csv").string();
      if (positions.empty()) positions = (fs::path(grid_dir) / "positions.csv").string();
      if (responses.empty()) responses = (fs::path(grid_dir) / "responses.csv").string();
    }
    const bool grid = !inputs.empty() || !positions.empty() || !responses.empty();
    if (grid == !data.empty()) {
      throw Error(ErrorKind::InvalidInput, "give either --data or the grid files (--grid-dir)");
    }
    if (grid) {
      require_file(inputs, "inputs file");
      require_file(positions, "positions file");
      require_file(responses, "responses file");
    } else {
      require_file(data, "data file");
    }
  }

  Dataset load_long() const { return read_dataset_csv(data); }
  GridDataset load_grid() const { return read_grid(inputs, positions, responses); }
};

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  int example = 1;
  bool grid = false;
  std::optional<long> n;
  long m = 50;
  long dims = 2;
  std::optional<double> noise;
  std::uint64_t seed = 0;
  std::string out = ".";

  void add(CLI::App* app) {
    app->add_option("--example", example, "simulation example (1 or 2)")->check(CLI::Range(1, 2));
    app->add_flag("--grid", grid, "grid-structured synthetic data");
    app->add_option("--n", n, "samples (examples) or positions (grid)");
    app->add_option("--m", m, "grid inputs");
    app->add_option("--d", dims, "grid input dimension");
    app->add_option("--noise", noise, "noise standard deviation");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--out", out, "output directory");
  }

  int run(std::ostream& os) {
    SimSpec spec;
    spec.seed = seed;
    spec.noise_sd = noise;
    fs::create_directories(out);
    require_writable((fs::path(out) / "x").string());
    std::vector<std::pair<std::string, std::string>> manifest;
    if (grid) {
      spec.example = Example::SyntheticGrid;
      spec.m = m;
      spec.n = n.value_or(100);
      spec.dims = dims;
      const GridDataset g = gen_grid(spec);
      const auto p = [&](const char* f) { return (fs::path(out) / f).string(); };
      write_grid(p("inputs.csv"), p("positions.csv"), p("responses.csv"), g);
      manifest = {{p("inputs.csv"), std::to_string(g.inputs()) + " rows"},
                  {p("positions.csv"), std::to_string(g.positions()) + " rows"},
                  {p("responses.csv"), std::to_string(g.inputs()) + " x " + std::to_string(g.positions())}};
    } else {
      spec.example = example == 1 ? Example::Example1 : Example::Example2;
      spec.n_samples = n.value_or(2000);
      const auto [train, test] = split_train_test(gen_example(spec));
      const auto p = [&](const char* f) { return (fs::path(out) / f).string(); };
      write_dataset_csv(p("data_train.csv"), train);
      write_dataset_csv(p("data_test.csv"), test);
      write_truth_json(p("truth.json"), theoretical_truth(spec.example));
      manifest = {{p("data_train.csv"), std::to_string(train.size()) + " rows"},
                  {p("data_test.csv"), std::to_string(test.size()) + " rows"},
                  {p("truth.json"), "ground truth"}};
    }
    for (const auto& [file, what] : manifest) os << file << "\t" << what << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- fit

struct FitCmd {
  DataSource source;
  std::string test;
  std::string out = "model.json";
  int restarts = 8;
  std::uint64_t seed = 0;
  std::string output_kernel = "se";
  double period = 1.0;
  std::string optimizer = "lbfgs";
  int max_iterations = 500;
  double tolerance = 1e-8;
  bool force_dense = false;
  int threads = 0;

  void add(CLI::App* app) {
    source.add_options(app);
    app->add_option("--test", test, "held-out long-format CSV for test RMSE");
    app->add_option("--out", out, "model file (JSON; sidecar written next to it)");
    app->add_option("--restarts", restarts, "optimizer restarts");
    app->add_option("--seed", seed, "restart seed");
    app->add_option("--output-kernel", output_kernel, "se or periodic");
    app->add_option("--period", period, "period of the periodic output kernel");
    app->add_option("--optimizer", optimizer, "lbfgs or simplex");
    app->add_option("--max-iterations", max_iterations, "iterations per restart");
    app->add_option("--tolerance", tolerance, "absolute objective improvement to stop");
    app->add_flag("--force-dense", force_dense, "use the dense path for grid data");
    app->add_option("--threads", threads, "restart threads (0: FOAGP_THREADS or all cores)");
  }

  int run(std::ostream& os) {
    source.resolve();
    if (!test.empty()) require_file(test, "test file");
    require_writable(out);
    FitConfig config;
    config.output_family = parse_family(output_kernel);
    config.period = period;
    config.restarts = restarts;
    config.seed = seed;
    config.max_iterations = max_iterations;
    config.tolerance = tolerance;
    config.force_dense = force_dense;
    config.threads = threads;
    if (optimizer == "lbfgs") {
      config.optimizer = OptimizerKind::Lbfgs;
    } else if (optimizer == "simplex") {
      config.optimizer = OptimizerKind::Simplex;
    } else {
      throw Error(ErrorKind::InvalidInput, "unknown optimizer '" + optimizer + "'");
    }
    const std::optional<Dataset> test_data =
        test.empty() ? std::nullopt : std::optional<Dataset>(read_dataset_csv(test));
    const FittedModel model = source.is_grid() ? fit(source.load_grid(), config)
                                               : fit(source.load_long(), config);
    save_model(out, model);
    const FitLog& log = model.log();
    os << "path\t" << log.path << "\n";
    for (const auto& r : log.restarts) {
      os << "restart " << r.index << "\tinitial " << format_double(r.initial_objective) << "\tfinal "
         << format_double(r.final_objective) << "\titerations " << r.iterations << "\tevaluations "
         << r.evaluations << (r.error.empty() ? "" : "\terror " + r.error) << "\n";
    }
    os << "best_restart\t" << log.best_restart << "\n";
    os << "objective\t" << format_double(model.objective()) << "\n";
    os << "wall_seconds\t" << log.wall_seconds << "\n";
    if (test_data) {
      if (test_data->dims() != model.dims()) {
        throw Error(ErrorKind::Shape, "test data dimension differs from the model");
      }
      Eigen::VectorXd pred(test_data->size());
      for (Eigen::Index k = 0; k < test_data->size(); ++k) {
        pred[k] = predict(model, test_data->X.row(k).transpose(), test_data->T[k]);
      }
      os << "test_rmse\t" << format_double(rmse(pred, test_data->y)) << "\n";
    }
    os << "model\t" << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- decompose

std::vector<InputScaling> truth_scalings(Example example, InputScaling& out_scaling) {
  if (example == Example::Example1) {
    out_scaling = InputScaling::normal_cdf(0.0, 1.0);
    return {InputScaling::normal_cdf(0.0, 1.0), InputScaling::normal_cdf(0.0, 1.0)};
  }
  out_scaling = InputScaling::affine(0.2, 2.0);
  return {InputScaling::affine(1.0, 2.0), InputScaling::affine(0.9, 1.1)};
}

Dataset training_long(const FittedModel& model) {
  return model.is_grid() ? flatten(model.grid()) : model.dataset();
}

// Tensor grid over the training box with `steps` points per axis.
void box_points(const FittedModel& model, int steps, Eigen::MatrixXd& X, Eigen::VectorXd& T) {
  const Eigen::Index d = model.dims();
  const double count = std::pow(static_cast<double>(steps), static_cast<double>(d + 1));
  if (steps < 2 || count > 1e6) {
    throw Error(ErrorKind::InvalidInput, "--steps gives too many points; pass --points instead");
  }
  std::vector<Eigen::VectorXd> axes;
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& c = model.input_column(i);
    axes.push_back(Eigen::VectorXd::LinSpaced(steps, c.minCoeff(), c.maxCoeff()));
  }
  const auto& t = model.output_column();
  axes.push_back(Eigen::VectorXd::LinSpaced(steps, t.minCoeff(), t.maxCoeff()));
  const auto n = static_cast<Eigen::Index>(count);
  X.resize(n, d);
  T.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index rem = k;
    for (Eigen::Index a = d; a >= 0; --a) {
      const Eigen::Index idx = rem % steps;
      rem /= steps;
      if (a == d) {
        T[k] = axes[static_cast<std::size_t>(a)][idx];
      } else {
        X(k, a) = axes[static_cast<std::size_t>(a)][idx];
      }
    }
  }
}

struct DecomposeCmd {
  std::string model_path = "model.json";
  std::string points;
  int steps = 11;
  std::string out = "effects.csv";
  std::string json_out;
  std::optional<int> max_order;
  std::string baseline;
  int hdmr_order = 4;
  double ridge = 0.0;
  std::string truth;
  std::string summary;

  void add(CLI::App* app) {
    app->add_option("--model", model_path, "model file");
    app->add_option("--points", points, "CSV with columns x1..xd,t (extra columns ignored)");
    app->add_option("--steps", steps, "points per axis of the default tensor grid");
    app->add_option("--out", out, "effect table CSV");
    app->add_option("--json", json_out, "effect table JSON");
    app->add_option("--max-order", max_order, "largest effect order");
    app->add_option("--baseline", baseline, "comparator to add (hdmr)");
    app->add_option("--hdmr-order", hdmr_order, "HDMR truncation order");
    app->add_option("--ridge", ridge, "HDMR ridge penalty");
    app->add_option("--truth", truth, "truth.json of a simulation example");
    app->add_option("--summary", summary, "RMSE-vs-truth summary JSON");
  }

  int run(std::ostream& os) {
    require_file(model_path, "model file");
    if (!points.empty()) require_file(points, "points file");
    if (!truth.empty()) require_file(truth, "truth file");
    if (!baseline.empty() && baseline != "hdmr") {
      throw Error(ErrorKind::InvalidInput, "unknown baseline '" + baseline + "'");
    }
    require_writable(out);
    if (!json_out.empty()) require_writable(json_out);
    if (summary.empty() && !truth.empty()) {
      summary = (fs::path(out).parent_path() / (fs::path(out).stem().string() + "_summary.json")).string();
    }
    if (!summary.empty()) require_writable(summary);

    const FittedModel model = load_model(model_path);
    const Eigen::Index d = model.dims();
    Eigen::MatrixXd X;
    Eigen::VectorXd T;
    if (points.empty()) {
      box_points(model, steps, X, T);
    } else {
      const CsvTable pts = read_csv_table(points);
      X.resize(pts.values.rows(), d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index c = pts.column("x" + std::to_string(i + 1));
        if (c < 0) throw Error(ErrorKind::Parse, points + ":1: missing column x" + std::to_string(i + 1));
        X.col(i) = pts.values.col(c);
      }
      const Eigen::Index tc = pts.column("t");
      if (tc < 0) throw Error(ErrorKind::Parse, points + ":1: missing column t");
      T = pts.values.col(tc);
    }
    const int order = max_order.value_or(default_max_order(d));
    const EffectTable table = decompose(model, X, T, order);
    for (const auto& w : table.warnings) os << "warning\t" << w << "\n";
    CsvTable csv = effect_table_csv(table, d);

    std::optional<TruthBundle> tb;
    if (!truth.empty()) {
      tb = read_truth_json(truth);
      if (d != 2) throw Error(ErrorKind::Shape, "truth comparison needs a two-input model");
    }

    std::optional<HdmrModel> hdmr;
    std::vector<std::string> hdmr_names;
    Eigen::MatrixXd hdmr_values;
    if (baseline == "hdmr") {
      const Dataset train = training_long(model);
      if (tb) {
        InputScaling out_scale;
        auto in_scale = truth_scalings(tb->example, out_scale);
        hdmr = fit_hdmr(train, hdmr_order, ridge, std::move(in_scale), out_scale);
      } else {
        hdmr = fit_hdmr(train, hdmr_order, ridge);
      }
      hdmr_names.push_back("hdmr_f0");
      for (Eigen::Index i = 1; i <= d; ++i) {
        hdmr_names.push_back("hdmr_" + EffectIndex({static_cast<int>(i)}).name(d));
      }
      for (Eigen::Index i = 1; i <= d; ++i) {
        for (Eigen::Index j = i + 1; j <= d; ++j) {
          hdmr_names.push_back("hdmr_" + EffectIndex({static_cast<int>(i), static_cast<int>(j)}).name(d));
        }
      }
      hdmr_names.push_back("hdmr_total");
      hdmr_values.resize(X.rows(), static_cast<Eigen::Index>(hdmr_names.size()));
      for (Eigen::Index k = 0; k < X.rows(); ++k) {
        const HdmrEffects e = hdmr_effects(*hdmr, X.row(k).transpose(), T[k]);
        Eigen::Index c = 0;
        hdmr_values(k, c++) = e.mean;
        for (Eigen::Index i = 0; i < d; ++i) hdmr_values(k, c++) = e.main[i];
        for (const auto& pr : e.pairs) hdmr_values(k, c++) = pr.second;
        hdmr_values(k, c++) = e.total();
      }
      Eigen::MatrixXd merged(csv.values.rows(), csv.values.cols() + hdmr_values.cols());
      merged << csv.values, hdmr_values;
      csv.values = merged;
      csv.header.insert(csv.header.end(), hdmr_names.begin(), hdmr_names.end());
      os << "hdmr_training_rmse\t" << format_double(hdmr->training_rmse) << "\n";
    }
    write_csv_table(out, csv);
    if (!json_out.empty()) write_effect_table_json(json_out, table, d);

    if (table.complete) {
      const double scale = std::max(1.0, table.total.cwiseAbs().maxCoeff());
      const double resid = table.max_sum_residual();
      os << "sum_identity\t" << (resid <= 1e-10 * scale ? "pass" : "fail") << "\tmax_residual "
         << format_double(resid) << "\n";
    }

    if (tb) {
      json js;
      js["example"] = to_string(tb->example);
      js["points"] = X.rows();
      const std::vector<EffectIndex> subsets = {EffectIndex(), EffectIndex({1}), EffectIndex({2}),
                                                EffectIndex({1, 2})};
      for (const auto& u : subsets) {
        Eigen::VectorXd truth_v(X.rows()), fo(X.rows());
        const auto it = std::find(table.subsets.begin(), table.subsets.end(), u);
        if (it == table.subsets.end()) continue;
        const auto col = static_cast<Eigen::Index>(it - table.subsets.begin());
        for (Eigen::Index k = 0; k < X.rows(); ++k) {
          truth_v[k] = truth_effect(tb->example, u, X.row(k).transpose(), T[k]);
        }
        fo = table.values.col(col);
        const std::string name = u.name(2);
        js["foagp"][name] = rmse(fo, truth_v);
        os << "rmse_foagp_" << name << "\t" << format_double(rmse(fo, truth_v)) << "\n";
        if (hdmr) {
          const std::string hname = "hdmr_" + name;
          const auto hc = static_cast<Eigen::Index>(
              std::find(hdmr_names.begin(), hdmr_names.end(), hname) - hdmr_names.begin());
          const Eigen::VectorXd hv = hdmr_values.col(hc);
          js["hdmr"][name] = rmse(hv, truth_v);
          os << "rmse_hdmr_" << name << "\t" << format_double(rmse(hv, truth_v)) << "\n";
        }
      }
      std::ofstream f(summary);
      f << js.dump(2) << "\n";
      if (!f) throw Error(ErrorKind::Io, "write failed: " + summary);
      os << "summary\t" << summary << "\n";
    }
    os << "effects\t" << out << "\t" << X.rows() << " points\n";
    return 0;
  }
};

// ---------------------------------------------------------------- sensitivity

struct SensitivityCmd {
  std::string model_path = "model.json";
  std::string out_json = "ecv.json";
  std::string out_csv = "local_variance.csv";
  std::string t_range;
  int t_points = 101;
  std::optional<int> max_order;
  std::string truth;

  void add(CLI::App* app) {
    app->add_option("--model", model_path, "model file");
    app->add_option("--out-json", out_json, "report JSON");
    app->add_option("--out-csv", out_csv, "local variance and Sobol curves CSV");
    app->add_option("--t-range", t_range, "curve positions 'lo,hi' (default: training range)");
    app->add_option("--t-points", t_points, "number of curve positions");
    app->add_option("--max-order", max_order, "largest effect order");
    app->add_option("--truth", truth, "truth.json to compare ECV indices against");
  }

  int run(std::ostream& os) {
    require_file(model_path, "model file");
    if (!truth.empty()) require_file(truth, "truth file");
    require_writable(out_json);
    require_writable(out_csv);
    if (t_points < 2) throw Error(ErrorKind::InvalidInput, "--t-points must be >= 2");
    const FittedModel model = load_model(model_path);
    Eigen::VectorXd grid;
    if (t_range.empty()) {
      const auto& t = model.output_column();
      grid = linspace(t.minCoeff(), t.maxCoeff(), t_points);
    } else {
      const auto [lo, hi] = parse_range(t_range);
      grid = linspace(lo, hi, t_points);
    }
    const SensitivityReport rep =
        sensitivity_report(model, max_order.value_or(default_max_order(model.dims())), grid);
    write_sensitivity_json(out_json, rep);
    write_sensitivity_csv(out_csv, rep);
    for (const auto& w : rep.warnings) os << "warning\t" << w << "\n";
    const auto names = rep.names();
    for (std::size_t s = 0; s < names.size(); ++s) {
      os << "S_" << names[s] << "\t" << format_double(rep.ecv_index[static_cast<Eigen::Index>(s)]) << "\n";
    }
    if (!truth.empty()) {
      const TruthBundle tb = read_truth_json(truth);
      double worst = 0.0;
      for (std::size_t s = 0; s < tb.subsets.size(); ++s) {
        const Eigen::Index k = rep.find(tb.subsets[s]);
        if (k < 0) continue;
        const double diff = std::abs(rep.ecv_index[k] - tb.ecv_reported[static_cast<Eigen::Index>(s)]);
        worst = std::max(worst, diff);
        os << "truth_" << tb.subsets[s].name(2) << "\t" << format_double(tb.ecv_reported[static_cast<Eigen::Index>(s)])
           << "\tabs_error " << format_double(diff) << "\n";
      }
      os << "max_abs_error\t" << format_double(worst) << "\n";
    }
    os << "report\t" << out_json << "\t" << out_csv << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- benchmark

struct BenchmarkCmd {
  int example = 1;
  std::string sizes = "200,500,1000,2000";
  int repeats = 5;
  std::uint64_t seed = 0;
  int restarts = 2;
  int threads = 0;
  std::string out = "benchmark.csv";
  std::string summary;

  void add(CLI::App* app) {
    app->add_option("--example", example, "simulation example (1 or 2)")->check(CLI::Range(1, 2));
    app->add_option("--sizes", sizes, "comma-separated dataset sizes (before the 4:1 split)");
    app->add_option("--repeats", repeats, "repeats per size");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--restarts", restarts, "optimizer restarts per fit");
    app->add_option("--threads", threads, "concurrent repeats (0: FOAGP_THREADS or all cores)");
    app->add_option("--out", out, "per-repeat CSV");
    app->add_option("--summary", summary, "per-size summary CSV");
  }

  int run(std::ostream& os) {
    const std::vector<long> ladder = parse_sizes(sizes);
    if (repeats < 1) throw Error(ErrorKind::InvalidInput, "--repeats must be >= 1");
    if (summary.empty()) {
      summary = (fs::path(out).parent_path() / (fs::path(out).stem().string() + "_summary.csv")).string();
    }
    require_writable(out);
    require_writable(summary);
    const Example ex = example == 1 ? Example::Example1 : Example::Example2;
    const TruthBundle tb = theoretical_truth(ex);

    struct Job {
      long size;
      int repeat;
    };
    std::vector<Job> jobs;
    for (long s : ladder) {
      for (int r = 0; r < repeats; ++r) jobs.push_back({s, r});
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(jobs.size()), 6);
    std::vector<std::string> errors(jobs.size());
    const int workers = std::min<int>(thread_cap(threads), static_cast<int>(jobs.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
        const Job job = jobs[j];
        try {
          SimSpec spec;
          spec.example = ex;
          spec.n_samples = job.size;
          spec.seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(job.size) * 1000003ULL +
                                                   static_cast<std::uint64_t>(job.repeat)));
          const auto [train, test] = split_train_test(gen_example(spec));
          FitConfig cfg;
          cfg.restarts = restarts;
          cfg.seed = spec.seed;
          cfg.threads = 1;
          const FittedModel m = fit(train, cfg);
          const EcvIndices idx = ecv_indices(m, 2);
          Eigen::VectorXd pred(test.size());
          for (Eigen::Index k = 0; k < test.size(); ++k) pred[k] = predict(m, test.X.row(k).transpose(), test.T[k]);
          const auto jj = static_cast<Eigen::Index>(j);
          rows(jj, 0) = static_cast<double>(job.size);
          rows(jj, 1) = job.repeat;
          rows(jj, 2) = idx.at(EffectIndex({1}));
          rows(jj, 3) = idx.at(EffectIndex({2}));
          rows(jj, 4) = idx.at(EffectIndex({1, 2}));
          rows(jj, 5) = rmse(pred, test.y);
        } catch (const std::exception& e) {
          errors[j] = e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (!errors[j].empty()) {
        throw Error(ErrorKind::FitFailure, "benchmark size " + std::to_string(jobs[j].size) + " repeat " +
                                               std::to_string(jobs[j].repeat) + ": " + errors[j]);
      }
    }
    write_csv_table(out, CsvTable{{"size", "repeat", "S1", "S2", "S12", "rmse"}, rows});

    CsvTable sum;
    sum.header = {"size", "S1_mean", "S1_sd", "S2_mean", "S2_sd", "S12_mean", "S12_sd",
                  "rmse_mean", "rmse_sd", "index_abs_error"};
    sum.values.resize(static_cast<Eigen::Index>(ladder.size()), 10);
    for (std::size_t s = 0; s < ladder.size(); ++s) {
      const auto block = rows.middleRows(static_cast<Eigen::Index>(s) * repeats, repeats);
      const auto row = static_cast<Eigen::Index>(s);
      sum.values(row, 0) = static_cast<double>(ladder[s]);
      for (Eigen::Index c = 0; c < 4; ++c) {
        const Eigen::VectorXd v = block.col(2 + c);
        const double mean = v.mean();
        const double sd = repeats > 1 ? std::sqrt((v.array() - mean).square().sum() / (repeats - 1)) : 0.0;
        sum.values(row, 1 + 2 * c) = mean;
        sum.values(row, 2 + 2 * c) = sd;
      }
      // Mean over repeats of the mean absolute index error.
      double err = 0.0;
      for (Eigen::Index r = 0; r < repeats; ++r) {
        for (Eigen::Index c = 0; c < 3; ++c) err += std::abs(block(r, 2 + c) - tb.ecv_reported[c]);
      }
      err /= 3.0 * repeats;
      sum.values(row, 9) = err;
      os << "size " << ladder[s] << "\tS " << format_double(sum.values(row, 1)) << " "
         << format_double(sum.values(row, 3)) << " " << format_double(sum.values(row, 5)) << "\trmse "
         << format_double(sum.values(row, 7)) << "\tindex_abs_error " << format_double(err) << "\n";
    }
    write_csv_table(summary, sum);
    os << "table\t" << out << "\nsummary\t" << summary << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- convert

struct ConvertCmd {
  DataSource source;
  std::string to;
  std::string to_grid;

  void add(CLI::App* app) {
    source.add_options(app);
    app->add_option("--to", to, "long-format CSV to write");
    app->add_option("--to-grid", to_grid, "directory for the three grid files");
  }

  int run(std::ostream& os) {
    source.resolve();
    if (to.empty() == to_grid.empty()) throw Error(ErrorKind::InvalidInput, "give exactly one of --to or --to-grid");
    if (!to.empty()) {
      require_writable(to);
      const Dataset d = source.is_grid() ? flatten(source.load_grid()) : source.load_long();
      write_dataset_csv(to, d);
      os << to << "\t" << d.size() << " rows\n";
      return 0;
    }
    if (source.is_grid()) {
      throw Error(ErrorKind::InvalidInput, "input is already in grid format");
    }
    const Dataset d = source.load_long();
    // Positions in order of first appearance; inputs likewise, then every pair must occur once.
    std::map<double, Eigen::Index> tpos;
    std::vector<double> tau;
    std::map<std::vector<double>, Eigen::Index> xpos;
    std::vector<std::vector<double>> chi;
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (tpos.emplace(d.T[k], static_cast<Eigen::Index>(tau.size())).second) tau.push_back(d.T[k]);
      std::vector<double> x(d.X.row(k).data(), d.X.row(k).data() + 0);
      x.resize(static_cast<std::size_t>(d.dims()));
      for (Eigen::Index i = 0; i < d.dims(); ++i) x[static_cast<std::size_t>(i)] = d.X(k, i);
      if (xpos.emplace(x, static_cast<Eigen::Index>(chi.size())).second) chi.push_back(x);
    }
    const auto m = static_cast<Eigen::Index>(chi.size());
    const auto n = static_cast<Eigen::Index>(tau.size());
    if (m * n != d.size()) {
      throw Error(ErrorKind::Shape, "data is not a full grid: " + std::to_string(m) + " inputs x " +
                                        std::to_string(n) + " positions != " + std::to_string(d.size()) + " rows");
    }
    GridDataset g;
    g.chi.resize(m, d.dims());
    for (Eigen::Index u = 0; u < m; ++u) {
      for (Eigen::Index i = 0; i < d.dims(); ++i) g.chi(u, i) = chi[static_cast<std::size_t>(u)][static_cast<std::size_t>(i)];
    }
    g.tau = Eigen::Map<const Eigen::VectorXd>(tau.data(), n);
    g.Y = Eigen::MatrixXd::Constant(m, n, std::nan(""));
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      std::vector<double> x(static_cast<std::size_t>(d.dims()));
      for (Eigen::Index i = 0; i < d.dims(); ++i) x[static_cast<std::size_t>(i)] = d.X(k, i);
      double& cell = g.Y(xpos.at(x), tpos.at(d.T[k]));
      if (!std::isnan(cell)) throw Error(ErrorKind::Shape, "duplicate (x, t) pair in long data");
      cell = d.y[k];
    }
    fs::create_directories(to_grid);
    const auto p = [&](const char* f) { return (fs::path(to_grid) / f).string(); };
    write_grid(p("inputs.csv"), p("positions.csv"), p("responses.csv"), g);
    os << to_grid << "\t" << m << " inputs x " << n << " positions\n";
    return 0;
  }
};

// Applies a JSON config to options not given on the command line. Unknown keys are errors.
void apply_config(CLI::App* sub, const std::string& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  if (!cfg.is_object()) throw Error(ErrorKind::Parse, path + ": config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      throw Error(ErrorKind::InvalidInput, path + ": unknown key '" + key + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;  // command line wins
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else if (value.is_boolean()) {
      text = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer()) {
      text = std::to_string(value.get<long long>());
    } else if (value.is_number()) {
      text = format_double(value.get<double>());
    } else {
      throw Error(ErrorKind::InvalidInput, path + ": key '" + key + "' must be a scalar");
    }
    try {
      opt->add_result(text);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorKind::InvalidInput, path + ": key '" + key + "': " + e.what());
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional-output orthogonal additive Gaussian processes"};
  app.name("foagp");
  app.require_subcommand(1);
  SimulateCmd simulate;
  FitCmd fitc;
  DecomposeCmd decomposec;
  SensitivityCmd sensitivity;
  BenchmarkCmd benchmark;
  ConvertCmd convert;
  std::map<CLI::App*, std::string> configs;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    sub->add_option("--config", configs[sub], "JSON file of option values; flags override");
    return sub;
  };
  CLI::App* s_sim = add("simulate", "generate example or grid datasets", simulate);
  CLI::App* s_fit = add("fit", "fit a model by maximum likelihood", fitc);
  CLI::App* s_dec = add("decompose", "effect decomposition at points", decomposec);
  CLI::App* s_sen = add("sensitivity", "local variances and ECV indices", sensitivity);
  CLI::App* s_ben = add("benchmark", "index convergence over dataset sizes", benchmark);
  CLI::App* s_con = add("convert", "convert between long and grid formats", convert);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::Error& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    for (auto& [sub, path] : configs) {
      if (sub->parsed() && !path.empty()) apply_config(sub, path);
    }
    if (s_sim->parsed()) return simulate.run(out);
    if (s_fit->parsed()) return fitc.run(out);
    if (s_dec->parsed()) return decomposec.run(out);
    if (s_sen->parsed()) return sensitivity.run(out);
    if (s_ben->parsed()) return benchmark.run(out);
    if (s_con->parsed()) return convert.run(out);
  } catch (const Error& e) {
    err << "foagp: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return e.is_input_error() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "foagp: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"foagp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace foagp::cli
