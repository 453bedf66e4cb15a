#include "foagp/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "foagp/error.hpp"
#include "json.hpp"

namespace foagp {

using nlohmann::json;

namespace {

constexpr int kModelVersion = 1;
constexpr char kSidecarMagic[8] = {'F', 'O', 'A', 'G', 'P', 'M', 'D', '1'};

std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::Parse, where(path, line) + "not a number: '" + cell + "'");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::Parse, where(path, line) + "non-finite value '" + cell + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  return in;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = a[i].is_null() ? std::nan("") : a[i].get<double>();
  }
  return v;
}

json subset_json(const EffectIndex& u) { return json(u.indices); }

void write_json(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void put_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_doubles(std::ostream& out, const double* p, Eigen::Index n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw Error(ErrorKind::Parse, path + ": truncated sidecar");
  }
  return v;
}

void get_doubles(std::istream& in, double* p, Eigen::Index n, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)))) {
    throw Error(ErrorKind::Parse, path + ": truncated sidecar");
  }
}

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw Error(ErrorKind::Unsupported, "model sidecars require a little-endian host");
  }
}

template <class T>
T field(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw Error(ErrorKind::Parse, path + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Eigen::Index CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return static_cast<Eigen::Index>(k);
  }
  return -1;
}

CsvTable read_csv_table(const std::string& path, bool has_header) {
  auto in = open_in(path);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool header_done = !has_header;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (!header_done) {
      table.header = cells;
      width = cells.size();
      header_done = true;
      continue;
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw Error(ErrorKind::Parse, where(path, lineno) + "expected " + std::to_string(width) +
                                        " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    for (const auto& c : cells) row.push_back(parse_number(c, path, lineno));
    rows.push_back(std::move(row));
  }
  if (!header_done) throw Error(ErrorKind::Parse, path + ": empty file");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

void write_csv_table(const std::string& path, const CsvTable& table) {
  auto out = open_out(path);
  for (std::size_t k = 0; k < table.header.size(); ++k) {
    out << (k ? "," : "") << table.header[k];
  }
  if (!table.header.empty()) out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      out << (c ? "," : "") << format_double(table.values(r, c));
    }
    out << '\n';
  }
  finish(out, path);
}

Dataset read_dataset_csv(const std::string& path) {
  const CsvTable t = read_csv_table(path);
  const auto cols = static_cast<Eigen::Index>(t.header.size());
  if (cols < 3) throw Error(ErrorKind::Parse, where(path, 1) + "header must be x1..xd,t,y");
  for (Eigen::Index i = 0; i + 2 < cols; ++i) {
    if (t.header[static_cast<std::size_t>(i)] != "x" + std::to_string(i + 1)) {
      throw Error(ErrorKind::Parse, where(path, 1) + "expected column 'x" + std::to_string(i + 1) +
                                        "', found '" + t.header[static_cast<std::size_t>(i)] + "'");
    }
  }
  if (t.header[static_cast<std::size_t>(cols - 2)] != "t" ||
      t.header[static_cast<std::size_t>(cols - 1)] != "y") {
    throw Error(ErrorKind::Parse, where(path, 1) + "last two columns must be t,y");
  }
  Dataset d;
  d.X = t.values.leftCols(cols - 2);
  d.T = t.values.col(cols - 2);
  d.y = t.values.col(cols - 1);
  d.validate();
  return d;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  CsvTable t;
  for (Eigen::Index i = 0; i < data.dims(); ++i) t.header.push_back("x" + std::to_string(i + 1));
  t.header.push_back("t");
  t.header.push_back("y");
  t.values.resize(data.size(), data.dims() + 2);
  t.values << data.X, data.T, data.y;
  write_csv_table(path, t);
}

GridDataset read_grid(const std::string& inputs, const std::string& positions,
                      const std::string& responses) {
  const CsvTable ti = read_csv_table(inputs);
  for (std::size_t i = 0; i < ti.header.size(); ++i) {
    if (ti.header[i] != "x" + std::to_string(i + 1)) {
      throw Error(ErrorKind::Parse, where(inputs, 1) + "header must be x1..xd");
    }
  }
  const CsvTable tp = read_csv_table(positions);
  if (tp.header.size() != 1 || tp.header[0] != "t") {
    throw Error(ErrorKind::Parse, where(positions, 1) + "header must be t");
  }
  const CsvTable tr = read_csv_table(responses, false);
  GridDataset g;
  g.chi = ti.values;
  g.tau = tp.values.col(0);
  g.Y = tr.values;
  if (g.Y.rows() != g.chi.rows() || g.Y.cols() != g.tau.size()) {
    throw Error(ErrorKind::Shape, responses + ": responses must be " +
                                      std::to_string(g.chi.rows()) + " x " +
                                      std::to_string(g.tau.size()));
  }
  g.validate();
  return g;
}

void write_grid(const std::string& inputs, const std::string& positions,
                const std::string& responses, const GridDataset& grid) {
  CsvTable ti;
  for (Eigen::Index i = 0; i < grid.dims(); ++i) ti.header.push_back("x" + std::to_string(i + 1));
  ti.values = grid.chi;
  write_csv_table(inputs, ti);
  CsvTable tp;
  tp.header = {"t"};
  tp.values = grid.tau;
  write_csv_table(positions, tp);
  CsvTable tr;
  tr.values = grid.Y;
  write_csv_table(responses, tr);
}

// ---------------------------------------------------------------- models

void save_model(const std::string& path, const FittedModel& model) {
  require_little_endian();
  const std::string sidecar = path + ".bin";
  const bool grid = model.is_grid();
  const HyperParams& p = model.params();
  json j;
  j["format"] = "foagp-model";
  j["version"] = kModelVersion;
  j["layout"] = grid ? "grid" : "dense";
  j["dims"] = model.dims();
  j["size"] = model.size();
  j["output_family"] = to_string(model.output_spec().family);
  j["hyperparameters"] = {{"delta", vec_json(p.delta)},
                          {"theta", vec_json(p.theta)},
                          {"sigma2", p.sigma2},
                          {"period", p.period}};
  j["y_mean"] = model.y_mean();
  j["objective"] = model.objective();
  json moments = json::array();
  for (const auto& m : model.moments()) moments.push_back({{"grand_mean", m.grand_mean}});
  j["moments"] = moments;
  j["fingerprint"] = hex64(grid ? fingerprint(model.grid()) : fingerprint(model.dataset()));
  j["sidecar"] = std::filesystem::path(sidecar).filename().string();
  const FitLog& log = model.log();
  json restarts = json::array();
  for (const auto& r : log.restarts) {
    restarts.push_back({{"index", r.index},
                        {"initial_objective", r.initial_objective},
                        {"final_objective", r.final_objective},
                        {"iterations", r.iterations},
                        {"evaluations", r.evaluations},
                        {"failed_evaluations", r.failed_evaluations},
                        {"converged", r.converged},
                        {"error", r.error}});
  }
  j["fit_log"] = {{"path", log.path},
                  {"best_restart", log.best_restart},
                  {"wall_seconds", log.wall_seconds},
                  {"restarts", restarts},
                  {"warnings", log.warnings}};

  auto out = open_out(sidecar, std::ios::out | std::ios::binary);
  out.write(kSidecarMagic, sizeof kSidecarMagic);
  put_u64(out, grid ? 1 : 0);
  put_u64(out, static_cast<std::uint64_t>(model.dims()));
  if (grid) {
    const GridDataset& g = model.grid();
    put_u64(out, static_cast<std::uint64_t>(g.inputs()));
    put_u64(out, static_cast<std::uint64_t>(g.positions()));
    put_doubles(out, g.chi.data(), g.chi.size());
    put_doubles(out, g.tau.data(), g.tau.size());
    put_doubles(out, g.Y.data(), g.Y.size());
  } else {
    const Dataset& d = model.dataset();
    put_u64(out, static_cast<std::uint64_t>(d.size()));
    put_u64(out, 1);
    put_doubles(out, d.X.data(), d.X.size());
    put_doubles(out, d.T.data(), d.T.size());
    put_doubles(out, d.y.data(), d.y.size());
  }
  put_doubles(out, model.gamma().data(), model.gamma().size());
  finish(out, sidecar);
  write_json(path, j);
}

FittedModel load_model(const std::string& path) {
  require_little_endian();
  const json j = read_json(path);
  if (field<std::string>(j, "format", path) != "foagp-model") {
    throw Error(ErrorKind::Parse, path + ": not a model file");
  }
  const int version = field<int>(j, "version", path);
  if (version != kModelVersion) {
    throw Error(ErrorKind::Unsupported, path + ": unsupported model version " +
                                            std::to_string(version));
  }
  const std::string layout = field<std::string>(j, "layout", path);
  const auto dims = field<Eigen::Index>(j, "dims", path);
  const KernelFamily family = parse_family(field<std::string>(j, "output_family", path));
  const json& hp = j.at("hyperparameters");
  HyperParams p;
  p.delta = json_vec(hp.at("delta"));
  p.theta = json_vec(hp.at("theta"));
  p.sigma2 = hp.at("sigma2").get<double>();
  p.period = hp.at("period").get<double>();
  if (p.dims() != dims) throw Error(ErrorKind::Parse, path + ": hyperparameters do not match dims");
  const double y_mean = field<double>(j, "y_mean", path);

  const std::filesystem::path sidecar =
      std::filesystem::path(path).parent_path() / field<std::string>(j, "sidecar", path);
  auto in = open_in(sidecar.string(), std::ios::in | std::ios::binary);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kSidecarMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::Parse, sidecar.string() + ": bad sidecar header");
  }
  const std::string sp = sidecar.string();
  const bool grid = get_u64(in, sp) == 1;
  if (grid != (layout == "grid")) throw Error(ErrorKind::Parse, sp + ": layout mismatch");
  if (static_cast<Eigen::Index>(get_u64(in, sp)) != dims) {
    throw Error(ErrorKind::Parse, sp + ": dimension mismatch");
  }
  const auto rows = static_cast<Eigen::Index>(get_u64(in, sp));
  const auto cols = static_cast<Eigen::Index>(get_u64(in, sp));
  if (rows < 1 || cols < 1 || rows > (Eigen::Index{1} << 32) || cols > (Eigen::Index{1} << 32)) {
    throw Error(ErrorKind::Parse, sp + ": implausible sizes");
  }

  std::uint64_t fp = 0;
  Eigen::VectorXd gamma;
  std::optional<FittedModel> model;
  if (grid) {
    GridDataset g;
    g.chi.resize(rows, dims);
    g.tau.resize(cols);
    g.Y.resize(rows, cols);
    get_doubles(in, g.chi.data(), g.chi.size(), sp);
    get_doubles(in, g.tau.data(), g.tau.size(), sp);
    get_doubles(in, g.Y.data(), g.Y.size(), sp);
    gamma.resize(rows * cols);
    get_doubles(in, gamma.data(), gamma.size(), sp);
    fp = fingerprint(g);
    model.emplace(FittedModel::restore(g, p, family, y_mean, gamma));
  } else {
    Dataset d;
    d.X.resize(rows, dims);
    d.T.resize(rows);
    d.y.resize(rows);
    get_doubles(in, d.X.data(), d.X.size(), sp);
    get_doubles(in, d.T.data(), d.T.size(), sp);
    get_doubles(in, d.y.data(), d.y.size(), sp);
    gamma.resize(rows);
    get_doubles(in, gamma.data(), gamma.size(), sp);
    fp = fingerprint(d);
    model.emplace(FittedModel::restore(d, p, family, y_mean, gamma));
  }
  if (hex64(fp) != field<std::string>(j, "fingerprint", path)) {
    throw Error(ErrorKind::Parse, sp + ": data fingerprint does not match the envelope");
  }
  if (j.contains("moments")) {
    const json& m = j.at("moments");
    if (m.size() != static_cast<std::size_t>(dims)) {
      throw Error(ErrorKind::Parse, path + ": moment cache count mismatch");
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i].at("grand_mean").get<double>() != model->moments()[i].grand_mean) {
        throw Error(ErrorKind::Parse, path + ": moment cache mismatch in dimension " +
                                          std::to_string(i + 1));
      }
    }
  }
  FitLog log;
  if (j.contains("fit_log")) {
    const json& fl = j.at("fit_log");
    log.path = fl.value("path", "");
    log.best_restart = fl.value("best_restart", -1);
    log.wall_seconds = fl.value("wall_seconds", 0.0);
    for (const auto& r : fl.value("restarts", json::array())) {
      RestartLog rl;
      rl.index = r.value("index", 0);
      rl.initial_objective = r.value("initial_objective", 0.0);
      rl.final_objective = r.value("final_objective", 0.0);
      rl.iterations = r.value("iterations", 0);
      rl.evaluations = r.value("evaluations", 0);
      rl.failed_evaluations = r.value("failed_evaluations", 0);
      rl.converged = r.value("converged", false);
      rl.error = r.value("error", "");
      log.restarts.push_back(rl);
    }
    log.warnings = fl.value("warnings", std::vector<std::string>{});
  }
  model->set_log(std::move(log));
  return std::move(*model);
}

// ---------------------------------------------------------------- reports

CsvTable effect_table_csv(const EffectTable& table, Eigen::Index dims) {
  CsvTable t;
  for (Eigen::Index i = 0; i < dims; ++i) t.header.push_back("x" + std::to_string(i + 1));
  t.header.push_back("t");
  for (const auto& s : table.subsets) t.header.push_back(s.name(dims));
  t.header.push_back("total");
  const Eigen::Index n = table.T.size();
  t.values.resize(n, dims + 1 + table.values.cols() + 1);
  t.values << table.X, table.T, table.values, table.total;
  return t;
}

void write_effect_table(const std::string& path, const EffectTable& table, Eigen::Index dims) {
  write_csv_table(path, effect_table_csv(table, dims));
}

void write_effect_table_json(const std::string& path, const EffectTable& table,
                             Eigen::Index dims) {
  json j;
  json x = json::array();
  for (Eigen::Index r = 0; r < table.X.rows(); ++r) x.push_back(vec_json(table.X.row(r).transpose()));
  j["x"] = x;
  j["t"] = vec_json(table.T);
  json effects = json::array();
  for (std::size_t s = 0; s < table.subsets.size(); ++s) {
    effects.push_back({{"name", table.subsets[s].name(dims)},
                       {"subset", subset_json(table.subsets[s])},
                       {"values", vec_json(table.values.col(static_cast<Eigen::Index>(s)))}});
  }
  j["effects"] = effects;
  j["total"] = vec_json(table.total);
  j["complete"] = table.complete;
  if (table.complete) j["max_sum_residual"] = table.max_sum_residual();
  j["warnings"] = table.warnings;
  write_json(path, j);
}

void write_sensitivity_json(const std::string& path, const SensitivityReport& report) {
  json j;
  j["dims"] = report.dims;
  j["complete"] = report.complete;
  j["t_grid"] = vec_json(report.t_grid);
  json effects = json::array();
  for (std::size_t s = 0; s < report.subsets.size(); ++s) {
    const auto k = static_cast<Eigen::Index>(s);
    effects.push_back({{"name", report.subsets[s].name(report.dims)},
                       {"subset", subset_json(report.subsets[s])},
                       {"global_variance", report.global_variance[k]},
                       {"ecv_index", report.ecv_index[k]},
                       {"local_variance", vec_json(report.local_variance.col(k))},
                       {"local_sobol", vec_json(report.local_sobol.col(k))}});
  }
  j["effects"] = effects;
  j["total_global_variance"] = report.total_global_variance;
  j["total_local_variance"] = vec_json(report.total_local_variance);
  j["warnings"] = report.warnings;
  write_json(path, j);
}

void write_sensitivity_csv(const std::string& path, const SensitivityReport& report) {
  CsvTable t;
  t.header.push_back("t");
  const auto names = report.names();
  for (const auto& n : names) t.header.push_back("V_" + n);
  for (const auto& n : names) t.header.push_back("S_" + n);
  t.header.push_back("V_total");
  t.values.resize(report.t_grid.size(), 2 + 2 * static_cast<Eigen::Index>(names.size()));
  t.values << report.t_grid, report.local_variance, report.local_sobol,
      report.total_local_variance;
  write_csv_table(path, t);
}

void write_truth_json(const std::string& path, const TruthBundle& truth) {
  json j;
  j["example"] = to_string(truth.example);
  json subsets = json::array();
  for (std::size_t s = 0; s < truth.subsets.size(); ++s) {
    const auto k = static_cast<Eigen::Index>(s);
    subsets.push_back({{"name", truth.subsets[s].name(2)},
                       {"subset", subset_json(truth.subsets[s])},
                       {"ecv_reported", truth.ecv_reported[k]},
                       {"ecv_computed", truth.ecv_computed[k]},
                       {"local_variance", vec_json(truth.local_variance.col(k))}});
  }
  j["effects"] = subsets;
  j["t_grid"] = vec_json(truth.t_grid);
  j["mean_effect"] = vec_json(truth.mean_effect.col(0));
  write_json(path, j);
}

TruthBundle read_truth_json(const std::string& path) {
  const json j = read_json(path);
  TruthBundle b;
  try {
    b.example = parse_example(j.at("example").get<std::string>());
    const json& e = j.at("effects");
    const auto k = static_cast<Eigen::Index>(e.size());
    b.t_grid = json_vec(j.at("t_grid"));
    b.mean_effect = json_vec(j.at("mean_effect"));
    b.ecv_reported.resize(k);
    b.ecv_computed.resize(k);
    b.local_variance.resize(b.t_grid.size(), k);
    for (Eigen::Index s = 0; s < k; ++s) {
      const json& item = e[static_cast<std::size_t>(s)];
      b.subsets.emplace_back(item.at("subset").get<std::vector<int>>());
      b.ecv_reported[s] = item.at("ecv_reported").get<double>();
      b.ecv_computed[s] = item.at("ecv_computed").get<double>();
      const Eigen::VectorXd lv = json_vec(item.at("local_variance"));
      if (lv.size() != b.t_grid.size()) throw Error(ErrorKind::Parse, path + ": curve length");
      b.local_variance.col(s) = lv;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
  return b;
}

std::string to_string(Example example) {
  switch (example) {
    case Example::Example1: return "example1";
    case Example::Example2: return "example2";
    case Example::SyntheticGrid: return "grid";
  }
  return "unknown";
}

Example parse_example(const std::string& text) {
  if (text == "1" || text == "example1") return Example::Example1;
  if (text == "2" || text == "example2") return Example::Example2;
  if (text == "grid") return Example::SyntheticGrid;
  throw Error(ErrorKind::InvalidInput, "unknown example '" + text + "'");
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::Periodic ? "periodic" : "se";
}

KernelFamily parse_family(const std::string& text) {
  if (text == "se" || text == "squared-exponential") return KernelFamily::SquaredExponential;
  if (text == "periodic") return KernelFamily::Periodic;
  throw Error(ErrorKind::InvalidInput, "unknown kernel family '" + text + "'");
}

}  // namespace foagp
