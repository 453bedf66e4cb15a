#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "foagp/data.hpp"
#include "foagp/effects.hpp"
#include "foagp/fit.hpp"
#include "foagp/hdmr.hpp"
#include "foagp/sensitivity.hpp"
#include "foagp/simulators.hpp"

namespace foagp {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Numeric table with a header line. Parse errors carry "path:line".
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  Eigen::Index column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv_table(const std::string& path, bool has_header = true);
void write_csv_table(const std::string& path, const CsvTable& table);

/// Long format: header x1..xd,t,y.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Three files: inputs (header x1..xd), positions (header t), responses (m x n, no header).
GridDataset read_grid(const std::string& inputs, const std::string& positions,
                      const std::string& responses);
void write_grid(const std::string& inputs, const std::string& positions,
                const std::string& responses, const GridDataset& grid);

/// JSON envelope plus binary sidecar `<path>.bin` with the training data and gamma.
/// Loading re-factorizes; predictions are bit-identical to the saved model.
void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

/// Columns x1..xd, t, one per effect name, total.
CsvTable effect_table_csv(const EffectTable& table, Eigen::Index dims);
void write_effect_table(const std::string& path, const EffectTable& table, Eigen::Index dims);
void write_effect_table_json(const std::string& path, const EffectTable& table, Eigen::Index dims);

void write_sensitivity_json(const std::string& path, const SensitivityReport& report);
/// Columns t, V_<name>..., S_<name>..., V_total.
void write_sensitivity_csv(const std::string& path, const SensitivityReport& report);

void write_truth_json(const std::string& path, const TruthBundle& truth);
TruthBundle read_truth_json(const std::string& path);

std::string to_string(Example example);
Example parse_example(const std::string& text);
std::string to_string(KernelFamily family);
KernelFamily parse_family(const std::string& text);

}  // namespace foagp
