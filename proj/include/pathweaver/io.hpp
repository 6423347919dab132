#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pathweaver/numerics.hpp"
#include "pathweaver/rnn_params.hpp"
#include "pathweaver/taskgen.hpp"

namespace pathweaver {

using Json = nlohmann::json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest form that parses back to the same double ("%.17g").
std::string format_double(double v);

/// Matrix CSV: a "# {json}" header carrying at least rows/cols, then one
/// comma-separated line per row.
struct MatrixCsv {
  Matrix values;
  Json meta;  // always contains "rows" and "cols"
};

void write_matrix_csv(std::ostream& os, const Matrix& m, Json meta = Json::object());
MatrixCsv read_matrix_csv(std::istream& is);
void save_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                     Json meta = Json::object());
MatrixCsv load_matrix_csv(const std::filesystem::path& path);

/// Plain numeric table with a header row of column names.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_table_csv(std::ostream& os, const Table& t);
Table read_table_csv(std::istream& is);
void save_table_csv(const std::filesystem::path& path, const Table& t);
Table load_table_csv(const std::filesystem::path& path);

/// Dataset bundle: inputs.csv ((N*L) x F_all), targets.csv (N x F_all) and
/// split.csv (sample, partition with 0 = train, 1 = val, 2 = test).
void save_dataset(const std::filesystem::path& dir, const Dataset& d, const TaskSpec& spec);
Dataset load_dataset(const std::filesystem::path& dir);

/// Checkpoint: a "# {json}" header (dims, seed, config hash) followed by the
/// five parameter arrays, each introduced by its own "# {name, rows, cols}".
struct Checkpoint {
  RnnParams params;
  Json header;
};

void write_checkpoint(std::ostream& os, const RnnParams& params, Json header);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const RnnParams& params, Json header);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const Json& config);

}  // namespace pathweaver
