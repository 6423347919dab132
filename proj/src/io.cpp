#include "pathweaver/io.hpp"

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pathweaver {

namespace fs = std::filesystem;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const int n = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(n));
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
  const char* begin = field.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE)
    throw FormatError("line " + std::to_string(line) + ": not a number: '" + field + "'");
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_row(std::ostream& os, std::span<const double> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (j) os << ',';
    os << format_double(row[j]);
  }
  os << '\n';
}

Json read_header(std::istream& is, std::size_t& line_no) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("missing '# {json}' header line");
  ++line_no;
  if (line.rfind("# ", 0) != 0)
    throw FormatError("line " + std::to_string(line_no) + ": expected '# {json}' header");
  try {
    return Json::parse(line.substr(2));
  } catch (const Json::parse_error& e) {
    throw FormatError("line " + std::to_string(line_no) + ": bad header: " + e.what());
  }
}

Matrix read_rows(std::istream& is, std::size_t rows, std::size_t cols, std::size_t& line_no) {
  Matrix m(rows, cols);
  std::string line;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(is, line))
      throw FormatError("expected " + std::to_string(rows) + " rows, got " + std::to_string(r));
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.size() != cols)
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = parse_double(fields[c], line_no);
  }
  return m;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path.string() + "' for writing");
  fn(os);
  if (!os) throw FormatError("write failed for '" + path.string() + "'");
}

std::ifstream open_read(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'");
  return is;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const Matrix& m, Json meta) {
  meta["rows"] = m.rows();
  meta["cols"] = m.cols();
  os << "# " << meta.dump() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) write_row(os, m.row(r));
}

MatrixCsv read_matrix_csv(std::istream& is) {
  std::size_t line_no = 0;
  MatrixCsv out;
  out.meta = read_header(is, line_no);
  if (!out.meta.contains("rows") || !out.meta.contains("cols"))
    throw FormatError("matrix header lacks rows/cols");
  const auto rows = out.meta["rows"].get<std::size_t>();
  const auto cols = out.meta["cols"].get<std::size_t>();
  out.values = read_rows(is, rows, cols, line_no);
  return out;
}

void save_matrix_csv(const fs::path& path, const Matrix& m, Json meta) {
  write_file(path, [&](std::ostream& os) { write_matrix_csv(os, m, std::move(meta)); });
}

MatrixCsv load_matrix_csv(const fs::path& path) {
  auto is = open_read(path);
  return read_matrix_csv(is);
}

void write_table_csv(std::ostream& os, const Table& t) {
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    if (j) os << ',';
    os << t.columns[j];
  }
  os << '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) throw FormatError("table row width mismatch");
    write_row(os, row);
  }
}

Table read_table_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("missing table header");
  t.columns = split_fields(line);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.size() != t.columns.size())
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(t.columns.size()) + " fields");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, line_no));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void save_table_csv(const fs::path& path, const Table& t) {
  write_file(path, [&](std::ostream& os) { write_table_csv(os, t); });
}

Table load_table_csv(const fs::path& path) {
  auto is = open_read(path);
  return read_table_csv(is);
}

void save_dataset(const fs::path& dir, const Dataset& d, const TaskSpec& spec) {
  Json meta{{"task", std::string(to_string(spec.kind))},
            {"samples", d.samples},
            {"seq_len", d.seq_len},
            {"features", d.features},
            {"modules", spec.modules},
            {"seed", spec.seed}};
  save_matrix_csv(dir / "inputs.csv",
                  Matrix(d.samples * d.seq_len, d.features, d.inputs), meta);
  save_matrix_csv(dir / "targets.csv", d.targets, meta);
  Table split{{"sample", "partition"}, {}};
  const std::array<const std::vector<std::size_t>*, 3> parts{&d.split.train, &d.split.val,
                                                             &d.split.test};
  for (std::size_t p = 0; p < parts.size(); ++p)
    for (std::size_t n : *parts[p])
      split.rows.push_back({static_cast<double>(n), static_cast<double>(p)});
  save_table_csv(dir / "split.csv", split);
}

Dataset load_dataset(const fs::path& dir) {
  const MatrixCsv inputs = load_matrix_csv(dir / "inputs.csv");
  const MatrixCsv targets = load_matrix_csv(dir / "targets.csv");
  Dataset d;
  d.samples = inputs.meta.at("samples").get<std::size_t>();
  d.seq_len = inputs.meta.at("seq_len").get<std::size_t>();
  d.features = inputs.meta.at("features").get<std::size_t>();
  if (inputs.values.rows() != d.samples * d.seq_len || inputs.values.cols() != d.features ||
      targets.values.rows() != d.samples || targets.values.cols() != d.features)
    throw FormatError("dataset bundle shapes disagree with its header");
  d.inputs.assign(inputs.values.data().begin(), inputs.values.data().end());
  d.targets = targets.values;
  const fs::path split_path = dir / "split.csv";
  if (fs::exists(split_path)) {
    const Table split = load_table_csv(split_path);
    for (const auto& row : split.rows) {
      const auto n = static_cast<std::size_t>(row.at(0));
      if (n >= d.samples) throw FormatError("split.csv: sample index out of range");
      switch (static_cast<int>(row.at(1))) {
        case 0: d.split.train.push_back(n); break;
        case 1: d.split.val.push_back(n); break;
        case 2: d.split.test.push_back(n); break;
        default: throw FormatError("split.csv: unknown partition id");
      }
    }
  }
  return d;
}

void write_checkpoint(std::ostream& os, const RnnParams& params, Json header) {
  params.check_shapes();
  header["inputs"] = params.inputs();
  header["hidden"] = params.hidden();
  header["outputs"] = params.outputs();
  os << "# " << header.dump() << '\n';
  static constexpr std::array<const char*, 5> kNames{"w_ih", "w_hh", "w_ho", "b_h", "b_o"};
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i)
    write_matrix_csv(os, *tensors[i], Json{{"name", kNames[i]}});
}

Checkpoint read_checkpoint(std::istream& is) {
  std::size_t line_no = 0;
  Checkpoint out;
  out.header = read_header(is, line_no);
  static constexpr std::array<const char*, 5> kNames{"w_ih", "w_hh", "w_ho", "b_h", "b_o"};
  auto tensors = out.params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Json meta = read_header(is, line_no);
    if (meta.value("name", "") != kNames[i])
      throw FormatError("line " + std::to_string(line_no) + ": expected array '" + kNames[i] +
                        "'");
    *tensors[i] = read_rows(is, meta.at("rows").get<std::size_t>(),
                            meta.at("cols").get<std::size_t>(), line_no);
  }
  out.params.check_shapes();
  return out;
}

void save_checkpoint(const fs::path& path, const RnnParams& params, Json header) {
  write_file(path, [&](std::ostream& os) { write_checkpoint(os, params, std::move(header)); });
}

Checkpoint load_checkpoint(const fs::path& path) {
  auto is = open_read(path);
  return read_checkpoint(is);
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

}  // namespace pathweaver
