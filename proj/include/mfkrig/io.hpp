#ifndef MFKRIG_IO_HPP
#define MFKRIG_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mfkrig/acquisition.hpp"
#include "mfkrig/isherwood.hpp"
#include "mfkrig/multifidelity.hpp"

namespace mfk {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_cell(const std::string& cell, const std::string& path, int row, int col) {
  if (cell.empty())
    throw data_error(path + ": empty cell at row " + std::to_string(row) + ", column " +
                     std::to_string(col));
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw data_error(path + ": cannot parse '" + cell + "' at row " + std::to_string(row) +
                     ", column " + std::to_string(col));
  }
}

inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw data_error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw data_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open " + path);
  std::string line;
  CsvTable t;
  std::vector<std::vector<double>> rows;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    if (cells.size() != t.header.size())
      throw data_error(path + ": row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(t.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = detail::parse_cell(cells[c], path, lineno, static_cast<int>(c) + 1);
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw data_error(path + ": empty file");
  t.values.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c)
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return t;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const Matrix& values) {
  if (values.cols() != static_cast<Eigen::Index>(header.size()))
    throw std::invalid_argument("header size does not match column count");
  std::ostringstream os;
  for (std::size_t c = 0; c < header.size(); ++c)
    os << header[c] << (c + 1 < header.size() ? ',' : '\n');
  char buf[64];
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", values(r, c));
      os << buf << (c + 1 < values.cols() ? ',' : '\n');
    }
  detail::atomic_write(path, os.str());
}

/// Per-level evaluations: scaled input columns followed by target columns
/// (either c_x,c_y,c_m or a single y).
struct Dataset {
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;
  Matrix X;
  Matrix Y;
};

inline Dataset load_dataset(const std::string& path) {
  const CsvTable t = read_csv(path);
  const auto& h = t.header;
  Dataset d;
  if (h.size() >= 4 && h[h.size() - 3] == "c_x" && h[h.size() - 2] == "c_y" &&
      h[h.size() - 1] == "c_m")
    d.output_names = {"c_x", "c_y", "c_m"};
  else if (h.size() >= 2 && h.back() == "y")
    d.output_names = {"y"};
  else
    throw data_error(path + ": expected trailing target columns c_x,c_y,c_m or y");
  const int n_out = static_cast<int>(d.output_names.size());
  const int d_in = static_cast<int>(h.size()) - n_out;
  d.input_names.assign(h.begin(), h.begin() + d_in);
  if (t.values.rows() < 1) throw data_error(path + ": no data rows");
  if (!t.values.allFinite()) {
    for (Eigen::Index r = 0; r < t.values.rows(); ++r)
      for (Eigen::Index c = 0; c < t.values.cols(); ++c)
        if (!std::isfinite(t.values(r, c)))
          throw data_error(path + ": non-finite value in data row " + std::to_string(r + 1) +
                           ", column " + h[static_cast<std::size_t>(c)]);
  }
  d.X = t.values.leftCols(d_in);
  d.Y = t.values.rightCols(n_out);
  return d;
}

inline void save_dataset(const std::string& path, const Dataset& d) {
  std::vector<std::string> header = d.input_names;
  header.insert(header.end(), d.output_names.begin(), d.output_names.end());
  Matrix all(d.X.rows(), d.X.cols() + d.Y.cols());
  all << d.X, d.Y;
  write_csv(path, header, all);
}

struct ManifestEntry {
  std::string path;
  double cost = 1.0;
};

struct Manifest {
  std::vector<ManifestEntry> levels;  // ascending fidelity
};

inline Manifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw data_error(path + ": " + e.what());
  }
  Manifest m;
  if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].empty())
    throw data_error(path + ": manifest needs a nonempty 'levels' array");
  for (const auto& lv : j["levels"]) {
    ManifestEntry e;
    if (!lv.contains("path")) throw data_error(path + ": manifest level missing 'path'");
    e.path = lv["path"].get<std::string>();
    e.cost = lv.value("cost", 1.0);
    if (!(e.cost > 0.0)) throw data_error(path + ": level cost must be positive");
    m.levels.push_back(std::move(e));
  }
  return m;
}

/// Loads every level referenced by a manifest; relative paths resolve against
/// the manifest's own directory. Levels must agree on schema.
inline std::vector<Dataset> load_manifest_datasets(const Manifest& m,
                                                   const std::string& manifest_path) {
  namespace fs = std::filesystem;
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<Dataset> out;
  for (const auto& lv : m.levels) {
    fs::path p(lv.path);
    if (p.is_relative()) p = base / p;
    out.push_back(load_dataset(p.string()));
  }
  for (const auto& d : out) {
    if (d.input_names != out.front().input_names)
      throw data_error("levels disagree on input columns");
    if (d.output_names != out.front().output_names)
      throw data_error("levels disagree on target columns");
  }
  return out;
}

inline const std::vector<std::string>& coefficient_table_header() {
  static const std::vector<std::string> h = {
      "phi", "A0", "A1", "A2", "A3", "A4", "A5", "A6", "B0", "B1", "B2",
      "B3",  "B4", "B5", "B6", "D0", "D1", "D2", "D3", "D4", "D5"};
  return h;
}

inline CoefficientTable load_coefficient_table(const std::string& table_path,
                                               const std::string& ranges_path) {
  const CsvTable t = read_csv(table_path);
  if (t.header != coefficient_table_header())
    throw data_error(table_path + ": header must be phi,A0..A6,B0..B6,D0..D5");
  CoefficientTable table;
  for (Eigen::Index r = 0; r < t.values.rows(); ++r) {
    table.angles.push_back(t.values(r, 0));
    CoefficientRow row;
    for (int k = 0; k < 7; ++k) row.a[static_cast<std::size_t>(k)] = t.values(r, 1 + k);
    for (int k = 0; k < 7; ++k) row.b[static_cast<std::size_t>(k)] = t.values(r, 8 + k);
    for (int k = 0; k < 6; ++k) row.d[static_cast<std::size_t>(k)] = t.values(r, 15 + k);
    table.rows.push_back(row);
  }

  std::ifstream is(ranges_path);
  if (!is) throw data_error("cannot open " + ranges_path);
  std::string line;
  if (!std::getline(is, line) ||
      detail::split_csv_line(line) != std::vector<std::string>{"param", "min", "max"})
    throw data_error(ranges_path + ": header must be param,min,max");
  std::vector<bool> seen(kInputDim, false);
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3)
      throw data_error(ranges_path + ": row " + std::to_string(lineno) + " needs 3 cells");
    int idx = -1;
    for (int k = 0; k < kInputDim; ++k)
      if (cells[0] == input_names()[static_cast<std::size_t>(k)]) idx = k;
    if (idx < 0)
      throw data_error(ranges_path + ": unknown parameter '" + cells[0] + "'");
    if (seen[static_cast<std::size_t>(idx)])
      throw data_error(ranges_path + ": duplicate parameter '" + cells[0] + "'");
    seen[static_cast<std::size_t>(idx)] = true;
    table.ranges[static_cast<std::size_t>(idx)] = {
        detail::parse_cell(cells[1], ranges_path, lineno, 2),
        detail::parse_cell(cells[2], ranges_path, lineno, 3)};
  }
  for (int k = 0; k < kInputDim; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      throw data_error(ranges_path + ": missing parameter '" +
                       input_names()[static_cast<std::size_t>(k)] + "'");
  table.validate();
  return table;
}

inline InputScaler scaler_from_table(const CoefficientTable& table) {
  return InputScaler({table.ranges.begin(), table.ranges.end()});
}

inline ConfigurationCatalogue load_catalogue(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw data_error(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "label")
    throw data_error(path + ": catalogue header must be label,<param names>");
  ConfigurationCatalogue cat;
  cat.param_names.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw data_error(path + ": row " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    cat.labels.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c)
      row.push_back(detail::parse_cell(cells[c], path, lineno, static_cast<int>(c) + 1));
    rows.push_back(std::move(row));
  }
  cat.values.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(cat.param_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cat.param_names.size(); ++c)
      cat.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  cat.validate();
  return cat;
}

/// Everything needed to reload and query a trained model set.
struct ModelBundle {
  std::vector<MultiFidelityModel> models;
  std::vector<std::string> output_names;
  std::vector<std::string> input_names;   // reduced coordinates, in model order
  std::vector<std::pair<double, double>> ranges;
  std::vector<int> reduced_indices;       // into the full 8-component vector, or empty
};

namespace detail {

inline nlohmann::ordered_json gp_to_json(const GpModel& g) {
  nlohmann::ordered_json j;
  const auto& hp = g.hyperparameters();
  j["mean"] = hp.mean;
  j["signal2"] = hp.signal2;
  j["length"] = std::vector<double>(hp.length.begin(), hp.length.end());
  j["nugget2"] = hp.nugget2;
  std::vector<std::vector<double>> x(static_cast<std::size_t>(g.size()));
  for (int r = 0; r < g.size(); ++r)
    x[static_cast<std::size_t>(r)].assign(g.inputs().row(r).begin(), g.inputs().row(r).end());
  j["x"] = x;
  j["targets"] = std::vector<double>(g.targets().begin(), g.targets().end());
  return j;
}

inline GpModel gp_from_json(const nlohmann::json& j) {
  GpHyperparameters hp;
  hp.mean = j.at("mean").get<double>();
  hp.signal2 = j.at("signal2").get<double>();
  const auto len = j.at("length").get<std::vector<double>>();
  hp.length = Eigen::Map<const Vector>(len.data(), static_cast<Eigen::Index>(len.size()));
  hp.nugget2 = j.at("nugget2").get<double>();
  const auto x = j.at("x").get<std::vector<std::vector<double>>>();
  const auto y = j.at("targets").get<std::vector<double>>();
  Matrix X(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(len.size()));
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (x[r].size() != len.size()) throw data_error("model dump: ragged design matrix");
    for (std::size_t c = 0; c < len.size(); ++c)
      X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x[r][c];
  }
  return GpModel(X, Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())),
                 hp);
}

}  // namespace detail

inline void save_models(const std::string& path, const ModelBundle& bundle) {
  nlohmann::ordered_json j;
  j["format"] = "mfkrig-models";
  j["version"] = 1;
  j["input_names"] = bundle.input_names;
  std::vector<std::vector<double>> rg;
  for (const auto& [lo, hi] : bundle.ranges) rg.push_back({lo, hi});
  j["ranges"] = rg;
  j["reduced_indices"] = bundle.reduced_indices;
  nlohmann::ordered_json outs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < bundle.models.size(); ++i) {
    nlohmann::ordered_json jm;
    jm["name"] = bundle.output_names[i];
    jm["rho"] = bundle.models[i].rhos();
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (int t = 1; t <= bundle.models[i].levels(); ++t)
      levels.push_back(detail::gp_to_json(bundle.models[i].level(t)));
    jm["levels"] = levels;
    outs.push_back(std::move(jm));
  }
  j["outputs"] = std::move(outs);
  detail::atomic_write(path, j.dump(2) + "\n");
}

inline ModelBundle load_models(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw data_error(path + ": " + e.what());
  }
  if (j.value("format", "") != "mfkrig-models")
    throw data_error(path + ": not a model file");
  ModelBundle b;
  b.input_names = j.at("input_names").get<std::vector<std::string>>();
  for (const auto& r : j.at("ranges")) {
    if (!r.is_array() || r.size() != 2) throw data_error(path + ": bad ranges entry");
    b.ranges.emplace_back(r[0].get<double>(), r[1].get<double>());
  }
  b.reduced_indices = j.value("reduced_indices", std::vector<int>{});
  for (const auto& out : j.at("outputs")) {
    b.output_names.push_back(out.at("name").get<std::string>());
    std::vector<GpModel> gps;
    for (const auto& lv : out.at("levels")) gps.push_back(detail::gp_from_json(lv));
    b.models.emplace_back(std::move(gps), out.at("rho").get<std::vector<double>>());
  }
  if (b.models.empty()) throw data_error(path + ": no models");
  return b;
}

inline ShipGeometry load_geometry(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw data_error(path + ": " + e.what());
  }
  const std::vector<std::string> keys = {
      "loa", "beam", "lateral_area", "transverse_area", "lateral_perimeter",
      "centroid_from_bow", "superstructure_area", "container_groups"};
  ShipGeometry g;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& k : keys) known = known || (k == key);
    if (!known) throw data_error(path + ": unknown key '" + key + "'");
  }
  for (const auto& k : keys)
    if (!j.contains(k)) throw data_error(path + ": missing key '" + k + "'");
  g.loa = j["loa"].get<double>();
  g.beam = j["beam"].get<double>();
  g.lateral_area = j["lateral_area"].get<double>();
  g.transverse_area = j["transverse_area"].get<double>();
  g.lateral_perimeter = j["lateral_perimeter"].get<double>();
  g.centroid_from_bow = j["centroid_from_bow"].get<double>();
  g.superstructure_area = j["superstructure_area"].get<double>();
  g.container_groups = j["container_groups"].get<double>();
  return g;
}

inline std::string training_log_lines(const std::vector<IterationRecord>& log) {
  std::string out;
  for (const auto& rec : log) {
    nlohmann::ordered_json j;
    j["iteration"] = rec.iteration;
    j["pool_index"] = rec.pool_index;
    j["level"] = rec.level;
    j["z"] = std::vector<double>(rec.z.begin(), rec.z.end());
    j["gamma"] = rec.gamma;
    j["gamma_components"] = rec.gamma_components;
    j["stop_metric"] = rec.stop_metric;
    j["sizes"] = rec.sizes;
    j["cumulative_cost"] = rec.cumulative_cost;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void write_training_log(const std::string& path,
                               const std::vector<IterationRecord>& log) {
  detail::atomic_write(path, training_log_lines(log));
}

}  // namespace mfk

#endif
