#include "stiffopt/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace stiffopt {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& rows, int expect_cols = -1) {
  if (!rows.is_array()) throw std::invalid_argument("expected a JSON array of rows");
  const int n_rows = static_cast<int>(rows.size());
  int n_cols = expect_cols;
  Mat m;
  for (int i = 0; i < n_rows; ++i) {
    const json& row = rows[i];
    if (!row.is_array()) throw std::invalid_argument("expected a JSON row array");
    if (n_cols < 0) n_cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != n_cols)
      throw std::invalid_argument("ragged matrix rows in JSON");
    if (m.size() == 0) m.resize(n_rows, n_cols);
    for (int j = 0; j < n_cols; ++j) m(i, j) = row[j].get<double>();
  }
  if (m.size() == 0) m.resize(0, std::max(n_cols, 0));
  return m;
}

}  // namespace

std::string trajectory_to_json(const Trajectory& traj) {
  json doc;
  doc["dt"] = traj.dt;
  doc["n_axes"] = traj.n_axes;
  doc["x"] = matrix_to_json(traj.x);
  doc["F"] = matrix_to_json(traj.F);
  if (traj.has_velocities) doc["xdot"] = matrix_to_json(traj.xdot);
  return doc.dump(2) + "\n";
}

Trajectory trajectory_from_json(const std::string& text) {
  json doc = json::parse(text);
  Trajectory traj;
  traj.dt = doc.at("dt").get<double>();
  traj.n_axes = doc.at("n_axes").get<int>();
  traj.x = matrix_from_json(doc.at("x"), traj.n_axes);
  traj.F = matrix_from_json(doc.at("F"), traj.n_axes);
  if (doc.contains("xdot")) {
    traj.xdot = matrix_from_json(doc.at("xdot"), traj.n_axes);
    traj.has_velocities = true;
  } else {
    traj.reconstruct_velocities();
  }
  traj.validate();
  return traj;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  write_text_file(path, trajectory_to_json(traj));
}

Trajectory load_trajectory(const std::string& path) {
  return trajectory_from_json(read_text_file(path));
}

std::string segmentation_to_json(const Segmentation& seg, const Mat& k_prior,
                                 double objective, const std::string& method) {
  json doc;
  doc["method"] = method;
  doc["M"] = seg.M;
  doc["labels"] = seg.labels;
  doc["K_prior"] = matrix_to_json(k_prior);
  doc["objective"] = objective;
  return doc.dump(2) + "\n";
}

SegmentationFile segmentation_from_json(const std::string& text) {
  json doc = json::parse(text);
  SegmentationFile file;
  file.segmentation.M = doc.at("M").get<int>();
  file.segmentation.labels = doc.at("labels").get<std::vector<int>>();
  file.k_prior = matrix_from_json(doc.at("K_prior"));
  file.objective = doc.value("objective", 0.0);
  file.method = doc.value("method", std::string{});
  file.segmentation.validate();
  return file;
}

void save_segmentation(const SegmentationFile& file, const std::string& path) {
  write_text_file(path, segmentation_to_json(file.segmentation, file.k_prior,
                                             file.objective, file.method));
}

SegmentationFile load_segmentation(const std::string& path) {
  return segmentation_from_json(read_text_file(path));
}

std::string run_to_csv(const RunRecord& record, bool with_timings) {
  std::ostringstream out;
  const int dim = record.rows.empty() ? 0 : static_cast<int>(record.rows[0].theta.size());
  out << "n";
  for (int j = 1; j <= dim; ++j) out << ",theta_" << j;
  out << ",y_T,y_C,hv,ms\n";
  for (const IterationRow& row : record.rows) {
    out << row.n;
    for (int j = 0; j < dim; ++j) out << ',' << format_double(row.theta[j]);
    out << ',' << format_double(row.y_task) << ',' << format_double(row.y_comp)
        << ',' << format_double(row.hv) << ','
        << (with_timings ? format_double(row.ms) : "0") << '\n';
  }
  return out.str();
}

std::string pareto_to_csv(const ParetoArchive& archive) {
  std::ostringstream out;
  auto records = archive.front_records();
  const int dim = records.empty() ? 0 : static_cast<int>(records[0].theta.size());
  out << "y_T,y_C";
  for (int j = 1; j <= dim; ++j) out << ",theta_" << j;
  out << '\n';
  for (const auto& rec : records) {
    out << format_double(rec.y.y_task) << ',' << format_double(rec.y.y_comp);
    for (int j = 0; j < dim; ++j) out << ',' << format_double(rec.theta[j]);
    out << '\n';
  }
  return out.str();
}

std::string benchmark_to_csv(const BenchmarkSummary& summary) {
  std::ostringstream out;
  out << "method,prior,seed,final_hv\n";
  for (const BenchmarkCell& cell : summary.cells) {
    for (std::size_t i = 0; i < cell.seeds.size(); ++i) {
      out << to_string(cell.method) << ',' << (cell.use_prior ? "on" : "off") << ','
          << cell.seeds[i] << ',' << format_double(cell.final_hv[i]) << '\n';
    }
  }
  return out.str();
}

namespace {

// Linear-interpolation quantile over a sorted copy.
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

std::string curves_to_csv(const BenchmarkSummary& summary) {
  std::ostringstream out;
  out << "method,prior,n,q25,median_hv,q75\n";
  for (const BenchmarkCell& cell : summary.cells) {
    for (int n = 0; n < summary.N; ++n) {
      std::vector<double> column;
      for (Eigen::Index i = 0; i < cell.curves.rows(); ++i)
        if (std::isfinite(cell.curves(i, n))) column.push_back(cell.curves(i, n));
      out << to_string(cell.method) << ',' << (cell.use_prior ? "on" : "off") << ','
          << (n + 1) << ',' << format_double(quantile(column, 0.25)) << ','
          << format_double(median(column)) << ','
          << format_double(quantile(column, 0.75)) << '\n';
    }
  }
  return out.str();
}

std::string benchmark_grid_to_csv(const BenchmarkSummary& summary) {
  std::ostringstream out;
  out << "method,prior,mean_hv,std_hv,median_hv\n";
  for (const BenchmarkCell& cell : summary.cells) {
    out << to_string(cell.method) << ',' << (cell.use_prior ? "on" : "off") << ','
        << format_double(cell.mean_hv) << ',' << format_double(cell.std_hv) << ','
        << format_double(cell.median_hv) << '\n';
  }
  return out.str();
}

std::string union_fronts_to_csv(const BenchmarkSummary& summary) {
  std::ostringstream out;
  int dim = 0;
  for (const BenchmarkCell& cell : summary.cells)
    if (!cell.union_front.empty()) dim = static_cast<int>(cell.union_front[0].theta.size());
  out << "method,prior,y_T,y_C";
  for (int j = 1; j <= dim; ++j) out << ",theta_" << j;
  out << '\n';
  for (const BenchmarkCell& cell : summary.cells) {
    for (const auto& rec : cell.union_front) {
      out << to_string(cell.method) << ',' << (cell.use_prior ? "on" : "off") << ','
          << format_double(rec.y.y_task) << ',' << format_double(rec.y.y_comp);
      for (int j = 0; j < static_cast<int>(rec.theta.size()); ++j)
        out << ',' << format_double(rec.theta[j]);
      out << '\n';
    }
  }
  return out.str();
}

std::string sensitivity_to_csv(const std::vector<SensitivityRow>& rows) {
  std::ostringstream out;
  out << "M,beta,mean_hv,std_hv,median_hv\n";
  for (const SensitivityRow& row : rows) {
    out << row.M << ',' << format_double(row.beta) << ',' << format_double(row.mean_hv)
        << ',' << format_double(row.std_hv) << ',' << format_double(row.median_hv)
        << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace stiffopt
