#include "difflab/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "difflab/error.hpp"

namespace difflab {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& header)
    : columns_(header.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::row(std::span<const double> values) {
  require(values.size() == columns_, "CsvWriter: row width does not match header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::invalid_argument("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      auto res = std::from_chars(p, comma, v);
      if (res.ec != std::errc() || res.ptr != comma)
        throw std::runtime_error("malformed CSV value in " + path.string());
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != table.header.size())
      throw std::runtime_error("ragged CSV row in " + path.string());
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<std::string> state_columns(Eigen::Index d) {
  std::vector<std::string> cols;
  for (Eigen::Index j = 0; j < d; ++j) cols.push_back("x" + std::to_string(j));
  return cols;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  traj.validate();
  auto header = state_columns(traj.dim());
  header.insert(header.begin(), "t");
  CsvWriter w(path, header);
  std::vector<double> row(header.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    row[0] = traj.times[k];
    for (Eigen::Index j = 0; j < traj.dim(); ++j)
      row[static_cast<std::size_t>(j) + 1] = traj.states(static_cast<Eigen::Index>(k), j);
    w.row(row);
  }
}

void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& ens,
                        Eigen::Index max_chains) {
  require(!ens.frames.empty(), "write_ensemble_csv: empty ensemble");
  const Eigen::Index d = ens.frames.front().cols();
  const Eigen::Index n =
      max_chains < 0 ? ens.chains() : std::min(max_chains, ens.chains());
  auto header = state_columns(d);
  header.insert(header.begin(), {"t", "chain"});
  CsvWriter w(path, header);
  std::vector<double> row(header.size());
  for (std::size_t k = 0; k < ens.frames.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      row[0] = ens.times[k];
      row[1] = static_cast<double>(i);
      for (Eigen::Index j = 0; j < d; ++j)
        row[static_cast<std::size_t>(j) + 2] = ens.frames[k](i, j);
      w.row(row);
    }
  }
}

void write_samples_csv(const std::filesystem::path& path, const Mat& samples) {
  CsvWriter w(path, state_columns(samples.cols()));
  std::vector<double> row(static_cast<std::size_t>(samples.cols()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j)
      row[static_cast<std::size_t>(j)] = samples(i, j);
    w.row(row);
  }
}

void write_schedule_csv(const std::filesystem::path& path, const NoiseSchedule& s) {
  CsvWriter w(path, {"t", "beta", "alpha", "alpha_bar"});
  w.row({0.0, 0.0, 1.0, 1.0});
  for (std::size_t t = 1; t <= s.steps(); ++t)
    w.row({static_cast<double>(t), s.beta(t), s.alpha(t), s.alpha_bar(t)});
}

}  // namespace difflab
