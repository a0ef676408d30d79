#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "difflab/schedule.hpp"
#include "difflab/trajectory.hpp"

namespace difflab {

// Shortest round-trip decimal form, '.' as separator, locale independent.
std::string format_double(double v);

// Comma separated, header row, LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(std::span<const double> values);
  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> state_columns(Eigen::Index d);

// t, x0, x1, ...
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
// t, chain, x0, x1, ... (long format)
void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& ens,
                        Eigen::Index max_chains = -1);
// x0, x1, ...
void write_samples_csv(const std::filesystem::path& path, const Mat& samples);
// t, beta, alpha, alpha_bar (t = 0 row carries the alpha_bar_0 = 1 convention)
void write_schedule_csv(const std::filesystem::path& path, const NoiseSchedule& s);

}  // namespace difflab
