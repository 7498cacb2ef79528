#pragma once

#include "hoc/optimizer.hpp"
#include "hoc/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hoc {

/// Bad command-line or experiment input (exit code 2).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ProblemSpec {
  /// "valley", "affine" or "poly".
  std::string name = "valley";
  double anisotropy = 1e6;
  int degree = 2;
  int dims = 2;
  std::uint64_t seed = 0;
};

std::shared_ptr<const Problem> make_problem(const ProblemSpec& spec);

struct ExperimentSpec {
  ProblemSpec problem;
  OptimizerConfig config;
  std::optional<std::filesystem::path> output;
};

struct ExperimentResult {
  std::string problem_name;
  int order = 1;
  RunResult run;
  double wall_seconds = 0.0;
};

/// Runs one optimisation from the problem's default start and, when
/// spec.output is set, writes the per-iteration CSV trace there.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// Columns: iteration,lambda,residual_norm,step_norm,c2_norm,c3_norm,c4_norm,
/// f_evals_cumulative,accepted. Correction columns above the run's order are
/// left empty.
void write_trace_csv(std::ostream& os, const ExperimentResult& result);
std::string summary_line(const ExperimentResult& result);

struct TableCell {
  int iterations = 0;
  bool converged = false;

  [[nodiscard]] bool censored() const { return !converged; }
};

/// Iterations to convergence, one row per K and one column per order.
struct ConvergenceTable {
  std::vector<double> anisotropies;
  std::vector<int> orders;
  std::vector<std::vector<TableCell>> cells;
  int max_iterations = 20000;

  [[nodiscard]] const TableCell& at(std::size_t row, std::size_t column) const { return cells.at(row).at(column); }
  [[nodiscard]] std::string cell_text(std::size_t row, std::size_t column) const;
};

/// Valley problem from (pi, e) for every (K, order) pair; other settings from `base`.
ConvergenceTable run_table(const std::vector<double>& anisotropies, const std::vector<int>& orders,
                           const OptimizerConfig& base = {});

void write_table_csv(std::ostream& os, const ConvergenceTable& table);
std::string format_table_text(const ConvergenceTable& table);
ConvergenceTable read_table_csv(std::istream& is);

/// Slope of log10(iterations) against log10(K), least squares through the
/// last three uncensored points with K <= the fit's bound.
struct PowerLawFit {
  int order = 0;
  std::vector<double> anisotropies;
  std::vector<int> iterations;
  /// One per table row: true when that cell hit the cap or stalled.
  std::vector<bool> censored;
  double exponent = 0.0;
  bool available = false;
};

inline constexpr double kPowerLawMaxAnisotropy = 1e8;
inline constexpr std::size_t kPowerLawPoints = 3;

std::vector<PowerLawFit> fit_power_laws(const ConvergenceTable& table,
                                        double max_anisotropy = kPowerLawMaxAnisotropy);
std::string format_fits(const std::vector<PowerLawFit>& fits);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomically(const std::filesystem::path& path, const std::string& content);

}  // namespace hoc
