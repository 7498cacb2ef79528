#include "hoc/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

namespace hoc {

std::string format_double(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buffer.data(), end};
}

void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path temp = path;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + temp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + temp.string());
  }
  std::filesystem::rename(temp, path);
}

std::shared_ptr<const Problem> make_problem(const ProblemSpec& spec) {
  try {
    if (spec.name == "valley") return std::make_shared<AnisotropicValleyProblem>(spec.anisotropy);
    if (spec.name == "affine") return make_reference_affine_problem();
    if (spec.name == "poly") return polynomial_test_family(spec.degree, spec.dims, spec.seed);
  } catch (const InvalidInputError& error) {
    throw UsageError(error.what());
  }
  throw UsageError("unknown problem '" + spec.name + "' (expected valley, affine or poly)");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const auto problem = make_problem(spec.problem);
  try {
    spec.config.validate();
  } catch (const InvalidInputError& error) {
    throw UsageError(error.what());
  }
  ExperimentResult result;
  result.problem_name = problem->name();
  result.order = spec.config.order;
  const auto start = std::chrono::steady_clock::now();
  result.run = run(problem->default_start(), *problem, spec.config);
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (spec.output) {
    std::ostringstream csv;
    write_trace_csv(csv, result);
    write_file_atomically(*spec.output, csv.str());
  }
  return result;
}

void write_trace_csv(std::ostream& os, const ExperimentResult& result) {
  os << "iteration,lambda,residual_norm,step_norm,c2_norm,c3_norm,c4_norm,f_evals_cumulative,accepted\n";
  long long evaluations = 1;  // f(x0)
  for (const IterationRecord& record : result.run.trajectory) {
    evaluations += record.f_evaluations;
    os << record.iteration << ',' << format_double(record.chosen_lambda) << ','
       << format_double(record.residual_norm) << ',' << format_double(record.step_norm);
    for (std::size_t k = 2; k <= 4; ++k) {
      os << ',';
      if (k <= record.corrections_norms.size()) os << format_double(record.corrections_norms[k - 1]);
    }
    os << ',' << evaluations << ',' << (record.accepted ? 1 : 0) << '\n';
  }
}

std::string summary_line(const ExperimentResult& result) {
  std::ostringstream os;
  os << "problem=" << result.problem_name << " order=" << result.order
     << " converged=" << (result.run.converged ? 1 : 0) << " iterations=" << result.run.iterations
     << " residual_norm=" << format_double(result.run.residual_norm)
     << " f_evals=" << result.run.f_evaluations << " jacobian_evals=" << result.run.jacobian_evaluations
     << " wall_time_s=" << std::fixed << std::setprecision(3) << result.wall_seconds;
  return os.str();
}

std::string ConvergenceTable::cell_text(std::size_t row, std::size_t column) const {
  const TableCell& cell = at(row, column);
  if (cell.converged) return std::to_string(cell.iterations);
  if (cell.iterations >= max_iterations) return ">" + std::to_string(max_iterations);
  return "stalled@" + std::to_string(cell.iterations);
}

ConvergenceTable run_table(const std::vector<double>& anisotropies, const std::vector<int>& orders,
                           const OptimizerConfig& base) {
  if (anisotropies.empty()) throw UsageError("table: at least one K value is required");
  if (orders.empty()) throw UsageError("table: at least one order is required");
  for (double k : anisotropies) {
    if (!(k > 0.0) || !std::isfinite(k)) throw UsageError("table: every K must be positive");
  }
  ConvergenceTable table;
  table.anisotropies = anisotropies;
  table.orders = orders;
  table.max_iterations = base.max_iterations;
  for (double k : anisotropies) {
    const AnisotropicValleyProblem problem(k);
    std::vector<TableCell> row;
    for (int order : orders) {
      OptimizerConfig config = base;
      config.order = order;
      try {
        config.validate();
      } catch (const InvalidInputError& error) {
        throw UsageError(error.what());
      }
      const RunResult result = run(problem.default_start(), problem, config);
      row.push_back({result.iterations, result.converged});
    }
    table.cells.push_back(std::move(row));
  }
  return table;
}

void write_table_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "K";
  for (int order : table.orders) os << ",order_" << order;
  os << '\n';
  for (std::size_t r = 0; r < table.anisotropies.size(); ++r) {
    os << format_double(table.anisotropies[r]);
    for (std::size_t c = 0; c < table.orders.size(); ++c) os << ',' << table.cell_text(r, c);
    os << '\n';
  }
}

std::string format_table_text(const ConvergenceTable& table) {
  std::ostringstream os;
  os << std::setw(10) << "K";
  for (int order : table.orders) os << std::setw(12) << ("order " + std::to_string(order));
  os << '\n';
  for (std::size_t r = 0; r < table.anisotropies.size(); ++r) {
    os << std::setw(10) << format_double(table.anisotropies[r]);
    for (std::size_t c = 0; c < table.orders.size(); ++c) os << std::setw(12) << table.cell_text(r, c);
    os << '\n';
  }
  return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw UsageError("table CSV: bad " + what + " '" + text + "'");
  return value;
}

}  // namespace

ConvergenceTable read_table_csv(std::istream& is) {
  ConvergenceTable table;
  std::string line;
  if (!std::getline(is, line)) throw UsageError("table CSV: missing header");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "K") throw UsageError("table CSV: header must start with K");
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string prefix = "order_";
    if (header[c].rfind(prefix, 0) != 0) throw UsageError("table CSV: bad column '" + header[c] + "'");
    table.orders.push_back(parse_number<int>(header[c].substr(prefix.size()), "order"));
  }
  bool saw_cap = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw UsageError("table CSV: row width mismatch");
    table.anisotropies.push_back(parse_number<double>(fields[0], "K"));
    std::vector<TableCell> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string& text = fields[c];
      if (!text.empty() && text[0] == '>') {
        const int cap = parse_number<int>(text.substr(1), "censored cell");
        table.max_iterations = cap;
        saw_cap = true;
        row.push_back({cap, false});
      } else if (text.rfind("stalled@", 0) == 0) {
        row.push_back({parse_number<int>(text.substr(8), "stalled cell"), false});
      } else {
        row.push_back({parse_number<int>(text, "iteration count"), true});
      }
    }
    table.cells.push_back(std::move(row));
  }
  if (!saw_cap) table.max_iterations = OptimizerConfig{}.max_iterations;
  return table;
}

std::vector<PowerLawFit> fit_power_laws(const ConvergenceTable& table, double max_anisotropy) {
  std::vector<PowerLawFit> fits;
  for (std::size_t c = 0; c < table.orders.size(); ++c) {
    PowerLawFit fit;
    fit.order = table.orders[c];
    std::vector<std::pair<double, int>> usable;
    for (std::size_t r = 0; r < table.anisotropies.size(); ++r) {
      const TableCell& cell = table.at(r, c);
      fit.censored.push_back(cell.censored());
      if (cell.converged && cell.iterations > 0 && table.anisotropies[r] <= max_anisotropy) {
        usable.emplace_back(table.anisotropies[r], cell.iterations);
      }
    }
    std::sort(usable.begin(), usable.end());
    if (usable.size() >= kPowerLawPoints) {
      usable.erase(usable.begin(), usable.end() - static_cast<std::ptrdiff_t>(kPowerLawPoints));
      double mean_x = 0.0;
      double mean_y = 0.0;
      for (const auto& [k, iterations] : usable) {
        mean_x += std::log10(k);
        mean_y += std::log10(static_cast<double>(iterations));
      }
      mean_x /= static_cast<double>(usable.size());
      mean_y /= static_cast<double>(usable.size());
      double sxy = 0.0;
      double sxx = 0.0;
      for (const auto& [k, iterations] : usable) {
        const double dx = std::log10(k) - mean_x;
        sxy += dx * (std::log10(static_cast<double>(iterations)) - mean_y);
        sxx += dx * dx;
      }
      if (sxx > 0.0) {
        fit.exponent = sxy / sxx;
        fit.available = true;
      }
      for (const auto& [k, iterations] : usable) {
        fit.anisotropies.push_back(k);
        fit.iterations.push_back(iterations);
      }
    }
    fits.push_back(std::move(fit));
  }
  return fits;
}

std::string format_fits(const std::vector<PowerLawFit>& fits) {
  std::ostringstream os;
  os << "# least-squares slope of log10(iterations) vs log10(K), last " << kPowerLawPoints
     << " uncensored points with K <= " << format_double(kPowerLawMaxAnisotropy) << '\n';
  os << "order,exponent,points\n";
  for (const PowerLawFit& fit : fits) {
    os << fit.order << ',';
    if (fit.available) {
      std::ostringstream exponent;
      exponent << std::fixed << std::setprecision(3) << fit.exponent;
      os << exponent.str();
    } else {
      os << "unavailable";
    }
    os << ',';
    for (std::size_t i = 0; i < fit.anisotropies.size(); ++i) {
      if (i > 0) os << ' ';
      os << format_double(fit.anisotropies[i]) << ':' << fit.iterations[i];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hoc
