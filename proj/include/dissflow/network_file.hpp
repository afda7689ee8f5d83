#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "dissflow/network.hpp"
#include "dissflow/robust.hpp"
#include "dissflow/steady_solver.hpp"

namespace dissflow {

inline constexpr const char* kNetworkFormat = "dissflow-network";
inline constexpr int kNetworkFormatVersion = 1;

/// Everything a network file describes.
struct Problem {
  Network network;
  ScenarioBox box;
  CostModel cost;
  OperatingPoint seed;
  SearchConfig search;
  SolverOptions solver;
};

/// Malformed document. Syntax errors carry the 1-based line and column;
/// schema errors carry the JSON path of the offending value.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::string path, std::size_t line = 0, std::size_t column = 0);
  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::string path_;
  std::size_t line_;
  std::size_t column_;
};

/// Throws ParseError, or InvalidNetwork when the parsed graph fails
/// validate().
Problem parse_problem(const std::string& text);
Problem load_problem(const std::filesystem::path& path);

/// Canonical document for `problem`; parse_problem(export_problem(p)) is the
/// same model as p.
std::string export_problem(const Problem& problem);

/// Structural equality of two models (laws compared by value).
bool same_model(const Problem& a, const Problem& b);

}  // namespace dissflow
