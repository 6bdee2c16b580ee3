#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nqs/cli/json_io.hpp"

namespace nqs::cli {

struct TaskError {
  std::string kind;  // library error kind, e.g. "non_primitive"
  std::string message;

  bool operator==(const TaskError&) const = default;
};

struct TaskResult {
  std::string id;
  std::string kind;
  bool ok = true;
  Json inputs = Json::object();
  Json outputs = Json::object();
  Json flags = Json::object();
  std::optional<TaskError> error;
  std::optional<double> wall_time;  // seconds; only recorded on request

  bool operator==(const TaskResult&) const = default;
};

struct Report {
  std::string version;
  std::string scenario;
  std::vector<TaskResult> results;

  bool all_ok() const;
  bool operator==(const Report&) const = default;
};

enum class Format { machine, human };

/// Throws std::invalid_argument for names other than "machine" and "human".
Format parse_format(const std::string& name);

std::string emit_report(const Report& report, Format format);
/// Inverse of the machine format.
Report parse_report(const std::string& text);

}  // namespace nqs::cli
