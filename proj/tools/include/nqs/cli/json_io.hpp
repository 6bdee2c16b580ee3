#pragma once

// Conversions between library values and the JSON surface. Complex
// matrices are arrays of rows whose entries are [re, im] pairs; bare real
// entries are accepted on input.

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "nqs/operator_core.hpp"

namespace nqs::cli {

using Json = nlohmann::ordered_json;

/// Why loading failed. Every kind maps to exit code 2.
enum class LoadErrorKind { parse, validation, unsupported_task };

class LoadError : public std::runtime_error {
public:
  LoadError(LoadErrorKind kind, std::string path, const std::string& message)
      : std::runtime_error(message), kind_(kind), path_(std::move(path)) {}

  LoadErrorKind kind() const noexcept { return kind_; }
  const std::string& path() const noexcept { return path_; }
  /// "validation error at /contexts/0/dim: ..."
  std::string describe() const;

private:
  LoadErrorKind kind_;
  std::string path_;
};

Json to_json(const CMatrix& m);
Json to_json(const RMatrix& m);
Json to_json(const RVector& v);
/// Non-finite values become the strings "nan", "inf" and "-inf" so that
/// reports stay valid JSON and round-trip.
Json number(double x);

/// Read-only view of a JSON value that remembers where it came from, so
/// every failure names the offending field ("/contexts/1/cartan").
class Node {
public:
  Node(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const Json& value() const noexcept { return *value_; }
  const std::string& path() const noexcept { return path_; }

  bool has(const std::string& key) const;
  Node operator[](const std::string& key) const;  // required member
  Node operator[](std::size_t index) const;
  std::size_t size() const;                        // array length

  void expect_object() const;
  void expect_array(std::size_t max_size) const;
  /// Rejects members outside `allowed`.
  void only_keys(std::initializer_list<const char*> allowed) const;

  std::string string() const;
  double real() const;             // finite
  double positive() const;         // finite and > 0
  double non_negative() const;     // finite and >= 0
  Index integer(Index lo, Index hi) const;
  std::uint64_t seed() const;
  bool boolean() const;
  RVector real_vector(std::size_t max_size = 4096) const;
  RMatrix real_matrix(Index max_rows) const;
  CMatrix complex_matrix(Index max_rows) const;

  [[noreturn]] void fail(const std::string& message) const;

private:
  const Json* value_;
  std::string path_;
};

}  // namespace nqs::cli
