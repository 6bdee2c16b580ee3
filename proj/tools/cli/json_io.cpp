#include "nqs/cli/json_io.hpp"

#include <cmath>
#include <limits>

namespace nqs::cli {

std::string LoadError::describe() const {
  const char* what_kind = kind_ == LoadErrorKind::parse              ? "parse error"
                          : kind_ == LoadErrorKind::unsupported_task ? "unsupported task"
                                                                     : "validation error";
  std::string out = what_kind;
  if (!path_.empty()) out += " at " + path_;
  return out + ": " + what();
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({number(m(i, j).real()), number(m(i, j).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const RMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const RVector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

void Node::fail(const std::string& message) const {
  throw LoadError(LoadErrorKind::validation, path_.empty() ? "/" : path_, message);
}

bool Node::has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

Node Node::operator[](const std::string& key) const {
  expect_object();
  const auto it = value_->find(key);
  if (it == value_->end()) fail("missing required field '" + key + "'");
  return Node(*it, path_ + "/" + key);
}

Node Node::operator[](std::size_t index) const {
  if (!value_->is_array() || index >= value_->size()) fail("index out of range");
  return Node((*value_)[index], path_ + "/" + std::to_string(index));
}

std::size_t Node::size() const {
  if (!value_->is_array()) fail("expected an array");
  return value_->size();
}

void Node::expect_object() const {
  if (!value_->is_object()) fail("expected an object");
}

void Node::expect_array(std::size_t max_size) const {
  if (!value_->is_array()) fail("expected an array");
  if (value_->size() > max_size) fail("array longer than the limit of " + std::to_string(max_size));
}

void Node::only_keys(std::initializer_list<const char*> allowed) const {
  expect_object();
  for (const auto& item : value_->items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) fail("unknown field '" + item.key() + "'");
  }
}

std::string Node::string() const {
  if (!value_->is_string()) fail("expected a string");
  return value_->get<std::string>();
}

double Node::real() const {
  if (!value_->is_number()) fail("expected a number");
  const double x = value_->get<double>();
  if (!std::isfinite(x)) fail("number is not finite");
  return x;
}

double Node::positive() const {
  const double x = real();
  if (!(x > 0.0)) fail("expected a positive number");
  return x;
}

double Node::non_negative() const {
  const double x = real();
  if (x < 0.0) fail("expected a non-negative number");
  return x;
}

Index Node::integer(Index lo, Index hi) const {
  if (!value_->is_number_integer()) fail("expected an integer");
  if (value_->is_number_unsigned()) {
    const auto u = value_->get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(hi) || static_cast<Index>(u) < lo) {
      fail("integer outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    return static_cast<Index>(u);
  }
  const auto x = value_->get<std::int64_t>();
  if (x < lo || x > hi) fail("integer outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<Index>(x);
}

std::uint64_t Node::seed() const {
  if (!value_->is_number_integer()) fail("seed must be an integer");
  if (value_->is_number_unsigned()) return value_->get<std::uint64_t>();
  const auto x = value_->get<std::int64_t>();
  if (x < 0) fail("seed must be non-negative");
  return static_cast<std::uint64_t>(x);
}

bool Node::boolean() const {
  if (!value_->is_boolean()) fail("expected true or false");
  return value_->get<bool>();
}

RVector Node::real_vector(std::size_t max_size) const {
  expect_array(max_size);
  RVector v(static_cast<Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) v(static_cast<Index>(i)) = (*this)[i].real();
  return v;
}

RMatrix Node::real_matrix(Index max_rows) const {
  expect_array(static_cast<std::size_t>(max_rows));
  if (size() == 0) fail("matrix has no rows");
  const std::size_t cols = (*this)[0].size();
  if (cols == 0 || cols > static_cast<std::size_t>(max_rows)) fail("matrix row length out of range");
  RMatrix m(static_cast<Index>(size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < size(); ++i) {
    const Node row = (*this)[i];
    if (row.size() != cols) row.fail("ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = row[j].real();
  }
  return m;
}

CMatrix Node::complex_matrix(Index max_rows) const {
  expect_array(static_cast<std::size_t>(max_rows));
  if (size() == 0) fail("matrix has no rows");
  const std::size_t cols = (*this)[0].size();
  if (cols == 0 || cols > static_cast<std::size_t>(max_rows)) fail("matrix row length out of range");
  CMatrix m(static_cast<Index>(size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < size(); ++i) {
    const Node row = (*this)[i];
    if (row.size() != cols) row.fail("ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      const Node entry = row[j];
      Complex z;
      if (entry.value().is_array()) {
        if (entry.size() != 2) entry.fail("complex entries are [re, im] pairs");
        z = Complex(entry[0].real(), entry[1].real());
      } else {
        z = Complex(entry.real(), 0.0);
      }
      m(static_cast<Index>(i), static_cast<Index>(j)) = z;
    }
  }
  return m;
}

}  // namespace nqs::cli
