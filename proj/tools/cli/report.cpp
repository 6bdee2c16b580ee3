#include "nqs/cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace nqs::cli {

bool Report::all_ok() const {
  return std::all_of(results.begin(), results.end(), [](const TaskResult& r) { return r.ok; });
}

Format parse_format(const std::string& name) {
  if (name == "machine") return Format::machine;
  if (name == "human") return Format::human;
  throw std::invalid_argument("unsupported format '" + name + "' (expected machine or human)");
}

namespace {

Json to_document(const Report& report) {
  Json doc = Json::object();
  doc["version"] = report.version;
  doc["scenario"] = report.scenario;
  Json results = Json::object();
  for (const TaskResult& r : report.results) {
    Json item = Json::object();
    item["kind"] = r.kind;
    item["status"] = r.ok ? "ok" : "error";
    item["inputs"] = r.inputs;
    item["outputs"] = r.outputs;
    item["flags"] = r.flags;
    if (r.error) item["error"] = Json{{"kind", r.error->kind}, {"message", r.error->message}};
    if (r.wall_time) item["wall_time"] = *r.wall_time;
    results[r.id] = std::move(item);
  }
  doc["results"] = std::move(results);
  return doc;
}

std::string scalar_text(const Json& v) {
  if (v.is_number_float()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

bool is_flat_array(const Json& v) {
  return v.is_array() && std::none_of(v.begin(), v.end(), [](const Json& x) { return x.is_structured(); });
}

bool is_complex_entry(const Json& v) { return v.is_array() && v.size() == 2 && is_flat_array(v); }

std::string row_text(const Json& row) {
  std::string out = "[";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ", ";
    const Json& x = row[i];
    if (is_complex_entry(x)) {
      out += scalar_text(x[0]);
      const double im = x[1].is_number() ? x[1].get<double>() : 0.0;
      if (im != 0.0) out += (im < 0 ? "-" : "+") + scalar_text(Json(std::abs(im))) + "i";
    } else {
      out += scalar_text(x);
    }
  }
  return out + "]";
}

void flatten(const std::string& prefix, const Json& v, std::vector<std::pair<std::string, std::string>>& rows) {
  if (v.is_object()) {
    if (v.empty()) return;
    for (const auto& item : v.items()) flatten(prefix.empty() ? item.key() : prefix + "." + item.key(), item.value(), rows);
  } else if (is_flat_array(v)) {
    rows.emplace_back(prefix, row_text(v));
  } else if (v.is_array()) {
    const bool matrix = std::all_of(v.begin(), v.end(), [](const Json& r) {
      return r.is_array() && std::all_of(r.begin(), r.end(), [](const Json& x) { return !x.is_structured() || is_complex_entry(x); });
    });
    if (matrix) {
      for (std::size_t i = 0; i < v.size(); ++i) rows.emplace_back(i == 0 ? prefix : "", row_text(v[i]));
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) flatten(prefix + "[" + std::to_string(i) + "]", v[i], rows);
    }
  } else {
    rows.emplace_back(prefix, scalar_text(v));
  }
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string human(const Report& report) {
  std::string out = "scenario " + report.scenario + " (" + report.version + ")\n";
  std::size_t wid = 4, wkind = 4;
  for (const auto& r : report.results) {
    wid = std::max(wid, r.id.size());
    wkind = std::max(wkind, r.kind.size());
  }
  out += pad("task", wid) + "  " + pad("kind", wkind) + "  status\n";
  out += std::string(wid, '-') + "  " + std::string(wkind, '-') + "  ------\n";
  for (const auto& r : report.results) out += pad(r.id, wid) + "  " + pad(r.kind, wkind) + "  " + (r.ok ? "ok" : "error") + "\n";

  for (const auto& r : report.results) {
    out += "\n[" + r.id + "] " + r.kind + "\n";
    std::vector<std::pair<std::string, std::string>> rows;
    if (r.error) {
      rows.emplace_back("error", r.error->kind);
      rows.emplace_back("message", r.error->message);
    }
    flatten("", r.outputs, rows);
    for (const auto& item : r.flags.items()) flatten("flag." + item.key(), item.value(), rows);
    if (r.wall_time) rows.emplace_back("wall_time", scalar_text(Json(*r.wall_time)));
    std::size_t w = 0;
    for (const auto& [k, v] : rows) w = std::max(w, k.size());
    for (const auto& [k, v] : rows) out += "  " + pad(k, w) + "  " + v + "\n";
  }
  return out;
}

const Json& member(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) throw std::invalid_argument(std::string("report is missing '") + key + "'");
  return obj.at(key);
}

}  // namespace

std::string emit_report(const Report& report, Format format) {
  if (format == Format::human) return human(report);
  return to_document(report).dump(2, ' ', false, Json::error_handler_t::replace) + "\n";
}

Report parse_report(const std::string& text) {
  const Json doc = Json::parse(text);
  Report r;
  r.version = member(doc, "version").get<std::string>();
  r.scenario = member(doc, "scenario").get<std::string>();
  for (const auto& item : member(doc, "results").items()) {
    const Json& v = item.value();
    TaskResult t;
    t.id = item.key();
    t.kind = member(v, "kind").get<std::string>();
    t.ok = member(v, "status").get<std::string>() == "ok";
    t.inputs = member(v, "inputs");
    t.outputs = member(v, "outputs");
    t.flags = member(v, "flags");
    if (v.contains("error")) {
      t.error = TaskError{member(v["error"], "kind").get<std::string>(), member(v["error"], "message").get<std::string>()};
    }
    if (v.contains("wall_time")) t.wall_time = v["wall_time"].get<double>();
    r.results.push_back(std::move(t));
  }
  return r;
}

}  // namespace nqs::cli
