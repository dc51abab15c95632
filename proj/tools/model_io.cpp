#include "model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "weylscope/errors.hpp"

namespace weylscope::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad_field(const std::string& pointer, const std::string& what) {
  throw ModelError("bad_field", pointer + ": " + what);
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::complex<double> parse_entry(const json& v, const std::string& pointer) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  bad_field(pointer, "expected a number or [re, im]");
}

double parse_parameter(const std::string& name, const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw UsageError("bad_model", "builtin " + name + ": cannot read parameter '" + text + "'");
  }
  return value;
}

std::string format_parameter(double t) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.12g", t);
  return buffer;
}

}  // namespace

TightBindingModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << "line " << line << ", column " << column << ": " << e.what();
    throw ModelError("parse_error", os.str());
  }
  if (!doc.is_object()) bad_field("/", "expected an object");
  if (!doc.contains("bands")) bad_field("/bands", "missing");
  if (!doc["bands"].is_number_integer()) bad_field("/bands", "expected an integer");
  const long long bands = doc["bands"].get<long long>();
  if (bands < 1 || bands > 4096) bad_field("/bands", "expected a positive band count");
  const auto m = static_cast<Eigen::Index>(bands);
  if (!doc.contains("terms")) bad_field("/terms", "missing");
  if (!doc["terms"].is_array()) bad_field("/terms", "expected an array");

  std::vector<HoppingTerm> terms;
  const auto& list = doc["terms"];
  for (std::size_t n = 0; n < list.size(); ++n) {
    const std::string base = "/terms/" + std::to_string(n);
    const auto& term = list[n];
    if (!term.is_object()) bad_field(base, "expected an object");
    if (!term.contains("r")) bad_field(base + "/r", "missing");
    const auto& r = term["r"];
    if (!r.is_array() || r.size() != 3) bad_field(base + "/r", "expected 3 integers");
    HoppingTerm h;
    for (int a = 0; a < 3; ++a) {
      if (!r[a].is_number_integer()) bad_field(base + "/r/" + std::to_string(a), "expected an integer");
      const long long v = r[a].get<long long>();
      if (std::llabs(v) > 1000) bad_field(base + "/r/" + std::to_string(a), "displacement too large");
      h.displacement.r[a] = static_cast<int>(v);
    }
    if (!term.contains("matrix")) bad_field(base + "/matrix", "missing");
    const auto& rows = term["matrix"];
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(m)) {
      bad_field(base + "/matrix", "expected " + std::to_string(m) + " rows");
    }
    h.amplitude = ComplexMatrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const std::string row_pointer = base + "/matrix/" + std::to_string(i);
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.size() != static_cast<std::size_t>(m)) {
        bad_field(row_pointer, "expected " + std::to_string(m) + " entries");
      }
      for (Eigen::Index j = 0; j < m; ++j) {
        h.amplitude(i, j) =
            parse_entry(row[static_cast<std::size_t>(j)], row_pointer + "/" + std::to_string(j));
      }
    }
    terms.push_back(std::move(h));
  }
  return build_model(static_cast<int>(m), terms);
}

LoadedModel load_model(const std::string& spec, std::optional<double> t) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  if (name == "minimal" || name == "two-pair") {
    double value = 0.0;
    if (colon != std::string::npos) {
      const std::string rest = spec.substr(colon + 1);
      if (rest.rfind("t=", 0) != 0) {
        throw UsageError("bad_model", "builtin " + name + " takes 't=<value>', got '" + rest + "'");
      }
      value = parse_parameter(name, rest.substr(2));
    }
    if (t) value = *t;
    return {name == "minimal" ? minimal_model(value) : two_pair_model(value),
            name + ":t=" + format_parameter(value), true};
  }
  if (spec == "sigma3") {
    if (t) throw UsageError("bad_flag", "--t does not apply to builtin sigma3");
    const std::vector<HoppingTerm> terms{{{{0, 0, 0}}, pauli_matrices()[2]}};
    return {build_model(2, terms), "sigma3", true};
  }
  if (t) throw UsageError("bad_flag", "--t applies only to builtin models");

  std::ifstream in(spec, std::ios::binary);
  if (!in) throw UsageError("io_error", "cannot open model file '" + spec + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return {parse_model(buffer.str()), spec, false};
}

nlohmann::ordered_json model_to_json(const TightBindingModel& model) {
  nlohmann::ordered_json out;
  out["bands"] = model.bands();
  out["terms"] = nlohmann::ordered_json::array();
  for (const auto& [r, amplitude] : model.terms()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < amplitude.rows(); ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (Eigen::Index j = 0; j < amplitude.cols(); ++j) {
        row.push_back({amplitude(i, j).real(), amplitude(i, j).imag()});
      }
      rows.push_back(std::move(row));
    }
    out["terms"].push_back({{"r", {r[0], r[1], r[2]}}, {"matrix", std::move(rows)}});
  }
  return out;
}

bool models_equal(const TightBindingModel& a, const TightBindingModel& b, double tolerance) {
  if (a.bands() != b.bands() || a.terms().size() != b.terms().size()) return false;
  for (const auto& [r, amplitude] : a.terms()) {
    const auto it = b.terms().find(r);
    if (it == b.terms().end()) return false;
    if ((it->second - amplitude).cwiseAbs().maxCoeff() > tolerance) return false;
  }
  return true;
}

}  // namespace weylscope::cli
