#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "weylscope/version.hpp"

namespace weylscope::cli {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.12g", value);
  std::string text(buffer);
  if (text == "-0") text = "0";
  return text;
}

ojson json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  const double rounded = std::strtod(format_number(value).c_str(), nullptr);
  return rounded == 0.0 ? 0.0 : rounded;
}

Manifest::Manifest(std::string command, std::string model_source)
    : command_(std::move(command)),
      model_(std::move(model_source)),
      start_(std::chrono::steady_clock::now()) {}

ojson Manifest::to_json() const {
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  ojson out;
  out["command"] = command_;
  out["model"] = model_;
  out["parameters"] = parameters_;
  out["version"] = kVersion;
  out["wall_time_s"] = std::round(elapsed * 1e6) / 1e6;
  return out;
}

void CsvTable::write(std::ostream& out, const Manifest& manifest) const {
  out << "# manifest " << manifest.to_json().dump() << '\n';
  for (const auto& c : comments_) out << "# " << c << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n';
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

void write_json(std::ostream& out, ojson body, const Manifest& manifest) {
  ojson doc;
  doc["manifest"] = manifest.to_json();
  for (auto& [key, value] : body.items()) doc[key] = std::move(value);
  out << doc.dump(2) << '\n';
}

}  // namespace weylscope::cli
