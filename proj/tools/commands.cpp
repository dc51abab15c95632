#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "model_io.hpp"
#include "output.hpp"
#include "weylscope/berry.hpp"
#include "weylscope/errors.hpp"
#include "weylscope/nodes.hpp"
#include "weylscope/parallel.hpp"
#include "weylscope/surface.hpp"
#include "weylscope/version.hpp"

namespace weylscope::cli {

namespace {

// ---- angle expressions -------------------------------------------------

class AngleParser {
 public:
  explicit AngleParser(const std::string& text) : text_(text) {}

  double parse() {
    const double value = expression();
    skip();
    if (pos_ != text_.size()) fail();
    if (!std::isfinite(value)) fail();
    return value;
  }

 private:
  [[noreturn]] void fail() const {
    throw UsageError("bad_angle", "cannot read angle expression '" + text_ + "'");
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool at_pi() {
    skip();
    return text_.compare(pos_, 2, "pi") == 0;
  }

  double expression() {
    double value = term();
    for (;;) {
      if (accept('+')) {
        value += term();
      } else if (accept('-')) {
        value -= term();
      } else {
        return value;
      }
    }
  }
  double term() {
    double value = unary();
    for (;;) {
      if (accept('*')) {
        value *= unary();
      } else if (accept('/')) {
        value /= unary();
      } else if (at_pi()) {
        value *= unary();
      } else {
        return value;
      }
    }
  }
  double unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return primary();
  }
  double primary() {
    skip();
    if (accept('(')) {
      const double value = expression();
      if (!accept(')')) fail();
      return value;
    }
    if (at_pi()) {
      pos_ += 2;
      return kPi;
    }
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin) fail();
    pos_ += static_cast<std::size_t>(end - begin);
    return value;
  }

  std::string text_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, separator)) parts.push_back(part);
  if (!text.empty() && text.back() == separator) parts.emplace_back();
  return parts;
}

std::vector<double> parse_angles(const std::string& text, std::size_t count,
                                 const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.size() != count) {
    throw UsageError("bad_" + what, what + " '" + text + "': expected " + std::to_string(count) +
                                        " comma-separated values");
  }
  std::vector<double> values;
  for (const auto& p : parts) values.push_back(parse_angle(p));
  return values;
}

// ---- shared options ----------------------------------------------------

enum class Format { csv, json };

struct Common {
  std::string model;
  std::optional<double> t;
  std::string out;
  bool json = false;
  bool csv = false;

  Format format(Format fallback) const {
    if (json) return Format::json;
    if (csv) return Format::csv;
    return fallback;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--model", c.model, "Model file or builtin (minimal:t=<v>, two-pair:t=<v>, sigma3)")
      ->required();
  cmd->add_option("--t", c.t, "Parameter of a builtin model");
  cmd->add_option("--out", c.out, "Write results to this file instead of stdout");
  auto* j = cmd->add_flag("--json", c.json, "JSON output");
  auto* v = cmd->add_flag("--csv", c.csv, "CSV output");
  j->excludes(v);
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw UsageError("io_error", "cannot write '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }
  void finish(const std::string& path) {
    out_->flush();
    if (!*out_) throw UsageError("io_error", "write failed for '" + (path.empty() ? "stdout" : path) + "'");
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

int default_band(const TightBindingModel& model, int given, const char* flag) {
  if (given > 0) return given;
  if (model.bands() % 2 != 0 || model.bands() < 2) {
    throw UsageError("bad_band", std::string("model has an odd band count; pass ") + flag);
  }
  return model.bands() / 2;
}

ojson node_json(const WeylNode& n) {
  ojson out;
  out["position"] = {json_number(n.position[0]), json_number(n.position[1]),
                     json_number(n.position[2])};
  out["chirality"] = n.chirality;
  out["nondegenerate"] = n.nondegenerate;
  out["residual"] = json_number(n.residual);
  out["jacobian_det"] = json_number(n.jacobian_det);
  return out;
}

NodeSet bulk_nodes(const TightBindingModel& model, int band, int grid) {
  FindNodesOptions options;
  options.grid = grid;
  return find_nodes(model, band, options);
}

const char* side_name(Side side) { return side == Side::top ? "top" : "bottom"; }

// ---- commands ----------------------------------------------------------

struct BandsArgs {
  Common common;
  std::string path = "0,0,0:0,0,pi";
  int samples = 201;
};

void cmd_bands(const BandsArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  if (a.samples < 2) throw UsageError("bad_samples", "--samples must be at least 2");
  std::vector<Vec3> vertices;
  for (const auto& v : split(a.path, ':')) {
    const auto xyz = parse_angles(v, 3, "path");
    vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  if (vertices.size() < 2) throw UsageError("bad_path", "--path needs at least two vertices");
  std::vector<double> cumulative{0.0};
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    cumulative.push_back(cumulative.back() + (vertices[i] - vertices[i - 1]).norm());
  }
  const double length = cumulative.back();
  if (!(length > 0.0)) throw UsageError("bad_path", "--path has zero length");

  Manifest manifest("bands", loaded.source);
  manifest.set("path", a.path);
  manifest.set("samples", a.samples);

  const int m = loaded.model.bands();
  std::vector<std::string> columns{"s", "k1", "k2", "k3"};
  for (int b = 1; b <= m; ++b) columns.push_back("lambda_" + std::to_string(b));

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(a.samples));
  parallel_for(rows.size(), [&](std::size_t j) {
    const double s = length * static_cast<double>(j) / (a.samples - 1);
    std::size_t seg = 1;
    while (seg + 1 < vertices.size() && cumulative[seg] < s) ++seg;
    const double span = cumulative[seg] - cumulative[seg - 1];
    const double f = span > 0.0 ? std::clamp((s - cumulative[seg - 1]) / span, 0.0, 1.0) : 0.0;
    const Quasimomentum k(Vec3(vertices[seg - 1] + f * (vertices[seg] - vertices[seg - 1])));
    const Eigen::VectorXd lambda = eigvalsh(bloch_matrix(loaded.model, k));
    auto& row = rows[j];
    row = {s, k[0], k[1], k[2]};
    for (int b = 0; b < m; ++b) row.push_back(lambda[b]);
  });

  if (a.common.format(Format::csv) == Format::csv) {
    CsvTable table(columns);
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      for (double v : r) cells.push_back(format_number(v));
      table.row(cells);
    }
    table.write(out, manifest);
  } else {
    ojson body;
    body["columns"] = columns;
    body["rows"] = ojson::array();
    for (const auto& r : rows) {
      ojson row = ojson::array();
      for (double v : r) row.push_back(json_number(v));
      body["rows"].push_back(std::move(row));
    }
    write_json(out, std::move(body), manifest);
  }
}

struct FindNodesArgs {
  Common common;
  int grid = 32;
  double gap_threshold = 0.5;
  int band = 0;
  double tolerance = 1e-8;
};

void cmd_find_nodes(const FindNodesArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  const int band = default_band(loaded.model, a.band, "--band");
  if (!(a.tolerance > 0.0)) throw UsageError("bad_tolerance", "--tolerance must be positive");
  FindNodesOptions options;
  options.grid = a.grid;
  options.gap_threshold = a.gap_threshold;
  options.refine.node_tolerance = a.tolerance;

  Manifest manifest("find-nodes", loaded.source);
  manifest.set("grid", a.grid);
  manifest.set("gap_threshold", json_number(a.gap_threshold));
  manifest.set("band", band);
  manifest.set("tolerance", json_number(a.tolerance));

  const NodeSet nodes = find_nodes(loaded.model, band, options);
  const CancellationCheck check = check_cancellation(nodes);

  if (a.common.format(Format::json) == Format::json) {
    ojson body;
    body["band"] = band;
    body["nodes"] = ojson::array();
    for (const auto& n : nodes.nodes) body["nodes"].push_back(node_json(n));
    body["total_charge"] = nodes.total_charge;
    body["balanced"] = check.balanced;
    body["degenerate_nodes"] = check.degenerate_nodes;
    write_json(out, std::move(body), manifest);
  } else {
    CsvTable table({"theta1", "theta2", "theta3", "chirality", "nondegenerate", "residual",
                    "jacobian_det"});
    table.comment("total_charge " + std::to_string(nodes.total_charge));
    for (const auto& n : nodes.nodes) {
      table.row({format_number(n.position[0]), format_number(n.position[1]),
                 format_number(n.position[2]), std::to_string(n.chirality),
                 n.nondegenerate ? "1" : "0", format_number(n.residual),
                 format_number(n.jacobian_det)});
    }
    table.write(out, manifest);
  }
}

struct ProfileArgs {
  Common common;
  int axis = 3;
  int slices = 16;
  int grid = 24;
  int rank = 0;
  int node_grid = 32;
  std::string string_out;
};

ojson string_json(const DiracString& s) {
  ojson out;
  out["axis"] = s.axis;
  out["segments"] = ojson::array();
  for (const auto& seg : s.segments) {
    out["segments"].push_back({{"start", json_number(seg.start_angle)},
                               {"end", json_number(seg.end_angle)},
                               {"multiplicity", seg.multiplicity},
                               {"full_circle", seg.full_circle}});
  }
  return out;
}

void cmd_chern_profile(const ProfileArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  if (a.axis < 1 || a.axis > 3) throw UsageError("bad_axis", "--axis must be 1, 2 or 3");
  const int rank = default_band(loaded.model, a.rank, "--rank");

  Manifest manifest("chern-profile", loaded.source);
  manifest.set("axis", a.axis);
  manifest.set("slices", a.slices);
  manifest.set("grid", a.grid);
  manifest.set("rank", rank);
  manifest.set("node_grid", a.node_grid);

  const NodeSet nodes = bulk_nodes(loaded.model, rank, a.node_grid);
  const ChernProfile profile = chern_profile(loaded.model, rank, a.axis, a.slices, a.grid, nodes);
  const DiracString string = dirac_string(profile, nodes);

  ojson projections = ojson::array();
  for (std::size_t i = 0; i < profile.node_projections.size(); ++i) {
    projections.push_back({{"angle", json_number(profile.node_projections[i])},
                           {"charge", profile.projection_charges[i]}});
  }

  if (!a.string_out.empty()) {
    std::ostringstream buffer;
    write_json(buffer, {{"dirac_string", string_json(string)}}, manifest);
    Sink sink(a.string_out, out);
    sink.stream() << buffer.str();
    sink.finish(a.string_out);
  }

  if (a.common.format(Format::csv) == Format::csv) {
    CsvTable table({"slice_angle", "chern"});
    for (std::size_t i = 0; i < profile.node_projections.size(); ++i) {
      table.comment("node_projection " + format_number(profile.node_projections[i]) + " " +
                    std::to_string(profile.projection_charges[i]));
    }
    if (a.string_out.empty()) table.comment("dirac_string " + string_json(string).dump());
    for (std::size_t i = 0; i < profile.slice_angles.size(); ++i) {
      table.row({format_number(profile.slice_angles[i]), std::to_string(profile.chern[i])});
    }
    table.write(out, manifest);
  } else {
    ojson body;
    body["axis"] = a.axis;
    body["profile"] = ojson::array();
    for (std::size_t i = 0; i < profile.slice_angles.size(); ++i) {
      body["profile"].push_back(
          {{"angle", json_number(profile.slice_angles[i])}, {"chern", profile.chern[i]}});
    }
    body["node_projections"] = std::move(projections);
    body["dirac_string"] = string_json(string);
    write_json(out, std::move(body), manifest);
  }
}

struct SlabArgs {
  int axis = 1;
  int depth = 40;
  int layers = 4;
  double energy = 0.0;
  int node_grid = 32;
};

void add_slab(CLI::App* cmd, SlabArgs& s) {
  cmd->add_option("--axis", s.axis, "Surface normal axis (1, 2 or 3)")->capture_default_str();
  cmd->add_option("--depth", s.depth, "Slab depth in layers")->capture_default_str();
  cmd->add_option("--layers", s.layers, "Layers counted as surface on each side")->capture_default_str();
  cmd->add_option("--energy", s.energy, "Fermi energy")->capture_default_str();
  cmd->add_option("--node-grid", s.node_grid, "Grid of the bulk node search")->capture_default_str();
}

void record_slab(Manifest& manifest, const SlabArgs& s) {
  manifest.set("axis", s.axis);
  manifest.set("depth", s.depth);
  manifest.set("layers", s.layers);
  manifest.set("energy", json_number(s.energy));
  manifest.set("node_grid", s.node_grid);
}

struct ArcArgs {
  Common common;
  SlabArgs slab;
  int grid = 64;
  double tolerance = 0.05;
};

void cmd_fermi_arc(const ArcArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  const SlabConfig config{a.slab.axis, a.slab.depth, a.slab.layers};
  validate(config, loaded.model);

  Manifest manifest("fermi-arc", loaded.source);
  record_slab(manifest, a.slab);
  manifest.set("grid", a.grid);
  manifest.set("tolerance", json_number(a.tolerance));

  const FermiArc arc = fermi_arc(loaded.model, config, a.grid, a.slab.energy, a.tolerance);
  std::vector<ProjectedNode> projected;
  if (loaded.model.bands() % 2 == 0) {
    projected = project_nodes(bulk_nodes(loaded.model, loaded.model.bands() / 2, a.slab.node_grid),
                              a.slab.axis);
  }
  std::vector<SurfaceMomentum> targets;
  for (const auto& p : projected) targets.push_back(p.k_par);
  const auto top = arc_endpoint_distances(arc, Side::top, targets);
  const auto bottom = arc_endpoint_distances(arc, Side::bottom, targets);

  if (a.common.format(Format::csv) == Format::csv) {
    CsvTable table({"side", "theta_a", "theta_b", "energy", "weight"});
    for (std::size_t i = 0; i < projected.size(); ++i) {
      table.comment("projected_node " + format_number(projected[i].k_par[0]) + " " +
                    format_number(projected[i].k_par[1]) + " charge " +
                    std::to_string(projected[i].charge) + " distance_top " +
                    format_number(top[i]) + " distance_bottom " + format_number(bottom[i]));
    }
    for (const auto& p : arc.points) {
      table.row({side_name(p.side), format_number(p.k_par[0]), format_number(p.k_par[1]),
                 format_number(p.energy), format_number(p.weight)});
    }
    table.write(out, manifest);
  } else {
    ojson body;
    body["energy"] = json_number(arc.energy);
    body["grid"] = arc.grid;
    body["projected_nodes"] = ojson::array();
    for (std::size_t i = 0; i < projected.size(); ++i) {
      body["projected_nodes"].push_back(
          {{"k_par", {json_number(projected[i].k_par[0]), json_number(projected[i].k_par[1])}},
           {"charge", projected[i].charge},
           {"distance_top", json_number(top[i])},
           {"distance_bottom", json_number(bottom[i])}});
    }
    body["points"] = ojson::array();
    for (const auto& p : arc.points) {
      body["points"].push_back({{"side", side_name(p.side)},
                                {"k_par", {json_number(p.k_par[0]), json_number(p.k_par[1])}},
                                {"energy", json_number(p.energy)},
                                {"weight", json_number(p.weight)}});
    }
    write_json(out, std::move(body), manifest);
  }
}

struct FlowArgs {
  Common common;
  SlabArgs slab;
  std::string loop;
  int steps = 200;
  double exclusion_radius = 0.15;
  bool reverse = false;
};

SurfaceLoop parse_loop(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw UsageError("bad_loop", "--loop must be circle:a,b,r, line:<1|2>,c or poly:a,b:a,b:...");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "circle") {
    const auto v = parse_angles(rest, 3, "loop");
    return circle_loop(v[0], v[1], v[2]);
  }
  if (kind == "line") {
    const auto v = parse_angles(rest, 2, "loop");
    if (v[0] != 1.0 && v[0] != 2.0) throw UsageError("bad_loop", "line direction must be 1 or 2");
    return line_loop(static_cast<int>(v[0]) - 1, v[1]);
  }
  if (kind == "poly") {
    SurfaceLoop loop;
    for (const auto& vertex : split(rest, ':')) {
      const auto v = parse_angles(vertex, 2, "loop");
      loop.vertices.push_back({v[0], v[1]});
    }
    return loop;
  }
  throw UsageError("bad_loop", "unknown loop kind '" + kind + "'");
}

void cmd_spectral_flow(const FlowArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  const SlabConfig config{a.slab.axis, a.slab.depth, a.slab.layers};
  validate(config, loaded.model);
  SurfaceLoop loop = parse_loop(a.loop);
  if (a.reverse) loop = reversed(loop);
  const int band = default_band(loaded.model, 0, "a model with an even band count");

  Manifest manifest("spectral-flow", loaded.source);
  record_slab(manifest, a.slab);
  manifest.set("loop", a.loop);
  manifest.set("reverse", a.reverse);
  manifest.set("steps", a.steps);
  manifest.set("exclusion_radius", json_number(a.exclusion_radius));

  SpectralFlowOptions options;
  options.energy = a.slab.energy;
  options.exclusion_radius = a.exclusion_radius;
  options.band_index = band;
  std::vector<SurfaceMomentum> projected;
  for (const auto& p :
       project_nodes(bulk_nodes(loaded.model, band, a.slab.node_grid), a.slab.axis)) {
    projected.push_back(p.k_par);
  }
  options.projected_nodes = projected;

  const SpectralFlowResult result = spectral_flow(loaded.model, config, loop, a.steps, options);
  const int torus = loop_torus_chern(loaded.model, a.slab.axis, loop, band);

  if (a.common.format(Format::json) == Format::json) {
    ojson body;
    ojson samples = ojson::array();
    for (const auto& k : result.loop) samples.push_back({json_number(k[0]), json_number(k[1])});
    body["loop"] = {{"spec", a.loop}, {"reverse", a.reverse}, {"samples", std::move(samples)}};
    body["flow"] = result.flow;
    body["bottom_flow"] = result.bottom_flow;
    body["crossings"] = ojson::array();
    for (const auto& c : result.crossings) {
      body["crossings"].push_back({{"parameter", json_number(c.parameter)},
                                   {"direction", c.direction},
                                   {"side", side_name(c.side)}});
    }
    body["window_half_width"] = json_number(result.window_half_width);
    body["refinements"] = result.refinements;
    body["torus_chern"] = torus;
    write_json(out, std::move(body), manifest);
  } else {
    CsvTable table({"parameter", "direction", "side"});
    table.comment("flow " + std::to_string(result.flow));
    table.comment("bottom_flow " + std::to_string(result.bottom_flow));
    table.comment("torus_chern " + std::to_string(torus));
    for (const auto& c : result.crossings) {
      table.row({format_number(c.parameter), std::to_string(c.direction), side_name(c.side)});
    }
    table.write(out, manifest);
  }
}

struct ValidateArgs {
  Common common;
};

void cmd_validate_model(const ValidateArgs& a, std::ostream& out) {
  const LoadedModel loaded = load_model(a.common.model, a.common.t);
  if (a.common.csv) throw UsageError("bad_format", "validate-model emits JSON only");
  Manifest manifest("validate-model", loaded.source);
  ojson body = model_to_json(loaded.model);
  body["summary"] = {{"valid", true},
                     {"bands", loaded.model.bands()},
                     {"range", loaded.model.range()},
                     {"stored_terms", loaded.model.terms().size()}};
  write_json(out, std::move(body), manifest);
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::model_invalid: return 3;
    case ErrorKind::numerical: return 4;
  }
  return 4;
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void apply_thread_limit() {
  const char* env = std::getenv("WEYLSCOPE_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long value = std::strtol(env, &end, 10);
  if (*end != '\0' || value < 0 || value > 4096) {
    throw UsageError("bad_threads", std::string("WEYLSCOPE_THREADS must be a non-negative integer, got '") +
                                        env + "'");
  }
  set_thread_limit(static_cast<unsigned>(value));
}

}  // namespace

double parse_angle(const std::string& text) { return AngleParser(text).parse(); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology of Weyl-semimetal tight-binding models", "weylscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  BandsArgs bands;
  auto* c_bands = app.add_subcommand("bands", "Eigenvalues along a polyline in k-space");
  add_common(c_bands, bands.common);
  c_bands->add_option("--path", bands.path, "Vertices k1,k2,k3 separated by ':' (pi allowed)")
      ->capture_default_str();
  c_bands->add_option("--samples", bands.samples, "Points along the whole path")->capture_default_str();

  FindNodesArgs nodes;
  auto* c_nodes = app.add_subcommand("find-nodes", "Weyl nodes with chiralities");
  add_common(c_nodes, nodes.common);
  c_nodes->add_option("--grid", nodes.grid, "Coarse scan grid per axis")->capture_default_str();
  c_nodes->add_option("--gap-threshold", nodes.gap_threshold, "Candidate gap threshold")
      ->capture_default_str();
  c_nodes->add_option("--band", nodes.band, "Lower band of the crossing (default bands/2)");
  c_nodes->add_option("--tolerance", nodes.tolerance, "Newton tolerance")->capture_default_str();

  ProfileArgs profile;
  auto* c_profile = app.add_subcommand("chern-profile", "Slice Chern numbers and Dirac string");
  add_common(c_profile, profile.common);
  c_profile->add_option("--axis", profile.axis, "Slicing axis (1, 2 or 3)")->capture_default_str();
  c_profile->add_option("--slices", profile.slices, "Number of slices")->capture_default_str();
  c_profile->add_option("--grid", profile.grid, "Plaquette grid per slice")->capture_default_str();
  c_profile->add_option("--rank", profile.rank, "Occupied bands (default bands/2)");
  c_profile->add_option("--node-grid", profile.node_grid, "Grid of the node search")
      ->capture_default_str();
  c_profile->add_option("--string-out", profile.string_out, "Write the Dirac string JSON here");

  ArcArgs arc;
  auto* c_arc = app.add_subcommand("fermi-arc", "Surface Fermi-arc points of a slab");
  add_common(c_arc, arc.common);
  add_slab(c_arc, arc.slab);
  c_arc->add_option("--grid", arc.grid, "Surface Brillouin-zone grid")->capture_default_str();
  c_arc->add_option("--tolerance", arc.tolerance, "Energy tolerance")->capture_default_str();

  FlowArgs flow;
  auto* c_flow = app.add_subcommand("spectral-flow", "Spectral flow of surface states along a loop");
  add_common(c_flow, flow.common);
  add_slab(c_flow, flow.slab);
  c_flow->add_option("--loop", flow.loop, "circle:a,b,r | line:<1|2>,c | poly:a,b:a,b:...")->required();
  c_flow->add_option("--steps", flow.steps, "Loop samples")->capture_default_str();
  c_flow->add_option("--exclusion-radius", flow.exclusion_radius, "Required distance to projected nodes")
      ->capture_default_str();
  c_flow->add_flag("--reverse", flow.reverse, "Traverse the loop backwards");

  ValidateArgs validate_args;
  auto* c_validate = app.add_subcommand("validate-model", "Check a model and re-emit it Hermitian-completed");
  add_common(c_validate, validate_args.common);

  try {
    std::vector<std::string> reversed_args(args.rbegin(), args.rend());
    app.parse(reversed_args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  // Output is buffered so that a failing command leaves no partial file.
  auto dispatch = [&](const Common& common, const std::function<void(std::ostream&)>& body) {
    std::ostringstream buffer;
    body(buffer);
    Sink sink(common.out, out);
    sink.stream() << buffer.str();
    sink.finish(common.out);
  };

  try {
    apply_thread_limit();
    if (c_bands->parsed()) {
      dispatch(bands.common, [&](std::ostream& o) { cmd_bands(bands, o); });
    } else if (c_nodes->parsed()) {
      dispatch(nodes.common, [&](std::ostream& o) { cmd_find_nodes(nodes, o); });
    } else if (c_profile->parsed()) {
      dispatch(profile.common, [&](std::ostream& o) { cmd_chern_profile(profile, o); });
    } else if (c_arc->parsed()) {
      dispatch(arc.common, [&](std::ostream& o) { cmd_fermi_arc(arc, o); });
    } else if (c_flow->parsed()) {
      dispatch(flow.common, [&](std::ostream& o) { cmd_spectral_flow(flow, o); });
    } else if (c_validate->parsed()) {
      dispatch(validate_args.common, [&](std::ostream& o) { cmd_validate_model(validate_args, o); });
    }
  } catch (const Error& e) {
    err << "error: " << e.code() << ": " << one_line(e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 4;
  }
  return 0;
}

}  // namespace weylscope::cli
