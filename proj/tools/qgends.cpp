// qgends: command-line front end for the library.

#include "qgends/classify.hpp"
#include "qgends/ends.hpp"
#include "qgends/error.hpp"
#include "qgends/graphspec.hpp"
#include "qgends/metric_graph.hpp"
#include "qgends/radial_sl.hpp"
#include "qgends/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>

namespace {

using namespace qgends;

enum Exit { Ok = 0, Usage = 1, SpecError = 2, Unsupported = 3, Numeric = 4 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SchemaError:
    case ErrorKind::InvariantError:
    case ErrorKind::NonPositiveLength:
      return SpecError;
    case ErrorKind::UnsupportedFamily:
      return Unsupported;
    default:
      return Numeric;
  }
}

int report_error(std::string_view kind, const std::string& message, int code) {
  nlohmann::json e = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << e.dump() << '\n';
  return code;
}

struct Config {
  std::string spec_path;
  std::string format;
  std::string out;
  unsigned depth = 6;
  double k_max = 10.0;
  std::string bc = "dirichlet";
  double tolerance = 1e-12;
  double lambda = -1.0;
  std::size_t levels = 5;
  std::size_t generations = 11;
  unsigned radius = 12;
  bool dump_components = false;
};

GraphFamilySpec load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::SchemaError, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) fail(ErrorKind::InvariantError, "cannot write " + cfg.out);
  out << text;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void require_format(const Config& cfg, std::initializer_list<std::string_view> allowed) {
  for (auto f : allowed)
    if (cfg.format == f) return;
  throw CLI::ValidationError("--format", "format " + cfg.format + " is not available for this command");
}

std::string run_analyze(const Config& cfg) {
  require_format(cfg, {"json", "table"});
  const ClassificationReport report = classify(load(cfg.spec_path));
  return cfg.format == "table" ? to_table(report) : dump(to_json(report));
}

std::string run_ends(const Config& cfg) {
  const GraphFamilySpec spec = load(cfg.spec_path);
  if (cfg.dump_components) {
    require_format(cfg, {"csv", "json"});
    const auto levels = component_levels(spec, cfg.radius);
    if (cfg.format == "csv") return components_to_csv(levels);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& l : levels) rows.push_back({{"radius", l.radius}, {"count", l.count}, {"parent", l.parent}});
    return dump({{"schema", "qgends-components/1"}, {"levels", rows}});
  }
  require_format(cfg, {"json"});
  return dump(to_json(enumerate_ends(spec)));
}

std::string run_components(const Config& cfg) {
  Config c = cfg;
  c.dump_components = true;
  return run_ends(c);
}

std::string run_spectrum(const Config& cfg) {
  require_format(cfg, {"csv", "json"});
  const MetricGraph g = truncate(load(cfg.spec_path), cfg.depth);
  BoundaryConditions bc = kirchhoff_everywhere(g);
  if (cfg.bc == "dirichlet") bc = g.boundary_vertices().empty() ? dirichlet_on_leaves(g) : dirichlet_on_boundary(g);
  SpectrumOptions options;
  options.tolerance = cfg.tolerance;
  const auto spectrum = secular_eigenvalues(g, bc, cfg.k_max, options);
  if (cfg.format == "csv") return spectrum_csv(spectrum);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& ev : spectrum) rows.push_back({{"k", ev.k}, {"lambda", ev.lambda}, {"multiplicity", ev.multiplicity}});
  return dump({{"schema", "qgends-spectrum/1"},
               {"bc", cfg.bc},
               {"k_max", cfg.k_max},
               {"vertices", g.vertex_count()},
               {"edges", g.edge_count()},
               {"eigenvalues", rows}});
}

std::string run_witness(const Config& cfg) {
  require_format(cfg, {"csv", "json"});
  const WitnessReport report = witness_nonclosed(load(cfg.spec_path), cfg.lambda, cfg.levels);
  if (cfg.format == "csv") return witness_csv(report);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"level", r.level},
                    {"lambda", r.lambda},
                    {"sup_norm", r.sup_norm},
                    {"f2", r.f2},
                    {"grad2", r.grad2},
                    {"hf2", r.hf2},
                    {"ratio", r.ratio},
                    {"growth", r.growth},
                    {"boundary_value", r.boundary_value}});
  return dump({{"schema", "qgends-witness/1"}, {"subgraphs", report.subgraphs}, {"rows", rows}});
}

std::string run_tree_kernels(const Config& cfg) {
  require_format(cfg, {"csv", "json"});
  const GraphFamilySpec spec = load(cfg.spec_path);
  const auto* tree = std::get_if<RadialTreeSpec>(&spec.variant);
  if (!tree) fail(ErrorKind::UnsupportedFamily, "tree-kernels needs a RadialTree spec");
  const RadialTreeData data = RadialTreeData::build(*tree);
  const std::string csv = tree_kernels_csv(data, cfg.generations);
  if (cfg.format == "csv") return csv;
  return dump({{"weight", weight_breakpoints_json(data, cfg.generations)}, {"kernels_csv", csv}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplacians on infinite metric graphs"};
  app.require_subcommand(1);
  Config cfg;

  auto* analyze = app.add_subcommand("analyze", "verdicts, deficiency indices and rule trace");
  auto* ends = app.add_subcommand("ends", "end census");
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues of a truncation");
  auto* witness = app.add_subcommand("witness", "Sobolev ratio growth on tail subgraphs");
  auto* kernels = app.add_subcommand("tree-kernels", "kernel functions of a radial tree");
  auto* components = app.add_subcommand("components", "ball-complement component counts");

  for (auto* sub : {analyze, ends, spectrum, witness, kernels, components}) {
    sub->add_option("spec", cfg.spec_path, "graph family spec (JSON)")->required();
    sub->add_option("--format", cfg.format, "output format")->check(CLI::IsMember({"json", "csv", "table"}));
    sub->add_option("--out", cfg.out, "write to this file instead of stdout");
  }
  ends->add_flag("--dump-components", cfg.dump_components, "component counts per radius instead of the census");
  for (auto* sub : {ends, components})
    sub->add_option("--radius", cfg.radius, "largest ball radius")->check(CLI::Range(1u, 64u));
  spectrum->add_option("--bc", cfg.bc, "vertex condition at the cut")->check(CLI::IsMember({"dirichlet", "kirchhoff"}));
  spectrum->add_option("--kmax", cfg.k_max, "largest k = sqrt(lambda)")->check(CLI::PositiveNumber);
  spectrum->add_option("--depth", cfg.depth, "truncation depth")->check(CLI::Range(1u, 64u));
  spectrum->add_option("--tolerance", cfg.tolerance, "bisection width in k")->check(CLI::Range(1e-15, 1e-3));
  witness->add_option("--lambda", cfg.lambda, "negative spectral parameter");
  witness->add_option("--levels", cfg.levels, "number of tail subgraphs")->check(CLI::Range(1, 64));
  kernels->add_option("--generations", cfg.generations, "kernels g_0 .. g_{N-1}")->check(CLI::Range(1, 1000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Usage;
  }

  auto* sub = app.get_subcommands().front();
  if (cfg.format.empty()) cfg.format = (sub == analyze || sub == ends) && !cfg.dump_components ? "json" : "csv";
  try {
    std::string text;
    if (sub == analyze) text = run_analyze(cfg);
    if (sub == ends) text = run_ends(cfg);
    if (sub == spectrum) text = run_spectrum(cfg);
    if (sub == witness) text = run_witness(cfg);
    if (sub == kernels) text = run_tree_kernels(cfg);
    if (sub == components) text = run_components(cfg);
    emit(cfg, text);
  } catch (const CLI::ValidationError& e) {
    return report_error("UsageError", e.what(), Usage);
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), Numeric);
  }
  return Ok;
}
