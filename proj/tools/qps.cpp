// Command-line front end: batch commands over an input document and the
// interactive JSON server.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qps/server.hpp"

namespace {

using json = nlohmann::json;
using namespace qps;

struct Globals {
  std::string input;
  std::optional<unsigned> truncate;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

std::string read_input(const std::string& path) {
  if (path.empty()) throw EngineError("no input document; pass --input FILE (or - for stdin)");
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw EngineError("cannot read " + path);
  ss << in.rdbuf();
  return ss.str();
}

InputDocument load(const Globals& g) {
  InputDocument doc = parse_document(read_input(g.input));
  if (g.truncate) {
    doc.truncation = *g.truncate;
    doc.potential = doc.potential.with_truncation(*g.truncate);
  }
  if (g.seed) doc.seed = *g.seed;
  return doc;
}

long long parse_integer(const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw EngineError("not an integer: '" + s + "'");
  return v;
}

std::vector<long long> parse_list(const std::string& text) {
  std::vector<long long> out;
  for (const auto& item : detail::split(text, ',')) out.push_back(parse_integer(detail::trim(item)));
  return out;
}

/// Rows separated by ';', entries by ','.
ExchangeMatrix parse_matrix(const std::string& b, const std::string& d) {
  ExchangeMatrix m;
  for (const auto& row : detail::split(b, ';')) m.b.push_back(parse_list(row));
  m.d = d.empty() ? std::vector<long long>(m.b.size(), 1) : parse_list(d);
  return m;
}

std::size_t vertex_index(long long k, std::size_t n) {
  if (k < 1 || static_cast<std::size_t>(k) > n) throw PreconditionError("vertex " + std::to_string(k) + " out of range 1.." + std::to_string(n));
  return static_cast<std::size_t>(k - 1);
}

std::string matrix_text(const SpeciesShape& s) {
  if (!s.is_two_acyclic()) return "undefined (2-cycles)\n";
  const ExchangeMatrix m = exchange_matrix(s);
  std::ostringstream out;
  for (const auto& row : m.b) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "  ") << row[j];
    out << "\n";
  }
  out << "  d =";
  for (auto x : m.d) out << " " << x;
  out << "\n";
  return out.str();
}

std::string dims_text(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? " " : "") + std::to_string(dims[i]);
  return out;
}

void emit(const Globals& g, const json& report, const std::string& text) {
  if (g.json)
    std::cout << report.dump(2) << "\n";
  else
    std::cout << text;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw EngineError("cannot write " + path);
  out << text;
}

SessionServer* running_server = nullptr;

extern "C" void on_signal(int) {
  if (running_server) running_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact computations with algebras with potential over species"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--input", g.input, "input document (- for stdin)");
  app.add_option("--truncate", g.truncate, "truncation degree N")->check(CLI::Range(1u, 64u));
  app.add_option("--seed", g.seed, "random seed");
  app.add_flag("--json", g.json, "emit a JSON report");

  auto* print = app.add_subcommand("print", "print the document after applying its history");

  auto* realize = app.add_subcommand("realize", "species realization of an exchange matrix");
  std::string matrix_arg, d_arg, potential_arg;
  std::optional<unsigned> order;
  std::vector<std::string> notes;
  realize->add_option("--matrix", matrix_arg, "B, rows separated by ';'")->required();
  realize->add_option("--d", d_arg, "skew-symmetrizer, comma separated");
  realize->add_option("--order", order, "root order of the radical towers");
  realize->add_option("--potential", potential_arg, "potential on the realized shape");
  realize->add_option("--note", notes, "note line");

  auto* jac = app.add_subcommand("jacobian", "graded dimensions of the Jacobian algebra");
  unsigned depth = 6;
  jac->add_option("--depth", depth, "largest degree")->check(CLI::Range(0u, 32u));

  auto* gens = app.add_subcommand("generators", "Jacobian generators X_a");

  auto* mut = app.add_subcommand("mutate", "mutate at the given vertices, in order");
  std::vector<long long> at;
  std::string save_path;
  mut->add_option("--at", at, "vertex (1-based); repeatable")->required();
  mut->add_option("--save", save_path, "write the session document (initial state plus history)");

  auto* red = app.add_subcommand("reduce", "split into trivial and reduced parts");

  auto* inv = app.add_subcommand("check-involution", "compare mu_k mu_k P with P");
  long long inv_at = 0;
  unsigned inv_depth = 6;
  inv->add_option("--at", inv_at, "vertex (1-based)")->required();
  inv->add_option("--depth", inv_depth, "Jacobian depth")->check(CLI::Range(0u, 32u));

  auto* search = app.add_subcommand("search-nondegenerate", "random search for a nondegenerate potential");
  std::string sequence_arg;
  std::size_t trials = 10000;
  search->add_option("--sequence", sequence_arg, "vertices, comma separated")->required();
  search->add_option("--trials", trials, "number of trials");

  auto* serve = app.add_subcommand("serve", "JSON API on 127.0.0.1 (port from QPS_PORT)");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (*realize) {
      const ExchangeMatrix m = parse_matrix(matrix_arg, d_arg);
      RealizeOptions opts;
      opts.order = order;
      auto shape = std::make_shared<const SpeciesShape>(realize_matrix(m, opts));
      const unsigned n = g.truncate.value_or(kDefaultTruncation);
      const Series p = potential_arg.empty() ? Series(shape, n) : parse_series(shape, n, potential_arg);
      InputDocument doc = make_document(shape, p);
      doc.seed = g.seed;
      doc.notes = notes;
      const std::string text = format_document(doc);
      emit(g,
           {{"command", "realize"},
            {"shape", report::shape(*shape)},
            {"matrix", report::matrix(exchange_matrix(*shape))},
            {"potential", report::series(p)},
            {"document", text}},
           text);
      return 0;
    }

    SessionState session(load(g));

    if (*print) {
      const auto cur = session.current();
      InputDocument doc = session.initial();
      doc.shape = cur.shape;
      doc.potential = cur.potential;
      emit(g, session.state_json(), format_document(doc));
    } else if (*jac) {
      const auto cur = session.current();
      const json r = report::jacobian(cur.potential, depth);
      emit(g, r, "dims " + dims_text(r["dims"].get<std::vector<std::size_t>>()) + "\nfree " + dims_text(r["free_dims"].get<std::vector<std::size_t>>()) + "\n");
    } else if (*gens) {
      const auto cur = session.current();
      const json r = report::generators(cur.potential);
      std::string text;
      for (const auto& x : r["generators"]) text += "X_" + x["arrow"].get<std::string>() + " = " + x["generator"]["text"].get<std::string>() + "\n";
      emit(g, r, text);
    } else if (*mut) {
      json steps = json::array();
      std::string text;
      for (auto k : at) {
        const auto before = session.current();
        const MutationResult m = session.mutate(vertex_index(k, before.shape->vertex_count()));
        steps.push_back(report::mutation(before.potential, m));
        text += "# mutation at " + std::to_string(k) + ": " + std::to_string(m.split.pairs.size()) + " trivial pairs, " +
                std::to_string(m.split.rounds) + " reduction rounds\n";
        if (!m.two_acyclic) text += "# " + m.diagnostic + "\n";
      }
      const auto cur = session.current();
      text += "# exchange matrix\n";
      std::istringstream mt(matrix_text(*cur.shape));
      for (std::string line; std::getline(mt, line);) text += "#" + line + "\n";
      text += format_document(make_document(cur.shape, cur.potential));
      if (!save_path.empty()) write_file(save_path, format_document(session.save()));
      emit(g, {{"command", "mutate-sequence"}, {"steps", steps}, {"state", session.state_json()}}, text);
    } else if (*red) {
      const auto cur = session.current();
      const SplitResult r = split_reduce(cur.potential);
      std::string text = "# trivial part: " + format_series(r.trivial) + "\n";
      text += format_document(make_document(r.reduced_shape, r.reduced_potential));
      emit(g, report::reduction(cur.potential, r), text);
    } else if (*inv) {
      const auto cur = session.current();
      const std::size_t k = vertex_index(inv_at, cur.shape->vertex_count());
      const InvolutionReport r = check_involution(cur.potential, k, inv_depth);
      std::string text = "tier1 dimension data: " + std::string(r.tier1 ? "equal" : "different") + "\n";
      text += "tier2 Jacobian dims to depth " + std::to_string(inv_depth) + ": " + (r.tier2 ? "equal" : "different") + "\n";
      text += "  before " + dims_text(r.dims_before) + "\n  after  " + dims_text(r.dims_after) + "\n";
      text += "tier3 witness: " + std::string(!r.tier3 ? "not attempted" : *r.tier3 ? r.witness : "not found") + "\n";
      text += "mu mu P = " + format_series(r.potential) + "\n";
      emit(g, report::involution(k, inv_depth, r), text);
    } else if (*search) {
      const auto cur = session.current();
      std::vector<std::size_t> seq;
      for (auto k : parse_list(sequence_arg)) seq.push_back(vertex_index(k, cur.shape->vertex_count()));
      const std::uint64_t seed = session.initial().seed.value_or(0);
      const SearchReport r = nondegenerate_search(cur.shape, seq, trials, seed);
      std::string text = r.found ? "found after " + std::to_string(r.trials_used) + " trials (seed " + std::to_string(seed) + ")\npotential = " +
                                       format_series(*r.potential) + "\n"
                                 : "not found in " + std::to_string(r.trials_used) + " trials (seed " + std::to_string(seed) + "): " + r.last_failure + "\n";
      emit(g, report::search(seq, r), text);
    } else if (*serve) {
      SessionServer server(session);
      const int port = server.bind(server_port_from_env());
      running_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving on http://127.0.0.1:" << port << "\n";
      server.run();
      running_server = nullptr;
    }
  } catch (const EngineError& e) {
    if (g.json) std::cout << report::error(command, e).dump(2) << "\n";
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
