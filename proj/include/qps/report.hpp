#pragma once

// Deterministic JSON reports. Exact rationals and field elements are strings.

#include <json.hpp>

#include "qps/document.hpp"
#include "qps/mutation.hpp"

namespace qps::report {

using nlohmann::json;

inline json shape(const SpeciesShape& s) {
  json algebras = json::array();
  std::set<std::string> seen;
  for (const auto& a : s.algebras()) {
    if (!seen.insert(a->label()).second) continue;
    algebras.push_back({{"name", a->label()}, {"dim", a->dim()}, {"basis", a->basis_labels()}});
  }
  json vertices = json::array();
  for (std::size_t v = 0; v < s.vertex_count(); ++v) vertices.push_back({{"index", v + 1}, {"algebra", s.algebra(v).label()}, {"dim", s.dim(v)}});
  json arrows = json::array();
  for (const auto& a : s.arrows()) arrows.push_back({{"label", a.label}, {"source", a.source + 1}, {"target", a.target + 1}});
  return {{"field", s.field().description()}, {"algebras", algebras}, {"vertices", vertices}, {"arrows", arrows}};
}

inline json matrix(const ExchangeMatrix& m) { return {{"b", m.b}, {"d", m.d}}; }

/// The exchange matrix, or null when the shape has 2-cycles.
inline json matrix_or_null(const SpeciesShape& s) {
  if (!s.two_cycles().empty()) return nullptr;
  return matrix(exchange_matrix(s));
}

inline json series(const Series& f) {
  const SpeciesShape& s = f.shape();
  json terms = json::array();
  for (const auto& [key, tail] : f.terms()) {
    json word = json::array();
    for (const auto& l : key.letters) {
      const Arrow& a = s.arrow(l.arrow);
      word.push_back({{"arrow", a.label}, {"basis", s.algebra(a.source).basis_labels()[l.basis]}});
    }
    const AlgebraPresentation& de = s.algebra(f.end_vertex(key));
    json t = json::object();
    for (std::size_t u = 0; u < de.dim(); ++u) {
      const FieldElement c = de.component(tail, u);
      if (!is_zero(c)) t[de.basis_labels()[u]] = s.field().format(c);
    }
    terms.push_back({{"start", key.vertex + 1}, {"word", word}, {"tail", t}});
  }
  return {{"text", format_series(f)}, {"truncation", f.truncation()}, {"terms", terms}};
}

inline json split(const Series& input, const SplitResult& r) {
  const SpeciesShape& s = *r.shape;
  json pairs = json::array();
  for (const auto& [a, b] : r.pairs) pairs.push_back({s.arrow(a).label, s.arrow(b).label});
  json log = json::array();
  for (const auto& e : r.log) {
    json images = json::object();
    for (const auto& [a, img] : e.images) images[s.arrow(a).label] = format_series(img);
    log.push_back({{"description", e.description}, {"images", images}});
  }
  return {{"pairs", pairs},
          {"rounds", r.rounds},
          {"log", log},
          {"trivial", format_series(r.trivial)},
          {"reduced", format_series(r.reduced)},
          {"replay_ok", check_replay(input, r)}};
}

inline json mutation(const Series& input, const MutationResult& m) {
  json out;
  out["command"] = "mutate";
  out["vertex"] = m.k + 1;
  out["input"] = {{"shape", shape(input.shape())}, {"matrix", matrix_or_null(input.shape())}, {"potential", series(input)}};
  out["premutation"] = {{"shape", shape(*m.premutation.shape)}, {"potential", series(m.premutation.potential)}};
  out["split"] = split(m.premutation.potential, m.split);
  out["output"] = {{"shape", shape(*m.shape)}, {"matrix", matrix_or_null(*m.shape)}, {"potential", series(m.potential)}};
  out["two_acyclic"] = m.two_acyclic;
  out["diagnostic"] = m.diagnostic;
  const json before = matrix_or_null(input.shape());
  if (m.two_acyclic && !before.is_null())
    out["matrix_check"] = exchange_matrix(*m.shape) == matrix_mutation(exchange_matrix(input.shape()), m.k);
  else
    out["matrix_check"] = nullptr;
  return out;
}

inline json jacobian(const Series& p, unsigned depth) {
  return {{"command", "jacobian"},
          {"depth", depth},
          {"dims", jacobian_graded_dims(p, depth)},
          {"free_dims", free_graded_dims(p.shape(), depth)}};
}

inline json generators(const Series& p) {
  json gens = json::array();
  const auto xs = jacobian_generators(p);
  for (std::size_t a = 0; a < xs.size(); ++a) gens.push_back({{"arrow", p.shape().arrow(a).label}, {"generator", series(xs[a])}});
  return {{"command", "generators"}, {"generators", gens}};
}

inline json reduction(const Series& p, const SplitResult& r) {
  json out = split(p, r);
  out["command"] = "reduce";
  out["output"] = {{"shape", shape(*r.reduced_shape)}, {"matrix", matrix_or_null(*r.reduced_shape)}, {"potential", series(r.reduced_potential)}};
  return out;
}

inline json involution(std::size_t k, unsigned depth, const InvolutionReport& r) {
  return {{"command", "check-involution"},
          {"vertex", k + 1},
          {"depth", depth},
          {"tier1", r.tier1},
          {"tier2", r.tier2},
          {"tier3", r.tier3 ? json(*r.tier3) : json(nullptr)},
          {"witness", r.witness},
          {"dims_before", r.dims_before},
          {"dims_after", r.dims_after},
          {"potential", series(r.potential)}};
}

inline json search(const std::vector<std::size_t>& sequence, const SearchReport& r) {
  json seq = json::array();
  for (auto k : sequence) seq.push_back(k + 1);
  return {{"command", "search-nondegenerate"},
          {"sequence", seq},
          {"found", r.found},
          {"trials_used", r.trials_used},
          {"seed", r.seed},
          {"degree_profile", r.degree_profile},
          {"potential", r.potential ? series(*r.potential) : json(nullptr)},
          {"last_failure", r.last_failure}};
}

inline json error(const std::string& command, const std::exception& e) {
  std::string kind = "engine";
  if (dynamic_cast<const ParseError*>(&e)) kind = "parse";
  else if (dynamic_cast<const PreconditionError*>(&e)) kind = "precondition";
  return {{"command", command}, {"error", {{"kind", kind}, {"message", e.what()}}}};
}

}  // namespace qps::report
