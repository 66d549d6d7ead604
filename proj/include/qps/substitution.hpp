#pragma once

#include <map>
#include <vector>

#include "qps/series.hpp"

namespace qps {

/// An S-fixing algebra homomorphism F_S(M) -> F_S(M') given by the images of
/// the generators. Images must be legible (e_source phi(a) e_target) and have
/// no degree-0 part, so the map is continuous and preserves truncation.
class Substitution {
 public:
  Substitution(ShapePtr from, ShapePtr to, unsigned truncation, std::vector<Series> images)
      : from_(std::move(from)), to_(std::move(to)), truncation_(truncation), images_(std::move(images)) {
    if (images_.size() != from_->arrows().size()) throw EngineError("substitution needs one image per generator");
    if (from_->vertex_count() != to_->vertex_count()) throw EngineError("substitution between shapes with different vertex sets");
    for (std::size_t a = 0; a < images_.size(); ++a) {
      const Series& img = images_[a];
      if (img.shape_ptr().get() != to_.get() || img.truncation() != truncation_) throw EngineError("substitution image lives in the wrong algebra");
      const Arrow& arr = from_->arrow(a);
      for (const auto& [k, t] : img.terms()) {
        if (k.letters.empty()) throw EngineError("image of '" + arr.label + "' has a degree-0 part");
        if (k.vertex != arr.source || img.end_vertex(k) != arr.target) throw EngineError("image of '" + arr.label + "' is not legible");
      }
    }
  }

  static Substitution identity(const ShapePtr& shape, unsigned n) {
    std::vector<Series> images;
    for (std::size_t a = 0; a < shape->arrows().size(); ++a) images.push_back(Series::generator(shape, n, a));
    return Substitution(shape, shape, n, std::move(images));
  }

  const ShapePtr& from() const { return from_; }
  const ShapePtr& to() const { return to_; }
  const std::vector<Series>& images() const { return images_; }

  Series apply(const Series& f) const {
    if (f.shape_ptr().get() != from_.get()) throw EngineError("substitution applied to a series of another shape");
    std::map<Letter, Series> letter_images;
    std::map<PathKey, Series> prefix;
    Series out(to_, truncation_);
    for (const auto& [key, tail] : f.terms()) {
      const std::size_t end = f.end_vertex(key);
      Series w = Series::algebra_element(to_, truncation_, end, tail);
      if (!key.letters.empty()) w = image_of_word(key, letter_images, prefix) * w;
      out += w;
    }
    return out;
  }

 private:
  const Series& image_of_letter(const Letter& l, std::map<Letter, Series>& cache) const {
    auto it = cache.find(l);
    if (it != cache.end()) return it->second;
    const std::size_t src = from_->arrow(l.arrow).source;
    Series s = Series::algebra_element(to_, truncation_, src, to_->algebra(src).basis_element(l.basis)) * images_[l.arrow];
    return cache.emplace(l, std::move(s)).first->second;
  }

  const Series& image_of_word(const PathKey& key, std::map<Letter, Series>& letters, std::map<PathKey, Series>& prefix) const {
    auto it = prefix.find(key);
    if (it != prefix.end()) return it->second;
    Series img(to_, truncation_);
    if (key.degree() == 1) {
      img = image_of_letter(key.letters.front(), letters);
    } else {
      PathKey head{key.vertex, std::vector<Letter>(key.letters.begin(), key.letters.end() - 1)};
      img = image_of_word(head, letters, prefix) * image_of_letter(key.letters.back(), letters);
    }
    return prefix.emplace(key, std::move(img)).first->second;
  }

  ShapePtr from_;
  ShapePtr to_;
  unsigned truncation_;
  std::vector<Series> images_;
};

}  // namespace qps
