#include "sage/core.hpp"

#include <cmath>

namespace sage {

Dataset::Dataset(std::vector<Sample> samples) {
  samples_.reserve(samples.size());
  for (auto& s : samples) append(std::move(s));
}

std::size_t Dataset::append(Sample s) {
  if (!s.point.allFinite() || !std::isfinite(s.value))
    throw std::invalid_argument("dataset: sample has non-finite entries");
  if (!samples_.empty() && s.point.size() != dimension())
    throw std::invalid_argument("dataset: sample dimension mismatch");
  samples_.push_back(std::move(s));
  return samples_.size() - 1;
}

std::optional<PairGeometry> try_pair_geometry(const Vector& xi, const Vector& xj) {
  PairGeometry geo;
  geo.difference = xj - xi;
  geo.distance = geo.difference.norm();
  if (!(geo.distance > degeneracy_threshold(xi))) return std::nullopt;
  geo.direction = geo.difference / geo.distance;
  return geo;
}

PairGeometry pair_geometry(const Vector& xi, const Vector& xj) {
  auto geo = try_pair_geometry(xi, xj);
  if (!geo) throw DegeneratePair();
  return std::move(*geo);
}

double directional_slope(const Sample& si, const Sample& sj) {
  const double mu = pair_geometry(si.point, sj.point).distance;
  return (sj.value - si.value) / mu;
}

}  // namespace sage
