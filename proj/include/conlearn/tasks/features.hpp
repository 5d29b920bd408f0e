#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/random.hpp"
#include "conlearn/text.hpp"

namespace conlearn::tasks {

using Features = std::vector<double>;

inline Features gaussian(Rng& rng, std::size_t dim, double sigma = 1.0) {
  Features v(dim);
  for (auto& x : v) x = sigma * normal(rng);
  return v;
}

/// Space-separated shortest round-trip decimals.
inline std::string format_features(const Features& f) {
  return text::join(f, " ", [](double v) { return text::format_double(v); });
}

inline Features parse_features(std::string_view s, std::size_t expected_dim) {
  Features f;
  for (const auto& w : text::words(s)) f.push_back(text::parse_double(w));
  if (f.size() != expected_dim)
    throw InputError("expected " + std::to_string(expected_dim) + " features, got " + std::to_string(f.size()));
  return f;
}

}  // namespace conlearn::tasks
