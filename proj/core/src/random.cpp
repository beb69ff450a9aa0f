#include "graphrank/random.hpp"

#include <cstdlib>
#include <string>
#include <vector>

#include "graphrank/errors.hpp"

namespace graphrank {

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (ids.size() + 1));
  const auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (std::uint64_t id : ids) push(id);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::uint64_t seed_from_environment() {
  const char* env = std::getenv("GRAPH_RANK_SEED");
  if (env == nullptr || *env == '\0') return kDefaultSeed;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("GRAPH_RANK_SEED", "not an unsigned integer");
  }
}

}  // namespace graphrank
