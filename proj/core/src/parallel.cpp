#include "graphrank/parallel.hpp"

#include <cstdlib>
#include <string>

namespace graphrank {

unsigned default_thread_count() {
  if (const char* env = std::getenv("GRAPH_RANK_THREADS"); env != nullptr && *env != '\0') {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace graphrank
