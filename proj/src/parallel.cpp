#include "qtree/parallel.hpp"

#include <cstdlib>
#include <string>

namespace qtree {

int default_thread_count() {
  const char* env = std::getenv("QTREE_THREADS");
  if (env == nullptr) return 1;
  try {
    const int n = std::stoi(env);
    return n > 0 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace qtree
