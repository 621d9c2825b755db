#include "blowup/parallel.hpp"

#include <cstdlib>
#include <string>

namespace blowup {

int default_jobs()
{
    const char* env = std::getenv("BLOWUP_PROFILER_JOBS");
    if (env == nullptr) return 1;
    try {
        const int n = std::stoi(env);
        return n > 0 ? n : 1;
    } catch (...) {
        return 1;
    }
}

}  // namespace blowup
