#include "maxgrad/parallel.hpp"

#include <cstdlib>
#include <string>

namespace maxgrad::par {

int worker_count() {
    if (const char* env = std::getenv("MAXGRAD_WORKERS")) {
        try {
            int v = std::stoi(env);
            if (v < 1) v = 1;
            if (v > 256) v = 256;
            return v;
        } catch (...) {
            // fall through to hardware default on unparsable values
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace maxgrad::par
